//! Commutator closure of anti-Hermitian generator sets.
//!
//! Matrices are treated as vectors in the real space of anti-Hermitian
//! operators with inner product `Re tr(X† Y)`. The closure keeps an
//! orthonormal basis, processes commutator pairs FIFO and appends any
//! commutator whose residual against the current span is above
//! [`INDEPENDENCE_TOL`] (relative).

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::error::{check_dim, domain, Result};
use crate::operator::{OperatorMatrix, C64};

/// Relative residual above which a candidate counts as linearly independent.
pub const INDEPENDENCE_TOL: f64 = 1e-8;

/// Singular values below this mark the null space in Cartan extraction.
const NULL_SPACE_TOL: f64 = 1e-9;

/// Where a basis element came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Index into the generator list handed to [`closure`].
    Generator(usize),
    /// Commutator of two earlier basis elements.
    Commutator(usize, usize),
    /// Element of a plain span (see [`LieBasis::span_of`]).
    Input(usize),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Generator(k) => write!(f, "generator {k}"),
            Provenance::Commutator(i, j) => write!(f, "commutator({i},{j})"),
            Provenance::Input(k) => write!(f, "input {k}"),
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Real-orthonormal basis of anti-Hermitian matrices.
#[derive(Clone, Debug)]
pub struct LieBasis {
    dim_space: usize,
    elements: Vec<OperatorMatrix>,
    provenance: Vec<Provenance>,
    coords: Vec<Vec<f64>>,
}

impl LieBasis {
    fn empty(dim_space: usize) -> Self {
        Self {
            dim_space,
            elements: Vec::new(),
            provenance: Vec::new(),
            coords: Vec::new(),
        }
    }

    /// Orthonormal basis of the real span of `elements`, without closing
    /// under commutators.
    pub fn span_of(dim_space: usize, elements: &[OperatorMatrix]) -> Result<Self> {
        let mut basis = Self::empty(dim_space);
        for (k, m) in elements.iter().enumerate() {
            check_dim(dim_space, m.dim())?;
            if !m.is_anti_hermitian() {
                return Err(domain(format!("span element {k} is not anti-Hermitian")));
            }
            basis.try_extend(m, Provenance::Input(k), 0.0);
        }
        Ok(basis)
    }

    pub fn dim_space(&self) -> usize {
        self.dim_space
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[OperatorMatrix] {
        &self.elements
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Residual of `coords` after projection on the span, with one
    /// re-orthogonalization pass.
    fn residual(&self, coords: &[f64]) -> Vec<f64> {
        let mut r = coords.to_vec();
        for _ in 0..2 {
            for b in &self.coords {
                let proj: f64 = b.iter().zip(&r).map(|(x, y)| x * y).sum();
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= proj * bi;
                }
            }
        }
        r
    }

    /// Appends the normalized residual of `m` if it exceeds
    /// `INDEPENDENCE_TOL * max(‖m‖, scale)`.
    fn try_extend(&mut self, m: &OperatorMatrix, origin: Provenance, scale: f64) -> bool {
        let coords = m.real_coords();
        let norm = l2(&coords);
        if norm == 0.0 {
            return false;
        }
        let r = self.residual(&coords);
        let rn = l2(&r);
        if rn <= INDEPENDENCE_TOL * norm.max(scale) {
            return false;
        }
        let unit: Vec<f64> = r.iter().map(|x| x / rn).collect();
        self.elements
            .push(OperatorMatrix::from_real_coords(self.dim_space, &unit));
        self.coords.push(unit);
        self.provenance.push(origin);
        true
    }

    /// Norm of the component of `x` orthogonal to the span.
    pub fn residual_norm(&self, x: &OperatorMatrix) -> Result<f64> {
        check_dim(self.dim_space, x.dim())?;
        Ok(l2(&self.residual(&x.real_coords())))
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Result of [`closure`].
#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub algebra_dim: usize,
    pub basis: LieBasis,
    pub cartan_dim: usize,
    pub cartan_basis: Vec<OperatorMatrix>,
    pub label: String,
    /// The cap stopped the iteration before the pair queue drained.
    pub saturated: bool,
}

#[derive(Serialize)]
struct ClosureJson<'a> {
    dim: usize,
    cartan_dim: usize,
    label: &'a str,
    saturated: bool,
    provenance: &'a [Provenance],
    basis: &'a [OperatorMatrix],
}

impl Serialize for ClosureReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ClosureJson {
            dim: self.algebra_dim,
            cartan_dim: self.cartan_dim,
            label: &self.label,
            saturated: self.saturated,
            provenance: self.basis.provenance(),
            basis: self.basis.elements(),
        }
        .serialize(serializer)
    }
}

/// `XY - YX`.
pub fn commutator(x: &OperatorMatrix, y: &OperatorMatrix) -> Result<OperatorMatrix> {
    check_dim(x.dim(), y.dim())?;
    Ok(&(x * y) - &(y * x))
}

/// Informational name for an algebra of dimension `dim` on `n` levels.
pub fn algebra_label(n: usize, dim: usize) -> String {
    let sp = n * (n + 1) / 2;
    if n.is_multiple_of(2) && dim == sp {
        format!("sp({n})-compatible: dim = N(N+1)/2 = {dim}")
    } else if n > 1 && dim == n * n - 1 {
        format!("su({n}): dim = N^2-1 = {dim}")
    } else if dim == n * n {
        format!("u({n}): dim = N^2 = {dim}")
    } else {
        format!("dim = {dim}")
    }
}

/// Smallest real Lie algebra containing `generators`, stopping early once
/// the basis reaches `cap` elements.
pub fn closure(generators: &[OperatorMatrix], cap: usize) -> Result<ClosureReport> {
    let n = generators
        .first()
        .map(OperatorMatrix::dim)
        .ok_or_else(|| domain("closure needs at least one generator"))?;
    for (k, g) in generators.iter().enumerate() {
        check_dim(n, g.dim())?;
        if !g.is_anti_hermitian() {
            return Err(domain(format!("generator {k} is not anti-Hermitian")));
        }
    }

    let mut basis = LieBasis::empty(n);
    let mut saturated = false;
    for (k, g) in generators.iter().enumerate() {
        if basis.len() >= cap {
            saturated = true;
            break;
        }
        basis.try_extend(g, Provenance::Generator(k), 0.0);
    }

    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for j in 0..basis.len() {
        for i in 0..j {
            queue.push_back((i, j));
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        if basis.len() >= cap {
            saturated = true;
            break;
        }
        // Unit-norm operands: a commutator at rounding level is zero.
        let c = commutator(&basis.elements[i], &basis.elements[j])?;
        if basis.try_extend(&c, Provenance::Commutator(i, j), 1.0) {
            let new = basis.len() - 1;
            queue.extend((0..new).map(|m| (m, new)));
        }
    }
    let cartan_basis = cartan_diagonal_subalgebra(&basis);
    Ok(ClosureReport {
        algebra_dim: basis.len(),
        cartan_dim: cartan_basis.len(),
        label: algebra_label(n, basis.len()),
        cartan_basis,
        basis,
        saturated,
    })
}

/// True iff `x` lies in the span to within `1e-8 ‖x‖`.
pub fn contains(basis: &LieBasis, x: &OperatorMatrix) -> Result<bool> {
    let r = basis.residual_norm(x)?;
    Ok(r <= INDEPENDENCE_TOL * x.frobenius_norm())
}

/// Mutual containment of the two spans.
pub fn span_equal(a: &LieBasis, b: &LieBasis) -> Result<bool> {
    check_dim(a.dim_space, b.dim_space)?;
    for x in a.elements() {
        if !contains(b, x)? {
            return Ok(false);
        }
    }
    for x in b.elements() {
        if !contains(a, x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Orthonormal basis of `span(basis) ∩ {diagonal anti-Hermitian}`.
///
/// Solves for the coefficient vectors whose combination has vanishing
/// off-diagonal part (null space of the off-diagonal coordinate map).
pub fn cartan_diagonal_subalgebra(basis: &LieBasis) -> Vec<OperatorMatrix> {
    let n = basis.dim_space;
    let m = basis.len();
    if m == 0 {
        return Vec::new();
    }
    let off: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    // Pad so the SVD always returns a full set of right singular vectors.
    let rows = (2 * off.len()).max(m);
    let mut a = DMatrix::<f64>::zeros(rows, m);
    for (col, el) in basis.elements.iter().enumerate() {
        for (k, &(i, j)) in off.iter().enumerate() {
            let z = el.get(i, j);
            a[(2 * k, col)] = z.re;
            a[(2 * k + 1, col)] = z.im;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut diagonals = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > NULL_SPACE_TOL {
            continue;
        }
        let coeffs = v_t.row(k);
        let diag: Vec<C64> = (0..n)
            .map(|d| {
                let z: C64 = basis
                    .elements
                    .iter()
                    .zip(coeffs.iter())
                    .map(|(el, &c)| el.get(d, d) * c)
                    .sum();
                // Anti-Hermitian diagonal entries are purely imaginary.
                C64::new(0.0, z.im)
            })
            .collect();
        diagonals.push(OperatorMatrix::from_diagonal(&diag));
    }
    LieBasis::span_of(n, &diagonals)
        .map(|b| b.elements)
        .unwrap_or_default()
}
