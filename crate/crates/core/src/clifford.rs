//! Matrix representations of Euclidean Clifford algebras.
//!
//! Orthonormal vectors are realized as Kronecker products of Pauli matrices.
//! Dimensions 3 through 7 use fixed tables; the 5D and 7D tables carry their
//! signs exactly (e.g. `e4 = -σ2⊗1` in 5D) because the two-qubit transition
//! generators depend on them. Other dimensions use a Jordan–Wigner style chain.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::operator::{Hermiticity, OperatorMatrix, C64};

/// Tolerance on `e_i e_j + e_j e_i - 2δ_ij I`, entrywise.
pub const ANTICOMMUTATION_TOL: f64 = 1e-13;

/// A basis blade `e_{i1 i2 ... ig}` with strictly ascending 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BladeLabel {
    indices: Vec<usize>,
}

impl BladeLabel {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.contains(&0) {
            return Err(domain("blade indices are 1-based"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain(format!(
                "blade indices must be strictly ascending, got {indices:?}"
            )));
        }
        Ok(Self { indices })
    }

    pub fn scalar() -> Self {
        Self { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn grade(&self) -> usize {
        self.indices.len()
    }
}

impl fmt::Display for BladeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.indices.is_empty() {
            return f.write_str("1");
        }
        f.write_str("e")?;
        if self.indices.iter().all(|&i| i < 10) {
            for i in &self.indices {
                write!(f, "{i}")?;
            }
        } else {
            let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
            f.write_str(&parts.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for BladeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(Self::scalar());
        }
        let body = s
            .strip_prefix('e')
            .ok_or_else(|| Error::Parse(format!("blade label must start with 'e': {s:?}")))?;
        let indices = if body.is_empty() {
            Vec::new()
        } else if body.contains(',') {
            body.split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad blade index {p:?} in {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            body.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::Parse(format!("bad blade digit {c:?} in {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Self::new(indices).map_err(|e| Error::Parse(format!("{s:?}: {e}")))
    }
}

impl Serialize for BladeLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BladeLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `d` mutually anticommuting Hermitian involutions on `2^qubits` levels.
#[derive(Clone, Debug)]
pub struct CliffordFrame {
    euclid_dim: usize,
    qubits: usize,
    vectors: Vec<OperatorMatrix>,
}

impl CliffordFrame {
    pub fn euclid_dim(&self) -> usize {
        self.euclid_dim
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// Number of levels `N = 2^qubits`.
    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn vectors(&self) -> &[OperatorMatrix] {
        &self.vectors
    }

    /// The 1-based vector `e_index`.
    pub fn vector(&self, index: usize) -> Result<&OperatorMatrix> {
        if index == 0 || index > self.euclid_dim {
            return Err(domain(format!(
                "vector index {index} outside 1..={}",
                self.euclid_dim
            )));
        }
        Ok(&self.vectors[index - 1])
    }

    /// Matrix of the blade named by `label`, e.g. `"e24"`.
    pub fn blade(&self, label: &str) -> Result<OperatorMatrix> {
        blade_matrix(self, &label.parse()?)
    }

    /// The frame used for an `n`-qubit system when none is specified:
    /// Cℓ3 for one qubit, the 5D and 7D tables for two and three qubits,
    /// and the chain construction on `2n` vectors beyond that.
    pub fn default_for_qubits(qubits: usize) -> Result<Self> {
        let d = match qubits {
            0 => return Err(domain("at least one qubit is required")),
            1 => 3,
            2 => 5,
            3 => 7,
            n => 2 * n,
        };
        build_vector_basis(d, qubits)
    }
}

/// Qubit count a frame of Euclidean dimension `d` is built on.
pub fn required_qubits(euclid_dim: usize) -> usize {
    match euclid_dim {
        3 => 1,
        4 | 5 => 2,
        6 | 7 => 3,
        d => d.div_ceil(2),
    }
}

pub fn pauli(k: usize) -> OperatorMatrix {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = Complex::i();
    let rows = match k {
        0 => vec![vec![one, z], vec![z, one]],
        1 => vec![vec![z, one], vec![one, z]],
        2 => vec![vec![z, -i], vec![i, z]],
        3 => vec![vec![one, z], vec![z, -one]],
        _ => panic!("pauli index {k} outside 0..=3"),
    };
    OperatorMatrix::from_rows(&rows).expect("2x2 literal")
}

fn kron_all(factors: &[usize]) -> OperatorMatrix {
    factors
        .iter()
        .skip(1)
        .fold(pauli(factors[0]), |acc, &k| acc.kron(&pauli(k)))
}

fn table_vectors(euclid_dim: usize) -> Option<Vec<OperatorMatrix>> {
    let signed = |sign: f64, factors: &[usize]| kron_all(factors).scale(sign);
    let table: Vec<OperatorMatrix> = match euclid_dim {
        3 => vec![pauli(1), pauli(2), pauli(3)],
        4 | 5 => vec![
            signed(1.0, &[3, 1]),
            signed(1.0, &[3, 2]),
            signed(1.0, &[3, 3]),
            signed(-1.0, &[2, 0]),
            signed(-1.0, &[1, 0]),
        ],
        6 | 7 => vec![
            signed(1.0, &[0, 3, 1]),
            signed(1.0, &[0, 3, 2]),
            signed(1.0, &[0, 3, 3]),
            signed(1.0, &[0, 2, 0]),
            signed(1.0, &[3, 1, 0]),
            signed(1.0, &[1, 1, 0]),
            signed(1.0, &[2, 1, 0]),
        ],
        _ => return None,
    };
    Some(table.into_iter().take(euclid_dim).collect())
}

/// Chain construction: vectors `2k+1` and `2k+2` carry σ1 and σ2 on site `k`
/// with σ3 on every earlier site and identity on later ones.
fn chain_vectors(euclid_dim: usize, qubits: usize) -> Vec<OperatorMatrix> {
    (0..euclid_dim)
        .map(|v| {
            let site = v / 2;
            let factors: Vec<usize> = (0..qubits)
                .map(|s| match s.cmp(&site) {
                    std::cmp::Ordering::Less => 3,
                    std::cmp::Ordering::Equal => 1 + v % 2,
                    std::cmp::Ordering::Greater => 0,
                })
                .collect();
            kron_all(&factors)
        })
        .collect()
}

/// Builds `euclid_dim` orthonormal vectors on `qubits` qubits and checks the
/// defining anticommutation relations before returning.
pub fn build_vector_basis(euclid_dim: usize, qubits: usize) -> Result<CliffordFrame> {
    if euclid_dim < 1 {
        return Err(domain("Euclidean dimension must be at least 1"));
    }
    let needed = required_qubits(euclid_dim);
    if qubits != needed {
        return Err(Error::Configuration(format!(
            "a {euclid_dim}-dimensional frame is represented on {needed} qubit(s), not {qubits}"
        )));
    }
    let vectors = table_vectors(euclid_dim).unwrap_or_else(|| chain_vectors(euclid_dim, qubits));
    let frame = CliffordFrame {
        euclid_dim,
        qubits,
        vectors,
    };
    let worst = anticommutation_defect(&frame);
    if worst > ANTICOMMUTATION_TOL {
        return Err(Error::Configuration(format!(
            "frame violates anticommutation by {worst:e}"
        )));
    }
    Ok(frame)
}

/// Largest entrywise deviation of `e_i e_j + e_j e_i` from `2δ_ij I`.
pub fn anticommutation_defect(frame: &CliffordFrame) -> f64 {
    let n = frame.dim();
    let id2 = OperatorMatrix::identity(n).scale(2.0);
    let zero = OperatorMatrix::zeros(n);
    let mut worst = 0.0f64;
    for (i, a) in frame.vectors.iter().enumerate() {
        for (j, b) in frame.vectors.iter().enumerate().skip(i) {
            let s = &(a * b) + &(b * a);
            let expect = if i == j { &id2 } else { &zero };
            worst = worst.max(s.max_abs_diff(expect));
        }
    }
    worst
}

/// Product of the frame vectors in ascending index order; identity for the
/// scalar blade.
pub fn blade_matrix(frame: &CliffordFrame, blade: &BladeLabel) -> Result<OperatorMatrix> {
    let mut out = OperatorMatrix::identity(frame.dim());
    for &i in blade.indices() {
        out = &out * frame.vector(i)?;
    }
    Ok(out)
}

/// Hermitian iff `grade mod 4` is 0 or 1.
pub fn grade_hermiticity(grade: usize) -> Hermiticity {
    match grade % 4 {
        0 | 1 => Hermiticity::Hermitian,
        _ => Hermiticity::AntiHermitian,
    }
}

/// All `k`-subsets of `1..=n`, lexicographic.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (1..=k).collect();
    loop {
        out.push(idx.clone());
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == n - k + pos {
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
        idx[pos - 1] += 1;
        for p in pos..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

/// Every blade of the given grade, lexicographic in its indices.
pub fn blades_of_grade(euclid_dim: usize, grade: usize) -> Vec<BladeLabel> {
    if grade == 0 {
        return vec![BladeLabel::scalar()];
    }
    combinations(euclid_dim, grade)
        .into_iter()
        .map(|indices| BladeLabel { indices })
        .collect()
}

fn is_central(frame: &CliffordFrame, m: &OperatorMatrix) -> bool {
    frame
        .vectors
        .iter()
        .all(|v| (&(m * v) - &(v * m)).max_abs() <= 1e-12)
}

/// Blades of anti-Hermitian grade, ordered by grade then lexicographically.
/// The volume element is dropped when it is central, since it then only
/// contributes a global phase.
pub fn anti_hermitian_generating_blades(frame: &CliffordFrame) -> Vec<BladeLabel> {
    let d = frame.euclid_dim;
    let mut out = Vec::new();
    for grade in 2..=d {
        if grade_hermiticity(grade) != Hermiticity::AntiHermitian {
            continue;
        }
        for blade in blades_of_grade(d, grade) {
            if grade == d {
                let m = blade_matrix(frame, &blade).expect("indices within frame");
                if is_central(frame, &m) {
                    continue;
                }
            }
            out.push(blade);
        }
    }
    out
}

/// The pass-state projector: a single 1 in the upper-left corner.
pub fn reference_projector(qubits: usize) -> Result<OperatorMatrix> {
    if qubits < 1 {
        return Err(domain("projector needs at least one qubit"));
    }
    let n = 1usize << qubits;
    let mut diag = vec![C64::new(0.0, 0.0); n];
    diag[0] = C64::new(1.0, 0.0);
    Ok(OperatorMatrix::from_diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BladeLabel {
        s.parse().unwrap()
    }

    #[test]
    fn label_parsing_and_display() {
        assert_eq!(b("e12").indices(), &[1, 2]);
        assert_eq!(b("e245").grade(), 3);
        assert_eq!(b("e1,12").indices(), &[1, 12]);
        assert_eq!(b("e1,12").to_string(), "e1,12");
        assert_eq!(b("e135").to_string(), "e135");
        assert_eq!(b("1"), BladeLabel::scalar());
        assert_eq!(b("e").grade(), 0);
        assert!("e31".parse::<BladeLabel>().is_err());
        assert!("e11".parse::<BladeLabel>().is_err());
        assert!("e0".parse::<BladeLabel>().is_err());
        assert!("x12".parse::<BladeLabel>().is_err());
        assert!("e1,a".parse::<BladeLabel>().is_err());
        assert!(BladeLabel::new(vec![2, 1]).is_err());
    }

    #[test]
    fn single_qubit_frame_is_pauli() {
        let f = build_vector_basis(3, 1).unwrap();
        for k in 1..=3 {
            assert_eq!(f.vector(k).unwrap(), &pauli(k));
        }
    }

    #[test]
    fn five_dim_frame_matches_table_signs() {
        let f = build_vector_basis(5, 2).unwrap();
        assert_eq!(f.vector(1).unwrap(), &pauli(3).kron(&pauli(1)));
        assert_eq!(f.vector(3).unwrap(), &pauli(3).kron(&pauli(3)));
        assert_eq!(f.vector(4).unwrap(), &pauli(2).kron(&pauli(0)).scale(-1.0));
        assert_eq!(f.vector(5).unwrap(), &pauli(1).kron(&pauli(0)).scale(-1.0));
    }

    #[test]
    fn seven_dim_frame_matches_table() {
        let f = build_vector_basis(7, 3).unwrap();
        let e = |k| f.vector(k).unwrap().clone();
        assert_eq!(e(1), pauli(0).kron(&pauli(3)).kron(&pauli(1)));
        assert_eq!(e(4), pauli(0).kron(&pauli(2)).kron(&pauli(0)));
        assert_eq!(e(5), pauli(3).kron(&pauli(1)).kron(&pauli(0)));
        assert_eq!(e(7), pauli(2).kron(&pauli(1)).kron(&pauli(0)));
    }

    #[test]
    fn every_supported_dimension_anticommutes() {
        for d in 1..=12 {
            let f = build_vector_basis(d, required_qubits(d)).unwrap();
            assert_eq!(f.vectors().len(), d);
            assert!(anticommutation_defect(&f) <= ANTICOMMUTATION_TOL, "d={d}");
            for v in f.vectors() {
                assert!(v.is_hermitian());
                let sq = v * v;
                assert!(sq.max_abs_diff(&OperatorMatrix::identity(f.dim())) < 1e-15);
            }
        }
    }

    #[test]
    fn qubit_mismatch_and_zero_dim_are_rejected() {
        assert!(matches!(build_vector_basis(5, 3), Err(Error::Configuration(_))));
        assert!(matches!(build_vector_basis(3, 2), Err(Error::Configuration(_))));
        assert!(matches!(build_vector_basis(0, 1), Err(Error::Domain(_))));
        assert_eq!(required_qubits(8), 4);
        assert_eq!(required_qubits(9), 5);
    }

    #[test]
    fn bivector_e12_is_i_sigma3() {
        let f = build_vector_basis(3, 1).unwrap();
        let e12 = f.blade("e12").unwrap();
        assert_eq!(e12, pauli(3).scale_complex(Complex::i()));
        let e123 = f.blade("e123").unwrap();
        assert_eq!(e123, OperatorMatrix::identity(2).scale_complex(Complex::i()));
    }

    #[test]
    fn blade_e45_in_5d_is_the_product_of_table_entries() {
        let f = build_vector_basis(5, 2).unwrap();
        // (-σ2⊗1)(-σ1⊗1) = σ2σ1⊗1 = -iσ3⊗1, computed by hand.
        let expect = OperatorMatrix::from_diagonal(&[
            C64::new(0.0, -1.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 1.0),
        ]);
        assert_eq!(f.blade("e45").unwrap(), expect);
        assert_eq!(f.blade("1").unwrap(), OperatorMatrix::identity(4));
        assert!(f.blade("e16").is_err());
    }

    #[test]
    fn swapped_product_flips_sign() {
        let f = build_vector_basis(5, 2).unwrap();
        for i in 1..=5 {
            for j in (i + 1)..=5 {
                let ij = f.vector(i).unwrap() * f.vector(j).unwrap();
                let ji = f.vector(j).unwrap() * f.vector(i).unwrap();
                assert!(ij.max_abs_diff(&-&ji) < 1e-15);
            }
        }
    }

    #[test]
    fn grade_rule() {
        use Hermiticity::*;
        let expect = [Hermitian, Hermitian, AntiHermitian, AntiHermitian, Hermitian, Hermitian];
        for (g, h) in expect.iter().enumerate() {
            assert_eq!(grade_hermiticity(g), *h);
        }
        assert_eq!(grade_hermiticity(8), Hermitian);
        assert_eq!(grade_hermiticity(9), Hermitian);
        assert_eq!(grade_hermiticity(10), AntiHermitian);
    }

    #[test]
    fn blade_hermiticity_follows_grade() {
        for d in [3, 4, 5, 6, 7] {
            let f = build_vector_basis(d, required_qubits(d)).unwrap();
            for g in 0..=d {
                for blade in blades_of_grade(d, g) {
                    let m = blade_matrix(&f, &blade).unwrap();
                    assert_eq!(m.hermiticity(), grade_hermiticity(g), "{blade} in d={d}");
                }
            }
        }
    }

    #[test]
    fn generating_blade_counts() {
        let count = |d| {
            let f = build_vector_basis(d, required_qubits(d)).unwrap();
            anti_hermitian_generating_blades(&f)
        };
        let c3 = count(3);
        assert_eq!(c3, vec![b("e12"), b("e13"), b("e23")]);
        assert_eq!(count(4).len(), 10);
        assert_eq!(count(6).len(), 36);
        // 21 bivectors + 35 trivectors + 7 six-vectors; central e1234567 dropped.
        assert_eq!(count(7).len(), 63);
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]
        );
        assert_eq!(combinations(3, 3), vec![vec![1, 2, 3]]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn two_qubit_projector_from_bivectors() {
        let f = build_vector_basis(5, 2).unwrap();
        let one = OperatorMatrix::identity(4);
        let i = Complex::i();
        let left = &one - &f.blade("e12").unwrap().scale_complex(i);
        let right = &one + &f.blade("e45").unwrap().scale_complex(i);
        let p = (&left * &right).scale(0.25);
        let expect = reference_projector(2).unwrap();
        assert!(p.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn projector_properties() {
        for n in 1..=4 {
            let p = reference_projector(n).unwrap();
            assert!(p.is_hermitian());
            assert_eq!(&p * &p, p);
            assert_eq!(p.trace(), C64::new(1.0, 0.0));
        }
        let f = build_vector_basis(3, 1).unwrap();
        let p = reference_projector(1).unwrap();
        assert_eq!(f.vector(3).unwrap() * &p, p);
        assert!(reference_projector(0).is_err());
    }

    #[test]
    fn default_frames() {
        assert_eq!(CliffordFrame::default_for_qubits(1).unwrap().euclid_dim(), 3);
        assert_eq!(CliffordFrame::default_for_qubits(2).unwrap().euclid_dim(), 5);
        assert_eq!(CliffordFrame::default_for_qubits(3).unwrap().euclid_dim(), 7);
        let f4 = CliffordFrame::default_for_qubits(4).unwrap();
        assert_eq!((f4.euclid_dim(), f4.dim()), (8, 16));
    }
}
