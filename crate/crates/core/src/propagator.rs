//! Exact propagation under piecewise-constant controls.
//!
//! Exponentials of anti-Hermitian `X` go through the eigendecomposition of
//! the Hermitian `iX`, so every propagator is unitary to rounding.

use std::fmt::Write as _;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Error, Result};
use crate::json::fmt_f64;
use crate::lie::commutator;
use crate::operator::{OperatorMatrix, C64};
use crate::system::ControlSystem;

/// Unit-norm tolerance for [`StateVector`].
pub const NORM_TOL: f64 = 1e-12;

/// Tolerance on `‖a² + I‖`, `‖c² + I‖`, `‖ab + ba‖` and `‖ac + ca‖` in
/// [`rotation_factorization`].
pub const ROTATION_TOL: f64 = 1e-10;

/// A unit vector of amplitudes in the free-evolution eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        Self::from_dvector(v)
    }

    pub fn from_dvector(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(domain("state needs at least one amplitude"));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(domain(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm when the input norm is within `tol` of 1.
    pub fn normalized(amplitudes: Vec<C64>, tol: f64) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if v.is_empty() || !norm.is_finite() || (norm - 1.0).abs() > tol {
            return Err(domain(format!(
                "state norm {norm} is not within {tol:e} of 1"
            )));
        }
        Ok(Self { amplitudes: v / C64::new(norm, 0.0) })
    }

    /// The basis state `ψ_k`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(domain(format!("basis index {k} outside 0..{dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    /// Parses comma-separated `re:im` pairs, e.g. `0.6:0,0:0.8`.
    pub fn parse(text: &str, tol: f64) -> Result<Self> {
        let amps = text
            .split(',')
            .map(|pair| {
                let (re, im) = pair
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("amplitude {pair:?} is not re:im")))?;
                let p = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {s:?} in {pair:?}")))
                };
                Ok(C64::new(p(re)?, p(im)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::normalized(amps, tol)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn with_phase(&self, alpha: f64) -> Self {
        Self {
            amplitudes: &self.amplitudes * C64::from_polar(1.0, alpha),
        }
    }

    /// Applies a unitary; the result is renormalized only by the operator.
    pub fn evolve(&self, u: &OperatorMatrix) -> Result<Self> {
        Ok(Self {
            amplitudes: u.apply(&self.amplitudes)?,
        })
    }

    pub(crate) fn from_raw(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }
}

impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amplitudes.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        let amps = pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect();
        StateVector::normalized(amps, 1e-6).map_err(serde::de::Error::custom)
    }
}

/// `|⟨x, y⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(x: &StateVector, y: &StateVector) -> Result<f64> {
    Ok(x.inner(y)?.norm_sqr().clamp(0.0, 1.0))
}

/// Spectral form of an anti-Hermitian `X`: `iX = V Λ V†`, so
/// `exp(tX) = V exp(-itΛ) V†`.
#[derive(Clone, Debug)]
pub struct SpectralExp {
    pub(crate) vectors: DMatrix<C64>,
    pub(crate) vectors_adj: DMatrix<C64>,
    pub(crate) values: Vec<f64>,
}

impl SpectralExp {
    pub fn new(x: &OperatorMatrix) -> Result<Self> {
        if !x.is_anti_hermitian() {
            return Err(domain("matrix exponential needs an anti-Hermitian generator"));
        }
        let h = x.entries() * Complex::i();
        // Symmetrize away rounding so the solver sees an exactly Hermitian input.
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        Ok(Self {
            vectors_adj: eig.eigenvectors.adjoint(),
            vectors: eig.eigenvectors,
            values: eig.eigenvalues.iter().copied().collect(),
        })
    }

    pub fn matrix(&self, t: f64) -> OperatorMatrix {
        let phases = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| C64::from_polar(1.0, -l * t)),
        );
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * phases[j]
        });
        OperatorMatrix::new(scaled * &self.vectors_adj).expect("finite square")
    }

    /// `exp(tX) v` without forming the matrix.
    pub fn apply(&self, t: f64, v: &DVector<C64>) -> DVector<C64> {
        let mut w = &self.vectors_adj * v;
        for (wi, &l) in w.iter_mut().zip(&self.values) {
            *wi *= C64::from_polar(1.0, -l * t);
        }
        &self.vectors * w
    }
}

/// `exp(tX)` for anti-Hermitian `X`.
pub fn expm_antihermitian(x: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    Ok(SpectralExp::new(x)?.matrix(t))
}

/// `max |(U†U - I)_ij|`.
pub fn unitarity_defect(u: &OperatorMatrix) -> f64 {
    (&u.adjoint() * u).max_abs_diff(&OperatorMatrix::identity(u.dim()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlStep {
    pub duration: f64,
    pub amplitudes: Vec<f64>,
}

/// Step-function controls `uᵢ(t)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseControl {
    pub steps: Vec<ControlStep>,
}

impl PiecewiseControl {
    pub fn new(steps: Vec<ControlStep>) -> Self {
        Self { steps }
    }

    pub fn validate(&self, couplings: usize) -> Result<()> {
        for (k, s) in self.steps.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(domain(format!("step {k} has non-positive duration {}", s.duration)));
            }
            if s.amplitudes.len() != couplings {
                return Err(Error::Dimension {
                    expected: couplings,
                    found: s.amplitudes.len(),
                });
            }
            if s.amplitudes.iter().any(|u| !u.is_finite()) {
                return Err(domain(format!("step {k} has a non-finite amplitude")));
            }
        }
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self {
            steps: self.steps.iter().chain(&other.steps).cloned().collect(),
        }
    }
}

/// Sampled states with their times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Largest `|‖x(t)‖ - 1|` along the trajectory.
    pub fn norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `t,re_0,im_0,…` header, one row per sample.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, StateVector::dim);
        let mut out = String::from("t");
        for k in 0..n {
            let _ = write!(out, ",re_{k},im_{k}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&fmt_f64(*t));
            for z in s.amplitudes().iter() {
                let _ = write!(out, ",{},{}", fmt_f64(z.re), fmt_f64(z.im));
            }
            out.push('\n');
        }
        out
    }
}

/// `x ← exp(Δt (A + Σ uᵢ Bᵢ)) x` per step; samples the initial state and
/// every step endpoint.
pub fn evolve_piecewise(
    system: &ControlSystem,
    control: &PiecewiseControl,
    x0: &StateVector,
) -> Result<Trajectory> {
    evolve_piecewise_sampled(system, control, x0, 1)
}

/// As [`evolve_piecewise`] with `substeps` equally spaced samples per step.
pub fn evolve_piecewise_sampled(
    system: &ControlSystem,
    control: &PiecewiseControl,
    x0: &StateVector,
    substeps: usize,
) -> Result<Trajectory> {
    check_dim(system.levels(), x0.dim())?;
    control.validate(system.couplings().len())?;
    if substeps == 0 {
        return Err(domain("substeps must be positive"));
    }
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut t = 0.0;
    let mut x = x0.amplitudes().clone();
    for step in &control.steps {
        let mut g = system.drift().entries().clone();
        for (u, c) in step.amplitudes.iter().zip(system.couplings()) {
            g += c.matrix.entries() * C64::new(*u, 0.0);
        }
        let spectral = SpectralExp::new(&OperatorMatrix::new(g)?)?;
        let dt = step.duration / substeps as f64;
        for k in 1..=substeps {
            x = spectral.apply(dt, &x);
            times.push(if k == substeps { t + step.duration } else { t + dt * k as f64 });
            states.push(StateVector::from_raw(x.clone()));
        }
        t += step.duration;
    }
    Ok(Trajectory { times, states })
}

/// `exp(cφ/2) exp(aθ/2) exp(-cφ/2)`, valid for any anti-Hermitian `a`, `c`.
pub(crate) fn conjugated_rotation(
    a: &OperatorMatrix,
    c: Option<&OperatorMatrix>,
    theta: f64,
    phi: f64,
) -> Result<OperatorMatrix> {
    let core = expm_antihermitian(a, theta / 2.0)?;
    match c {
        Some(c) if phi != 0.0 => {
            let ec = SpectralExp::new(c)?;
            Ok(&(&ec.matrix(phi / 2.0) * &core) * &ec.matrix(-phi / 2.0))
        }
        _ => Ok(core),
    }
}

/// Rotation between the states linked by `a`, with relative phase set by
/// conjugation with `c`:
/// `exp(cφ/2) exp(aθ/2) exp(-cφ/2) = exp((a cos φ + b sin φ) θ/2)` where
/// `b = [c, a]/2`.
///
/// Requires `a² = c² = -I` and `a`, `c` anticommuting (hence `ab + ba = 0`).
pub fn rotation_factorization(
    a: &OperatorMatrix,
    c: &OperatorMatrix,
    theta: f64,
    phi: f64,
) -> Result<OperatorMatrix> {
    check_dim(a.dim(), c.dim())?;
    if !a.is_anti_hermitian() || !c.is_anti_hermitian() {
        return Err(domain("rotation generators must be anti-Hermitian"));
    }
    let minus_id = OperatorMatrix::identity(a.dim()).scale(-1.0);
    let b = commutator(c, a)?.scale(0.5);
    let a_sq = (a * a).max_abs_diff(&minus_id);
    let c_sq = (c * c).max_abs_diff(&minus_id);
    let ab = (&(a * &b) + &(&b * a)).max_abs();
    let ac = (&(a * c) + &(c * a)).max_abs();
    if a_sq > ROTATION_TOL || c_sq > ROTATION_TOL || ab > ROTATION_TOL || ac > ROTATION_TOL {
        return Err(domain(format!(
            "rotation preconditions violated: |a²+I|={a_sq:e} |c²+I|={c_sq:e} |ab+ba|={ab:e} |ac+ca|={ac:e}"
        )));
    }
    conjugated_rotation(a, Some(c), theta, phi)
}
