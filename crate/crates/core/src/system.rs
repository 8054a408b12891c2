//! The controlled system `ẋ = (A + Σ uᵢ Bᵢ) x` with `A = -i H₀`.
//!
//! `H₀` is diagonal in the working basis. For symplectic control algebras it
//! must have levels placed symmetrically about their mean; index 0 carries the
//! highest level, so `H₀ = offset + diag(ω_{N/2}, …, ω₁, -ω₁, …, -ω_{N/2})`.

use std::path::Path;

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::clifford::{blade_matrix, grade_hermiticity, BladeLabel, CliffordFrame};
use crate::error::{check_dim, domain, Error, Result};
use crate::lie::{closure, contains, ClosureReport, LieBasis};
use crate::operator::{Hermiticity, OperatorMatrix, C64};

/// Default absolute tolerance on level mismatches in the symmetry test.
pub const SPECTRUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct NamedGenerator {
    pub name: String,
    pub matrix: OperatorMatrix,
}

impl NamedGenerator {
    pub fn new(name: impl Into<String>, matrix: OperatorMatrix) -> Self {
        Self {
            name: name.into(),
            matrix,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ControlSystem {
    free_hamiltonian: OperatorMatrix,
    drift: OperatorMatrix,
    couplings: Vec<NamedGenerator>,
    frame: Option<CliffordFrame>,
}

impl ControlSystem {
    /// `free_hamiltonian` must be Hermitian and diagonal; couplings
    /// anti-Hermitian with matching dimension and distinct names.
    pub fn new(
        free_hamiltonian: OperatorMatrix,
        couplings: Vec<NamedGenerator>,
        frame: Option<CliffordFrame>,
    ) -> Result<Self> {
        let n = free_hamiltonian.dim();
        if !n.is_multiple_of(2) {
            return Err(domain(format!("system must have an even number of levels, got {n}")));
        }
        if !free_hamiltonian.is_hermitian() {
            return Err(domain("free Hamiltonian is not Hermitian"));
        }
        if !free_hamiltonian.is_diagonal(crate::operator::HERMITICITY_TOL) {
            return Err(domain("free Hamiltonian must be diagonal in the working basis"));
        }
        if let Some(f) = &frame {
            check_dim(n, f.dim())?;
        }
        for (k, c) in couplings.iter().enumerate() {
            check_dim(n, c.matrix.dim())?;
            if !c.matrix.is_anti_hermitian() {
                return Err(domain(format!("coupling {:?} is not anti-Hermitian", c.name)));
            }
            if couplings[..k].iter().any(|o| o.name == c.name) {
                return Err(domain(format!("duplicate coupling name {:?}", c.name)));
            }
        }
        let drift = free_hamiltonian.scale_complex(C64::new(0.0, -1.0));
        Ok(Self {
            free_hamiltonian,
            drift,
            couplings,
            frame,
        })
    }

    pub fn levels(&self) -> usize {
        self.free_hamiltonian.dim()
    }

    pub fn free_hamiltonian(&self) -> &OperatorMatrix {
        &self.free_hamiltonian
    }

    /// `A = -i H₀`.
    pub fn drift(&self) -> &OperatorMatrix {
        &self.drift
    }

    pub fn couplings(&self) -> &[NamedGenerator] {
        &self.couplings
    }

    pub fn frame(&self) -> Option<&CliffordFrame> {
        self.frame.as_ref()
    }

    /// `A - (tr A / N) I`.
    pub fn traceless_drift(&self) -> OperatorMatrix {
        let n = self.levels();
        let shift = OperatorMatrix::identity(n).scale_complex(self.drift.trace() / n as f64);
        &self.drift - &shift
    }
}

/// `offset·I + diag(ω_{N/2}, …, ω₁, -ω₁, …, -ω_{N/2})` from frequencies given
/// in descending order.
pub fn build_free_hamiltonian(frequencies: &[f64], offset: f64) -> Result<OperatorMatrix> {
    build_free_hamiltonian_with(frequencies, offset, false)
}

/// As [`build_free_hamiltonian`]; `allow_degenerate` admits equal adjacent
/// frequencies.
pub fn build_free_hamiltonian_with(
    frequencies: &[f64],
    offset: f64,
    allow_degenerate: bool,
) -> Result<OperatorMatrix> {
    if frequencies.is_empty() {
        return Err(domain("at least one frequency is required"));
    }
    if !offset.is_finite() {
        return Err(domain("offset must be finite"));
    }
    if let Some(w) = frequencies.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(domain(format!("frequencies must be positive, got {w}")));
    }
    for w in frequencies.windows(2) {
        let ordered = if allow_degenerate { w[0] >= w[1] } else { w[0] > w[1] };
        if !ordered {
            return Err(domain(format!(
                "frequencies must be {}descending: {} then {}",
                if allow_degenerate { "" } else { "strictly " },
                w[0],
                w[1]
            )));
        }
    }
    let diag: Vec<C64> = frequencies
        .iter()
        .copied()
        .chain(frequencies.iter().rev().map(|w| -w))
        .map(|e| C64::new(e + offset, 0.0))
        .collect();
    Ok(OperatorMatrix::from_diagonal(&diag))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    /// Eigenvalues, descending.
    pub levels: Vec<f64>,
    pub offset: f64,
    pub symmetric: bool,
    pub tolerance: f64,
}

/// Checks whether the levels of `h` pair up as `offset ± δ`.
pub fn is_symmetric_spectrum(h: &OperatorMatrix, tol: f64) -> Result<SpectrumReport> {
    if !h.is_hermitian() {
        return Err(domain("spectrum test needs a Hermitian operator"));
    }
    let eig = SymmetricEigen::new(h.entries().clone());
    let mut levels: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    let offset = levels.iter().sum::<f64>() / levels.len() as f64;
    let shifted: Vec<f64> = levels.iter().map(|e| e - offset).collect();
    let symmetric = shifted
        .iter()
        .zip(shifted.iter().rev())
        .all(|(hi, lo)| (hi + lo).abs() <= tol);
    Ok(SpectrumReport {
        levels,
        offset,
        symmetric,
        tolerance: tol,
    })
}

/// Builds `A = -i H₀` from frequencies and couples the named blades.
pub fn assemble_control_system(
    frequencies: &[f64],
    offset: f64,
    coupling_blades: &[BladeLabel],
    frame: &CliffordFrame,
) -> Result<ControlSystem> {
    check_dim(frame.dim() / 2, frequencies.len())?;
    let h0 = build_free_hamiltonian(frequencies, offset)?;
    let couplings = blade_couplings(coupling_blades, frame)?;
    ControlSystem::new(h0, couplings, Some(frame.clone()))
}

fn blade_couplings(blades: &[BladeLabel], frame: &CliffordFrame) -> Result<Vec<NamedGenerator>> {
    blades
        .iter()
        .map(|b| {
            if grade_hermiticity(b.grade()) != Hermiticity::AntiHermitian {
                return Err(domain(format!(
                    "blade {b} has Hermitian grade {} and cannot couple",
                    b.grade()
                )));
            }
            Ok(NamedGenerator::new(b.to_string(), blade_matrix(frame, b)?))
        })
        .collect()
}

/// The explicit nearest-neighbour generators of the symplectic ladder.
///
/// `x{j}` is real antisymmetric on the transitions `j↔j+1` and its mirror
/// `N-2-j↔N-1-j`; `y{j}` is the imaginary symmetric partner. For `N = 4`
/// these are `-e13, e23` and `-(e15+e24)/2, (e14-e25)/2` in the 5D frame.
pub fn ladder_generators(levels: usize) -> Result<Vec<NamedGenerator>> {
    if levels < 2 || !levels.is_multiple_of(2) {
        return Err(domain(format!("ladder needs an even number of levels, got {levels}")));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for j in 0..levels / 2 {
        xs.push(NamedGenerator::new(format!("x{j}"), ladder_matrix(levels, j, false)));
        ys.push(NamedGenerator::new(format!("y{j}"), ladder_matrix(levels, j, true)));
    }
    xs.extend(ys);
    Ok(xs)
}

fn ladder_matrix(levels: usize, j: usize, imaginary: bool) -> OperatorMatrix {
    let mut m = nalgebra::DMatrix::<C64>::zeros(levels, levels);
    let mirror = levels - 2 - j;
    for a in [j, mirror] {
        if imaginary {
            m[(a, a + 1)] = Complex::i();
            m[(a + 1, a)] = Complex::i();
        } else {
            m[(a, a + 1)] = C64::new(1.0, 0.0);
            m[(a + 1, a)] = C64::new(-1.0, 0.0);
        }
    }
    OperatorMatrix::new(m).expect("finite square")
}

/// `z{j} = i(E_jj - E_mm)` with `m = N-1-j`: diagonal elements compatible
/// with the ladder's mirror symmetry.
pub fn mirror_diagonal_generators(levels: usize) -> Vec<NamedGenerator> {
    (0..levels / 2)
        .map(|j| {
            let mut d = vec![C64::new(0.0, 0.0); levels];
            d[j] = Complex::i();
            d[levels - 1 - j] = -Complex::i();
            NamedGenerator::new(format!("z{j}"), OperatorMatrix::from_diagonal(&d))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Algebra at least `N(N+1)/2`-dimensional with a symmetric drift inside
    /// its Cartan subalgebra.
    SpSufficient,
    /// Algebra large enough, but the drift violates the symmetry constraint.
    Inconsistent,
    NotControllable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::SpSufficient => "state-controllable (sp-sufficient)",
            Verdict::Inconsistent => "inconsistent: drift outside algebra",
            Verdict::NotControllable => "not controllable",
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ControllabilityReport {
    pub levels: usize,
    pub algebra_dim: usize,
    pub sp_dim: usize,
    pub su_dim: usize,
    pub meets_sp: bool,
    pub meets_su: bool,
    pub cartan_dim: usize,
    /// `H₀` lies in `span(I, Cartan)`.
    pub drift_in_cartan: bool,
    pub label: String,
    pub saturated: bool,
    pub spectrum: SpectrumReport,
    pub verdict: Verdict,
    #[serde(skip)]
    pub closure: Option<ClosureReport>,
}

pub fn controllability_verdict(system: &ControlSystem) -> Result<ControllabilityReport> {
    controllability_verdict_with_tol(system, SPECTRUM_TOL)
}

/// Closes `{A - (tr A/N) I} ∪ {Bᵢ}` and compares against `N(N+1)/2`.
pub fn controllability_verdict_with_tol(
    system: &ControlSystem,
    spectrum_tol: f64,
) -> Result<ControllabilityReport> {
    let n = system.levels();
    let traceless = system.traceless_drift();
    let mut generators = Vec::new();
    if traceless.max_abs() > 0.0 {
        generators.push(traceless.clone());
    }
    generators.extend(system.couplings().iter().map(|c| c.matrix.clone()));

    let report = if generators.is_empty() {
        None
    } else {
        Some(closure(&generators, n * n)?)
    };
    let (algebra_dim, cartan_dim, label, saturated) = match &report {
        Some(r) => (r.algebra_dim, r.cartan_dim, r.label.clone(), r.saturated),
        None => (0, 0, "dim = 0".to_string(), false),
    };
    let drift_in_cartan = match &report {
        Some(r) => contains(&LieBasis::span_of(n, &r.cartan_basis)?, &traceless)?,
        None => true,
    };
    let spectrum = is_symmetric_spectrum(system.free_hamiltonian(), spectrum_tol)?;

    let sp_dim = n * (n + 1) / 2;
    let su_dim = n * n - 1;
    let verdict = if algebra_dim < sp_dim {
        Verdict::NotControllable
    } else if spectrum.symmetric && drift_in_cartan {
        Verdict::SpSufficient
    } else {
        Verdict::Inconsistent
    };
    Ok(ControllabilityReport {
        levels: n,
        algebra_dim,
        sp_dim,
        su_dim,
        meets_sp: algebra_dim >= sp_dim,
        meets_su: algebra_dim >= su_dim,
        cartan_dim,
        drift_in_cartan,
        label,
        saturated,
        spectrum,
        verdict,
        closure: report,
    })
}

/// On-disk system description.
///
/// ```json
/// {"qubits": 2, "frequencies": [2.0, 1.0], "offset": 0.0,
///  "couplings": ["e13", "e24", "e35", "e12"]}
/// ```
///
/// Couplings starting with `e` are blades of the frame; `x{j}` / `y{j}` name
/// [`ladder_generators`]. `drift_diagonal` replaces `frequencies`/`offset`
/// with an explicit diagonal for `H₀`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    pub qubits: usize,
    #[serde(default)]
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub couplings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euclid_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_diagonal: Option<Vec<f64>>,
    #[serde(default)]
    pub allow_degenerate: bool,
}

impl SystemDescription {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("system description: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<ControlSystem> {
        if self.qubits == 0 || self.qubits > 10 {
            return Err(Error::Configuration(format!(
                "qubits must lie in 1..=10, got {}",
                self.qubits
            )));
        }
        let frame = match self.euclid_dim {
            Some(d) => crate::clifford::build_vector_basis(d, self.qubits)?,
            None => CliffordFrame::default_for_qubits(self.qubits)?,
        };
        let n = frame.dim();
        let h0 = match &self.drift_diagonal {
            Some(diag) => {
                if !self.frequencies.is_empty() {
                    return Err(Error::Configuration(
                        "give either frequencies or drift_diagonal, not both".into(),
                    ));
                }
                check_dim(n, diag.len())?;
                if diag.iter().any(|e| !e.is_finite()) {
                    return Err(domain("drift_diagonal entries must be finite"));
                }
                let d: Vec<C64> = diag.iter().map(|&e| C64::new(e, 0.0)).collect();
                OperatorMatrix::from_diagonal(&d)
            }
            None => {
                check_dim(n / 2, self.frequencies.len())?;
                build_free_hamiltonian_with(&self.frequencies, self.offset, self.allow_degenerate)?
            }
        };
        let ladder = if self.couplings.iter().any(|c| !c.starts_with('e')) {
            Some(ladder_generators(n)?)
        } else {
            None
        };
        let mut couplings = Vec::with_capacity(self.couplings.len());
        for name in &self.couplings {
            if name.starts_with('e') {
                let blade: BladeLabel = name.parse()?;
                couplings.extend(blade_couplings(std::slice::from_ref(&blade), &frame)?);
            } else {
                let g = ladder
                    .as_ref()
                    .and_then(|l| l.iter().find(|g| &g.name == name))
                    .ok_or_else(|| Error::Parse(format!("unknown coupling {name:?}")))?;
                couplings.push(g.clone());
            }
        }
        ControlSystem::new(h0, couplings, Some(frame))
    }
}
