//! Pulse sequences that move arbitrary superpositions through a pivot state.
//!
//! A transfer `source → target` is the sequence taking `source` to the pivot
//! ray `ψ₀`, followed by the time reversal of the sequence taking `target`
//! there. Each step is a rotation `exp(cφ/2) exp(aθ/2) exp(-cφ/2)` about a
//! coupling `a` (with `c` its diagonal phase partner) or a pure phase step
//! `exp(hθ/2)` about a Cartan element `h`.
//!
//! One-qubit systems in the Pauli frame use the closed Euler-angle form. In
//! general the angles are found by coordinate ascent over a template of
//! blocks `[Cartan step, coupling rotation]`, growing the template one block
//! at a time and falling back to seeded random restarts of the full template.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{anti_hermitian_generating_blades, blade_matrix, CliffordFrame};
use crate::error::{check_dim, domain, Error, Result};
use crate::lie::{contains, LieBasis};
use crate::operator::{OperatorMatrix, C64};
use crate::propagator::{
    conjugated_rotation, fidelity, rotation_factorization, SpectralExp, StateVector,
};
use crate::system::{controllability_verdict, mirror_diagonal_generators, ControlSystem, Verdict};

/// Pivot basis index used by every synthesis routine.
pub const PIVOT: usize = 0;

/// Steps with smaller rotation angles are dropped from emitted sequences.
const ANGLE_FLOOR: f64 = 1e-12;

/// Coupling threshold for an edge of the transfer graph.
const EDGE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseStep {
    #[serde(rename = "gen")]
    pub generator: String,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub pivot: usize,
    #[serde(rename = "fidelity")]
    pub achieved_fidelity: f64,
    pub steps: Vec<PulseStep>,
}

impl PulseSequence {
    pub fn empty(achieved_fidelity: f64) -> Self {
        Self {
            pivot: PIVOT,
            achieved_fidelity,
            steps: Vec::new(),
        }
    }
}

/// Outcome of a synthesis run. Failure to reach the target is reported
/// here rather than as an error, with the best sequence found.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub sequence: PulseSequence,
    pub converged: bool,
    /// Random restarts consumed after the template-growth phase.
    pub restarts_used: usize,
}

#[derive(Clone, Debug)]
pub struct SynthConfig {
    /// Template length; `None` means `3N`.
    pub blocks: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    /// Accepted `1 - fidelity`.
    pub target_infidelity: f64,
    /// Sweep cap for the full-length template and each restart.
    pub max_sweeps: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            blocks: None,
            restarts: 20,
            seed: 0,
            target_infidelity: 1e-6,
            max_sweeps: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Coupling,
    Cartan,
    /// A coupling that is itself diagonal and also spans part of the Cartan set.
    Both,
}

#[derive(Clone, Debug)]
pub struct ControlGenerator {
    pub name: String,
    pub matrix: OperatorMatrix,
    pub role: Role,
    /// Index of the phase partner `c`, a unit-square Cartan element that
    /// anticommutes with this generator.
    pub partner: Option<usize>,
    unit_square: bool,
    spectral: SpectralExp,
}

impl ControlGenerator {
    fn new(name: String, matrix: OperatorMatrix, role: Role) -> Result<Self> {
        let minus_id = OperatorMatrix::identity(matrix.dim()).scale(-1.0);
        let unit_square = (&matrix * &matrix).max_abs_diff(&minus_id) <= 1e-10;
        let spectral = SpectralExp::new(&matrix)?;
        Ok(Self {
            name,
            matrix,
            role,
            partner: None,
            unit_square,
            spectral,
        })
    }

    /// Half-width of the angle interval covering one period of the
    /// fidelity: `2π` when `a² = -I`, otherwise `4π` (eigenphases ±1, 0).
    fn half_period(&self) -> f64 {
        if self.unit_square {
            PI
        } else {
            2.0 * PI
        }
    }
}

/// The generators a synthesized sequence may use: the couplings of a system
/// plus a basis of its diagonal Cartan subalgebra.
#[derive(Clone, Debug)]
pub struct ControlSet {
    levels: usize,
    generators: Vec<ControlGenerator>,
    couplings: Vec<usize>,
    cartan: Vec<usize>,
    frame: Option<CliffordFrame>,
}

impl ControlSet {
    /// Requires an sp-sufficient verdict and a connected transfer graph.
    pub fn for_system(system: &ControlSystem) -> Result<Self> {
        let n = system.levels();
        check_connected(system)?;
        let report = controllability_verdict(system)?;
        if report.verdict != Verdict::SpSufficient {
            return Err(domain(format!(
                "synthesis needs a state-controllable system, verdict was {:?} (dim {})",
                report.verdict.as_str(),
                report.algebra_dim
            )));
        }
        let closure = report.closure.expect("controllable systems have a closure");

        let mut generators = Vec::new();
        let mut couplings = Vec::new();
        for c in system.couplings() {
            couplings.push(generators.len());
            generators.push(ControlGenerator::new(c.name.clone(), c.matrix.clone(), Role::Coupling)?);
        }

        // Named diagonal candidates first, numerical basis as a fallback.
        let mut candidates: Vec<(String, OperatorMatrix)> = Vec::new();
        for c in system.couplings() {
            if c.matrix.is_diagonal(EDGE_TOL) {
                candidates.push((c.name.clone(), c.matrix.clone()));
            }
        }
        if let Some(frame) = system.frame() {
            for blade in anti_hermitian_generating_blades(frame) {
                let m = blade_matrix(frame, &blade)?;
                if m.is_diagonal(EDGE_TOL) {
                    candidates.push((blade.to_string(), m));
                }
            }
        }
        candidates.extend(mirror_diagonal_generators(n).into_iter().map(|g| (g.name, g.matrix)));
        candidates.extend(
            closure
                .cartan_basis
                .iter()
                .enumerate()
                .map(|(k, h)| (format!("h{k}"), h.clone())),
        );

        let mut chosen: Vec<OperatorMatrix> = Vec::new();
        let mut cartan = Vec::new();
        for (name, m) in candidates {
            if cartan.len() == closure.cartan_dim {
                break;
            }
            if !contains(&closure.basis, &m)? {
                continue;
            }
            if !chosen.is_empty() && contains(&LieBasis::span_of(n, &chosen)?, &m)? {
                continue;
            }
            chosen.push(m.clone());
            match generators.iter().position(|g| g.name == name) {
                Some(idx) => {
                    generators[idx].role = Role::Both;
                    cartan.push(idx);
                }
                None => {
                    cartan.push(generators.len());
                    generators.push(ControlGenerator::new(name, m, Role::Cartan)?);
                }
            }
        }

        for &ci in &couplings {
            if generators[ci].matrix.is_diagonal(EDGE_TOL) {
                continue;
            }
            let a = generators[ci].matrix.clone();
            generators[ci].partner = cartan.iter().copied().find(|&hi| {
                let h = &generators[hi];
                h.unit_square && (&(&a * &h.matrix) + &(&h.matrix * &a)).max_abs() <= 1e-10
            });
        }

        Ok(Self {
            levels: n,
            generators,
            couplings,
            cartan,
            frame: system.frame().cloned(),
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn generators(&self) -> &[ControlGenerator] {
        &self.generators
    }

    pub fn coupling_names(&self) -> Vec<&str> {
        self.couplings.iter().map(|&i| self.generators[i].name.as_str()).collect()
    }

    pub fn cartan_names(&self) -> Vec<&str> {
        self.cartan.iter().map(|&i| self.generators[i].name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&ControlGenerator> {
        self.generators.iter().find(|g| g.name == name)
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| domain(format!("generator {name:?} is not part of the control set")))
    }

    /// Unitary of one step, built from fresh matrix exponentials.
    pub fn step_unitary(&self, step: &PulseStep) -> Result<OperatorMatrix> {
        let g = &self.generators[self.index_of(&step.generator)?];
        let partner = g.partner.map(|p| &self.generators[p].matrix);
        if partner.is_none() && step.phi != 0.0 {
            return Err(domain(format!(
                "step on {:?} has a phase angle but no phase partner",
                step.generator
            )));
        }
        conjugated_rotation(&g.matrix, partner, step.theta, step.phi)
    }

    /// Applies `steps` to `source` in order.
    pub fn replay(&self, steps: &[PulseStep], source: &StateVector) -> Result<StateVector> {
        check_dim(self.levels, source.dim())?;
        let mut x = source.clone();
        for step in steps {
            x = x.evolve(&self.step_unitary(step)?)?;
        }
        Ok(x)
    }
}

/// Every level must be reachable from the pivot through nonzero coupling
/// entries.
pub fn check_connected(system: &ControlSystem) -> Result<()> {
    let n = system.levels();
    let mut seen = vec![false; n];
    let mut stack = vec![PIVOT];
    seen[PIVOT] = true;
    while let Some(j) = stack.pop() {
        for (k, flag) in seen.iter_mut().enumerate() {
            if !*flag && system.couplings().iter().any(|c| c.matrix.get(j, k).norm() > EDGE_TOL) {
                *flag = true;
                stack.push(k);
            }
        }
    }
    let missing: Vec<usize> = (0..n).filter(|&k| !seen[k]).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Connectivity(format!(
            "levels {missing:?} are not reachable from level {PIVOT}"
        )))
    }
}

/// Grid for canonical amplitudes. Two phases of the same ray agree to a few
/// ulps after rotation; snapping to this grid makes them bit-identical, so the
/// optimizer takes the same path for both.
const CANONICAL_GRID: f64 = 68_719_476_736.0; // 2^36

/// Removes the global phase: the largest amplitude (first on ties) becomes
/// real and positive.
fn canonical_phase(x: &StateVector) -> StateVector {
    let amps = x.amplitudes();
    let top = amps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = amps
        .iter()
        .find(|z| z.norm() >= top * (1.0 - 1e-9))
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let snap = |v: f64| (v * CANONICAL_GRID).round() / CANONICAL_GRID;
    let rotated = x.with_phase(-lead.arg());
    StateVector::from_raw(rotated.amplitudes().map(|z| C64::new(snap(z.re), snap(z.im))))
}

#[derive(Clone, Debug)]
struct Slot {
    gen: usize,
    theta: f64,
    phi: f64,
}

/// Coordinate-ascent state for one template.
struct Ascent<'a> {
    set: &'a ControlSet,
    source: DVector<C64>,
    target: DVector<C64>,
    slots: Vec<Slot>,
}

impl<'a> Ascent<'a> {
    fn apply(&self, slot: &Slot, v: &DVector<C64>, inverse: bool) -> DVector<C64> {
        let g = &self.set.generators[slot.gen];
        let theta = if inverse { -slot.theta } else { slot.theta };
        match g.partner {
            Some(p) if slot.phi != 0.0 => {
                let c = &self.set.generators[p].spectral;
                let v = c.apply(-slot.phi / 2.0, v);
                let v = g.spectral.apply(theta / 2.0, &v);
                c.apply(slot.phi / 2.0, &v)
            }
            _ => g.spectral.apply(theta / 2.0, v),
        }
    }

    fn fidelity(&self) -> f64 {
        let mut v = self.source.clone();
        for s in &self.slots {
            v = self.apply(s, &v, false);
        }
        self.target.dotc(&v).norm_sqr()
    }

    /// One pass over every angle; returns the fidelity afterwards.
    fn sweep(&mut self) -> f64 {
        let count = self.slots.len();
        if count == 0 {
            return self.fidelity();
        }
        let mut bras = vec![self.target.clone(); count];
        for s in (0..count - 1).rev() {
            bras[s] = self.apply(&self.slots[s + 1], &bras[s + 1], true);
        }
        let mut v = self.source.clone();
        for (s, bra) in bras.iter().enumerate() {
            self.optimize_theta(s, &v, bra);
            self.optimize_phi(s, &v, bra);
            v = self.apply(&self.slots[s], &v, false);
        }
        self.target.dotc(&v).norm_sqr()
    }

    fn optimize_theta(&mut self, s: usize, v: &DVector<C64>, bra: &DVector<C64>) {
        let slot = &self.slots[s];
        let g = &self.set.generators[slot.gen];
        let (u, w) = match g.partner {
            Some(p) if slot.phi != 0.0 => {
                let c = &self.set.generators[p].spectral;
                (c.apply(-slot.phi / 2.0, v), c.apply(-slot.phi / 2.0, bra))
            }
            _ => (v.clone(), bra.clone()),
        };
        // In the eigenbasis of `a` the overlap is a sum of pure phases.
        let uu = &g.spectral.vectors_adj * u;
        let ww = &g.spectral.vectors_adj * w;
        let terms: Vec<(f64, C64)> = g
            .spectral
            .values
            .iter()
            .zip(uu.iter().zip(ww.iter()))
            .map(|(&l, (a, b))| (l / 2.0, b.conj() * a))
            .collect();
        let f = TrigPoly::overlap(&terms);
        self.slots[s].theta = maximize_periodic(&f, slot.theta, g.half_period());
    }

    fn optimize_phi(&mut self, s: usize, v: &DVector<C64>, bra: &DVector<C64>) {
        let slot = self.slots[s].clone();
        let g = &self.set.generators[slot.gen];
        let Some(p) = g.partner else { return };
        if slot.theta == 0.0 {
            return;
        }
        let c = &self.set.generators[p].spectral;
        // In c's eigenbasis the overlap is Σ q̄ⱼ Kⱼₗ pₗ exp(-i(μⱼ-μₗ)φ/2).
        let core = g.spectral.matrix(slot.theta / 2.0);
        let k: DMatrix<C64> = &c.vectors_adj * core.entries() * &c.vectors;
        let pv = &c.vectors_adj * v;
        let qv = &c.vectors_adj * bra;
        let mu = &c.values;
        let mut terms = Vec::with_capacity(mu.len() * mu.len());
        for j in 0..mu.len() {
            for l in 0..mu.len() {
                terms.push(((mu[j] - mu[l]) / 2.0, qv[j].conj() * k[(j, l)] * pv[l]));
            }
        }
        let f = TrigPoly::overlap(&terms);
        self.slots[s].phi = maximize_periodic(&f, slot.phi, PI);
    }

    fn run(&mut self, goal: f64, max_sweeps: usize, patience: f64) -> f64 {
        let mut f = self.fidelity();
        for _ in 0..max_sweeps {
            if f >= goal {
                break;
            }
            let next = self.sweep();
            let gain = next - f;
            f = next;
            if gain <= patience * (1.0 - f) + 1e-15 {
                break;
            }
        }
        f
    }

    /// Extra sweeps once the goal is met, to push rounding-level accuracy.
    fn polish(&mut self) -> f64 {
        let mut f = self.fidelity();
        for _ in 0..50 {
            if 1.0 - f < 1e-14 {
                break;
            }
            let next = self.sweep();
            if next - f <= 1e-16 {
                f = next;
                break;
            }
            f = next;
        }
        f
    }

    fn block(&self, b: usize) -> Vec<Slot> {
        let mut out = Vec::with_capacity(2);
        if !self.set.cartan.is_empty() {
            let h = self.set.cartan[b % self.set.cartan.len()];
            out.push(Slot { gen: h, theta: 0.0, phi: 0.0 });
        }
        let a = self.set.couplings[b % self.set.couplings.len()];
        out.push(Slot { gen: a, theta: 0.0, phi: 0.0 });
        out
    }

    fn steps(&self) -> Vec<PulseStep> {
        self.slots
            .iter()
            .filter(|s| s.theta.abs() > ANGLE_FLOOR)
            .map(|s| PulseStep {
                generator: self.set.generators[s.gen].name.clone(),
                theta: s.theta,
                phi: if self.set.generators[s.gen].partner.is_some() { s.phi } else { 0.0 },
            })
            .collect()
    }
}

/// Gains below this are rounding noise; ignoring them keeps flat directions
/// at their current angle.
const GAIN_FLOOR: f64 = 1e-13;

/// Real trigonometric polynomial `f(x) = Re Σ c_Δ exp(iΔx)`.
struct TrigPoly {
    terms: Vec<(f64, C64)>,
}

impl TrigPoly {
    /// `|Σ gₖ exp(-iωₖx)|²` for terms `(ωₖ, gₖ)`, with equal frequency
    /// differences merged.
    fn overlap(amps: &[(f64, C64)]) -> Self {
        let mut terms: Vec<(f64, C64)> = Vec::new();
        for &(wj, gj) in amps {
            for &(wk, gk) in amps {
                let delta = wj - wk;
                let c = gj.conj() * gk;
                match terms.iter_mut().find(|(d, _)| (d - delta).abs() < 1e-9) {
                    Some((_, acc)) => *acc += c,
                    None => terms.push((delta, c)),
                }
            }
        }
        Self { terms }
    }

    fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(d, c)| (c * C64::from_polar(1.0, d * x)).re)
            .sum()
    }

    /// `(f', f'')` at `x`.
    fn derivatives(&self, x: f64) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(d1, d2), &(d, c)| {
            let z = c * C64::from_polar(1.0, d * x);
            (d1 - d * z.im, d2 - d * d * z.re)
        })
    }

    /// Upper bound on `max f - min f`.
    fn variation(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(d, _)| d.abs() >= 1e-9)
            .map(|(_, c)| 2.0 * c.norm())
            .sum()
    }
}

/// Grid scan over one period, golden-section bracketing of the best cell and
/// a Newton polish on `f'`. A grid jump must beat `current` by more than the
/// noise floor; otherwise the local maximum nearest `current` is taken.
fn maximize_periodic(f: &TrigPoly, current: f64, half_width: f64) -> f64 {
    const GRID: usize = 24;
    if f.variation() < GAIN_FLOOR {
        return current;
    }
    let f_now = f.eval(current);
    let step = 2.0 * half_width / GRID as f64;
    let (mut start, mut best_f) = (current, f_now);
    for i in 0..GRID {
        let x = -half_width + step * i as f64;
        let fx = f.eval(x);
        if fx > best_f + GAIN_FLOOR {
            start = x;
            best_f = fx;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (start - step, start + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f.eval(x1), f.eval(x2));
    while hi - lo > 1e-6 * half_width {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f.eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f.eval(x1);
        }
    }
    let mut x = if f1 >= f2 { x1 } else { x2 };
    for _ in 0..20 {
        let (d1, d2) = f.derivatives(x);
        if d2 >= -1e-300 {
            break;
        }
        let dx = -d1 / d2;
        if dx.abs() > step {
            break;
        }
        x += dx;
        if dx.abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    if f.eval(x) < f_now - 1e-12 {
        current
    } else {
        wrap(x, half_width)
    }
}

fn wrap(x: f64, half_width: f64) -> f64 {
    let period = 2.0 * half_width;
    let y = (x + half_width).rem_euclid(period) - half_width;
    if y == -half_width {
        -half_width
    } else {
        y
    }
}

/// Closed form for one qubit in the Pauli frame: a phase step about `e12`
/// followed by a rotation about `e13`.
fn single_qubit_to_pivot(set: &ControlSet, x: &StateVector) -> Option<Vec<PulseStep>> {
    let frame = set.frame.as_ref()?;
    if frame.euclid_dim() != 3 {
        return None;
    }
    let coupling = set.get("e13")?;
    if coupling.role == Role::Cartan {
        return None;
    }
    set.get("e12")?;
    let (x0, x1) = (x.amplitudes()[0], x.amplitudes()[1]);
    let theta = 2.0 * x1.norm().atan2(x0.norm());
    let phi = if x0.norm() > 0.0 && x1.norm() > 0.0 {
        x1.arg() - x0.arg()
    } else {
        0.0
    };
    let mut steps = Vec::new();
    if phi != 0.0 {
        steps.push(PulseStep { generator: "e12".into(), theta: phi, phi: 0.0 });
    }
    if theta != 0.0 {
        steps.push(PulseStep { generator: "e13".into(), theta: -theta, phi: 0.0 });
    }
    Some(steps)
}

fn search_to_pivot(
    set: &ControlSet,
    source: &StateVector,
    goal: f64,
    config: &SynthConfig,
) -> Result<(Vec<PulseStep>, bool, usize)> {
    let n = set.levels;
    let pivot = StateVector::basis(n, PIVOT)?;
    if fidelity(&pivot, source)? >= 1.0 - 1e-15 {
        return Ok((Vec::new(), true, 0));
    }
    if n == 2 {
        if let Some(steps) = single_qubit_to_pivot(set, source) {
            let end = set.replay(&steps, source)?;
            if fidelity(&end, &pivot)? >= goal {
                return Ok((steps, true, 0));
            }
        }
    }
    if set.couplings.is_empty() {
        return Err(domain("synthesis needs at least one coupling"));
    }
    let blocks = config.blocks.unwrap_or(3 * n).max(1);
    let mut ascent = Ascent {
        set,
        source: source.amplitudes().clone(),
        target: pivot.amplitudes().clone(),
        slots: Vec::new(),
    };

    let mut best: (f64, Vec<PulseStep>) = (ascent.fidelity(), Vec::new());
    for b in 0..blocks {
        let block = ascent.block(b);
        ascent.slots.extend(block);
        let last = b + 1 == blocks;
        let f = if last {
            ascent.run(goal, config.max_sweeps, 1e-3)
        } else {
            ascent.run(goal, 200, 1e-2)
        };
        if f > best.0 {
            best = (f, ascent.steps());
        }
        if f >= goal {
            ascent.polish();
            return Ok((ascent.steps(), true, 0));
        }
    }

    let template: Vec<Slot> = ascent.slots.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for r in 0..config.restarts {
        rng.set_stream(r as u64 + 1);
        ascent.slots = template
            .iter()
            .map(|s| {
                let g = &set.generators[s.gen];
                let h = g.half_period();
                Slot {
                    gen: s.gen,
                    theta: rng.random_range(-h..h),
                    phi: if g.partner.is_some() { rng.random_range(-PI..PI) } else { 0.0 },
                }
            })
            .collect();
        let f = ascent.run(goal, config.max_sweeps, 1e-3);
        if f > best.0 {
            best = (f, ascent.steps());
        }
        if f >= goal {
            ascent.polish();
            return Ok((ascent.steps(), true, r + 1));
        }
    }
    Ok((best.1, false, config.restarts))
}

fn validate(set: &ControlSet, x: &StateVector, config: &SynthConfig) -> Result<()> {
    check_dim(set.levels, x.dim())?;
    if !(config.target_infidelity > 0.0 && config.target_infidelity < 1.0) {
        return Err(domain("target infidelity must lie in (0, 1)"));
    }
    Ok(())
}

/// Sequence mapping `source` onto the pivot ray.
pub fn synthesize_to_pivot(
    system: &ControlSystem,
    source: &StateVector,
    config: &SynthConfig,
) -> Result<Synthesis> {
    let set = ControlSet::for_system(system)?;
    synthesize_to_pivot_with(&set, source, config)
}

pub fn synthesize_to_pivot_with(
    set: &ControlSet,
    source: &StateVector,
    config: &SynthConfig,
) -> Result<Synthesis> {
    validate(set, source, config)?;
    let goal = 1.0 - config.target_infidelity;
    let (steps, _, restarts_used) = search_to_pivot(set, &canonical_phase(source), goal, config)?;
    let end = set.replay(&steps, source)?;
    let f = fidelity(&end, &StateVector::basis(set.levels, PIVOT)?)?;
    Ok(Synthesis {
        sequence: PulseSequence {
            pivot: PIVOT,
            achieved_fidelity: f,
            steps,
        },
        converged: f >= goal,
        restarts_used,
    })
}

/// `source → pivot`, then the reversed `target → pivot` sequence.
pub fn synthesize_transfer(
    system: &ControlSystem,
    source: &StateVector,
    target: &StateVector,
    config: &SynthConfig,
) -> Result<Synthesis> {
    let set = ControlSet::for_system(system)?;
    synthesize_transfer_with(&set, source, target, config)
}

pub fn synthesize_transfer_with(
    set: &ControlSet,
    source: &StateVector,
    target: &StateVector,
    config: &SynthConfig,
) -> Result<Synthesis> {
    validate(set, source, config)?;
    validate(set, target, config)?;
    let goal = 1.0 - config.target_infidelity;
    if fidelity(source, target)? >= 1.0 - 1e-15 {
        return Ok(Synthesis {
            sequence: PulseSequence::empty(fidelity(source, target)?),
            converged: true,
            restarts_used: 0,
        });
    }
    // Each half may lose at most a quarter of the budget: the overlap error
    // of the concatenation is bounded by (√ε₁ + √ε₂)².
    let half_goal = 1.0 - config.target_infidelity / 4.0;
    let (down, _, r1) = search_to_pivot(set, &canonical_phase(source), half_goal, config)?;
    let (up, _, r2) = search_to_pivot(set, &canonical_phase(target), half_goal, config)?;
    let back = reverse_steps(&up);
    let steps: Vec<PulseStep> = down.into_iter().chain(back).collect();
    let end = set.replay(&steps, source)?;
    let f = fidelity(&end, target)?;
    Ok(Synthesis {
        sequence: PulseSequence {
            pivot: PIVOT,
            achieved_fidelity: f,
            steps,
        },
        converged: f >= goal,
        restarts_used: r1 + r2,
    })
}

fn reverse_steps(steps: &[PulseStep]) -> Vec<PulseStep> {
    steps
        .iter()
        .rev()
        .map(|s| PulseStep {
            generator: s.generator.clone(),
            theta: -s.theta,
            phi: s.phi,
        })
        .collect()
}

/// Time reversal: steps in reverse order with `θ → -θ`.
pub fn reverse_sequence(seq: &PulseSequence) -> PulseSequence {
    PulseSequence {
        pivot: seq.pivot,
        achieved_fidelity: seq.achieved_fidelity,
        steps: reverse_steps(&seq.steps),
    }
}

/// `exp(-e12 φ/2) exp(e13 θ/2) exp(-e12 χ/2) ψ₀` in the Pauli frame.
pub fn euler_state_single_qubit(phi: f64, theta: f64, chi: f64) -> StateVector {
    let frame = crate::clifford::build_vector_basis(3, 1).expect("Pauli frame");
    let e12 = frame.blade("e12").expect("e12");
    let e13 = frame.blade("e13").expect("e13");
    let exp = |m: &OperatorMatrix, t: f64| crate::propagator::expm_antihermitian(m, t).expect("anti-Hermitian");
    let u = &(&exp(&e12, -phi / 2.0) * &exp(&e13, theta / 2.0)) * &exp(&e12, -chi / 2.0);
    let psi0 = StateVector::basis(2, 0).expect("two levels");
    psi0.evolve(&u).expect("matching dims")
}

/// One transition of a real expansion about the pivot: `a ψ_pivot` and
/// `b ψ_pivot` must both lie on the ray of `ψ_target`.
#[derive(Clone, Debug)]
pub struct TransitionPair {
    pub target: usize,
    pub a: OperatorMatrix,
    pub b: OperatorMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionTerm {
    pub target: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// Real coefficients with `x = Σ (α_k a_k + β_k b_k) ψ_pivot`.
pub fn expand_in_generators(
    x: &StateVector,
    pivot: usize,
    pairs: &[TransitionPair],
) -> Result<Vec<ExpansionTerm>> {
    let n = x.dim();
    let psi = StateVector::basis(n, pivot)?;
    let mut covered = vec![false; n];
    let mut terms = Vec::with_capacity(pairs.len());
    for pair in pairs {
        if pair.target >= n {
            return Err(domain(format!("transition target {} outside 0..{n}", pair.target)));
        }
        let u = pair.a.apply(psi.amplitudes())?;
        let w = pair.b.apply(psi.amplitudes())?;
        for (name, img) in [("a", &u), ("b", &w)] {
            let stray = img
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != pair.target)
                .map(|(_, z)| z.norm())
                .fold(0.0, f64::max);
            if stray > 1e-12 {
                return Err(domain(format!(
                    "{name} of transition {pivot}->{} leaks {stray:e} outside the target level",
                    pair.target
                )));
            }
        }
        let (uk, wk) = (u[pair.target], w[pair.target]);
        // Solve x_k = α u + β w over the reals.
        let det = uk.re * wk.im - uk.im * wk.re;
        if det.abs() < 1e-12 {
            return Err(domain(format!(
                "generators of transition {pivot}->{} are not independent over the reals",
                pair.target
            )));
        }
        let xk = x.amplitudes()[pair.target];
        let alpha = (xk.re * wk.im - xk.im * wk.re) / det;
        let beta = (uk.re * xk.im - uk.im * xk.re) / det;
        covered[pair.target] = true;
        terms.push(ExpansionTerm { target: pair.target, alpha, beta });
    }
    if let Some(k) = covered.iter().position(|c| !c) {
        return Err(domain(format!("no transition pair reaches level {k}")));
    }
    Ok(terms)
}

/// Transition pairs about `ψ₀` for two qubits in the 5D frame: the identity
/// with `e12` for the pivot phase, and `(a, c·a)` for the rows
/// `(e13, e12)`, `(e35, e45)`, `(e24, e12)`.
pub fn two_qubit_transition_pairs(frame: &CliffordFrame) -> Result<Vec<TransitionPair>> {
    if frame.dim() != 4 || frame.euclid_dim() < 5 {
        return Err(Error::Configuration("two-qubit pairs need the 5D frame".into()));
    }
    let e = |s: &str| frame.blade(s);
    let pair = |target, a: &str, c: &str| -> Result<TransitionPair> {
        let a = e(a)?;
        Ok(TransitionPair { target, b: &e(c)? * &a, a })
    };
    Ok(vec![
        TransitionPair { target: 0, a: OperatorMatrix::identity(4), b: e("e12")? },
        pair(1, "e13", "e12")?,
        pair(2, "e35", "e45")?,
        pair(3, "e24", "e12")?,
    ])
}

/// The four Bell states: `e24` rotations by `±π/2` (phase partner `e12`)
/// applied to `ψ₁` and `ψ₀`.
pub fn bell_states(frame: &CliffordFrame) -> Result<[StateVector; 4]> {
    if frame.dim() != 4 {
        return Err(Error::Configuration(format!(
            "Bell states need a two-qubit frame, got {} levels",
            frame.dim()
        )));
    }
    let a = frame.blade("e24")?;
    let c = frame.blade("e12")?;
    let plus = rotation_factorization(&a, &c, PI / 2.0, 0.0)?;
    let minus = rotation_factorization(&a, &c, -PI / 2.0, 0.0)?;
    let psi0 = StateVector::basis(4, 0)?;
    let psi1 = StateVector::basis(4, 1)?;
    Ok([
        psi1.evolve(&plus)?,
        psi1.evolve(&minus)?,
        psi0.evolve(&plus)?,
        psi0.evolve(&minus)?,
    ])
}
