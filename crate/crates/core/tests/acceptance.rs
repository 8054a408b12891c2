//! Acceptance gate: every criterion prints one PASS/FAIL line, then the test
//! fails if any criterion did.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use symctl::clifford::{anti_hermitian_generating_blades, blade_matrix, blades_of_grade, build_vector_basis};
use symctl::lie::{closure, commutator, span_equal, LieBasis};
use symctl::propagator::{
    evolve_piecewise, expm_antihermitian, fidelity, rotation_factorization, unitarity_defect, ControlStep,
    PiecewiseControl, StateVector,
};
use symctl::synth::{
    bell_states, reverse_sequence, synthesize_to_pivot_with, synthesize_transfer_with, ControlSet, SynthConfig,
};
use symctl::system::{
    build_free_hamiltonian, controllability_verdict, is_symmetric_spectrum, ControlSystem, Verdict,
    SPECTRUM_TOL,
};
use symctl::{OperatorMatrix, C64};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn closure_dim_of_blades(d: usize, qubits: usize, bivectors_only: bool) -> (usize, usize) {
    let frame = build_vector_basis(d, qubits).unwrap();
    let labels = if bivectors_only {
        blades_of_grade(d, 2)
    } else {
        anti_hermitian_generating_blades(&frame)
    };
    let gens: Vec<OperatorMatrix> = labels.iter().map(|b| blade_matrix(&frame, b).unwrap()).collect();
    let n = frame.dim();
    let r = closure(&gens, n * n).unwrap();
    (r.algebra_dim, r.cartan_dim)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let got = [
        closure_dim_of_blades(3, 1, true).0,
        closure_dim_of_blades(4, 2, false).0,
        closure_dim_of_blades(5, 2, true).0,
        closure_dim_of_blades(6, 3, false).0,
    ];
    let elapsed = start.elapsed();
    check(
        got == [3, 10, 10, 36] && elapsed < Duration::from_secs(5),
        format!("dims {got:?} (want [3, 10, 10, 36]) in {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let f = frame5();
    let set: Vec<OperatorMatrix> = ["e12", "e13", "e24", "e35"].iter().map(|s| blade(&f, s)).collect();
    let full = closure(&set, 16).unwrap().algebra_dim;
    let mut subsets = Vec::new();
    for skip in 0..4 {
        let sub: Vec<OperatorMatrix> =
            set.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, m)| m.clone()).collect();
        subsets.push(closure(&sub, 16).unwrap().algebra_dim);
    }
    let elapsed = start.elapsed();
    check(
        full == 10 && subsets.iter().all(|&d| d < 10) && elapsed < Duration::from_secs(1),
        format!("full {full}, 3-subsets {subsets:?} in {elapsed:.2?}"),
    )
}

fn criterion_3() -> Outcome {
    let c2 = closure_dim_of_blades(3, 1, true).1;
    let c4 = closure_dim_of_blades(5, 2, true).1;
    let c8 = closure_dim_of_blades(6, 3, false).1;
    let f = frame5();
    let gens: Vec<OperatorMatrix> =
        blades_of_grade(5, 2).iter().map(|b| blade_matrix(&f, b).unwrap()).collect();
    let r = closure(&gens, 16).unwrap();
    let cartan = LieBasis::span_of(4, &r.cartan_basis).unwrap();
    let named = LieBasis::span_of(4, &[blade(&f, "e12"), blade(&f, "e45")]).unwrap();
    let residual = r
        .cartan_basis
        .iter()
        .map(|h| named.residual_norm(h).unwrap() / h.frobenius_norm())
        .chain(named.elements().iter().map(|h| cartan.residual_norm(h).unwrap() / h.frobenius_norm()))
        .fold(0.0, f64::max);
    check(
        [c2, c4, c8] == [1, 2, 4] && residual <= 1e-8 && span_equal(&cartan, &named).unwrap(),
        format!("cartan dims {:?}, span residual {residual:.1e}", [c2, c4, c8]),
    )
}

fn criterion_4() -> Outcome {
    let f = frame5();
    let e = |s: &str| blade(&f, s);
    let half_comm = |x: &str, y: &str| commutator(&e(x), &e(y)).unwrap().scale(0.5);
    let errs = [
        half_comm("e12", "e24").max_abs_diff(&e("e14")),
        half_comm("e13", "e35").max_abs_diff(&e("e15")),
        half_comm("e15", "e14").max_abs_diff(&e("e45")),
    ];
    let u = expm_antihermitian(&e("e15"), PI / 4.0).unwrap();
    let u_inv = expm_antihermitian(&e("e15"), -PI / 4.0).unwrap();
    let conj = (&(&u * &e("e14")) * &u_inv).max_abs_diff(&e("e45"));
    let worst = errs.iter().copied().fold(0.0, f64::max);
    check(
        worst <= 1e-14 && conj <= 1e-12,
        format!("commutator error {worst:.1e}, conjugation error {conj:.1e}"),
    )
}

fn criterion_5() -> Outcome {
    let f = frame5();
    let e = |s: &str| blade(&f, s);
    let explicit = symctl::system::ladder_generators(4).unwrap();
    let explicit: Vec<OperatorMatrix> = explicit.into_iter().map(|g| g.matrix).collect();
    let clifford = vec![
        e("e13").scale(-1.0),
        (&e("e15") + &e("e24")).scale(-0.5),
        e("e23"),
        (&e("e14") - &e("e25")).scale(0.5),
    ];
    let a = closure(&explicit, 16).unwrap();
    let b = closure(&clifford, 16).unwrap();
    let equal = span_equal(&a.basis, &b.basis).unwrap();
    check(
        a.algebra_dim == 10 && b.algebra_dim == 10 && equal,
        format!("dims {} and {}, span_equal {equal}", a.algebra_dim, b.algebra_dim),
    )
}

fn criterion_6() -> Outcome {
    let f = frame5();
    let pairs = [("e13", "e12"), ("e35", "e45"), ("e24", "e12")];
    let mut rng = rng(6);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let (a, c) = pairs[k % 3];
        let (a, c) = (blade(&f, a), blade(&f, c));
        let theta = rng.random_range(-2.0 * PI..2.0 * PI);
        let phi = rng.random_range(-PI..PI);
        let factored = rotation_factorization(&a, &c, theta, phi).unwrap();
        let b = commutator(&c, &a).unwrap().scale(0.5);
        let direct = expm_antihermitian(&(&a.scale(phi.cos()) + &b.scale(phi.sin())), theta / 2.0).unwrap();
        worst = worst.max(factored.max_abs_diff(&direct));
    }
    check(worst <= 1e-10, format!("max deviation {worst:.1e} over 200 draws"))
}

fn criterion_7() -> Outcome {
    let mut rng = rng(7);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = [2, 4, 8][k % 3];
        let x = random_anti_hermitian(&mut rng, n);
        let t = rng.random_range(-5.0..5.0);
        worst = worst.max(unitarity_defect(&expm_antihermitian(&x, t).unwrap()));
    }
    let system = two_qubit_system();
    let steps: Vec<ControlStep> = (0..10_000)
        .map(|_| ControlStep {
            duration: rng.random_range(0.01..0.2),
            amplitudes: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
        })
        .collect();
    let x0 = random_state(&mut rng, 4);
    let traj = evolve_piecewise(&system, &PiecewiseControl::new(steps), &x0).unwrap();
    let drift = traj.norm_drift();
    check(
        worst <= 1e-12 && drift <= 1e-10 && traj.states.len() == 10_001,
        format!("unitarity defect {worst:.1e}, norm drift {drift:.1e} over 10^4 steps"),
    )
}

fn criterion_8() -> Outcome {
    let f = frame5();
    let psi = |k| StateVector::basis(4, k).unwrap();
    let cases = [("e13", 0, 1), ("e13", 2, 3), ("e24", 1, 2), ("e24", 0, 3), ("e35", 0, 2), ("e35", 1, 3)];
    let mut worst: f64 = 1.0;
    for (g, from, to) in cases {
        let u = expm_antihermitian(&blade(&f, g), PI / 2.0).unwrap();
        worst = worst.min(fidelity(&psi(from).evolve(&u).unwrap(), &psi(to)).unwrap());
    }
    check(worst >= 1.0 - 1e-10, format!("min transition fidelity 1-{:.1e}", 1.0 - worst))
}

fn criterion_9() -> Outcome {
    let states = bell_states(&frame5()).unwrap();
    let mut overlap: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            overlap = overlap.max(fidelity(&states[i], &states[j]).unwrap());
        }
    }
    let mixed = states
        .iter()
        .flat_map(|s| [reduced_first_qubit(s), reduced_second_qubit(s)])
        .map(|rho| distance_from_mixed(&rho))
        .fold(0.0, f64::max);
    check(
        overlap <= 1e-24 && mixed <= 1e-12,
        format!("max pairwise fidelity {overlap:.1e}, max |rho - I/2| {mixed:.1e}"),
    )
}

fn transfer_batch(system: &ControlSystem, pairs: usize, seed: u64) -> (usize, f64, f64, Duration) {
    let set = ControlSet::for_system(system).unwrap();
    let n = set.levels();
    let cfg = SynthConfig { seed, ..SynthConfig::default() };
    let mut rng = rng(seed);
    let (mut ok, mut worst_fid, mut worst_round, mut slowest) = (0, 1.0f64, 1.0f64, Duration::ZERO);
    for _ in 0..pairs {
        let x = random_state(&mut rng, n);
        let y = random_state(&mut rng, n);
        let start = Instant::now();
        let out = synthesize_transfer_with(&set, &x, &y, &cfg).unwrap();
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        let replayed = fidelity(&set.replay(&out.sequence.steps, &x).unwrap(), &y).unwrap();
        worst_fid = worst_fid.min(replayed);
        if replayed >= 1.0 - 1e-6 && elapsed < Duration::from_secs(10) {
            ok += 1;
        }
        let down = synthesize_to_pivot_with(&set, &x, &cfg).unwrap();
        let pivot = set.replay(&down.sequence.steps, &x).unwrap();
        let back = set.replay(&reverse_sequence(&down.sequence).steps, &pivot).unwrap();
        worst_round = worst_round.min(fidelity(&back, &x).unwrap());
    }
    (ok, worst_fid, worst_round, slowest)
}

fn criterion_10() -> Outcome {
    let (ok4, fid4, round4, slow4) = transfer_batch(&two_qubit_system(), 50, 10);
    let (ok8, fid8, round8, slow8) = transfer_batch(&ladder_system(8), 10, 20);
    check(
        ok4 == 50 && ok8 == 10 && round4 >= 1.0 - 1e-9 && round8 >= 1.0 - 1e-9,
        format!(
            "N=4 {ok4}/50 (min 1-{:.1e}, round trip 1-{:.1e}, slowest {slow4:.2?}); \
             N=8 {ok8}/10 (min 1-{:.1e}, round trip 1-{:.1e}, slowest {slow8:.2?})",
            1.0 - fid4,
            1.0 - round4,
            1.0 - fid8,
            1.0 - round8
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = rng(11);
    let mut all_symmetric = true;
    for _ in 0..200 {
        let m = rng.random_range(1..=4);
        let freqs: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..50.0)).collect();
        let offset = rng.random_range(-100.0..100.0);
        let Ok(h0) = build_free_hamiltonian(&freqs, offset) else { continue };
        all_symmetric &= is_symmetric_spectrum(&h0, SPECTRUM_TOL).unwrap().symmetric;
    }
    let diag = OperatorMatrix::from_diagonal(&[3.0, 1.0, 0.0, -1.0].map(|x| C64::new(x, 0.0)));
    let couplings = two_qubit_system().couplings().to_vec();
    let skewed = ControlSystem::new(diag, couplings, Some(frame5())).unwrap();
    let report = controllability_verdict(&skewed).unwrap();
    check(
        all_symmetric && report.verdict == Verdict::Inconsistent,
        format!("generated spectra symmetric: {all_symmetric}; diag(3,1,0,-1): {:?}", report.verdict.as_str()),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("closure dimensions", criterion_1),
        ("minimal generating set", criterion_2),
        ("Cartan dimensions", criterion_3),
        ("commutator identities", criterion_4),
        ("generator-set equivalence", criterion_5),
        ("rotation factorization", criterion_6),
        ("unitarity and norm", criterion_7),
        ("pi-pulse transitions", criterion_8),
        ("Bell states", criterion_9),
        ("transfer synthesis", criterion_10),
        ("symmetric spectrum gate", criterion_11),
    ];
    let mut failed = Vec::new();
    let stderr = std::io::stderr();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        let line = format!("criterion {:>2} {tag} {name}: {detail} [{elapsed:.2?}]", k + 1);
        writeln!(stderr.lock(), "{line}").unwrap();
        println!("{line}");
        if outcome.is_err() {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
