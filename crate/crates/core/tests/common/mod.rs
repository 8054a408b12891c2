#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symctl::clifford::{build_vector_basis, CliffordFrame};
use symctl::propagator::StateVector;
use symctl::system::{assemble_control_system, build_free_hamiltonian, ladder_generators, ControlSystem};
use symctl::{OperatorMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn frame5() -> CliffordFrame {
    build_vector_basis(5, 2).unwrap()
}

pub fn blade(frame: &CliffordFrame, label: &str) -> OperatorMatrix {
    frame.blade(label).unwrap()
}

/// Two qubits with couplings e13, e24, e35, e12 and frequencies (2, 1).
pub fn two_qubit_system() -> ControlSystem {
    let blades: Vec<_> = ["e13", "e24", "e35", "e12"].iter().map(|s| s.parse().unwrap()).collect();
    assemble_control_system(&[2.0, 1.0], 0.0, &blades, &frame5()).unwrap()
}

/// Eight levels driven by the nearest-neighbour ladder.
pub fn ladder_system(levels: usize) -> ControlSystem {
    let freqs: Vec<f64> = (1..=levels / 2).rev().map(|k| k as f64 + 0.5).collect();
    let h0 = build_free_hamiltonian(&freqs, 0.25).unwrap();
    ControlSystem::new(h0, ladder_generators(levels).unwrap(), None).unwrap()
}

/// Complex Gaussian amplitudes, normalized.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let mut gauss = || {
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let v: f64 = rng.random_range(0.0..1.0);
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    };
    let amps: Vec<C64> = (0..n).map(|_| C64::new(gauss(), gauss())).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    StateVector::new(amps.into_iter().map(|z| z / norm).collect()).unwrap()
}

/// `(X - X†)/2` of a matrix with uniform entries.
pub fn random_anti_hermitian(rng: &mut ChaCha8Rng, n: usize) -> OperatorMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    OperatorMatrix::new((&m - m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

/// Reduced density matrix of the first qubit of a two-qubit state.
pub fn reduced_first_qubit(x: &StateVector) -> [[C64; 2]; 2] {
    let a = x.amplitudes();
    let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in rho.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            for k in 0..2 {
                *r += a[2 * i + k] * a[2 * j + k].conj();
            }
        }
    }
    rho
}

pub fn reduced_second_qubit(x: &StateVector) -> [[C64; 2]; 2] {
    let a = x.amplitudes();
    let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in rho.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            for k in 0..2 {
                *r += a[2 * k + i] * a[2 * k + j].conj();
            }
        }
    }
    rho
}

/// Largest entry of `|ρ - I/2|`.
pub fn distance_from_mixed(rho: &[[C64; 2]; 2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, row) in rho.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            let ideal = if i == j { 0.5 } else { 0.0 };
            d = d.max((r - C64::new(ideal, 0.0)).norm());
        }
    }
    d
}
