//! Test-only 4-qubit density-matrix model of one entanglement swap.
//!
//! Qubit order is (A, B1, B2, C) with A the most significant bit. Pairs
//! (A, B1) and (B2, C) are the two links; the repeater holds B1 and B2,
//! performs CNOT(B1 -> B2) and H(B1), reads both, and the end node C applies
//! `Z^m1 X^m2`. Everything is done with full 16x16 matrices so nothing here
//! shares algebra with the library's Pauli-frame bookkeeping.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};

pub type C = Complex<f64>;
pub type Mat = DMatrix<C>;

const A: usize = 0;
const B1: usize = 1;
const B2: usize = 2;
const QC: usize = 3;
const N: usize = 4;
const DIM: usize = 1 << N;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn single(k: usize) -> Mat {
    let (o, i) = (c(0.0), C::new(0.0, 1.0));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match k {
        0 => DMatrix::from_row_slice(2, 2, &[c(1.0), o, o, c(1.0)]),
        1 => DMatrix::from_row_slice(2, 2, &[o, c(1.0), c(1.0), o]),
        2 => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        3 => DMatrix::from_row_slice(2, 2, &[c(1.0), o, o, c(-1.0)]),
        _ => DMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)]),
    }
}

const X: usize = 1;
const Z: usize = 3;
const H: usize = 4;

/// Single-qubit operator `k` acting on qubit `q` of the 4-qubit register.
fn on(q: usize, k: usize) -> Mat {
    (0..N).fold(DMatrix::identity(1, 1), |acc: Mat, j| {
        acc.kronecker(&if j == q { single(k) } else { single(0) })
    })
}

fn bit(index: usize, q: usize) -> usize {
    (index >> (N - 1 - q)) & 1
}

fn cnot(control: usize, target: usize) -> Mat {
    let mut m = DMatrix::zeros(DIM, DIM);
    for i in 0..DIM {
        let j = if bit(i, control) == 1 { i ^ (1 << (N - 1 - target)) } else { i };
        m[(j, i)] = c(1.0);
    }
    m
}

fn conj(u: &Mat, rho: &Mat) -> Mat {
    u * rho * u.adjoint()
}

/// `|Phi+><Phi+|` on two qubits.
fn phi_plus() -> Mat {
    let mut v = DMatrix::zeros(4, 1);
    v[(0, 0)] = c(std::f64::consts::FRAC_1_SQRT_2);
    v[(3, 0)] = c(std::f64::consts::FRAC_1_SQRT_2);
    &v * v.adjoint()
}

/// Two-qubit Werner state of fidelity `f`.
pub fn werner(f: f64) -> Mat {
    let p = phi_plus();
    let rest = DMatrix::identity(4, 4) - &p;
    p * c(f) + rest * c((1.0 - f) / 3.0)
}

/// Applies a single-qubit depolarizing channel with keep probability
/// `keep` to qubit `q`.
fn depolarize(rho: &Mat, q: usize, keep: f64) -> Mat {
    let mut out = rho * c(keep);
    for k in 0..4 {
        out += conj(&on(q, k), rho) * c((1.0 - keep) / 4.0);
    }
    out
}

/// Two-qubit Pauli channel on (B1, B2). With `include_identity` the error
/// is uniform over all 16 Paulis (full depolarization), otherwise over the
/// 15 non-identity ones.
fn gate_noise(rho: &Mat, p: f64, include_identity: bool) -> Mat {
    let labels: Vec<(usize, usize)> = (0..4)
        .flat_map(|a| (0..4).map(move |b| (a, b)))
        .filter(|&l| include_identity || l != (0, 0))
        .collect();
    let w = p / labels.len() as f64;
    let mut out = rho * c(1.0 - p);
    for (a, b) in labels {
        let u = on(B1, a) * on(B2, b);
        out += conj(&u, rho) * c(w);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateNoise {
    /// 15 non-identity Paulis (round-train model).
    NonIdentityPaulis,
    /// Full depolarization of both repeater qubits (per-pair model).
    Depolarize,
}

#[derive(Debug, Clone, Copy)]
pub struct SwapSetup {
    pub f1: f64,
    pub f2: f64,
    pub p_gate: f64,
    pub p_meas: f64,
    pub gate: GateNoise,
    /// Per-qubit depolarizing keep probabilities: link 1 qubits, link 2
    /// qubits, end-node qubits after the swap.
    pub keep_link1: f64,
    pub keep_link2: f64,
    pub keep_after: f64,
}

impl SwapSetup {
    pub fn werner(f1: f64, f2: f64, p_gate: f64, p_meas: f64, gate: GateNoise) -> Self {
        Self {
            f1,
            f2,
            p_gate,
            p_meas,
            gate,
            keep_link1: 1.0,
            keep_link2: 1.0,
            keep_after: 1.0,
        }
    }
}

/// Fidelity of (A, C) with `|Phi+>` after the swap, averaged over outcomes
/// and readout errors.
pub fn swap_fidelity(s: &SwapSetup) -> f64 {
    let mut rho = werner(s.f1).kronecker(&werner(s.f2));
    for (q, keep) in [(A, s.keep_link1), (B1, s.keep_link1), (B2, s.keep_link2), (QC, s.keep_link2)] {
        rho = depolarize(&rho, q, keep);
    }
    rho = gate_noise(&rho, s.p_gate, s.gate == GateNoise::Depolarize);
    rho = conj(&cnot(B1, B2), &rho);
    rho = conj(&on(B1, H), &rho);

    // Target |Phi+><Phi+| on (A, C) tensored with identity on (B1, B2),
    // embedded in the (A, B1, B2, C) order.
    let p = phi_plus();
    let mut target = DMatrix::zeros(DIM, DIM);
    for i in 0..DIM {
        for j in 0..DIM {
            if bit(i, B1) == bit(j, B1) && bit(i, B2) == bit(j, B2) {
                let (ri, rj) = (bit(i, A) * 2 + bit(i, QC), bit(j, A) * 2 + bit(j, QC));
                target[(i, j)] = p[(ri, rj)];
            }
        }
    }

    let mut fidelity = 0.0;
    for m1 in 0..2 {
        for m2 in 0..2 {
            let mut proj = DMatrix::zeros(DIM, DIM);
            for i in 0..DIM {
                if bit(i, B1) == m1 && bit(i, B2) == m2 {
                    proj[(i, i)] = c(1.0);
                }
            }
            let branch = &proj * &rho * &proj;
            for r1 in 0..2 {
                for r2 in 0..2 {
                    let flip = |m: usize, r: usize| if m == r { 1.0 - s.p_meas } else { s.p_meas };
                    let prob = flip(m1, r1) * flip(m2, r2);
                    if prob == 0.0 {
                        continue;
                    }
                    let mut u: Mat = DMatrix::identity(DIM, DIM);
                    if r2 == 1 {
                        u = on(QC, X) * u;
                    }
                    if r1 == 1 {
                        u = on(QC, Z) * u;
                    }
                    let mut out = conj(&u, &branch);
                    out = depolarize(&out, A, s.keep_after);
                    out = depolarize(&out, QC, s.keep_after);
                    fidelity += prob * (&target * out).trace().re;
                }
            }
        }
    }
    fidelity
}

/// The per-pair swap expression with the readout term's sign flipped:
/// `p_m (p_m - 2)` instead of `p_m (2 - p_m)`.
pub fn f_swap_werner_flipped_sign(f1: f64, f2: f64, p_gate: f64, p_meas: f64) -> f64 {
    let e1 = (1.0 - f1) / 3.0;
    let e2 = (1.0 - f2) / 3.0;
    let same = f1 * f2 + 3.0 * e1 * e2;
    let one_off = f1 * e2 + e1 * f2 + 2.0 * e1 * e2;
    p_gate / 4.0 + (1.0 - p_gate) * ((1.0 - p_meas).powi(2) * same + p_meas * (p_meas - 2.0) * one_off)
}

/// The 100-point (F1, F2) grid over [1/4, 1]^2.
pub fn fidelity_grid() -> Vec<(f64, f64)> {
    let f = |i: usize| 0.25 + 0.75 * i as f64 / 9.0;
    (0..10).flat_map(|i| (0..10).map(move |j| (f(i), f(j)))).collect()
}

pub const ERROR_LEVELS: [f64; 3] = [0.0, 0.05, 0.5];
