//! Error-vector bookkeeping evolved by a time-invariant transition matrix.

use std::fmt;
use std::str::FromStr;

use crate::domain::{ceil_slices, round_slices};

use super::NoiseError;

pub const N_CLASSES: usize = 7;
const STOCHASTIC_TOL: f64 = 1e-12;

/// Per-qubit error classes, in vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ErrorClass {
    I,
    X,
    Y,
    Z,
    Relaxation,
    Excitation,
    Loss,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; N_CLASSES] = [
        ErrorClass::I,
        ErrorClass::X,
        ErrorClass::Y,
        ErrorClass::Z,
        ErrorClass::Relaxation,
        ErrorClass::Excitation,
        ErrorClass::Loss,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Probability distribution over [`ErrorClass`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorVector([f64; N_CLASSES]);

impl ErrorVector {
    /// The error-free qubit, `(1, 0, ..., 0)`.
    pub const CLEAN: ErrorVector = ErrorVector([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

    pub fn new(probs: [f64; N_CLASSES]) -> Result<Self, NoiseError> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(NoiseError::InvalidErrorVector("negative or non-finite entry".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(NoiseError::InvalidErrorVector(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64; N_CLASSES] {
        &self.0
    }

    pub fn prob(&self, class: ErrorClass) -> f64 {
        self.0[class.index()]
    }

    /// Inverse-CDF sample of one class from a uniform draw in `[0, 1)`.
    pub fn sample(&self, u: f64) -> ErrorClass {
        let mut acc = 0.0;
        for class in ErrorClass::ALL {
            acc += self.0[class.index()];
            if u < acc {
                return class;
            }
        }
        // Rounding left a sliver above the last cumulative sum.
        *ErrorClass::ALL
            .iter()
            .rev()
            .find(|c| self.0[c.index()] > 0.0)
            .unwrap_or(&ErrorClass::I)
    }

    fn times(&self, q: &Matrix) -> ErrorVector {
        let mut out = [0.0; N_CLASSES];
        for (i, pi) in self.0.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += pi * q[i][j];
            }
        }
        ErrorVector(out)
    }
}

type Matrix = [[f64; N_CLASSES]; N_CLASSES];

fn identity() -> Matrix {
    let mut m = [[0.0; N_CLASSES]; N_CLASSES];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut c = [[0.0; N_CLASSES]; N_CLASSES];
    for i in 0..N_CLASSES {
        for k in 0..N_CLASSES {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..N_CLASSES {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Product of two row-stochastic matrices, rows rescaled to sum to one.
///
/// Without the rescale the row-sum error doubles with every squaring, so
/// it grows linearly in the exponent (about 1e-10 at n = 1e6).
fn stochastic_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut c = matmul(a, b);
    for row in &mut c {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
    }
    c
}

/// Row-stochastic one-slice transition matrix `Q` with its slice length.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    q: Matrix,
    slice_s: f64,
}

impl TransitionMatrix {
    pub fn new(q: [[f64; N_CLASSES]; N_CLASSES], slice_s: f64) -> Result<Self, NoiseError> {
        if !(slice_s.is_finite() && slice_s > 0.0) {
            return Err(NoiseError::InvalidSlice(slice_s));
        }
        for (i, row) in q.iter().enumerate() {
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(NoiseError::NotStochastic(format!("row {i} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(NoiseError::NotStochastic(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { q, slice_s })
    }

    pub fn identity(slice_s: f64) -> Result<Self, NoiseError> {
        Self::new(identity(), slice_s)
    }

    /// Uniform depolarizing dynamics on `{I, X, Y, Z}`: each Pauli class
    /// stays put with probability `1 - p` and moves to each of the other
    /// three with `p / 3`. Relaxation, excitation and loss are absorbing
    /// and unreachable.
    pub fn depolarizing(p: f64, slice_s: f64) -> Result<Self, NoiseError> {
        if !(0.0..=0.75).contains(&p) {
            return Err(NoiseError::InvalidProbability { name: "p", value: p });
        }
        let mut q = identity();
        for (i, row) in q.iter_mut().enumerate().take(4) {
            for (j, v) in row.iter_mut().enumerate().take(4) {
                *v = if i == j { 1.0 - p } else { p / 3.0 };
            }
        }
        Self::new(q, slice_s)
    }

    pub fn slice_s(&self) -> f64 {
        self.slice_s
    }

    pub fn entry(&self, from: ErrorClass, to: ErrorClass) -> f64 {
        self.q[from.index()][to.index()]
    }

    pub fn rows(&self) -> &[[f64; N_CLASSES]; N_CLASSES] {
        &self.q
    }

    /// `Q^n` by repeated squaring.
    pub fn power(&self, mut n: u64) -> [[f64; N_CLASSES]; N_CLASSES] {
        let mut result = identity();
        let mut base = self.q;
        while n > 0 {
            if n & 1 == 1 {
                result = stochastic_matmul(&result, &base);
            }
            n >>= 1;
            if n > 0 {
                base = stochastic_matmul(&base, &base);
            }
        }
        result
    }

    /// `pi Q^n` for an explicit slice count.
    pub fn evolve_slices(&self, pi: &ErrorVector, n: u64) -> ErrorVector {
        pi.times(&self.power(n))
    }

    /// Parses a whitespace-separated 7x7 matrix, one row per line. Blank
    /// lines and `#` comments are ignored.
    pub fn from_text(text: &str, slice_s: f64) -> Result<Self, NoiseError> {
        let mut q = [[0.0; N_CLASSES]; N_CLASSES];
        let mut rows = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if rows == N_CLASSES {
                return Err(NoiseError::MatrixParse(format!("line {}: more than 7 rows", lineno + 1)));
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(f64::from_str)
                .collect::<Result<_, _>>()
                .map_err(|e| NoiseError::MatrixParse(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != N_CLASSES {
                return Err(NoiseError::MatrixParse(format!(
                    "line {}: expected 7 columns, found {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            q[rows].copy_from_slice(&vals);
            rows += 1;
        }
        if rows != N_CLASSES {
            return Err(NoiseError::MatrixParse(format!("expected 7 rows, found {rows}")));
        }
        Self::new(q, slice_s)
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.q {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// `pi(0) Q^n` with `n = ceil(t / dt)`.
pub fn evolve_error_vector(
    pi: &ErrorVector,
    q: &TransitionMatrix,
    t_s: f64,
) -> Result<ErrorVector, NoiseError> {
    let n = ceil_slices(t_s, q.slice_s()).ok_or(NoiseError::InvalidTime(t_s))?;
    Ok(q.evolve_slices(pi, n))
}

/// Closed form of `(Q_depol^n)_00 = [1 + 3^(1-n) (3 - 4p)^n] / 4`.
///
/// Evaluated as `[1 + 3 (1 - 4p/3)^n] / 4`, which is the same expression
/// without the overflow in `3^(1-n)` for large `n`.
pub fn depolarizing_q00(p: f64, n: u64) -> f64 {
    debug_assert!((0.0..=0.75).contains(&p), "p = {p} outside [0, 3/4]");
    if n == 0 {
        return 1.0;
    }
    let shrink = -4.0 * p / 3.0;
    let decay = if shrink > -1.0 {
        (n as f64 * shrink.ln_1p()).exp()
    } else {
        (1.0 + shrink).powf(n as f64)
    };
    (1.0 + 3.0 * decay) / 4.0
}

/// Slice count `round(tau / dt)` used for calibration.
pub fn coherence_slices(coherence_time_s: f64, slice_s: f64) -> Result<u64, NoiseError> {
    match round_slices(coherence_time_s, slice_s) {
        Some(n) if n >= 1 => Ok(n),
        _ => Err(NoiseError::InvalidCoherence {
            tau: coherence_time_s,
            slice: slice_s,
        }),
    }
}

/// Depolarizing rate per slice such that the identity survival after one
/// coherence time is exactly `1/e`. Infinite coherence gives `p = 0`.
pub fn calibrate_depolarizing(coherence_time_s: f64, slice_s: f64) -> Result<f64, NoiseError> {
    if coherence_time_s == f64::INFINITY {
        return Ok(0.0);
    }
    if !(coherence_time_s > 0.0 && slice_s > 0.0) {
        return Err(NoiseError::InvalidCoherence {
            tau: coherence_time_s,
            slice: slice_s,
        });
    }
    let n = coherence_slices(coherence_time_s, slice_s)?;
    // p = [3 - 3^((n-1)/n) (4/e - 1)^(1/n)] / 4
    //   = (3/4) [1 - ((4/e - 1) / 3)^(1/n)]
    let target = (4.0 / std::f64::consts::E - 1.0) / 3.0;
    Ok(-0.75 * (target.ln() / n as f64).exp_m1())
}
