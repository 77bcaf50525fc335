//! Pauli labels (modulo phase) and the sampled-error frame used by swap
//! trials.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Pauli {
    #[default]
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Has an X component: flips a computational-basis measurement.
    pub fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Has a Z component: flips an X-basis measurement.
    pub fn z_bit(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// Group product, phase dropped.
    pub fn compose(self, other: Pauli) -> Pauli {
        Pauli::from_bits(self.x_bit() ^ other.x_bit(), self.z_bit() ^ other.z_bit())
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Pauli::ALL[i & 3]
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TwoQubitPauli(pub Pauli, pub Pauli);

impl TwoQubitPauli {
    pub const IDENTITY: TwoQubitPauli = TwoQubitPauli(Pauli::I, Pauli::I);

    /// `4 * first + second`; `I⊗I` is index 0.
    pub fn index(self) -> usize {
        4 * self.0.index() + self.1.index()
    }

    pub fn from_index(i: usize) -> Self {
        TwoQubitPauli(Pauli::from_index(i / 4), Pauli::from_index(i % 4))
    }

    /// The fifteen non-identity labels in weight order (`IX, IY, ..., ZZ`).
    pub fn non_identity() -> impl Iterator<Item = TwoQubitPauli> {
        (1..16).map(TwoQubitPauli::from_index)
    }

    pub fn compose(self, other: TwoQubitPauli) -> Self {
        TwoQubitPauli(self.0.compose(other.0), self.1.compose(other.1))
    }

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }
}

impl fmt::Display for TwoQubitPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0, self.1)
    }
}

/// Sampling weights over the 15 non-identity two-qubit Paulis, indexed as
/// [`TwoQubitPauli::non_identity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliWeights(pub [f64; 15]);

impl Default for PauliWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl PauliWeights {
    pub fn uniform() -> Self {
        PauliWeights([1.0 / 15.0; 15])
    }

    /// All weight on a single label.
    pub fn concentrated(label: TwoQubitPauli) -> Self {
        assert!(!label.is_identity(), "identity is not a gate error");
        let mut w = [0.0; 15];
        w[label.index() - 1] = 1.0;
        PauliWeights(w)
    }

    pub fn weight(&self, label: TwoQubitPauli) -> f64 {
        match label.index() {
            0 => 0.0,
            i => self.0[i - 1],
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.0.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err("weights must be finite and non-negative".into());
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("weights must sum to 1 (sum = {sum})"));
        }
        Ok(())
    }

    fn pick(&self, u: f64) -> TwoQubitPauli {
        let mut acc = 0.0;
        let mut last = 1;
        for (i, w) in self.0.iter().enumerate() {
            if *w > 0.0 {
                last = i + 1;
            }
            acc += w;
            if u < acc {
                return TwoQubitPauli::from_index(i + 1);
            }
        }
        TwoQubitPauli::from_index(last)
    }
}

/// Accumulated error on the two measured qubits plus the measurement-error
/// flags of their readouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PauliFrame {
    pub label: TwoQubitPauli,
    pub flips: [bool; 2],
}

impl PauliFrame {
    pub fn apply(&mut self, error: TwoQubitPauli) {
        self.label = self.label.compose(error);
    }

    /// Net readout errors of a swap that measures the first qubit in the X
    /// basis and the second in the Z basis.
    pub fn readout_errors(&self) -> [bool; 2] {
        [self.label.0.z_bit() ^ self.flips[0], self.label.1.x_bit() ^ self.flips[1]]
    }

    /// Pauli left on the end-to-end pair after the receiver applies the
    /// corrections announced by the (possibly wrong) readouts: a wrong
    /// X-basis bit leaves Z, a wrong Z-basis bit leaves X.
    pub fn swap_residual(&self) -> Pauli {
        let [wrong_x_basis, wrong_z_basis] = self.readout_errors();
        Pauli::from_bits(wrong_z_basis, wrong_x_basis)
    }
}

/// Draws a two-qubit gate error: identity with probability `1 - p_g`,
/// otherwise one of the 15 labels by weight.
///
/// Always consumes exactly two uniforms (decision, label) so streams stay
/// aligned across parameter values.
pub fn sample_two_qubit_gate_error<R: Rng + ?Sized>(
    rng: &mut R,
    p_gate: f64,
    weights: &PauliWeights,
) -> TwoQubitPauli {
    let noisy = rng.random::<f64>() < p_gate;
    let label = weights.pick(rng.random::<f64>());
    if noisy {
        label
    } else {
        TwoQubitPauli::IDENTITY
    }
}

/// Reported outcome: `outcome XOR Bernoulli(p_meas)`. One uniform.
pub fn flip_measurement<R: Rng + ?Sized>(rng: &mut R, p_meas: f64, outcome: bool) -> bool {
    outcome ^ (rng.random::<f64>() < p_meas)
}

/// Uniformly random Pauli. One uniform.
pub fn uniform_pauli<R: Rng + ?Sized>(rng: &mut R) -> Pauli {
    Pauli::from_index(((rng.random::<f64>() * 4.0) as usize).min(3))
}
