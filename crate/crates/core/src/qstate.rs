//! Dense statevector simulation.
//!
//! Qubit 0 is the most significant bit of a basis index: on three qubits
//! `|q0 q1 q2>` is stored at index `4*q0 + 2*q1 + q2`, so the top wire of a
//! circuit diagram is the leftmost bit.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;

/// Tolerance on the squared norm of a state.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Seed for every stochastic step (shot sampling, dataset splits, restarts).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Derives an independent child seed for stream `stream` (splitmix64 finalizer).
    pub fn derive(self, stream: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15_u64.wrapping_mul(stream.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl fmt::Display for RngSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Normalised pure state on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Size(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl PureState {
    /// Wraps `amplitudes`, which must have length `2^n_qubits` and unit norm.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::Size(format!(
                "{} amplitudes for {n_qubits} qubits (expected {})",
                amplitudes.len(),
                1usize << n_qubits
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Argument(format!("state has squared norm {norm}")));
        }
        Ok(PureState {
            n_qubits,
            amplitudes,
        })
    }

    /// Rescales `amplitudes` to unit norm. Fails on the zero vector.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Argument("cannot normalise a zero or non-finite vector".into()));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        PureState::from_amplitudes(n_qubits, amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `self ⊗ other`; the qubits of `other` become the least significant ones.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let n = self.n_qubits + other.n_qubits;
        check_qubit_count(n)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Ok(PureState {
            n_qubits: n,
            amplitudes: amps,
        })
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Size(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        apply_unchecked(&mut self.amplitudes, self.n_qubits, gate);
        Ok(())
    }
}

pub fn zero_state(n_qubits: usize) -> Result<PureState> {
    check_qubit_count(n_qubits)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    Ok(PureState {
        n_qubits,
        amplitudes,
    })
}

/// Gate set used by encodings, witnesses and the variational ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    /// `exp(-i angle Y / 2)`.
    Ry { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    /// Phase flip on basis states where every listed qubit is 1.
    Mcz(Vec<usize>),
    Mcx { controls: Vec<usize>, target: usize },
}

impl Gate {
    /// Z on every qubit of `support` jointly: plain Z for one qubit, CZ/MCZ
    /// for more. Synthesis code goes through here so it never branches on size.
    pub fn controlled_z(support: Vec<usize>) -> Gate {
        if support.len() == 1 {
            Gate::Z(support[0])
        } else {
            Gate::Mcz(support)
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) => vec![*q],
            Gate::Ry { qubit, .. } => vec![*qubit],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Mcz(qs) => qs.clone(),
            Gate::Mcx { controls, target } => {
                let mut qs = controls.clone();
                qs.push(*target);
                qs
            }
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Ry { qubit, angle } => Gate::Ry {
                qubit: *qubit,
                angle: -angle,
            },
            other => other.clone(),
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if qs.is_empty() {
            return Err(Error::Argument(format!("{self:?} acts on no qubits")));
        }
        for (i, &q) in qs.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::Index(format!(
                    "{self:?} touches qubit {q} on a {n_qubits}-qubit register"
                )));
            }
            if qs[..i].contains(&q) {
                return Err(Error::Index(format!("{self:?} repeats qubit {q}")));
            }
        }
        if let Gate::Ry { angle, .. } = self {
            if !angle.is_finite() {
                return Err(Error::Argument(format!("non-finite rotation angle {angle}")));
            }
        }
        Ok(())
    }
}

#[inline]
fn bit(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

fn mask_of(n_qubits: usize, qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |m, &q| m | bit(n_qubits, q))
}

fn apply_unchecked(amps: &mut [Complex64], n: usize, gate: &Gate) {
    match gate {
        Gate::H(q) => {
            let m = bit(n, *q);
            for i in (0..amps.len()).filter(|i| i & m == 0) {
                let (a, b) = (amps[i], amps[i | m]);
                amps[i] = (a + b) * FRAC_1_SQRT_2;
                amps[i | m] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Gate::X(q) => {
            let m = bit(n, *q);
            for i in (0..amps.len()).filter(|i| i & m == 0) {
                amps.swap(i, i | m);
            }
        }
        Gate::Z(q) => {
            let m = bit(n, *q);
            for (i, a) in amps.iter_mut().enumerate() {
                if i & m != 0 {
                    *a = -*a;
                }
            }
        }
        Gate::Ry { qubit, angle } => {
            let m = bit(n, *qubit);
            let (s, c) = (angle / 2.0).sin_cos();
            for i in (0..amps.len()).filter(|i| i & m == 0) {
                let (a, b) = (amps[i], amps[i | m]);
                amps[i] = a * c - b * s;
                amps[i | m] = a * s + b * c;
            }
        }
        Gate::Cnot { control, target } => {
            let cm = bit(n, *control);
            let tm = bit(n, *target);
            for i in (0..amps.len()).filter(|i| i & cm != 0 && i & tm == 0) {
                amps.swap(i, i | tm);
            }
        }
        Gate::Mcz(qs) => {
            let m = mask_of(n, qs);
            for (i, a) in amps.iter_mut().enumerate() {
                if i & m == m {
                    *a = -*a;
                }
            }
        }
        Gate::Mcx { controls, target } => {
            let cm = mask_of(n, controls);
            let tm = bit(n, *target);
            for i in (0..amps.len()).filter(|i| i & cm == cm && i & tm == 0) {
                amps.swap(i, i | tm);
            }
        }
    }
}

/// Returns `U|state>` for the unitary of `gate`.
pub fn apply_gate(state: &PureState, gate: &Gate) -> Result<PureState> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// Ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        Ok(Circuit {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(n_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    /// Appends every gate of `other` after the gates of `self`.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Size(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.n_qubits, self.n_qubits
            )));
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(self)
    }

    /// Reversed gate list with each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

pub fn run_circuit(circuit: &Circuit, input: &PureState) -> Result<PureState> {
    if circuit.n_qubits != input.n_qubits {
        return Err(Error::Size(format!(
            "{}-qubit circuit applied to a {}-qubit state",
            circuit.n_qubits, input.n_qubits
        )));
    }
    let mut amps = input.amplitudes.clone();
    for g in &circuit.gates {
        apply_unchecked(&mut amps, circuit.n_qubits, g);
    }
    Ok(PureState {
        n_qubits: input.n_qubits,
        amplitudes: amps,
    })
}

/// `|<a|b>|^2`.
pub fn overlap_probability(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

pub fn basis_probability(state: &PureState, basis_index: usize) -> Result<f64> {
    state
        .amplitudes
        .get(basis_index)
        .map(|a| a.norm_sqr().clamp(0.0, 1.0))
        .ok_or_else(|| {
            Error::Index(format!(
                "basis index {basis_index} out of range for dimension {}",
                state.dim()
            ))
        })
}

/// Fraction of `shots` simulated measurements that land on `observable_index`.
pub fn sample_shots(
    state: &PureState,
    observable_index: usize,
    shots: u64,
    seed: RngSeed,
) -> Result<f64> {
    if shots < 1 {
        return Err(Error::Argument("shot count must be at least 1".into()));
    }
    let p = basis_probability(state, observable_index)?;
    let hits = Binomial::new(shots, p)
        .map_err(|e| Error::Argument(format!("binomial({shots}, {p}): {e}")))?
        .sample(&mut seed.rng());
    Ok(hits as f64 / shots as f64)
}

/// How a register readout is turned into a number: the exact probability,
/// or a shot-sampled estimate of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    #[default]
    Exact,
    Shots { shots: u64, seed: RngSeed },
}

impl EvalMode {
    /// Probability of `|1...1>` in `state`. `stream` picks the sampling
    /// stream in shots mode so independent readouts get independent seeds.
    pub fn all_ones(self, state: &PureState, stream: u64) -> Result<f64> {
        let target = state.dim() - 1;
        match self {
            EvalMode::Exact => basis_probability(state, target),
            EvalMode::Shots { shots, seed } => sample_shots(state, target, shots, seed.derive(stream)),
        }
    }
}
