//! Layered Ry/CNOT ansatz used as a trainable witness.
//!
//! Each layer is a column of Ry rotations followed by a CNOT from every
//! qubit `i` to every qubit `j > i` (lexicographic), and a final Ry column
//! closes the circuit. Three qubits and two layers give the nine angles
//! `theta_0..theta_8`, laid out column by column.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{Circuit, EvalMode, Gate, PureState, RngSeed, MAX_QUBITS};
use crate::rewstates::SignVector;
use crate::witness::{encode, perceptron_activation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub n_qubits: usize,
    pub layers: usize,
}

impl AnsatzConfig {
    pub fn new(n_qubits: usize, layers: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!("{n_qubits} qubits")));
        }
        if layers == 0 {
            return Err(Error::Argument("the ansatz needs at least one layer".into()));
        }
        Ok(AnsatzConfig { n_qubits, layers })
    }

    pub fn param_count(&self) -> usize {
        self.n_qubits * (self.layers + 1)
    }

    pub fn entangling_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n_qubits)
            .flat_map(|i| (i + 1..self.n_qubits).map(move |j| (i, j)))
            .collect()
    }
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig {
            n_qubits: 3,
            layers: 2,
        }
    }
}

/// Rotation angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Params(Vec<f64>);

impl Params {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::Argument(format!("non-finite angle {bad}")));
        }
        Ok(Params(theta))
    }

    pub fn zeros(config: &AnsatzConfig) -> Self {
        Params(vec![0.0; config.param_count()])
    }

    /// Independent uniform angles in `[0, 2 pi)`.
    pub fn random(config: &AnsatzConfig, seed: RngSeed) -> Self {
        let mut rng = seed.rng();
        Params((0..config.param_count()).map(|_| rng.random_range(0.0..TAU)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Params {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Params::new(v)
    }
}

impl From<Params> for Vec<f64> {
    fn from(p: Params) -> Vec<f64> {
        p.0
    }
}

pub fn ansatz_circuit(config: &AnsatzConfig, params: &Params) -> Result<Circuit> {
    if params.len() != config.param_count() {
        return Err(Error::Argument(format!(
            "{} parameters for an ansatz expecting {}",
            params.len(),
            config.param_count()
        )));
    }
    let n = config.n_qubits;
    let pairs = config.entangling_pairs();
    let mut theta = params.as_slice().iter();
    let mut circ = Circuit::new(n)?;
    for layer in 0..=config.layers {
        for qubit in 0..n {
            let angle = *theta.next().expect("length checked above");
            circ.push(Gate::Ry { qubit, angle })?;
        }
        if layer < config.layers {
            for &(control, target) in &pairs {
                circ.push(Gate::Cnot { control, target })?;
            }
        }
    }
    Ok(circ)
}

/// Probability of `|1...1>` after the ansatz acts on the encoded input.
pub fn vqc_activation(
    config: &AnsatzConfig,
    params: &Params,
    input: &SignVector,
    mode: EvalMode,
) -> Result<f64> {
    check_input(config, input)?;
    let stream = input.state_id().map(|id| id.0).unwrap_or(0);
    perceptron_activation(&ansatz_circuit(config, params)?, &encode(input)?, mode, stream)
}

/// Activations of one ansatz over pre-encoded inputs; shot streams are
/// `stream_base + i`.
pub fn activations_on(
    circuit: &Circuit,
    encoded: &[PureState],
    mode: EvalMode,
    stream_base: u64,
) -> Result<Vec<f64>> {
    encoded
        .iter()
        .enumerate()
        .map(|(i, s)| perceptron_activation(circuit, s, mode, stream_base.wrapping_add(i as u64)))
        .collect()
}

fn check_input(config: &AnsatzConfig, input: &SignVector) -> Result<()> {
    if input.n_qubits() != config.n_qubits {
        return Err(Error::Size(format!(
            "{}-qubit input for a {}-qubit ansatz",
            input.n_qubits(),
            config.n_qubits
        )));
    }
    Ok(())
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Argument(format!(
            "threshold {threshold} outside (0, 1]"
        )));
    }
    Ok(())
}

/// Strict `activation > threshold`.
pub fn classify(
    config: &AnsatzConfig,
    params: &Params,
    input: &SignVector,
    threshold: f64,
    mode: EvalMode,
) -> Result<bool> {
    check_threshold(threshold)?;
    Ok(vqc_activation(config, params, input, mode)? > threshold)
}

pub fn classify_activation(activation: f64, threshold: f64) -> bool {
    activation > threshold
}

/// Persisted model: ansatz shape, angles and the seed that produced them.
/// Extra fields are ignored on load, so a full training report also loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub n_qubits: usize,
    pub layers: usize,
    pub seed: RngSeed,
    pub theta: Params,
}

impl SavedModel {
    pub fn config(&self) -> Result<AnsatzConfig> {
        let cfg = AnsatzConfig::new(self.n_qubits, self.layers)?;
        if self.theta.len() != cfg.param_count() {
            return Err(Error::Argument(format!(
                "model stores {} angles but a {}-qubit, {}-layer ansatz needs {}",
                self.theta.len(),
                self.n_qubits,
                self.layers,
                cfg.param_count()
            )));
        }
        Ok(cfg)
    }
}
