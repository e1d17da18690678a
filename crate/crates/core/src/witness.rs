//! Projective entanglement witnesses `W = alpha(H) I - |H><H|` built on a
//! REW reference state `|H>`.
//!
//! `Tr[W rho] = alpha - |<H|psi>|^2`, and the fidelity is read out as the
//! probability of `|1...1>` after `U_w(H) U_i(psi) |0...0>`. A state is
//! certified entangled when that activation exceeds `alpha`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::entanglement::{
    bucket_value, entanglement_measure, measure_bucket, rew_census_with, Census, SEPARABLE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::qstate::{run_circuit, zero_state, Circuit, EvalMode, PureState};
use crate::rewstates::{encoding_circuit, rew_state, witness_circuit, SignVector, StateId};

/// Slack on the strict `activation > alpha` comparison, absorbing rounding
/// in the circuit simulation.
pub const DETECTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSpec {
    reference: SignVector,
    alpha: f64,
    circuit: Circuit,
}

impl WitnessSpec {
    pub fn reference(&self) -> &SignVector {
        &self.reference
    }

    /// Detection threshold: the best overlap of the reference with any
    /// biseparable state.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Entanglement `E = 1 - alpha` of the reference.
    pub fn reference_measure(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Fidelity of `input` with the reference, read out through the circuit.
    pub fn activation(&self, input: &SignVector, mode: EvalMode) -> Result<f64> {
        if input.n_qubits() != self.reference.n_qubits() {
            return Err(Error::Size(format!(
                "{}-qubit input for a {}-qubit witness",
                input.n_qubits(),
                self.reference.n_qubits()
            )));
        }
        let stream = input.state_id().map(|id| id.0).unwrap_or(0);
        perceptron_activation(&self.circuit, &encode(input)?, mode, stream)
    }

    /// `alpha - activation`; negative means `input` is certified entangled.
    pub fn value(&self, input: &SignVector, mode: EvalMode) -> Result<f64> {
        Ok(self.alpha - self.activation(input, mode)?)
    }

    pub fn detects(&self, activation: f64) -> bool {
        activation > self.alpha + DETECTION_TOLERANCE
    }
}

/// `U_i(f) |0...0>`.
pub fn encode(f: &SignVector) -> Result<PureState> {
    run_circuit(&encoding_circuit(f), &zero_state(f.n_qubits())?)
}

/// Runs `weights` on an encoded input and reads out `|1...1>`.
pub fn perceptron_activation(
    weights: &Circuit,
    encoded: &PureState,
    mode: EvalMode,
    stream: u64,
) -> Result<f64> {
    mode.all_ones(&run_circuit(weights, encoded)?, stream)
}

/// Builds the witness on `reference`, rejecting separable references.
pub fn make_witness(reference: &SignVector) -> Result<WitnessSpec> {
    if reference.n_qubits() < 2 {
        return Err(Error::Argument("a witness needs at least 2 qubits".into()));
    }
    let e = entanglement_measure(&rew_state(reference))?;
    if e.measure < SEPARABLE_TOLERANCE {
        return Err(Error::SeparableReference(e.measure));
    }
    Ok(WitnessSpec {
        reference: reference.clone(),
        alpha: e.alpha,
        circuit: witness_circuit(reference),
    })
}

pub fn witness_value(w: &WitnessSpec, input: &SignVector, mode: EvalMode) -> Result<f64> {
    w.value(input, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub state_id: StateId,
    pub sign_vector: SignVector,
    pub activation: f64,
    #[serde(rename = "E")]
    pub measure: f64,
    pub detected: bool,
}

#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub reference: SignVector,
    pub alpha: f64,
    /// One record per REW state, in state-id order.
    pub records: Vec<DetectionRecord>,
    pub detected_count: usize,
}

/// JSON summary of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub reference: SignVector,
    pub alpha: f64,
    pub detected_count: usize,
    /// Detected states grouped by their `E`, keyed by the decimal value.
    pub detected_e_histogram: BTreeMap<String, usize>,
}

impl DetectionReport {
    pub fn detected(&self) -> impl Iterator<Item = &DetectionRecord> {
        self.records.iter().filter(|r| r.detected)
    }

    /// Representatives only (`f(0) = 0`): activations are identical on
    /// complementary pairs, so this half carries the whole spectrum.
    pub fn half_spectrum(&self) -> Vec<&DetectionRecord> {
        self.records
            .iter()
            .filter(|r| r.sign_vector.is_representative())
            .collect()
    }

    pub fn summary(&self) -> DetectionSummary {
        let mut hist: BTreeMap<i64, usize> = BTreeMap::new();
        for r in self.detected() {
            *hist.entry(measure_bucket(r.measure)).or_default() += 1;
        }
        DetectionSummary {
            reference: self.reference.clone(),
            alpha: self.alpha,
            detected_count: self.detected_count,
            detected_e_histogram: hist
                .into_iter()
                .map(|(b, c)| (bucket_value(b).to_string(), c))
                .collect(),
        }
    }

    /// CSV with header `state_id,sign_vector,activation,E,detected`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state_id", "sign_vector", "activation", "E", "detected"])?;
        for r in &self.records {
            w.write_record([
                r.state_id.to_string(),
                r.sign_vector.to_string(),
                format!("{:.12}", r.activation),
                format!("{:.12}", r.measure),
                r.detected.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn detection_sweep(w: &WitnessSpec, mode: EvalMode) -> Result<DetectionReport> {
    let census = rew_census_with(w.reference.n_qubits(), Exec::default())?;
    detection_sweep_with(w, mode, &census, Exec::default())
}

/// Sweep over every REW state, reusing a precomputed census for `E`.
pub fn detection_sweep_with(
    w: &WitnessSpec,
    mode: EvalMode,
    census: &Census,
    exec: Exec,
) -> Result<DetectionReport> {
    if census.n_qubits != w.reference.n_qubits() {
        return Err(Error::Size(format!(
            "{}-qubit census for a {}-qubit witness",
            census.n_qubits,
            w.reference.n_qubits()
        )));
    }
    let records = exec.try_map(census.records.iter().collect(), |rec| {
        let activation = w.activation(&rec.sign_vector, mode)?;
        Ok::<_, Error>(DetectionRecord {
            state_id: rec.state_id,
            sign_vector: rec.sign_vector.clone(),
            activation,
            measure: rec.measure,
            detected: w.detects(activation),
        })
    })?;
    let detected_count = records.iter().filter(|r| r.detected).count();
    Ok(DetectionReport {
        reference: w.reference.clone(),
        alpha: w.alpha,
        records,
        detected_count,
    })
}
