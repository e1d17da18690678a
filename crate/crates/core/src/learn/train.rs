use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, LabeledState, Provenance, Split};
use super::metrics::{compute_metrics, cross_entropy, mean_soft_cross_entropy, Metrics};
use super::optimizer::{minimize, Minimum, OptimizerConfig};
use crate::entanglement::{rew_census, Census};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::qstate::{EvalMode, PureState, RngSeed};
use crate::rewstates::{SignVector, StateId};
use crate::vqc::{activations_on, ansatz_circuit, classify_activation, AnsatzConfig, Params, SavedModel};
use crate::witness::{detection_sweep_with, encode, make_witness};

/// Restarts are launched in rounds of this size; warm starts only draw on
/// minima from earlier rounds, so results do not depend on thread timing.
pub const RESTART_BATCH: usize = 8;
/// Standard deviation of the jitter applied to a warm-start point.
pub const WARM_START_SIGMA: f64 = 0.3;
/// Number of best minima a warm start may be drawn from.
pub const WARM_POOL_SIZE: usize = 4;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 1.0 / 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Known,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct TrainSettings {
    pub ansatz: AnsatzConfig,
    pub optimizer: OptimizerConfig,
    pub threshold: f64,
    pub beta: f64,
    /// Readout used inside the cost. Reported metrics are always exact.
    pub mode: EvalMode,
    pub exec: Exec,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            ansatz: AnsatzConfig::default(),
            optimizer: OptimizerConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            beta: DEFAULT_BETA,
            mode: EvalMode::Exact,
            exec: Exec::default(),
        }
    }
}

impl TrainSettings {
    fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Argument(format!(
                "threshold {} outside (0, 1]",
                self.threshold
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Argument(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// One optimiser run inside a training session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub warm_started: bool,
    pub cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub theta: Params,
    pub train_metrics: Metrics,
    pub test_metrics: Metrics,
    pub succeeded: bool,
}

/// The selected run of a training session. The `n_qubits`, `layers`,
/// `seed` and `theta` fields make the JSON loadable as a [`SavedModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub task: Task,
    pub n_qubits: usize,
    pub layers: usize,
    pub seed: RngSeed,
    pub theta: Params,
    pub threshold: f64,
    pub beta: f64,
    pub restart: usize,
    pub restarts_run: usize,
    pub cost: f64,
    pub cost_trace: Vec<f64>,
    pub train_metrics: Metrics,
    pub test_metrics: Metrics,
    /// Whether the run meets the task's success condition, see
    /// [`TrainOutcome::succeeded`].
    pub succeeded: bool,
}

impl TrainRun {
    pub fn config(&self) -> AnsatzConfig {
        AnsatzConfig {
            n_qubits: self.n_qubits,
            layers: self.layers,
        }
    }

    pub fn model(&self) -> SavedModel {
        SavedModel {
            n_qubits: self.n_qubits,
            layers: self.layers,
            seed: self.seed,
            theta: self.theta.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub run: TrainRun,
    pub restarts: Vec<RestartSummary>,
}

impl TrainOutcome {
    /// Known task: the learnt classifier reproduces the exact witness on
    /// every state. Unknown task: precision 1 on train and test with at
    /// least one true positive on each.
    pub fn succeeded(&self) -> bool {
        self.run.succeeded
    }

    pub fn successful_restarts(&self) -> usize {
        self.restarts.iter().filter(|r| r.succeeded).count()
    }
}

struct Prepared {
    encoded: Vec<PureState>,
    labels: Vec<bool>,
}

impl Prepared {
    fn new(items: &[LabeledState]) -> Result<Self> {
        Ok(Prepared {
            encoded: items.iter().map(|s| encode(&s.sign_vector)).collect::<Result<_>>()?,
            labels: items.iter().map(|s| s.label).collect(),
        })
    }

    fn activations(&self, ansatz: &AnsatzConfig, theta: &[f64], mode: EvalMode, stream: u64) -> Result<Vec<f64>> {
        let circuit = ansatz_circuit(ansatz, &Params::new(theta.to_vec())?)?;
        activations_on(&circuit, &self.encoded, mode, stream)
    }

    fn metrics(&self, acts: &[f64], threshold: f64, beta: f64) -> Result<Metrics> {
        let preds: Vec<bool> = acts.iter().map(|&a| classify_activation(a, threshold)).collect();
        let mut m = compute_metrics(&preds, &self.labels, beta)?;
        m.cross_entropy = Some(cross_entropy(&self.labels, acts)?);
        Ok(m)
    }
}

fn check_dataset(d: &Dataset, ansatz: &AnsatzConfig) -> Result<()> {
    if d.n_qubits != ansatz.n_qubits {
        return Err(Error::Size(format!(
            "{}-qubit dataset for a {}-qubit ansatz",
            d.n_qubits, ansatz.n_qubits
        )));
    }
    if d.is_empty() {
        return Err(Error::Argument("empty dataset".into()));
    }
    Ok(())
}

/// Every REW state labelled by whether the exact witness of `reference`
/// detects it.
pub fn known_evaluation_set(reference: &SignVector, census: &Census, exec: Exec) -> Result<Dataset> {
    let w = make_witness(reference)?;
    let report = detection_sweep_with(&w, EvalMode::Exact, census, exec)?;
    Ok(Dataset {
        n_qubits: reference.n_qubits(),
        items: report
            .records
            .iter()
            .map(|r| LabeledState {
                state_id: r.state_id,
                sign_vector: r.sign_vector.clone(),
                label: r.detected,
            })
            .collect(),
        split: Split::Test,
        provenance: Provenance::Known {
            reference: reference.clone(),
        },
        seed: RngSeed(0),
    })
}

type Cost<'a> = dyn Fn(&[f64], u64) -> Result<f64> + Sync + 'a;

struct RestartResult {
    restart: usize,
    warm_started: bool,
    minimum: Minimum,
}

fn start_point(
    settings: &TrainSettings,
    restart: usize,
    pool: &[&RestartResult],
) -> (Vec<f64>, bool) {
    let dim = settings.ansatz.param_count();
    let mut rng = settings.optimizer.seed.derive(restart as u64).rng();
    if restart % 2 == 1 && !pool.is_empty() {
        let base = &pool[(restart / 2) % pool.len()].minimum.params;
        let jitter = Normal::new(0.0, WARM_START_SIGMA).expect("valid sigma");
        (base.iter().map(|v| v + jitter.sample(&mut rng)).collect(), true)
    } else {
        ((0..dim).map(|_| rng.random_range(0.0..TAU)).collect(), false)
    }
}

/// Runs `settings.optimizer.restarts` minimisations of `cost`. Even
/// restarts start from uniform random angles; odd ones, once an earlier
/// round has produced a minimum below the warm-start threshold, start from
/// a jittered copy of one of the best such minima.
fn run_restarts(settings: &TrainSettings, cost: &Cost<'_>) -> Result<Vec<RestartResult>> {
    let opt = &settings.optimizer;
    let mut done: Vec<RestartResult> = Vec::with_capacity(opt.restarts);
    while done.len() < opt.restarts {
        let mut ranked: Vec<&RestartResult> = done.iter().collect();
        ranked.sort_by(|a, b| a.minimum.cost.total_cmp(&b.minimum.cost).then(a.restart.cmp(&b.restart)));
        let cutoff = match (opt.warm_start_threshold, ranked.first()) {
            (Some(t), _) => t,
            (None, Some(best)) => 1.5 * best.minimum.cost,
            (None, None) => f64::NEG_INFINITY,
        };
        let pool: Vec<&RestartResult> = ranked
            .into_iter()
            .filter(|r| r.minimum.cost <= cutoff)
            .take(WARM_POOL_SIZE)
            .collect();

        let first = done.len();
        let last = (first + RESTART_BATCH).min(opt.restarts);
        let starts: Vec<(usize, Vec<f64>, bool)> = (first..last)
            .map(|r| {
                let (x0, warm) = start_point(settings, r, &pool);
                (r, x0, warm)
            })
            .collect();
        let round = settings.exec.try_map(starts, |(restart, x0, warm_started)| {
            let streams = RngSeed(restart as u64);
            let mut evaluation = 0u64;
            let mut failure = None;
            let minimum = minimize(
                |x: &[f64]| {
                    evaluation += 1;
                    match cost(x, streams.derive(evaluation).0) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                &x0,
                opt,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(RestartResult {
                restart,
                warm_started,
                minimum: minimum?,
            })
        })?;
        done.extend(round);
    }
    Ok(done)
}

fn summarize(
    settings: &TrainSettings,
    results: Vec<RestartResult>,
    train: &Prepared,
    test: &Prepared,
    success: impl Fn(&Metrics, &Metrics) -> bool + Sync,
) -> Result<Vec<(RestartSummary, Vec<f64>)>> {
    settings.exec.try_map(results, |r| {
        let theta = &r.minimum.params;
        let train_metrics = train.metrics(
            &train.activations(&settings.ansatz, theta, EvalMode::Exact, 0)?,
            settings.threshold,
            settings.beta,
        )?;
        let test_metrics = test.metrics(
            &test.activations(&settings.ansatz, theta, EvalMode::Exact, 0)?,
            settings.threshold,
            settings.beta,
        )?;
        let succeeded = success(&train_metrics, &test_metrics);
        Ok((
            RestartSummary {
                restart: r.restart,
                warm_started: r.warm_started,
                cost: r.minimum.cost,
                iterations: r.minimum.iterations,
                evaluations: r.minimum.evaluations,
                converged: r.minimum.converged,
                theta: Params::new(theta.clone())?,
                train_metrics,
                test_metrics,
                succeeded,
            },
            r.minimum.trace,
        ))
    })
}

fn finish<K: PartialOrd>(
    task: Task,
    settings: &TrainSettings,
    mut runs: Vec<(RestartSummary, Vec<f64>)>,
    key: impl Fn(&RestartSummary) -> K,
) -> Result<TrainOutcome> {
    let best = (0..runs.len())
        .reduce(|a, b| {
            // strictly better only, so ties keep the earlier restart
            if key(&runs[b].0) < key(&runs[a].0) {
                b
            } else {
                a
            }
        })
        .ok_or_else(|| Error::Argument("no restarts were run".into()))?;
    let trace = std::mem::take(&mut runs[best].1);
    let chosen = runs[best].0.clone();
    let restarts_run = runs.len();
    Ok(TrainOutcome {
        run: TrainRun {
            task,
            n_qubits: settings.ansatz.n_qubits,
            layers: settings.ansatz.layers,
            seed: settings.optimizer.seed,
            theta: chosen.theta,
            threshold: settings.threshold,
            beta: settings.beta,
            restart: chosen.restart,
            restarts_run,
            cost: chosen.cost,
            cost_trace: trace,
            train_metrics: chosen.train_metrics,
            test_metrics: chosen.test_metrics,
            succeeded: chosen.succeeded,
        },
        restarts: runs.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Fits the ansatz to the labels of `dataset` by minimising the summed
/// cross entropy. Test metrics cover every REW state, labelled by the exact
/// witness of `reference`. The run with the lowest cost is returned.
pub fn train_known(reference: &SignVector, dataset: &Dataset, settings: &TrainSettings) -> Result<TrainOutcome> {
    settings.validate()?;
    check_dataset(dataset, &settings.ansatz)?;
    let census = rew_census(reference.n_qubits())?;
    let eval_set = known_evaluation_set(reference, &census, settings.exec)?;
    check_dataset(&eval_set, &settings.ansatz)?;

    let train = Prepared::new(&dataset.items)?;
    let test = Prepared::new(&eval_set.items)?;
    let cost = |theta: &[f64], stream: u64| -> Result<f64> {
        let acts = train.activations(&settings.ansatz, theta, settings.mode, stream)?;
        cross_entropy(&train.labels, &acts)
    };
    let results = run_restarts(settings, &cost)?;
    let runs = summarize(settings, results, &train, &test, |_, test| {
        test.fp == 0 && test.fn_ == 0 && test.tp > 0
    })?;
    finish(Task::Known, settings, runs, |r| (r.cost, r.restart))
}

/// Trains against entangled/separable labels with cost `1 - F_beta` at the
/// settings' threshold.
///
/// Selection prefers runs with perfect training precision and at least one
/// detection, then lower cost, then the earlier restart. With a small beta
/// the cost alone could rank a run with one false positive and full recall
/// above a sound run with tiny recall, so soundness is checked first.
pub fn train_unknown(train: &Dataset, test: &Dataset, settings: &TrainSettings) -> Result<TrainOutcome> {
    settings.validate()?;
    check_dataset(train, &settings.ansatz)?;
    check_dataset(test, &settings.ansatz)?;
    let train_set = Prepared::new(&train.items)?;
    let test_set = Prepared::new(&test.items)?;
    let cost = |theta: &[f64], stream: u64| -> Result<f64> {
        let acts = train_set.activations(&settings.ansatz, theta, settings.mode, stream)?;
        let preds: Vec<bool> = acts.iter().map(|&a| classify_activation(a, settings.threshold)).collect();
        Ok(1.0 - compute_metrics(&preds, &train_set.labels, settings.beta)?.f_beta)
    };
    let results = run_restarts(settings, &cost)?;
    let runs = summarize(settings, results, &train_set, &test_set, |tr, te| {
        tr.is_sound() && te.is_sound()
    })?;
    finish(Task::Unknown, settings, runs, |r| {
        (!r.train_metrics.is_sound(), r.cost, r.restart)
    })
}

/// Learnt versus exact activation for one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub state_id: StateId,
    pub sign_vector: SignVector,
    pub exact_activation: f64,
    pub learnt_activation: f64,
    #[serde(rename = "E")]
    pub measure: f64,
    pub exact_detected: bool,
    pub learnt_detected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessComparison {
    pub rows: Vec<ComparisonRow>,
    pub mean_abs_gap: f64,
    pub max_abs_gap: f64,
    /// Mean binary cross entropy of the learnt activations against the
    /// exact ones used as soft targets.
    pub mean_cross_entropy: f64,
    pub disagreements: usize,
}

impl WitnessComparison {
    /// CSV with header
    /// `state_id,sign_vector,exact_activation,learnt_activation,E,exact_detected,learnt_detected`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "state_id",
            "sign_vector",
            "exact_activation",
            "learnt_activation",
            "E",
            "exact_detected",
            "learnt_detected",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.state_id.to_string(),
                r.sign_vector.to_string(),
                format!("{:.12}", r.exact_activation),
                format!("{:.12}", r.learnt_activation),
                format!("{:.12}", r.measure),
                r.exact_detected.to_string(),
                r.learnt_detected.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Compares a trained ansatz with the exact witness of `reference` over
/// every REW state, in exact mode.
pub fn compare_with_witness(
    reference: &SignVector,
    ansatz: &AnsatzConfig,
    params: &Params,
    threshold: f64,
    census: &Census,
    exec: Exec,
) -> Result<WitnessComparison> {
    let w = make_witness(reference)?;
    let report = detection_sweep_with(&w, EvalMode::Exact, census, exec)?;
    let encoded: Vec<PureState> = report
        .records
        .iter()
        .map(|r| encode(&r.sign_vector))
        .collect::<Result<_>>()?;
    let learnt = activations_on(&ansatz_circuit(ansatz, params)?, &encoded, EvalMode::Exact, 0)?;
    let rows: Vec<ComparisonRow> = report
        .records
        .iter()
        .zip(&learnt)
        .map(|(r, &a)| ComparisonRow {
            state_id: r.state_id,
            sign_vector: r.sign_vector.clone(),
            exact_activation: r.activation,
            learnt_activation: a,
            measure: r.measure,
            exact_detected: r.detected,
            learnt_detected: classify_activation(a, threshold),
        })
        .collect();
    let gaps: Vec<f64> = rows
        .iter()
        .map(|r| (r.learnt_activation - r.exact_activation).abs())
        .collect();
    let exact: Vec<f64> = rows.iter().map(|r| r.exact_activation).collect();
    Ok(WitnessComparison {
        mean_abs_gap: gaps.iter().sum::<f64>() / gaps.len() as f64,
        max_abs_gap: gaps.iter().copied().fold(0.0, f64::max),
        mean_cross_entropy: mean_soft_cross_entropy(&exact, &learnt)?,
        disagreements: rows.iter().filter(|r| r.exact_detected != r.learnt_detected).count(),
        rows,
    })
}

/// Activation of a trained ansatz on one REW state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub state_id: StateId,
    pub sign_vector: SignVector,
    pub activation: f64,
    #[serde(rename = "E")]
    pub measure: f64,
    pub detected: bool,
}

/// Exact activations over every state in `census`.
pub fn activation_spectrum(
    ansatz: &AnsatzConfig,
    params: &Params,
    threshold: f64,
    census: &Census,
) -> Result<Vec<SpectrumRow>> {
    let circuit = ansatz_circuit(ansatz, params)?;
    census
        .records
        .iter()
        .map(|r| {
            let a = activations_on(&circuit, &[encode(&r.sign_vector)?], EvalMode::Exact, 0)?[0];
            Ok(SpectrumRow {
                state_id: r.state_id,
                sign_vector: r.sign_vector.clone(),
                activation: a,
                measure: r.measure,
                detected: classify_activation(a, threshold),
            })
        })
        .collect()
}

/// CSV with header `state_id,sign_vector,activation,E,detected`.
pub fn write_spectrum_csv<W: Write>(out: W, rows: &[SpectrumRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state_id", "sign_vector", "activation", "E", "detected"])?;
    for r in rows {
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
