//! Command implementations behind the `hyperwit` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperwit::entanglement::{rew_census, Census};
use hyperwit::learn::dataset::write_datasets_csv;
use hyperwit::learn::train::{activation_spectrum, compare_with_witness, write_spectrum_csv, DEFAULT_BETA, DEFAULT_THRESHOLD};
use hyperwit::learn::{build_known_dataset, build_unknown_dataset, train_known, train_unknown, Metrics, OptimizerConfig, TrainSettings};
use hyperwit::qstate::{EvalMode, RngSeed};
use hyperwit::rewstates::SignVector;
use hyperwit::vqc::{vqc_activation, AnsatzConfig, SavedModel};
use hyperwit::witness::{detection_sweep_with, make_witness, DetectionSummary};
use hyperwit::Exec;
use serde::{Deserialize, Serialize};

/// Reference state used when `train-known` is given none on three qubits.
pub const DEFAULT_REFERENCE: &str = "[0, 0, 0, 0, 0, 1, 1, 0]";

#[derive(Debug, Parser)]
#[command(name = "hyperwit", version, about = "Entanglement witnesses for REW hypergraph states")]
pub struct Cli {
    #[command(flatten)]
    pub opts: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entanglement of every REW state; writes census.csv.
    Census,
    /// Exact witness sweep over every REW state; writes activations.csv and summary.json.
    Witness {
        /// Reference sign vector, "[0, 1, ...]" or "01..."
        reference: String,
    },
    /// Trains the ansatz to imitate the exact witness of a reference.
    TrainKnown {
        /// Reference sign vector (default "[0, 0, 0, 0, 0, 1, 1, 0]" on 3 qubits)
        reference: Option<String>,
    },
    /// Trains the ansatz to flag entangled states with cost 1 - F_beta.
    TrainUnknown,
    /// Evaluates a saved model on one state.
    Classify {
        /// Model JSON (trainrun.json from a training command works)
        #[arg(long)]
        model: PathBuf,
        /// Sign vector to classify
        state: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Shots,
}

/// Settings that may come from flags or a JSON config file. Flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub n_qubits: Option<usize>,
    #[arg(long, global = true)]
    pub layers: Option<usize>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// JSON file with any of the settings above (snake_case keys)
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n_qubits: usize,
    pub layers: usize,
    pub shots: u64,
    pub mode: Mode,
    pub beta: f64,
    pub threshold: f64,
    pub seed: u64,
    pub restarts: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_qubits: 3,
            layers: 2,
            shots: 1024,
            mode: Mode::Exact,
            beta: DEFAULT_BETA,
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
            restarts: OptimizerConfig::default().restarts,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    /// Flags over config file over defaults.
    pub fn resolve(flags: &Overrides) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str::<Overrides>(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => Overrides::default(),
        };
        let d = RunConfig::default();
        let cfg = RunConfig {
            n_qubits: flags.n_qubits.or(file.n_qubits).unwrap_or(d.n_qubits),
            layers: flags.layers.or(file.layers).unwrap_or(d.layers),
            shots: flags.shots.or(file.shots).unwrap_or(d.shots),
            mode: flags.mode.or(file.mode).unwrap_or(d.mode),
            beta: flags.beta.or(file.beta).unwrap_or(d.beta),
            threshold: flags.threshold.or(file.threshold).unwrap_or(d.threshold),
            seed: flags.seed.or(file.seed).unwrap_or(d.seed),
            restarts: flags.restarts.or(file.restarts).unwrap_or(d.restarts),
            out_dir: flags.out_dir.clone().or(file.out_dir).unwrap_or(d.out_dir),
        };
        ensure!(cfg.shots > 0, "shots must be positive");
        ensure!(cfg.restarts > 0, "restarts must be positive");
        ensure!(cfg.beta > 0.0 && cfg.beta.is_finite(), "beta must be positive, got {}", cfg.beta);
        ensure!(
            cfg.threshold > 0.0 && cfg.threshold <= 1.0,
            "threshold {} outside (0, 1]",
            cfg.threshold
        );
        Ok(cfg)
    }

    pub fn eval_mode(&self) -> EvalMode {
        match self.mode {
            Mode::Exact => EvalMode::Exact,
            Mode::Shots => EvalMode::Shots {
                shots: self.shots,
                seed: RngSeed(self.seed),
            },
        }
    }

    pub fn ansatz(&self) -> Result<AnsatzConfig> {
        Ok(AnsatzConfig::new(self.n_qubits, self.layers)?)
    }

    fn train_settings(&self) -> Result<TrainSettings> {
        Ok(TrainSettings {
            ansatz: self.ansatz()?,
            optimizer: OptimizerConfig {
                restarts: self.restarts,
                seed: RngSeed(self.seed),
                ..OptimizerConfig::default()
            },
            threshold: self.threshold,
            beta: self.beta,
            mode: self.eval_mode(),
            exec: Exec::default(),
        })
    }
}

/// What a command produced. `ok` is false when the command ran but its
/// postcondition (a successful training run) was not met.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub ok: bool,
    pub report: String,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
    report: String,
}

impl Output {
    fn new(cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
        Ok(Output {
            dir: cfg.out_dir.clone(),
            files: Vec::new(),
            report: String::new(),
        })
    }

    /// Writes `name` through a temporary file in the same directory.
    fn write(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).with_context(|| format!("writing {}", path.display()))?;
        fill(tmp.as_file_mut())?;
        tmp.as_file_mut().flush()?;
        tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.report.push_str(text.as_ref());
        self.report.push('\n');
    }

    fn finish(self, ok: bool) -> Outcome {
        Outcome {
            ok,
            report: self.report,
            files: self.files,
        }
    }
}

fn parse_state(text: &str, n_qubits: usize) -> Result<SignVector> {
    let f: SignVector = text.parse().with_context(|| format!("invalid sign vector {text:?}"))?;
    ensure!(
        f.n_qubits() == n_qubits,
        "{text:?} has {} entries but {n_qubits} qubits need {}",
        f.len(),
        1usize << n_qubits
    );
    Ok(f)
}

fn format_e(e: f64) -> String {
    let s = format!("{e:.9}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = RunConfig::resolve(&cli.opts)?;
    match &cli.command {
        Command::Census => cmd_census(&cfg),
        Command::Witness { reference } => cmd_witness(&cfg, reference),
        Command::TrainKnown { reference } => cmd_train_known(&cfg, reference.as_deref()),
        Command::TrainUnknown => cmd_train_unknown(&cfg),
        Command::Classify { model, state } => cmd_classify(&cfg, model, state),
    }
}

pub fn cmd_census(cfg: &RunConfig) -> Result<Outcome> {
    let census = rew_census(cfg.n_qubits)?;
    let mut out = Output::new(cfg)?;
    out.write("census.csv", |w| Ok(census.write_csv(w)?))?;
    out.line(format!("{} REW states on {} qubits", census.records.len(), cfg.n_qubits));
    for (e, count) in census.histogram() {
        out.line(format!("E={}: {count}", format_e(e)));
    }
    Ok(out.finish(true))
}

/// Contents of `summary.json` written by `witness`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub n_qubits: usize,
    pub mode: Mode,
    pub shots: Option<u64>,
    pub seed: u64,
    pub states: usize,
    #[serde(flatten)]
    pub detection: DetectionSummary,
}

pub fn cmd_witness(cfg: &RunConfig, reference: &str) -> Result<Outcome> {
    let h = parse_state(reference, cfg.n_qubits)?;
    let w = make_witness(&h)?;
    let census = rew_census(cfg.n_qubits)?;
    let report = detection_sweep_with(&w, cfg.eval_mode(), &census, Exec::default())?;
    let summary = WitnessSummary {
        n_qubits: cfg.n_qubits,
        mode: cfg.mode,
        shots: (cfg.mode == Mode::Shots).then_some(cfg.shots),
        seed: cfg.seed,
        states: report.records.len(),
        detection: report.summary(),
    };
    let mut out = Output::new(cfg)?;
    out.write("activations.csv", |w| Ok(report.write_csv(w)?))?;
    out.json("summary.json", &summary)?;
    out.line(format!("reference {h}, alpha = {:.6}", w.alpha()));
    out.line(format!("detected {} of {} states", report.detected_count, report.records.len()));
    for (e, count) in &summary.detection.detected_e_histogram {
        out.line(format!("  E={e}: {count}"));
    }
    Ok(out.finish(true))
}

#[derive(Debug, Clone, Serialize)]
struct KnownMetrics<'a> {
    train: &'a Metrics,
    all_states: &'a Metrics,
    mean_cross_entropy_vs_exact: f64,
    mean_abs_activation_gap: f64,
    max_abs_activation_gap: f64,
    disagreements: usize,
    restarts_run: usize,
    successful_restarts: usize,
    succeeded: bool,
}

pub fn cmd_train_known(cfg: &RunConfig, reference: Option<&str>) -> Result<Outcome> {
    let reference = match reference {
        Some(r) => r,
        None if cfg.n_qubits == 3 => DEFAULT_REFERENCE,
        None => bail!("a reference state is required for {} qubits", cfg.n_qubits),
    };
    let h = parse_state(reference, cfg.n_qubits)?;
    let settings = cfg.train_settings()?;
    let dataset = build_known_dataset(&h, RngSeed(cfg.seed))?;
    let outcome = train_known(&h, &dataset, &settings)?;
    let census = rew_census(cfg.n_qubits)?;
    let run = &outcome.run;
    let cmp = compare_with_witness(&h, &settings.ansatz, &run.theta, cfg.threshold, &census, Exec::default())?;

    let mut out = Output::new(cfg)?;
    out.write("dataset.csv", |w| Ok(write_datasets_csv(w, &[&dataset])?))?;
    out.json("trainrun.json", run)?;
    out.write("activations.csv", |w| Ok(cmp.write_csv(w)?))?;
    out.json(
        "metrics.json",
        &KnownMetrics {
            train: &run.train_metrics,
            all_states: &run.test_metrics,
            mean_cross_entropy_vs_exact: cmp.mean_cross_entropy,
            mean_abs_activation_gap: cmp.mean_abs_gap,
            max_abs_activation_gap: cmp.max_abs_gap,
            disagreements: cmp.disagreements,
            restarts_run: run.restarts_run,
            successful_restarts: outcome.successful_restarts(),
            succeeded: run.succeeded,
        },
    )?;
    let m = &run.test_metrics;
    out.line(format!(
        "best restart {} of {}: cross entropy {:.6}",
        run.restart, run.restarts_run, run.cost
    ));
    out.line(format!(
        "all {} states: tp={} fp={} fn={} tn={}",
        m.tp + m.fp + m.fn_ + m.tn,
        m.tp,
        m.fp,
        m.fn_,
        m.tn
    ));
    out.line(format!(
        "vs exact witness: mean cross entropy {:.5}, mean |gap| {:.5}, max |gap| {:.5}",
        cmp.mean_cross_entropy, cmp.mean_abs_gap, cmp.max_abs_gap
    ));
    if !run.succeeded {
        out.line("training failed: no restart reproduced the exact witness");
    }
    Ok(out.finish(run.succeeded))
}

#[derive(Debug, Clone, Serialize)]
struct MetricsRow<'a> {
    split: &'a str,
    #[serde(flatten)]
    metrics: &'a Metrics,
}

#[derive(Debug, Clone, Serialize)]
struct DetectedState {
    state_id: u64,
    sign_vector: SignVector,
    activation: f64,
    #[serde(rename = "E")]
    measure: f64,
}

#[derive(Debug, Clone, Serialize)]
struct UnknownMetrics<'a> {
    beta: f64,
    threshold: f64,
    table: Vec<MetricsRow<'a>>,
    detected: Vec<DetectedState>,
    detected_e_histogram: BTreeMap<String, usize>,
    max_activation: f64,
    restarts_run: usize,
    successful_restarts: usize,
    succeeded: bool,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undef".to_string(), |x| format!("{x:.4}"))
}

pub fn cmd_train_unknown(cfg: &RunConfig) -> Result<Outcome> {
    let settings = cfg.train_settings()?;
    let (train, test) = build_unknown_dataset(cfg.n_qubits, RngSeed(cfg.seed))?;
    let outcome = train_unknown(&train, &test, &settings)?;
    let run = &outcome.run;
    let census: Census = rew_census(cfg.n_qubits)?;
    let spectrum = activation_spectrum(&settings.ansatz, &run.theta, cfg.threshold, &census)?;
    let half: Vec<_> = spectrum
        .iter()
        .filter(|r| r.sign_vector.is_representative())
        .cloned()
        .collect();
    let detected: Vec<DetectedState> = half
        .iter()
        .filter(|r| r.detected)
        .map(|r| DetectedState {
            state_id: r.state_id.0,
            sign_vector: r.sign_vector.clone(),
            activation: r.activation,
            measure: r.measure,
        })
        .collect();
    let mut histogram = BTreeMap::new();
    for d in &detected {
        *histogram.entry(format_e(d.measure)).or_default() += 1;
    }
    let max_activation = spectrum.iter().map(|r| r.activation).fold(0.0, f64::max);
    let metrics = UnknownMetrics {
        beta: cfg.beta,
        threshold: cfg.threshold,
        table: vec![
            MetricsRow {
                split: "train",
                metrics: &run.train_metrics,
            },
            MetricsRow {
                split: "test",
                metrics: &run.test_metrics,
            },
        ],
        detected,
        detected_e_histogram: histogram,
        max_activation,
        restarts_run: run.restarts_run,
        successful_restarts: outcome.successful_restarts(),
        succeeded: run.succeeded,
    };

    let mut out = Output::new(cfg)?;
    out.write("dataset.csv", |w| Ok(write_datasets_csv(w, &[&train, &test])?))?;
    out.json("trainrun.json", run)?;
    out.write("activations.csv", |w| Ok(write_spectrum_csv(w, &half)?))?;
    out.json("metrics.json", &metrics)?;
    out.line(format!("best restart {} of {}: cost {:.6}", run.restart, run.restarts_run, run.cost));
    out.line(format!("{:<6} {:>7} {:>9} {:>7}", "split", "F_beta", "precision", "recall"));
    for r in &metrics.table {
        out.line(format!(
            "{:<6} {:>7.4} {:>9} {:>7}",
            r.split,
            r.metrics.f_beta,
            fmt_opt(r.metrics.precision),
            fmt_opt(r.metrics.recall)
        ));
    }
    out.line(format!("detected representatives: {}", metrics.detected.len()));
    for d in &metrics.detected {
        out.line(format!(
            "  {} {} activation {:.4} E={}",
            d.state_id,
            d.sign_vector,
            d.activation,
            format_e(d.measure)
        ));
    }
    if !run.succeeded {
        out.line("training failed: no restart reached precision 1 on train and test");
    }
    Ok(out.finish(run.succeeded))
}

pub fn cmd_classify(cfg: &RunConfig, model_path: &Path, state: &str) -> Result<Outcome> {
    let text = fs::read_to_string(model_path).with_context(|| format!("reading model {}", model_path.display()))?;
    let model: SavedModel =
        serde_json::from_str(&text).with_context(|| format!("parsing model {}", model_path.display()))?;
    let ansatz = model.config()?;
    ensure!(
        ansatz.n_qubits == cfg.n_qubits && ansatz.layers == cfg.layers,
        "model has {} qubits and {} layers but the configuration asks for {} and {}",
        ansatz.n_qubits,
        ansatz.layers,
        cfg.n_qubits,
        cfg.layers
    );
    let f = parse_state(state, cfg.n_qubits)?;
    let activation = vqc_activation(&ansatz, &model.theta, &f, cfg.eval_mode())?;
    let verdict = if activation > cfg.threshold {
        "entangled"
    } else {
        "not detected"
    };
    Ok(Outcome {
        ok: true,
        report: format!("activation {activation:.6}\nverdict {verdict}\n"),
        files: Vec::new(),
    })
}
