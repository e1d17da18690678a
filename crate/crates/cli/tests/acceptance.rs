//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::time::{Duration, Instant};

use hyperwit::entanglement::{enumerate_bipartitions, rew_census, schmidt_alpha, Bipartition};
use hyperwit::learn::train::compare_with_witness;
use hyperwit::learn::{build_known_dataset, build_unknown_dataset, f_beta, train_known, train_unknown, TrainSettings};
use hyperwit::qstate::{run_circuit, zero_state, EvalMode, PureState, RngSeed};
use hyperwit::rewstates::{encoding_circuit, enumerate_sign_vectors, witness_circuit, SignVector};
use hyperwit::vqc::{vqc_activation, AnsatzConfig, Params};
use hyperwit::witness::{detection_sweep_with, encode, make_witness, perceptron_activation};
use hyperwit::Exec;
use hyperwit_cli::{cmd_census, RunConfig};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit_secs: u64, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < Duration::from_secs(limit_secs), || {
        format!("took {:.1}s, limit {limit_secs}s", took.as_secs_f64())
    })
}

fn reference() -> SignVector {
    "[0, 0, 0, 0, 0, 1, 1, 0]".parse().unwrap()
}

/// Amplitudes (-1)^f(x) / sqrt(2^n), built without the library.
fn rew_oracle(f: &SignVector) -> Vec<Complex64> {
    let norm = (f.len() as f64).sqrt().recip();
    f.bits()
        .iter()
        .map(|&b| Complex64::new(if b { -norm } else { norm }, 0.0))
        .collect()
}

fn hamming(a: &SignVector, b: &SignVector) -> usize {
    a.bits().iter().zip(b.bits()).filter(|(x, y)| x != y).count()
}

fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn census_criterion() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = cmd_census(&RunConfig {
        out_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let csv = fs::read_to_string(dir.path().join("census.csv")).map_err(|e| e.to_string())?;
    let mut counts = [0usize; 3];
    for line in csv.lines().skip(1) {
        let e: f64 = line.rsplit(',').nth(1).unwrap().parse().map_err(|_| line.to_string())?;
        let slot = [0.0, 0.25, 0.5]
            .iter()
            .position(|b| (e - b).abs() < 1e-9)
            .ok_or_else(|| format!("E={e} off the 0/0.25/0.5 grid"))?;
        counts[slot] += 1;
    }
    ensure(counts == [64, 128, 64], || format!("counts {counts:?}"))?;
    ensure(out.report.contains("E=0: 64\nE=0.25: 128\nE=0.5: 64\n"), || out.report.clone())?;
    within(5, start)?;
    Ok(format!("E=0:64 E=0.25:128 E=0.5:64 in {:.2}s", start.elapsed().as_secs_f64()))
}

fn witness_count_criterion() -> Check {
    let start = Instant::now();
    let census = rew_census(3).map_err(|e| e.to_string())?;
    let maximal: Vec<SignVector> = census
        .records
        .iter()
        .filter(|r| (r.measure - 0.5).abs() < 1e-9)
        .map(|r| r.sign_vector.clone())
        .collect();
    ensure(maximal.len() == 64, || format!("{} maximal references", maximal.len()))?;
    for h in &maximal {
        let w = make_witness(h).map_err(|e| e.to_string())?;
        let report = detection_sweep_with(&w, EvalMode::Exact, &census, Exec::default()).map_err(|e| e.to_string())?;
        ensure(report.detected_count == 18, || format!("{h}: {} detected", report.detected_count))?;
        let hc = h.complement();
        for r in report.detected() {
            if &r.sign_vector == h || r.sign_vector == hc {
                ensure((r.activation - 1.0).abs() < 1e-12, || format!("{h}: spike {}", r.activation))?;
            } else {
                ensure((r.measure - 0.25).abs() < 1e-9, || format!("{h}: detected {} with E={}", r.sign_vector, r.measure))?;
            }
        }
        let found = report.detected().filter(|r| &r.sign_vector == h || r.sign_vector == hc).count();
        ensure(found == 2, || format!("{h}: reference or complement missing"))?;
        ensure(report.records.iter().all(|r| !(r.detected && r.measure < 1e-9)), || {
            format!("{h}: separable state detected")
        })?;
    }
    within(30, start)?;
    Ok(format!("64 references x 18 detections in {:.2}s", start.elapsed().as_secs_f64()))
}

fn activation_oracle_criterion() -> Check {
    let start = Instant::now();
    let states = enumerate_sign_vectors(3).map_err(|e| e.to_string())?;
    let encoded: Vec<PureState> = states.iter().map(|f| encode(f).unwrap()).collect();
    let worst = Exec::default().map(states.clone(), |h| {
        let circuit = witness_circuit(&h);
        states
            .iter()
            .zip(&encoded)
            .map(|(f, s)| {
                let a = perceptron_activation(&circuit, s, EvalMode::Exact, 0).unwrap();
                let oracle = (1.0 - 2.0 * hamming(&h, f) as f64 / 8.0).powi(2);
                (a - oracle).abs()
            })
            .fold(0.0, f64::max)
    });
    let worst = worst.into_iter().fold(0.0, f64::max);
    ensure(worst < 1e-12, || format!("max deviation {worst:e}"))?;
    within(60, start)?;
    Ok(format!("65536 pairs, max deviation {worst:.1e}, {:.2}s", start.elapsed().as_secs_f64()))
}

fn hsgs_criterion() -> Check {
    let mut worst = 0.0f64;
    for f in enumerate_sign_vectors(3).map_err(|e| e.to_string())? {
        let out = run_circuit(&encoding_circuit(&f), &zero_state(3).unwrap()).map_err(|e| e.to_string())?;
        let overlap: Complex64 = rew_oracle(&f)
            .iter()
            .zip(out.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        worst = worst.max((overlap.norm_sqr() - 1.0).abs());
    }
    ensure(worst < 1e-12, || format!("worst fidelity gap {worst:e}"))?;
    Ok(format!("256 encodings, worst |F - 1| {worst:.1e}"))
}

/// Best overlap of `psi` with `phi_A (x) phi_B` for random `phi_A` on the
/// side of `split` with fewer qubits, taking the optimal `phi_B` for each
/// draw: `max_B |<phi_A phi_B|psi>|^2 = || (<phi_A| (x) I) psi ||^2`.
fn product_search(psi: &[Complex64], split: &Bipartition, draws: usize, rng: &mut impl Rng) -> f64 {
    let n = split.n_qubits();
    let a = split.side_a();
    let b = split.side_b();
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    let sub = |x: usize, qs: &[usize]| qs.iter().fold(0, |acc, &q| (acc << 1) | bit(x, q));
    let (da, db) = (1 << a.len(), 1 << b.len());
    // psi reshaped as M[i_a][i_b]
    let mut m = vec![Complex64::new(0.0, 0.0); da * db];
    for (x, amp) in psi.iter().enumerate() {
        m[sub(x, a) * db + sub(x, &b)] = *amp;
    }
    let mut best = 0.0f64;
    for _ in 0..draws {
        let phi = random_unit(rng, da);
        let v: f64 = (0..db)
            .map(|j| (0..da).map(|i| phi[i].conj() * m[i * db + j]).sum::<Complex64>().norm_sqr())
            .sum();
        best = best.max(v);
    }
    best
}

fn schmidt_criterion() -> Check {
    let splits = enumerate_bipartitions(3).map_err(|e| e.to_string())?;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_gap = 0.0f64;
    for s in 0..20u64 {
        let mut rng = RngSeed(0x00AC_CE55).derive(s).rng();
        let psi = random_unit(&mut rng, 8);
        let state = PureState::from_amplitudes(3, psi.clone()).map_err(|e| e.to_string())?;
        let mut alpha = 0.0f64;
        let mut brute = 0.0f64;
        for split in &splits {
            let a = schmidt_alpha(&state, split).map_err(|e| e.to_string())?;
            let found = product_search(&psi, split, 100_000 / splits.len(), &mut rng);
            ensure(found <= a + 1e-9, || format!("state {s} {split}: {found} > {a}"))?;
            alpha = alpha.max(a);
            brute = brute.max(found);
        }
        worst_excess = worst_excess.max(brute - alpha);
        worst_gap = worst_gap.max(alpha - brute);
    }
    ensure(worst_gap < 1e-2, || format!("search stayed {worst_gap} below alpha"))?;
    Ok(format!("20 states, max excess {worst_excess:.1e}, max shortfall {worst_gap:.1e}"))
}

fn f_beta_criterion() -> Check {
    let beta = 1.0 / 30.0;
    let train = format!("{:.4}", f_beta(1.0, 0.1053, beta).map_err(|e| e.to_string())?);
    let test = format!("{:.4}", f_beta(1.0, 0.0256, beta).map_err(|e| e.to_string())?);
    ensure(train == "0.9907" && test == "0.9595", || format!("got {train}, {test}"))?;
    Ok(format!("F(1, 0.1053) = {train}, F(1, 0.0256) = {test}"))
}

fn known_learning_criterion() -> Check {
    let start = Instant::now();
    let h = reference();
    let dataset = build_known_dataset(&h, RngSeed(0)).map_err(|e| e.to_string())?;
    let settings = TrainSettings::default();
    ensure(settings.optimizer.restarts <= 50 && settings.ansatz.layers == 2 && settings.threshold == 0.5, || {
        "unexpected defaults".into()
    })?;
    let outcome = train_known(&h, &dataset, &settings).map_err(|e| e.to_string())?;
    let accepted = if outcome.run.succeeded {
        Some((outcome.run.theta.clone(), outcome.run.restart))
    } else {
        outcome.restarts.iter().find(|r| r.succeeded).map(|r| (r.theta.clone(), r.restart))
    };
    let (theta, restart) = accepted.ok_or_else(|| {
        let m = &outcome.run.test_metrics;
        format!("no restart matched the witness; best tp={} fp={} fn={}", m.tp, m.fp, m.fn_)
    })?;
    let census = rew_census(3).map_err(|e| e.to_string())?;
    let cmp = compare_with_witness(&h, &settings.ansatz, &theta, settings.threshold, &census, Exec::default())
        .map_err(|e| e.to_string())?;
    ensure(cmp.disagreements == 0, || format!("{} disagreements", cmp.disagreements))?;
    ensure(cmp.mean_abs_gap < 0.15, || format!("mean gap {}", cmp.mean_abs_gap))?;
    within(600, start)?;
    Ok(format!(
        "restart {restart}: 18 TP / 0 FP over 256 states, mean |gap| {:.4}, cross entropy vs exact {:.5}, {}/{} restarts matched, {:.1}s",
        cmp.mean_abs_gap,
        cmp.mean_cross_entropy,
        outcome.successful_restarts(),
        outcome.restarts.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn unknown_learning_criterion() -> Check {
    let start = Instant::now();
    let (train, test) = build_unknown_dataset(3, RngSeed(0)).map_err(|e| e.to_string())?;
    ensure(train.positives() == 57 && train.len() - train.positives() == 28, || {
        format!("train split {}/{}", train.positives(), train.len() - train.positives())
    })?;
    let mut settings = TrainSettings::default();
    settings.optimizer.restarts = 100;
    ensure((settings.beta - 1.0 / 30.0).abs() < 1e-15, || "beta".into())?;
    let outcome = train_unknown(&train, &test, &settings).map_err(|e| e.to_string())?;
    let good: Vec<_> = outcome
        .restarts
        .iter()
        .filter(|r| {
            r.train_metrics.precision == Some(1.0)
                && r.test_metrics.precision == Some(1.0)
                && r.train_metrics.recall.is_some_and(|x| x > 0.0)
        })
        .collect();
    ensure(!good.is_empty(), || "no restart reached precision 1 on train and test".into())?;
    let run = &outcome.run;
    let census = rew_census(3).map_err(|e| e.to_string())?;
    let cfg = AnsatzConfig::default();
    let mut by_e: BTreeMap<String, usize> = BTreeMap::new();
    let mut top = 0.0f64;
    for r in census.records.iter().filter(|r| r.sign_vector.is_representative()) {
        let a = vqc_activation(&cfg, &run.theta, &r.sign_vector, EvalMode::Exact).map_err(|e| e.to_string())?;
        top = top.max(a);
        if a > settings.threshold {
            *by_e.entry(format!("{:.2}", r.measure)).or_default() += 1;
        }
    }
    within(1200, start)?;
    Ok(format!(
        "{}/{} sound restarts; selected restart {} (sound on both: {}): train P={:.4} R={:.4}, test P={:.4} R={:.4}, detected by E {by_e:?}, max activation {top:.4}, {:.1}s",
        good.len(),
        outcome.restarts.len(),
        run.restart,
        run.succeeded,
        run.train_metrics.precision.unwrap_or(f64::NAN),
        run.train_metrics.recall.unwrap_or(f64::NAN),
        run.test_metrics.precision.unwrap_or(f64::NAN),
        run.test_metrics.recall.unwrap_or(f64::NAN),
        start.elapsed().as_secs_f64()
    ))
}

fn symmetry_criterion() -> Check {
    let states = enumerate_sign_vectors(3).map_err(|e| e.to_string())?;
    let census = rew_census(3).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for h in states.iter().step_by(5) {
        let circuit = witness_circuit(h);
        for f in &states {
            let a = perceptron_activation(&circuit, &encode(f).unwrap(), EvalMode::Exact, 0).unwrap();
            let b = perceptron_activation(&circuit, &encode(&f.complement()).unwrap(), EvalMode::Exact, 0).unwrap();
            worst = worst.max((a - b).abs());
        }
    }
    let cfg = AnsatzConfig::default();
    for s in 0..10 {
        let params = Params::random(&cfg, RngSeed(s));
        for f in &states {
            let a = vqc_activation(&cfg, &params, f, EvalMode::Exact).unwrap();
            let b = vqc_activation(&cfg, &params, &f.complement(), EvalMode::Exact).unwrap();
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-15, || format!("complement activation gap {worst:e}"))?;

    for r in &census.records {
        let c = &census.records[r.sign_vector.complement().state_id().unwrap().0 as usize];
        ensure((r.measure - c.measure).abs() < 1e-12, || format!("E differs for {}", r.sign_vector))?;
    }

    let w = make_witness(&reference()).map_err(|e| e.to_string())?;
    let report = detection_sweep_with(&w, EvalMode::Exact, &census, Exec::default()).map_err(|e| e.to_string())?;
    let half = report.half_spectrum();
    ensure(half.len() == 128, || format!("half spectrum has {} entries", half.len()))?;
    let mut covered = vec![false; 256];
    for rec in &half {
        let mirror = &report.records[rec.sign_vector.complement().state_id().unwrap().0 as usize];
        ensure(mirror.activation == rec.activation && mirror.detected == rec.detected, || {
            format!("mirror mismatch at {}", rec.sign_vector)
        })?;
        covered[rec.state_id.0 as usize] = true;
        covered[mirror.state_id.0 as usize] = true;
    }
    ensure(covered.iter().all(|&c| c), || "half spectrum misses a pair".into())?;
    let half_detected = half.iter().filter(|r| r.detected).count();
    ensure(2 * half_detected == report.detected_count, || "detections not mirrored".into())?;
    Ok(format!("max complement gap {worst:.1e}; half spectrum 128 states, {half_detected} detected"))
}

fn shots_criterion() -> Check {
    let states = enumerate_sign_vectors(3).map_err(|e| e.to_string())?;
    let mut rng = RngSeed(0x5407).rng();
    let shots = 8192u64;
    let (mut outside, mut total) = (0, 0);
    for _ in 0..50 {
        let h = &states[rng.random_range(0..states.len())];
        let f = &states[rng.random_range(0..states.len())];
        let circuit = witness_circuit(h);
        let encoded = encode(f).unwrap();
        let exact = perceptron_activation(&circuit, &encoded, EvalMode::Exact, 0).unwrap();
        let sigma = (exact * (1.0 - exact) / shots as f64).sqrt();
        for s in 0..10u64 {
            let mode = EvalMode::Shots {
                shots,
                seed: RngSeed(rng.random()),
            };
            let est = perceptron_activation(&circuit, &encoded, mode, s).unwrap();
            total += 1;
            if (est - exact).abs() > 3.0 * sigma {
                outside += 1;
            }
        }
    }
    let share = outside as f64 / total as f64;
    ensure(share <= 0.02, || format!("{outside}/{total} estimates outside 3 sigma"))?;
    Ok(format!("{outside}/{total} estimates outside 3 sigma"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("REW census", census_criterion),
        ("exact witness count", witness_count_criterion),
        ("perceptron activation oracle", activation_oracle_criterion),
        ("HSGS equivalence", hsgs_criterion),
        ("Schmidt vs brute force", schmidt_criterion),
        ("F_beta anchors", f_beta_criterion),
        ("known-witness learning", known_learning_criterion),
        ("unknown-witness learning", unknown_learning_criterion),
        ("symmetry suite", symmetry_criterion),
        ("shots consistency", shots_criterion),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
