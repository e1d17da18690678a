use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::entanglement::{rew_census, Census, SEPARABLE_TOLERANCE};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::qstate::{EvalMode, RngSeed};
use crate::rewstates::{SignVector, StateId};
use crate::witness::{detection_sweep_with, make_witness};

/// Share of undetected entangled representatives kept as known negatives.
pub const KNOWN_ENTANGLED_FRACTION: f64 = 0.6;
/// Share of separable representatives kept as known negatives.
pub const KNOWN_SEPARABLE_FRACTION: f64 = 0.5;
/// Share of entangled representatives in the unknown-witness training set.
pub const UNKNOWN_ENTANGLED_FRACTION: f64 = 0.6;
/// Share of separable representatives in the unknown-witness training set.
pub const UNKNOWN_SEPARABLE_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// How the labels were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    /// Positives are the states an exact witness detects.
    Known { reference: SignVector },
    /// Positives are the entangled states.
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledState {
    pub state_id: StateId,
    pub sign_vector: SignVector,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_qubits: usize,
    pub items: Vec<LabeledState>,
    pub split: Split,
    pub provenance: Provenance,
    pub seed: RngSeed,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.items.iter().map(|s| s.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|s| s.label).count()
    }

    pub fn ids(&self) -> BTreeSet<u64> {
        self.items.iter().map(|s| s.state_id.0).collect()
    }
}

/// Writes datasets as CSV with header `state_id,sign_vector,label,split`.
pub fn write_datasets_csv<W: Write>(out: W, datasets: &[&Dataset]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state_id", "sign_vector", "label", "split"])?;
    for d in datasets {
        for s in &d.items {
            w.write_record([
                s.state_id.to_string(),
                s.sign_vector.to_string(),
                u8::from(s.label).to_string(),
                d.split.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn labeled(f: &SignVector, label: bool) -> Result<LabeledState> {
    Ok(LabeledState {
        state_id: f.state_id()?,
        sign_vector: f.clone(),
        label,
    })
}

fn take_fraction(pool: &[SignVector], fraction: f64) -> usize {
    (fraction * pool.len() as f64).floor() as usize
}

fn representatives(census: &Census, entangled: bool) -> Vec<SignVector> {
    census
        .records
        .iter()
        .filter(|r| r.sign_vector.is_representative())
        .filter(|r| (r.measure >= SEPARABLE_TOLERANCE) == entangled)
        .map(|r| r.sign_vector.clone())
        .collect()
}

/// Training set for imitating the exact witness of `reference`.
///
/// Every state the witness detects is a positive, complements included.
/// Negatives are sampled from the representatives (`f(0) = 0`) the witness
/// misses: a [`KNOWN_ENTANGLED_FRACTION`] share of the entangled ones and a
/// [`KNOWN_SEPARABLE_FRACTION`] share of the separable ones.
pub fn build_known_dataset(reference: &SignVector, seed: RngSeed) -> Result<Dataset> {
    let n = reference.n_qubits();
    let census = rew_census(n)?;
    let w = make_witness(reference)?;
    let report = detection_sweep_with(&w, EvalMode::Exact, &census, Exec::default())?;
    let detected: BTreeSet<u64> = report.detected().map(|r| r.state_id.0).collect();

    let undetected = |f: &SignVector| !detected.contains(&f.state_id().map(|i| i.0).unwrap_or(u64::MAX));
    let entangled: Vec<_> = representatives(&census, true).into_iter().filter(undetected).collect();
    let separable: Vec<_> = representatives(&census, false).into_iter().filter(undetected).collect();

    let mut rng = seed.rng();
    let mut items = Vec::new();
    for r in report.detected() {
        items.push(labeled(&r.sign_vector, true)?);
    }
    for f in entangled.choose_multiple(&mut rng, take_fraction(&entangled, KNOWN_ENTANGLED_FRACTION)) {
        items.push(labeled(f, false)?);
    }
    for f in separable.choose_multiple(&mut rng, take_fraction(&separable, KNOWN_SEPARABLE_FRACTION)) {
        items.push(labeled(f, false)?);
    }
    items.shuffle(&mut rng);
    Ok(Dataset {
        n_qubits: n,
        items,
        split: Split::Train,
        provenance: Provenance::Known {
            reference: reference.clone(),
        },
        seed,
    })
}

/// Train and test sets for learning entanglement with no witness at hand.
///
/// Labels are `E >= SEPARABLE_TOLERANCE`. Training draws from the
/// representatives only. The test set holds the remaining representatives
/// plus the complement of every training state, which shares its `E`.
pub fn build_unknown_dataset(n_qubits: usize, seed: RngSeed) -> Result<(Dataset, Dataset)> {
    if n_qubits < 2 {
        return Err(Error::Argument(format!(
            "datasets need at least 2 qubits, got {n_qubits}"
        )));
    }
    let census = rew_census(n_qubits)?;
    let entangled = representatives(&census, true);
    let separable = representatives(&census, false);

    let mut rng = seed.rng();
    let mut train = Vec::new();
    for (pool, label, fraction) in [
        (&entangled, true, UNKNOWN_ENTANGLED_FRACTION),
        (&separable, false, UNKNOWN_SEPARABLE_FRACTION),
    ] {
        for f in pool.choose_multiple(&mut rng, take_fraction(pool, fraction)) {
            train.push(labeled(f, label)?);
        }
    }
    train.shuffle(&mut rng);

    let chosen: BTreeSet<u64> = train.iter().map(|s| s.state_id.0).collect();
    let mut test = Vec::new();
    for (pool, label) in [(&entangled, true), (&separable, false)] {
        for f in pool.iter() {
            if !chosen.contains(&f.state_id()?.0) {
                test.push(labeled(f, label)?);
            }
        }
    }
    for s in &train {
        test.push(labeled(&s.sign_vector.complement(), s.label)?);
    }
    test.shuffle(&mut rng);

    let make = |items, split| Dataset {
        n_qubits,
        items,
        split,
        provenance: Provenance::Unknown,
        seed,
    };
    Ok((make(train, Split::Train), make(test, Split::Test)))
}
