//! Multipartite entanglement of pure states.
//!
//! For a bipartition `A|B` the largest overlap of `|psi>` with any product
//! `|phi_A>|phi_B>` is the largest squared Schmidt coefficient. The measure
//! is `E = 1 - alpha` with `alpha` the maximum of that quantity over all
//! bipartitions, so `E = 0` for anything biseparable.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{gram, hermitian_eigenvalues};
use crate::qstate::PureState;
use crate::rewstates::{enumerate_sign_vectors, rew_state, SignVector, StateId};

/// Width of the census buckets on `E`.
pub const CENSUS_RESOLUTION: f64 = 1e-9;

/// `E` below this counts as separable.
pub const SEPARABLE_TOLERANCE: f64 = 1e-9;

/// Unordered split of the register; `side_a` is the canonical side.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Bipartition {
    n_qubits: usize,
    side_a: Vec<usize>,
}

impl Bipartition {
    /// Builds the split with `side` on one side. Either side may be given;
    /// the stored side A is the smaller one, or the one holding qubit 0
    /// when both halves have equal size.
    pub fn new(n_qubits: usize, side: &[usize]) -> Result<Self> {
        let mut mask = 0usize;
        for &q in side {
            if q >= n_qubits {
                return Err(Error::Index(format!("qubit {q} on a {n_qubits}-qubit register")));
            }
            if mask & (1 << q) != 0 {
                return Err(Error::Argument(format!("qubit {q} listed twice")));
            }
            mask |= 1 << q;
        }
        if side.is_empty() || side.len() >= n_qubits {
            return Err(Error::Argument(format!(
                "side of size {} is not a proper nonempty subset of {n_qubits} qubits",
                side.len()
            )));
        }
        let full = (1usize << n_qubits) - 1;
        let k = side.len();
        let keep = 2 * k < n_qubits || (2 * k == n_qubits && mask & 1 == 1);
        let a_mask = if keep { mask } else { full & !mask };
        Ok(Bipartition {
            n_qubits,
            side_a: (0..n_qubits).filter(|q| a_mask & (1 << q) != 0).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn side_b(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|q| !self.side_a.contains(q)).collect()
    }

    /// Amplitudes as a `2^|A| x 2^|B|` row-major matrix. Within each side
    /// the lowest-numbered qubit is the most significant bit.
    pub fn reshape(&self, state: &PureState) -> Result<(Vec<Complex64>, usize, usize)> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Size(format!(
                "{}-qubit bipartition applied to a {}-qubit state",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        let n = self.n_qubits;
        let side_b = self.side_b();
        let rows = 1usize << self.side_a.len();
        let cols = 1usize << side_b.len();
        let gather = |idx: usize, qubits: &[usize]| {
            qubits
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | ((idx >> (n - 1 - q)) & 1))
        };
        let mut m = vec![Complex64::new(0.0, 0.0); rows * cols];
        for (idx, amp) in state.amplitudes().iter().enumerate() {
            m[gather(idx, &self.side_a) * cols + gather(idx, &side_b)] = *amp;
        }
        Ok((m, rows, cols))
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |qs: &[usize]| qs.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{{{}}}|{{{}}}", join(&self.side_a), join(&self.side_b()))
    }
}

/// All `2^(n-1) - 1` unordered bipartitions, smaller sides first.
pub fn enumerate_bipartitions(n_qubits: usize) -> Result<Vec<Bipartition>> {
    if n_qubits < 2 {
        return Err(Error::Argument(format!(
            "bipartitions need at least 2 qubits, got {n_qubits}"
        )));
    }
    if n_qubits > 20 {
        return Err(Error::Size(format!("{n_qubits} qubits")));
    }
    let mut out = Vec::new();
    for k in 1..=n_qubits / 2 {
        let mut masks: Vec<usize> = (1usize..(1 << n_qubits) - 1)
            .filter(|m| m.count_ones() as usize == k)
            .filter(|m| 2 * k < n_qubits || m & 1 == 1)
            .collect();
        // lexicographic on the sorted qubit lists
        masks.sort_by_key(|m| (0..n_qubits).filter(|q| m & (1 << q) != 0).collect::<Vec<_>>());
        for m in masks {
            out.push(Bipartition {
                n_qubits,
                side_a: (0..n_qubits).filter(|q| m & (1 << q) != 0).collect(),
            });
        }
    }
    Ok(out)
}

/// Schmidt coefficients across `split`, descending.
pub fn schmidt_coefficients(state: &PureState, split: &Bipartition) -> Result<Vec<f64>> {
    let (m, rows, cols) = split.reshape(state)?;
    let eig = if rows <= cols {
        hermitian_eigenvalues(&gram(&m, rows, cols), rows)?
    } else {
        let mut t = vec![Complex64::new(0.0, 0.0); rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                t[j * rows + i] = m[i * cols + j];
            }
        }
        hermitian_eigenvalues(&gram(&t, cols, rows), cols)?
    };
    Ok(eig.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// Largest squared Schmidt coefficient across `split`.
pub fn schmidt_alpha(state: &PureState, split: &Bipartition) -> Result<f64> {
    let s = schmidt_coefficients(state, split)?;
    Ok((s[0] * s[0]).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entanglement {
    /// `E`, in `[0, 1 - 2^-floor(n/2)]`.
    pub measure: f64,
    /// `1 - E`: the best overlap with any biseparable state.
    pub alpha: f64,
}

fn per_bipartition(state: &PureState) -> Result<Vec<(Bipartition, f64)>> {
    enumerate_bipartitions(state.n_qubits())?
        .into_iter()
        .map(|b| {
            let a = schmidt_alpha(state, &b)?;
            Ok((b, a))
        })
        .collect()
}

pub fn entanglement_measure(state: &PureState) -> Result<Entanglement> {
    let alpha = per_bipartition(state)?
        .into_iter()
        .map(|(_, a)| a)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Entanglement {
        measure: 1.0 - alpha,
        alpha,
    })
}

pub fn is_separable(state: &PureState) -> Result<bool> {
    Ok(entanglement_measure(state)?.measure < SEPARABLE_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementRecord {
    pub state_id: StateId,
    pub sign_vector: SignVector,
    pub measure: f64,
    pub alpha: f64,
    pub per_bipartition_alpha: Vec<(Bipartition, f64)>,
}

/// Entanglement of `rew_state(f)` with its per-bipartition breakdown.
pub fn entanglement_record(f: &SignVector) -> Result<EntanglementRecord> {
    let per = per_bipartition(&rew_state(f))?;
    let alpha = per.iter().map(|(_, a)| *a).fold(f64::NEG_INFINITY, f64::max);
    Ok(EntanglementRecord {
        state_id: f.state_id()?,
        sign_vector: f.clone(),
        measure: 1.0 - alpha,
        alpha,
        per_bipartition_alpha: per,
    })
}

/// Rounds `E` onto the census grid, in units of [`CENSUS_RESOLUTION`].
pub fn measure_bucket(measure: f64) -> i64 {
    (measure / CENSUS_RESOLUTION).round() as i64
}

/// Centre of a census bucket.
pub fn bucket_value(bucket: i64) -> f64 {
    bucket as f64 / 1e9
}

/// Entanglement of every REW state on a small register.
#[derive(Debug, Clone)]
pub struct Census {
    pub n_qubits: usize,
    /// Indexed by state id.
    pub records: Vec<EntanglementRecord>,
}

impl Census {
    /// `(E, count)` pairs in increasing `E`.
    pub fn histogram(&self) -> Vec<(f64, usize)> {
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for r in &self.records {
            *counts.entry(measure_bucket(r.measure)).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|(b, c)| (bucket_value(b), c))
            .collect()
    }

    pub fn measure_of(&self, id: StateId) -> Option<f64> {
        self.records.get(id.0 as usize).map(|r| r.measure)
    }

    pub fn entangled_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.measure >= SEPARABLE_TOLERANCE)
            .count()
    }

    /// CSV with header `state_id,sign_vector,E,alpha`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state_id", "sign_vector", "E", "alpha"])?;
        for r in &self.records {
            w.write_record([
                r.state_id.to_string(),
                r.sign_vector.to_string(),
                format!("{:.12}", r.measure),
                format!("{:.12}", r.alpha),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn rew_census(n_qubits: usize) -> Result<Census> {
    rew_census_with(n_qubits, Exec::default())
}

pub fn rew_census_with(n_qubits: usize, exec: Exec) -> Result<Census> {
    if n_qubits < 2 {
        return Err(Error::Argument(format!(
            "census needs at least 2 qubits, got {n_qubits}"
        )));
    }
    let states = enumerate_sign_vectors(n_qubits)?;
    let records = exec.try_map(states, |f| entanglement_record(&f))?;
    Ok(Census { n_qubits, records })
}
