//! Real equally weighted (REW) states and the circuits that prepare and
//! un-prepare them.
//!
//! A REW state on `n` qubits is fixed by a Boolean function `f` over the
//! `2^n` basis indices: amplitude `x` is `(-1)^f(x) / sqrt(2^n)`. These are
//! exactly the hypergraph states, so every one of them can be prepared by a
//! Hadamard layer followed by (multi-controlled) Z gates.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{Circuit, Gate, PureState, MAX_QUBITS};

/// Largest register whose full state space (`2^(2^n)` REW states) we are
/// willing to enumerate.
pub const MAX_ENUMERABLE_QUBITS: usize = 4;

/// Truth table of `f`, `bits[x] = f(x)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SignVector {
    n_qubits: usize,
    bits: Vec<bool>,
}

/// Integer name of a sign vector: bit `x` of the id is `f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u64);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl SignVector {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        let len = bits.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "sign vector length {len} is not 2^n for n >= 1"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        Ok(SignVector { n_qubits, bits })
    }

    /// From 0/1 integers, as written in figure captions.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let bits = bits
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Parse(format!("sign bit {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        SignVector::new(bits)
    }

    pub fn zeros(n_qubits: usize) -> Result<Self> {
        SignVector::new(vec![false; 1usize.checked_shl(n_qubits as u32).unwrap_or(0)])
    }

    pub fn from_state_id(n_qubits: usize, id: StateId) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 6 {
            return Err(Error::Size(format!(
                "state ids cover 1..=6 qubits, got {n_qubits}"
            )));
        }
        let len = 1usize << n_qubits;
        if len < 64 && id.0 >> len != 0 {
            return Err(Error::Index(format!(
                "state id {} out of range for {n_qubits} qubits",
                id.0
            )));
        }
        SignVector::new((0..len).map(|x| (id.0 >> x) & 1 == 1).collect())
    }

    pub fn state_id(&self) -> Result<StateId> {
        if self.bits.len() > 64 {
            return Err(Error::Size(format!(
                "{}-qubit sign vector has no 64-bit state id",
                self.n_qubits
            )));
        }
        Ok(StateId(
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |id, (x, &b)| id | (u64::from(b) << x)),
        ))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bitwise NOT: the same physical state up to a global sign.
    pub fn complement(&self) -> SignVector {
        SignVector {
            n_qubits: self.n_qubits,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// One canonical member per complementary pair: the one with `f(0) = 0`.
    pub fn is_representative(&self) -> bool {
        !self.bits[0]
    }

    pub fn representative(&self) -> SignVector {
        if self.is_representative() {
            self.clone()
        } else {
            self.complement()
        }
    }

    pub fn hamming_distance(&self, other: &SignVector) -> Result<usize> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Size(format!(
                "Hamming distance between {}- and {}-qubit sign vectors",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }

    /// Compact `0`/`1` string, e.g. `00000110`.
    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Every sign vector on `n_qubits`, in state-id order.
pub fn enumerate_sign_vectors(n_qubits: usize) -> Result<Vec<SignVector>> {
    if n_qubits == 0 || n_qubits > MAX_ENUMERABLE_QUBITS {
        return Err(Error::Resource(format!(
            "exhaustive enumeration supports 1..={MAX_ENUMERABLE_QUBITS} qubits, got {n_qubits}"
        )));
    }
    let count = 1u64 << (1u32 << n_qubits);
    (0..count)
        .map(|id| SignVector::from_state_id(n_qubits, StateId(id)))
        .collect()
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, &b) in self.bits.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

impl FromStr for SignVector {
    type Err = Error;

    /// Accepts the bracketed form `[0, 0, 1, 1]` or a compact bitstring `0011`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bits: Vec<u8> = if let Some(inner) = s.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse(format!("missing closing bracket in {s:?}")))?;
            inner
                .split(',')
                .map(|tok| match tok.trim() {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::Parse(format!("bad sign bit {other:?} in {s:?}"))),
                })
                .collect::<Result<_>>()?
        } else {
            s.chars()
                .map(|ch| match ch {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(Error::Parse(format!("bad character {other:?} in {s:?}"))),
                })
                .collect::<Result<_>>()?
        };
        SignVector::from_bits(&bits).map_err(|e| match e {
            Error::Size(msg) => Error::Parse(msg),
            other => other,
        })
    }
}

impl TryFrom<String> for SignVector {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SignVector> for String {
    fn from(v: SignVector) -> String {
        v.to_string()
    }
}

/// `|psi_f> = 2^{-n/2} sum_x (-1)^f(x) |x>`.
pub fn rew_state(f: &SignVector) -> PureState {
    let amp = 1.0 / (f.len() as f64).sqrt();
    let amps = f
        .bits
        .iter()
        .map(|&b| Complex64::new(if b { -amp } else { amp }, 0.0))
        .collect();
    PureState::from_amplitudes(f.n_qubits, amps).expect("REW amplitudes are normalised")
}

pub fn complement(f: &SignVector) -> SignVector {
    f.complement()
}

fn support(n_qubits: usize, x: usize) -> Vec<usize> {
    (0..n_qubits)
        .filter(|&q| x & (1 << (n_qubits - 1 - q)) != 0)
        .collect()
}

/// Hypergraph-state generation subroutine.
///
/// Emits the Z/MCZ sequence that, applied after a Hadamard layer, turns the
/// uniform superposition into `rew_state(target_signs)` up to a global sign.
/// When `f(0) = 1` the complement is synthesised instead. Indices are visited
/// by Hamming weight, then numerically; a gate on `support(x)` is emitted
/// whenever the accumulated sign at `x` disagrees with the target, and it
/// flips every `y` whose support contains that of `x`.
pub fn hsgs(target_signs: &SignVector) -> Vec<Gate> {
    let n = target_signs.n_qubits;
    let target = target_signs.representative();
    let dim = target.len();
    let mut current = vec![false; dim];

    let mut order: Vec<usize> = (1..dim).collect();
    order.sort_by_key(|&x| (x.count_ones(), x));

    let mut gates = Vec::new();
    for x in order {
        if current[x] == target.bits[x] {
            continue;
        }
        gates.push(Gate::controlled_z(support(n, x)));
        for (y, sign) in current.iter_mut().enumerate() {
            if y & x == x {
                *sign = !*sign;
            }
        }
    }
    gates
}

/// `U_i`: Hadamard on every qubit followed by the HSGS sign flips.
///
/// On `|0...0>` this prepares `rew_state(f)` exactly when `f(0) = 0` and
/// `-rew_state(f)` otherwise.
pub fn encoding_circuit(f: &SignVector) -> Circuit {
    let n = f.n_qubits;
    let gates = (0..n).map(Gate::H).chain(hsgs(f)).collect();
    Circuit::from_gates(n, gates).expect("synthesised gates are valid")
}

/// `U_w`: the inverse of the encoding of `h` followed by X on every qubit,
/// mapping `rew_state(h)` to `|1...1>` up to a global sign.
pub fn witness_circuit(h: &SignVector) -> Circuit {
    let mut circ = encoding_circuit(h).inverse();
    for q in 0..h.n_qubits {
        circ.push(Gate::X(q)).expect("qubit index in range");
    }
    circ
}
