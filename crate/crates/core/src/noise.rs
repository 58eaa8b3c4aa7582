//! Local depolarizing noise as sampled Pauli trajectories.
//!
//! After every moment each qubit independently suffers X, Y or Z with
//! probability `epsilon / 3` each. Configuration `index` under `seed` is drawn
//! from the ChaCha8 stream `(seed, index)`, one `u64` per (moment, qubit) in
//! order plus one more for the Pauli when an error fires, so every
//! configuration is reproducible on its own and across platforms.

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::architecture::Architecture;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    epsilon: f64,
}

impl NoiseParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::OutOfRange(format!(
                "epsilon {epsilon} outside [0, 1]"
            )));
        }
        Ok(NoiseParams { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Per-moment lists of `(qubit, Pauli)`, qubits ascending within a moment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ErrorConfig {
    moments: Vec<Vec<(u32, Pauli)>>,
}

impl ErrorConfig {
    pub fn empty(moments: usize) -> Self {
        ErrorConfig {
            moments: vec![Vec::new(); moments],
        }
    }

    pub fn from_moments(mut moments: Vec<Vec<(u32, Pauli)>>) -> Result<Self> {
        for (m, set) in moments.iter_mut().enumerate() {
            set.sort_by_key(|e| e.0);
            if set.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Contract(format!("qubit repeated in moment {m}")));
            }
        }
        Ok(ErrorConfig { moments })
    }

    /// Single error `p` on `q` after moment `m`.
    pub fn single(moments: usize, m: usize, q: u32, p: Pauli) -> Self {
        let mut c = Self::empty(moments);
        c.moments[m].push((q, p));
        c
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    pub fn moment(&self, m: usize) -> &[(u32, Pauli)] {
        &self.moments[m]
    }

    pub fn moments(&self) -> &[Vec<(u32, Pauli)>] {
        &self.moments
    }

    pub fn error_count(&self) -> usize {
        self.moments.iter().map(Vec::len).sum()
    }

    /// Flat `(moment, qubit, pauli)` records for dumps.
    pub fn records(&self) -> Vec<(usize, u32, Pauli)> {
        self.moments
            .iter()
            .enumerate()
            .flat_map(|(m, set)| set.iter().map(move |&(q, p)| (m, q, p)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.records()).expect("config serializes")
    }

    pub fn from_json(s: &str, moments: usize) -> Result<Self> {
        let recs: Vec<(usize, u32, Pauli)> = serde_json::from_str(s)?;
        let mut out = vec![Vec::new(); moments];
        for (m, q, p) in recs {
            out.get_mut(m)
                .ok_or_else(|| Error::OutOfRange(format!("moment {m} >= {moments}")))?
                .push((q, p));
        }
        Self::from_moments(out)
    }
}

fn threshold(epsilon: f64) -> u128 {
    (epsilon * 2f64.powi(64)) as u128
}

pub fn config_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sample_config(
    moments: usize,
    num_qubits: usize,
    noise: NoiseParams,
    seed: u64,
    index: u64,
) -> ErrorConfig {
    let mut rng = config_rng(seed, index);
    let th = threshold(noise.epsilon);
    let moments = (0..moments)
        .map(|_| {
            let mut set = Vec::new();
            for q in 0..num_qubits as u32 {
                if (rng.next_u64() as u128) < th {
                    let pick = ((rng.next_u64() as u128 * 3) >> 64) as u8;
                    let p = [Pauli::X, Pauli::Y, Pauli::Z][pick as usize];
                    set.push((q, p));
                }
            }
            set
        })
        .collect();
    ErrorConfig { moments }
}

/// `log p_c` of a configuration under the product channel.
pub fn config_log_probability(
    config: &ErrorConfig,
    moments: usize,
    num_qubits: usize,
    noise: NoiseParams,
) -> f64 {
    let eps = noise.epsilon;
    let mut lp = 0.0;
    for m in 0..moments {
        let hit = config.moments.get(m).map_or(0, Vec::len);
        let quiet = num_qubits - hit;
        if quiet > 0 {
            lp += quiet as f64 * (1.0 - eps).ln();
        }
        if hit > 0 {
            lp += hit as f64 * (eps / 3.0).ln();
        }
    }
    lp
}

/// Qubits never hit by an error.
pub fn survived_set(config: &ErrorConfig, num_qubits: usize) -> BTreeSet<u32> {
    survived_mask(config, num_qubits)
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(q, _)| q as u32)
        .collect()
}

pub fn survived_mask(config: &ErrorConfig, num_qubits: usize) -> Vec<bool> {
    let mut mask = vec![true; num_qubits];
    for set in &config.moments {
        for &(q, _) in set {
            mask[q as usize] = false;
        }
    }
    mask
}

/// Sample against an architecture's full qubit set.
pub fn sample_for(
    arch: &Architecture,
    moments: usize,
    noise: NoiseParams,
    seed: u64,
    index: u64,
) -> ErrorConfig {
    sample_config(moments, arch.num_qubits(), noise, seed, index)
}
