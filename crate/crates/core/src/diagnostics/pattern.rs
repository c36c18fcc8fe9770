//! Search for an identity block in the coin array of the singular model.
//!
//! Given rows `Y_{m,·}` restricted to the first `n` columns, find the
//! smallest `m ≥ 0` such that rows `m+1..m+n` form the `n × n` identity.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{self, stream};
use crate::series::{mean_stderr, quantile, Verdict};

pub const MAX_PATTERN_N: usize = 3;
pub const DEFAULT_ROW_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// Every offset `m ≥ 0`.
    Sliding,
    /// Offsets that are multiples of `n` only.
    DisjointBlocks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSearchReport {
    pub n: usize,
    pub mode: ScanMode,
    pub trials: usize,
    pub terminated: usize,
    /// Row index `m + n` at which the identity block is completed, per
    /// terminated trial.
    pub depths: Vec<u64>,
    pub mean_depth: f64,
    pub stderr: f64,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
    pub max_depth: u64,
    pub verdict: Verdict,
}

/// Bit pattern of row `i` (0-based) of the identity: a one in column `i`.
fn identity_row(i: usize) -> u32 {
    1 << i
}

/// First completion row of the identity block, or `None` past `cap` rows.
pub fn first_identity_depth(n: usize, mode: ScanMode, cap: u64, rng: &mut impl RngCore) -> Option<u64> {
    let mask = (1u32 << n) - 1;
    let mut window: Vec<u32> = Vec::with_capacity(n);
    let mut row = 0u64;
    while row < cap {
        let bits = rng.next_u32() & mask;
        row += 1;
        match mode {
            ScanMode::Sliding => {
                if window.len() == n {
                    window.remove(0);
                }
                window.push(bits);
                if window.len() == n && window.iter().enumerate().all(|(i, &r)| r == identity_row(i)) {
                    return Some(row);
                }
            }
            ScanMode::DisjointBlocks => {
                let pos = ((row - 1) % n as u64) as usize;
                if pos == 0 {
                    window.clear();
                }
                window.push(bits);
                if pos == n - 1 && window.iter().enumerate().all(|(i, &r)| r == identity_row(i)) {
                    return Some(row);
                }
            }
        }
    }
    None
}

/// Run `trials` independent searches; trial `t` draws its rows from the
/// stream of the `t`-th replicate seed of `seed`. Passes when every trial
/// terminates within `cap` rows; otherwise inconclusive.
pub fn identity_pattern_search(
    seed: u64,
    n: usize,
    trials: usize,
    mode: ScanMode,
    cap: u64,
) -> Result<PatternSearchReport> {
    if n == 0 || n > MAX_PATTERN_N {
        return Err(invalid("n", format!("pattern size {n} outside 1..={MAX_PATTERN_N}")));
    }
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let results: Vec<Option<u64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::substream(rng::replicate_seed(seed, t), stream::PATTERN_ROWS);
            first_identity_depth(n, mode, cap, &mut rng)
        })
        .collect();
    let depths: Vec<u64> = results.iter().flatten().copied().collect();
    let as_f: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    let (mean_depth, stderr) = mean_stderr(&as_f);
    let terminated = depths.len();
    Ok(PatternSearchReport {
        n,
        mode,
        trials,
        terminated,
        mean_depth,
        stderr,
        median: quantile(&as_f, 0.5),
        q90: quantile(&as_f, 0.9),
        q99: quantile(&as_f, 0.99),
        max_depth: depths.iter().copied().max().unwrap_or(0),
        depths,
        verdict: if terminated == trials {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        },
    })
}
