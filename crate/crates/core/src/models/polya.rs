//! Pólya urn with positive initial weights `a_1..a_k`.
//!
//! After `n` draws with color counts `c_j`, the next color is `j` with
//! probability `(a_j + c_j) / (A + n)`, `A = Σ a_j`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyaParams {
    pub weights: Vec<f64>,
}

impl PolyaParams {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let p = Self { weights };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(invalid("weights", "need at least one color"));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(invalid("weights", format!("weight {w} must be positive and finite")));
        }
        Ok(())
    }

    pub fn colors(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Color counts of an urn history.
#[derive(Clone, Debug, PartialEq)]
pub struct UrnState {
    counts: Vec<u64>,
    draws: u64,
}

impl UrnState {
    pub fn new(colors: usize) -> Self {
        Self {
            counts: vec![0; colors],
            draws: 0,
        }
    }

    pub fn from_history(params: &PolyaParams, history: &[f64]) -> Result<Self> {
        let mut state = Self::new(params.colors());
        for &x in history {
            state.push(color_index(params, x)?);
        }
        Ok(state)
    }

    pub fn push(&mut self, color: usize) {
        self.counts[color] += 1;
        self.draws += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Predictive probabilities `(a_j + c_j) / (A + n)`.
    pub fn predictive(&self, params: &PolyaParams) -> Vec<f64> {
        let denom = params.total_weight() + self.draws as f64;
        params
            .weights
            .iter()
            .zip(&self.counts)
            .map(|(a, &c)| (a + c as f64) / denom)
            .collect()
    }

    pub fn draw(&mut self, params: &PolyaParams, rng: &mut SimRng) -> usize {
        let total = params.total_weight() + self.draws as f64;
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let last = self.counts.len() - 1;
        let mut color = last;
        for (j, (a, &c)) in params.weights.iter().zip(&self.counts).enumerate() {
            acc += a + c as f64;
            if u < acc {
                color = j;
                break;
            }
        }
        self.push(color);
        color
    }
}

pub(crate) fn color_index(params: &PolyaParams, x: f64) -> Result<usize> {
    if x.fract() != 0.0 || x < 0.0 || x >= params.colors() as f64 {
        return Err(Error::InvalidHistory(format!(
            "{x} is not a color index in 0..{}",
            params.colors()
        )));
    }
    Ok(x as usize)
}

pub(crate) fn sample(params: &PolyaParams, n: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut state = UrnState::new(params.colors());
    (0..n).map(|_| state.draw(params, rng) as f64).collect()
}

/// Exact one-step martingale residual `Σ_j α_n(j) α_{n+1}^{(j)}(B) − α_n(B)`
/// for a color set `B`.
///
/// With integral weights the sum is carried out over integers and the
/// residual is exactly zero whenever the identity holds.
pub fn one_step_residual(params: &PolyaParams, state: &UrnState, set: &[usize]) -> f64 {
    let integral = params
        .weights
        .iter()
        .all(|w| w.fract() == 0.0 && *w < 1e15);
    if integral {
        let w: Vec<i128> = params
            .weights
            .iter()
            .zip(state.counts())
            .map(|(a, &c)| *a as i128 + c as i128)
            .collect();
        let total: i128 = w.iter().sum();
        let in_set: i128 = set.iter().map(|&j| w[j]).sum();
        // Common denominator total * (total + 1).
        let lhs: i128 = w
            .iter()
            .enumerate()
            .map(|(j, &wj)| wj * (in_set + i128::from(set.contains(&j))))
            .sum();
        let rhs = in_set * (total + 1);
        return (lhs - rhs) as f64 / (total as f64 * (total + 1) as f64);
    }
    let now = state.predictive(params);
    let now_b: f64 = set.iter().map(|&j| now[j]).sum();
    let mut expected = 0.0;
    for (j, pj) in now.iter().enumerate() {
        let mut next = state.clone();
        next.push(j);
        let next_p = next.predictive(params);
        expected += pj * set.iter().map(|&k| next_p[k]).sum::<f64>();
    }
    expected - now_b
}
