//! Support geometry of the singular directing measure `α = L(Σ_m V_m Y_m | V)`.
//!
//! Fixing the first `m'` coins localizes `α` to `2^{m'}` intervals around the
//! subset sums of `V_1..V_{m'}`, each of radius the remaining tail. Counting
//! those intervals against their length gives an upper box-counting dimension
//! estimate of the support.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::singular::{coin_mask, truncation_bound, weight_bounds};
use crate::models::WeightSequence;
use crate::rng::{self, stream};
use crate::series::{format_real, DiagnosticsSeries, Verdict};

/// Deepest cover that is computed.
pub const MAX_COVER_DEPTH: usize = 25;
/// Deepest cover whose intervals are listed explicitly.
pub const MAX_EXPLICIT_DEPTH: usize = 20;
/// Closed intervals whose endpoints are this close are merged. Applied
/// relative to the size of the quantities compared.
pub const MERGE_TOL: f64 = 1e-15;

/// Tail `Σ_{j>m} V_j`: the sum over the stored weights and the same sum plus
/// the sure bound `(M+1)^{−M}/M` on everything past the truncation depth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSum {
    pub empirical: f64,
    pub bound_inclusive: f64,
}

pub fn tail_sum(v: &WeightSequence, m: usize) -> Result<TailSum> {
    let depth = v.depth();
    if m > depth {
        return Err(invalid("m", format!("tail index {m} exceeds depth {depth}")));
    }
    // Smallest terms first.
    let empirical: f64 = v.values()[m..].iter().rev().sum();
    Ok(TailSum {
        empirical,
        bound_inclusive: empirical + truncation_bound(depth),
    })
}

/// Sure bound `(m+1)^{−m}/m` on `Σ_{j>m} V_j` for `m ≥ 1`.
pub fn sure_tail_bound(m: usize) -> f64 {
    assert!(m >= 1);
    truncation_bound(m)
}

/// Count of sure-bound violations for one weight sequence: weight bounds for
/// every `j`, tail bounds and `r_m > m` for `1 ≤ m < M`.
pub fn sure_bound_violations(v: &WeightSequence) -> Result<usize> {
    let mut violations = 0;
    for j in 1..=v.depth() {
        let (lo, hi) = weight_bounds(j);
        if !(lo < v.get(j) && v.get(j) < hi) {
            violations += 1;
        }
    }
    for m in 1..v.depth() {
        let tail = tail_sum(v, m)?;
        if tail.bound_inclusive > sure_tail_bound(m) {
            violations += 1;
        }
        if v.get(m) / tail.bound_inclusive <= m as f64 {
            violations += 1;
        }
    }
    Ok(violations)
}

/// `r_m = V_m / tail_sum(v, m).bound_inclusive` for `m = 1..M−1`; passes when
/// `r_m > m` for every `m`. The threshold recorded is the minimum allowed
/// `r_m / m`.
pub fn ratio_curve(v: &WeightSequence) -> Result<DiagnosticsSeries> {
    if v.depth() < 3 {
        return Err(invalid("depth", "ratio curve needs depth at least 3"));
    }
    let mut series = DiagnosticsSeries::new("ratio_curve", 1.0);
    let mut pass = true;
    for m in 1..v.depth() {
        let r = v.get(m) / tail_sum(v, m)?.bound_inclusive;
        pass &= r > m as f64;
        series.push(m as u64, r, 0.0);
    }
    series.verdict = Verdict::from_bool(pass);
    Ok(series)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverEstimate {
    pub depth: usize,
    pub interval_count: u64,
    pub max_interval_length: f64,
    /// `ln N / ln(1/ε)`; absent when `ε ≥ 1`.
    pub dim_estimate: Option<f64>,
}

impl CoverEstimate {
    fn from_parts(depth: usize, interval_count: u64, max_interval_length: f64) -> Self {
        Self {
            depth,
            interval_count,
            max_interval_length,
            dim_estimate: dimension(interval_count, max_interval_length),
        }
    }

    /// The same cover after multiplying every weight by `factor`: the count
    /// is unchanged and every length scales by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self::from_parts(
            self.depth,
            self.interval_count,
            self.max_interval_length * factor,
        )
    }
}

fn dimension(count: u64, eps: f64) -> Option<f64> {
    (eps < 1.0).then(|| (count as f64).ln() / (1.0 / eps).ln())
}

/// Merged-run summary of a block of consecutive cover intervals.
#[derive(Clone, Copy, Debug)]
struct Block {
    count: u64,
    max_len: f64,
    first_len: f64,
    last_len: f64,
    single: bool,
}

/// Cover of the depth-`m'` support by intervals `[c − t, c + t]`, where `c`
/// runs over the subset sums of `V_1..V_{m'}` and `t` is the bound-inclusive
/// tail at `m'`. Overlapping intervals are merged.
///
/// Because every `V_k` exceeds the sum of all later weights, subset sums are
/// ordered like binary numbers with `V_1` as the leading digit, and the gap
/// between consecutive centers is `V_k − Σ_{k<j≤m'} V_j` where `k` is the
/// digit that switches on. The cover is therefore two copies of the depth
/// `k+1` cover joined across that gap, which gives the merged count and
/// lengths in `O(m')` without resolving `2^{m'}` nearly equal positions.
pub fn cover_at_depth(v: &WeightSequence, m_prime: usize) -> Result<CoverEstimate> {
    check_cover_depth(v, m_prime, MAX_COVER_DEPTH)?;
    let radius = tail_sum(v, m_prime)?.bound_inclusive;
    let width = 2.0 * radius;
    let mut block = Block {
        count: 1,
        max_len: width,
        first_len: width,
        last_len: width,
        single: true,
    };
    // Sum of V_{k+1}..V_{m'}, built from the smallest weight up.
    let mut later = 0.0;
    for k in (1..=m_prime).rev() {
        let gap = v.get(k) - later;
        block = join(block, gap, width);
        later += v.get(k);
    }
    Ok(CoverEstimate::from_parts(m_prime, block.count, block.max_len))
}

fn join(block: Block, gap: f64, width: f64) -> Block {
    let overlap = width - gap;
    if overlap >= -MERGE_TOL * gap.max(width) {
        let merged = block.last_len + block.first_len - overlap.max(0.0);
        if block.single {
            Block {
                count: 1,
                max_len: merged,
                first_len: merged,
                last_len: merged,
                single: true,
            }
        } else {
            Block {
                count: 2 * block.count - 1,
                max_len: block.max_len.max(merged),
                first_len: block.first_len,
                last_len: block.last_len,
                single: false,
            }
        }
    } else {
        Block {
            count: 2 * block.count,
            max_len: block.max_len,
            first_len: block.first_len,
            last_len: block.last_len,
            single: false,
        }
    }
}

fn check_cover_depth(v: &WeightSequence, m_prime: usize, cap: usize) -> Result<()> {
    let limit = v.depth().min(cap);
    if m_prime > limit {
        return Err(invalid(
            "m_prime",
            format!("cover depth {m_prime} exceeds min(depth {}, {cap})", v.depth()),
        ));
    }
    Ok(())
}

/// Explicit merged intervals of the depth-`m'` cover, sorted.
pub fn cover_intervals(v: &WeightSequence, m_prime: usize) -> Result<Vec<(f64, f64)>> {
    check_cover_depth(v, m_prime, MAX_EXPLICIT_DEPTH)?;
    let radius = tail_sum(v, m_prime)?.bound_inclusive;
    let mut centers: Vec<f64> = (0..1u64 << m_prime).map(|mask| v.point(mask)).collect();
    centers.sort_by(f64::total_cmp);
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for c in centers {
        let (lo, hi) = (c - radius, c + radius);
        match merged.last_mut() {
            Some(last) if lo <= last.1 + MERGE_TOL => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    Ok(merged)
}

/// Fraction of `samples` draws from the truncated directing measure that land
/// in the depth-`m'` cover. Containment is sure, so anything below 1 is a
/// defect. Zero samples give 1 by convention.
pub fn cover_mass_check(v: &WeightSequence, m_prime: usize, samples: usize, seed: u64) -> Result<f64> {
    let intervals = cover_intervals(v, m_prime)?;
    if samples == 0 {
        return Ok(1.0);
    }
    let mut rng = rng::substream(seed, stream::DIRECTING_SAMPLES);
    let mask = coin_mask(v.depth());
    // A sampled point is a sum of up to M positive terms, so it carries a
    // rounding error of at most M·ε·x; membership allows exactly that.
    let rounding = v.depth() as f64 * f64::EPSILON;
    let mut inside = 0usize;
    for _ in 0..samples {
        let x = v.point(rand::RngCore::next_u64(&mut rng) & mask);
        let slack = rounding * x;
        let idx = intervals.partition_point(|iv| iv.1 < x - slack);
        if intervals.get(idx).is_some_and(|iv| iv.0 <= x + slack && x - slack <= iv.1) {
            inside += 1;
        }
    }
    Ok(inside as f64 / samples as f64)
}

/// Cover estimates at several depths as a series of dimension estimates.
/// Passes when the estimates strictly decrease and the last is at most
/// `threshold`.
pub fn cover_dimension_curve(
    v: &WeightSequence,
    depths: &[usize],
    threshold: f64,
) -> Result<(Vec<CoverEstimate>, DiagnosticsSeries)> {
    let covers = depths
        .iter()
        .map(|&d| cover_at_depth(v, d))
        .collect::<Result<Vec<_>>>()?;
    let mut series = DiagnosticsSeries::new("cover_dimension", threshold);
    let mut dims = Vec::with_capacity(covers.len());
    for c in &covers {
        let dim = c.dim_estimate.unwrap_or(f64::INFINITY);
        dims.push(dim);
        series.push(c.depth as u64, dim, 0.0);
    }
    let decreasing = dims.windows(2).all(|w| w[1] < w[0]);
    let last_ok = dims.last().is_some_and(|d| *d <= threshold);
    series.verdict = Verdict::from_bool(decreasing && last_ok);
    Ok((covers, series))
}

/// CSV with header `depth,N,epsilon,dim_estimate`.
pub fn covers_to_csv(covers: &[CoverEstimate]) -> String {
    let mut out = String::from("depth,N,epsilon,dim_estimate\n");
    for c in covers {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.depth,
            c.interval_count,
            format_real(c.max_interval_length),
            c.dim_estimate.map_or_else(String::new, format_real)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn weights(seed: u64, depth: usize) -> WeightSequence {
        WeightSequence::sample(depth, &mut substream(seed, 0))
    }

    #[test]
    fn tail_at_depth_is_truncation_bound() {
        let v = weights(1, 12);
        let t = tail_sum(&v, 12).unwrap();
        assert_eq!(t.empirical, 0.0);
        assert_eq!(t.bound_inclusive, truncation_bound(12));
        assert!(tail_sum(&v, 13).is_err());
    }

    #[test]
    fn tail_strictly_decreasing() {
        let v = weights(2, 15);
        let tails: Vec<f64> = (0..=15).map(|m| tail_sum(&v, m).unwrap().empirical).collect();
        assert!(tails.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn depth_one_cover() {
        let v = weights(3, 10);
        let c = cover_at_depth(&v, 1).unwrap();
        assert!(c.interval_count <= 2);
        assert_eq!(cover_intervals(&v, 1).unwrap().len() as u64, c.interval_count);
    }

    #[test]
    fn depth_zero_cover_is_single_interval() {
        let v = weights(4, 10);
        let c = cover_at_depth(&v, 0).unwrap();
        assert_eq!(c.interval_count, 1);
        let r = tail_sum(&v, 0).unwrap().bound_inclusive;
        assert_eq!(cover_intervals(&v, 0).unwrap(), vec![(-r, r)]);
        assert!(c.dim_estimate.is_none());
        assert_eq!(cover_mass_check(&v, 0, 1000, 1).unwrap(), 1.0);
    }

    #[test]
    fn zero_samples_is_vacuous() {
        let v = weights(5, 10);
        assert_eq!(cover_mass_check(&v, 5, 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn structural_count_matches_explicit_enumeration() {
        for seed in 0..40 {
            let v = weights(seed, 12);
            for m in 0..=8 {
                let explicit = cover_intervals(&v, m).unwrap();
                let c = cover_at_depth(&v, m).unwrap();
                assert_eq!(c.interval_count, explicit.len() as u64, "seed {seed} depth {m}");
                let longest = explicit.iter().map(|iv| iv.1 - iv.0).fold(0.0, f64::max);
                assert!(
                    (c.max_interval_length - longest).abs() <= 1e-12 * longest.max(1e-300) + 1e-15,
                    "seed {seed} depth {m}: {} vs {longest}",
                    c.max_interval_length
                );
            }
        }
    }

    #[test]
    fn depth_limits() {
        let v = weights(6, 30);
        assert!(cover_at_depth(&v, 25).is_ok());
        assert!(cover_at_depth(&v, 26).is_err());
        let shallow = weights(6, 8);
        assert!(cover_at_depth(&shallow, 9).is_err());
    }

    #[test]
    fn csv_header() {
        let v = weights(7, 10);
        let covers: Vec<_> = [2, 4].iter().map(|&d| cover_at_depth(&v, d).unwrap()).collect();
        let csv = covers_to_csv(&covers);
        assert!(csv.starts_with("depth,N,epsilon,dim_estimate\n2,4,"));
    }
}
