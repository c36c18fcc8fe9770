//! Exchangeable sequence with a singular directing measure:
//! `X_n = Σ_{m≤M} V_m Y_{m,n}` with `V_m = U_m^m`, `U_m ~ Uniform(1/(m+1), 1/m)`
//! and fair coins `Y_{m,n}`.
//!
//! Coin rows are stored per observation as a bit mask: bit `m − 1` of
//! `rows[i]` is `Y_{m,i+1}`.

use rand::RngCore;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measure::{DomainKind, GridDensity, GridSpec, MixedMeasure1D};
use crate::rng::SimRng;

pub const MIN_DEPTH: usize = 2;
pub const MAX_DEPTH: usize = 40;
/// Largest depth whose law of `X_1` is built as an explicit mixture.
pub const MAX_MIXTURE_DEPTH: usize = 12;
/// Largest depth whose directing measure is enumerated atom by atom.
pub const MAX_ENUMERATION_DEPTH: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularParams {
    pub depth: usize,
}

impl SingularParams {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_DEPTH..=MAX_DEPTH).contains(&self.depth) {
            return Err(invalid(
                "depth",
                format!("truncation depth {} outside [{MIN_DEPTH}, {MAX_DEPTH}]", self.depth),
            ));
        }
        Ok(())
    }

    /// Sure bound `(M+1)^{−M}/M` on the neglected tail `Σ_{j>M} V_j`.
    pub fn truncation_bound(&self) -> f64 {
        truncation_bound(self.depth)
    }
}

pub fn truncation_bound(depth: usize) -> f64 {
    ((depth + 1) as f64).powi(-(depth as i32)) / depth as f64
}

/// Sure bounds `((j+1)^{−j}, j^{−j})` on `V_j`.
pub fn weight_bounds(j: usize) -> (f64, f64) {
    let j_f = j as f64;
    ((j_f + 1.0).powi(-(j as i32)), j_f.powi(-(j as i32)))
}

/// One realization `V_1..V_M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSequence {
    values: Vec<f64>,
}

impl WeightSequence {
    /// Validates the sure bounds `(j+1)^{−j} < V_j < j^{−j}` for every `j`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("weights", "empty weight sequence"));
        }
        for (idx, &v) in values.iter().enumerate() {
            let (lo, hi) = weight_bounds(idx + 1);
            if !(lo < v && v < hi) {
                return Err(invalid(
                    "weights",
                    format!("V_{} = {v:e} violates ({lo:e}, {hi:e})", idx + 1),
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn sample(depth: usize, rng: &mut SimRng) -> Self {
        let values = (1..=depth)
            .map(|m| {
                let (u_lo, u_hi) = (1.0 / (m as f64 + 1.0), 1.0 / m as f64);
                let (lo, hi) = weight_bounds(m);
                let dist = Uniform::new(u_lo, u_hi).expect("nonempty interval");
                loop {
                    let v = dist.sample(rng).powi(m as i32);
                    // Rounding can land on an endpoint; such draws have probability zero.
                    if lo < v && v < hi {
                        break v;
                    }
                }
            })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn depth(&self) -> usize {
        self.values.len()
    }

    /// `V_j` with 1-based `j`.
    pub fn get(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    /// `Σ_m V_m y_m` for a coin mask.
    pub fn point(&self, mask: u64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(m, _)| mask >> m & 1 == 1)
            .map(|(_, v)| v)
            .sum()
    }
}

impl<'de> Deserialize<'de> for WeightSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            values: Vec<f64>,
        }
        let repr = Repr::deserialize(d)?;
        WeightSequence::new(repr.values).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn coin_mask(depth: usize) -> u64 {
    if depth >= 64 {
        u64::MAX
    } else {
        (1u64 << depth) - 1
    }
}

pub(crate) fn sample(params: &SingularParams, n: usize, rng: &mut SimRng) -> (WeightSequence, Vec<u64>, Vec<f64>) {
    let weights = WeightSequence::sample(params.depth, rng);
    let mask = coin_mask(params.depth);
    let rows: Vec<u64> = (0..n).map(|_| rng.next_u64() & mask).collect();
    let xs = rows.iter().map(|&r| weights.point(r)).collect();
    (weights, rows, xs)
}

/// Directing measure at the truncation depth as `2^M` atoms of mass `2^{−M}`.
pub(crate) fn directing_atoms(weights: &WeightSequence) -> Result<MixedMeasure1D> {
    let depth = weights.depth();
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(invalid(
            "depth",
            format!(
                "directing measure enumeration is limited to depth {MAX_ENUMERATION_DEPTH}; \
                 use the fractal cover for depth {depth}"
            ),
        ));
    }
    let mass = 0.5f64.powi(depth as i32);
    let atoms = (0..1u64 << depth).map(|mask| (weights.point(mask), mass));
    MixedMeasure1D::new(atoms, None, DomainKind::RealLine)
}

/// CDF of `V_m = U_m^m`.
fn weight_cdf(m: usize, v: f64) -> f64 {
    let (lo, hi) = weight_bounds(m);
    if v <= lo {
        0.0
    } else if v >= hi {
        1.0
    } else {
        let m_f = m as f64;
        ((v.powf(1.0 / m_f) - 1.0 / (m_f + 1.0)) * m_f * (m_f + 1.0)).clamp(0.0, 1.0)
    }
}

/// Density `h_m(v) = (m+1)·v^{(1−m)/m}` of `V_m` on `((m+1)^{−m}, m^{−m})`.
pub fn weight_density(m: usize, v: f64) -> f64 {
    let (lo, hi) = weight_bounds(m);
    if v <= lo || v >= hi {
        0.0
    } else {
        let m_f = m as f64;
        (m_f + 1.0) * v.powf((1.0 - m_f) / m_f)
    }
}

/// Default node layout for [`fd_density_small_n`]: a node at 0, two empty
/// cells on the left, and the sure support `[0, Σ_{m≤M} m^{−m}]` plus two
/// empty cells on the right.
pub fn default_fd_grid(depth: usize, points: usize) -> Result<GridSpec> {
    let support: f64 = (1..=depth).map(|m| weight_bounds(m).1).sum();
    let cells = points.saturating_sub(1).max(8);
    let step = support / (cells - 4) as f64;
    GridSpec::new(-2.0 * step, -2.0 * step + cells as f64 * step, cells + 1)
}

/// Law of `X_1 = Σ_{m≤M} V_m Y_{m,1}` given `V = v`, integrated over `V`:
/// the `2^{−M}`-weighted mixture over coin patterns of convolutions of the
/// weight densities. The all-zero pattern is the returned atom at 0.
///
/// Built by folding in one weight at a time,
/// `law_{m} = ½·law_{m−1} + ½·(law_{m−1} ⋆ h_m)`, with each `h_m` discretized
/// into exact cell masses so that total mass is preserved for weights much
/// narrower than a grid cell. The grid must have a node at 0.
pub fn fd_density_small_n(depth: usize, grid: GridSpec) -> Result<(GridDensity, f64)> {
    if depth > MAX_MIXTURE_DEPTH {
        return Err(Error::MixtureTooLarge(depth));
    }
    if depth == 0 {
        return Err(invalid("depth", "need at least one weight"));
    }
    let step = grid.step();
    let zero_pos = -grid.lo / step;
    let zero_idx = zero_pos.round();
    if zero_idx < 0.0 || zero_idx >= grid.points as f64 || (zero_pos - zero_idx).abs() > 1e-6 {
        return Err(Error::InvalidGrid("grid must have a node at 0".into()));
    }
    let zero_idx = zero_idx as usize;
    let support: f64 = (1..=depth).map(|m| weight_bounds(m).1).sum();
    if grid.hi < support {
        return Err(Error::InvalidGrid(format!(
            "grid ends at {} below the support bound {support}",
            grid.hi
        )));
    }

    // masses[i] is the continuous mass carried by the cell around node i.
    let mut masses = vec![0.0; grid.points];
    let mut atom = 1.0;
    for m in 1..=depth {
        let kernel = cell_masses(m, step);
        let mut next: Vec<f64> = masses.iter().map(|w| 0.5 * w).collect();
        for (i, &w) in masses.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(offset, k) in kernel.iter() {
                if let Some(slot) = next.get_mut(i + offset) {
                    *slot += 0.5 * w * k;
                }
            }
        }
        for &(offset, k) in kernel.iter() {
            if let Some(slot) = next.get_mut(zero_idx + offset) {
                *slot += 0.5 * atom * k;
            }
        }
        masses = next;
        atom *= 0.5;
    }
    let values = masses.iter().map(|w| w / step).collect();
    Ok((GridDensity::new(grid.lo, step, values)?, atom))
}

/// Mass of `V_m` falling in each cell `[(t − ½)h, (t + ½)h)`, keyed by offset `t`.
fn cell_masses(m: usize, step: f64) -> Vec<(usize, f64)> {
    let (lo, hi) = weight_bounds(m);
    let first = (lo / step - 0.5).floor().max(0.0) as usize;
    let last = (hi / step + 0.5).ceil() as usize;
    (first..=last)
        .filter_map(|t| {
            let a = (t as f64 - 0.5) * step;
            let b = (t as f64 + 0.5) * step;
            let mass = (weight_cdf(m, b) - weight_cdf(m, a)).max(0.0);
            (mass > 0.0).then_some((t, mass))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn sampled_weights_respect_sure_bounds() {
        for seed in 0..50 {
            let w = WeightSequence::sample(MAX_DEPTH, &mut substream(seed, 0));
            assert!(WeightSequence::new(w.values().to_vec()).is_ok());
            assert!(w.values().windows(2).all(|p| p[0] > p[1]));
        }
    }

    #[test]
    fn weight_cdf_matches_density() {
        for m in [1usize, 2, 3, 5] {
            let (lo, hi) = weight_bounds(m);
            let n = 20_000;
            let h = (hi - lo) / n as f64;
            let integral: f64 = (0..n)
                .map(|i| weight_density(m, lo + (i as f64 + 0.5) * h) * h)
                .sum();
            assert!((integral - 1.0).abs() < 1e-3, "m={m}: {integral}");
            let mid = 0.5 * (lo + hi);
            let partial: f64 = (0..n)
                .map(|i| {
                    let x = lo + (i as f64 + 0.5) * (mid - lo) / n as f64;
                    weight_density(m, x) * (mid - lo) / n as f64
                })
                .sum();
            assert!((partial - weight_cdf(m, mid)).abs() < 1e-3);
        }
    }

    #[test]
    fn depth_one_mixture() {
        let grid = default_fd_grid(1, 2049).unwrap();
        let (density, atom) = fd_density_small_n(1, grid).unwrap();
        assert_eq!(atom, 0.5);
        assert!((density.integral() - 0.5).abs() < 1e-12);
        // Half of Uniform(1/2, 1) away from the edge cells.
        for x in [0.55, 0.7, 0.95] {
            assert!((density.value_at(x) - 1.0).abs() < 1e-9, "f({x})");
        }
        assert!(density.value_at(0.3) == 0.0);
    }

    #[test]
    fn mixture_too_large() {
        let grid = default_fd_grid(13, 1025).unwrap();
        assert_eq!(fd_density_small_n(13, grid), Err(Error::MixtureTooLarge(13)));
    }

    #[test]
    fn grid_needs_zero_node() {
        let grid = GridSpec::new(-0.013, 2.0, 1000).unwrap();
        assert!(fd_density_small_n(3, grid).is_err());
    }

    #[test]
    fn enumerated_atoms_have_uniform_mass() {
        let w = WeightSequence::sample(6, &mut substream(3, 0));
        let alpha = directing_atoms(&w).unwrap();
        assert_eq!(alpha.atoms().len(), 64);
        assert!((alpha.total_mass() - 1.0).abs() < 1e-15);
    }
}
