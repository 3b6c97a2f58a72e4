//! Mallows ranking model: a center permutation plus a concentration
//! parameter, with probability decaying exponentially in Kendall distance
//! from the center.
//!
//! Sampling uses the repeated-insertion construction. Item `i` of the center
//! (1-indexed) is inserted into the growing order at a displacement
//! `v_i ∈ {0, …, i-1}` drawn with weight `exp(-theta · v_i)`; the total
//! Kendall distance of the result from the center is exactly `Σ v_i`. At
//! `theta = 0` every displacement is uniform and the model is the uniform
//! distribution over permutations — the null used throughout.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rank::{kendall_tau_numerator, pairs_of, Ranking};
use crate::rng::{chunk_rng, StatRng};

/// Center ranking plus concentration `theta >= 0`.
#[derive(Debug, Clone)]
pub struct MallowsParams {
    center: Ranking,
    theta: f64,
}

impl MallowsParams {
    pub fn new(center: Ranking, theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "theta must be finite and >= 0, got {theta}"
            )));
        }
        Ok(MallowsParams { center, theta })
    }

    /// Uniform distribution over permutations of `p` items.
    pub fn uniform(p: usize) -> Result<Self> {
        Ok(MallowsParams {
            center: Ranking::identity(p)?,
            theta: 0.0,
        })
    }

    pub fn center(&self) -> &Ranking {
        &self.center
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn item_count(&self) -> usize {
        self.center.item_count()
    }

    /// Natural log of the normalizing constant:
    /// `Σ_{i=1..p} ln Σ_{k=0..i-1} exp(-theta k)`.
    pub fn log_partition(&self) -> f64 {
        let p = self.item_count();
        (1..=p)
            .map(|i| (0..i).map(|k| (-self.theta * k as f64).exp()).sum::<f64>().ln())
            .sum()
    }

    /// Model probability of `ranking`.
    pub fn prob_of(&self, ranking: &Ranking) -> Result<f64> {
        let d = kendall_distance(&self.center, ranking)? as f64;
        Ok((-self.theta * d - self.log_partition()).exp())
    }
}

/// Kendall distance: number of discordant pairs between two rankings.
pub fn kendall_distance(a: &Ranking, b: &Ranking) -> Result<u64> {
    let num = kendall_tau_numerator(a, b)?;
    Ok(((pairs_of(a.item_count()) - num) / 2) as u64)
}

/// Draw one ranking, returning it with its Kendall distance from the center.
pub fn sample_with_distance(params: &MallowsParams, rng: &mut StatRng) -> (Ranking, u64) {
    let p = params.item_count();
    let center_order = params.center.to_order();
    let theta = params.theta;
    let mut order: Vec<usize> = Vec::with_capacity(p);
    let mut distance = 0u64;
    for (i, &item) in center_order.iter().enumerate() {
        // Displacement v ∈ {0..=i}: weight exp(-theta v); v counts the new
        // inversions this insertion creates against the center.
        let v = if theta == 0.0 {
            rng.random_range(0..=i)
        } else {
            let weights: Vec<f64> = (0..=i).map(|k| (-theta * k as f64).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut chosen = i;
            for (k, w) in weights.iter().enumerate() {
                if u < *w {
                    chosen = k;
                    break;
                }
                u -= w;
            }
            chosen
        };
        distance += v as u64;
        order.insert(i - v, item);
    }
    let ranking = Ranking::from_order(&order).expect("insertion preserves the permutation");
    (ranking, distance)
}

/// Draw one ranking.
pub fn sample(params: &MallowsParams, rng: &mut StatRng) -> Ranking {
    sample_with_distance(params, rng).0
}

/// Draw `r` independent rankings — one synthetic rater panel.
pub fn sample_panel(params: &MallowsParams, r: usize, rng: &mut StatRng) -> Vec<Ranking> {
    (0..r).map(|_| sample(params, rng)).collect()
}

/// Draw `n_panels` panels of `r` rankings each, deterministically from
/// `seed`. Panel `i` uses its own generator chunk, so any partition of the
/// work across threads reproduces the same panels.
pub fn sample_panel_set(
    params: &MallowsParams,
    r: usize,
    n_panels: usize,
    seed: u64,
) -> Vec<Vec<Ranking>> {
    (0..n_panels)
        .map(|i| sample_panel(params, r, &mut chunk_rng(seed, i as u64)))
        .collect()
}
