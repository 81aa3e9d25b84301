//! Stochastic SI simulation used to check the mean-field ODE.
//!
//! Each run seeds node `j` with probability `seed_prob[j]`, then steps through
//! the control grid split into `substeps` pieces. Over a piece of length `d` a
//! susceptible node flips with probability `1 - exp(-d * hazard)`, where the
//! hazard `beta * (infected neighbours) + u_{g(j)}` is taken at the start of
//! the piece. This is realised by giving each node an exponential threshold
//! and flipping it once its accumulated hazard passes the threshold, so runs
//! with different `substeps` share their randomness.
//!
//! Run `r` draws from ChaCha8 seeded with `rng_seed` on stream `r`, so results
//! do not depend on how runs are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::Grouping;
use crate::dynamics::{check_dimensions, check_seed, ControlSchedule};
use crate::error::{invalid, Result};
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub runs: usize,
    pub rng_seed: u64,
    pub substeps: usize,
    /// Number of equal-width bins on `[0, 1]` for the reach histogram.
    pub histogram_bins: Option<usize>,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            runs: 10_000,
            rng_seed: 0,
            substeps: 4,
            histogram_bins: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub runs: usize,
    pub mean_reach: f64,
    /// Sample standard deviation over `sqrt(runs)`.
    pub stderr: f64,
    pub reach_histogram: Option<Vec<usize>>,
    pub rng_seed: u64,
    pub substeps: usize,
}

pub fn simulate(
    net: &Network,
    grp: &Grouping,
    ctrl: &ControlSchedule,
    seed_prob: &[f64],
    beta: f64,
    params: &McParams,
) -> Result<McResult> {
    check_dimensions(net, grp, ctrl)?;
    check_seed(seed_prob, net.node_count())?;
    if params.runs == 0 || params.substeps == 0 {
        return Err(invalid("simulation needs runs >= 1 and substeps >= 1"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be nonnegative, got {beta}")));
    }
    if params.histogram_bins == Some(0) {
        return Err(invalid("histogram needs at least one bin"));
    }
    let reaches: Vec<f64> = (0..params.runs)
        .into_par_iter()
        .map(|r| single_run(net, grp, ctrl, seed_prob, beta, params, r as u64))
        .collect();

    let n = reaches.len() as f64;
    let mean_reach = reaches.iter().sum::<f64>() / n;
    let stderr = if reaches.len() > 1 {
        let var = reaches
            .iter()
            .map(|x| (x - mean_reach).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let reach_histogram = params.histogram_bins.map(|bins| {
        let mut h = vec![0; bins];
        for &x in &reaches {
            h[((x * bins as f64) as usize).min(bins - 1)] += 1;
        }
        h
    });
    Ok(McResult {
        runs: params.runs,
        mean_reach,
        stderr,
        reach_histogram,
        rng_seed: params.rng_seed,
        substeps: params.substeps,
    })
}

fn single_run(
    net: &Network,
    grp: &Grouping,
    ctrl: &ControlSchedule,
    seed_prob: &[f64],
    beta: f64,
    params: &McParams,
    run: u64,
) -> f64 {
    let n = net.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    rng.set_stream(run);

    let mut infected = vec![false; n];
    let mut threshold = vec![0.0; n];
    for j in 0..n {
        infected[j] = rng.random::<f64>() < seed_prob[j];
        threshold[j] = -(1.0 - rng.random::<f64>()).ln();
    }
    let mut exposure = vec![0.0; n];
    let mut pressure = vec![0u32; n];
    for j in (0..n).filter(|&j| infected[j]) {
        for &k in net.neighbors(j) {
            pressure[k] += 1;
        }
    }
    let mut count = infected.iter().filter(|&&x| x).count();

    let grid = ctrl.grid();
    let d = grid.dt() / params.substeps as f64;
    let mut flips = Vec::new();
    let mut u = vec![0.0; grp.group_count()];
    for k in 0..grid.steps {
        for s in 0..params.substeps {
            if count == n {
                return 1.0;
            }
            let w = s as f64 / params.substeps as f64;
            for (m, v) in u.iter_mut().enumerate() {
                *v = (1.0 - w) * ctrl.get(m, k) + w * ctrl.get(m, k + 1);
            }
            flips.clear();
            for j in 0..n {
                if infected[j] {
                    continue;
                }
                exposure[j] += d * (beta * pressure[j] as f64 + u[grp.group_of(j)]);
                if exposure[j] >= threshold[j] {
                    flips.push(j);
                }
            }
            for &j in &flips {
                infected[j] = true;
                for &k in net.neighbors(j) {
                    pressure[k] += 1;
                }
            }
            count += flips.len();
        }
    }
    count as f64 / n as f64
}
