use serde::{Deserialize, Serialize};

use super::CentralityScores;
use crate::error::{invalid, Error, Result};
use crate::network::Network;

/// Parameters of the fixed point `P_i = eta * sum_j A_ij P_j / k_j + delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub eta: f64,
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            eta: 0.85,
            delta: 1.0,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

fn apply(net: &Network, params: &PageRankParams, scaled: &mut [f64], p: &[f64], out: &mut [f64]) {
    for (j, s) in scaled.iter_mut().enumerate() {
        let k = net.degree(j);
        *s = if k == 0 { 0.0 } else { p[j] / k as f64 };
    }
    net.mul_vec(scaled, out);
    for o in out.iter_mut() {
        *o = params.eta * *o + params.delta;
    }
}

/// Sup-norm residual of the fixed-point equations at `p`.
pub fn pagerank_residual(net: &Network, params: &PageRankParams, p: &[f64]) -> f64 {
    let n = net.node_count();
    let mut scaled = vec![0.0; n];
    let mut next = vec![0.0; n];
    apply(net, params, &mut scaled, p, &mut next);
    p.iter()
        .zip(&next)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Repeated substitution from `P_i = delta` until the residual of the
/// current iterate is at most `tol * (1 - eta)`, so on regular graphs the
/// distance to the fixed point is below `tol` as well.
pub fn pagerank_centrality(net: &Network, params: &PageRankParams) -> Result<CentralityScores> {
    if !(0.0..1.0).contains(&params.eta) {
        return Err(invalid(format!(
            "pagerank eta must be in [0, 1), got {}",
            params.eta
        )));
    }
    if !(params.delta > 0.0) || !(params.tol > 0.0) || params.max_iter == 0 {
        return Err(invalid(
            "pagerank needs delta > 0, tol > 0 and max_iter >= 1",
        ));
    }
    let n = net.node_count();
    if params.eta > 0.0 {
        if let Some(node) = (0..n).find(|&j| net.degree(j) == 0) {
            return Err(Error::IsolatedNode { node });
        }
    }
    let mut p = vec![params.delta; n];
    let mut next = vec![0.0; n];
    let mut scaled = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let stop = params.tol * (1.0 - params.eta);
    for _ in 0..params.max_iter {
        apply(net, params, &mut scaled, &p, &mut next);
        residual = p
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= stop {
            let scores = CentralityScores::new("pagerank", p)
                .with_param("eta", params.eta)
                .with_param("delta", params.delta)
                .with_param("tol", params.tol);
            return Ok(scores);
        }
        std::mem::swap(&mut p, &mut next);
    }
    Err(Error::NoConvergence {
        iterations: params.max_iter,
        residual,
    })
}
