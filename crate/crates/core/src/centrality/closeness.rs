use std::collections::VecDeque;

use rayon::prelude::*;

use super::CentralityScores;
use crate::error::{Error, Result};
use crate::network::Network;

/// Unweighted hop distances from `source`; `u32::MAX` marks unreachable nodes.
pub(crate) fn bfs_distances(
    net: &Network,
    source: usize,
    dist: &mut [u32],
    queue: &mut VecDeque<usize>,
) {
    dist.fill(u32::MAX);
    queue.clear();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for &w in net.neighbors(v) {
            if dist[w] == u32::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
}

/// `C_i = N / sum_j d_ij`, with `d_ii = 0` counted in the sum.
///
/// A single-node network has no distances to average and scores 0.
pub fn closeness_centrality(net: &Network) -> Result<CentralityScores> {
    let n = net.node_count();
    let (_, components) = net.component_labels();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0u32; n], VecDeque::with_capacity(n)),
            |(dist, queue), source| {
                bfs_distances(net, source, dist, queue);
                let total: u64 = dist.iter().map(|&d| d as u64).sum();
                if total == 0 {
                    0.0
                } else {
                    n as f64 / total as f64
                }
            },
        )
        .collect();
    Ok(CentralityScores::new("closeness", values))
}
