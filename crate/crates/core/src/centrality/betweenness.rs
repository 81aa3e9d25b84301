//! Betweenness over unordered endpoint pairs, endpoints excluded.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closeness::bfs_distances;
use super::CentralityScores;
use crate::network::Network;

/// Sources per work unit; fixed so the floating-point reduction order does
/// not depend on the thread count.
const SOURCE_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetweennessSemantics {
    /// Brandes: each pair credits `sigma_pq(i) / sigma_pq` to node `i`.
    #[default]
    Fractional,
    /// Each pair credits 1 to every node on at least one of its geodesics.
    /// Needs all-pairs distances: O(N^2) memory, O(N^3) time.
    Indicator,
}

pub fn betweenness_centrality(net: &Network, semantics: BetweennessSemantics) -> CentralityScores {
    let values = match semantics {
        BetweennessSemantics::Fractional => brandes(net),
        BetweennessSemantics::Indicator => indicator(net),
    };
    let name = match semantics {
        BetweennessSemantics::Fractional => "betweenness",
        BetweennessSemantics::Indicator => "betweenness-indicator",
    };
    CentralityScores::new(name, values)
}

struct BrandesScratch {
    stack: Vec<usize>,
    queue: VecDeque<usize>,
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
}

impl BrandesScratch {
    fn new(n: usize) -> Self {
        BrandesScratch {
            stack: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
        }
    }

    /// Adds the dependencies of `source` onto `acc`.
    fn accumulate(&mut self, net: &Network, source: usize, acc: &mut [f64]) {
        self.stack.clear();
        self.queue.clear();
        self.dist.fill(-1);
        self.sigma.fill(0.0);
        self.delta.fill(0.0);
        self.dist[source] = 0;
        self.sigma[source] = 1.0;
        self.queue.push_back(source);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &w in net.neighbors(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                }
            }
        }
        while let Some(w) = self.stack.pop() {
            // predecessors of w are neighbors one level closer to the source
            for &v in net.neighbors(w) {
                if self.dist[v] >= 0 && self.dist[v] + 1 == self.dist[w] {
                    self.delta[v] += self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
                }
            }
            if w != source {
                acc[w] += self.delta[w];
            }
        }
    }
}

fn brandes(net: &Network) -> Vec<f64> {
    let n = net.node_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_BLOCK)
        .map(|block| {
            let mut scratch = BrandesScratch::new(n);
            let mut acc = vec![0.0; n];
            for &s in block {
                scratch.accumulate(net, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    // every unordered pair was visited from both endpoints
    total.iter_mut().for_each(|t| *t /= 2.0);
    total
}

fn indicator(net: &Network) -> Vec<f64> {
    let n = net.node_count();
    let mut dist = vec![0u32; n * n];
    let mut queue = VecDeque::with_capacity(n);
    for (s, row) in dist.chunks_mut(n.max(1)).enumerate().take(n) {
        bfs_distances(net, s, row, &mut queue);
    }
    let dist = &dist;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let di = &dist[i * n..(i + 1) * n];
            let mut count = 0u64;
            for p in 0..n {
                if p == i || di[p] == u32::MAX {
                    continue;
                }
                let dp = &dist[p * n..(p + 1) * n];
                for q in p + 1..n {
                    if q == i || di[q] == u32::MAX {
                        continue;
                    }
                    if di[p] as u64 + di[q] as u64 == dp[q] as u64 {
                        count += 1;
                    }
                }
            }
            count as f64
        })
        .collect()
}
