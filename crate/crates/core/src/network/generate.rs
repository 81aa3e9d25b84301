//! Small deterministic and seeded random graph families.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Network;

pub fn empty(n: usize) -> Network {
    Network::with_edges(n, std::iter::empty()).unwrap()
}

pub fn path(n: usize) -> Network {
    Network::with_edges(n, (1..n).map(|v| (v - 1, v))).unwrap()
}

pub fn cycle(n: usize) -> Network {
    Network::with_edges(n, (0..n).map(|v| (v, (v + 1) % n))).unwrap()
}

pub fn complete(n: usize) -> Network {
    Network::with_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).unwrap()
}

/// Node 0 joined to nodes `1..n`.
pub fn star(n: usize) -> Network {
    Network::with_edges(n, (1..n).map(|v| (0, v))).unwrap()
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Network::with_edges(n, edges).unwrap()
}

/// Uniform random recursive tree: node `v` attaches to a uniform earlier node.
pub fn random_tree(n: usize, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    Network::with_edges(n, edges).unwrap()
}

/// Preferential attachment: starts from a clique on `m + 1` nodes and adds
/// each new node with `m` distinct neighbors drawn proportionally to degree.
pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Network {
    assert!(m >= 1 && n > m, "need n > m >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    // each node appears once per incident edge end
    let mut ends: Vec<usize> = Vec::new();
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            ends.push(u);
            ends.push(v);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for v in m + 1..n {
        chosen.clear();
        while chosen.len() < m {
            let w = *ends.choose(&mut rng).unwrap();
            if !chosen.contains(&w) {
                chosen.push(w);
            }
        }
        for &w in &chosen {
            edges.push((w, v));
            ends.push(w);
            ends.push(v);
        }
    }
    Network::with_edges(n, edges).unwrap()
}

/// Node 0 joined to `leaves` leaves, followed by `isolated` lone nodes.
pub fn hub_and_isolates(leaves: usize, isolated: usize) -> Network {
    Network::with_edges(1 + leaves + isolated, (1..=leaves).map(|v| (0, v))).unwrap()
}
