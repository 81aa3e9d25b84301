use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::{self, Write};

use super::CentralityScores;
use crate::error::{invalid, Result};

/// Partition of the nodes into `M` nonempty control groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Grouping {
    group_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Grouping {
    /// Builds a grouping from a node -> group table; every group in
    /// `0..group_count` must be used.
    pub fn new(group_of: Vec<usize>, group_count: usize) -> Result<Self> {
        if group_count == 0 {
            return Err(invalid("number of groups must be at least 1"));
        }
        let mut members = vec![Vec::new(); group_count];
        for (j, &g) in group_of.iter().enumerate() {
            if g >= group_count {
                return Err(invalid(format!(
                    "node {j} assigned to group {g} >= {group_count}"
                )));
            }
            members[g].push(j);
        }
        if let Some(m) = members.iter().position(Vec::is_empty) {
            return Err(invalid(format!("group {m} is empty")));
        }
        Ok(Grouping { group_of, members })
    }

    /// Everyone in one group.
    pub fn single(node_count: usize) -> Result<Self> {
        Self::new(vec![0; node_count], 1)
    }

    /// One group per node, node `j` in group `j`.
    pub fn per_node(node_count: usize) -> Result<Self> {
        Self::new((0..node_count).collect(), node_count)
    }

    pub fn node_count(&self) -> usize {
        self.group_of.len()
    }

    pub fn group_count(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn group_of(&self, node: usize) -> usize {
        self.group_of[node]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.group_of
    }

    pub fn members(&self, group: usize) -> &[usize] {
        &self.members[group]
    }

    pub fn size(&self, group: usize) -> usize {
        self.members[group].len()
    }

    /// `p_m = |N_m| / N`.
    pub fn fraction(&self, group: usize) -> f64 {
        self.size(group) as f64 / self.node_count() as f64
    }

    pub fn fractions(&self) -> Vec<f64> {
        (0..self.group_count()).map(|m| self.fraction(m)).collect()
    }

    /// CSV `node,group` without a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (j, g) in self.group_of.iter().enumerate() {
            writeln!(out, "{j},{g}")?;
        }
        Ok(())
    }
}

/// Ranks nodes by ascending score and cuts the ranking into `groups` blocks:
/// group 0 holds the lowest scores, group `M-1` the highest. The first
/// `N mod M` groups get one extra node. Nodes with equal scores are ordered
/// by a seeded shuffle, so a tie across a boundary is split at random.
pub fn group_by_centrality(
    scores: &CentralityScores,
    groups: usize,
    rng_seed: u64,
) -> Result<Grouping> {
    let n = scores.values.len();
    if groups == 0 {
        return Err(invalid("number of groups must be at least 1"));
    }
    if groups > n {
        return Err(invalid(format!(
            "cannot split {n} nodes into {groups} nonempty groups"
        )));
    }
    let values = &scores.values;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].shuffle(&mut rng);
        }
        start = end;
    }

    let base = n / groups;
    let extra = n % groups;
    let mut group_of = vec![0; n];
    let mut pos = 0;
    for m in 0..groups {
        let size = base + usize::from(m < extra);
        for &j in &order[pos..pos + size] {
            group_of[j] = m;
        }
        pos += size;
    }
    Grouping::new(group_of, groups)
}
