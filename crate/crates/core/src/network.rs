//! Undirected, unweighted graphs stored as compressed sparse rows.
//!
//! Every [`Network`] upholds the same invariants no matter how it was built:
//! the adjacency is symmetric, there are no self-loops, and each neighbor list
//! is sorted ascending without duplicates.

use std::collections::{HashMap, VecDeque};
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};

pub mod generate;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Network {
    /// Builds a network on `node_count` nodes. Duplicate and reversed edges
    /// collapse; self-loops are dropped and counted in the returned tally.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<(Self, BuildStats)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        let mut stats = BuildStats::default();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            lists[u].push(v);
            lists[v].push(u);
            stats.raw_edges += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        let net = Network { offsets, neighbors };
        stats.duplicates = stats.raw_edges - net.edge_count();
        Ok((net, stats))
    }

    /// Builds a network, discarding the build tally.
    pub fn with_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges(node_count, edges).map(|(net, _)| net)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|j| self.degree(j)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` pairs with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// `out = A x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.node_count());
        debug_assert_eq!(out.len(), self.node_count());
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.neighbors(j).iter().map(|&k| x[k]).sum();
        }
    }

    /// Checks symmetry, zero diagonal and sorted unique neighbor lists.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        for j in 0..n {
            let nb = self.neighbors(j);
            for w in nb.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidParameter(format!(
                        "neighbor list of {j} is not strictly ascending"
                    )));
                }
            }
            for &k in nb {
                if k == j {
                    return Err(Error::InvalidParameter(format!("self-loop at {j}")));
                }
                if k >= n || !self.has_edge(k, j) {
                    return Err(Error::InvalidParameter(format!(
                        "edge {j}-{k} is not symmetric"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Component label per node; labels are numbered by smallest member.
    pub fn component_labels(&self) -> (Vec<usize>, usize) {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for root in 0..n {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = count;
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.component_labels().1 <= 1
    }

    /// Induced subgraph on `keep` (any order); new ids follow ascending old id.
    pub fn induced_subgraph(&self, keep: &[usize]) -> (Network, NodeMap) {
        let mut nodes = keep.to_vec();
        nodes.sort_unstable();
        nodes.dedup();
        let mut old_to_new = vec![None; self.node_count()];
        for (new, &old) in nodes.iter().enumerate() {
            old_to_new[old] = Some(new);
        }
        let edges = nodes.iter().flat_map(|&u| {
            let map = &old_to_new;
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .filter_map(move |&v| map[v].map(|nv| (map[u].unwrap(), nv)))
        });
        let edges: Vec<_> = edges.collect();
        let sub = Network::with_edges(nodes.len(), edges).expect("induced edges are in range");
        (sub, NodeMap { old_to_new })
    }
}

/// Tally of what was collapsed or dropped while building a network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub raw_edges: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Correspondence between the ids of a parent network and a derived one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMap {
    old_to_new: Vec<Option<usize>>,
}

impl NodeMap {
    pub fn get(&self, old: usize) -> Option<usize> {
        self.old_to_new.get(old).copied().flatten()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.old_to_new
            .iter()
            .enumerate()
            .filter_map(|(old, new)| new.map(|n| (old, n)))
    }

    /// Two-column CSV `old,new`, one row per retained node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "old,new")?;
        for (old, new) in self.pairs() {
            writeln!(out, "{old},{new}")?;
        }
        Ok(())
    }
}

/// A network read from an edge list, remembering the original ids.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: Network,
    /// `original_ids[new] = id in the file`.
    pub original_ids: Vec<u64>,
    pub stats: BuildStats,
}

/// Reads a SNAP-style edge list. Ids are relabeled to `0..N` in order of
/// first appearance.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<LoadedNetwork> {
    let mut ids: HashMap<u64, usize> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |raw: u64| -> usize {
        *ids.entry(raw).or_insert_with(|| {
            original_ids.push(raw);
            original_ids.len() - 1
        })
    };
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let mut next_id = || -> Result<u64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: lineno,
                message: "expected two node ids".into(),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("'{tok}' is not a nonnegative integer node id"),
            })
        };
        let u = next_id()?;
        let v = next_id()?;
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                message: "expected exactly two node ids".into(),
            });
        }
        let (u, v) = (intern(u), intern(v));
        edges.push((u, v));
    }
    if original_ids.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (network, stats) = Network::from_edges(original_ids.len(), edges)?;
    if stats.self_loops > 0 {
        log::warn!(
            "dropped {} self-loop line(s) while loading edge list",
            stats.self_loops
        );
    }
    Ok(LoadedNetwork {
        network,
        original_ids,
        stats,
    })
}

pub fn parse_edge_list(text: &str) -> Result<LoadedNetwork> {
    load_edge_list(text.as_bytes())
}

/// Writes `net` as an edge list that [`load_edge_list`] reads back to the
/// identical network.
///
/// Node `v` first appears on a line `v w` with `w < v`; nodes with no lower
/// neighbor are declared by a `v v` line, which the loader discards as a
/// self-loop after registering the id.
pub fn save_edge_list<W: Write>(net: &Network, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "# nodes: {} edges: {}",
        net.node_count(),
        net.edge_count()
    )?;
    for v in 0..net.node_count() {
        let lower: Vec<usize> = net
            .neighbors(v)
            .iter()
            .copied()
            .take_while(|&w| w < v)
            .collect();
        if lower.is_empty() {
            writeln!(out, "{v} {v}")?;
        }
        for w in lower {
            writeln!(out, "{v} {w}")?;
        }
    }
    Ok(())
}

/// Largest connected component, ties broken by the smallest member id.
pub fn giant_component(net: &Network) -> (Network, NodeMap) {
    let (labels, count) = net.component_labels();
    let mut sizes = vec![0usize; count];
    for &l in &labels {
        sizes[l] += 1;
    }
    // labels are ordered by smallest member, so the first maximum wins ties
    let best = sizes
        .iter()
        .enumerate()
        .fold((0, 0), |acc, (l, &s)| if s > acc.1 { (l, s) } else { acc })
        .0;
    let keep: Vec<usize> = (0..net.node_count())
        .filter(|&j| labels[j] == best)
        .collect();
    net.induced_subgraph(&keep)
}

/// Induced subgraph on the first `target` nodes reached by a level-synchronous
/// breadth-first traversal from `start`; each level is visited in ascending id.
pub fn bfs_sample(net: &Network, start: usize, target: usize) -> Result<(Network, NodeMap)> {
    let n = net.node_count();
    if start >= n {
        return Err(Error::InvalidParameter(format!(
            "start node {start} not in 0..{n}"
        )));
    }
    if target == 0 || target > n {
        return Err(Error::InvalidParameter(format!(
            "sample size {target} must be in 1..={n}"
        )));
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(target);
    let mut level = vec![start];
    seen[start] = true;
    'outer: while !level.is_empty() {
        for &v in &level {
            order.push(v);
            if order.len() == target {
                break 'outer;
            }
        }
        let mut next = Vec::new();
        for &v in &level {
            for &w in net.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        next.sort_unstable();
        level = next;
    }
    if order.len() < target {
        return Err(Error::InvalidParameter(format!(
            "component of node {start} has only {} nodes, fewer than {target}",
            order.len()
        )));
    }
    Ok(net.induced_subgraph(&order))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_path() {
        let loaded = parse_edge_list("0 1\n1 2").unwrap();
        let net = &loaded.network;
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.edge_count(), 2);
        assert_eq!(net.degrees(), vec![1, 2, 1]);
    }

    #[test]
    fn collapses_duplicates_and_drops_self_loops() {
        let loaded = parse_edge_list("# c\n5 7\n7 5\n5 5").unwrap();
        assert_eq!(loaded.network.node_count(), 2);
        assert_eq!(loaded.network.edge_count(), 1);
        assert_eq!(loaded.stats.self_loops, 1);
        assert_eq!(loaded.stats.duplicates, 1);
        assert_eq!(loaded.original_ids, vec![5, 7]);
    }

    #[test]
    fn reports_line_of_bad_token() {
        match parse_edge_list("0 1\n1 x") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_edge_list("0 1 2"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 -1"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_empty_input() {
        assert_eq!(parse_edge_list("").unwrap_err(), Error::EmptyInput);
        assert_eq!(
            parse_edge_list("# only\n\n").unwrap_err(),
            Error::EmptyInput
        );
    }

    #[test]
    fn relabels_in_first_appearance_order() {
        let loaded = parse_edge_list("10 3\n3 42\n").unwrap();
        assert_eq!(loaded.original_ids, vec![10, 3, 42]);
        assert!(loaded.network.has_edge(0, 1));
        assert!(loaded.network.has_edge(1, 2));
    }

    #[test]
    fn save_then_load_is_identity() {
        let net = Network::with_edges(6, [(0, 3), (3, 1), (2, 5), (1, 2)]).unwrap();
        let mut buf = Vec::new();
        save_edge_list(&net, &mut buf).unwrap();
        let back = load_edge_list(buf.as_slice()).unwrap().network;
        assert_eq!(back, net);
    }

    #[test]
    fn giant_component_picks_triangle() {
        let net = Network::with_edges(7, [(0, 1), (2, 3), (4, 5), (5, 6), (4, 6)]).unwrap();
        let (gc, map) = giant_component(&net);
        assert_eq!(gc.node_count(), 3);
        assert_eq!(gc.edge_count(), 3);
        assert_eq!(map.get(4), Some(0));
        assert_eq!(map.get(0), None);
    }

    #[test]
    fn giant_component_tie_goes_to_smallest_id() {
        let net = Network::with_edges(4, [(2, 3), (0, 1)]).unwrap();
        let (_, map) = giant_component(&net);
        assert_eq!(map.pairs().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn giant_component_of_connected_and_singleton() {
        let net = generate::path(5);
        let (gc, _) = giant_component(&net);
        assert_eq!(gc, net);
        let single = Network::with_edges(1, []).unwrap();
        assert_eq!(giant_component(&single).0.node_count(), 1);
    }

    #[test]
    fn bfs_sample_on_path_and_star() {
        let path = generate::path(4);
        let (sub, _) = bfs_sample(&path, 0, 2).unwrap();
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 1);

        let star = generate::star(6);
        let (sub, map) = bfs_sample(&star, 0, 3).unwrap();
        assert_eq!(map.pairs().map(|p| p.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(sub.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn bfs_sample_levels_are_sorted() {
        // 0 -> {5, 1}; 5 -> 2; 1 -> 3. Level 2 is {2, 3}, visited ascending.
        let net = Network::with_edges(6, [(0, 5), (0, 1), (5, 2), (1, 3), (3, 4)]).unwrap();
        let (_, map) = bfs_sample(&net, 0, 4).unwrap();
        let kept: Vec<_> = map.pairs().map(|p| p.0).collect();
        assert_eq!(kept, vec![0, 1, 2, 5]);
    }

    #[test]
    fn bfs_sample_errors() {
        let net = Network::with_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(bfs_sample(&net, 0, 5).is_err());
        assert!(bfs_sample(&net, 0, 3).is_err());
        assert_eq!(bfs_sample(&net, 0, 2).unwrap().0.node_count(), 2);
    }
}
