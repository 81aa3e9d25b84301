use super::CentralityScores;
use crate::network::Network;

pub fn degree_centrality(net: &Network) -> CentralityScores {
    let values = (0..net.node_count())
        .map(|j| net.degree(j) as f64)
        .collect();
    CentralityScores::new("degree", values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate;

    #[test]
    fn small_graphs() {
        assert_eq!(
            degree_centrality(&generate::path(3)).values,
            vec![1.0, 2.0, 1.0]
        );
        assert_eq!(degree_centrality(&generate::empty(1)).values, vec![0.0]);
        assert_eq!(
            degree_centrality(&generate::complete(4)).values,
            vec![3.0; 4]
        );
    }
}
