//! Node centrality measures and centrality-ranked grouping.
//!
//! Each measure implements [`CentralityMeasure`] and is looked up by name in a
//! [`MeasureRegistry`], so callers (and the command line) pick one at run time.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::num;
use crate::network::Network;

mod betweenness;
mod closeness;
mod degree;
mod grouping;
mod pagerank;

pub use betweenness::{betweenness_centrality, BetweennessSemantics};
pub use closeness::closeness_centrality;
pub use degree::degree_centrality;
pub use grouping::{group_by_centrality, Grouping};
pub use pagerank::{pagerank_centrality, pagerank_residual, PageRankParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityScores {
    pub measure: String,
    pub values: Vec<f64>,
    /// Parameters the measure was computed with, by name.
    pub params: BTreeMap<String, f64>,
}

impl CentralityScores {
    pub(crate) fn new(measure: &str, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        CentralityScores {
            measure: measure.to_string(),
            values,
            params: BTreeMap::new(),
        }
    }

    pub(crate) fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV `node,score` without a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{j},{}", num(*v))?;
        }
        Ok(())
    }
}

pub trait CentralityMeasure: Send + Sync {
    fn name(&self) -> &'static str;
    fn compute(&self, net: &Network) -> Result<CentralityScores>;
}

struct Degree;

impl CentralityMeasure for Degree {
    fn name(&self) -> &'static str {
        "degree"
    }
    fn compute(&self, net: &Network) -> Result<CentralityScores> {
        Ok(degree_centrality(net))
    }
}

struct Closeness;

impl CentralityMeasure for Closeness {
    fn name(&self) -> &'static str {
        "closeness"
    }
    fn compute(&self, net: &Network) -> Result<CentralityScores> {
        closeness_centrality(net)
    }
}

struct Betweenness(BetweennessSemantics);

impl CentralityMeasure for Betweenness {
    fn name(&self) -> &'static str {
        match self.0 {
            BetweennessSemantics::Fractional => "betweenness",
            BetweennessSemantics::Indicator => "betweenness-indicator",
        }
    }
    fn compute(&self, net: &Network) -> Result<CentralityScores> {
        Ok(betweenness_centrality(net, self.0))
    }
}

struct PageRank(PageRankParams);

impl CentralityMeasure for PageRank {
    fn name(&self) -> &'static str {
        "pagerank"
    }
    fn compute(&self, net: &Network) -> Result<CentralityScores> {
        pagerank_centrality(net, &self.0)
    }
}

/// Name-keyed collection of centrality measures.
#[derive(Clone)]
pub struct MeasureRegistry {
    measures: BTreeMap<&'static str, Arc<dyn CentralityMeasure>>,
}

impl MeasureRegistry {
    pub fn empty() -> Self {
        MeasureRegistry {
            measures: BTreeMap::new(),
        }
    }

    /// The built-in measures, with pagerank configured by `pagerank`.
    pub fn with_defaults(pagerank: PageRankParams) -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(Degree));
        reg.register(Arc::new(Closeness));
        reg.register(Arc::new(Betweenness(BetweennessSemantics::Fractional)));
        reg.register(Arc::new(Betweenness(BetweennessSemantics::Indicator)));
        reg.register(Arc::new(PageRank(pagerank)));
        reg
    }

    pub fn register(&mut self, measure: Arc<dyn CentralityMeasure>) {
        self.measures.insert(measure.name(), measure);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CentralityMeasure>> {
        self.measures
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownName {
                kind: "centrality measure",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.measures.keys().copied().collect()
    }
}

impl Default for MeasureRegistry {
    fn default() -> Self {
        Self::with_defaults(PageRankParams::default())
    }
}

impl fmt::Debug for MeasureRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.measures.keys()).finish()
    }
}
