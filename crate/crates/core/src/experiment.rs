//! Parameter sweeps comparing strategies, and small statistics helpers.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::budget::BudgetParams;
use crate::centrality::{group_by_centrality, CentralityScores};
use crate::dynamics::{QuadraticCost, TimeGrid};
use crate::error::{invalid, Result};
use crate::fmt::num;
use crate::heuristics::HeuristicParams;
use crate::network::Network;
use crate::seed_opt::JointParams;
use crate::strategy::{Objective, Problem, StrategyRegistry};
use crate::sweep::SweepParams;

/// Below this `|J_static|` the improvement is reported as an absolute
/// difference times 100.
pub const STATIC_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Cost weight `b`.
    CostWeight,
    Beta,
    Groups,
    /// Resource budget `B`; strategies are compared on reach.
    Budget,
}

impl Axis {
    pub fn parse(name: &str) -> Result<Axis> {
        match name {
            "b" => Ok(Axis::CostWeight),
            "beta" => Ok(Axis::Beta),
            "m" | "M" | "groups" => Ok(Axis::Groups),
            "budget" | "B" => Ok(Axis::Budget),
            _ => Err(crate::Error::UnknownName {
                kind: "sweep axis",
                name: name.into(),
                available: "b, beta, M, B".into(),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::CostWeight => "b",
            Axis::Beta => "beta",
            Axis::Groups => "M",
            Axis::Budget => "B",
        }
    }
}

/// Base instance; the swept parameter overrides its field per point.
#[derive(Debug, Clone)]
pub struct SweepBase<'a> {
    pub net: &'a Network,
    pub scores: &'a CentralityScores,
    pub groups: usize,
    /// Seed for breaking centrality ties when grouping.
    pub rng_seed: u64,
    pub i0: f64,
    pub beta: f64,
    pub b: f64,
    pub grid: TimeGrid,
    pub sweep: SweepParams,
    pub heuristic: HeuristicParams,
    pub joint: JointParams,
    pub budget: BudgetParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub strategy: String,
    pub j: Option<f64>,
    pub reach: Option<f64>,
    pub spend: Option<f64>,
    pub pct_improvement_vs_static: Option<f64>,
    /// `ok`, `not-converged`, or the error that stopped this point.
    pub status: String,
}

/// `100 (J - J_static) / |J_static|`, or `100 (J - J_static)` when
/// `|J_static| < STATIC_FLOOR`.
pub fn pct_improvement(j: f64, j_static: f64) -> f64 {
    if j_static.abs() < STATIC_FLOOR {
        100.0 * (j - j_static)
    } else {
        100.0 * (j - j_static) / j_static.abs()
    }
}

pub fn run_sweep(
    base: &SweepBase,
    axis: Axis,
    values: &[f64],
    registry: &StrategyRegistry,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(invalid("sweep needs at least one axis value"));
    }
    if axis == Axis::Groups {
        if let Some(v) = values.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
            return Err(invalid(format!(
                "group count must be a positive integer, got {v}"
            )));
        }
    }
    let points: Vec<Vec<SweepRow>> = values
        .par_iter()
        .map(|&v| sweep_point(base, axis, v, registry))
        .collect();
    Ok(points.into_iter().flatten().collect())
}

fn sweep_point(
    base: &SweepBase,
    axis: Axis,
    value: f64,
    registry: &StrategyRegistry,
) -> Vec<SweepRow> {
    let failed = |status: String| -> Vec<SweepRow> {
        registry
            .names()
            .into_iter()
            .map(|name| SweepRow {
                axis_value: value,
                strategy: name.into(),
                j: None,
                reach: None,
                spend: None,
                pct_improvement_vs_static: None,
                status: status.clone(),
            })
            .collect()
    };
    let groups = if axis == Axis::Groups {
        value as usize
    } else {
        base.groups
    };
    let grp = match group_by_centrality(base.scores, groups, base.rng_seed) {
        Ok(g) => g,
        Err(e) => return failed(format!("error: {e}")),
    };
    let b = if axis == Axis::CostWeight {
        value
    } else {
        base.b
    };
    let cost = match QuadraticCost::new(b, &grp) {
        Ok(c) => c,
        Err(e) => return failed(format!("error: {e}")),
    };
    let problem = Problem {
        net: base.net,
        grp: &grp,
        i0: base.i0,
        beta: if axis == Axis::Beta { value } else { base.beta },
        cost,
        grid: base.grid,
        sweep: base.sweep,
        heuristic: base.heuristic,
        joint: base.joint,
        budget: base.budget,
    };
    let objective = if axis == Axis::Budget {
        Objective::Budget(value)
    } else {
        Objective::NetReward
    };

    let mut rows: Vec<SweepRow> = registry
        .iter()
        .map(|s| match s.run(&problem, objective) {
            Ok(out) => SweepRow {
                axis_value: value,
                strategy: out.strategy,
                j: Some(out.j),
                reach: Some(out.reach),
                spend: Some(out.spend),
                pct_improvement_vs_static: None,
                status: if out.converged { "ok" } else { "not-converged" }.into(),
            },
            Err(e) => SweepRow {
                axis_value: value,
                strategy: s.name().into(),
                j: None,
                reach: None,
                spend: None,
                pct_improvement_vs_static: None,
                status: match e {
                    crate::Error::Unsupported(msg) => format!("skipped: {msg}"),
                    e => format!("error: {e}"),
                },
            },
        })
        .collect();
    let j_static = rows
        .iter()
        .find(|r| r.strategy == "static")
        .and_then(|r| r.j);
    if let Some(js) = j_static {
        for r in &mut rows {
            r.pct_improvement_vs_static = r.j.map(|j| pct_improvement(j, js));
        }
    }
    rows
}

/// CSV with header `axis_value,strategy,J,reach,spend,pct_improvement_vs_static,status`;
/// missing values are empty fields.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "axis_value,strategy,J,reach,spend,pct_improvement_vs_static,status"
    )?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for r in rows {
        let status = if r.status.contains([',', '"', '\n']) {
            format!("\"{}\"", r.status.replace('"', "\"\"").replace('\n', " "))
        } else {
            r.status.clone()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(r.axis_value),
            r.strategy,
            opt(r.j),
            opt(r.reach),
            opt(r.spend),
            opt(r.pct_improvement_vs_static),
            status
        )?;
    }
    Ok(())
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) + j) as f64;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
/// `None` when either input is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
