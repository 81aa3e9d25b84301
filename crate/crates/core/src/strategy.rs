//! Solution strategies behind one interface, looked up by name.
//!
//! Every strategy answers the same question for a [`Problem`]: which controls
//! (and, for the joint strategy, which seeds) to use under a given
//! [`Objective`]. The parameter sweep and the command line pick strategies
//! from a [`StrategyRegistry`].

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::budget::{solve_budget, BudgetParams};
use crate::centrality::Grouping;
use crate::dynamics::{ControlSchedule, QuadraticCost, TimeGrid};
use crate::error::{Error, Result};
use crate::heuristics::{
    best_static, best_two_stage, static_for_budget, two_stage_for_budget, HeuristicParams,
};
use crate::network::Network;
use crate::seed_opt::{joint_optimize, JointParams};
use crate::sweep::{fbs_solve, SweepParams};

/// One instance with uniform seeding `i0` in every group.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub net: &'a Network,
    pub grp: &'a Grouping,
    pub i0: f64,
    pub beta: f64,
    pub cost: QuadraticCost,
    pub grid: TimeGrid,
    pub sweep: SweepParams,
    pub heuristic: HeuristicParams,
    pub joint: JointParams,
    /// Bracket and tolerances; the budget itself comes from the objective.
    pub budget: BudgetParams,
}

impl Problem<'_> {
    pub fn uniform_seed(&self) -> Vec<f64> {
        vec![self.i0; self.net.node_count()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "budget", rename_all = "kebab-case")]
pub enum Objective {
    /// Maximize `reach - spend`.
    NetReward,
    /// Maximize reach with total spend `B`.
    Budget(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub strategy: String,
    /// `reach - spend` for the net-reward objective, reach for a budget.
    pub j: f64,
    pub reach: f64,
    pub spend: f64,
    pub converged: bool,
    /// Per-group seed fractions used.
    pub seed: Vec<f64>,
    /// Budget multiplier, when one was solved for.
    pub multiplier: Option<f64>,
    #[serde(skip)]
    pub controls: ControlSchedule,
}

pub trait Strategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, problem: &Problem, objective: Objective) -> Result<Outcome>;
}

struct Optimal;

impl Strategy for Optimal {
    fn name(&self) -> &'static str {
        "optimal"
    }

    fn run(&self, p: &Problem, objective: Objective) -> Result<Outcome> {
        let seed = p.uniform_seed();
        let groups = vec![p.i0; p.grp.group_count()];
        match objective {
            Objective::NetReward => {
                let sol = fbs_solve(p.net, p.grp, &seed, p.beta, &p.cost, &p.sweep, p.grid)?;
                Ok(Outcome {
                    strategy: self.name().into(),
                    j: sol.report.j,
                    reach: sol.report.reach,
                    spend: sol.report.spend,
                    converged: sol.report.converged,
                    seed: groups,
                    multiplier: None,
                    controls: sol.controls,
                })
            }
            Objective::Budget(b) => {
                let bp = BudgetParams {
                    budget: b,
                    sweep: p.sweep,
                    ..p.budget
                };
                let r = solve_budget(p.net, p.grp, &seed, p.beta, &p.cost, p.grid, &bp)?;
                Ok(Outcome {
                    strategy: self.name().into(),
                    j: r.objective,
                    reach: r.solution.report.reach,
                    spend: r.solution.report.spend,
                    converged: r.solution.report.converged,
                    seed: groups,
                    multiplier: Some(r.mu),
                    controls: r.solution.controls,
                })
            }
        }
    }
}

struct Joint;

impl Strategy for Joint {
    fn name(&self) -> &'static str {
        "joint"
    }

    fn run(&self, p: &Problem, objective: Objective) -> Result<Outcome> {
        if objective != Objective::NetReward {
            return Err(Error::Unsupported(
                "joint seed optimization is defined for the net-reward objective only".into(),
            ));
        }
        let r = joint_optimize(
            p.net, p.grp, p.i0, p.beta, &p.cost, &p.sweep, p.grid, &p.joint,
        )?;
        Ok(Outcome {
            strategy: self.name().into(),
            j: r.solution.report.j,
            reach: r.solution.report.reach,
            spend: r.solution.report.spend,
            converged: r.solution.report.converged,
            seed: r.seed.values().to_vec(),
            multiplier: None,
            controls: r.solution.controls,
        })
    }
}

struct Heuristic(crate::heuristics::HeuristicKind);

impl Strategy for Heuristic {
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn run(&self, p: &Problem, objective: Objective) -> Result<Outcome> {
        use crate::heuristics::HeuristicKind::*;
        let seed = p.uniform_seed();
        let r = match (self.0, objective) {
            (Static, Objective::NetReward) => {
                best_static(p.net, p.grp, &seed, p.beta, &p.cost, p.grid, &p.heuristic)?
            }
            (TwoStage, Objective::NetReward) => {
                best_two_stage(p.net, p.grp, &seed, p.beta, &p.cost, p.grid, &p.heuristic)?
            }
            (Static, Objective::Budget(b)) => {
                static_for_budget(p.net, p.grp, &seed, p.beta, &p.cost, p.grid, b)?
            }
            (TwoStage, Objective::Budget(b)) => {
                two_stage_for_budget(p.net, p.grp, &seed, p.beta, &p.cost, p.grid, b)?
            }
        };
        Ok(Outcome {
            strategy: self.name().into(),
            j: r.j,
            reach: r.reach,
            spend: r.spend,
            converged: true,
            seed: vec![p.i0; p.grp.group_count()],
            multiplier: None,
            controls: r.controls(p.grid, p.grp.group_count())?,
        })
    }
}

/// Strategies in registration order; registering a taken name replaces it.
#[derive(Clone)]
pub struct StrategyRegistry {
    entries: Vec<Arc<dyn Strategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry {
            entries: Vec::new(),
        }
    }

    /// `optimal`, `joint`, `static`, `two-stage`.
    pub fn with_defaults() -> Self {
        use crate::heuristics::HeuristicKind;
        let mut reg = Self::empty();
        reg.register(Arc::new(Optimal));
        reg.register(Arc::new(Joint));
        reg.register(Arc::new(Heuristic(HeuristicKind::Static)));
        reg.register(Arc::new(Heuristic(HeuristicKind::TwoStage)));
        reg
    }

    pub fn register(&mut self, strategy: Arc<dyn Strategy>) {
        match self
            .entries
            .iter()
            .position(|s| s.name() == strategy.name())
        {
            Some(i) => self.entries[i] = strategy,
            None => self.entries.push(strategy),
        }
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Strategy>> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownName {
                kind: "strategy",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Strategy>> {
        self.entries.iter()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
