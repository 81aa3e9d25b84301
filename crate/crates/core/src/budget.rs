//! Fixed-budget problem: maximize reach subject to `sum_m int g_m(u_m) dt = B`.
//!
//! The constraint is relaxed with a multiplier `mu`, and the inner problem
//! `reach - mu * spend` is solved by the sweep. Spend falls as `mu` grows, so
//! `mu` is bisected until the spend matches `B`.

use serde::{Deserialize, Serialize};

pub use crate::dynamics::spend_of;

use crate::centrality::Grouping;
use crate::dynamics::{ControlSchedule, CostModel, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::network::Network;
use crate::sweep::{evaluate_controls, fbs_solve_weighted, Solution, SweepParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetParams {
    /// Total resource `B`.
    pub budget: f64,
    pub mu_low: f64,
    pub mu_high: f64,
    /// Bracket width that ends the bisection.
    pub mu_th: f64,
    /// Relative spend error that ends the bisection.
    pub spend_rtol: f64,
    /// Cap on bracket halvings/doublings before giving up.
    pub max_widen: usize,
    pub sweep: SweepParams,
}

impl Default for BudgetParams {
    fn default() -> Self {
        BudgetParams {
            budget: 1.0,
            mu_low: 0.01,
            mu_high: 10.0,
            mu_th: 1e-10,
            spend_rtol: 1e-4,
            max_widen: 60,
            sweep: SweepParams::default(),
        }
    }
}

impl BudgetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return Err(invalid(format!(
                "budget must be nonnegative, got {}",
                self.budget
            )));
        }
        if !(self.mu_low > 0.0 && self.mu_low < self.mu_high && self.mu_high.is_finite()) {
            return Err(invalid(format!(
                "multiplier bracket needs 0 < mu_low < mu_high, got [{}, {}]",
                self.mu_low, self.mu_high
            )));
        }
        if !(self.mu_th > 0.0) || !(self.spend_rtol > 0.0) {
            return Err(invalid("mu_th and spend_rtol must be positive"));
        }
        self.sweep.validate()
    }
}

#[derive(Debug, Clone)]
pub struct BudgetSolution {
    pub solution: Solution,
    /// Multiplier `mu*` of the returned controls; 0 when `B = 0`.
    pub mu: f64,
    /// The budgeted objective, which is the reach alone.
    pub objective: f64,
    /// Bracket after widening.
    pub bracket: (f64, f64),
    pub widening_steps: usize,
    pub bisection_steps: usize,
    /// `ceil(log2((mu_high - mu_low) / mu_th))` on the widened bracket plus
    /// the widening steps.
    pub iteration_bound: usize,
}

impl BudgetSolution {
    pub fn outer_iterations(&self) -> usize {
        self.widening_steps + self.bisection_steps
    }
}

#[allow(clippy::too_many_arguments)]
pub fn solve_budget(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &dyn CostModel,
    grid: TimeGrid,
    bp: &BudgetParams,
) -> Result<BudgetSolution> {
    bp.validate()?;
    let target = bp.budget;
    let solve = |mu: f64, warm: Option<&ControlSchedule>| {
        fbs_solve_weighted(net, grp, seed, beta, cost, &bp.sweep, grid, mu, warm)
    };

    if target == 0.0 {
        // no resource: the only feasible control is zero
        let zero = ControlSchedule::zeros(grid, grp.group_count());
        let solution = evaluate_controls(net, grp, seed, beta, cost, &zero)?;
        return Ok(BudgetSolution {
            objective: solution.report.reach,
            solution,
            mu: 0.0,
            bracket: (bp.mu_low, bp.mu_high),
            widening_steps: 0,
            bisection_steps: 0,
            iteration_bound: 0,
        });
    }

    let close = |s: &Solution| (s.report.spend - target).abs() <= bp.spend_rtol * target;
    let mut lo = bp.mu_low;
    let mut hi = bp.mu_high;
    let mut widening = 0;
    let mut lo_sol = solve(lo, None)?;
    while lo_sol.report.spend < target {
        if widening >= bp.max_widen {
            return Err(Error::Bracket { attempts: widening });
        }
        widening += 1;
        hi = lo;
        lo *= 0.5;
        lo_sol = solve(lo, Some(&lo_sol.controls))?;
    }
    let mut hi_sol = solve(hi, Some(&lo_sol.controls))?;
    while hi_sol.report.spend > target {
        if widening >= bp.max_widen {
            return Err(Error::Bracket { attempts: widening });
        }
        widening += 1;
        lo = hi;
        lo_sol = hi_sol;
        hi *= 2.0;
        hi_sol = solve(hi, Some(&lo_sol.controls))?;
    }
    let bracket = (lo, hi);
    let iteration_bound = ((hi - lo) / bp.mu_th).log2().ceil().max(0.0) as usize + widening;

    let mut best = if (lo_sol.report.spend - target).abs() <= (hi_sol.report.spend - target).abs() {
        (lo, lo_sol.clone())
    } else {
        (hi, hi_sol.clone())
    };
    let mut steps = 0;
    while !close(&best.1) && hi - lo >= bp.mu_th {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let warm = if mid - lo < hi - mid {
            &lo_sol.controls
        } else {
            &hi_sol.controls
        };
        let sol = solve(mid, Some(warm))?;
        if (sol.report.spend - target).abs() < (best.1.report.spend - target).abs() {
            best = (mid, sol.clone());
        }
        if sol.report.spend > target {
            lo = mid;
            lo_sol = sol;
        } else {
            hi = mid;
            hi_sol = sol;
        }
    }
    let (mu, solution) = best;
    if !close(&solution) {
        log::warn!(
            "budget bisection ended with spend {} for target {target} (mu = {mu})",
            solution.report.spend
        );
    }
    Ok(BudgetSolution {
        objective: solution.report.reach,
        solution,
        mu,
        bracket,
        widening_steps: widening,
        bisection_steps: steps,
        iteration_bound,
    })
}
