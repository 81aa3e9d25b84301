//! Joint choice of per-group seed fractions and controls.
//!
//! The outer loop is projected-gradient ascent on `J(i0)`, where each
//! evaluation is a full sweep solve. Gradients come from forward differences,
//! so one iteration costs `M + 1` solves plus the line search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::Grouping;
use crate::dynamics::{ControlSchedule, CostModel, TimeGrid};
use crate::error::{invalid, Result};
use crate::network::Network;
use crate::sweep::{fbs_solve, fbs_solve_from, Solution, SweepParams};

const BUDGET_TOL: f64 = 1e-9;

/// Per-group seed probabilities with `sum_m p_m i0[m] = budget`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedVector {
    i0: Vec<f64>,
    budget: f64,
}

impl SeedVector {
    pub fn new(i0: Vec<f64>, fractions: &[f64], budget: f64) -> Result<Self> {
        if i0.len() != fractions.len() {
            return Err(invalid(format!(
                "seed vector has {} entries for {} groups",
                i0.len(),
                fractions.len()
            )));
        }
        if let Some(m) = i0.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(invalid(format!(
                "seed fraction for group {m} is {}, outside [0, 1]",
                i0[m]
            )));
        }
        let mass: f64 = i0.iter().zip(fractions).map(|(x, p)| x * p).sum();
        if (mass - budget).abs() > BUDGET_TOL {
            return Err(invalid(format!(
                "seed mass {mass} does not equal budget {budget}"
            )));
        }
        Ok(SeedVector { i0, budget })
    }

    /// Every group seeded at the budget level.
    pub fn uniform(groups: usize, budget: f64) -> Result<Self> {
        check_budget(budget)?;
        Ok(SeedVector {
            i0: vec![budget; groups],
            budget,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.i0
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Share of the seed mass `p_m i0[m] / budget` held by each group.
    pub fn mass_shares(&self, fractions: &[f64]) -> Vec<f64> {
        self.i0
            .iter()
            .zip(fractions)
            .map(|(x, p)| {
                if self.budget > 0.0 {
                    x * p / self.budget
                } else {
                    0.0
                }
            })
            .collect()
    }
}

fn check_budget(budget: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&budget) {
        return Err(invalid(format!(
            "seed budget must be in [0, 1], got {budget}"
        )));
    }
    Ok(())
}

/// Node-level seed probabilities: node `j` gets `i0[g(j)]`.
pub fn expand_seed(sv: &SeedVector, grp: &Grouping) -> Result<Vec<f64>> {
    if sv.i0.len() != grp.group_count() {
        return Err(invalid("seed vector and grouping disagree on group count"));
    }
    Ok(grp.assignments().iter().map(|&g| sv.i0[g]).collect())
}

/// Euclidean projection onto `{0 <= x <= 1, sum_m p_m x_m = budget}`.
///
/// The projection has the form `x = clip(raw - tau p, 0, 1)`; `tau` is found
/// by bisection and the last rounding error is spread over the unclipped
/// coordinates.
pub fn project_seed(raw: &[f64], fractions: &[f64], budget: f64) -> Result<SeedVector> {
    check_budget(budget)?;
    if raw.len() != fractions.len() || raw.is_empty() {
        return Err(invalid("raw seed vector and fractions differ in length"));
    }
    if fractions.iter().any(|p| !(*p > 0.0)) || raw.iter().any(|x| !x.is_finite()) {
        return Err(invalid(
            "projection needs finite raw values and positive fractions",
        ));
    }
    let total: f64 = fractions.iter().sum();
    if budget > total + BUDGET_TOL {
        return Err(invalid(format!(
            "budget {budget} exceeds attainable seed mass {total}"
        )));
    }
    let clip = |tau: f64| -> Vec<f64> {
        raw.iter()
            .zip(fractions)
            .map(|(r, p)| (r - tau * p).clamp(0.0, 1.0))
            .collect()
    };
    let mass = |x: &[f64]| -> f64 { x.iter().zip(fractions).map(|(a, p)| a * p).sum() };

    let mut lo = raw
        .iter()
        .zip(fractions)
        .map(|(r, p)| (r - 1.0) / p)
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let mut hi = raw
        .iter()
        .zip(fractions)
        .map(|(r, p)| r / p)
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(&clip(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = clip(0.5 * (lo + hi));

    let residual = budget - mass(&x);
    let free: Vec<usize> = (0..x.len()).filter(|&m| x[m] > 0.0 && x[m] < 1.0).collect();
    let weight: f64 = free.iter().map(|&m| fractions[m] * fractions[m]).sum();
    if weight > 0.0 {
        for &m in &free {
            x[m] = (x[m] + residual * fractions[m] / weight).clamp(0.0, 1.0);
        }
    }
    if budget == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
    } else if (budget - total).abs() <= BUDGET_TOL {
        x.iter_mut().for_each(|v| *v = 1.0);
    }
    let budget = if (mass(&x) - budget).abs() <= BUDGET_TOL {
        budget
    } else {
        mass(&x)
    };
    SeedVector::new(x, fractions, budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    /// Outer iteration cap `L`.
    pub max_outer: usize,
    /// Finite-difference step `h`.
    pub fd_step: f64,
    pub initial_step: f64,
    pub max_halvings: usize,
    /// Stop when the relative gain in `J` drops below this.
    pub rel_tol: f64,
}

impl Default for JointParams {
    fn default() -> Self {
        JointParams {
            max_outer: 50,
            fd_step: 1e-3,
            initial_step: 1.0,
            max_halvings: 20,
            rel_tol: 1e-6,
        }
    }
}

impl JointParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer == 0 {
            return Err(invalid(
                "joint optimizer needs at least one outer iteration",
            ));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.5) {
            return Err(invalid(format!(
                "finite-difference step must be in (0, 0.5), got {}",
                self.fd_step
            )));
        }
        if !(self.initial_step > 0.0) || !(self.rel_tol >= 0.0) {
            return Err(invalid(
                "joint optimizer needs a positive initial step and a nonnegative tolerance",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct JointResult {
    pub seed: SeedVector,
    pub solution: Solution,
    /// `J` of the accepted iterate after each outer iteration, starting with
    /// the uniform start point.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Number of sweep solves performed.
    pub evaluations: usize,
}

struct Evaluator<'a> {
    net: &'a Network,
    grp: &'a Grouping,
    beta: f64,
    cost: &'a dyn CostModel,
    params: &'a SweepParams,
}

impl Evaluator<'_> {
    fn solve(
        &self,
        i0: &[f64],
        warm: Option<&ControlSchedule>,
        grid: TimeGrid,
    ) -> Result<Solution> {
        let seed: Vec<f64> = self.grp.assignments().iter().map(|&g| i0[g]).collect();
        match warm {
            Some(u) => fbs_solve_from(
                self.net,
                self.grp,
                &seed,
                self.beta,
                self.cost,
                self.params,
                u,
            ),
            None => fbs_solve(
                self.net,
                self.grp,
                &seed,
                self.beta,
                self.cost,
                self.params,
                grid,
            ),
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn joint_optimize(
    net: &Network,
    grp: &Grouping,
    budget: f64,
    beta: f64,
    cost: &dyn CostModel,
    sweep: &SweepParams,
    grid: TimeGrid,
    opt: &JointParams,
) -> Result<JointResult> {
    check_budget(budget)?;
    opt.validate()?;
    sweep.validate()?;
    let fractions = grp.fractions();
    let groups = fractions.len();
    let eval = Evaluator {
        net,
        grp,
        beta,
        cost,
        params: sweep,
    };

    let mut best = SeedVector::uniform(groups, budget)?;
    let mut best_sol = eval.solve(best.values(), None, grid)?;
    let mut evaluations = 1;
    let mut history = vec![best_sol.report.j];
    let mut iterations = 0;
    // with one group or a saturated budget the feasible set is a single point
    let pinned = groups == 1
        || budget == 0.0
        || (budget - fractions.iter().sum::<f64>()).abs() <= BUDGET_TOL;

    while !pinned && iterations < opt.max_outer {
        iterations += 1;
        let x = best.values().to_vec();
        let j0 = best_sol.report.j;
        let h = opt.fd_step;
        let probes: Vec<(usize, f64)> = (0..groups)
            .map(|m| (m, if x[m] + h <= 1.0 { h } else { -h }))
            .collect();
        let warm = &best_sol.controls;
        let partials: Vec<Result<f64>> = probes
            .par_iter()
            .map(|&(m, step)| {
                let mut y = x.clone();
                y[m] += step;
                Ok((eval.solve(&y, Some(warm), grid)?.report.j - j0) / step)
            })
            .collect();
        evaluations += groups;
        let grad = partials.into_iter().collect::<Result<Vec<f64>>>()?;

        let mut alpha = opt.initial_step;
        let mut accepted = None;
        for _ in 0..=opt.max_halvings {
            let raw: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + alpha * g).collect();
            let candidate = project_seed(&raw, &fractions, budget)?;
            if candidate.values() != x.as_slice() {
                let sol = eval.solve(candidate.values(), Some(warm), grid)?;
                evaluations += 1;
                if sol.report.j > j0 {
                    accepted = Some((candidate, sol));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((seed, sol)) = accepted else { break };
        let gain = sol.report.j - j0;
        best = seed;
        best_sol = sol;
        history.push(best_sol.report.j);
        if gain <= opt.rel_tol * j0.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    log::debug!("joint optimization: {iterations} iterations, {evaluations} solves");
    Ok(JointResult {
        seed: best,
        solution: best_sol,
        history,
        iterations,
        evaluations,
    })
}
