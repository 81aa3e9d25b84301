//! Baseline controls: one constant level for every group, applied either over
//! the whole horizon (static) or over the first half only (two-stage).

use serde::{Deserialize, Serialize};

use crate::centrality::Grouping;
use crate::dynamics::{forward_si, reward, ControlSchedule, CostModel, QuadraticCost, TimeGrid};
use crate::error::{invalid, Result};
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    Static,
    TwoStage,
}

impl HeuristicKind {
    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Static => "static",
            HeuristicKind::TwoStage => "two-stage",
        }
    }

    pub fn schedule(self, grid: TimeGrid, groups: usize, level: f64) -> Result<ControlSchedule> {
        match self {
            HeuristicKind::Static => Ok(ControlSchedule::constant(grid, groups, level)),
            HeuristicKind::TwoStage => ControlSchedule::two_stage(grid, groups, level),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicParams {
    pub u_max: f64,
    pub tol: f64,
    /// Cap `S` on objective evaluations.
    pub max_evals: usize,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            u_max: 10.0,
            tol: 1e-5,
            max_evals: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicResult {
    pub kind: HeuristicKind,
    pub level: f64,
    /// Net reward, or the reach alone for the budgeted variants.
    pub j: f64,
    pub reach: f64,
    pub spend: f64,
    pub evaluations: usize,
}

impl HeuristicResult {
    pub fn controls(&self, grid: TimeGrid, groups: usize) -> Result<ControlSchedule> {
        self.kind.schedule(grid, groups, self.level)
    }
}

const PRESCAN: usize = 8;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

struct Problem<'a> {
    net: &'a Network,
    grp: &'a Grouping,
    seed: &'a [f64],
    beta: f64,
    cost: &'a dyn CostModel,
    grid: TimeGrid,
    kind: HeuristicKind,
}

impl Problem<'_> {
    fn eval(&self, level: f64) -> Result<(f64, f64, f64)> {
        let ctrl = self
            .kind
            .schedule(self.grid, self.grp.group_count(), level)?;
        let state = forward_si(self.net, self.grp, &ctrl, self.seed, self.beta)?;
        let r = reward(&state, &ctrl, self.cost)?;
        Ok((r.j, r.reach, r.spend))
    }
}

fn search(p: &Problem, params: &HeuristicParams) -> Result<HeuristicResult> {
    if !(params.u_max > 0.0 && params.tol > 0.0) {
        return Err(invalid("heuristic search needs u_max > 0 and tol > 0"));
    }
    if params.max_evals < PRESCAN + 2 {
        return Err(invalid(format!(
            "heuristic search needs at least {} evaluations",
            PRESCAN + 2
        )));
    }
    p.kind.schedule(p.grid, p.grp.group_count(), 0.0)?;
    let mut evals = 0;
    let mut best = (0.0, f64::NEG_INFINITY, 0.0, 0.0);
    let mut f = |x: f64, evals: &mut usize| -> Result<f64> {
        *evals += 1;
        let (j, reach, spend) = p.eval(x)?;
        if j > best.1 {
            best = (x, j, reach, spend);
        }
        Ok(j)
    };

    let h = params.u_max / (PRESCAN - 1) as f64;
    let mut scan = Vec::with_capacity(PRESCAN);
    for i in 0..PRESCAN {
        scan.push(f(i as f64 * h, &mut evals)?);
    }
    let top = (0..PRESCAN)
        .max_by(|&a, &b| scan[a].total_cmp(&scan[b]).then(b.cmp(&a)))
        .unwrap();
    let mut a = top.saturating_sub(1) as f64 * h;
    let mut b = (top + 1).min(PRESCAN - 1) as f64 * h;

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1, &mut evals)?;
    let mut f2 = f(x2, &mut evals)?;
    while b - a > params.tol && evals < params.max_evals {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1, &mut evals)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2, &mut evals)?;
        }
    }
    if b - a > params.tol {
        log::warn!(
            "{} search stopped at {evals} evaluations with bracket {}",
            p.kind.name(),
            b - a
        );
    }
    let (level, j, reach, spend) = best;
    if level >= params.u_max - params.tol {
        log::warn!(
            "best {} level {level} sits at the search bound u_max = {}; consider enlarging it",
            p.kind.name(),
            params.u_max
        );
    }
    Ok(HeuristicResult {
        kind: p.kind,
        level,
        j,
        reach,
        spend,
        evaluations: evals,
    })
}

/// Best constant control on `[0, T]`, the same level for every group.
#[allow(clippy::too_many_arguments)]
pub fn best_static(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &dyn CostModel,
    grid: TimeGrid,
    params: &HeuristicParams,
) -> Result<HeuristicResult> {
    let p = Problem {
        net,
        grp,
        seed,
        beta,
        cost,
        grid,
        kind: HeuristicKind::Static,
    };
    search(&p, params)
}

/// Best level `c` for the control that is `c` up to `T/2` and zero after.
#[allow(clippy::too_many_arguments)]
pub fn best_two_stage(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &dyn CostModel,
    grid: TimeGrid,
    params: &HeuristicParams,
) -> Result<HeuristicResult> {
    let p = Problem {
        net,
        grp,
        seed,
        beta,
        cost,
        grid,
        kind: HeuristicKind::TwoStage,
    };
    search(&p, params)
}

/// Level whose discrete spend is exactly `budget`. Quadratic spend scales as
/// `level^2`, so one evaluation at level 1 fixes it.
fn budget_level(
    kind: HeuristicKind,
    budget: f64,
    cost: &QuadraticCost,
    grid: TimeGrid,
) -> Result<f64> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(invalid(format!("budget must be nonnegative, got {budget}")));
    }
    let unit = crate::dynamics::spend_of(&kind.schedule(grid, cost.fractions.len(), 1.0)?, cost);
    Ok((budget / unit).sqrt())
}

#[allow(clippy::too_many_arguments)]
fn for_budget(
    kind: HeuristicKind,
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &QuadraticCost,
    grid: TimeGrid,
    budget: f64,
) -> Result<HeuristicResult> {
    let level = budget_level(kind, budget, cost, grid)?;
    let p = Problem {
        net,
        grp,
        seed,
        beta,
        cost,
        grid,
        kind,
    };
    let (_, reach, spend) = p.eval(level)?;
    Ok(HeuristicResult {
        kind,
        level,
        j: reach,
        reach,
        spend,
        evaluations: 1,
    })
}

/// Constant control spending exactly `budget`, `u = sqrt(B / (b T))`.
#[allow(clippy::too_many_arguments)]
pub fn static_for_budget(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &QuadraticCost,
    grid: TimeGrid,
    budget: f64,
) -> Result<HeuristicResult> {
    for_budget(
        HeuristicKind::Static,
        net,
        grp,
        seed,
        beta,
        cost,
        grid,
        budget,
    )
}

/// Two-stage control spending exactly `budget`. On a grid of `K` steps the
/// first stage covers `T/2 + T/(2K)` of trapezoid weight, so the level is
/// `sqrt(B / (b (T/2 + T/(2K))))`, tending to `sqrt(2B / (b T))`.
#[allow(clippy::too_many_arguments)]
pub fn two_stage_for_budget(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &QuadraticCost,
    grid: TimeGrid,
    budget: f64,
) -> Result<HeuristicResult> {
    for_budget(
        HeuristicKind::TwoStage,
        net,
        grp,
        seed,
        beta,
        cost,
        grid,
        budget,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate;
    use approx::assert_abs_diff_eq;

    fn lone(b: f64) -> (Network, Grouping, QuadraticCost) {
        let grp = Grouping::single(1).unwrap();
        let cost = QuadraticCost::new(b, &grp).unwrap();
        (generate::empty(1), grp, cost)
    }

    /// Newton iteration for `x e^x = 1`.
    fn omega() -> f64 {
        let mut x = 0.5f64;
        for _ in 0..50 {
            x -= (x * x.exp() - 1.0) / ((x + 1.0) * x.exp());
        }
        x
    }

    #[test]
    fn static_single_node_matches_omega() {
        let (net, grp, cost) = lone(0.5);
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let r = best_static(
            &net,
            &grp,
            &[0.0],
            0.0,
            &cost,
            grid,
            &HeuristicParams::default(),
        )
        .unwrap();
        let w = omega();
        assert_abs_diff_eq!(r.level, w, epsilon = 1e-4);
        assert_abs_diff_eq!(r.j, (1.0 - (-w).exp()) - 0.5 * w * w, epsilon = 1e-8);
        assert!(r.evaluations <= HeuristicParams::default().max_evals);
    }

    #[test]
    fn two_stage_single_node_matches_discrete_condition() {
        let (net, grp, cost) = lone(0.25);
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let r = best_two_stage(
            &net,
            &grp,
            &[0.0],
            0.0,
            &cost,
            grid,
            &HeuristicParams::default(),
        )
        .unwrap();
        // J(c) = 1 - e^{-cL} - b c^2 L with first-stage weight L = T/2 + dt/2,
        // stationary where e^{-cL} = 2 b c
        let l = 0.5 + 0.5 * grid.dt();
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (-mid * l).exp() > 0.5 * mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(r.level, lo, epsilon = 1e-4);
        // continuous-time limit e^{-c/2} = c/2
        assert_abs_diff_eq!(r.level, 2.0 * omega(), epsilon = 2e-3);
    }

    #[test]
    fn prohibitive_cost_picks_zero() {
        let net = generate::erdos_renyi(20, 0.2, 3);
        let grp = Grouping::single(20).unwrap();
        let cost = QuadraticCost::new(1e6, &grp).unwrap();
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let seed = vec![0.05; 20];
        let r = best_static(
            &net,
            &grp,
            &seed,
            0.5,
            &cost,
            grid,
            &HeuristicParams::default(),
        )
        .unwrap();
        assert!(r.level < 1e-4);
        let zero = forward_si(&net, &grp, &ControlSchedule::zeros(grid, 1), &seed, 0.5).unwrap();
        assert!(r.j >= crate::dynamics::reach_of(&zero));
    }

    #[test]
    fn result_reproduces_under_reevaluation() {
        let net = generate::barabasi_albert(30, 2, 8);
        let grp = Grouping::new((0..30).map(|j| j % 3).collect(), 3).unwrap();
        let cost = QuadraticCost::new(3.0, &grp).unwrap();
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let seed = vec![0.02; 30];
        for r in [
            best_static(
                &net,
                &grp,
                &seed,
                0.3,
                &cost,
                grid,
                &HeuristicParams::default(),
            )
            .unwrap(),
            best_two_stage(
                &net,
                &grp,
                &seed,
                0.3,
                &cost,
                grid,
                &HeuristicParams::default(),
            )
            .unwrap(),
        ] {
            let ctrl = r.controls(grid, 3).unwrap();
            let state = forward_si(&net, &grp, &ctrl, &seed, 0.3).unwrap();
            let again = reward(&state, &ctrl, &cost).unwrap();
            assert!((again.j - r.j).abs() <= 1e-12);
        }
    }

    #[test]
    fn budget_levels() {
        let (net, grp, cost) = lone(25.0);
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let s = static_for_budget(&net, &grp, &[0.0], 0.0, &cost, grid, 6.25).unwrap();
        assert_abs_diff_eq!(s.level, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.spend, 6.25, epsilon = 1e-12);
        assert_eq!(s.j, s.reach);
        let t = two_stage_for_budget(&net, &grp, &[0.0], 0.0, &cost, grid, 6.25).unwrap();
        assert_abs_diff_eq!(t.spend, 6.25, epsilon = 1e-12);
        assert_abs_diff_eq!(t.level, 0.5f64.sqrt(), epsilon = 1e-3);
        for r in [
            static_for_budget(&net, &grp, &[0.0], 0.0, &cost, grid, 0.0).unwrap(),
            two_stage_for_budget(&net, &grp, &[0.0], 0.0, &cost, grid, 0.0).unwrap(),
        ] {
            assert_eq!(r.level, 0.0);
        }
    }

    #[test]
    fn odd_grid_rejects_two_stage() {
        let (net, grp, cost) = lone(1.0);
        let grid = TimeGrid::new(1.0, 101).unwrap();
        assert!(best_two_stage(
            &net,
            &grp,
            &[0.0],
            0.0,
            &cost,
            grid,
            &HeuristicParams::default()
        )
        .is_err());
    }
}
