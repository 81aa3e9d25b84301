//! Forward-backward sweep for the fixed-seed problem.
//!
//! Starting from `u = 0` and `lambda = 0`, each iteration integrates the state
//! forward, updates the controls from the Hamiltonian-maximizing condition
//! `u_m = g'_m^{-1}(sum_{l in N_m} lambda_l s_l)`, integrates the adjoint backward
//! and updates the controls again. Updates are damped,
//! `u <- (1 - w) u_old + w u_new`; `w = 1` is the undamped scheme. The loop
//! stops once the sup-norm change of the controls drops below `u_th` or after
//! `max_iter` iterations.

use serde::{Deserialize, Serialize};

use crate::adjoint::{backward_adjoint, scaled_control_gradient, switching_sums};
use crate::centrality::Grouping;
use crate::dynamics::{
    check_seed, forward_si, reward, ControlSchedule, CostModel, TimeGrid, Trajectory,
    TrajectoryKind,
};
use crate::error::{invalid, Result};
use crate::network::Network;

/// Adjoint values below this count as a sign violation.
pub const ADJOINT_FLOOR: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    /// Sup-norm control change that ends the iteration.
    pub u_th: f64,
    pub max_iter: usize,
    /// Weight of the new control in the damped update, in `(0, 1]`.
    pub damping: f64,
    /// Halve the damping weight whenever the control change grows, down to
    /// `damping / 1024`.
    pub adaptive_damping: bool,
    /// Largest `|dH/du|` accepted at exit.
    pub stationarity_tol: f64,
    /// Controls above this trigger a diagnostic.
    pub control_warn: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            u_th: 1e-6,
            max_iter: 200,
            damping: 0.5,
            adaptive_damping: true,
            stationarity_tol: 1e-4,
            control_warn: 1e3,
        }
    }
}

impl SweepParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.u_th > 0.0) {
            return Err(invalid(format!("u_th must be positive, got {}", self.u_th)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid(format!(
                "damping must be in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.stationarity_tol > 0.0) {
            return Err(invalid("stationarity_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub j: f64,
    pub reach: f64,
    pub spend: f64,
    pub per_group_spend: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_control_delta: f64,
    pub max_stationarity_residual: f64,
    /// Smallest adjoint value seen over all iterations.
    pub min_adjoint: f64,
}

/// Controls with the state and adjoint they produce.
#[derive(Debug, Clone)]
pub struct Solution {
    pub controls: ControlSchedule,
    pub state: Trajectory,
    pub adjoint: Trajectory,
    pub report: SolveReport,
}

pub fn fbs_solve(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &dyn CostModel,
    params: &SweepParams,
    grid: TimeGrid,
) -> Result<Solution> {
    fbs_solve_weighted(net, grp, seed, beta, cost, params, grid, 1.0, None)
}

/// Like [`fbs_solve`] but starts from `init` and the adjoint it induces
/// instead of `u = 0, lambda = 0`. The fixed point is the same; nearby
/// problems converge in fewer iterations.
#[allow(clippy::too_many_arguments)]
pub fn fbs_solve_from(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &dyn CostModel,
    params: &SweepParams,
    init: &ControlSchedule,
) -> Result<Solution> {
    fbs_solve_weighted(
        net,
        grp,
        seed,
        beta,
        cost,
        params,
        init.grid(),
        1.0,
        Some(init),
    )
}

/// State, adjoint and report for a given control, without iterating. The
/// report's stationarity residual measures how far `ctrl` is from optimal.
pub fn evaluate_controls(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &dyn CostModel,
    ctrl: &ControlSchedule,
) -> Result<Solution> {
    let state = forward_si(net, grp, ctrl, seed, beta)?;
    let adjoint = backward_adjoint(net, grp, ctrl, &state, beta)?;
    let grad = scaled_control_gradient(&state, &adjoint, ctrl, grp, cost, 1.0)?;
    let r = reward(&state, ctrl, cost)?;
    Ok(Solution {
        report: SolveReport {
            j: r.j,
            reach: r.reach,
            spend: r.spend,
            per_group_spend: r.per_group_spend,
            iterations: 0,
            converged: true,
            final_control_delta: 0.0,
            max_stationarity_residual: stationarity_residual(&grad, ctrl),
            min_adjoint: adjoint.min_value(),
        },
        controls: ctrl.clone(),
        state,
        adjoint,
    })
}

/// Largest gradient component not blocked by the `u >= 0` bound.
fn stationarity_residual(grad: &[Vec<f64>], ctrl: &ControlSchedule) -> f64 {
    let mut worst = 0.0f64;
    for (m, row) in grad.iter().enumerate() {
        for (k, &g) in row.iter().enumerate() {
            if g > 0.0 || ctrl.get(m, k) > 0.0 {
                worst = worst.max(g.abs());
            }
        }
    }
    worst
}

fn maximizing_controls(
    state: &Trajectory,
    adj: &Trajectory,
    grp: &Grouping,
    cost: &dyn CostModel,
    cost_weight: f64,
    out: &mut ControlSchedule,
) {
    let sums = switching_sums(state, adj, grp);
    for (m, row) in sums.iter().enumerate() {
        for (k, &y) in row.iter().enumerate() {
            out.set(m, k, cost.inverse_derivative(m, y / cost_weight).max(0.0));
        }
    }
}

/// Sweep with the running cost weighted by `cost_weight`: the control update
/// becomes `u_m = g'_m^{-1}(sum lambda_l s_l / cost_weight)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fbs_solve_weighted(
    net: &Network,
    grp: &Grouping,
    seed: &[f64],
    beta: f64,
    cost: &dyn CostModel,
    params: &SweepParams,
    grid: TimeGrid,
    cost_weight: f64,
    init: Option<&ControlSchedule>,
) -> Result<Solution> {
    params.validate()?;
    check_seed(seed, net.node_count())?;
    if cost.group_count() != grp.group_count() {
        return Err(invalid("cost model and grouping disagree on group count"));
    }
    let mut min_adjoint = f64::INFINITY;
    let (mut u, mut adj) = match init {
        Some(u0) => {
            if u0.grid() != grid || u0.group_count() != grp.group_count() {
                return Err(invalid("initial controls do not match grid or grouping"));
            }
            u0.validate()?;
            let state = forward_si(net, grp, u0, seed, beta)?;
            let adj = backward_adjoint(net, grp, u0, &state, beta)?;
            min_adjoint = adj.min_value();
            (u0.clone(), adj)
        }
        None => (
            ControlSchedule::zeros(grid, grp.group_count()),
            Trajectory::filled(grid, TrajectoryKind::Adjoint, net.node_count(), 0.0),
        ),
    };
    let mut u_old = u.clone();
    let mut candidate = u.clone();
    let mut delta = f64::INFINITY;
    let mut omega = params.damping;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        u_old.clone_from(&u);
        let state = forward_si(net, grp, &u, seed, beta)?;
        maximizing_controls(&state, &adj, grp, cost, cost_weight, &mut candidate);
        u.assign_blend(&u_old, &candidate, omega);
        adj = backward_adjoint(net, grp, &u, &state, beta)?;
        min_adjoint = min_adjoint.min(adj.min_value());
        maximizing_controls(&state, &adj, grp, cost, cost_weight, &mut candidate);
        u.assign_blend(&u_old, &candidate, omega);
        let previous = delta;
        delta = u.sup_distance(&u_old);
        if delta < params.u_th {
            // a small step can still be far from stationary when b is large
            let state = forward_si(net, grp, &u, seed, beta)?;
            let fresh = backward_adjoint(net, grp, &u, &state, beta)?;
            let grad = scaled_control_gradient(&state, &fresh, &u, grp, cost, cost_weight)?;
            if stationarity_residual(&grad, &u) <= params.stationarity_tol {
                break;
            }
            adj = fresh;
        }
        if params.adaptive_damping && delta > previous && omega > params.damping / 1024.0 {
            omega *= 0.5;
            log::debug!("sweep iteration {iterations}: control change grew, damping now {omega}");
        }
    }

    // state and adjoint consistent with the returned controls
    let state = forward_si(net, grp, &u, seed, beta)?;
    let adjoint = backward_adjoint(net, grp, &u, &state, beta)?;
    min_adjoint = min_adjoint.min(adjoint.min_value());
    let grad = scaled_control_gradient(&state, &adjoint, &u, grp, cost, cost_weight)?;
    let residual = stationarity_residual(&grad, &u);
    let r = reward(&state, &u, cost)?;

    let converged = delta < params.u_th && residual <= params.stationarity_tol;
    if !converged {
        log::warn!(
            "sweep stopped after {iterations} iterations: control change {delta:e}, stationarity residual {residual:e}"
        );
    }
    if min_adjoint < ADJOINT_FLOOR {
        log::warn!("adjoint went negative ({min_adjoint:e})");
    }
    if u.max_value() > params.control_warn {
        log::warn!(
            "control reached {} (warning bound {})",
            u.max_value(),
            params.control_warn
        );
    }
    Ok(Solution {
        controls: u,
        state,
        adjoint,
        report: SolveReport {
            j: r.j,
            reach: r.reach,
            spend: r.spend,
            per_group_spend: r.per_group_spend,
            iterations,
            converged,
            final_control_delta: delta,
            max_stationarity_residual: residual,
            min_adjoint,
        },
    })
}
