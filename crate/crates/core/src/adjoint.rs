//! Costate equations, the Hamiltonian and its control gradient.
//!
//! The adjoint satisfies
//! `dlambda_j/dt = -beta sum_l lambda_l s_l A_lj + lambda_j (beta sum_k A_jk i_k + u_{g(j)})`
//! with `lambda_j(T) = 1/N`. It is integrated with RK4 in reversed time using
//! the stored state, interpolated linearly at half steps.

use crate::centrality::Grouping;
use crate::dynamics::{
    check_dimensions, ControlSchedule, CostModel, Rk4, Stage, Trajectory, TrajectoryKind,
};
use crate::error::{Error, Result};
use crate::network::Network;

pub fn backward_adjoint(
    net: &Network,
    grp: &Grouping,
    ctrl: &ControlSchedule,
    state: &Trajectory,
    beta: f64,
) -> Result<Trajectory> {
    check_dimensions(net, grp, ctrl)?;
    if state.grid() != ctrl.grid() || state.node_count() != net.node_count() {
        return Err(Error::Dimension(
            "state trajectory does not match network or grid".into(),
        ));
    }
    let n = net.node_count();
    let grid = ctrl.grid();
    let dt = grid.dt();
    let groups = grp.group_count();
    let group_of = grp.assignments();

    let mut adj = Trajectory::filled(grid, TrajectoryKind::Adjoint, n, 1.0 / n as f64);
    let mut lam = vec![1.0 / n as f64; n];
    let mut rk = Rk4::new(n);

    // rate_j(t) = beta * (A i)_j + u_{g(j)}, the diagonal decay term
    let mut rate_hi = vec![0.0; n];
    let mut rate_lo = vec![0.0; n];
    let mut rate_mid = vec![0.0; n];
    let mut ai_hi = vec![0.0; n];
    let mut ai_lo = vec![0.0; n];
    let mut s_mid = vec![0.0; n];
    let mut weighted = vec![0.0; n];
    let mut spread = vec![0.0; n];
    let (mut u_hi, mut u_mid, mut u_lo) = (vec![0.0; groups], vec![0.0; groups], vec![0.0; groups]);

    net.mul_vec(state.slice(grid.steps), &mut ai_hi);
    for k in (0..grid.steps).rev() {
        let i_hi = state.slice(k + 1);
        let i_lo = state.slice(k);
        net.mul_vec(i_lo, &mut ai_lo);
        for m in 0..groups {
            u_hi[m] = ctrl.get(m, k + 1);
            u_lo[m] = ctrl.get(m, k);
            u_mid[m] = 0.5 * (u_hi[m] + u_lo[m]);
        }
        for j in 0..n {
            let g = group_of[j];
            rate_hi[j] = beta * ai_hi[j] + u_hi[g];
            rate_lo[j] = beta * ai_lo[j] + u_lo[g];
            rate_mid[j] = beta * 0.5 * (ai_hi[j] + ai_lo[j]) + u_mid[g];
            s_mid[j] = 1.0 - 0.5 * (i_hi[j] + i_lo[j]);
        }
        // reversed time tau = T - t: dlambda/dtau = beta A (lambda * s) - lambda * rate
        rk.step(&mut lam, dt, |stage, x, dx| {
            let (rate, s): (&[f64], Option<&[f64]>) = match stage {
                Stage::Start => (&rate_hi, None),
                Stage::Mid => (&rate_mid, Some(&s_mid)),
                Stage::End => (&rate_lo, None),
            };
            for j in 0..n {
                let sj = match (stage, s) {
                    (_, Some(s)) => s[j],
                    (Stage::Start, None) => 1.0 - i_hi[j],
                    _ => 1.0 - i_lo[j],
                };
                weighted[j] = x[j] * sj;
            }
            net.mul_vec(&weighted, &mut spread);
            for j in 0..n {
                dx[j] = beta * spread[j] - x[j] * rate[j];
            }
        });
        if lam.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                stage: "adjoint",
                step: k,
            });
        }
        adj.slice_mut(k).copy_from_slice(&lam);
        std::mem::swap(&mut ai_hi, &mut ai_lo);
    }
    Ok(adj)
}

/// `H = -sum_m g_m(u_m) + sum_l lambda_l s_l (beta (A i)_l + u_{g(l)})` at one
/// time slice.
pub fn hamiltonian(
    state: &[f64],
    adjoint: &[f64],
    controls: &[f64],
    net: &Network,
    grp: &Grouping,
    cost: &dyn CostModel,
    beta: f64,
) -> f64 {
    let n = net.node_count();
    let mut ai = vec![0.0; n];
    net.mul_vec(state, &mut ai);
    let running: f64 = controls
        .iter()
        .enumerate()
        .map(|(m, &u)| cost.value(m, u))
        .sum();
    let gain: f64 = (0..n)
        .map(|l| adjoint[l] * (1.0 - state[l]) * (beta * ai[l] + controls[grp.group_of(l)]))
        .sum();
    gain - running
}

/// `sum_{l in N_m} lambda_l(t_k) s_l(t_k)` for every group and grid point,
/// group-major like [`ControlSchedule`].
pub(crate) fn switching_sums(
    state: &Trajectory,
    adj: &Trajectory,
    grp: &Grouping,
) -> Vec<Vec<f64>> {
    let grid = state.grid();
    let mut sums = vec![vec![0.0; grid.points()]; grp.group_count()];
    for k in 0..grid.points() {
        let i = state.slice(k);
        let lam = adj.slice(k);
        for j in 0..i.len() {
            sums[grp.group_of(j)][k] += lam[j] * (1.0 - i[j]);
        }
    }
    sums
}

/// `dH/du_m(t_k) = -g'_m(u_m(t_k)) + sum_{l in N_m} lambda_l s_l`, as an
/// `M x (K+1)` table.
pub fn control_gradient(
    state: &Trajectory,
    adj: &Trajectory,
    ctrl: &ControlSchedule,
    grp: &Grouping,
    cost: &dyn CostModel,
) -> Result<Vec<Vec<f64>>> {
    scaled_control_gradient(state, adj, ctrl, grp, cost, 1.0)
}

/// Gradient of the Hamiltonian with the running cost weighted by
/// `multiplier`, as used by the budget relaxation.
pub(crate) fn scaled_control_gradient(
    state: &Trajectory,
    adj: &Trajectory,
    ctrl: &ControlSchedule,
    grp: &Grouping,
    cost: &dyn CostModel,
    multiplier: f64,
) -> Result<Vec<Vec<f64>>> {
    if state.grid() != ctrl.grid() || adj.grid() != ctrl.grid() {
        return Err(Error::Dimension(
            "state, adjoint and control grids differ".into(),
        ));
    }
    let mut sums = switching_sums(state, adj, grp);
    for (m, row) in sums.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v -= multiplier * cost.derivative(m, ctrl.get(m, k));
        }
    }
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{forward_si, reward, QuadraticCost, TimeGrid};
    use crate::network::generate;
    use approx::assert_abs_diff_eq;

    fn grid(k: usize) -> TimeGrid {
        TimeGrid::new(1.0, k).unwrap()
    }

    #[test]
    fn isolated_uncontrolled_is_constant() {
        for n in [1usize, 4] {
            let net = generate::empty(n);
            let grp = Grouping::single(n).unwrap();
            let ctrl = ControlSchedule::zeros(grid(40), 1);
            let state = forward_si(&net, &grp, &ctrl, &vec![0.0; n], 2.0).unwrap();
            let adj = backward_adjoint(&net, &grp, &ctrl, &state, 2.0).unwrap();
            for k in 0..=40 {
                for &v in adj.slice(k) {
                    assert_eq!(v, 1.0 / n as f64);
                }
            }
        }
    }

    #[test]
    fn single_node_unit_control() {
        let net = generate::empty(1);
        let grp = Grouping::single(1).unwrap();
        let g = grid(1000);
        let ctrl = ControlSchedule::constant(g, 1, 1.0);
        let state = forward_si(&net, &grp, &ctrl, &[0.0], 0.0).unwrap();
        let adj = backward_adjoint(&net, &grp, &ctrl, &state, 0.0).unwrap();
        assert_eq!(adj.get(0, 1000), 1.0);
        for k in (0..=1000).step_by(100) {
            assert_abs_diff_eq!(adj.get(0, k), (-(1.0 - g.time(k))).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn hamiltonian_substitutions() {
        let net = generate::empty(1);
        let grp = Grouping::single(1).unwrap();
        let cost = QuadraticCost::new(1.0, &grp).unwrap();
        assert_eq!(
            hamiltonian(&[0.0], &[0.7], &[0.0], &net, &grp, &cost, 1.0),
            0.0
        );
        assert_abs_diff_eq!(
            hamiltonian(&[0.0], &[1.0], &[1.0], &net, &grp, &cost, 1.0),
            0.0
        );
        assert_abs_diff_eq!(
            hamiltonian(&[0.0], &[1.0], &[0.5], &net, &grp, &cost, 1.0),
            0.25
        );
    }

    #[test]
    fn gradient_at_zero_control() {
        let net = generate::empty(1);
        let grp = Grouping::single(1).unwrap();
        let cost = QuadraticCost::new(1.0, &grp).unwrap();
        let ctrl = ControlSchedule::zeros(grid(20), 1);
        let state = forward_si(&net, &grp, &ctrl, &[0.0], 1.0).unwrap();
        let adj = backward_adjoint(&net, &grp, &ctrl, &state, 1.0).unwrap();
        let grad = control_gradient(&state, &adj, &ctrl, &grp, &cost).unwrap();
        assert_eq!(grad[0][0], 1.0);
    }

    /// Central differences of the discrete objective against the adjoint
    /// gradient times the trapezoid weight.
    #[test]
    fn adjoint_gradient_matches_finite_differences() {
        let net = generate::erdos_renyi(12, 0.3, 9);
        let grp = Grouping::new((0..12).map(|j| j % 3).collect(), 3).unwrap();
        let cost = QuadraticCost::new(0.5, &grp).unwrap();
        let g = grid(2000);
        let ctrl = ControlSchedule::from_fn(g, 3, |m, k| 0.3 + 0.2 * m as f64 + 0.4 * g.time(k));
        let seed = vec![0.05; 12];
        let beta = 0.8;
        let objective = |c: &ControlSchedule| {
            let s = forward_si(&net, &grp, c, &seed, beta).unwrap();
            reward(&s, c, &cost).unwrap().j
        };
        let state = forward_si(&net, &grp, &ctrl, &seed, beta).unwrap();
        let adj = backward_adjoint(&net, &grp, &ctrl, &state, beta).unwrap();
        let grad = control_gradient(&state, &adj, &ctrl, &grp, &cost).unwrap();
        let h = 1e-4;
        for k in [0, 1, 57, 1000, 1999, 2000] {
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for m in 0..3 {
                let mut up = ctrl.clone();
                up.set(m, k, ctrl.get(m, k) + h);
                let mut down = ctrl.clone();
                down.set(m, k, ctrl.get(m, k) - h);
                let fd = (objective(&up) - objective(&down)) / (2.0 * h);
                let an = grad[m][k] * g.trapezoid_weight(k);
                worst = worst.max((fd - an).abs());
                scale = scale.max(an.abs());
            }
            assert!(worst <= 1e-3 * scale, "k={k} err={worst} scale={scale}");
        }
    }
}
