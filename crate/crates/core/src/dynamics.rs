//! Controlled SI dynamics on a network and the functionals evaluated on them.
//!
//! The state equation is
//! `di_j/dt = s_j * (beta * sum_k A_jk i_k + u_{g(j)}(t))`, `s_j = 1 - i_j`,
//! integrated with classic fixed-step RK4 on a uniform grid. Controls are
//! stored at grid points and interpolated linearly where RK4 needs half steps.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::centrality::Grouping;
use crate::error::{invalid, Error, Result};
use crate::fmt::num;
use crate::network::Network;

/// Clamps larger than this are reported as integration diagnostics.
const CLAMP_WARN: f64 = 1e-9;

/// Uniform grid `t_k = k T / K`, `k = 0..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!(
                "horizon T must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(invalid("number of time steps K must be at least 1"));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn points(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps as f64
    }

    /// Composite-trapezoid weight of grid point `k`.
    pub fn trapezoid_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.steps {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    /// Composite-trapezoid integral of samples taken at the grid points.
    pub fn integrate(&self, samples: impl IntoIterator<Item = f64>) -> f64 {
        let mut total = 0.0;
        let mut count = 0;
        for (k, v) in samples.into_iter().enumerate() {
            total += self.trapezoid_weight(k) * v;
            count += 1;
        }
        debug_assert_eq!(count, self.points());
        total
    }
}

/// Per-group controls `u_m(t_k)`, nonnegative and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    grid: TimeGrid,
    groups: usize,
    /// Group-major: `values[m * (K + 1) + k]`.
    values: Vec<f64>,
}

impl ControlSchedule {
    pub fn zeros(grid: TimeGrid, groups: usize) -> Self {
        Self::constant(grid, groups, 0.0)
    }

    pub fn constant(grid: TimeGrid, groups: usize, level: f64) -> Self {
        ControlSchedule {
            grid,
            groups,
            values: vec![level; groups * grid.points()],
        }
    }

    /// `level` on `[0, T/2]`, zero afterwards. Needs an even step count so
    /// `T/2` is a grid point.
    pub fn two_stage(grid: TimeGrid, groups: usize, level: f64) -> Result<Self> {
        if grid.steps % 2 != 0 {
            return Err(invalid(format!(
                "two-stage controls need an even number of steps, got K = {}",
                grid.steps
            )));
        }
        let half = grid.steps / 2;
        Ok(Self::from_fn(grid, groups, |_, k| {
            if k <= half {
                level
            } else {
                0.0
            }
        }))
    }

    pub fn from_fn(grid: TimeGrid, groups: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(groups * grid.points());
        for m in 0..groups {
            for k in 0..grid.points() {
                values.push(f(m, k));
            }
        }
        ControlSchedule {
            grid,
            groups,
            values,
        }
    }

    /// Builds from group-major rows, checking shape and sign.
    pub fn from_rows(grid: TimeGrid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let groups = rows.len();
        let mut values = Vec::with_capacity(groups * grid.points());
        for (m, row) in rows.into_iter().enumerate() {
            if row.len() != grid.points() {
                return Err(Error::Dimension(format!(
                    "control row {m} has {} samples, grid has {}",
                    row.len(),
                    grid.points()
                )));
            }
            values.extend(row);
        }
        let sched = ControlSchedule {
            grid,
            groups,
            values,
        };
        sched.validate()?;
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|v| !(v.is_finite() && *v >= 0.0))
        {
            Some(idx) => Err(invalid(format!(
                "control u[{}][{}] = {} must be finite and nonnegative",
                idx / self.grid.points(),
                idx % self.grid.points(),
                self.values[idx]
            ))),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn group_count(&self) -> usize {
        self.groups
    }

    #[inline]
    pub fn get(&self, group: usize, k: usize) -> f64 {
        self.values[group * self.grid.points() + k]
    }

    #[inline]
    pub fn set(&mut self, group: usize, k: usize, value: f64) {
        let idx = group * self.grid.points() + k;
        self.values[idx] = value;
    }

    pub fn row(&self, group: usize) -> &[f64] {
        let p = self.grid.points();
        &self.values[group * p..(group + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.grid.points())
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `max_{m,k} |u - other|`.
    pub fn sup_distance(&self, other: &ControlSchedule) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `self <- (1 - weight) * base + weight * target`.
    pub(crate) fn assign_blend(
        &mut self,
        base: &ControlSchedule,
        target: &ControlSchedule,
        weight: f64,
    ) {
        for ((v, b), t) in self.values.iter_mut().zip(&base.values).zip(&target.values) {
            *v = (1.0 - weight) * b + weight * t;
        }
    }

    /// Group controls at grid point `k`.
    fn sample(&self, k: usize, out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            *o = self.get(m, k);
        }
    }

    /// Linear interpolation halfway between grid points `k` and `k + 1`.
    fn sample_mid(&self, k: usize, out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            *o = 0.5 * (self.get(m, k) + self.get(m, k + 1));
        }
    }

    /// Linear interpolation at an arbitrary time in `[0, T]`.
    pub fn value_at(&self, group: usize, t: f64) -> f64 {
        let x = (t / self.grid.dt()).clamp(0.0, self.grid.steps as f64);
        let k = (x.floor() as usize).min(self.grid.steps - 1);
        let w = x - k as f64;
        (1.0 - w) * self.get(group, k) + w * self.get(group, k + 1)
    }

    /// Long-form CSV `t,index,value` with a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,index,value")?;
        for k in 0..self.grid.points() {
            let t = num(self.grid.time(k));
            for m in 0..self.groups {
                writeln!(out, "{t},{m},{}", num(self.get(m, k)))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    State,
    Adjoint,
}

/// Per-node values on the grid: infection probabilities or adjoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    kind: TrajectoryKind,
    nodes: usize,
    /// Time-major: `values[k * N + j]`.
    values: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn filled(grid: TimeGrid, kind: TrajectoryKind, nodes: usize, value: f64) -> Self {
        Trajectory {
            grid,
            kind,
            nodes,
            values: vec![value; nodes * grid.points()],
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// All node values at grid point `k`.
    #[inline]
    pub fn slice(&self, k: usize) -> &[f64] {
        &self.values[k * self.nodes..(k + 1) * self.nodes]
    }

    #[inline]
    pub(crate) fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.nodes..(k + 1) * self.nodes]
    }

    #[inline]
    pub fn get(&self, node: usize, k: usize) -> f64 {
        self.values[k * self.nodes + node]
    }

    pub fn last(&self) -> &[f64] {
        self.slice(self.grid.steps)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Long-form CSV `t,index,value` with a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,index,value")?;
        for k in 0..self.grid.points() {
            let t = num(self.grid.time(k));
            for (j, v) in self.slice(k).iter().enumerate() {
                writeln!(out, "{t},{j},{}", num(*v))?;
            }
        }
        Ok(())
    }
}

/// Instantaneous control cost `g_m(u)` with the derivative and derivative
/// inverse the maximum principle needs. Costs are even, strictly convex and
/// increasing on `u >= 0` with `g_m(0) = 0`.
pub trait CostModel: Send + Sync {
    fn group_count(&self) -> usize;
    /// `p_m`, the fraction of nodes in group `m`.
    fn group_fraction(&self, group: usize) -> f64;
    fn value(&self, group: usize, u: f64) -> f64;
    fn derivative(&self, group: usize, u: f64) -> f64;
    fn inverse_derivative(&self, group: usize, y: f64) -> f64;
}

/// `g_m(u) = b p_m u^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticCost {
    pub b: f64,
    pub fractions: Vec<f64>,
}

impl QuadraticCost {
    pub fn new(b: f64, grouping: &Grouping) -> Result<Self> {
        Self::with_fractions(b, grouping.fractions())
    }

    pub fn with_fractions(b: f64, fractions: Vec<f64>) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid(format!("cost weight b must be positive, got {b}")));
        }
        if fractions.iter().any(|p| !(*p > 0.0)) {
            return Err(invalid("group fractions must be positive"));
        }
        Ok(QuadraticCost { b, fractions })
    }
}

impl CostModel for QuadraticCost {
    fn group_count(&self) -> usize {
        self.fractions.len()
    }
    fn group_fraction(&self, group: usize) -> f64 {
        self.fractions[group]
    }
    fn value(&self, group: usize, u: f64) -> f64 {
        self.b * self.fractions[group] * u * u
    }
    fn derivative(&self, group: usize, u: f64) -> f64 {
        2.0 * self.b * self.fractions[group] * u
    }
    fn inverse_derivative(&self, group: usize, y: f64) -> f64 {
        y / (2.0 * self.b * self.fractions[group])
    }
}

/// Which of the three RK4 evaluation times a stage uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Start,
    Mid,
    End,
}

/// Scratch buffers for one classic RK4 step on an `n`-vector.
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `y` by `h` given `f(stage, y, dy)`.
    pub(crate) fn step(
        &mut self,
        y: &mut [f64],
        h: f64,
        mut f: impl FnMut(Stage, &[f64], &mut [f64]),
    ) {
        f(Stage::Start, y, &mut self.k1);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *t = y + 0.5 * h * k;
        }
        f(Stage::Mid, &self.tmp, &mut self.k2);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *t = y + 0.5 * h * k;
        }
        f(Stage::Mid, &self.tmp, &mut self.k3);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *t = y + h * k;
        }
        f(Stage::End, &self.tmp, &mut self.k4);
        for (j, y) in y.iter_mut().enumerate() {
            *y += h / 6.0 * (self.k1[j] + 2.0 * self.k2[j] + 2.0 * self.k3[j] + self.k4[j]);
        }
    }
}

pub(crate) fn check_dimensions(
    net: &Network,
    grp: &Grouping,
    ctrl: &ControlSchedule,
) -> Result<()> {
    if grp.node_count() != net.node_count() {
        return Err(Error::Dimension(format!(
            "grouping covers {} nodes, network has {}",
            grp.node_count(),
            net.node_count()
        )));
    }
    if ctrl.group_count() != grp.group_count() {
        return Err(Error::Dimension(format!(
            "control schedule has {} groups, grouping has {}",
            ctrl.group_count(),
            grp.group_count()
        )));
    }
    Ok(())
}

pub(crate) fn check_seed(seed: &[f64], nodes: usize) -> Result<()> {
    if seed.len() != nodes {
        return Err(Error::Dimension(format!(
            "seed has {} entries, network has {nodes}",
            seed.len()
        )));
    }
    if let Some(j) = seed.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return Err(invalid(format!(
            "seed[{j}] = {} is outside [0, 1]",
            seed[j]
        )));
    }
    Ok(())
}

/// Integrates the controlled SI state forward from `i(0) = seed`.
pub fn forward_si(
    net: &Network,
    grp: &Grouping,
    ctrl: &ControlSchedule,
    seed: &[f64],
    beta: f64,
) -> Result<Trajectory> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!(
            "spreading rate beta must be nonnegative, got {beta}"
        )));
    }
    check_dimensions(net, grp, ctrl)?;
    check_seed(seed, net.node_count())?;

    let n = net.node_count();
    let grid = ctrl.grid();
    let dt = grid.dt();
    let group_of = grp.assignments();
    let mut traj = Trajectory::filled(grid, TrajectoryKind::State, n, 0.0);
    traj.slice_mut(0).copy_from_slice(seed);

    let mut rk = Rk4::new(n);
    let mut y = seed.to_vec();
    let mut ai = vec![0.0; n];
    let (mut u_start, mut u_mid, mut u_end) = (
        vec![0.0; grp.group_count()],
        vec![0.0; grp.group_count()],
        vec![0.0; grp.group_count()],
    );
    let mut worst_clamp = 0.0f64;
    for k in 0..grid.steps {
        ctrl.sample(k, &mut u_start);
        ctrl.sample_mid(k, &mut u_mid);
        ctrl.sample(k + 1, &mut u_end);
        rk.step(&mut y, dt, |stage, x, dx| {
            let u = match stage {
                Stage::Start => &u_start,
                Stage::Mid => &u_mid,
                Stage::End => &u_end,
            };
            net.mul_vec(x, &mut ai);
            for j in 0..n {
                dx[j] = (1.0 - x[j]) * (beta * ai[j] + u[group_of[j]]);
            }
        });
        for v in y.iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    stage: "forward",
                    step: k,
                });
            }
            let c = v.clamp(0.0, 1.0);
            worst_clamp = worst_clamp.max((c - *v).abs());
            *v = c;
        }
        traj.slice_mut(k + 1).copy_from_slice(&y);
    }
    if worst_clamp > CLAMP_WARN {
        log::warn!(
            "forward integration clamped a state by {worst_clamp:e}; consider more time steps"
        );
    }
    Ok(traj)
}

/// Net reward and its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reward {
    /// `reach - spend`.
    pub j: f64,
    /// `(1/N) sum_j i_j(T)`.
    pub reach: f64,
    /// `sum_m int g_m(u_m) dt`.
    pub spend: f64,
    pub per_group_spend: Vec<f64>,
}

/// `int_0^T g_m(u_m) dt` for each group, by composite trapezoid.
pub fn group_spend(ctrl: &ControlSchedule, cost: &dyn CostModel) -> Vec<f64> {
    let grid = ctrl.grid();
    (0..ctrl.group_count())
        .map(|m| grid.integrate(ctrl.row(m).iter().map(|&u| cost.value(m, u))))
        .collect()
}

/// Total resource `sum_m int g_m(u_m) dt`.
pub fn spend_of(ctrl: &ControlSchedule, cost: &dyn CostModel) -> f64 {
    group_spend(ctrl, cost).iter().sum()
}

pub fn reach_of(state: &Trajectory) -> f64 {
    let last = state.last();
    last.iter().sum::<f64>() / last.len() as f64
}

pub fn reward(state: &Trajectory, ctrl: &ControlSchedule, cost: &dyn CostModel) -> Result<Reward> {
    if state.grid() != ctrl.grid() {
        return Err(Error::Dimension(
            "state and control use different grids".into(),
        ));
    }
    if cost.group_count() != ctrl.group_count() {
        return Err(Error::Dimension(
            "cost model and controls disagree on group count".into(),
        ));
    }
    let reach = reach_of(state);
    let per_group_spend = group_spend(ctrl, cost);
    let spend: f64 = per_group_spend.iter().sum();
    Ok(Reward {
        j: reach - spend,
        reach,
        spend,
        per_group_spend,
    })
}

/// Resource used by group `m` per member: `(1/p_m) int g_m(u_m) dt`, which is
/// `b int u_m^2 dt` for quadratic costs.
pub fn per_capita_resource(
    ctrl: &ControlSchedule,
    cost: &dyn CostModel,
    group: usize,
) -> Result<f64> {
    if group >= ctrl.group_count() || group >= cost.group_count() {
        return Err(invalid(format!("group {group} out of range")));
    }
    let grid = ctrl.grid();
    let total = grid.integrate(ctrl.row(group).iter().map(|&u| cost.value(group, u)));
    Ok(total / cost.group_fraction(group))
}
