use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::Path;

use epictrl_core::budget::{solve_budget as run_budget, BudgetParams};
use epictrl_core::centrality::{
    group_by_centrality, CentralityScores, Grouping, MeasureRegistry, PageRankParams,
};
use epictrl_core::dynamics::{ControlSchedule, QuadraticCost, TimeGrid};
use epictrl_core::experiment::{run_sweep, write_sweep_csv, Axis, SweepBase};
use epictrl_core::heuristics::{
    best_static, best_two_stage, static_for_budget, two_stage_for_budget, HeuristicParams,
};
use epictrl_core::mc::{simulate, McParams};
use epictrl_core::network::{bfs_sample, giant_component, load_edge_list, Network};
use epictrl_core::seed_opt::{joint_optimize, JointParams};
use epictrl_core::strategy::StrategyRegistry;
use epictrl_core::sweep::{evaluate_controls, fbs_solve, SolveReport, SweepParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::CliError;
use crate::output::{write_seed_csv, Sink};

type Result<T> = std::result::Result<T, CliError>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn finite_nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn pagerank_params(m: &MeasureArgs) -> PageRankParams {
    PageRankParams {
        eta: m.pagerank_eta,
        delta: m.pagerank_delta,
        tol: m.pagerank_tol,
        ..PageRankParams::default()
    }
}

fn validate_measure(m: &MeasureArgs) -> Result<()> {
    let reg = MeasureRegistry::with_defaults(pagerank_params(m));
    reg.get(&m.measure)?;
    check((0.0..1.0).contains(&m.pagerank_eta), || {
        format!("--pagerank-eta must lie in [0, 1), got {}", m.pagerank_eta)
    })?;
    check(
        m.pagerank_delta > 0.0 && m.pagerank_delta.is_finite(),
        || "--pagerank-delta must be positive".into(),
    )?;
    check(m.pagerank_tol > 0.0, || {
        "--pagerank-tol must be positive".into()
    })
}

fn validate_model(m: &ModelArgs) -> Result<()> {
    validate_measure(&m.measure)?;
    check(m.groups >= 1, || "--groups must be at least 1".into())?;
    check(finite_nonneg(m.beta), || {
        format!("--beta must be nonnegative, got {}", m.beta)
    })?;
    check(m.b > 0.0 && m.b.is_finite(), || {
        format!("--b must be positive, got {}", m.b)
    })?;
    TimeGrid::new(m.horizon, m.steps)?;
    check((0.0..=1.0).contains(&m.seed_frac), || {
        format!("--seed-frac must lie in [0, 1], got {}", m.seed_frac)
    })?;
    if let Some(v) = &m.seed_vector {
        check(v.len() == m.groups, || {
            format!(
                "--seed-vector has {} entries for {} groups",
                v.len(),
                m.groups
            )
        })?;
        check(v.iter().all(|x| (0.0..=1.0).contains(x)), || {
            "--seed-vector entries must lie in [0, 1]".into()
        })?;
    }
    Ok(())
}

fn sweep_params(s: &SolverArgs) -> Result<SweepParams> {
    let p = SweepParams {
        u_th: s.uth,
        max_iter: s.maxiter,
        damping: s.damping,
        adaptive_damping: !s.fixed_damping,
        stationarity_tol: s.stationarity_tol,
        control_warn: s.control_warn,
    };
    p.validate()?;
    Ok(p)
}

fn joint_params(j: &JointArgs) -> Result<JointParams> {
    let p = JointParams {
        max_outer: j.outer,
        fd_step: j.fd_step,
        max_halvings: j.max_halvings,
        rel_tol: j.rel_tol,
        ..JointParams::default()
    };
    p.validate()?;
    Ok(p)
}

fn heuristic_params(s: &SearchArgs) -> Result<HeuristicParams> {
    check(s.u_max > 0.0 && s.u_max.is_finite(), || {
        "--u-max must be positive".into()
    })?;
    check(s.tol > 0.0, || "--tol must be positive".into())?;
    check(s.max_evals >= 10, || {
        "--max-evals must be at least 10".into()
    })?;
    Ok(HeuristicParams {
        u_max: s.u_max,
        tol: s.tol,
        max_evals: s.max_evals,
    })
}

fn budget_params(budget: f64, b: &BracketArgs, sweep: SweepParams) -> Result<BudgetParams> {
    let p = BudgetParams {
        budget,
        mu_low: b.mu_lo,
        mu_high: b.mu_hi,
        mu_th: b.mu_th,
        spend_rtol: b.spend_rtol,
        max_widen: b.max_widen,
        sweep,
    };
    p.validate()?;
    Ok(p)
}

fn load_graph(g: &GraphArgs) -> Result<Network> {
    let file = File::open(&g.graph).map_err(|e| CliError::io(&g.graph, e))?;
    let loaded = load_edge_list(BufReader::new(file))?;
    let mut net = loaded.network;
    log::info!(
        "loaded {} nodes, {} edges from {}",
        net.node_count(),
        net.edge_count(),
        g.graph.display()
    );
    if g.giant {
        net = giant_component(&net).0;
        log::info!("giant component has {} nodes", net.node_count());
    }
    if let Some(target) = g.bfs_target {
        check(target >= 1, || "--bfs-target must be at least 1".into())?;
        check(g.bfs_start < net.node_count(), || {
            format!(
                "--bfs-start {} is not a node of a {}-node graph",
                g.bfs_start,
                net.node_count()
            )
        })?;
        net = bfs_sample(&net, g.bfs_start, target)?.0;
        log::info!("breadth-first sample has {} nodes", net.node_count());
    }
    Ok(net)
}

fn scores_for(net: &Network, m: &MeasureArgs) -> Result<CentralityScores> {
    let reg = MeasureRegistry::with_defaults(pagerank_params(m));
    Ok(reg.get(&m.measure)?.compute(net)?)
}

/// Everything a solver command needs once the inputs have been checked.
struct Setup {
    net: Network,
    scores: CentralityScores,
    grp: Grouping,
    cost: QuadraticCost,
    grid: TimeGrid,
    /// Per-group seed fractions.
    seed_groups: Vec<f64>,
    /// Per-node seed probabilities.
    seed: Vec<f64>,
}

impl Setup {
    fn new(graph: &GraphArgs, m: &ModelArgs) -> Result<Setup> {
        let net = load_graph(graph)?;
        let scores = scores_for(&net, &m.measure)?;
        let grp = group_by_centrality(&scores, m.groups, m.rng_seed)?;
        let cost = QuadraticCost::new(m.b, &grp)?;
        let grid = TimeGrid::new(m.horizon, m.steps)?;
        let seed_groups = m
            .seed_vector
            .clone()
            .unwrap_or_else(|| vec![m.seed_frac; m.groups]);
        let seed = grp.assignments().iter().map(|&g| seed_groups[g]).collect();
        Ok(Setup {
            net,
            scores,
            grp,
            cost,
            grid,
            seed_groups,
            seed,
        })
    }

    fn network_json(&self) -> Value {
        json!({
            "nodes": self.net.node_count(),
            "edges": self.net.edge_count(),
            "measure": self.scores.measure,
            "group_sizes": (0..self.grp.group_count()).map(|m| self.grp.size(m)).collect::<Vec<_>>(),
            "group_fractions": self.grp.fractions(),
        })
    }
}

fn envelope(command: &str, config: &impl Serialize, network: Value, result: Value) -> Value {
    json!({
        "tool": {
            "name": "epictrl",
            "version": env!("CARGO_PKG_VERSION"),
            "report_schema": REPORT_SCHEMA,
        },
        "command": command,
        "config": config,
        "network": network,
        "result": result,
    })
}

fn not_converged(what: &str, r: &SolveReport) -> CliError {
    CliError::NotConverged(format!(
        "{what} stopped after {} iterations without converging (control change {:e}, stationarity {:e}); outputs were still written",
        r.iterations, r.final_control_delta, r.max_stationarity_residual
    ))
}

pub fn centrality(c: &CentralityCmd) -> Result<()> {
    validate_measure(&c.measure)?;
    let net = load_graph(&c.graph)?;
    let scores = scores_for(&net, &c.measure)?;
    match &c.out {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            scores
                .write_csv(&mut lock)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
        Some(path) => {
            let mut f = io::BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
            scores
                .write_csv(&mut f)
                .and_then(|_| f.flush())
                .map_err(|e| CliError::io(path, e))
        }
    }
}

pub fn solve(c: &SolveCmd) -> Result<()> {
    validate_model(&c.model)?;
    let params = sweep_params(&c.solver)?;
    let sink = Sink::new(c.out.out.as_deref())?;
    let s = Setup::new(&c.graph, &c.model)?;
    let sol = fbs_solve(
        &s.net,
        &s.grp,
        &s.seed,
        c.model.beta,
        &s.cost,
        &params,
        s.grid,
    )?;
    sink.solution_files(&sol.controls, &sol.state, &s.cost, &s.grp)?;
    let result = json!({ "seed": s.seed_groups, "report": sol.report });
    sink.report(&envelope("solve", c, s.network_json(), result))?;
    if !sol.report.converged {
        return Err(not_converged("forward-backward sweep", &sol.report));
    }
    Ok(())
}

pub fn solve_joint(c: &JointCmd) -> Result<()> {
    validate_model(&c.model)?;
    check(c.model.seed_vector.is_none(), || {
        "solve-joint optimizes the seed vector; give the seed budget with --seed-budget".into()
    })?;
    let params = sweep_params(&c.solver)?;
    let jp = joint_params(&c.joint)?;
    let sink = Sink::new(c.out.out.as_deref())?;
    let s = Setup::new(&c.graph, &c.model)?;
    let r = joint_optimize(
        &s.net,
        &s.grp,
        c.model.seed_frac,
        c.model.beta,
        &s.cost,
        &params,
        s.grid,
        &jp,
    )?;
    let fractions = s.grp.fractions();
    let shares = r.seed.mass_shares(&fractions);
    sink.solution_files(&r.solution.controls, &r.solution.state, &s.cost, &s.grp)?;
    sink.file("seed_alloc.csv", |w| {
        write_seed_csv(r.seed.values(), &shares, w)
    })?;
    let result = json!({
        "seed_budget": r.seed.budget(),
        "seed": r.seed.values(),
        "seed_mass_share": shares,
        "outer_iterations": r.iterations,
        "evaluations": r.evaluations,
        "history": r.history,
        "report": r.solution.report,
    });
    sink.report(&envelope("solve-joint", c, s.network_json(), result))?;
    if !r.solution.report.converged {
        return Err(not_converged(
            "final forward-backward sweep",
            &r.solution.report,
        ));
    }
    Ok(())
}

pub fn solve_budget(c: &BudgetCmd) -> Result<()> {
    validate_model(&c.model)?;
    check(finite_nonneg(c.budget), || {
        format!("--budget must be nonnegative, got {}", c.budget)
    })?;
    let bp = budget_params(c.budget, &c.bracket, sweep_params(&c.solver)?)?;
    let sink = Sink::new(c.out.out.as_deref())?;
    let s = Setup::new(&c.graph, &c.model)?;
    let r = run_budget(&s.net, &s.grp, &s.seed, c.model.beta, &s.cost, s.grid, &bp)?;
    sink.solution_files(&r.solution.controls, &r.solution.state, &s.cost, &s.grp)?;
    let result = json!({
        "seed": s.seed_groups,
        "budget": c.budget,
        "reach": r.objective,
        "multiplier": r.mu,
        "bracket": [r.bracket.0, r.bracket.1],
        "widening_steps": r.widening_steps,
        "bisection_steps": r.bisection_steps,
        "iteration_bound": r.iteration_bound,
        "report": r.solution.report,
    });
    sink.report(&envelope("solve-budget", c, s.network_json(), result))?;
    if !r.solution.report.converged {
        return Err(not_converged(
            "forward-backward sweep at the final multiplier",
            &r.solution.report,
        ));
    }
    Ok(())
}

pub fn heuristic(c: &HeuristicCmd) -> Result<()> {
    validate_model(&c.model)?;
    let hp = heuristic_params(&c.search)?;
    if let Some(b) = c.budget {
        check(finite_nonneg(b), || {
            format!("--budget must be nonnegative, got {b}")
        })?;
    }
    if c.kind == Kind::TwoStage {
        check(c.model.steps % 2 == 0, || {
            "two-stage controls need an even --steps".into()
        })?;
    }
    let sink = Sink::new(c.out.out.as_deref())?;
    let s = Setup::new(&c.graph, &c.model)?;
    let (net, grp, seed, beta, cost, grid) =
        (&s.net, &s.grp, &s.seed, c.model.beta, &s.cost, s.grid);
    let r = match (c.kind, c.budget) {
        (Kind::Static, None) => best_static(net, grp, seed, beta, cost, grid, &hp)?,
        (Kind::TwoStage, None) => best_two_stage(net, grp, seed, beta, cost, grid, &hp)?,
        (Kind::Static, Some(b)) => static_for_budget(net, grp, seed, beta, cost, grid, b)?,
        (Kind::TwoStage, Some(b)) => two_stage_for_budget(net, grp, seed, beta, cost, grid, b)?,
    };
    let controls = r.controls(grid, grp.group_count())?;
    let sol = evaluate_controls(net, grp, seed, beta, cost, &controls)?;
    sink.solution_files(&sol.controls, &sol.state, cost, grp)?;
    let result = json!({ "seed": s.seed_groups, "heuristic": r });
    sink.report(&envelope("heuristic", c, s.network_json(), result))
}

/// Reads a `t,index,value` controls file back onto `grid`.
fn read_controls(path: &Path, grid: TimeGrid, groups: usize) -> Result<ControlSchedule> {
    let bad = |msg: String| CliError::config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["t", "index", "value"] {
        return Err(bad("expected header t,index,value".into()));
    }
    let mut rows = vec![vec![f64::NAN; grid.points()]; groups];
    let mut seen = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let t: f64 = field(0)
            .parse()
            .map_err(|_| bad(format!("bad time '{}'", field(0))))?;
        let m: usize = field(1)
            .parse()
            .map_err(|_| bad(format!("bad group '{}'", field(1))))?;
        let v: f64 = field(2)
            .parse()
            .map_err(|_| bad(format!("bad value '{}'", field(2))))?;
        let k = (t / grid.dt()).round();
        if m >= groups
            || k < 0.0
            || k as usize >= grid.points()
            || (grid.time(k as usize) - t).abs() > 1e-9 * grid.horizon
        {
            return Err(bad(format!(
                "row t={t}, index={m} is off the {}-group grid given by --steps/--horizon",
                groups
            )));
        }
        rows[m][k as usize] = v;
        seen += 1;
    }
    if seen != groups * grid.points() || rows.iter().flatten().any(|v| v.is_nan()) {
        return Err(bad(format!(
            "expected {} rows, one per grid point and group",
            groups * grid.points()
        )));
    }
    Ok(ControlSchedule::from_rows(grid, rows)?)
}

pub fn mc_validate(c: &McCmd) -> Result<()> {
    validate_model(&c.model)?;
    let params = sweep_params(&c.solver)?;
    check(c.runs >= 1, || "--runs must be at least 1".into())?;
    check(c.substeps >= 1, || "--substeps must be at least 1".into())?;
    check(c.bins != Some(0), || "--bins must be at least 1".into())?;
    if let Some(level) = c.level {
        check(finite_nonneg(level), || {
            format!("--level must be nonnegative, got {level}")
        })?;
    }
    let sink = Sink::new(c.out.out.as_deref())?;
    let s = Setup::new(&c.graph, &c.model)?;
    let m = s.grp.group_count();
    let (source, controls) = match (&c.controls, c.level) {
        (Some(path), _) => ("file", read_controls(path, s.grid, m)?),
        (None, Some(level)) => ("constant", ControlSchedule::constant(s.grid, m, level)),
        (None, None) => {
            let sol = fbs_solve(
                &s.net,
                &s.grp,
                &s.seed,
                c.model.beta,
                &s.cost,
                &params,
                s.grid,
            )?;
            if !sol.report.converged {
                log::warn!("validating controls from a sweep that did not converge");
            }
            ("optimal", sol.controls)
        }
    };
    let ode = evaluate_controls(&s.net, &s.grp, &s.seed, c.model.beta, &s.cost, &controls)?;
    let mc = simulate(
        &s.net,
        &s.grp,
        &controls,
        &s.seed,
        c.model.beta,
        &McParams {
            runs: c.runs,
            rng_seed: c.model.rng_seed,
            substeps: c.substeps,
            histogram_bins: c.bins,
        },
    )?;
    sink.solution_files(&ode.controls, &ode.state, &s.cost, &s.grp)?;
    let diff = ode.report.reach - mc.mean_reach;
    let result = json!({
        "controls": source,
        "seed": s.seed_groups,
        "ode_reach": ode.report.reach,
        "difference": diff,
        "standard_errors": if mc.stderr > 0.0 { Some(diff / mc.stderr) } else { None },
        "monte_carlo": mc,
        "report": ode.report,
    });
    sink.report(&envelope("mc-validate", c, s.network_json(), result))
}

pub fn sweep(c: &SweepCmd) -> Result<()> {
    validate_model(&c.model)?;
    let axis = Axis::parse(&c.axis)?;
    let sweep = sweep_params(&c.solver)?;
    let joint = joint_params(&c.joint)?;
    let heuristic = heuristic_params(&c.search)?;
    let budget = budget_params(0.0, &c.bracket, sweep)?;
    check(c.model.seed_vector.is_none(), || {
        "sweep seeds every group with --seed-frac".into()
    })?;
    check(c.values.iter().all(|v| v.is_finite()), || {
        "--values must be finite".into()
    })?;

    let defaults = StrategyRegistry::with_defaults();
    let registry = match &c.strategies {
        None => defaults,
        Some(names) => {
            let mut reg = StrategyRegistry::empty();
            for name in names {
                reg.register(defaults.get(name.trim())?);
            }
            reg
        }
    };
    let sink = Sink::new(c.out.out.as_deref())?;
    let net = load_graph(&c.graph)?;
    let scores = scores_for(&net, &c.model.measure)?;
    let base = SweepBase {
        net: &net,
        scores: &scores,
        groups: c.model.groups,
        rng_seed: c.model.rng_seed,
        i0: c.model.seed_frac,
        beta: c.model.beta,
        b: c.model.b,
        grid: TimeGrid::new(c.model.horizon, c.model.steps)?,
        sweep,
        heuristic,
        joint,
        budget,
    };
    let rows = run_sweep(&base, axis, &c.values, &registry)?;
    if sink.is_stdout() {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        return write_sweep_csv(&rows, &mut lock)
            .and_then(|_| lock.flush())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e));
    }
    sink.file("sweep.csv", |w| write_sweep_csv(&rows, w))?;
    let network = json!({
        "nodes": net.node_count(),
        "edges": net.edge_count(),
        "measure": scores.measure,
    });
    let result = json!({ "axis": axis.name(), "strategies": registry.names(), "rows": rows });
    sink.report(&envelope("sweep", c, network, result))
}
