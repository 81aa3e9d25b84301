use epictrl_core::centrality::{degree_centrality, group_by_centrality, Grouping};
use epictrl_core::dynamics::{QuadraticCost, TimeGrid};
use epictrl_core::network::generate;
use epictrl_core::seed_opt::{joint_optimize, project_seed, JointParams};
use epictrl_core::sweep::{fbs_solve, SweepParams};
use proptest::prelude::*;

#[test]
fn uncoupled_symmetric_groups_get_uniform_seeds() {
    let net = generate::erdos_renyi(12, 0.3, 4);
    let grp = Grouping::new((0..12).map(|j| j % 3).collect(), 3).unwrap();
    let cost = QuadraticCost::new(1.0, &grp).unwrap();
    let grid = TimeGrid::new(1.0, 60).unwrap();
    let r = joint_optimize(
        &net,
        &grp,
        0.2,
        0.0,
        &cost,
        &SweepParams::default(),
        grid,
        &JointParams::default(),
    )
    .unwrap();
    for &x in r.seed.values() {
        assert!((x - 0.2).abs() <= 1e-3, "{:?}", r.seed.values());
    }
}

#[test]
fn joint_never_loses_to_uniform() {
    let net = generate::barabasi_albert(40, 2, 9);
    let grp = group_by_centrality(&degree_centrality(&net), 4, 0).unwrap();
    let cost = QuadraticCost::new(5.0, &grp).unwrap();
    let grid = TimeGrid::new(1.0, 60).unwrap();
    let params = SweepParams::default();
    let r = joint_optimize(
        &net,
        &grp,
        0.05,
        0.4,
        &cost,
        &params,
        grid,
        &JointParams::default(),
    )
    .unwrap();
    let uniform = fbs_solve(&net, &grp, &[0.05; 40], 0.4, &cost, &params, grid).unwrap();
    assert!(r.solution.report.j >= uniform.report.j - 1e-9);
    assert_eq!(r.history[0], uniform.report.j);
    assert!(r.history.windows(2).all(|w| w[1] > w[0]));
    let fractions = grp.fractions();
    let mass: f64 = r
        .seed
        .values()
        .iter()
        .zip(&fractions)
        .map(|(x, p)| x * p)
        .sum();
    assert!((mass - 0.05).abs() <= 1e-9);
}

#[test]
fn hub_and_isolates_matches_grid_search() {
    let net = generate::hub_and_isolates(10, 10);
    let grp = group_by_centrality(&degree_centrality(&net), 2, 0).unwrap();
    let fractions = grp.fractions();
    let cost = QuadraticCost::new(50.0, &grp).unwrap();
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let params = SweepParams::default();
    let budget = 0.05;
    let beta = 1.0;
    let r = joint_optimize(
        &net,
        &grp,
        budget,
        beta,
        &cost,
        &params,
        grid,
        &JointParams::default(),
    )
    .unwrap();

    // one free variable: x1 in [0, budget / p1], x0 from the constraint
    let upper = (budget / fractions[1]).min(1.0);
    let points = 200;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..points {
        let x1 = upper * k as f64 / (points - 1) as f64;
        let x0 = (budget - fractions[1] * x1) / fractions[0];
        let seed: Vec<f64> = grp
            .assignments()
            .iter()
            .map(|&g| if g == 0 { x0 } else { x1 })
            .collect();
        let j = fbs_solve(&net, &grp, &seed, beta, &cost, &params, grid)
            .unwrap()
            .report
            .j;
        if j > best.0 {
            best = (j, x1);
        }
    }
    let resolution = upper / (points - 1) as f64;
    assert!(
        (r.seed.values()[1] - best.1).abs() <= resolution,
        "{:?} vs grid {}",
        r.seed.values(),
        best.1
    );
    assert!(r.solution.report.j >= best.0 - 1e-9);
    let shares = r.seed.mass_shares(&fractions);
    assert!(shares[1] >= 0.9, "{shares:?}");
}

proptest! {
    #[test]
    fn projection_is_feasible_and_nearest(
        raw in proptest::collection::vec(-1.0f64..2.0, 2..6),
        weights in proptest::collection::vec(0.1f64..1.0, 6),
        t in 0.0f64..1.0,
    ) {
        let m = raw.len();
        let total: f64 = weights[..m].iter().sum();
        let p: Vec<f64> = weights[..m].iter().map(|w| w / total).collect();
        let sv = project_seed(&raw, &p, t).unwrap();
        let x = sv.values();
        let mass: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
        prop_assert!((mass - t).abs() <= 1e-9);
        prop_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        // no feasible point along a random exchange direction is closer
        let dist = |y: &[f64]| y.iter().zip(&raw).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        for a in 0..m {
            for b in 0..m {
                if a == b { continue; }
                let step = 1e-3;
                let mut y = x.to_vec();
                y[a] += step / p[a];
                y[b] -= step / p[b];
                if y.iter().all(|v| (0.0..=1.0).contains(v)) {
                    prop_assert!(dist(&y) >= dist(x) - 1e-12);
                }
            }
        }
    }
}
