use epictrl_core::centrality::Grouping;
use epictrl_core::dynamics::{forward_si, reach_of, ControlSchedule, TimeGrid};
use epictrl_core::network::generate;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn state_stays_in_unit_interval_and_grows(
        n in 2usize..25,
        p in 0.0f64..0.5,
        graph_seed in any::<u64>(),
        beta in 0.0f64..3.0,
        level in 0.0f64..4.0,
        i0 in 0.0f64..1.0,
    ) {
        let net = generate::erdos_renyi(n, p, graph_seed);
        let grp = Grouping::single(n).unwrap();
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let ctrl = ControlSchedule::constant(grid, 1, level);
        let traj = forward_si(&net, &grp, &ctrl, &vec![i0; n], beta).unwrap();
        for k in 0..grid.points() {
            for j in 0..n {
                let v = traj.get(j, k);
                prop_assert!((0.0..=1.0).contains(&v));
                if k > 0 {
                    prop_assert!(v >= traj.get(j, k - 1) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn more_control_or_contagion_means_more_reach(
        n in 2usize..20,
        graph_seed in any::<u64>(),
        beta in 0.0f64..2.0,
        level in 0.0f64..2.0,
        extra in 0.0f64..1.0,
    ) {
        let net = generate::erdos_renyi(n, 0.3, graph_seed);
        let grp = Grouping::new((0..n).map(|j| j % 2).collect(), 2.min(n)).unwrap();
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let seed = vec![0.05; n];
        let low = ControlSchedule::constant(grid, grp.group_count(), level);
        let high = ControlSchedule::from_fn(grid, grp.group_count(), |m, _| level + extra * (m as f64 + 1.0));
        let r_low = reach_of(&forward_si(&net, &grp, &low, &seed, beta).unwrap());
        let r_high = reach_of(&forward_si(&net, &grp, &high, &seed, beta).unwrap());
        prop_assert!(r_high >= r_low - 1e-12);
        let r_beta = reach_of(&forward_si(&net, &grp, &low, &seed, beta + extra).unwrap());
        prop_assert!(r_beta >= r_low - 1e-12);
    }
}
