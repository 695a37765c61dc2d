use magedge::model::{
    build_lattice, eval_bump, eval_disorder_potential, eval_wall, sample_realization, LatticeVariant, WallProfile,
    WallSide, BUMP_RADIUS,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn potential_is_bounded_and_periodic(seed in any::<u64>(), v0 in 0.01f64..2.0, sixteenths in 96u32..224) {
        // dyadic L and sample points keep y + L exact
        let length = sixteenths as f64 / 16.0;
        let Ok(lattice) = build_lattice(LatticeVariant::GapExperiment, length) else {
            return Ok(());
        };
        let omega = sample_realization(seed, &lattice, v0);
        let half = 0.5 * length;
        for i in 0..=64 {
            let x = -half + length * i as f64 / 64.0;
            for j in 0..=64 {
                let y = -half + length * j as f64 / 64.0 + 1.0 / 128.0;
                let v = eval_disorder_potential(x, y, &omega, length);
                prop_assert!(v.abs() <= v0);
                prop_assert_eq!(v, eval_disorder_potential(x, y + length, &omega, length));
            }
        }
    }

    #[test]
    fn walls_are_monotone_outside(c in 0.1f64..10.0, m in 3u32..9, length in 4.0f64..30.0) {
        for side in [WallSide::Left, WallSide::Right] {
            let wall = WallProfile::new(c, m, side).unwrap();
            let sign = if side == WallSide::Left { -1.0 } else { 1.0 };
            let start = sign * 0.5 * length;
            let values: Vec<f64> = (0..1000)
                .map(|i| eval_wall(start + sign * 3.0 * i as f64 / 999.0, &wall, length))
                .collect();
            prop_assert_eq!(values[0], 0.0);
            for w in values.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn bump_vanishes_to_second_order(angle in 0.0f64..std::f64::consts::TAU, v_loc in 0.0f64..5.0) {
        for r in [BUMP_RADIUS - 1e-9, BUMP_RADIUS + 1e-9] {
            let v = eval_bump(r * angle.cos(), r * angle.sin(), v_loc);
            prop_assert!(v.abs() < 1e-24 * v_loc.max(f64::MIN_POSITIVE));
        }
    }
}
