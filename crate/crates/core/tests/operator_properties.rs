use magedge::assembly::{assemble_full, build_fiber, AssembledOperator, Basis, WallSet};
use magedge::model::{build_lattice, sample_realization, DisorderRealization, LatticeVariant, ModelParams};
use magedge::spectral::{dense_oracle, eigs_in_window, EnergyWindow, SolverOptions};
use proptest::prelude::*;

fn five_lowest(params: &ModelParams, half: f64, n_x: usize, k: f64) -> Vec<f64> {
    let basis = Basis::new(half, n_x, 0, params.length, 3.0 * params.b_field).unwrap();
    let fiber = build_fiber(k, &basis, params, WallSet::BOTH, None).unwrap();
    (0..5).map(|n| fiber.eigenvalue(n)).collect()
}

#[test]
fn refinement_is_second_order() {
    let params = ModelParams::new(2.0, 8.0, 0.0);
    let half = Basis::auto(&params, 6.0, Default::default()).unwrap().x_max();
    // an orbit centre near the left wall so both terms enter
    let k = -params.b_field * 3.5;
    let levels: Vec<Vec<f64>> = [256usize, 512, 1024]
        .iter()
        .map(|&intervals| five_lowest(&params, half, intervals + 1, k))
        .collect();
    for n in 0..5 {
        let coarse = (levels[0][n] - levels[1][n]).abs();
        let fine = (levels[1][n] - levels[2][n]).abs();
        let order = (coarse / fine).log2();
        assert!((order - 2.0).abs() <= 0.2, "level {n}: order {order}");
    }
}

fn band_instance(flux: f64) -> (AssembledOperator, EnergyWindow) {
    let params = ModelParams::new(2.0, 8.0, 0.3).with_flux(flux);
    let window = EnergyWindow::band(&params).unwrap();
    let basis = Basis::auto(&params, window.hi, Default::default()).unwrap();
    let lattice = build_lattice(LatticeVariant::BandExperiment, 8.0).unwrap();
    let omega = sample_realization(11, &lattice, params.v0);
    (assemble_full(&omega, &basis, &params).unwrap(), window)
}

#[test]
fn flux_is_periodic_in_whole_quanta() {
    let opts = SolverOptions::default();
    for phi in [0.0, 0.2] {
        let (a, window) = band_instance(phi);
        let (b, _) = band_instance(phi + 1.0);
        let ea = eigs_in_window(&a, &window, &opts).unwrap().energies();
        let eb = eigs_in_window(&b, &window, &opts).unwrap().energies();
        assert_eq!(ea.len(), eb.len(), "flux {phi}");
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() <= 1e-8, "flux {phi}: {x} vs {y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fiber_reflects_with_walls_exchanged(k in -20.0f64..20.0, b in 0.5f64..4.0, length in 6.0f64..16.0) {
        let params = ModelParams::new(b, length, 0.0);
        let basis = Basis::auto(&params, 3.0 * b, Default::default()).unwrap();
        let left = build_fiber(k, &basis, &params, WallSet::LEFT, None).unwrap();
        let right = build_fiber(-k, &basis, &params, WallSet::RIGHT, None).unwrap();
        let n = basis.n_x();
        for i in 0..n {
            let (p, q) = (left.diag[i], right.diag[n - 1 - i]);
            prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0), "site {}: {} vs {}", i, p, q);
        }
        prop_assert_eq!(&left.off, &right.off);
        for lvl in 0..3 {
            let (p, q) = (left.eigenvalue(lvl), right.eigenvalue(lvl));
            prop_assert!((p - q).abs() <= 1e-10 * p.max(1.0));
        }
    }
}

#[test]
fn disorder_moves_each_level_by_at_most_v0() {
    let params = ModelParams::new(2.0, 8.0, 0.3);
    let basis = Basis::new(6.2, 129, 8, 8.0, 2.3).unwrap();
    let lattice = build_lattice(LatticeVariant::GapExperiment, 8.0).unwrap();
    let clean = AssembledOperator::build(
        &basis,
        &params,
        WallSet::BOTH,
        Some(&DisorderRealization::zero(&lattice, params.v0)),
        "clean",
    )
    .unwrap();
    let clean: Vec<f64> = dense_oracle(&clean).unwrap().into_iter().map(|(e, _)| e).collect();
    for seed in [1u64, 2] {
        let omega = sample_realization(seed, &lattice, params.v0);
        let dirty = assemble_full(&omega, &basis, &params).unwrap();
        let dirty: Vec<f64> = dense_oracle(&dirty).unwrap().into_iter().map(|(e, _)| e).collect();
        let worst = clean
            .iter()
            .zip(&dirty)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= params.v0 * (1.0 + 1e-12), "seed {seed}: {worst}");
        assert!(worst > 0.0);
    }
}
