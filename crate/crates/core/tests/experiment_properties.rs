use magedge::assembly::{AssembledOperator, WallSet};
use magedge::experiments::theorem2::{edge_hamiltonian, edge_side_states};
use magedge::experiments::{match_spectra, theorem1_run, theorem2_run, ExperimentSetup, StateSet};
use magedge::io::{RunConfig, Subcommand};
use magedge::model::{build_lattice, sample_realization, LatticeVariant, WallSide};
use magedge::observables::{classify_state, Classification};
use magedge::spectral::eigs_in_window;

fn setup(b: f64, length: f64, v0: f64, sub: Subcommand, delta: Option<f64>) -> ExperimentSetup {
    let mut c = RunConfig::minimal(b, length, v0, sub);
    c.delta = delta;
    let (c, _) = c.for_length(sub, length).unwrap();
    c.plan(sub).unwrap().setup
}

#[test]
fn band_run_partitions_and_replays() {
    let s = setup(2.0, 8.0, 0.3, Subcommand::Theorem1, None);
    let seeds = [0u64, 5, 9];
    let report = theorem1_run(&s, &seeds).unwrap();
    assert!(report.failures.is_empty());
    for rec in &report.records {
        let rows: Vec<_> = report.states.iter().filter(|r| r.seed == rec.seed).collect();
        assert_eq!(rows.len(), rec.window_count);
        let count = |set: StateSet| rows.iter().filter(|r| r.set == set).count();
        assert_eq!(count(StateSet::Left), rec.n_left);
        assert_eq!(count(StateSet::Right), rec.n_right);
        assert_eq!(count(StateSet::Bulk), rec.n_bulk);
        assert!(rec.partition_ok());
    }
    for row in &report.states {
        assert_eq!(classify_state(row.current, &s.thresholds), row.label);
    }
    let again = theorem1_run(&s, &seeds).unwrap();
    assert_eq!(report, again);
    let threaded = theorem1_run(&ExperimentSetup { workers: 3, ..s.clone() }, &seeds).unwrap();
    assert_eq!(report, threaded);
}

#[test]
fn gap_references_match_the_strip_restricted_operator() {
    let s = setup(2.0, 9.0, 0.1, Subcommand::Theorem2, Some(0.3));
    let lattice = build_lattice(LatticeVariant::GapExperiment, 9.0).unwrap();
    let omega = sample_realization(2, &lattice, s.params.v0);

    let mut standalone = Vec::new();
    for side in [WallSide::Left, WallSide::Right] {
        let op = edge_hamiltonian(&s, &omega, side).unwrap();
        standalone.extend(edge_side_states(&op, &s.window, side, &s).unwrap().energies());
    }
    standalone.sort_by(f64::total_cmp);

    let strips: Vec<_> = [LatticeVariant::EdgeStripLeft, LatticeVariant::EdgeStripRight]
        .iter()
        .map(|&v| build_lattice(v, 9.0).unwrap())
        .collect();
    let mut both = omega.clone();
    both.couplings = omega
        .iter()
        .map(|(n, m, x)| if strips.iter().any(|l| l.contains((n, m))) { x } else { 0.0 })
        .collect();
    let op = AssembledOperator::build(&s.basis, &s.params, WallSet::BOTH, Some(&both), "strips").unwrap();
    let joint = eigs_in_window(&op, &s.window, &s.solver).unwrap().energies();

    assert!(!joint.is_empty());
    assert_eq!(joint.len(), standalone.len());
    let m = match_spectra(&joint, &standalone, 1e-9);
    assert_eq!(m.pairs.len(), joint.len(), "{joint:?} vs {standalone:?}");
}

#[test]
fn clean_gap_run_is_exact() {
    let s = setup(2.0, 9.0, 0.0, Subcommand::Theorem2, Some(0.3));
    let report = theorem2_run(&s, &[0]).unwrap();
    let rec = &report.records[0];
    assert!(rec.window_count > 0);
    assert_eq!(rec.n_bulk, 0);
    assert!(rec.max_shift.unwrap() <= 1e-10);
    for row in &report.states {
        assert_ne!(row.label, Classification::Ambiguous);
    }
}
