use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{RunConfig, RunPlan, Subcommand};
use super::manifest::{discretization, lattice_counts, Derived, RunManifest};
use super::tables::{self, Cell};
use super::vectors::write_vectors;
use crate::assembly::{assemble_full, WallSet};
use crate::error::{Error, Result};
use crate::experiments::{
    cap_floor, fit_decay, run_pool, theorem1_run, theorem2_run, DecayModel, ExperimentReport, FailureRecord,
    FluxScan,
};
use crate::model::{build_lattice, sample_realization, LatticeVariant, WallSide};
use crate::observables::{current, diagnose, x_centroid_and_spread};
use crate::spectral::{dispersion_branches, eigs_in_window, fiber_window_states, StateFilter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Invariant(_) => EXIT_CONFIG,
        Error::FailureBudget { .. } => EXIT_BUDGET,
        _ => EXIT_FAILURE,
    }
}

/// Machine-readable error record written next to a failed run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    pub path: Option<String>,
    pub exit_code: i32,
}

impl ErrorRecord {
    pub fn from_error(e: &Error) -> Self {
        let kind = match e {
            Error::Invariant(_) => "invariant",
            Error::Config { .. } => "config",
            Error::Convergence { .. } => "convergence",
            Error::DimensionGuard { .. } => "dimension_guard",
            Error::FailureBudget { .. } => "failure_budget",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::Linalg(_) => "linalg",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        };
        Self {
            kind,
            message: e.to_string(),
            path: match e {
                Error::Config { path, .. } => Some(path.clone()),
                _ => None,
            },
            exit_code: exit_code(e),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"message\":{:?}}}", self.message))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub seeds_run: usize,
    pub failures: usize,
    pub files: Vec<PathBuf>,
    /// Ensemble reports in L order; empty for other subcommands.
    pub reports: Vec<ExperimentReport>,
}

/// Runs `sub` with `config` and writes its manifest and tables under `out`.
/// A run that exceeds its failure budget still writes everything before
/// returning [`Error::FailureBudget`].
pub fn run_subcommand(sub: Subcommand, config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out)?;
    let outcome = match sub {
        Subcommand::SelfTest => self_test(out)?,
        Subcommand::Fit => run_fit(&config.resolved(sub)?, out)?,
        Subcommand::FluxScan => run_flux_scan(&config.resolved(sub)?, out)?,
        _ => {
            let resolved = config.resolved(sub)?;
            if resolved.is_sweep() {
                run_sweep(sub, &resolved, out)?
            } else {
                let length = resolved.lengths()[0];
                let (outcome, _) = run_single(sub, &resolved, length, out)?;
                outcome
            }
        }
    };
    Ok(outcome)
}

fn check_budget(failed: usize, total: usize, budget: f64) -> Result<()> {
    if failed as f64 > budget * total as f64 {
        return Err(Error::FailureBudget { failed, total, budget });
    }
    Ok(())
}

fn lattice_variant(kind: Subcommand) -> LatticeVariant {
    match kind {
        Subcommand::Theorem2 => LatticeVariant::GapExperiment,
        _ => LatticeVariant::BandExperiment,
    }
}

fn base_manifest(sub: Subcommand, config: &RunConfig, plan: &RunPlan, scan: Option<&FluxScan>, flux_given: bool) -> Result<RunManifest> {
    let s = &plan.setup;
    let mut m = RunManifest::new(sub, config.clone());
    m.discretization = Some(discretization(&s.basis, s.solver));
    let mut variants = vec![lattice_variant(plan.kind)];
    if plan.kind == Subcommand::Theorem2 {
        variants.extend([LatticeVariant::EdgeStripLeft, LatticeVariant::EdgeStripRight]);
    }
    m.derived = Some(Derived {
        window: s.window,
        flux: s.params.flux,
        flux_source: if flux_given {
            "config"
        } else if scan.is_some() {
            "flux-scan"
        } else {
            "asymmetric-walls"
        }
        .to_string(),
        thresholds: s.thresholds,
        lattices: lattice_counts(s.params.length, &variants)?,
    });
    Ok(m)
}

/// One L. Returns the outcome and, for ensemble runs, the report.
fn run_single(sub: Subcommand, resolved: &RunConfig, length: f64, out: &Path) -> Result<(RunOutcome, Option<ExperimentReport>)> {
    std::fs::create_dir_all(out)?;
    let flux_given = resolved.flux.is_some();
    let (config, scan) = resolved.for_length(sub, length)?;
    let plan = config.plan(sub)?;
    let mut echoed = config.clone();
    if !flux_given {
        // replaying the manifest repeats the scan and its table
        echoed.flux = None;
    }
    let mut manifest = base_manifest(sub, &echoed, &plan, scan.as_ref(), flux_given)?;
    let mut outcome = RunOutcome::default();
    if let Some(s) = &scan {
        write_flux_rows(out, std::slice::from_ref(s))?;
        outcome.files.push(out.join(tables::FLUX_SCAN.file));
    }
    let mut report = None;
    match sub {
        Subcommand::Dispersion => {
            write_dispersion(&plan, &config, out, &mut outcome)?;
        }
        Subcommand::Spectrum | Subcommand::Classify => {
            write_spectra(sub, &plan, &config, out, &mut outcome)?;
        }
        Subcommand::Theorem1 | Subcommand::Theorem2 => {
            let r = if sub == Subcommand::Theorem1 {
                theorem1_run(&plan.setup, &plan.seeds)?
            } else {
                theorem2_run(&plan.setup, &plan.seeds)?
            };
            write_report(&r, out, &mut outcome)?;
            manifest.notes.extend(r.notes.iter().cloned());
            outcome.reports.push(r.clone());
            report = Some(r);
        }
        _ => unreachable!("handled by run_subcommand"),
    }
    manifest.write(out)?;
    check_budget(outcome.failures, plan.seeds.len(), plan.failure_budget)?;
    Ok((outcome, report))
}

fn run_sweep(sub: Subcommand, resolved: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let mut manifest = RunManifest::new(sub, resolved.clone());
    let mut total = RunOutcome::default();
    let mut points = Vec::new();
    let mut budget_error = None;
    for length in resolved.lengths() {
        let name = format!("L{length}");
        let dir = out.join(&name);
        match run_single(sub, resolved, length, &dir) {
            Ok((o, r)) => {
                total.seeds_run += o.seeds_run;
                total.failures += o.failures;
                total.files.extend(o.files);
                total.reports.extend(o.reports);
                if let Some(r) = r {
                    points.push((length, r.aggregate.pooled_median_shift));
                }
            }
            Err(e @ Error::FailureBudget { .. }) => budget_error = Some(e),
            Err(e) => return Err(e),
        }
        manifest.children.push(name);
    }
    if let Some(model) = default_model(sub).filter(|_| !points.is_empty()) {
        let floor = cap_floor(resolved.tol.unwrap_or(crate::spectral::SolverOptions::default().tol));
        write_fit(out, &points, model, floor, &mut total)?;
    }
    manifest.write(out)?;
    match budget_error {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

fn default_model(kind: Subcommand) -> Option<DecayModel> {
    match kind {
        Subcommand::Theorem1 => Some(DecayModel::LogSq),
        Subcommand::Theorem2 => Some(DecayModel::Sqrt),
        _ => None,
    }
}

fn write_report(r: &ExperimentReport, out: &Path, outcome: &mut RunOutcome) -> Result<()> {
    tables::write_table(
        out,
        &tables::STATES,
        r.states.iter().map(|s| {
            vec![
                s.seed.into(),
                s.energy.into(),
                s.set.as_str().into(),
                s.reference_energy.into(),
                s.shift.into(),
                s.current.into(),
                s.reference_current.into(),
                s.x_centroid.into(),
                s.x_spread.into(),
                s.min_slice.into(),
                s.y_bar.into(),
                s.dy_slice.into(),
                s.baseline.into(),
                s.slice_ratio().into(),
                s.label.as_str().into(),
                s.residual.into(),
            ]
        }),
    )?;
    tables::write_table(
        out,
        &tables::REALIZATIONS,
        r.records.iter().map(|x| {
            vec![
                x.seed.into(),
                x.window_count.into(),
                x.n_left.into(),
                x.n_right.into(),
                x.n_bulk.into(),
                x.n_reference.into(),
                x.n_unmatched_reference.into(),
                x.cap.into(),
                x.median_shift.into(),
                x.max_shift.into(),
                x.min_edge_current.into(),
                x.max_bulk_current.into(),
                x.dist_bulk_edge.into(),
                x.bulk_reference_count.into(),
                x.bulk_matched.into(),
                x.bulk_match_max_shift.into(),
                x.max_current_deviation.into(),
                x.max_slice_ratio.into(),
                x.partition_ok().into(),
                x.currents_ok.into(),
                x.slice_ok.into(),
                x.warnings.into(),
            ]
        }),
    )?;
    let a = &r.aggregate;
    tables::write_table(
        out,
        &tables::AGGREGATE,
        [vec![
            r.params.length.into(),
            a.seeds_run.into(),
            a.seeds_failed.into(),
            a.pooled_median_shift.into(),
            a.max_shift_q10.into(),
            a.max_shift_q50.into(),
            a.max_shift_q90.into(),
            a.fraction_partition_ok.into(),
            a.fraction_currents_ok.into(),
            a.fraction_exhaustive.into(),
            a.fraction_slice_ok.into(),
            a.max_bulk_current.into(),
            a.min_edge_current.into(),
            a.mean_window_count.into(),
            a.total_bulk_states.into(),
        ]],
    )?;
    write_failures(out, &r.failures)?;
    for s in [&tables::STATES, &tables::REALIZATIONS, &tables::AGGREGATE, &tables::FAILURES] {
        outcome.files.push(out.join(s.file));
    }
    outcome.seeds_run += r.records.len();
    outcome.failures += r.failures.len();
    Ok(())
}

fn write_failures(out: &Path, failures: &[FailureRecord]) -> Result<()> {
    tables::write_table(
        out,
        &tables::FAILURES,
        failures.iter().map(|f| vec![f.seed.into(), f.message.clone().into()]),
    )
}

fn write_flux_rows(out: &Path, scans: &[FluxScan]) -> Result<()> {
    tables::write_table(
        out,
        &tables::FLUX_SCAN,
        scans.iter().flat_map(|s| {
            s.rows.iter().map(move |r| {
                vec![
                    s.length.into(),
                    r.flux.into(),
                    r.n_left.into(),
                    r.n_right.into(),
                    r.min_spacing.into(),
                    r.scaled.into(),
                    (s.best_flux == Some(r.flux)).into(),
                ]
            })
        }),
    )
}

fn run_flux_scan(resolved: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let mut scans = Vec::new();
    let mut manifest = RunManifest::new(Subcommand::FluxScan, resolved.clone());
    for length in resolved.lengths() {
        let mut c = resolved.clone();
        // the scan does not read the flux; pin it so no second scan runs
        c.flux.get_or_insert(0.0);
        let (c, _) = c.for_length(Subcommand::FluxScan, length)?;
        let plan = c.plan(Subcommand::FluxScan)?;
        let s = &plan.setup;
        scans.push(crate::experiments::hypothesis1_flux_scan(
            &s.params,
            &s.basis,
            &s.window,
            c.flux_grid.as_deref().unwrap_or(&[]),
        )?);
        manifest.notes.push(format!(
            "L={length}: window {}, basis n_x={} modes={}",
            s.window,
            s.basis.n_x(),
            s.basis.n_modes()
        ));
    }
    write_flux_rows(out, &scans)?;
    manifest.write(out)?;
    Ok(RunOutcome {
        files: vec![out.join(tables::FLUX_SCAN.file)],
        ..Default::default()
    })
}

fn write_dispersion(plan: &RunPlan, config: &RunConfig, out: &Path, outcome: &mut RunOutcome) -> Result<()> {
    let s = &plan.setup;
    let d = config.dispersion.expect("resolved dispersion options");
    let [k_lo, k_hi] = d.k_range.expect("resolved k range");
    for (side, schema) in [(WallSide::Left, &tables::BRANCHES_LEFT), (WallSide::Right, &tables::BRANCHES_RIGHT)] {
        let range = match side {
            WallSide::Left => (k_lo, k_hi),
            WallSide::Right => (-k_hi, -k_lo),
        };
        let branches = dispersion_branches(side, &s.params, &s.basis, d.n_max, range, d.samples_per_unit)?;
        tables::write_table(
            out,
            schema,
            branches.iter().flat_map(|b| {
                (0..b.k.len()).map(move |j| {
                    vec![
                        b.band.into(),
                        b.k[j].into(),
                        b.energy[j].into(),
                        b.current[j].into(),
                        b.slope[j].into(),
                        b.violations.contains(&j).into(),
                    ]
                })
            }),
        )?;
        outcome.files.push(out.join(schema.file));
    }
    Ok(())
}

struct SeedSpectrum {
    spectrum: Vec<Vec<Cell>>,
    diagnostics: Vec<Vec<Cell>>,
}

fn write_spectra(sub: Subcommand, plan: &RunPlan, config: &RunConfig, out: &Path, outcome: &mut RunOutcome) -> Result<()> {
    let s = &plan.setup;
    let lattice = build_lattice(lattice_variant(plan.kind), s.params.length)?;
    let with_vectors = config.write_vectors.unwrap_or(false);
    let with_operator = config.write_operator.unwrap_or(false);
    let first = plan.seeds.first().copied();
    let results = run_pool(s.workers, &plan.seeds, |seed| -> Result<SeedSpectrum> {
        let omega = sample_realization(seed, &lattice, s.params.v0);
        let op = assemble_full(&omega, &s.basis, &s.params)?;
        let spec = eigs_in_window(&op, &s.window, &s.solver)?;
        let mut rows = SeedSpectrum {
            spectrum: Vec::new(),
            diagnostics: Vec::new(),
        };
        for (i, r) in spec.records.iter().enumerate() {
            let j = current(&r.vector, &op.velocity)?;
            let (xc, _) = x_centroid_and_spread(&r.vector, &s.basis)?;
            rows.spectrum
                .push(vec![seed.into(), i.into(), r.energy.into(), r.residual.into(), j.into(), xc.into()]);
            if sub == Subcommand::Classify {
                let d = diagnose(r, &op, &s.thresholds)?;
                rows.diagnostics.push(vec![
                    seed.into(),
                    d.energy.into(),
                    d.current.into(),
                    d.x_centroid.into(),
                    d.x_spread.into(),
                    d.min_slice.into(),
                    d.y_bar.into(),
                    d.dy_slice.into(),
                    d.baseline.into(),
                    (d.min_slice / d.baseline).into(),
                    d.classification.as_str().into(),
                    r.residual.into(),
                ]);
            }
        }
        if with_vectors {
            let states: Vec<(f64, &[_])> = spec.records.iter().map(|r| (r.energy, r.vector.as_slice())).collect();
            write_vectors(&out.join(format!("vectors_seed{seed}.bin")), &s.basis, &states)?;
        }
        if with_operator && Some(seed) == first {
            tables::write_table(
                out,
                &tables::OPERATOR_COO,
                op.hamiltonian
                    .to_coo()
                    .into_iter()
                    .map(|(r, c, z)| vec![r.into(), c.into(), z.re.into(), z.im.into()]),
            )?;
        }
        Ok(rows)
    })?;
    let mut spectrum = Vec::new();
    let mut diagnostics = Vec::new();
    let mut failures = Vec::new();
    for (&seed, r) in plan.seeds.iter().zip(results) {
        match r {
            Ok(r) => {
                spectrum.extend(r.spectrum);
                diagnostics.extend(r.diagnostics);
                outcome.seeds_run += 1;
            }
            Err(e) => failures.push(FailureRecord {
                seed,
                message: e.to_string(),
            }),
        }
    }
    tables::write_table(out, &tables::SPECTRUM, spectrum)?;
    outcome.files.push(out.join(tables::SPECTRUM.file));
    if sub == Subcommand::Classify {
        tables::write_table(out, &tables::DIAGNOSTICS, diagnostics)?;
        outcome.files.push(out.join(tables::DIAGNOSTICS.file));
    }
    let mut fibers = fiber_window_states(&s.basis, &s.params, WallSet::BOTH, &s.window, StateFilter::All)?;
    fibers.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    tables::write_table(
        out,
        &tables::FIBERS,
        fibers.iter().map(|f| {
            vec![
                (f.mode as i64 - s.basis.j_max).into(),
                f.k.into(),
                f.band.into(),
                f.energy.into(),
                f.current.into(),
                f.x_centroid.into(),
            ]
        }),
    )?;
    outcome.files.push(out.join(tables::FIBERS.file));
    write_failures(out, &failures)?;
    outcome.files.push(out.join(tables::FAILURES.file));
    outcome.failures += failures.len();
    if with_operator {
        outcome.files.push(out.join(tables::OPERATOR_COO.file));
    }
    Ok(())
}

fn write_fit(out: &Path, points: &[(f64, Option<f64>)], model: DecayModel, floor: f64, outcome: &mut RunOutcome) -> Result<()> {
    let valid: Vec<(f64, f64)> = points.iter().filter_map(|&(l, s)| s.map(|s| (l, s))).collect();
    let fit = fit_decay(&valid, model, floor);
    tables::write_table(
        out,
        &tables::FIT_POINTS,
        points.iter().map(|&(l, s)| {
            let censored = s.is_none_or(|s| !(s > floor));
            vec![l.into(), model.abscissa(l).into(), s.into(), censored.into()]
        }),
    )?;
    let row = match &fit {
        Ok(f) => vec![
            model.as_str().into(),
            "ok".into(),
            Some(f.slope).into(),
            Some(f.intercept).into(),
            Some(f.residual).into(),
            f.used.len().into(),
            f.censored.len().into(),
            floor.into(),
            "".into(),
        ],
        Err(e) => {
            let censored = valid.iter().filter(|p| !(p.1 > floor)).count() + (points.len() - valid.len());
            vec![
                model.as_str().into(),
                "degenerate".into(),
                Cell::OptFloat(None),
                Cell::OptFloat(None),
                Cell::OptFloat(None),
                (points.len() - censored).into(),
                censored.into(),
                floor.into(),
                e.to_string().into(),
            ]
        }
    };
    tables::write_table(out, &tables::FIT_SUMMARY, [row])?;
    outcome.files.push(out.join(tables::FIT_POINTS.file));
    outcome.files.push(out.join(tables::FIT_SUMMARY.file));
    Ok(())
}

/// Decay fit over earlier report directories, one per L.
fn run_fit(resolved: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let fit = resolved.fit.clone().expect("checked by resolve");
    let mut points = Vec::new();
    let mut kind = None;
    let mut floor: f64 = 0.0;
    for dir in &fit.inputs {
        let m = RunManifest::read(dir).map_err(|e| Error::Config {
            path: dir.display().to_string(),
            message: format!("not a report directory: {e}"),
        })?;
        if kind.is_some_and(|k| k != m.subcommand) {
            return Err(Error::Config {
                path: "fit.inputs".to_string(),
                message: "inputs mix theorem1 and theorem2 reports".to_string(),
            });
        }
        kind = Some(m.subcommand);
        let tol = m.config.tol.unwrap_or(crate::spectral::SolverOptions::default().tol);
        floor = floor.max(cap_floor(tol));
        let rows = tables::read_table(&dir.join(tables::AGGREGATE.file), &tables::AGGREGATE)?;
        for row in rows {
            let parse = |s: &str| s.parse::<f64>().ok();
            let length = parse(&row[0]).ok_or_else(|| Error::Invariant(format!("{}: bad L", dir.display())))?;
            points.push((length, parse(&row[3])));
        }
    }
    let kind = kind.expect("at least one input");
    let model = match fit.model.or(default_model(kind)) {
        Some(m) => m,
        None => {
            return Err(Error::Config {
                path: "fit.model".to_string(),
                message: format!("no default decay model for {} reports", kind.as_str()),
            })
        }
    };
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut outcome = RunOutcome::default();
    write_fit(out, &points, model, floor, &mut outcome)?;
    let mut manifest = RunManifest::new(Subcommand::Fit, resolved.clone());
    manifest.seeds.clear();
    manifest.notes.push(format!(
        "statistic: pooled median edge shift per L; points at or below {floor:e} are censored"
    ));
    manifest.write(out)?;
    Ok(outcome)
}

fn self_test(dir: &Path) -> Result<RunOutcome> {
    let checked = tables::validate_dir(dir)?;
    Ok(RunOutcome {
        files: checked.into_iter().map(|(p, _)| p).collect(),
        ..Default::default()
    })
}
