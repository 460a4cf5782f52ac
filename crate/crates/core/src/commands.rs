//! Subcommand implementations. Each returns the files to write (name and
//! bytes) plus the verdict; the binary decides where they go.

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Command, DataConfig, FieldSource, ForcingConfig, RunConfig};
use crate::error::{Error, Result};
use crate::estimates::{
    self, BernsteinItem, BernsteinParams, EmbeddingParams, EstimateId, EstimateReport, Phase, ProductParams, Protocol,
    ShiftedProductParams,
};
use crate::exponents::{
    check_log_holder, ExponentField, ExponentRecipe, LogHolderOptions, LogHolderReport, Regularity,
};
use crate::heat::HeatIndices;
use crate::littlewood_paley::{build_partition, DyadicDecomposition, DyadicPartition};
use crate::norms::{block_norms, variable_fourier_besov_norm, Integrability};
use crate::random::{mode_pair, random_field, random_solenoidal, Support};
use crate::report::{csv_report, json_report, CsvCell, Header};
use crate::solvers::{smallness_threshold, RunRecord, SmallnessReport, Solver, SolverConfig, System};
use crate::spectral::snapshot::radial_spectrum;
use crate::spectral::{forward_transform, GridSpec, Multiplier, Snapshot, SpectralField};
use crate::timeseries::TimeSeriesField;

/// What a run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub passed: bool,
    pub diverged: bool,
    /// One line for the terminal.
    pub summary: String,
}

impl Outcome {
    fn file(&mut self, name: String, text: String) {
        self.files.push((name, text.into_bytes()));
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Norm => run_norm(cfg),
        Command::Decompose => run_decompose(cfg),
        Command::Verify => run_verify(cfg),
        Command::Heat => run_heat(cfg),
        Command::SolveNs | Command::SolveKs => run_solve(cfg),
        Command::Sweep => run_sweep(cfg),
    }
}

fn grid_of(cfg: &RunConfig) -> Result<GridSpec> {
    GridSpec::new(cfg.grid.n, cfg.grid.dims)
}

fn partition(cfg: &RunConfig) -> Result<DyadicPartition> {
    build_partition(grid_of(cfg)?)
}

fn header(cfg: &RunConfig, part: &DyadicPartition) -> Header {
    Header::new(cfg.command.as_str(), &cfg.hash(), part)
}

fn protocol(cfg: &RunConfig, calibration: usize, holdout: usize, safety_factor: f64) -> Protocol {
    Protocol {
        base_seed: cfg.seed,
        calibration,
        holdout,
        safety_factor,
    }
}

fn exponent(cfg: &RunConfig, name: &str, grid: GridSpec, default: f64) -> Result<ExponentField> {
    let recipe = cfg
        .exponent(name)
        .cloned()
        .unwrap_or(ExponentRecipe::Constant { p: default });
    ExponentField::from_recipe(recipe, grid)
}

fn integrability(p: ExponentField) -> Integrability {
    if p.is_constant() {
        Integrability::Constant(p.p_minus())
    } else {
        Integrability::Variable(p)
    }
}

/// Materialize a field source. `solenoidal` applies to random fields only.
pub fn load_field(
    source: &FieldSource,
    grid: GridSpec,
    components: usize,
    part: &DyadicPartition,
    solenoidal: bool,
) -> Result<SpectralField> {
    match source {
        FieldSource::Random { lo, hi, spectrum, seed } => {
            let (band_lo, band_hi) = part.covered_band();
            let support = Support::new(lo.unwrap_or(band_lo), hi.unwrap_or(band_hi));
            if solenoidal && components == 3 {
                random_solenoidal(grid, support, *spectrum, *seed)
            } else {
                Ok(random_field(grid, components, support, *spectrum, *seed))
            }
        }
        FieldSource::Modes { modes } => {
            let mut out = SpectralField::zeros(grid, components);
            for m in modes {
                if m.amplitude.len() != components {
                    return Err(Error::ComponentMismatch {
                        expected: components,
                        found: m.amplitude.len(),
                    });
                }
                if grid.index_of(m.k).is_none() || grid.index_of([-m.k[0], -m.k[1], -m.k[2]]).is_none() {
                    return Err(Error::BandOverflow(format!(
                        "mode {:?} lies outside the n = {} lattice",
                        m.k, grid.n
                    )));
                }
                let amp: Vec<Complex64> = m.amplitude.iter().map(|&a| a.into()).collect();
                out.axpy(1.0, &mode_pair(grid, components, m.k, &amp))?;
            }
            Ok(out)
        }
        FieldSource::Snapshot { path } => {
            let snap = Snapshot::load(path)?;
            if snap.grid() != grid {
                return Err(Error::GridMismatch(format!(
                    "snapshot {} is on n = {}, dims = {}; config asks for n = {}, dims = {}",
                    path.display(),
                    snap.grid().n,
                    snap.grid().dims,
                    grid.n,
                    grid.dims
                )));
            }
            Ok(match snap {
                Snapshot::Spectral(g) => g,
                Snapshot::Physical(f) => forward_transform(&f),
            })
        }
    }
}

/// Components requested by a data section: the mode amplitude length or
/// the snapshot's, else `default`.
fn data_components(data: &DataConfig, default: usize) -> usize {
    match &data.source {
        FieldSource::Modes { modes } => modes.first().map(|m| m.amplitude.len()).unwrap_or(default),
        FieldSource::Snapshot { path } => Snapshot::load(path).map(|s| s.components()).unwrap_or(default),
        FieldSource::Random { .. } => default,
    }
}

fn data_field(cfg: &RunConfig, part: &DyadicPartition, components: usize, solenoidal: bool) -> Result<SpectralField> {
    let f = load_field(&cfg.data.source, part.grid, components, part, solenoidal)?;
    Ok(f.scaled(cfg.data.amplitude))
}

#[derive(Serialize)]
struct NormRecord {
    value: f64,
    method: crate::norms::Method,
    tolerance: f64,
    j_range: Option<(i32, i32)>,
    exponent_descriptors: Vec<String>,
    measure: &'static str,
    components: usize,
    log_holder: Option<LogHolderReport>,
}

fn run_norm(cfg: &RunConfig) -> Result<Outcome> {
    let part = partition(cfg)?;
    let comps = data_components(&cfg.data, 1);
    let f = data_field(cfg, &part, comps, false)?;
    let p = exponent(cfg, "p", part.grid, 2.0)?;
    let log_holder =
        (!p.is_constant()).then(|| check_log_holder(&p, cfg.norm.log_holder_budget, LogHolderOptions::default()));
    let nv = variable_fourier_besov_norm(
        &f,
        &Regularity::Constant(cfg.norm.s),
        &integrability(p),
        &Integrability::Constant(cfg.norm.r),
        &part,
    )?;
    let record = NormRecord {
        value: nv.value,
        method: nv.method,
        tolerance: nv.tolerance,
        j_range: nv.metadata.j_range,
        exponent_descriptors: nv.metadata.exponents.clone(),
        measure: nv.metadata.measure,
        components: comps,
        log_holder,
    };
    let mut out = Outcome {
        files: Vec::new(),
        passed: nv.value.is_finite(),
        diverged: false,
        summary: format!("norm = {:.6e} ({})", nv.value, nv.metadata.exponents.join(", ")),
    };
    out.file(
        format!("{}.json", cfg.output_prefix),
        json_report(&header(cfg, &part), &record)?,
    );
    Ok(out)
}

fn run_decompose(cfg: &RunConfig) -> Result<Outcome> {
    let part = partition(cfg)?;
    let comps = data_components(&cfg.data, 1);
    let f = data_field(cfg, &part, comps, false)?;
    let p = exponent(cfg, "p", part.grid, 2.0)?;
    let s = Regularity::Constant(cfg.norm.s);
    let blocks = block_norms(&f, &s, &integrability(p.clone()), &part)?;
    let unweighted = block_norms(&f, &Regularity::Constant(0.0), &integrability(p), &part)?;
    let dec = DyadicDecomposition::new(&f, &part)?;
    let band = part.restrict_to_band(&f);
    let err = dec.reconstruct().sub(&band)?.l2_norm();
    let rel = if band.l2_norm() > 0.0 {
        err / band.l2_norm()
    } else {
        err
    };
    let h = header(cfg, &part);
    let column = format!("2^(j*{})*block_norm", cfg.norm.s);
    let rows = blocks
        .iter()
        .zip(&unweighted)
        .map(|(&(j, w), &(_, u))| vec![CsvCell::from(j), w.into(), u.into()]);
    let mut out = Outcome {
        files: Vec::new(),
        passed: rel <= 1e-12,
        diverged: false,
        summary: format!("{} blocks, band reconstruction error {rel:.3e}", blocks.len()),
    };
    out.file(
        format!("{}_blocks.csv", cfg.output_prefix),
        csv_report(&h, &["j", &column, "block_norm"], rows),
    );
    let spectrum = radial_spectrum(&f)
        .into_iter()
        .map(|(k, e, m)| vec![CsvCell::from(k), e.into(), m.into()]);
    out.file(
        format!("{}_spectrum.csv", cfg.output_prefix),
        csv_report(&h, &["shell", "energy", "modes"], spectrum),
    );
    Ok(out)
}

fn estimate_outcome(cfg: &RunConfig, part: &DyadicPartition, report: EstimateReport) -> Result<Outcome> {
    let h = header(cfg, part);
    let rows = report.trials.iter().map(|t| {
        let phase = match t.phase {
            Phase::Calibration => "calibration",
            Phase::Holdout => "holdout",
        };
        vec![
            CsvCell::from(t.index),
            CsvCell::Text(t.seed.to_string()),
            phase.into(),
            t.lhs.into(),
            t.rhs.into(),
            t.ratio.into(),
        ]
    });
    let mut out = Outcome {
        files: Vec::new(),
        passed: report.passes,
        diverged: false,
        summary: report.summary(),
    };
    out.file(format!("{}.json", cfg.output_prefix), json_report(&h, &report)?);
    out.file(
        format!("{}_trials.csv", cfg.output_prefix),
        csv_report(&h, &["trial", "seed", "phase", "lhs", "rhs", "ratio"], rows),
    );
    Ok(out)
}

fn symbol(name: &str) -> Result<Multiplier> {
    match name {
        "riesz" => Ok(Multiplier::Riesz(0)),
        "inverse-laplacian" => Ok(Multiplier::InverseLaplacian),
        "laplacian" => Ok(Multiplier::Laplacian),
        other => Err(Error::Config(vec![format!("estimate.symbol: unknown '{other}'")])),
    }
}

fn run_verify(cfg: &RunConfig) -> Result<Outcome> {
    let est = cfg
        .estimate
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["verify needs an [estimate] section or --estimate".into()]))?;
    let part = partition(cfg)?;
    let grid = part.grid;
    let prot = protocol(cfg, est.calibration, est.holdout, est.safety_factor);
    let v = |k: &str| est.params[k];
    let report = match est.id {
        EstimateId::BernsteinBall | EstimateId::BernsteinAnnulus | EstimateId::BernsteinSymbol => {
            let item = match est.id {
                EstimateId::BernsteinBall => BernsteinItem::Ball,
                EstimateId::BernsteinAnnulus => BernsteinItem::Annulus,
                _ => BernsteinItem::Symbol(symbol(&est.symbol)?),
            };
            let k = est.params.get("k").copied().unwrap_or(0.0);
            if k < 0.0 || k.fract() != 0.0 {
                return Err(Error::Config(vec![format!(
                    "estimate.k: must be a nonnegative integer (got {k})"
                )]));
            }
            let bp = BernsteinParams {
                item,
                k: k as u32,
                p: v("p"),
                q: v("q"),
                lambda: v("lambda"),
            };
            estimates::verify_bernstein(grid, bp, prot)?
        }
        EstimateId::Embedding => {
            let e = EmbeddingParams {
                s: v("s"),
                p1: v("p1"),
                p2: v("p2"),
                r1: v("r1"),
                r2: v("r2"),
            };
            estimates::verify_embedding(&part, e, prot)?
        }
        EstimateId::ProductSameScale => {
            let pp = ProductParams {
                s: v("s"),
                p: v("p"),
                p1: v("p1"),
                p2: v("p2"),
            };
            estimates::verify_product(&part, pp, prot)?
        }
        EstimateId::ProductShifted => {
            let sp = ShiftedProductParams {
                s1: v("s1"),
                s2: v("s2"),
                p1: v("p1"),
                p2: v("p2"),
            };
            estimates::verify_shifted_product(&part, sp, prot)?
        }
        EstimateId::Holder => {
            let (d1, d2) = estimates::holder_exponents(grid)?;
            let p1 = match cfg.exponent("p1") {
                Some(r) => ExponentField::from_recipe(r.clone(), grid)?,
                None => d1,
            };
            let p2 = match cfg.exponent("p2") {
                Some(r) => ExponentField::from_recipe(r.clone(), grid)?,
                None => d2,
            };
            estimates::verify_holder(grid, &p1, &p2, prot)?
        }
        EstimateId::Heat => return run_heat(cfg),
    };
    estimate_outcome(cfg, &part, report)
}

fn run_heat(cfg: &RunConfig) -> Result<Outcome> {
    let part = partition(cfg)?;
    let h = &cfg.heat;
    let idx = HeatIndices {
        s: Regularity::Constant(h.s),
        p: integrability(exponent(cfg, "p", part.grid, 2.0)?),
        r: h.r,
        rho: h.rho,
        rho1: h.rho1,
    };
    let times = cfg.time.build()?;
    let report = estimates::verify_heat(
        &part,
        &idx,
        &times,
        h.forcing,
        protocol(cfg, h.calibration, h.holdout, h.safety_factor),
    )?;
    estimate_outcome(cfg, &part, report)
}

pub fn solver_config(cfg: &RunConfig, system: System) -> Result<SolverConfig> {
    let s = &cfg.solver;
    let mut c = SolverConfig::new(system, cfg.grid.n);
    c.times = cfg.time.build()?;
    if let Some(p) = cfg.exponent("p") {
        c.p = p.clone();
    }
    c.rho = s.rho;
    c.dealias = s.dealias;
    c.eta = s.eta;
    c.c_fit = s.c_fit;
    c.max_iterations = s.max_iterations;
    c.contraction_tolerance = s.contraction_tolerance;
    c.calibration_trials = s.calibration_trials;
    c.seed = cfg.seed;
    c.validate()?;
    Ok(c)
}

fn forcing_series(f: &ForcingConfig, solver: &Solver) -> Result<TimeSeriesField> {
    let comps = solver.config.system.components();
    let base = load_field(&f.source, solver.grid, comps, solver.part(), false)?;
    let times = solver.times().clone();
    let snaps = times
        .times()
        .iter()
        .map(|&t| base.scaled(f.amplitude * f.envelope.at(t)))
        .collect();
    TimeSeriesField::new(times, snaps, Default::default())
}

#[derive(Serialize)]
struct DivergedRecord<'a> {
    system: System,
    config: &'a SolverConfig,
    diverged: bool,
    iterate_norms: &'a [f64],
    differences: &'a [f64],
    contraction_rates: &'a [f64],
}

fn run_solve(cfg: &RunConfig) -> Result<Outcome> {
    let system = if cfg.command == Command::SolveNs {
        System::NavierStokes
    } else {
        System::KellerSegel
    };
    let solver = Solver::new(solver_config(cfg, system)?)?;
    let part = solver.part().clone();
    let h = header(cfg, &part);
    let u0 = data_field(cfg, &part, system.components(), true)?;
    let forcing = cfg.forcing.as_ref().map(|f| forcing_series(f, &solver)).transpose()?;
    let (_, removed) = solver.prepare_data(&u0)?;
    let mut y = solver.free_part(&u0, forcing.as_ref())?;
    let c_fit = solver.c_fit()?;
    if let Some(frac) = cfg.data.eta_fraction {
        let norm = solver.space.norm(&y)?;
        if norm > 0.0 {
            y = y.scaled(frac * solver.eta(c_fit) / norm);
        }
    }
    let prefix = &cfg.output_prefix;
    let run = match solver.solve_free(&y, c_fit, removed) {
        Ok(run) => run,
        Err(Error::Divergence(trace)) => {
            let rec = DivergedRecord {
                system,
                config: &solver.config,
                diverged: true,
                iterate_norms: &trace.iterate_norms,
                differences: &trace.differences,
                contraction_rates: &trace.rates,
            };
            let mut out = Outcome {
                files: Vec::new(),
                passed: false,
                diverged: true,
                summary: format!(
                    "{}: Picard iteration diverged after {} steps",
                    system.name(),
                    trace.differences.len()
                ),
            };
            out.file(format!("{prefix}.json"), json_report(&h, &rec)?);
            out.file(
                format!("{prefix}_iterates.csv"),
                trace_csv(&h, &trace.iterate_norms, &trace.rates, None),
            );
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let record: &RunRecord = &run.record;
    let mut out = Outcome {
        files: Vec::new(),
        passed: record.passes,
        diverged: false,
        summary: format!(
            "{}: {} after {} iterations, final norm {:.6e}, eta {:.6e}, {}",
            system.name(),
            record.regime,
            record.differences.len(),
            record.final_norm,
            record.eta,
            if record.passes { "pass" } else { "FAIL" }
        ),
    };
    out.file(format!("{prefix}.json"), json_report(&h, record)?);
    out.file(
        format!("{prefix}_iterates.csv"),
        trace_csv(
            &h,
            &record.iterate_norms,
            &record.contraction_rates,
            Some(&record.component_names),
        ),
    );
    let times = solver.times().times();
    for &t in &cfg.solver.snapshot_times {
        let i = times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let snap = Snapshot::Spectral(run.solution.snapshots[i].clone());
        out.files.push((format!("{prefix}_t{i:04}.fblb"), snap.encode()));
    }
    Ok(out)
}

/// Columns: iteration, ‖u_k‖, contraction rate (empty for k = 0). The
/// component norms are only known for the final iterate, so they go in
/// the JSON; the CSV names them in its header for reference.
fn trace_csv(h: &Header, norms: &[f64], rates: &[f64], names: Option<&[String; 3]>) -> String {
    let mut h = h.clone();
    if let Some(n) = names {
        h.disclaimer = format!("{}; norm = max({}, {}, {})", h.disclaimer, n[0], n[1], n[2]);
    }
    let rows = norms.iter().enumerate().map(|(k, &nk)| {
        let rate = if k >= 1 { rates.get(k - 1).copied() } else { None };
        vec![
            CsvCell::from(k),
            nk.into(),
            rate.map(CsvCell::from).unwrap_or(CsvCell::Text(String::new())),
        ]
    });
    csv_report(&h, &["iteration", "norm", "rate"], rows)
}

#[derive(Serialize)]
struct SweepRecord {
    system: System,
    reports: Vec<SmallnessReport>,
    /// max/min of ε across seeds.
    epsilon_spread: f64,
}

fn run_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let base = solver_config(cfg, cfg.sweep.system)?;
    let part = build_partition(GridSpec::cube(base.n)?)?;
    let h = header(cfg, &part);
    let mut reports = Vec::new();
    for &seed in &cfg.sweep.seeds {
        let mut c = base.clone();
        c.seed = seed;
        reports.push(smallness_threshold(&c, cfg.sweep.trials)?);
    }
    let eps: Vec<f64> = reports.iter().map(|r| r.epsilon).collect();
    let max = eps.iter().cloned().fold(0.0, f64::max);
    let min = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = max / min;
    let rows: Vec<Vec<CsvCell>> = reports
        .iter()
        .map(|r| {
            vec![
                CsvCell::Text(r.seed.to_string()),
                r.trials.into(),
                r.linear.constant.into(),
                r.bilinear.constant.into(),
                r.epsilon.into(),
            ]
        })
        .collect();
    let record = SweepRecord {
        system: cfg.sweep.system,
        reports,
        epsilon_spread: spread,
    };
    let mut out = Outcome {
        files: Vec::new(),
        passed: eps.iter().all(|e| e.is_finite() && *e > 0.0),
        diverged: false,
        summary: format!(
            "{}: epsilon = {:.6e} (spread across seeds {spread:.3})",
            cfg.sweep.system.name(),
            eps[0]
        ),
    };
    out.file(format!("{}.json", cfg.output_prefix), json_report(&h, &record)?);
    out.file(
        format!("{}.csv", cfg.output_prefix),
        csv_report(&h, &["seed", "trials", "c_linear", "c_bilinear", "epsilon"], rows),
    );
    Ok(out)
}

/// Exit status for an outcome or error.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.diverged => 3,
        Ok(o) if o.passed => 0,
        Ok(_) => 1,
        Err(Error::Divergence(_)) => 3,
        Err(_) => 2,
    }
}
