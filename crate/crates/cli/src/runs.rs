//! The five run flows behind the subcommands, with their file outputs.

use crate::config::RunConfig;
use pinwheel_core::error::Error;
use pinwheel_core::functional::EnergyModel;
use pinwheel_core::grid::ComponentField;
use pinwheel_core::io;
use pinwheel_core::partition;
use pinwheel_core::scalar::{self, RadialGrid};
use pinwheel_core::solver::{self, SolveReport};
use pinwheel_core::symmetry::PinwheelConfig;
use pinwheel_core::util::{fnv1a, SplitMix64};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;

#[derive(Debug)]
pub enum RunError {
    NoConvergence(String),
    Failed(String),
}

pub type RunResult = Result<(), RunError>;

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } => RunError::NoConvergence(e.to_string()),
            Error::ContinuationPoint { ref source, .. } => {
                if matches!(**source, Error::NoConvergence { .. }) {
                    RunError::NoConvergence(e.to_string())
                } else {
                    RunError::Failed(e.to_string())
                }
            }
            other => RunError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Failed(e.to_string())
    }
}

/// Collects output files and finishes with a manifest of content hashes.
struct OutDir {
    dir: PathBuf,
    files: Vec<(String, u64)>,
}

impl OutDir {
    fn create(cfg: &RunConfig) -> Result<Self, RunError> {
        let dir = PathBuf::from(&cfg.out_dir);
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn register(&mut self, name: &str) -> Result<(), RunError> {
        let bytes = std::fs::read(self.path(name))?;
        self.files.push((name.to_string(), fnv1a(&bytes)));
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| RunError::Failed(e.to_string()))?;
        std::fs::write(self.path(name), text)?;
        self.register(name)
    }

    fn write_csv(&mut self, name: &str, cols: &[&str], rows: &[Vec<f64>]) -> Result<(), RunError> {
        io::write_csv(&self.path(name), cols, rows).map_err(RunError::from)?;
        self.register(name)
    }

    fn write_field(
        &mut self,
        name: &str,
        field: &ComponentField,
        cfg: &PinwheelConfig,
    ) -> Result<(), RunError> {
        io::write_field_dump(&self.path(name), field, cfg).map_err(RunError::from)?;
        self.register(name)
    }

    fn write_heatmaps(
        &mut self,
        stem: &str,
        field: &ComponentField,
        cfg: &PinwheelConfig,
        size: usize,
    ) -> Result<(), RunError> {
        for comp in 0..cfg.ell {
            let img = io::component_heatmap(field, comp, cfg.ell, size).map_err(RunError::from)?;
            let name = format!("{stem}_u{}.pgm", comp + 1);
            io::write_pgm_u16(&self.path(&name), size, size, &img).map_err(RunError::from)?;
            self.register(&name)?;
        }
        Ok(())
    }

    fn finish(mut self, cfg: &RunConfig) -> Result<(), RunError> {
        self.files.sort();
        let manifest = json!({
            "config": cfg,
            "outputs": self.files
                .iter()
                .map(|(name, hash)| (name.clone(), format!("{hash:016x}")))
                .collect::<std::collections::BTreeMap<_, _>>(),
        });
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Failed(e.to_string()))?;
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn limit_ground_state(cfg: &RunConfig) -> Result<scalar::GroundState, RunError> {
    let grid = RadialGrid::new(cfg.dim, cfg.radial_r_max, cfg.radial_cells)?;
    Ok(scalar::ground_state_radial(&grid, cfg.v_inf, cfg.p)?)
}

fn trace_rows(report: &SolveReport) -> Vec<Vec<f64>> {
    report
        .energy_trace
        .iter()
        .zip(&report.grad_trace)
        .zip(&report.boundary_trace)
        .enumerate()
        .map(|(i, ((e, g), b))| vec![i as f64, *e, *g, *b])
        .collect()
}

fn write_trace(out: &mut OutDir, name: &str, report: &SolveReport) -> Result<(), RunError> {
    out.write_csv(name, &["iter", "energy", "grad_max", "boundary_mass"], &trace_rows(report))
}

/// Best solve over the configured multi-starts (jittered placement radii).
fn solve_multistart(
    cfg: &RunConfig,
    pin: &PinwheelConfig,
    grid: &std::sync::Arc<pinwheel_core::grid::PolarGrid>,
    pot: &pinwheel_core::potential::RadialPotential,
    c_inf: f64,
) -> Result<SolveReport, RunError> {
    let opts = cfg.solve_options(Some(c_inf));
    let base_radius = cfg.r_init.unwrap_or(grid.r_max / 2.0);
    let mut rng = SplitMix64::new(cfg.seed);
    let mut best: Option<SolveReport> = None;
    let mut last_err: Option<Error> = None;
    for start_idx in 0..cfg.starts {
        let radius = if start_idx == 0 {
            base_radius
        } else {
            base_radius * rng.range(0.5, 1.5)
        };
        let guess = solver::initial_guess(grid, pin, pot.v_inf(), radius);
        match solver::minimize(pin, pot, grid, &guess, &opts) {
            Ok(report) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        (report.converged() && !b.converged())
                            || (report.converged() == b.converged() && report.energy < b.energy)
                    }
                };
                if better {
                    best = Some(report);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(report) => Ok(report),
        None => Err(last_err.map(RunError::from).unwrap_or_else(|| {
            RunError::Failed("no start produced a report".into())
        })),
    }
}

/// Ground states of the limit problem (1D radial) and of the invariant
/// scalar problem on the polar grid.
pub fn run_scalar(cfg: &RunConfig) -> RunResult {
    let mut out = OutDir::create(cfg)?;
    let omega = limit_ground_state(cfg)?;
    if cfg.dim == 1 {
        // Radial oracle only: the closed-form check lives in one dimension.
        let rows: Vec<Vec<f64>> =
            omega.radii.iter().zip(&omega.profile).map(|(r, w)| vec![*r, *w]).collect();
        out.write_csv("omega_1d.csv", &["r", "omega"], &rows)?;
        out.write_json(
            "scalar_summary.json",
            &json!({
                "c_inf": omega.energy,
                "c_inf_residual_max": omega.residual_max,
            }),
        )?;
        out.finish(cfg)?;
        return Ok(());
    }
    let grid = cfg.grid().map_err(|e| RunError::Failed(e.to_string()))?;
    let pot = cfg.potential().map_err(|e| RunError::Failed(e.to_string()))?;
    let opts = cfg.solve_options(Some(omega.energy));
    let ring_radius = cfg.r_init.unwrap_or(grid.r_max / 4.0);
    let gn = scalar::ground_state_gn_with_ring(&pot, cfg.n, cfg.p, &grid, &opts, ring_radius)?;

    let rows: Vec<Vec<f64>> =
        omega.radii.iter().zip(&omega.profile).map(|(r, w)| vec![*r, *w]).collect();
    out.write_csv("omega_1d.csv", &["r", "omega"], &rows)?;
    let scalar_cfg = PinwheelConfig::scalar_gn(cfg.n, cfg.dim, cfg.p)?;
    out.write_field("gn_field.bin", &gn.report.field, &scalar_cfg)?;
    out.write_heatmaps("gn", &gn.report.field, &scalar_cfg, cfg.image_size)?;
    write_trace(&mut out, "gn_trace.csv", &gn.report)?;
    let bound_ok = gn.energy <= cfg.n as f64 * omega.energy + 1e-6 * omega.energy;
    out.write_json(
        "scalar_summary.json",
        &json!({
            "c_inf": omega.energy,
            "c_inf_residual_max": omega.residual_max,
            "c_gn": gn.energy,
            "n": cfg.n,
            "bound_c_gn_le_n_c_inf": bound_ok,
            "ring_start_won": gn.ring_start_won,
            "gn_report": gn.report,
        }),
    )?;
    out.finish(cfg)?;
    if !gn.report.converged() {
        return Err(RunError::NoConvergence(format!(
            "scalar solve stopped with {:?}",
            gn.report.status
        )));
    }
    Ok(())
}

/// One coupled solve at the configured β.
pub fn run_solve(cfg: &RunConfig) -> RunResult {
    if cfg.dim == 1 {
        return Err(RunError::Failed("this run needs a planar or cylindrical domain".into()));
    }
    let mut out = OutDir::create(cfg)?;
    let pin = cfg.pinwheel().map_err(|e| RunError::Failed(e.to_string()))?;
    let grid = cfg.grid().map_err(|e| RunError::Failed(e.to_string()))?;
    let pot = cfg.potential().map_err(|e| RunError::Failed(e.to_string()))?;
    let omega = limit_ground_state(cfg)?;
    let report = solve_multistart(cfg, &pin, &grid, &pot, omega.energy)?;

    write_trace(&mut out, "trace.csv", &report)?;
    out.write_field("u1.bin", &report.field, &pin)?;
    out.write_heatmaps("solve", &report.field, &pin, cfg.image_size)?;
    let breakdown = pinwheel_core::functional::energy_j(&report.field, pin, &pot)
        .map_err(RunError::from)?;
    out.write_json(
        "solve_report.json",
        &json!({
            "c_inf": omega.energy,
            "report": report,
            "energy_breakdown": breakdown,
        }),
    )?;
    out.finish(cfg)?;
    if !report.converged() {
        return Err(RunError::NoConvergence(format!("status {:?}", report.status)));
    }
    Ok(())
}

/// Continuation along the β schedule with per-point outputs. Individual
/// failures are recorded and the sweep continues from a fresh start.
pub fn run_sweep_beta(cfg: &RunConfig) -> RunResult {
    if cfg.dim == 1 {
        return Err(RunError::Failed("this run needs a planar or cylindrical domain".into()));
    }
    let mut out = OutDir::create(cfg)?;
    let pin = cfg.pinwheel().map_err(|e| RunError::Failed(e.to_string()))?;
    let grid = cfg.grid().map_err(|e| RunError::Failed(e.to_string()))?;
    let pot = cfg.potential().map_err(|e| RunError::Failed(e.to_string()))?;
    let omega = limit_ground_state(cfg)?;
    let opts = cfg.solve_options(Some(omega.energy));

    let mut reports: Vec<SolveReport> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut warm: Option<ComponentField> = None;
    for &beta in &cfg.beta_schedule {
        let mut point = pin;
        point.beta = beta;
        let model = EnergyModel::new(&grid, point, &pot).map_err(RunError::from)?;
        let start = match &warm {
            Some(prev) => solver::feasible_warm_start(&model, prev).unwrap_or_else(|_| {
                solver::initial_guess(
                    &grid,
                    &point,
                    pot.v_inf(),
                    cfg.r_init.unwrap_or(grid.r_max / 2.0),
                )
            }),
            None => solver::initial_guess(
                &grid,
                &point,
                pot.v_inf(),
                cfg.r_init.unwrap_or(grid.r_max / 2.0),
            ),
        };
        match solver::minimize_model(&model, &start, &opts) {
            Ok(report) => {
                warm = Some(report.field.clone());
                if !report.converged() {
                    failures.push(format!("beta {beta}: {:?}", report.status));
                }
                reports.push(report);
            }
            Err(e) => {
                failures.push(format!("beta {beta}: {e}"));
                warm = None;
            }
        }
    }

    let rows: Vec<Vec<f64>> = reports
        .iter()
        .map(|r| {
            vec![
                r.beta,
                r.energy,
                r.component_energy,
                r.overlap.first().copied().unwrap_or(0.0),
                r.beta_overlap.first().copied().unwrap_or(0.0),
                r.iterations as f64,
                r.grad_max,
                if r.converged() { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    out.write_csv(
        "sweep.csv",
        &[
            "beta",
            "energy",
            "component_energy",
            "overlap",
            "beta_overlap",
            "iterations",
            "grad_max",
            "converged",
        ],
        &rows,
    )?;
    for (i, r) in reports.iter().enumerate() {
        let mut point = pin;
        point.beta = r.beta;
        out.write_field(&format!("sweep_{i:02}.bin", i = i), &r.field, &point)?;
    }
    if !reports.is_empty() {
        let table = partition::segregation_trace(&reports, &pin, &pot, cfg.partition_threshold)
            .map_err(RunError::from)?;
        let seg_rows: Vec<Vec<f64>> = table
            .rows
            .iter()
            .map(|r| {
                vec![r.beta, r.overlap, r.beta_overlap, r.min_interface_product, r.component_energy]
            })
            .collect();
        out.write_csv(
            "segregation.csv",
            &["beta", "overlap", "beta_overlap", "min_interface_product", "component_energy"],
            &seg_rows,
        )?;
        out.write_json(
            "sweep_summary.json",
            &json!({
                "c_inf": omega.energy,
                "failures": failures,
                "overlap_decreasing": table.overlap_decreasing,
                "beta_overlap_tail_decreasing": table.beta_overlap_tail_decreasing,
                "reports": reports,
            }),
        )?;
    }
    out.finish(cfg)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(RunError::NoConvergence(failures.join("; ")))
    }
}

/// Translated cutoff tuples over the R sweep and the rate fit of the gap.
pub fn run_testfn(cfg: &RunConfig) -> RunResult {
    if cfg.dim == 1 {
        return Err(RunError::Failed("this run needs a planar or cylindrical domain".into()));
    }
    let mut out = OutDir::create(cfg)?;
    let pin = cfg.pinwheel().map_err(|e| RunError::Failed(e.to_string()))?;
    let pot = cfg.potential().map_err(|e| RunError::Failed(e.to_string()))?;
    // The tuple supports must fit inside the truncation radius, so the
    // materialization grid extends past the largest placement radius at the
    // configured radial density.
    let grid = {
        let varrho = (pin.min_chord() + cfg.lambda()) / 4.0;
        let r_needed = cfg
            .r_sweep
            .iter()
            .fold(cfg.r_max, |m, r| m.max(1.05 * r * (1.0 + varrho)));
        let dr = cfg.r_max / cfg.nr as f64;
        let nr = ((r_needed / dr).ceil() as usize).max(cfg.nr);
        pinwheel_core::grid::PolarGrid::build(pinwheel_core::grid::GridParams::plane(
            nr, cfg.m, r_needed, cfg.ell, cfg.n,
        ))
        .map_err(RunError::from)?
    };
    let report = pot.validate(cfg.ell, cfg.n);
    if !report.ok {
        return Err(RunError::Failed(format!(
            "potential inadmissible for test tuples: {}",
            report.failures.join("; ")
        )));
    }
    let omega = limit_ground_state(cfg)?;
    let level = pin.group_order() as f64 * omega.energy;

    let mut rows = Vec::new();
    let mut samples = Vec::new();
    let mut last_field: Option<(f64, ComponentField)> = None;
    let mut point_failures = Vec::new();
    for &big_r in &cfg.r_sweep {
        match scalar::build_test_tuple(big_r, &pin, &omega, &pot, &grid) {
            Ok(tuple) => {
                rows.push(vec![big_r, tuple.energy, level - tuple.energy, tuple.t]);
                samples.push((big_r, tuple.energy));
                last_field = Some((big_r, tuple.field));
            }
            Err(e) => point_failures.push(format!("R = {big_r}: {e}")),
        }
    }
    out.write_csv("testfn.csv", &["R", "E_R", "gap", "t_R"], &rows)?;
    if let Some((big_r, field)) = &last_field {
        out.write_field("tuple.bin", field, &pin)?;
        out.write_heatmaps(&format!("tuple_R{big_r}"), field, &pin, cfg.image_size)?;
    }
    let fit = scalar::decay_fit(&samples, omega.energy, &pin).map_err(RunError::from)?;
    let target = cfg.lambda() * cfg.v_inf.sqrt();
    out.write_json(
        "testfn_summary.json",
        &json!({
            "c_inf": omega.energy,
            "level": level,
            "fitted_rate": fit.rate,
            "target_rate": target,
            "rate_ratio": fit.rate / target,
            "gaps": fit.gaps,
            "failures": point_failures,
        }),
    )?;
    out.finish(cfg)?;
    if point_failures.is_empty() {
        Ok(())
    } else {
        Err(RunError::Failed(point_failures.join("; ")))
    }
}

/// Continuation to the strongest coupling in the schedule, then partition
/// extraction, interface diagnostics, and (for two components) the
/// sign-changing correspondence.
pub fn run_partition(cfg: &RunConfig) -> RunResult {
    if cfg.dim == 1 {
        return Err(RunError::Failed("this run needs a planar or cylindrical domain".into()));
    }
    let mut out = OutDir::create(cfg)?;
    let pin = cfg.pinwheel().map_err(|e| RunError::Failed(e.to_string()))?;
    let grid = cfg.grid().map_err(|e| RunError::Failed(e.to_string()))?;
    let pot = cfg.potential().map_err(|e| RunError::Failed(e.to_string()))?;
    let omega = limit_ground_state(cfg)?;
    let opts = cfg.solve_options(Some(omega.energy));

    // Reach the deepest β through the schedule (warm-started).
    let first = solver::initial_guess(
        &grid,
        &pin,
        pot.v_inf(),
        cfg.r_init.unwrap_or(grid.r_max / 2.0),
    );
    let reports =
        solver::continuation_from(&pin, &pot, &grid, &cfg.beta_schedule, &opts, Some(&first))?;
    let last = reports.last().expect("nonempty schedule");
    let mut deep_cfg = pin;
    deep_cfg.beta = last.beta;

    // Support extraction runs on the segregated proxy of the limit profile:
    // the limit components have exactly disjoint supports, while any
    // finite-coupling iterate keeps interface tails above a fixed threshold.
    let proxy = solver::segregate(&last.field, &deep_cfg)?;
    let part = partition::extract_partition(&proxy, &deep_cfg, &pot, cfg.partition_threshold)
        .map_err(RunError::from)?;
    let diag =
        partition::interface_diagnostics(&proxy, &deep_cfg, &part).map_err(RunError::from)?;

    // Mask images: one per component plus a composite label map.
    let g = &grid;
    let size = cfg.image_size;
    let shift_step = g.m / pin.ell;
    let mut label = vec![0u16; size * size];
    for comp in 0..pin.ell {
        let mut img = vec![0u16; size * size];
        let rotated = proxy.shifted(comp * shift_step);
        for py in 0..size {
            let y = g.r_max * (1.0 - 2.0 * (py as f64 + 0.5) / size as f64);
            for px in 0..size {
                let x = g.r_max * (2.0 * (px as f64 + 0.5) / size as f64 - 1.0);
                if rotated.sample_plane(x, y, 0) > part.threshold_abs {
                    img[py * size + px] = 65535;
                    label[py * size + px] =
                        ((comp + 1) as f64 / pin.ell as f64 * 65535.0) as u16;
                }
            }
        }
        let name = format!("mask_u{}.pgm", comp + 1);
        io::write_pgm_u16(&out.path(&name), size, size, &img).map_err(RunError::from)?;
        out.register(&name)?;
    }
    io::write_pgm_u16(&out.path("mask_labels.pgm"), size, size, &label).map_err(RunError::from)?;
    out.register("mask_labels.pgm")?;

    let iface_rows: Vec<Vec<f64>> = diag
        .samples
        .iter()
        .map(|s| vec![s.ring as f64, s.j as f64, s.slab as f64, s.grad_i, s.grad_j, s.mismatch])
        .collect();
    out.write_csv(
        "interface.csv",
        &["ring", "j", "slab", "grad_i", "grad_j", "mismatch"],
        &iface_rows,
    )?;

    let sign = if pin.ell == 2 {
        Some(partition::sign_changing(&last.field, &deep_cfg, &pot).map_err(RunError::from)?)
    } else {
        None
    };
    out.write_field("u1_deep.bin", &last.field, &deep_cfg)?;
    out.write_json(
        "partition_summary.json",
        &json!({
            "beta": last.beta,
            "threshold_rel": cfg.partition_threshold,
            "coverage": part.coverage,
            "violations": part.violations,
            "component_energies": part.component_energies,
            "median_gradient": diag.median_gradient,
            "median_mismatch": diag.median_mismatch,
            "max_mismatch": diag.max_mismatch,
            "interface_nodes": diag.samples.len(),
            "sign_changing": sign.as_ref().map(|s| json!({
                "equation_residual_max": s.equation_residual_max,
                "antisymmetry_deviation": s.antisymmetry_deviation,
                "energy_identity_rel_error": s.energy_identity_rel_error,
            })),
        }),
    )?;
    out.finish(cfg)?;
    if let Some(bad) = reports.iter().find(|r| !r.converged()) {
        return Err(RunError::NoConvergence(format!(
            "beta {}: {:?}",
            bad.beta, bad.status
        )));
    }
    Ok(())
}
