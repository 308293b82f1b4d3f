//! Nehari-projected gradient descent for the reduced energy, with
//! β-continuation and splitting/symmetry diagnostics.
//!
//! One iteration: v = clamp₊(u - τ·∇𝒥(u)), then u ← s_v·v with s_v the
//! Nehari scale. The step τ backtracks from τ₀ = 1/(‖V‖_∞ + 4/dr²) until
//! the energy does not increase, and is allowed to grow again after
//! accepted steps. Iterations stop when the max norm of the free gradient
//! falls below the tolerance (the manifold is a natural constraint, so the
//! free gradient vanishes at constrained minimizers).

use crate::error::{Error, Result};
use crate::functional::{EnergyModel, Evaluated};
use crate::grid::{ComponentField, PolarGrid};
use crate::potential::RadialPotential;
use crate::precond::PlanePreconditioner;
use crate::symmetry::{check_equivariance, orbit_points, tuple_from_component, PinwheelConfig};
use serde::Serialize;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    /// Iteration budget exhausted before the gradient tolerance.
    BudgetExhausted,
    /// Backtracking could not decrease the energy any further.
    Stalled,
    /// Budget exhausted while mass drifted toward the truncation boundary:
    /// the discrete signature of the splitting alternative (which cannot
    /// occur literally on a truncated domain).
    SplittingSuspected,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Gradient max-norm target; when absent, 1e-6·√c_∞ (or 1e-6).
    pub tol: Option<f64>,
    /// Ground-state energy of the limit problem, used for the scale-aware
    /// default tolerance and the splitting-threshold certificate.
    pub c_inf: Option<f64>,
    pub max_iters: usize,
    pub max_backtracks: u32,
    /// Clamp iterates to be nonnegative nodewise (positive solutions).
    pub positivity_clamp: bool,
    /// Boundary-mass monitor radius as a fraction of r_max.
    pub monitor_radius_frac: f64,
    /// Descend in the ⟨·,·⟩_V metric (direction (-Δ+V)⁻¹∇𝒥 via per-mode
    /// tridiagonal solves). Plain weighted-L² descent needs orders of
    /// magnitude more iterations on stiff grids; kept as an ablation
    /// switch.
    pub preconditioned: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: None,
            c_inf: None,
            max_iters: 100_000,
            max_backtracks: 30,
            positivity_clamp: true,
            monitor_radius_frac: 0.8,
            preconditioned: true,
        }
    }
}

impl SolveOptions {
    pub fn effective_tol(&self) -> f64 {
        match (self.tol, self.c_inf) {
            (Some(t), _) => t,
            (None, Some(c)) => 1e-6 * c.max(0.0).sqrt(),
            (None, None) => 1e-6,
        }
    }
}

/// Converged field with its diagnostics. Traces go to CSV, not JSON.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub field: ComponentField,
    pub beta: f64,
    pub status: SolveStatus,
    /// 𝒥 over the full tuple.
    pub energy: f64,
    /// (p-1)/(2p)‖u₁‖²_V.
    pub component_energy: f64,
    /// Energy of the projected initial guess.
    pub initial_energy: f64,
    pub iterations: usize,
    pub grad_max: f64,
    pub tol: f64,
    /// |q - D|/q at the final iterate.
    pub nehari_residual_rel: f64,
    /// Worst |q - D|/q over all accepted iterates.
    pub max_nehari_residual_rel: f64,
    /// Fraction of ∫|u₁|^{2p} beyond the monitor radius.
    pub boundary_mass: f64,
    /// Normalized angular variance of the final field.
    pub radiality: f64,
    /// Max deviation from the component rotation identities (0 by
    /// construction; recomputed honestly).
    pub equivariance_deviation: f64,
    /// Overlap integrals O_k = ∫|u₁|^p|u_{k+1}|^p.
    pub overlap: Vec<f64>,
    pub beta_overlap: Vec<f64>,
    /// ℓn·c_∞ when c_∞ was supplied.
    pub split_threshold: Option<f64>,
    /// Strict-inequality certificate energy < ℓn·c_∞.
    pub below_split_threshold: Option<bool>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
    #[serde(skip)]
    pub grad_trace: Vec<f64>,
    #[serde(skip)]
    pub boundary_trace: Vec<f64>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Fraction of ∫|u₁|^{2p} carried by the region |x| > fraction_radius.
/// A rising trace flags mass escaping toward the truncation boundary (the
/// splitting alternative cannot occur literally on a truncated domain).
pub fn splitting_monitor(u: &ComponentField, p: f64, fraction_radius: f64) -> f64 {
    let g = u.grid();
    let tp = 2.0 * p;
    let mut inner = 0.0;
    let mut outer = 0.0;
    for k in 0..g.ns {
        let pole = g.pole_weight(k) * u.pole(k).abs().powf(tp);
        if g.full_radius(0, k) > fraction_radius {
            outer += pole;
        } else {
            inner += pole;
        }
        for i in 1..=g.nr {
            let w = g.weight(i, k);
            let far = g.full_radius(i, k) > fraction_radius;
            for j in 0..g.m {
                let v = w * u.at(i, j, k).abs().powf(tp);
                if far {
                    outer += v;
                } else {
                    inner += v;
                }
            }
        }
    }
    let total = inner + outer;
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

/// Normalized angular variance: max over radii (and slabs) of the variance
/// of u over θ, divided by the squared peak. Zero iff θ-independent.
pub fn radiality_score(u: &ComponentField) -> f64 {
    let g = u.grid();
    let peak = u.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let mf = g.m as f64;
    let mut worst = 0.0_f64;
    for k in 0..g.ns {
        for i in 1..=g.nr {
            // Deviations from the first node: exactly zero on θ-uniform
            // rows, so radial fields score 0 in floating point too.
            let base = u.at(i, 0, k);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for j in 0..g.m {
                let d = u.at(i, j, k) - base;
                sum += d;
                sum_sq += d * d;
            }
            let var = sum_sq / mf - (sum / mf) * (sum / mf);
            worst = worst.max(var);
        }
    }
    worst / (peak * peak)
}

/// Sum of Gaussian bumps of width 1/√V_∞ at the component-1 pinwheel points
/// at the given radius: feasible, nonradial, in the pinwheel class.
pub fn initial_guess(
    grid: &Arc<PolarGrid>,
    config: &PinwheelConfig,
    v_inf: f64,
    r_init: f64,
) -> ComponentField {
    let centers = orbit_points(r_init, config.ell, config.n)[0].clone();
    ComponentField::gaussian_bumps(grid, &centers, 1.0 / v_inf.sqrt(), 1.0)
}

/// Largest eigenvalue of the (optionally preconditioned) linear part
/// -Δ + V by power iteration in the weighted inner product. The gradient
/// step must stay strictly below 2/λ_max or the stiffest mode bounces at
/// the stability boundary without ever decaying in max norm (its energy
/// signature is far below line-search resolution).
fn operator_norm_estimate(
    model: &EnergyModel,
    pre: Option<&PlanePreconditioner>,
    rounds: usize,
) -> f64 {
    let grid = model.grid().clone();
    // Seed the known stiff shapes: θ-alternation near the pole,
    // s-alternation across slabs, and radial roughness in the bulk.
    let mut v = ComponentField::zeros(&grid);
    for i in 1..grid.nr {
        for j in 0..grid.m {
            for k in 0..grid.ns {
                let theta_rough = if i == 1 && j % 2 == 0 { 1.0 } else { 0.0 };
                let s_sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let radial = if (i + j) % 2 == 0 { 0.6 } else { -0.5 };
                v.set(i, j, k, theta_rough + s_sign * (1.0 + radial));
            }
        }
    }
    if grid.ns > 1 {
        v.zero_dirichlet();
    }
    let mut lambda = 1.0;
    for _ in 0..rounds {
        let mut av = grid.laplacian(&v);
        av.scale(-1.0);
        model.add_potential_term(&v, &mut av);
        let mut av = match pre {
            Some(p) => p.apply(&av),
            None => av,
        };
        if grid.ns > 1 {
            av.zero_dirichlet();
        }
        let norm2 = grid.weighted_inner(&av, &av).max(f64::MIN_POSITIVE);
        let vnorm2 = grid.weighted_inner(&v, &v).max(f64::MIN_POSITIVE);
        lambda = (norm2 / vnorm2).sqrt();
        av.scale(1.0 / norm2.sqrt());
        v = av;
    }
    lambda
}

fn boundary_fraction_of(ev: &Evaluated, radius: f64) -> f64 {
    // |u|^{2p} = (|u|^p)², using the cached p-th power buffer.
    let g = ev.field.grid();
    let mut inner = 0.0;
    let mut outer = 0.0;
    for k in 0..g.ns {
        let v = g.pole_weight(k) * ev.pth.pole(k) * ev.pth.pole(k);
        if g.full_radius(0, k) > radius {
            outer += v;
        } else {
            inner += v;
        }
        for i in 1..=g.nr {
            let w = g.weight(i, k);
            let far = g.full_radius(i, k) > radius;
            for j in 0..g.m {
                let x = ev.pth.at(i, j, k);
                let v = w * x * x;
                if far {
                    outer += v;
                } else {
                    inner += v;
                }
            }
        }
    }
    let total = inner + outer;
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

/// Minimize 𝒥 over the Nehari manifold from the given initial field.
pub fn minimize(
    config: &PinwheelConfig,
    pot: &RadialPotential,
    grid: &Arc<PolarGrid>,
    initial: &ComponentField,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let model = EnergyModel::new(grid, *config, pot)?;
    minimize_model(&model, initial, opts)
}

pub fn minimize_model(
    model: &EnergyModel,
    initial: &ComponentField,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    let grid = model.grid().clone();
    let tol = opts.effective_tol();
    let monitor_radius = opts.monitor_radius_frac * grid.r_max;

    // Project the initial guess; an infeasible start is an immediate error.
    let ev0 = model.evaluate(initial.clone());
    let s0 = model.nehari_scalar_from_terms(&ev0.terms)?;
    let mut u = ev0.field;
    u.scale(s0);
    u.zero_dirichlet();
    let mut ev = model.evaluate(u);
    let mut j_cur = model.energy_from_terms(&ev.terms);
    let initial_energy = j_cur;

    // Descent direction: the raw gradient, or (-Δ+V)⁻¹ applied to it (the
    // ⟨·,·⟩_V metric); the competitive stiffening is handled pointwise by
    // the semi-implicit damping in the trial step. The step cap comes from
    // a power-iteration estimate of the linear part; the plain path
    // additionally anchors at 1/(‖V‖_∞ + 4/dr²).
    let pre = if opts.preconditioned {
        Some(PlanePreconditioner::new(&grid, |ring, slab| model.v_node(ring, slab)))
    } else {
        None
    };
    let coupled = model.config.ell > 1 && model.config.beta != 0.0;
    let lambda = operator_norm_estimate(model, pre.as_ref(), 80);
    let tau0 = match pre {
        Some(_) => 1.7 / lambda,
        None => (1.7 / lambda).min(1.0 / (model.v_max() + 4.0 / (grid.dr * grid.dr))),
    };
    let mut tau = tau0;

    let mut energy_trace = Vec::new();
    let mut grad_trace = Vec::new();
    let mut boundary_trace = Vec::new();
    let mut max_residual_rel = 0.0_f64;
    let mut status = SolveStatus::BudgetExhausted;
    let mut iterations = 0;
    let mut grad_max = f64::INFINITY;
    // Stagnation guard: if a whole window passes without the gradient
    // beating its best-ever value, some stiff mode is bouncing at the
    // stability boundary; shrink the cap persistently.
    let mut tau_cap = tau0;
    let mut window_best = f64::INFINITY;
    let mut global_best = f64::INFINITY;
    let mut window_counter = 0usize;
    const GUARD_WINDOW: usize = 400;

    while iterations < opts.max_iters {
        iterations += 1;
        let mut g = model.gradient_with_pth(&ev.field, &ev.pth);
        if opts.positivity_clamp {
            // Constrained stationarity: nodes pinned at zero whose gradient
            // pushes further negative are inactive (their multiplier is the
            // gradient itself); drop them from both the convergence measure
            // and the step direction.
            let (upole, uvals) = ev.field.raw();
            let (gpole, gvals) = g.raw_mut();
            for (u, gv) in upole.iter().zip(gpole.iter_mut()).chain(uvals.iter().zip(gvals.iter_mut()))
            {
                if *u == 0.0 && *gv > 0.0 {
                    *gv = 0.0;
                }
            }
        }
        grad_max = g.max_abs();
        let direction = match &pre {
            Some(p) => {
                let mut z = p.apply(&g);
                if grid.ns > 1 {
                    z.zero_dirichlet();
                }
                z
            }
            None => g,
        };
        // Pointwise stiffening by the competitive term: damped
        // semi-implicitly below, so a single global step can serve both the
        // stiff interface band and the soft bulk.
        let stiff = if coupled { Some(model.coupling_diag(&ev.field, &ev.pth)) } else { None };
        let residual_rel = (ev.terms.q - ev.terms.denominator(model.config.beta)).abs() / ev.terms.q;
        max_residual_rel = max_residual_rel.max(residual_rel);
        energy_trace.push(j_cur);
        grad_trace.push(grad_max);
        boundary_trace.push(boundary_fraction_of(&ev, monitor_radius));

        if grad_max < tol {
            status = SolveStatus::Converged;
            break;
        }
        window_best = window_best.min(grad_max);
        window_counter += 1;
        if window_counter >= GUARD_WINDOW {
            // Trust-region flavor: shrink while a stiff mode bounces, grow
            // back once the gradient makes progress again.
            if window_best > 0.97 * global_best {
                tau_cap = (tau_cap * 0.5).max(1e-9 * tau0);
            } else {
                tau_cap = (tau_cap * 2.0).min(tau0);
            }
            global_best = global_best.min(window_best);
            window_best = f64::INFINITY;
            window_counter = 0;
        }

        let mut step = (tau * 2.0).min(tau_cap);
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let mut trial = ev.field.clone();
            match &stiff {
                Some(d) => {
                    let (dp, dv) = d.raw();
                    let (zp, zv) = direction.raw();
                    let (tp, tv) = trial.raw_mut();
                    for i in 0..tp.len() {
                        tp[i] -= step * zp[i] / (1.0 + step * dp[i]);
                    }
                    for i in 0..tv.len() {
                        tv[i] -= step * zv[i] / (1.0 + step * dv[i]);
                    }
                }
                None => trial.add_scaled(-step, &direction),
            }
            if opts.positivity_clamp {
                let (pole, vals) = trial.raw_mut();
                for v in pole.iter_mut().chain(vals.iter_mut()) {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            trial.zero_dirichlet();
            let ev_trial = model.evaluate(trial);
            if let Ok(s) = model.nehari_scalar_from_terms(&ev_trial.terms) {
                let j_new = model.energy_along_ray(&ev_trial.terms, s);
                // Relative slack well inside the 1e-12·|𝒥| trace contract:
                // near the rounding floor a descent step may not move J.
                if j_new <= j_cur + 2.5e-13 * j_cur.abs() {
                    let mut next = ev_trial.field;
                    next.scale(s);
                    ev = model.evaluate(next);
                    j_cur = model.energy_from_terms(&ev.terms);
                    tau = step;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            status = SolveStatus::Stalled;
            break;
        }
    }

    if status == SolveStatus::BudgetExhausted {
        let n = boundary_trace.len();
        if n >= 16 {
            let first = boundary_trace[..n / 4].iter().copied().fold(f64::INFINITY, f64::min);
            let last = boundary_trace[n - 1];
            if last > 0.25 && last > 2.0 * first {
                status = SolveStatus::SplittingSuspected;
            }
        }
    }
    let component_energy =
        (model.config.p - 1.0) / (2.0 * model.config.p) * ev.terms.q;
    let overlap = ev.terms.coupling.clone();
    let beta_overlap: Vec<f64> = overlap.iter().map(|o| model.config.beta * o).collect();
    let split_threshold = opts.c_inf.map(|c| model.config.group_order() as f64 * c);
    let below = split_threshold.map(|t| j_cur < t);
    let equivariance_deviation = if model.config.ell > 1 {
        let tuple = tuple_from_component(&ev.field, model.config.ell)?;
        check_equivariance(&tuple)?
    } else {
        0.0
    };
    let final_residual = (ev.terms.q - ev.terms.denominator(model.config.beta)).abs() / ev.terms.q;

    Ok(SolveReport {
        radiality: radiality_score(&ev.field),
        boundary_mass: boundary_fraction_of(&ev, monitor_radius),
        field: ev.field,
        beta: model.config.beta,
        status,
        energy: j_cur,
        component_energy,
        initial_energy,
        iterations,
        grad_max,
        tol,
        nehari_residual_rel: final_residual,
        max_nehari_residual_rel: max_residual_rel,
        equivariance_deviation,
        overlap,
        beta_overlap,
        split_threshold,
        below_split_threshold: below,
        wall_time_s: start.elapsed().as_secs_f64(),
        energy_trace,
        grad_trace,
        boundary_trace,
    })
}

/// One-pass mutual suppression (u₁ - max_{j≠1} u_j)₊: the shifted copies of
/// the result have pairwise disjoint supports, so the Nehari denominator of
/// the suppressed field is strictly positive whenever it is nonzero.
pub fn segregate(u: &ComponentField, config: &PinwheelConfig) -> Result<ComponentField> {
    let g = u.grid_arc();
    let shifts = crate::symmetry::component_shifts(g.m, config.ell)?;
    let mut out = u.clone();
    // The pole is shared by every component: it must vanish.
    for k in 0..g.ns {
        out.set(0, 0, k, 0.0);
    }
    for i in 1..=g.nr {
        for j in 0..g.m {
            for k in 0..g.ns {
                let own = u.at(i, j, k);
                let mut rival = f64::NEG_INFINITY;
                for sh in &shifts[1..] {
                    rival = rival.max(u.at(i, (j + sh) % g.m, k));
                }
                out.set(i, j, k, (own - rival).max(0.0));
            }
        }
    }
    Ok(out)
}

/// Warm start for a new coupling: reproject if feasible, otherwise
/// segregate once (which makes the coupling integrals vanish) and reproject.
pub fn feasible_warm_start(model: &EnergyModel, field: &ComponentField) -> Result<ComponentField> {
    match model.nehari_scalar(field) {
        Ok(_) => Ok(field.clone()),
        Err(Error::NonpositiveDenominator { .. }) if model.config.ell > 1 => {
            let suppressed = segregate(field, &model.config)?;
            model.nehari_scalar(&suppressed)?;
            Ok(suppressed)
        }
        Err(e) => Err(e),
    }
}

/// Solve along a strictly monotone schedule of couplings, warm-starting
/// each solve from the previous solution (the default cold start places
/// the bumps at half the truncation radius).
pub fn continuation(
    config: &PinwheelConfig,
    pot: &RadialPotential,
    grid: &Arc<PolarGrid>,
    schedule: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<SolveReport>> {
    continuation_from(config, pot, grid, schedule, opts, None)
}

/// Continuation with an explicit initial field for the first point. Every
/// start passes through the segregation fallback, so deep quenches remain
/// feasible.
pub fn continuation_from(
    config: &PinwheelConfig,
    pot: &RadialPotential,
    grid: &Arc<PolarGrid>,
    schedule: &[f64],
    opts: &SolveOptions,
    initial: Option<&ComponentField>,
) -> Result<Vec<SolveReport>> {
    if schedule.is_empty() {
        return Err(Error::Config("empty continuation schedule".into()));
    }
    if schedule.iter().any(|b| !(*b < 0.0)) {
        return Err(Error::Config("every coupling in the schedule must be negative".into()));
    }
    let increasing = schedule.windows(2).all(|w| w[1] > w[0]);
    let decreasing = schedule.windows(2).all(|w| w[1] < w[0]);
    if schedule.len() > 1 && !increasing && !decreasing {
        return Err(Error::Config("schedule must be strictly monotone".into()));
    }

    let mut reports = Vec::with_capacity(schedule.len());
    let mut current: Option<ComponentField> = initial.cloned();
    for &beta in schedule {
        let mut cfg = *config;
        cfg.beta = beta;
        let attach = |e: Error| Error::ContinuationPoint { beta, source: Box::new(e) };
        let model = EnergyModel::new(grid, cfg, pot).map_err(attach)?;
        let start = match &current {
            Some(prev) => feasible_warm_start(&model, prev).map_err(attach)?,
            None => initial_guess(grid, &cfg, pot.v_inf(), grid.r_max / 2.0),
        };
        let report = minimize_model(&model, &start, opts).map_err(attach)?;
        current = Some(report.field.clone());
        reports.push(report);
    }
    Ok(reports)
}

/// Location (ring, j, slab) and value of the largest gradient entry.
pub fn gradient_argmax(g: &ComponentField) -> (usize, usize, usize, f64) {
    let grid = g.grid();
    let mut best = (0usize, 0usize, 0usize, g.pole(0).abs());
    for k in 0..grid.ns {
        if g.pole(k).abs() > best.3 {
            best = (0, 0, k, g.pole(k).abs());
        }
        for i in 1..=grid.nr {
            for j in 0..grid.m {
                let v = g.at(i, j, k).abs();
                if v > best.3 {
                    best = (i, j, k, v);
                }
            }
        }
    }
    best
}
