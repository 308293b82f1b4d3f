//! Radial ground states of the autonomous limit problem, the G_n-invariant
//! scalar problem on the polar grid, cutoff profiles, translated test
//! tuples, and the exponential fit of their energy gap.
//!
//! The limit problem -Δu + V_∞ u = |u|^{2p-2}u is solved on a 1D radial
//! grid with measure weight r^{dim-1} by the same Nehari-projected descent
//! as the full solver. The test tuple places cutoff copies of the resulting
//! profile at the pinwheel points; its energy is evaluated with dedicated
//! radial/spherical quadrature because the gap below ℓn·c_∞ is
//! exponentially small in the placement radius and far below the
//! resolution of the coarse polar grid.

use crate::error::{Error, Result};
use crate::functional::EnergyModel;
use crate::grid::{ComponentField, PolarGrid};
use crate::potential::RadialPotential;
use crate::solver::{self, SolveOptions, SolveReport};
use crate::symmetry::{orbit_points, PinwheelConfig};
use crate::util::{linear_fit, signed_pow, unit_sphere_area};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Uniform 1D radial grid with measure c_d · r^{d-1} dr, Dirichlet at r_max
/// and a natural boundary at r = 0. Node weights are exact cell integrals
/// and edge coefficients use staggered midpoints, mirroring the polar grid.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub dim: usize,
    pub r_max: f64,
    pub h: f64,
    /// Node radii r_i = i·h, i = 0..=cells; the last node is Dirichlet.
    pub radii: Vec<f64>,
    /// Node weights c_d ∫_cell r^{d-1} dr.
    pub weights: Vec<f64>,
    /// Edge coefficients c_d r_{i+1/2}^{d-1}/h for i = 0..cells-1.
    edges: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: usize, r_max: f64, cells: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if cells < 8 || !(r_max > 0.0) {
            return Err(Error::Config("radial grid needs >= 8 cells and positive extent".into()));
        }
        let h = r_max / cells as f64;
        let cd = unit_sphere_area(dim);
        let d = dim as i32;
        let cell = |a: f64, b: f64| (b.powi(d) - a.powi(d)) / d as f64;
        let radii: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        let mut weights = vec![0.0; cells + 1];
        weights[0] = cd * cell(0.0, h / 2.0);
        for i in 1..cells {
            weights[i] = cd * cell(radii[i] - h / 2.0, radii[i] + h / 2.0);
        }
        weights[cells] = cd * cell(r_max - h / 2.0, r_max);
        let edges: Vec<f64> = (0..cells)
            .map(|i| cd * ((i as f64 + 0.5) * h).powi(d - 1) / h)
            .collect();
        Ok(Self { dim, r_max, h, radii, weights, edges })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// ∫ |u'|² r^{d-1} c_d dr by staggered midpoints.
    pub fn dirichlet_form(&self, u: &[f64]) -> f64 {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let d = u[i + 1] - u[i];
                a * d * d
            })
            .sum()
    }

    /// Σ w_i f(u_i).
    pub fn weighted_sum(&self, u: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        self.weights.iter().zip(u).map(|(w, x)| w * f(*x)).sum()
    }

    /// Representer of the Dirichlet form: the radial Laplacian
    /// u'' + (d-1)/r u' in conservative form. The Dirichlet node is zeroed.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let upper = self.edges[i] * (u[i + 1] - u[i]);
            let lower = if i == 0 { 0.0 } else { self.edges[i - 1] * (u[i] - u[i - 1]) };
            out[i] = (upper - lower) / self.weights[i];
        }
        out
    }
}

/// Radial ground state of -Δu + V_const u = |u|^{2p-2}u with its energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundState {
    pub dim: usize,
    pub p: f64,
    /// Limit (supremum) of the potential the state was computed with.
    pub v_const: f64,
    pub radii: Vec<f64>,
    pub profile: Vec<f64>,
    /// (p-1)/(2p) ‖ω‖²_V.
    pub energy: f64,
    pub norm_sq: f64,
    pub lp_2p: f64,
    /// Max norm of the discrete radial equation residual.
    pub residual_max: f64,
    pub iterations: usize,
}

impl GroundState {
    /// Linear interpolation of the profile; 0 beyond the grid.
    pub fn eval(&self, r: f64) -> f64 {
        if r < 0.0 || r >= *self.radii.last().unwrap() {
            return 0.0;
        }
        let h = self.radii[1] - self.radii[0];
        let f = r / h;
        let i = (f.floor() as usize).min(self.radii.len() - 2);
        let t = f - i as f64;
        self.profile[i] * (1.0 - t) + self.profile[i + 1] * t
    }
}

fn radial_terms(grid: &RadialGrid, u: &[f64], v_samples: &[f64], p: f64) -> (f64, f64) {
    let mut vq = 0.0;
    for i in 0..u.len() {
        vq += grid.weights[i] * v_samples[i] * (u[i] * u[i]);
    }
    let q = grid.dirichlet_form(u) + vq;
    let s = grid.weighted_sum(u, |x| x.abs().powf(2.0 * p));
    (q, s)
}

/// Least-energy radial solution of -Δu + V(r)u = |u|^{2p-2}u over radial
/// functions, by Nehari-projected gradient descent on the 1D grid.
pub fn ground_state_radial_from(
    grid: &RadialGrid,
    v_of_r: impl Fn(f64) -> f64,
    p: f64,
    initial: &[f64],
) -> Result<GroundState> {
    let v_samples: Vec<f64> = grid.radii.iter().map(|r| v_of_r(*r)).collect();
    let v_min = v_samples.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let v_max = v_samples.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    if !(v_min > 0.0) {
        return Err(Error::Config("potential must be positive".into()));
    }
    if !(p > 1.0) {
        return Err(Error::Config("exponent must exceed 1".into()));
    }
    if grid.dim >= 3 && !(p < grid.dim as f64 / (grid.dim as f64 - 2.0)) {
        return Err(Error::Config("exponent is supercritical for this dimension".into()));
    }
    let n = grid.len();
    assert_eq!(initial.len(), n);

    let project = |u: &mut [f64]| -> Result<(f64, f64)> {
        let (q, s) = radial_terms(grid, u, &v_samples, p);
        if !(s > 0.0) || !(q > 0.0) {
            return Err(Error::NonpositiveDenominator { denominator: s, self_term: s });
        }
        let scale = (q / s).powf(1.0 / (2.0 * p - 2.0));
        u.iter_mut().for_each(|x| *x *= scale);
        Ok((scale * scale * q, scale.powf(2.0 * p) * s))
    };

    let mut u = initial.to_vec();
    u[n - 1] = 0.0;
    let (mut q, mut s) = project(&mut u)?;
    let energy_of = |q: f64, s: f64| 0.5 * q - s / (2.0 * p);
    let mut j_cur = energy_of(q, s);

    // Descend in the ⟨·,·⟩_V metric: the shifted radial operator is
    // tridiagonal, so the exact solve is one Thomas sweep.
    let solver = {
        let free = n - 1;
        let mut lower = vec![0.0; free];
        let mut diag = vec![0.0; free];
        let mut upper = vec![0.0; free];
        for i in 0..free {
            let w = grid.weights[i];
            let a_hi = grid.edges[i] / w;
            diag[i] = a_hi + v_samples[i];
            if i > 0 {
                let a_lo = grid.edges[i - 1] / w;
                lower[i] = -a_lo;
                diag[i] += a_lo;
            }
            if i + 1 < free {
                upper[i] = -a_hi;
            }
        }
        crate::precond::Tridiag::factor(&lower, &diag, &upper)
    };

    let tau0 = 1.7_f64;
    let mut tau = 1.0_f64;
    let tol = 1e-7;
    let max_iters = 100_000;
    let mut grad = vec![0.0; n];
    let mut direction = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut gmax = f64::INFINITY;

    while iterations < max_iters {
        iterations += 1;
        let lap = grid.laplacian(&u);
        gmax = 0.0;
        for i in 0..n - 1 {
            grad[i] = -lap[i] + v_samples[i] * u[i] - signed_pow(u[i], 2.0 * p - 1.0);
            gmax = gmax.max(grad[i].abs());
        }
        grad[n - 1] = 0.0;
        if gmax < tol {
            converged = true;
            break;
        }
        direction[..n - 1].copy_from_slice(&grad[..n - 1]);
        solver.solve_in_place(&mut direction[..n - 1]);
        direction[n - 1] = 0.0;
        let mut accepted = false;
        let mut step = (tau * 2.0).min(tau0);
        for _ in 0..=30 {
            let mut trial: Vec<f64> = u
                .iter()
                .zip(&direction)
                .map(|(x, g)| (x - step * g).max(0.0))
                .collect();
            trial[n - 1] = 0.0;
            if let Ok((tq, ts)) = project(&mut trial) {
                let j_new = energy_of(tq, ts);
                // Tiny relative slack: near the rounding floor of the
                // energy a genuine descent step may not change J in f64.
                if j_new <= j_cur + 2.5e-13 * j_cur.abs() {
                    u = trial;
                    q = tq;
                    s = ts;
                    j_cur = j_new;
                    tau = step;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations, grad_max: gmax, tol });
    }
    let energy = (p - 1.0) / (2.0 * p) * q;
    let lap = grid.laplacian(&u);
    let residual_max = (0..n - 1)
        .map(|i| (-lap[i] + v_samples[i] * u[i] - signed_pow(u[i], 2.0 * p - 1.0)).abs())
        .fold(0.0_f64, f64::max);
    Ok(GroundState {
        dim: grid.dim,
        p,
        v_const: v_max,
        radii: grid.radii.clone(),
        profile: u,
        energy,
        norm_sq: q,
        lp_2p: s,
        residual_max,
        iterations,
    })
}

/// Radial ground state of the limit problem (constant potential) from the
/// default Gaussian initial guess.
pub fn ground_state_radial(grid: &RadialGrid, v_const: f64, p: f64) -> Result<GroundState> {
    if !(v_const > 0.0) {
        return Err(Error::Config("limit potential must be positive".into()));
    }
    let width2 = 1.0 / v_const;
    let initial: Vec<f64> = grid.radii.iter().map(|r| (-r * r / (2.0 * width2)).exp()).collect();
    ground_state_radial_from(grid, |_| v_const, p, &initial)
}

/// Radial least-energy state of the scalar equation with a radial
/// potential: the 1D oracle for centered polar-grid solves.
pub fn ground_state_radial_v(
    grid: &RadialGrid,
    pot: &RadialPotential,
    p: f64,
) -> Result<GroundState> {
    let width2 = 1.0 / pot.v_inf();
    let initial: Vec<f64> = grid.radii.iter().map(|r| (-r * r / (2.0 * width2)).exp()).collect();
    ground_state_radial_from(grid, |r| pot.value(r), p, &initial)
}

/// Least-energy G_n-invariant solution of the scalar equation on the polar
/// grid, found by the single-component instance of the coupled solver.
#[derive(Debug)]
pub struct GnGroundState {
    pub energy: f64,
    pub report: SolveReport,
    /// Whether the off-center multi-bump start beat the centered one.
    pub ring_start_won: bool,
}

pub fn ground_state_gn(
    pot: &RadialPotential,
    n: usize,
    p: f64,
    grid: &Arc<PolarGrid>,
    opts: &SolveOptions,
) -> Result<GnGroundState> {
    ground_state_gn_with_ring(pot, n, p, grid, opts, grid.r_max / 4.0)
}

/// Same, with an explicit placement radius for the off-center multi-bump
/// start. The centered radial start is always tried as well and the lower
/// energy wins.
pub fn ground_state_gn_with_ring(
    pot: &RadialPotential,
    n: usize,
    p: f64,
    grid: &Arc<PolarGrid>,
    opts: &SolveOptions,
    ring_radius: f64,
) -> Result<GnGroundState> {
    let config = PinwheelConfig::scalar_gn(n, grid.dim, p)?;
    let model = EnergyModel::new(grid, config, pot)?;
    let sigma = 1.0 / pot.v_inf().sqrt();
    let centered = ComponentField::gaussian_bumps(grid, &[[0.0, 0.0]], sigma, 1.0);
    let ring = solver::initial_guess(grid, &config, pot.v_inf(), ring_radius);
    let a = solver::minimize_model(&model, &centered, opts)?;
    let b = solver::minimize_model(&model, &ring, opts)?;
    let ring_start_won = b.energy < a.energy;
    let report = if ring_start_won { b } else { a };
    Ok(GnGroundState { energy: report.energy, report, ring_start_won })
}

/// C² radial cutoff: 1 on [0, 1-ε], 0 beyond 1, quintic smoothstep taper in
/// between.
pub fn cutoff(t: f64, eps: f64) -> f64 {
    if t <= 1.0 - eps {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let s = (1.0 - t) / eps;
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

/// ω_r on the polar grid: the radial profile multiplied by the cutoff at
/// scale r, sampled at every node (center at the origin).
pub fn truncate(
    omega: &GroundState,
    r: f64,
    eps: f64,
    grid: &Arc<PolarGrid>,
) -> Result<ComponentField> {
    if !(r > 0.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("need r > 0 and eps in (0,1), got r={r}, eps={eps}")));
    }
    Ok(ComponentField::from_fn(grid, |x, y, s| {
        let rho = (x * x + y * y + s * s).sqrt();
        cutoff(rho / r, eps) * omega.eval(rho)
    }))
}

/// Default cutoff margin: the midpoint of the admissible interval
/// (0, (d_{ℓn} - λ)/(d_{ℓn} + λ)).
pub fn default_cutoff_eps(config: &PinwheelConfig, lambda: f64) -> f64 {
    let d = config.min_chord();
    (d - lambda) / (2.0 * (d + lambda))
}

/// Translated cutoff tuple at placement radius R with its exact-quadrature
/// energy.
#[derive(Debug)]
pub struct TestTuple {
    /// t_R · Σ_j ω_{ϱR}(· - R ξ_{0,j}) materialized on the polar grid.
    pub field: ComponentField,
    /// 𝒥(w_R) = (p-1)/(2p) · ℓ‖w_{1,R}‖²_V by radial/spherical quadrature.
    pub energy: f64,
    /// Scalar Nehari normalization t_R (→ 1 as R → ∞).
    pub t: f64,
    /// Support radius ϱR with ϱ = (d_{ℓn} + λ)/4.
    pub support_radius: f64,
    pub eps: f64,
    /// Off-diagonal overlap integrals on the grid (must all vanish).
    pub grid_overlap_max: f64,
}

/// Decay parameters (C₀, λ) of the admissible well.
fn well_params(pot: &RadialPotential) -> Result<(f64, f64)> {
    match pot {
        RadialPotential::ExpWell { c0, lambda, .. } => Ok((*c0, *lambda)),
        RadialPotential::Tabulated { c0, lambda, .. } => Ok((*c0, *lambda)),
        RadialPotential::Constant { .. } => Err(Error::Config(
            "test tuples need a potential strictly below its limit".into(),
        )),
    }
}

/// Average of V(|c + ρe|) - V_∞ over directions e ∈ S^{N-1}, |c| = big_r.
fn sphere_average_potential_gap(
    pot: &RadialPotential,
    dim: usize,
    big_r: f64,
    rho: f64,
) -> f64 {
    let v_inf = pot.v_inf();
    let dist = |cos_g: f64| -> f64 {
        (big_r * big_r + rho * rho + 2.0 * big_r * rho * cos_g).max(0.0).sqrt()
    };
    if dim == 2 {
        // Uniform trapezoid on the circle: spectrally accurate.
        let k = 512;
        let mut acc = 0.0;
        for i in 0..k {
            let g = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            acc += pot.value(dist(g.cos())) - v_inf;
        }
        acc / k as f64
    } else {
        // ∫₀^π f(cos γ) sin^{N-2}γ dγ / ∫₀^π sin^{N-2}γ dγ, by Simpson.
        let k = 256;
        let hg = std::f64::consts::PI / k as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..=k {
            let g = i as f64 * hg;
            let w = if i == 0 || i == k {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let sw = g.sin().powi(dim as i32 - 2) * w;
            num += sw * (pot.value(dist(g.cos())) - v_inf);
            den += sw;
        }
        num / den
    }
}

pub fn build_test_tuple(
    big_r: f64,
    config: &PinwheelConfig,
    omega: &GroundState,
    pot: &RadialPotential,
    grid: &Arc<PolarGrid>,
) -> Result<TestTuple> {
    let (_, lambda) = well_params(pot)?;
    let d = config.min_chord();
    if !(lambda > 0.0 && lambda < d) {
        return Err(Error::Config(format!(
            "decay rate {lambda} outside (0, {d}) for this symmetry class"
        )));
    }
    let varrho = (d + lambda) / 4.0;
    let eps = default_cutoff_eps(config, lambda);
    let support = varrho * big_r;

    // Pairwise disjointness of all ℓn balls and containment in the domain.
    let chord_all = 2.0 * big_r * (std::f64::consts::PI / config.group_order() as f64).sin();
    if 2.0 * support >= chord_all {
        return Err(Error::Overlap(format!(
            "support diameter {} exceeds minimal center distance {}",
            2.0 * support,
            chord_all
        )));
    }
    if big_r + support >= grid.r_max {
        return Err(Error::Overlap(format!(
            "support reaches past the truncation radius ({} >= {})",
            big_r + support,
            grid.r_max
        )));
    }
    if support >= *omega.radii.last().unwrap() {
        return Err(Error::Config("profile grid shorter than the support radius".into()));
    }

    // 1D quadrature of the cutoff profile on its own grid.
    let rg = RadialGrid::new(omega.dim, *omega.radii.last().unwrap(), omega.radii.len() - 1)?;
    let cut: Vec<f64> = omega
        .radii
        .iter()
        .zip(&omega.profile)
        .map(|(r, w)| cutoff(r / support, eps) * w)
        .collect();
    let p = config.p;
    let q_inf = rg.dirichlet_form(&cut) + omega.v_const * rg.weighted_sum(&cut, |x| x * x);
    let s_2p = rg.weighted_sum(&cut, |x| x.abs().powf(2.0 * p));
    // Potential correction ∫ (V - V_∞) ω_{ϱR}(x - c)² dx around one center.
    let mut w_corr = 0.0;
    for (i, rho) in rg.radii.iter().enumerate() {
        if *rho > support {
            break;
        }
        let avg = sphere_average_potential_gap(pot, omega.dim, big_r, *rho);
        w_corr += rg.weights[i] * cut[i] * cut[i] * avg;
    }

    let nf = config.n as f64;
    let q = nf * (q_inf + w_corr);
    let s = nf * s_2p;
    if !(s > 0.0) || !(q > 0.0) {
        return Err(Error::NonpositiveDenominator { denominator: s, self_term: s });
    }
    let t = (q / s).powf(1.0 / (2.0 * p - 2.0));
    let energy = (p - 1.0) / (2.0 * p) * config.ell as f64 * t * t * q;

    // Materialize on the grid: bumps at the component-1 pinwheel points.
    let centers = &orbit_points(big_r, config.ell, config.n)[0];
    let mut field = ComponentField::from_fn(grid, |x, y, s| {
        let mut acc = 0.0;
        for c in centers {
            let rho = ((x - c[0]).powi(2) + (y - c[1]).powi(2) + s * s).sqrt();
            if rho < support {
                acc += cutoff(rho / support, eps) * omega.eval(rho);
            }
        }
        t * acc
    });
    field.zero_dirichlet();

    // Coupling integrals on the grid must vanish identically.
    let model = EnergyModel::new(grid, *config, pot)?;
    let terms = model.terms(&field);
    let grid_overlap_max = terms.coupling.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if grid_overlap_max != 0.0 {
        return Err(Error::Overlap(format!(
            "grid coupling integrals are nonzero (max {grid_overlap_max:.3e})"
        )));
    }

    Ok(TestTuple { field, energy, t, support_radius: support, eps, grid_overlap_max })
}

/// Exponential fit of the gap ℓn·c_∞ - E(R).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted rate of the gap, to compare with λ√V_∞.
    pub rate: f64,
    pub intercept: f64,
    pub gaps: Vec<f64>,
}

pub fn decay_fit(samples: &[(f64, f64)], c_inf: f64, config: &PinwheelConfig) -> Result<DecayFit> {
    if samples.len() < 3 {
        return Err(Error::Underdetermined(format!(
            "need at least 3 samples for the rate fit, got {}",
            samples.len()
        )));
    }
    let level = config.group_order() as f64 * c_inf;
    let mut gaps = Vec::with_capacity(samples.len());
    for (r, e) in samples {
        let gap = level - e;
        if !(gap > 0.0) {
            return Err(Error::Config(format!(
                "energy bound fails at R = {r}: E = {e} is not below {level}"
            )));
        }
        gaps.push(gap);
    }
    let xs: Vec<f64> = samples.iter().map(|(r, _)| *r).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    Ok(DecayFit { rate: -slope, intercept, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;

    #[test]
    fn soliton_energy_in_one_dimension() {
        // -u'' + u = u³ on the line has the even solution √2 sech(x) with
        // ‖u‖² = 16/3 and energy (1/4)‖u‖² = 4/3. Check the analytic profile
        // through the discrete quadratures first, then the solver.
        let grid = RadialGrid::new(1, 16.0, 800).unwrap();
        let analytic: Vec<f64> =
            grid.radii.iter().map(|r| 2.0_f64.sqrt() / r.cosh()).collect();
        let ones = vec![1.0; grid.len()];
        let (q, s) = radial_terms(&grid, &analytic, &ones, 2.0);
        assert!((q - 16.0 / 3.0).abs() < 2e-3, "analytic norm {q}");
        assert!((s - 16.0 / 3.0).abs() < 2e-3, "analytic 4-norm {s}");

        let gs = ground_state_radial(&grid, 1.0, 2.0).unwrap();
        assert!((gs.energy - 4.0 / 3.0).abs() < 1e-3, "energy {}", gs.energy);
        assert!(gs.residual_max < 1e-6);
        // Nehari identity at the solution.
        assert!((gs.norm_sq - gs.lp_2p).abs() < 1e-8 * gs.norm_sq);
        // Positive, decreasing tail.
        assert!(gs.profile[..400].iter().all(|&x| x > 0.0));
        assert!(gs.profile[100] < gs.profile[50]);
    }

    #[test]
    fn zero_initial_guess_fails() {
        let grid = RadialGrid::new(2, 10.0, 64).unwrap();
        let zero = vec![0.0; grid.len()];
        assert!(matches!(
            ground_state_radial_from(&grid, |_| 1.0, 2.0, &zero),
            Err(Error::NonpositiveDenominator { .. })
        ));
    }

    #[test]
    fn radial_well_state_sits_below_limit_state() {
        let grid = RadialGrid::new(2, 12.0, 512).unwrap();
        let pot = RadialPotential::default_well(2, 1);
        let well = ground_state_radial_v(&grid, &pot, 2.0).unwrap();
        let limit = ground_state_radial(&grid, 1.0, 2.0).unwrap();
        assert!(well.energy < limit.energy);
    }

    #[test]
    fn planar_ground_state_stable_under_refinement() {
        let coarse = {
            let g = RadialGrid::new(2, 10.0, 256).unwrap();
            ground_state_radial(&g, 1.0, 2.0).unwrap().energy
        };
        let fine = {
            let g = RadialGrid::new(2, 10.0, 512).unwrap();
            ground_state_radial(&g, 1.0, 2.0).unwrap().energy
        };
        let rel = (coarse - fine).abs() / fine;
        assert!(rel < 1e-3, "relative drift {rel} ({coarse} vs {fine})");
    }

    #[test]
    fn cutoff_shape() {
        let eps = 0.25;
        assert_eq!(cutoff(0.5, eps), 1.0);
        assert_eq!(cutoff(0.75, eps), 1.0);
        assert_eq!(cutoff(1.0, eps), 0.0);
        assert_eq!(cutoff(1.5, eps), 0.0);
        let mid = cutoff(0.875, eps);
        assert!(mid > 0.0 && mid < 1.0);
        // Monotone on the taper.
        let mut prev = 1.0;
        for i in 0..=20 {
            let t = 0.75 + 0.25 * i as f64 / 20.0;
            let c = cutoff(t, eps);
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }

    #[test]
    fn truncate_support_and_identity_regions() {
        let rgrid = RadialGrid::new(2, 20.0, 1500).unwrap();
        let omega = ground_state_radial(&rgrid, 1.0, 2.0).unwrap();
        let grid = PolarGrid::build(GridParams::plane(80, 12, 16.0, 2, 1)).unwrap();
        let eps = 0.15;
        let r = 12.5;
        let field = truncate(&omega, r, eps, &grid).unwrap();
        for i in 0..=grid.nr {
            let rho = grid.radius(i);
            let val = field.at(i, 3, 0);
            if rho > r {
                assert_eq!(val, 0.0, "outside support at rho={rho}");
            } else if rho < (1.0 - eps) * r {
                assert_eq!(val, omega.eval(rho), "plateau at rho={rho}");
            }
        }
        // Large r: relative truncation error of the squared norm is tiny.
        let pot = RadialPotential::constant(1.0);
        let full = ComponentField::from_fn(&grid, |x, y, _| omega.eval((x * x + y * y).sqrt()));
        let mut diff = field.clone();
        diff.add_scaled(-1.0, &full);
        let num = grid.inner_product_v(&diff, &diff, &pot);
        let den = grid.inner_product_v(&full, &full, &pot);
        assert!(num < 1e-8 * den, "truncation leak {num} vs {den}");
    }

    #[test]
    fn truncate_monotone_in_radius() {
        let rgrid = RadialGrid::new(2, 16.0, 1200).unwrap();
        let omega = ground_state_radial(&rgrid, 1.0, 2.0).unwrap();
        let grid = PolarGrid::build(GridParams::plane(64, 12, 12.0, 2, 1)).unwrap();
        let pot = RadialPotential::constant(1.0);
        let full = ComponentField::from_fn(&grid, |x, y, _| omega.eval((x * x + y * y).sqrt()));
        let mut prev = f64::INFINITY;
        for r in [3.0, 5.0, 8.0] {
            let field = truncate(&omega, r, 0.2, &grid).unwrap();
            let mut diff = field;
            diff.add_scaled(-1.0, &full);
            let err = grid.inner_product_v(&diff, &diff, &pot);
            assert!(err <= prev);
            prev = err;
        }
    }

    #[test]
    fn centered_polar_solve_matches_radial_limit_energy() {
        // Constant potential: the translation-free (centered) minimizer of
        // the polar solver must reproduce the 1D radial energy.
        let rg = RadialGrid::new(2, 12.0, 768).unwrap();
        let c_inf = ground_state_radial(&rg, 1.0, 2.0).unwrap().energy;
        let grid = PolarGrid::build(GridParams::plane(256, 8, 12.0, 2, 1)).unwrap();
        let pot = RadialPotential::constant(1.0);
        let cfg = PinwheelConfig::scalar_gn(1, 2, 2.0).unwrap();
        let centered = ComponentField::gaussian_bumps(&grid, &[[0.0, 0.0]], 1.0, 1.0);
        let opts = crate::solver::SolveOptions {
            c_inf: Some(c_inf),
            max_iters: 40_000,
            ..Default::default()
        };
        let rep = crate::solver::minimize(&cfg, &pot, &grid, &centered, &opts).unwrap();
        assert!(rep.converged());
        let rel = (rep.energy - c_inf).abs() / c_inf;
        assert!(rel < 1e-3, "polar {} vs radial {c_inf} (rel {rel:.2e})", rep.energy);
    }

    #[test]
    fn test_tuple_rejects_overflowing_support() {
        let rg = RadialGrid::new(2, 18.0, 1200).unwrap();
        let omega = ground_state_radial(&rg, 1.0, 2.0).unwrap();
        let cfg = PinwheelConfig::new(2, 1, 2, 2.0, -1.0).unwrap();
        let pot = RadialPotential::default_well(2, 1);
        let grid = PolarGrid::build(GridParams::plane(64, 12, 12.0, 2, 1)).unwrap();
        // R(1 + ϱ) exceeds the truncation radius.
        assert!(matches!(
            build_test_tuple(8.0, &cfg, &omega, &pot, &grid),
            Err(Error::Overlap(_))
        ));
        // A fitting radius works.
        assert!(build_test_tuple(6.0, &cfg, &omega, &pot, &grid).is_ok());
    }

    #[test]
    fn decay_fit_recovers_synthetic_rate() {
        let cfg = PinwheelConfig::new(2, 1, 2, 2.0, -1.0).unwrap();
        let c_inf = 1.5;
        let level = 2.0 * c_inf;
        let samples: Vec<(f64, f64)> = [8.0_f64, 10.0, 12.0, 14.0]
            .iter()
            .map(|r| (*r, level - (-0.7 * r).exp()))
            .collect();
        let fit = decay_fit(&samples, c_inf, &cfg).unwrap();
        assert!((fit.rate - 0.7).abs() < 1e-6, "rate {}", fit.rate);
    }

    #[test]
    fn decay_fit_needs_three_samples() {
        let cfg = PinwheelConfig::new(2, 1, 2, 2.0, -1.0).unwrap();
        let samples = vec![(8.0, 1.0), (10.0, 1.1)];
        assert!(matches!(decay_fit(&samples, 1.0, &cfg), Err(Error::Underdetermined(_))));
    }

    #[test]
    fn decay_fit_rejects_nonpositive_gap() {
        let cfg = PinwheelConfig::new(2, 1, 2, 2.0, -1.0).unwrap();
        let samples = vec![(8.0, 1.0), (10.0, 2.0), (12.0, 3.5)];
        // Level is 2·1.5 = 3: the last sample exceeds it.
        assert!(decay_fit(&samples, 1.5, &cfg).is_err());
    }
}
