//! Segregation analysis in the strong-competition regime: support
//! extraction, interface diagnostics, and the two-component sign-changing
//! correspondence u₁ - u₂.

use crate::error::{Error, Result};
use crate::functional::EnergyModel;
use crate::grid::ComponentField;
use crate::potential::RadialPotential;
use crate::solver::SolveReport;
use crate::symmetry::{component_shifts, PinwheelConfig};
use serde::Serialize;

/// Node mask in field storage order (pole per slab, then rings).
#[derive(Debug, Clone)]
pub struct Mask {
    pub pole: Vec<bool>,
    pub vals: Vec<bool>,
}

/// Thresholded supports and their bulk statistics. The component-1 mask is
/// stored; every other component mask is its rotation by construction.
#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub mask: Mask,
    /// Absolute threshold used (relative threshold × max u₁).
    pub threshold_abs: f64,
    /// Measure of ∪_j Ω_j over the measure of the truncated domain.
    pub coverage: f64,
    /// Nodes claimed by two or more components.
    pub violations: usize,
    /// (p-1)/(2p)‖restricted, reprojected u₁‖²_V per component (all equal).
    pub component_energies: Vec<f64>,
}

/// Per-node interface record: one-sided gradient magnitudes into the two
/// adjacent supports.
#[derive(Debug, Clone, Serialize)]
pub struct InterfaceSample {
    pub ring: usize,
    pub j: usize,
    pub slab: usize,
    pub grad_i: f64,
    pub grad_j: f64,
    pub mismatch: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InterfaceReport {
    pub samples: Vec<InterfaceSample>,
    pub median_gradient: f64,
    pub median_mismatch: f64,
    pub q25_mismatch: f64,
    pub q75_mismatch: f64,
    pub max_mismatch: f64,
}

/// One row per coupling of a segregation sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SegregationRow {
    pub beta: f64,
    /// Adjacent-component overlap O₁₂ = ∫|u₁|^p|u₂|^p.
    pub overlap: f64,
    pub beta_overlap: f64,
    /// Min over interface nodes of the pointwise product u₁u₂.
    pub min_interface_product: f64,
    pub component_energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegregationTable {
    pub rows: Vec<SegregationRow>,
    /// O₁₂ strictly decreasing along the schedule.
    pub overlap_decreasing: bool,
    /// |β·O₁₂| decreasing over the last step.
    pub beta_overlap_tail_decreasing: bool,
}

/// Sign-changing difference w = u₁ - u₂ for two components.
#[derive(Debug)]
pub struct SignChangingReport {
    pub field: ComponentField,
    /// Max norm of -Δw + Vw - |w|^{2p-2}w over free nodes.
    pub equation_residual_max: f64,
    /// Max of |w(e^{iπ/n}z) + w(z)|: exact 0 by the shift structure.
    pub antisymmetry_deviation: f64,
    /// Relative error of (p-1)/(2p)(‖u₁‖² + ‖u₂‖²) = J(w).
    pub energy_identity_rel_error: f64,
}

fn node_masked(u: &ComponentField, thr: f64, ring: usize, j: usize, k: usize) -> bool {
    u.at(ring, j, k) > thr
}

/// Extract the thresholded supports Ω₁ = {u₁ > threshold·max u₁} and their
/// rotations.
pub fn extract_partition(
    u1: &ComponentField,
    config: &PinwheelConfig,
    pot: &RadialPotential,
    threshold_rel: f64,
) -> Result<PartitionResult> {
    if !(threshold_rel > 0.0) {
        return Err(Error::Config(format!("threshold must be positive, got {threshold_rel}")));
    }
    let g = u1.grid_arc();
    let peak = u1.max_value();
    let thr = threshold_rel * peak;
    if !(peak > 0.0) || thr >= peak {
        return Err(Error::EmptySupport(format!(
            "threshold {threshold_rel} × max {peak} leaves no support"
        )));
    }
    let shifts = component_shifts(g.m, config.ell)?;

    let mut mask = Mask { pole: vec![false; g.ns], vals: vec![false; g.nr * g.m * g.ns] };
    for k in 0..g.ns {
        mask.pole[k] = u1.pole(k) > thr;
    }
    let mut covered = 0.0;
    let mut violations = 0usize;
    let mut total = 0.0;
    for k in 0..g.ns {
        // Pole: all components share the value, so either none or all claim it.
        total += g.pole_weight(k);
        if mask.pole[k] {
            covered += g.pole_weight(k);
            if config.ell > 1 {
                violations += 1;
            }
        }
        for i in 1..=g.nr {
            let w = g.weight(i, k);
            for j in 0..g.m {
                total += w;
                let mut claims = 0usize;
                for sh in &shifts {
                    if node_masked(u1, thr, i, (j + sh) % g.m, k) {
                        claims += 1;
                    }
                }
                if node_masked(u1, thr, i, j, k) {
                    let idx = ((i - 1) * g.m + j) * g.ns + k;
                    mask.vals[idx] = true;
                }
                if claims >= 1 {
                    covered += w;
                }
                if claims >= 2 {
                    violations += 1;
                }
            }
        }
    }

    // Restrict u₁ to its support, reproject onto the scalar Nehari set.
    let mut restricted = u1.clone();
    {
        for k in 0..g.ns {
            if !mask.pole[k] {
                restricted.set(0, 0, k, 0.0);
            }
        }
        for i in 1..=g.nr {
            for j in 0..g.m {
                for k in 0..g.ns {
                    let idx = ((i - 1) * g.m + j) * g.ns + k;
                    if !mask.vals[idx] {
                        restricted.set(i, j, k, 0.0);
                    }
                }
            }
        }
    }
    let scalar_cfg = PinwheelConfig::scalar_gn(config.n, config.dim, config.p)?;
    let model = EnergyModel::new(&g, scalar_cfg, pot)?;
    let s = model.nehari_scalar(&restricted)?;
    let mut projected = restricted;
    projected.scale(s);
    let c_omega = model.component_energy(&projected);

    Ok(PartitionResult {
        mask,
        threshold_abs: thr,
        coverage: covered / total,
        violations,
        component_energies: vec![c_omega; config.ell],
    })
}

struct Neighbor {
    ring: usize,
    j: usize,
    slab: usize,
    dist: f64,
}

fn neighbors(g: &crate::grid::PolarGrid, ring: usize, j: usize, k: usize) -> Vec<Neighbor> {
    let mut out = Vec::with_capacity(6);
    if ring == 0 {
        // The pole touches the whole first ring.
        for jj in 0..g.m {
            out.push(Neighbor { ring: 1, j: jj, slab: k, dist: g.dr });
        }
    } else {
        if ring > 1 {
            out.push(Neighbor { ring: ring - 1, j, slab: k, dist: g.dr });
        } else {
            out.push(Neighbor { ring: 0, j: 0, slab: k, dist: g.dr });
        }
        if ring < g.nr {
            out.push(Neighbor { ring: ring + 1, j, slab: k, dist: g.dr });
        }
        if g.m > 1 {
            let arc = g.radius(ring) * g.dtheta;
            out.push(Neighbor { ring, j: (j + 1) % g.m, slab: k, dist: arc });
            out.push(Neighbor { ring, j: (j + g.m - 1) % g.m, slab: k, dist: arc });
        }
    }
    if g.ns > 1 {
        if k > 0 {
            out.push(Neighbor { ring, j, slab: k - 1, dist: g.ds });
        }
        if k + 1 < g.ns {
            out.push(Neighbor { ring, j, slab: k + 1, dist: g.ds });
        }
    }
    out
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

/// One-sided gradient magnitudes at nodes adjacent to two distinct
/// supports. Qualitative only: first-order differences into each side.
pub fn interface_diagnostics(
    u1: &ComponentField,
    config: &PinwheelConfig,
    result: &PartitionResult,
) -> Result<InterfaceReport> {
    let g = u1.grid_arc();
    let shifts = component_shifts(g.m, config.ell)?;
    let thr = result.threshold_abs;
    let in_support = |comp: usize, ring: usize, j: usize, k: usize| -> bool {
        if ring == 0 {
            return result.mask.pole[k];
        }
        u1.at(ring, (j + shifts[comp]) % g.m, k) > thr
    };
    // One-sided |∇u_comp| at (ring, j, k): steepest first-order difference
    // into the support of that component.
    let one_sided = |comp: usize, ring: usize, j: usize, k: usize| -> f64 {
        let here = u1.at(ring, if ring == 0 { 0 } else { (j + shifts[comp]) % g.m }, k);
        let mut best = 0.0_f64;
        for nb in neighbors(&g, ring, j, k) {
            if in_support(comp, nb.ring, nb.j, nb.slab) {
                let jj = if nb.ring == 0 { 0 } else { (nb.j + shifts[comp]) % g.m };
                let there = u1.at(nb.ring, jj, nb.slab);
                best = best.max((there - here).abs() / nb.dist);
            }
        }
        best
    };

    let mut samples = Vec::new();
    // Gap nodes: in no support, adjacent to at least two. One-sided slopes
    // measured from the shared node into each side.
    let mut push_gap_node = |ring: usize, j: usize, k: usize| {
        if (0..config.ell).any(|c| in_support(c, ring, j, k)) {
            return;
        }
        let mut adjacent: Vec<usize> = Vec::new();
        for comp in 0..config.ell {
            let touches = neighbors(&g, ring, j, k)
                .into_iter()
                .any(|nb| in_support(comp, nb.ring, nb.j, nb.slab));
            if touches {
                adjacent.push(comp);
            }
        }
        if adjacent.len() < 2 {
            return;
        }
        let mut grads: Vec<(f64, usize)> =
            adjacent.iter().map(|c| (one_sided(*c, ring, j, k), *c)).collect();
        grads.sort_by(|a, b| b.0.total_cmp(&a.0));
        samples.push(InterfaceSample {
            ring,
            j,
            slab: k,
            grad_i: grads[0].0,
            grad_j: grads[1].0,
            mismatch: (grads[0].0 - grads[1].0).abs(),
        });
    };
    for k in 0..g.ns {
        push_gap_node(0, 0, k);
        for i in 1..=g.nr {
            for j in 0..g.m {
                push_gap_node(i, j, k);
            }
        }
    }

    // Edge pairs: the interface crosses between two nodes in distinct
    // supports. Both components vanish at the crossing, so the one-sided
    // slopes are 2u/dist, symmetric about the midpoint.
    let dominant = |ring: usize, j: usize, k: usize| -> Option<usize> {
        (0..config.ell).find(|c| in_support(*c, ring, j, k))
    };
    for k in 0..g.ns {
        for i in 1..=g.nr {
            for j in 0..g.m {
                let Some(ci) = dominant(i, j, k) else { continue };
                for nb in neighbors(&g, i, j, k) {
                    if (nb.ring, nb.j, nb.slab) <= (i, j, k) {
                        continue;
                    }
                    let Some(cj) = dominant(nb.ring, nb.j, nb.slab) else { continue };
                    if cj == ci {
                        continue;
                    }
                    let here = u1.at(i, (j + shifts[ci]) % g.m, k);
                    let jj = if nb.ring == 0 { 0 } else { (nb.j + shifts[cj]) % g.m };
                    let there = u1.at(nb.ring, jj, nb.slab);
                    let gi = 2.0 * here.abs() / nb.dist;
                    let gj = 2.0 * there.abs() / nb.dist;
                    samples.push(InterfaceSample {
                        ring: i,
                        j,
                        slab: k,
                        grad_i: gi.max(gj),
                        grad_j: gi.min(gj),
                        mismatch: (gi - gj).abs(),
                    });
                }
            }
        }
    }

    if samples.is_empty() {
        return Ok(InterfaceReport {
            samples,
            median_gradient: f64::NAN,
            median_mismatch: f64::NAN,
            q25_mismatch: f64::NAN,
            q75_mismatch: f64::NAN,
            max_mismatch: f64::NAN,
        });
    }
    let mut grads: Vec<f64> = samples.iter().flat_map(|s| [s.grad_i, s.grad_j]).collect();
    grads.sort_by(f64::total_cmp);
    let mut mismatches: Vec<f64> = samples.iter().map(|s| s.mismatch).collect();
    mismatches.sort_by(f64::total_cmp);
    Ok(InterfaceReport {
        median_gradient: quantile(&grads, 0.5),
        median_mismatch: quantile(&mismatches, 0.5),
        q25_mismatch: quantile(&mismatches, 0.25),
        q75_mismatch: quantile(&mismatches, 0.75),
        max_mismatch: *mismatches.last().unwrap(),
        samples,
    })
}

/// Per-coupling segregation table over a sweep toward -∞.
pub fn segregation_trace(
    reports: &[SolveReport],
    config: &PinwheelConfig,
    pot: &RadialPotential,
    threshold_rel: f64,
) -> Result<SegregationTable> {
    if reports.is_empty() {
        return Err(Error::Underdetermined("no reports".into()));
    }
    let mut rows = Vec::with_capacity(reports.len());
    for rep in reports {
        let overlap = rep.overlap.first().copied().unwrap_or(0.0);
        let min_product = match extract_partition(&rep.field, config, pot, threshold_rel) {
            Ok(part) => {
                let diag = interface_diagnostics(&rep.field, config, &part)?;
                let g = rep.field.grid_arc();
                let shifts = component_shifts(g.m, config.ell)?;
                diag.samples
                    .iter()
                    .map(|s| {
                        let a = rep.field.at(s.ring, s.j, s.slab);
                        let b = if s.ring == 0 {
                            rep.field.pole(s.slab)
                        } else {
                            rep.field.at(s.ring, (s.j + shifts[1]) % g.m, s.slab)
                        };
                        a * b
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            Err(_) => f64::NAN,
        };
        rows.push(SegregationRow {
            beta: rep.beta,
            overlap,
            beta_overlap: rep.beta * overlap,
            min_interface_product: min_product,
            component_energy: rep.component_energy,
        });
    }
    let overlap_decreasing =
        rows.len() < 2 || rows.windows(2).all(|w| w[1].overlap < w[0].overlap);
    let beta_overlap_tail_decreasing = rows.len() < 2 || {
        let a = rows[rows.len() - 2].beta_overlap.abs();
        let b = rows[rows.len() - 1].beta_overlap.abs();
        b < a
    };
    Ok(SegregationTable { rows, overlap_decreasing, beta_overlap_tail_decreasing })
}

/// The sign-changing correspondence (u₁, u₂) ↦ u₁ - u₂ for ℓ = 2.
pub fn sign_changing(
    u1: &ComponentField,
    config: &PinwheelConfig,
    pot: &RadialPotential,
) -> Result<SignChangingReport> {
    if config.ell != 2 {
        return Err(Error::Config(format!(
            "the sign-changing map needs exactly 2 components, got {}",
            config.ell
        )));
    }
    let g = u1.grid_arc();
    let shifts = component_shifts(g.m, 2)?;
    let u2 = u1.shifted(shifts[1]);
    let mut w = u1.clone();
    w.add_scaled(-1.0, &u2);

    // Scalar equation residual via the single-component gradient.
    let scalar_cfg = PinwheelConfig::scalar_gn(config.n, config.dim, config.p)?;
    let model = EnergyModel::new(&g, scalar_cfg, pot)?;
    let residual = model.gradient(&w).max_abs();

    // τ_n-antisymmetry: w(e^{iπ/n} z) = -w(z); the rotation is the shift by
    // M/2, under which w maps to u₂ - u₁ exactly.
    let rotated = w.shifted(shifts[1]);
    let mut sum = rotated;
    sum.add_scaled(1.0, &w);
    let antisymmetry_deviation = sum.max_abs();

    // Energy identity (p-1)/(2p)(‖u₁‖² + ‖u₂‖²) = J(w).
    let q1 = g.inner_product_v(u1, u1, pot);
    let lhs = (config.p - 1.0) / config.p * q1; // two equal components
    let qw = g.inner_product_v(&w, &w, pot);
    let p = config.p;
    let s2p = {
        let mut acc = 0.0;
        for k in 0..g.ns {
            acc += g.pole_weight(k) * w.pole(k).abs().powf(2.0 * p);
            for i in 1..=g.nr {
                let wt = g.weight(i, k);
                for j in 0..g.m {
                    acc += wt * w.at(i, j, k).abs().powf(2.0 * p);
                }
            }
        }
        acc
    };
    let j_w = 0.5 * qw - s2p / (2.0 * p);
    let energy_identity_rel_error = (lhs - j_w).abs() / lhs.abs().max(f64::MIN_POSITIVE);

    Ok(SignChangingReport {
        field: w,
        equation_residual_max: residual,
        antisymmetry_deviation,
        energy_identity_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridParams, PolarGrid};
    use std::sync::Arc;

    fn setup() -> (Arc<PolarGrid>, PinwheelConfig, RadialPotential) {
        let cfg = PinwheelConfig::new(2, 1, 2, 2.0, -1.0).unwrap();
        let grid = PolarGrid::build(GridParams::plane(48, 16, 10.0, 2, 1)).unwrap();
        let pot = RadialPotential::default_well(2, 1);
        (grid, cfg, pot)
    }

    /// Disjoint two-bump configuration (the second component is the
    /// π-rotation of the first).
    fn disjoint_pair(grid: &Arc<PolarGrid>) -> ComponentField {
        let mut f = ComponentField::gaussian_bumps(grid, &[[4.0, 0.0]], 0.6, 1.0);
        let (pole, vals) = f.raw_mut();
        for v in pole.iter_mut().chain(vals.iter_mut()) {
            if *v < 1e-10 {
                *v = 0.0;
            }
        }
        f
    }

    #[test]
    fn extract_partition_counts_disjoint_supports() {
        let (grid, cfg, pot) = setup();
        let f = disjoint_pair(&grid);
        let part = extract_partition(&f, &cfg, &pot, 1e-3).unwrap();
        assert_eq!(part.violations, 0);
        assert!(part.coverage > 0.0 && part.coverage < 0.5);
        // Oracle: direct node count of the union against the reported
        // coverage.
        let thr = part.threshold_abs;
        let mut covered = 0.0;
        let mut total = 0.0;
        for k in 0..grid.ns {
            total += grid.pole_weight(k);
            if f.pole(k) > thr {
                covered += grid.pole_weight(k);
            }
            for i in 1..=grid.nr {
                for j in 0..grid.m {
                    total += grid.weight(i, k);
                    let a = f.at(i, j, k) > thr;
                    let b = f.at(i, (j + grid.m / 2) % grid.m, k) > thr;
                    if a || b {
                        covered += grid.weight(i, k);
                    }
                }
            }
        }
        let expected = covered / total;
        assert!((part.coverage - expected).abs() < 1e-12);
    }

    #[test]
    fn extract_partition_rejects_threshold_above_max() {
        let (grid, cfg, pot) = setup();
        let f = disjoint_pair(&grid);
        assert!(matches!(
            extract_partition(&f, &cfg, &pot, 2.0),
            Err(Error::EmptySupport(_))
        ));
        assert!(extract_partition(&f, &cfg, &pot, 0.0).is_err());
    }

    #[test]
    fn coverage_monotone_in_threshold() {
        let (grid, cfg, pot) = setup();
        let f = disjoint_pair(&grid);
        let mut prev = f64::INFINITY;
        for thr in [1e-4, 1e-2, 0.3, 0.9] {
            let part = extract_partition(&f, &cfg, &pot, thr).unwrap();
            assert!(part.coverage <= prev);
            prev = part.coverage;
        }
    }

    #[test]
    fn interface_empty_for_far_apart_bumps() {
        let (grid, cfg, pot) = setup();
        let f = disjoint_pair(&grid);
        let part = extract_partition(&f, &cfg, &pot, 1e-2).unwrap();
        let diag = interface_diagnostics(&f, &cfg, &part).unwrap();
        assert!(diag.samples.is_empty());
    }

    #[test]
    fn linear_wedge_pair_has_matching_one_sided_gradients() {
        // u₁ = (x)₊ and u₂ = (-x)₊ form an exact pinwheel pair (ℓ=2, n=1):
        // one-sided slopes 1 on both sides of the y-axis interface.
        let cfg = PinwheelConfig::new(2, 1, 2, 2.0, -1.0).unwrap();
        let grid = PolarGrid::build(GridParams::plane(64, 256, 8.0, 2, 1)).unwrap();
        let pot = RadialPotential::default_well(2, 1);
        let f = ComponentField::from_fn(&grid, |x, _, _| x.max(0.0));
        let part = extract_partition(&f, &cfg, &pot, 1e-6).unwrap();
        let diag = interface_diagnostics(&f, &cfg, &part).unwrap();
        assert!(!diag.samples.is_empty());
        assert!(diag.median_mismatch < 1e-10, "mismatch {}", diag.median_mismatch);
        assert!((diag.median_gradient - 1.0).abs() < 1e-2, "grad {}", diag.median_gradient);
    }

    #[test]
    fn sign_changing_identities_for_disjoint_pair() {
        let (grid, cfg, pot) = setup();
        // Put the pair on the scalar Nehari set component-wise so the
        // energy identity is exact algebra.
        let raw = disjoint_pair(&grid);
        let scalar_cfg = PinwheelConfig::scalar_gn(1, 2, 2.0).unwrap();
        let model = EnergyModel::new(&grid, scalar_cfg, &pot).unwrap();
        let s = model.nehari_scalar(&raw).unwrap();
        let mut u1 = raw;
        u1.scale(s);
        let rep = sign_changing(&u1, &cfg, &pot).unwrap();
        assert_eq!(rep.antisymmetry_deviation, 0.0);
        assert!(
            rep.energy_identity_rel_error < 1e-10,
            "identity error {}",
            rep.energy_identity_rel_error
        );
    }

    #[test]
    fn sign_changing_degenerate_equal_components() {
        let (grid, cfg, pot) = setup();
        let radial = ComponentField::from_radial(&grid, |r| (-r * r).exp());
        let rep = sign_changing(&radial, &cfg, &pot).unwrap();
        assert_eq!(rep.field.max_abs(), 0.0);
        assert_eq!(rep.equation_residual_max, 0.0);
        assert_eq!(rep.antisymmetry_deviation, 0.0);
    }

    #[test]
    fn sign_changing_requires_two_components() {
        let (grid, _, pot) = setup();
        let cfg3 = PinwheelConfig::new(4, 1, 2, 2.0, -1.0).unwrap();
        let f = ComponentField::gaussian_bumps(&grid, &[[3.0, 0.0]], 0.5, 1.0);
        assert!(sign_changing(&f, &cfg3, &pot).is_err());
    }

    #[test]
    fn segregation_trace_single_report() {
        let (grid, cfg, pot) = setup();
        let f = disjoint_pair(&grid);
        let opts = crate::solver::SolveOptions {
            tol: Some(1e-3),
            max_iters: 5_000,
            ..Default::default()
        };
        let rep = crate::solver::minimize(&cfg, &pot, &grid, &f, &opts).unwrap();
        let table = segregation_trace(&[rep], &cfg, &pot, 1e-3).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.overlap_decreasing);
    }
}
