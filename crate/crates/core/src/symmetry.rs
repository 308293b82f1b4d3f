//! The pinwheel group action: ℤ_{ℓn} rotations of the distinguished plane,
//! acting on ℓ-tuples by cyclically permuting components.
//!
//! On a uniform θ-grid covering one period [0, 2π/n) with M nodes, the
//! rotation by 2πj/(ℓn) is exactly the index shift j·M/ℓ (mod M), provided
//! ℓ divides M. All component bookkeeping reduces to that arithmetic.

use crate::error::{Error, Result};
use crate::grid::ComponentField;
use serde::{Deserialize, Serialize};

/// Problem instance: ℓ components, invariance order n, ambient dimension,
/// nonlinearity exponent p and coupling β < 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinwheelConfig {
    /// Number of components ℓ ≥ 2 (ℓ = 1 only through [`PinwheelConfig::scalar_gn`]).
    pub ell: usize,
    /// Invariance order n ≥ 1 of each component in the distinguished plane.
    pub n: usize,
    /// Ambient dimension N ∈ {2} ∪ {4, 5, …}.
    pub dim: usize,
    /// Nonlinearity exponent p, 1 < p, and p < N/(N-2) for N ≥ 3.
    pub p: f64,
    /// Coupling β < 0 (competitive).
    pub beta: f64,
}

impl PinwheelConfig {
    pub fn new(ell: usize, n: usize, dim: usize, p: f64, beta: f64) -> Result<Self> {
        if ell < 2 {
            return Err(Error::Config(format!("need at least 2 components, got {ell}")));
        }
        if !(beta < 0.0) {
            return Err(Error::Config(format!("coupling must be negative, got {beta}")));
        }
        let cfg = Self { ell, n, dim, p, beta };
        cfg.validate_common()?;
        Ok(cfg)
    }

    /// The scalar problem -Δu + V u = |u|^{2p-2}u over G_n-invariant fields,
    /// expressed as the single-component instance of the same machinery.
    /// The coupling sum is empty, so β is irrelevant; it is stored as 0.
    pub fn scalar_gn(n: usize, dim: usize, p: f64) -> Result<Self> {
        let cfg = Self { ell: 1, n, dim, p, beta: 0.0 };
        cfg.validate_common()?;
        Ok(cfg)
    }

    fn validate_common(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("invariance order n must be >= 1".into()));
        }
        if self.dim != 2 && self.dim < 4 {
            return Err(Error::Config(format!(
                "ambient dimension must be 2 or >= 4, got {}",
                self.dim
            )));
        }
        if !(self.p > 1.0) {
            return Err(Error::Config(format!("exponent p must exceed 1, got {}", self.p)));
        }
        if self.dim >= 3 {
            let crit = self.dim as f64 / (self.dim as f64 - 2.0);
            if !(self.p < crit) {
                return Err(Error::Config(format!(
                    "exponent p = {} is not subcritical for dimension {} (need p < {crit})",
                    self.p, self.dim
                )));
            }
        }
        Ok(())
    }

    /// Order ℓn of the rotation group in the distinguished plane.
    pub fn group_order(&self) -> usize {
        self.ell * self.n
    }

    /// Minimal chord between adjacent pinwheel points on the unit circle,
    /// d_{ℓn} = 2 sin(π/ℓn). The admissible potential decay rates are
    /// λ ∈ (0, d_{ℓn}).
    pub fn min_chord(&self) -> f64 {
        2.0 * (std::f64::consts::PI / self.group_order() as f64).sin()
    }
}

/// Index shift realizing the rotation by 2πj/(ℓn) on a θ-grid with M nodes
/// per period 2π/n: returns j·M/ℓ mod M. Fails unless ℓ divides M.
pub fn component_shift(j: usize, m: usize, ell: usize) -> Result<usize> {
    if ell == 0 || m == 0 {
        return Err(Error::Config("component_shift needs ell >= 1 and M >= 1".into()));
    }
    if m % ell != 0 {
        return Err(Error::Divisibility { m, ell });
    }
    Ok((j * (m / ell)) % m)
}

/// All ℓ shifts at once: shift of component i+1 relative to the stored u₁.
pub fn component_shifts(m: usize, ell: usize) -> Result<Vec<usize>> {
    (0..ell).map(|j| component_shift(j, m, ell)).collect()
}

/// The ℓn pinwheel points R·e^{2πi(i+ℓj)/ℓn}, grouped by component:
/// entry i holds the n points belonging to component i+1.
pub fn orbit_points(radius: f64, ell: usize, n: usize) -> Vec<Vec<[f64; 2]>> {
    assert!(radius > 0.0, "orbit radius must be positive");
    let order = (ell * n) as f64;
    (0..ell)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let angle = 2.0 * std::f64::consts::PI * (i + ell * j) as f64 / order;
                    [radius * angle.cos(), radius * angle.sin()]
                })
                .collect()
        })
        .collect()
}

/// Maximum over grid nodes and components of
/// |u_{j+1}(z, y) - u₁(e^{2πij/ℓn} z, y)|, the rotation realized by index
/// shift. Zero exactly when the tuple was generated from u₁ by shifts.
pub fn check_equivariance(fields: &[ComponentField]) -> Result<f64> {
    let first = fields.first().ok_or_else(|| Error::Config("empty tuple".into()))?;
    let grid = first.grid();
    for f in fields {
        if !f.grid().same_layout(grid) {
            return Err(Error::GridMismatch);
        }
    }
    let ell = fields.len();
    let m = grid.m;
    let mut max_dev: f64 = 0.0;
    for (j, field) in fields.iter().enumerate().skip(1) {
        let shift = component_shift(j, m, ell)?;
        // Pole values are rotation invariant.
        for k in 0..grid.ns {
            max_dev = max_dev.max((field.pole(k) - first.pole(k)).abs());
        }
        for i in 1..=grid.nr {
            for jt in 0..m {
                let js = (jt + shift) % m;
                for k in 0..grid.ns {
                    max_dev = max_dev.max((field.at(i, jt, k) - first.at(i, js, k)).abs());
                }
            }
        }
    }
    Ok(max_dev)
}

/// Materialize the full ℓ-tuple from the stored first component.
pub fn tuple_from_component(u1: &ComponentField, ell: usize) -> Result<Vec<ComponentField>> {
    let m = u1.grid().m;
    (0..ell)
        .map(|j| Ok(u1.shifted(component_shift(j, m, ell)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridParams, PolarGrid};
    use crate::util::SplitMix64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn shift_examples() {
        assert_eq!(component_shift(1, 12, 2).unwrap(), 6);
        assert_eq!(component_shift(0, 12, 2).unwrap(), 0);
        assert_eq!(component_shift(3, 12, 4).unwrap(), 9);
    }

    #[test]
    fn shift_rejects_indivisible() {
        assert!(matches!(
            component_shift(1, 13, 2),
            Err(Error::Divisibility { m: 13, ell: 2 })
        ));
    }

    #[test]
    fn shift_of_ell_wraps_to_zero() {
        for (m, ell) in [(12, 2), (12, 3), (20, 4)] {
            assert_eq!(component_shift(ell, m, ell).unwrap(), 0);
        }
    }

    proptest! {
        #[test]
        fn shift_is_group_homomorphism(ell in 1usize..8, mult in 1usize..12, j in 0usize..32, k in 0usize..32) {
            let m = ell * mult;
            let a = component_shift(j % ell, m, ell).unwrap();
            let b = component_shift(k % ell, m, ell).unwrap();
            let c = component_shift((j + k) % ell, m, ell).unwrap();
            prop_assert_eq!((a + b) % m, c);
        }
    }

    #[test]
    fn orbit_angles_two_components() {
        // ℓ=2, n=2: component 1 at angles {0, π}, component 2 at {π/2, 3π/2}.
        let pts = orbit_points(1.0, 2, 2);
        let angles: Vec<Vec<f64>> = pts
            .iter()
            .map(|comp| comp.iter().map(|p| p[1].atan2(p[0]).rem_euclid(2.0 * PI)).collect())
            .collect();
        assert!((angles[0][0] - 0.0).abs() < 1e-12);
        assert!((angles[0][1] - PI).abs() < 1e-12);
        assert!((angles[1][0] - PI / 2.0).abs() < 1e-12);
        assert!((angles[1][1] - 3.0 * PI / 2.0).abs() < 1e-12);

        let pts = orbit_points(1.0, 2, 1);
        assert_eq!(pts[0].len(), 1);
        assert!((pts[0][0][0] - 1.0).abs() < 1e-12);
        assert!((pts[1][0][0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn orbit_min_chord_matches_brute_force() {
        // Oracle: brute-force pairwise distances over the flattened orbit.
        for (ell, n) in [(2, 2), (2, 1), (3, 2), (4, 3)] {
            let r = 1.7;
            let pts: Vec<[f64; 2]> = orbit_points(r, ell, n).into_iter().flatten().collect();
            assert_eq!(pts.len(), ell * n);
            let mut min_d = f64::INFINITY;
            for a in 0..pts.len() {
                for b in (a + 1)..pts.len() {
                    let d = ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt();
                    min_d = min_d.min(d);
                }
            }
            let expected = r * 2.0 * (PI / (ell * n) as f64).sin();
            assert!((min_d - expected).abs() < 1e-12, "ell={ell} n={n}: {min_d} vs {expected}");
        }
        // ℓ=2, n=2 on the unit circle: minimal chord √2.
        let pts: Vec<[f64; 2]> = orbit_points(1.0, 2, 2).into_iter().flatten().collect();
        let mut min_d = f64::INFINITY;
        for a in 0..pts.len() {
            for b in (a + 1)..pts.len() {
                let d = ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt();
                min_d = min_d.min(d);
            }
        }
        assert!((min_d - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn orbit_invariant_under_group_rotation() {
        // Rotating everything by 2π/(ℓn) permutes components cyclically.
        let (ell, n) = (3, 2);
        let pts = orbit_points(1.0, ell, n);
        let phi = 2.0 * PI / (ell * n) as f64;
        for i in 0..ell {
            let target = &pts[(i + 1) % ell];
            for p in &pts[i] {
                let rotated = [
                    p[0] * phi.cos() - p[1] * phi.sin(),
                    p[0] * phi.sin() + p[1] * phi.cos(),
                ];
                let hit = target
                    .iter()
                    .any(|q| (q[0] - rotated[0]).abs() + (q[1] - rotated[1]).abs() < 1e-10);
                assert!(hit, "rotated point of component {i} missing in component {}", (i + 1) % ell);
            }
        }
    }

    fn small_grid() -> std::sync::Arc<PolarGrid> {
        PolarGrid::build(GridParams::plane(16, 12, 6.0, 2, 1)).unwrap()
    }

    #[test]
    fn equivariance_of_shifted_tuple_is_exact_zero() {
        let grid = small_grid();
        let u1 = ComponentField::from_fn(&grid, |x, y, _| (-(x * x) - (y - 1.0) * (y - 1.0)).exp());
        let tuple = tuple_from_component(&u1, 2).unwrap();
        assert_eq!(check_equivariance(&tuple).unwrap(), 0.0);
    }

    #[test]
    fn equivariance_detects_single_node_perturbation() {
        let grid = small_grid();
        let u1 = ComponentField::from_fn(&grid, |x, y, _| (-(x * x) - y * y).exp());
        let mut tuple = tuple_from_component(&u1, 2).unwrap();
        let delta = 1e-3;
        let before = tuple[1].at(4, 3, 0);
        tuple[1].set(4, 3, 0, before + delta);
        let dev = check_equivariance(&tuple).unwrap();
        assert!((dev - delta).abs() < 1e-15, "dev = {dev}");
    }

    #[test]
    fn equivariance_positive_for_independent_fields() {
        let grid = small_grid();
        let mut rng = SplitMix64::new(7);
        let a = ComponentField::random_smooth(&grid, &mut rng);
        let b = ComponentField::random_smooth(&grid, &mut rng);
        assert!(check_equivariance(&[a, b]).unwrap() > 0.0);
    }

    #[test]
    fn equivariance_rejects_mismatched_grids() {
        let g1 = small_grid();
        let g2 = PolarGrid::build(GridParams::plane(16, 8, 6.0, 2, 1)).unwrap();
        let a = ComponentField::zeros(&g1);
        let b = ComponentField::zeros(&g2);
        assert!(matches!(check_equivariance(&[a, b]), Err(Error::GridMismatch)));
    }
}
