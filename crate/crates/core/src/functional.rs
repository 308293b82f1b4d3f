//! The reduced energy of the coupled system, its gradient, and the Nehari
//! projection — all expressed through the single stored component.
//!
//! With every component a rotation of u₁, the quadratic and self terms of
//! each component coincide, and the coupling between components i and j
//! depends only on (j - i) mod ℓ. The full energy is therefore
//!
//! ```text
//! 𝒥(u) = ℓ · [ ½‖u₁‖²_V - (1/2p)∫|u₁|^{2p} - (β/2p) Σ_{k=1}^{ℓ-1} O_k ],
//! O_k = ∫ |u₁(x)|^p |u₁(σ_k x)|^p,
//! ```
//!
//! and the derivative along equivariant directions is ℓ times the
//! component-1 pairing.

use crate::error::{Error, Result};
use crate::grid::{ComponentField, PolarGrid};
use crate::potential::RadialPotential;
use crate::symmetry::{component_shifts, PinwheelConfig};
use crate::util::signed_pow;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Scalar reductions of a field: quadratic form, self term, and the
/// coupling integrals O_k for k = 1..ℓ-1.
#[derive(Debug, Clone)]
pub struct Terms {
    /// ‖u₁‖²_V.
    pub q: f64,
    /// ∫ |u₁|^{2p}.
    pub s2p: f64,
    /// O_k = ∫ |u₁|^p |u_{k+1}|^p, k = 1..ℓ-1 (empty for the scalar case).
    pub coupling: Vec<f64>,
}

impl Terms {
    pub fn coupling_sum(&self) -> f64 {
        self.coupling.iter().sum()
    }

    /// Nehari denominator of the first component,
    /// ∫|u₁|^{2p} + β Σ_{j≠1} ∫|u₁|^p|u_j|^p.
    pub fn denominator(&self, beta: f64) -> f64 {
        self.s2p + beta * self.coupling_sum()
    }
}

/// Field together with its p-th power buffer and scalar reductions.
pub struct Evaluated {
    pub field: ComponentField,
    pub pth: ComponentField,
    pub terms: Terms,
}

/// Itemized energy, serialized into solver reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// ‖u_i‖²_V per component (equal across i by equivariance).
    pub quadratic: Vec<f64>,
    /// ∫|u_i|^{2p} per component.
    pub self_terms: Vec<f64>,
    /// O_{ij} = ∫|u_i|^p|u_j|^p, symmetric with zero diagonal.
    pub coupling: Vec<Vec<f64>>,
}

/// Precomputed evaluation context: potential samples on the grid and the
/// component index shifts.
pub struct EnergyModel {
    grid: Arc<PolarGrid>,
    pub config: PinwheelConfig,
    shifts: Vec<usize>,
    v_pole: Vec<f64>,
    v_ring: Vec<f64>,
    /// p == 2 enables the polynomial fast path in the hot loops.
    cubic: bool,
}

impl EnergyModel {
    pub fn new(grid: &Arc<PolarGrid>, config: PinwheelConfig, pot: &RadialPotential) -> Result<Self> {
        if config.ell == 0 {
            return Err(Error::Config("component count must be >= 1".into()));
        }
        if grid.m % config.ell != 0 {
            return Err(Error::Divisibility { m: grid.m, ell: config.ell });
        }
        if grid.dim != config.dim {
            return Err(Error::Config(format!(
                "grid dimension {} does not match the configured dimension {}",
                grid.dim, config.dim
            )));
        }
        let shifts = component_shifts(grid.m, config.ell)?;
        let v_pole: Vec<f64> = (0..grid.ns).map(|k| pot.value(grid.full_radius(0, k))).collect();
        let mut v_ring = vec![0.0; grid.nr * grid.ns];
        for i in 1..=grid.nr {
            for k in 0..grid.ns {
                v_ring[(i - 1) * grid.ns + k] = pot.value(grid.full_radius(i, k));
            }
        }
        Ok(Self { grid: grid.clone(), config, shifts, v_pole, v_ring, cubic: config.p == 2.0 })
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    /// Supremum of the sampled potential over the grid.
    pub fn v_max(&self) -> f64 {
        self.v_pole
            .iter()
            .chain(self.v_ring.iter())
            .fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    /// Cached potential sample at a node (ring 0 is the pole).
    pub fn v_node(&self, ring: usize, slab: usize) -> f64 {
        if ring == 0 {
            self.v_pole[slab]
        } else {
            self.v_ring[(ring - 1) * self.grid.ns + slab]
        }
    }

    /// Pointwise stiffening of the Hessian by the competitive term,
    /// (p-1)|β| |u₁|^{p-2} Σ_{j≠1}|u_j|^p, from the p-th power buffer
    /// (|0|^{p-2} := 0, matching the gradient convention). Only the
    /// positive (stiffening) part matters for step-size stability.
    pub fn coupling_diag(&self, u: &ComponentField, pth: &ComponentField) -> ComponentField {
        let g = &self.grid;
        let mut out = ComponentField::zeros(&self.grid);
        if self.config.ell < 2 || self.config.beta == 0.0 {
            return out;
        }
        let factor = (self.config.p - 1.0) * self.config.beta.abs();
        let pm2 = self.config.p - 2.0;
        let own = |x: f64| -> f64 {
            if pm2 == 0.0 || x == 0.0 {
                if pm2 == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                x.abs().powf(pm2)
            }
        };
        for k in 0..g.ns {
            let c = (self.config.ell - 1) as f64 * pth.pole(k);
            out.set(0, 0, k, factor * c * own(u.pole(k)));
            for i in 1..=g.nr {
                for j in 0..g.m {
                    let mut acc = 0.0;
                    for sh in &self.shifts[1..] {
                        acc += pth.at(i, (j + sh) % g.m, k);
                    }
                    out.set(i, j, k, factor * acc * own(u.at(i, j, k)));
                }
            }
        }
        out
    }

    /// out += V·u with the cached potential samples.
    pub fn add_potential_term(&self, u: &ComponentField, out: &mut ComponentField) {
        let g = &self.grid;
        for k in 0..g.ns {
            let v = out.pole(k) + self.v_pole[k] * u.pole(k);
            out.set(0, 0, k, v);
            for i in 1..=g.nr {
                let vv = self.v_ring[(i - 1) * g.ns + k];
                for j in 0..g.m {
                    let v = out.at(i, j, k) + vv * u.at(i, j, k);
                    out.set(i, j, k, v);
                }
            }
        }
    }

    /// |u|^p at every node.
    fn pth_power(&self, u: &ComponentField) -> ComponentField {
        let mut out = u.clone();
        let (pole, vals) = out.raw_mut();
        if self.cubic {
            for v in pole.iter_mut().chain(vals.iter_mut()) {
                *v *= *v;
            }
        } else {
            let p = self.config.p;
            for v in pole.iter_mut().chain(vals.iter_mut()) {
                *v = v.abs().powf(p);
            }
        }
        out
    }

    /// Σ w · a(x) · b(σ x), with σ the index shift. Fixed summation order so
    /// that identical inputs produce bitwise identical sums for every shift.
    fn weighted_shifted_product(&self, a: &ComponentField, b: &ComponentField, shift: usize) -> f64 {
        let g = &self.grid;
        let m = g.m;
        let mut total = 0.0;
        for k in 0..g.ns {
            let mut slab = g.pole_weight(k) * a.pole(k) * b.pole(k);
            for i in 1..=g.nr {
                let w = g.weight(i, k);
                let mut row = 0.0;
                for j in 0..m {
                    row += a.at(i, j, k) * b.at(i, (j + shift) % m, k);
                }
                slab += w * row;
            }
            total += slab;
        }
        total
    }

    fn potential_quadratic(&self, u: &ComponentField) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for k in 0..g.ns {
            let mut slab = g.pole_weight(k) * self.v_pole[k] * u.pole(k) * u.pole(k);
            for i in 1..=g.nr {
                let wv = g.weight(i, k) * self.v_ring[(i - 1) * g.ns + k];
                let mut row = 0.0;
                for j in 0..g.m {
                    let x = u.at(i, j, k);
                    row += x * x;
                }
                slab += wv * row;
            }
            total += slab;
        }
        total
    }

    pub fn terms_with_pth(&self, u: &ComponentField, pth: &ComponentField) -> Terms {
        let q = self.grid.dirichlet_form(u, u) + self.potential_quadratic(u);
        let s2p = self.weighted_shifted_product(pth, pth, 0);
        // O_k = O_{ℓ-k}: compute one representative and mirror, so the
        // coupling matrix is exactly symmetric.
        let ell = self.config.ell;
        let mut coupling = vec![0.0; ell.saturating_sub(1)];
        for k in 1..=ell / 2 {
            let val = self.weighted_shifted_product(pth, pth, self.shifts[k]);
            coupling[k - 1] = val;
            coupling[ell - k - 1] = val;
        }
        Terms { q, s2p, coupling }
    }

    pub fn evaluate(&self, field: ComponentField) -> Evaluated {
        let pth = self.pth_power(&field);
        let terms = self.terms_with_pth(&field, &pth);
        Evaluated { field, pth, terms }
    }

    pub fn terms(&self, u: &ComponentField) -> Terms {
        self.terms_with_pth(u, &self.pth_power(u))
    }

    /// Total energy 𝒥 from the scalar reductions.
    pub fn energy_from_terms(&self, t: &Terms) -> f64 {
        let p = self.config.p;
        let ell = self.config.ell as f64;
        ell * (0.5 * t.q
            - t.s2p / (2.0 * p)
            - self.config.beta / (2.0 * p) * t.coupling_sum())
    }

    /// Energy along the ray s ↦ 𝒥(s·u).
    pub fn energy_along_ray(&self, t: &Terms, s: f64) -> f64 {
        let p = self.config.p;
        let ell = self.config.ell as f64;
        let s2 = s * s;
        let s2p = s2.powf(p);
        ell * (0.5 * s2 * t.q - s2p / (2.0 * p) * (t.s2p + self.config.beta * t.coupling_sum()))
    }

    pub fn energy(&self, u: &ComponentField) -> f64 {
        self.energy_from_terms(&self.terms(u))
    }

    /// Itemized energy with the full (mirrored) coupling matrix.
    pub fn breakdown(&self, u: &ComponentField) -> EnergyBreakdown {
        let t = self.terms(u);
        let ell = self.config.ell;
        let mut coupling = vec![vec![0.0; ell]; ell];
        for i in 0..ell {
            for j in 0..ell {
                if i != j {
                    let k = (j + ell - i) % ell;
                    coupling[i][j] = t.coupling[k - 1];
                }
            }
        }
        EnergyBreakdown {
            total: self.energy_from_terms(&t),
            quadratic: vec![t.q; ell],
            self_terms: vec![t.s2p; ell],
            coupling,
        }
    }

    /// Discrete representer of v ↦ ∂₁𝒥(u)v with respect to the node weights:
    /// (-Δ + V)u₁ - |u₁|^{2p-2}u₁ - β Σ_{j≠1} |u_j|^p |u₁|^{p-2}u₁.
    /// Dirichlet rows carry zero (they are not degrees of freedom). The full
    /// derivative along equivariant directions is ℓ times the weighted
    /// pairing with this field.
    pub fn gradient_with_pth(&self, u: &ComponentField, pth: &ComponentField) -> ComponentField {
        let g = &self.grid;
        let mut out = g.laplacian(u);
        out.scale(-1.0);
        let beta = self.config.beta;
        let p = self.config.p;
        let ell = self.config.ell;
        let m = g.m;
        let interior_slabs = if g.ns == 1 { 1 } else { g.ns - 1 };

        let coupled_pth_sum = |i: usize, j: usize, k: usize| -> f64 {
            let mut acc = 0.0;
            for shift in &self.shifts[1..] {
                acc += pth.at(i, j.wrapping_add(*shift) % m, k);
            }
            acc
        };

        for k in 0..interior_slabs {
            // Pole.
            let x = u.pole(k);
            let nonlinear = if self.cubic {
                let coup: f64 = (ell - 1) as f64 * pth.pole(k); // all shifts fix the pole
                x * x * x + beta * coup * x
            } else {
                let coup: f64 = (ell - 1) as f64 * pth.pole(k);
                signed_pow(x, 2.0 * p - 1.0) + beta * coup * signed_pow(x, p - 1.0)
            };
            let v = self.v_pole[k];
            let value = out.pole(k) + v * x - nonlinear;
            out.set(0, 0, k, value);
            for i in 1..g.nr {
                let v = self.v_ring[(i - 1) * g.ns + k];
                for j in 0..m {
                    let x = u.at(i, j, k);
                    let nonlinear = if self.cubic {
                        let coup = if ell > 1 { coupled_pth_sum(i, j, k) } else { 0.0 };
                        x * x * x + beta * coup * x
                    } else {
                        let coup = if ell > 1 { coupled_pth_sum(i, j, k) } else { 0.0 };
                        signed_pow(x, 2.0 * p - 1.0) + beta * coup * signed_pow(x, p - 1.0)
                    };
                    let value = out.at(i, j, k) + v * x - nonlinear;
                    out.set(i, j, k, value);
                }
            }
        }
        out
    }

    pub fn gradient(&self, u: &ComponentField) -> ComponentField {
        self.gradient_with_pth(u, &self.pth_power(u))
    }

    /// The unique positive scale s placing s·u on the Nehari manifold,
    /// s = (‖u₁‖²_V / D)^{1/(2p-2)} with D the Nehari denominator.
    /// Fails when D is not strictly positive (relative to the self term).
    pub fn nehari_scalar_from_terms(&self, t: &Terms) -> Result<f64> {
        let denom = t.denominator(self.config.beta);
        if !(denom > 1e-14 * t.s2p.abs()) || t.q <= 0.0 {
            return Err(Error::NonpositiveDenominator { denominator: denom, self_term: t.s2p });
        }
        Ok((t.q / denom).powf(1.0 / (2.0 * self.config.p - 2.0)))
    }

    pub fn nehari_scalar(&self, u: &ComponentField) -> Result<f64> {
        self.nehari_scalar_from_terms(&self.terms(u))
    }

    /// |⟨u₁,u₁⟩_V - ∫|u₁|^{2p} - β Σ_{j≠1} ∫|u_j|^p|u₁|^p| (component form).
    pub fn nehari_residual(&self, u: &ComponentField) -> f64 {
        let t = self.terms(u);
        (t.q - t.denominator(self.config.beta)).abs()
    }

    /// (p-1)/(2p) ‖u₁‖²_V; on the manifold the total energy is ℓ times this.
    pub fn component_energy(&self, u: &ComponentField) -> f64 {
        let q = self.grid.dirichlet_form(u, u) + self.potential_quadratic(u);
        (self.config.p - 1.0) / (2.0 * self.config.p) * q
    }

    /// Overlap integrals O_{ij} = ∫|u_i|^p|u_j|^p and their β-weighted
    /// counterparts.
    pub fn overlap(&self, u: &ComponentField) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let b = self.breakdown(u);
        let beta = self.config.beta;
        let scaled = b.coupling.iter().map(|row| row.iter().map(|x| beta * x).collect()).collect();
        (b.coupling, scaled)
    }
}

/// Convenience wrappers matching the operation-level API.
pub fn energy_j(
    u1: &ComponentField,
    config: PinwheelConfig,
    pot: &RadialPotential,
) -> Result<EnergyBreakdown> {
    Ok(EnergyModel::new(&u1.grid_arc(), config, pot)?.breakdown(u1))
}

pub fn gradient_j(
    u1: &ComponentField,
    config: PinwheelConfig,
    pot: &RadialPotential,
) -> Result<ComponentField> {
    Ok(EnergyModel::new(&u1.grid_arc(), config, pot)?.gradient(u1))
}

pub fn nehari_scalar(
    u1: &ComponentField,
    config: PinwheelConfig,
    pot: &RadialPotential,
) -> Result<f64> {
    EnergyModel::new(&u1.grid_arc(), config, pot)?.nehari_scalar(u1)
}

pub fn nehari_residual(
    u1: &ComponentField,
    config: PinwheelConfig,
    pot: &RadialPotential,
) -> Result<f64> {
    Ok(EnergyModel::new(&u1.grid_arc(), config, pot)?.nehari_residual(u1))
}

pub fn component_energy(
    u1: &ComponentField,
    config: PinwheelConfig,
    pot: &RadialPotential,
) -> Result<f64> {
    Ok(EnergyModel::new(&u1.grid_arc(), config, pot)?.component_energy(u1))
}

/// Overlap integrals O_{ij} = ∫|u_i|^p|u_j|^p and β·O_{ij} (potential-free).
pub fn overlap(
    u1: &ComponentField,
    config: PinwheelConfig,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let pot = RadialPotential::constant(1.0);
    Ok(EnergyModel::new(&u1.grid_arc(), config, &pot)?.overlap(u1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;
    use crate::util::SplitMix64;

    fn setup(ell: usize) -> (Arc<PolarGrid>, PinwheelConfig, RadialPotential) {
        let cfg = if ell == 1 {
            PinwheelConfig::scalar_gn(1, 2, 2.0).unwrap()
        } else {
            PinwheelConfig::new(ell, 1, 2, 2.0, -1.0).unwrap()
        };
        let grid = PolarGrid::build(GridParams::plane(24, 12, 8.0, cfg.ell.max(2), cfg.n)).unwrap();
        let pot = RadialPotential::exp_well(1.0, 0.5, 0.5);
        (grid, cfg, pot)
    }

    /// Weighted pairing ℓ · Σ w g v — the derivative along the equivariant
    /// direction generated by v.
    fn pairing(model: &EnergyModel, g: &ComponentField, v: &ComponentField) -> f64 {
        let grid = model.grid();
        let mut acc = 0.0;
        for k in 0..grid.ns {
            acc += grid.pole_weight(k) * g.pole(k) * v.pole(k);
            for i in 1..=grid.nr {
                for j in 0..grid.m {
                    acc += grid.weight(i, k) * g.at(i, j, k) * v.at(i, j, k);
                }
            }
        }
        model.config.ell as f64 * acc
    }

    #[test]
    fn zero_field_has_zero_energy_and_gradient() {
        let (grid, cfg, pot) = setup(2);
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        let z = ComponentField::zeros(&grid);
        let b = model.breakdown(&z);
        assert_eq!(b.total, 0.0);
        assert_eq!(model.gradient(&z).max_abs(), 0.0);
        assert_eq!(model.nehari_residual(&z), 0.0);
    }

    #[test]
    fn beta_zero_decouples() {
        let (grid, mut cfg, pot) = setup(2);
        cfg.beta = 0.0; // test-only: decoupled instance
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        let scalar = PinwheelConfig::scalar_gn(1, 2, 2.0).unwrap();
        let single = EnergyModel::new(&grid, scalar, &pot).unwrap();
        let mut rng = SplitMix64::new(2);
        let u = ComponentField::random_smooth(&grid, &mut rng);
        let total = model.energy(&u);
        let single_energy = single.energy(&u);
        assert!((total - 2.0 * single_energy).abs() < 1e-12 * total.abs().max(1.0));
    }

    #[test]
    fn disjoint_supports_have_zero_coupling() {
        let (grid, cfg, pot) = setup(2);
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        // A bump well inside the first quadrant: its π-rotation does not
        // touch it, so every node product vanishes.
        let u = ComponentField::gaussian_bumps(&grid, &[[3.0, 0.0]], 0.4, 1.0);
        // Clip the tails so the supports are exactly node-disjoint.
        let mut clipped = u.clone();
        {
            let (pole, vals) = clipped.raw_mut();
            for v in pole.iter_mut().chain(vals.iter_mut()) {
                if v.abs() < 1e-6 {
                    *v = 0.0;
                }
            }
        }
        let b = model.breakdown(&clipped);
        assert_eq!(b.coupling[0][1], 0.0);
        assert_eq!(b.coupling[1][0], 0.0);
    }

    #[test]
    fn coupling_matrix_exactly_symmetric() {
        let (grid, _, pot) = setup(2);
        let cfg = PinwheelConfig::new(4, 1, 2, 2.0, -0.5).unwrap();
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        let mut rng = SplitMix64::new(9);
        let u = ComponentField::random_smooth(&grid, &mut rng);
        let b = model.breakdown(&u);
        for i in 0..4 {
            assert_eq!(b.coupling[i][i], 0.0);
            for j in 0..4 {
                assert_eq!(b.coupling[i][j], b.coupling[j][i]);
                if i != j {
                    assert!(b.coupling[i][j] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (grid, cfg, pot) = setup(2);
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        let mut rng = SplitMix64::new(31);
        for _ in 0..5 {
            let u = ComponentField::random_smooth(&grid, &mut rng);
            let v = ComponentField::random_smooth(&grid, &mut rng);
            let g = model.gradient(&u);
            let pair = pairing(&model, &g, &v);
            let mut best = f64::INFINITY;
            for exp in 0..7 {
                let h = 1e-2 * 0.5f64.powi(exp);
                let mut up = u.clone();
                up.add_scaled(h, &v);
                let mut um = u.clone();
                um.add_scaled(-h, &v);
                let fd = (model.energy(&up) - model.energy(&um)) / (2.0 * h);
                best = best.min(((fd - pair) / pair.abs().max(1e-12)).abs());
            }
            assert!(best < 1e-6, "relative FD mismatch {best}");
        }
    }

    #[test]
    fn gradient_of_zero_is_zero_and_pole_consistent() {
        let (grid, cfg, pot) = setup(2);
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        // Perturbing only the pole must match the pole pairing too.
        let mut rng = SplitMix64::new(77);
        let u = ComponentField::random_smooth(&grid, &mut rng);
        let mut v = ComponentField::zeros(&grid);
        v.set(0, 0, 0, 1.0);
        let g = model.gradient(&u);
        let pair = pairing(&model, &g, &v);
        let h = 1e-5;
        let mut up = u.clone();
        up.add_scaled(h, &v);
        let mut um = u.clone();
        um.add_scaled(-h, &v);
        let fd = (model.energy(&up) - model.energy(&um)) / (2.0 * h);
        assert!(((fd - pair) / pair.abs().max(1e-12)).abs() < 1e-5);
    }

    #[test]
    fn nehari_scalar_identities() {
        let (grid, cfg, pot) = setup(2);
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        let mut rng = SplitMix64::new(4);
        let mut u = ComponentField::gaussian_bumps(&grid, &[[2.0, 0.4]], 0.8, 1.0);
        u.add_scaled(0.3, &ComponentField::random_smooth(&grid, &mut rng));
        let s = model.nehari_scalar(&u).unwrap();
        let mut on_manifold = u.clone();
        on_manifold.scale(s);
        // Projection lands on the manifold.
        let t = model.terms(&on_manifold);
        assert!(model.nehari_residual(&on_manifold) < 1e-10 * t.q);
        // s of an on-manifold field is 1.
        assert!((model.nehari_scalar(&on_manifold).unwrap() - 1.0).abs() < 1e-12);
        // Homogeneity s_{cu} = s_u / c.
        for c in [0.5, 2.0, 7.3] {
            let mut cu = u.clone();
            cu.scale(c);
            let sc = model.nehari_scalar(&cu).unwrap();
            assert!((sc - s / c).abs() < 1e-12 * (s / c));
        }
        // Fiber maximum.
        let j_star = model.energy_along_ray(&model.terms(&u), s);
        for factor in [0.5, 0.8, 1.25, 2.0] {
            let j = model.energy_along_ray(&model.terms(&u), factor * s);
            assert!(j_star >= j, "max violated at {factor}: {j_star} < {j}");
        }
    }

    #[test]
    fn equal_components_at_critical_beta_have_zero_denominator() {
        // θ-uniform u₁ makes every component identical; at β = -1/(ℓ-1) the
        // denominator collapses to (1 + β(ℓ-1))∫|u₁|^{2p} = 0 exactly.
        for ell in [2usize, 3] {
            let cfg = PinwheelConfig::new(ell, 1, 2, 2.0, -1.0 / (ell as f64 - 1.0)).unwrap();
            let grid = PolarGrid::build(GridParams::plane(24, 12, 8.0, ell, 1)).unwrap();
            let pot = RadialPotential::exp_well(1.0, 0.5, 0.5);
            let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
            let radial = ComponentField::from_radial(&grid, |r| (-r * r).exp());
            let t = model.terms(&radial);
            assert_eq!(t.denominator(cfg.beta), 0.0, "ell = {ell}");
            assert!(matches!(
                model.nehari_scalar(&radial),
                Err(Error::NonpositiveDenominator { .. })
            ));
        }
    }

    #[test]
    fn component_energy_identity_on_manifold() {
        let (grid, cfg, pot) = setup(2);
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        let u = ComponentField::gaussian_bumps(&grid, &[[2.5, 0.0]], 0.7, 1.0);
        let s = model.nehari_scalar(&u).unwrap();
        let mut w = u;
        w.scale(s);
        let total = model.energy(&w);
        let per = model.component_energy(&w);
        assert!((2.0 * per - total).abs() < 1e-10 * total.abs());
        // Scaling by c multiplies the component energy by c².
        let mut w2 = w.clone();
        w2.scale(3.0);
        assert!((model.component_energy(&w2) - 9.0 * per).abs() < 1e-12 * per.abs());
        // β < 0 on the manifold forces ‖u₁‖² <= ∫|u₁|^{2p}.
        let t = model.terms(&w);
        assert!(t.q <= t.s2p + 1e-10 * t.s2p);
    }

    #[test]
    fn energy_invariant_under_global_rotation() {
        let (grid, cfg, pot) = setup(2);
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        let mut rng = SplitMix64::new(12);
        let u = ComponentField::random_smooth(&grid, &mut rng);
        let e0 = model.energy(&u);
        for shift in [1usize, 5, 6] {
            let e = model.energy(&u.shifted(shift));
            assert!((e - e0).abs() <= 1e-13 * e0.abs().max(1.0), "{e} vs {e0}");
        }
    }

    #[test]
    fn identical_components_overlap_equals_self_term() {
        let (grid, cfg, pot) = setup(2);
        let model = EnergyModel::new(&grid, cfg, &pot).unwrap();
        let radial = ComponentField::from_radial(&grid, |r| 1.0 / (1.0 + r * r));
        let t = model.terms(&radial);
        assert_eq!(t.coupling[0], t.s2p);
    }
}
