//! Polar discretization of the reduced domain, quadrature, and the Laplacian
//! stencil. For ambient dimension N ≥ 4 an optional cylindrical axis carries
//! the O(N-2)-invariant coordinate s = |y| with measure weight s^{N-3}.
//!
//! Layout. The plane is covered by rings r_i = i·dr, i = 1..=nr, with
//! dr = r_max/nr, and M angular nodes per period [0, 2π/n). Ring nr sits at
//! r_max and carries the Dirichlet condition. The pole r = 0 is a single
//! shared node per s-slab. The s-axis (if present) has slabs s_k = k·ds,
//! k = 0..ns-1, ds = s_max/(ns-1); slab ns-1 is Dirichlet, s = 0 is a
//! natural (even-reflection) boundary.
//!
//! Quadrature weights are the exact cell measures, so the weight sum of a
//! constant field is the exact measure of the truncated domain. The
//! gradient part of ⟨u,v⟩_V uses staggered midpoints; the discrete Laplacian
//! is its representer with respect to the node weights, hence discrete
//! integration by parts holds to machine precision on Dirichlet fields.

use crate::error::{Error, Result};
use crate::util::{unit_sphere_area, SplitMix64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Grid construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Radial rings 1..=nr; ring nr is the Dirichlet boundary at r_max.
    pub nr: usize,
    /// Angular nodes per period 2π/n; must be divisible by ell.
    pub m: usize,
    pub r_max: f64,
    /// Slabs along the cylindrical axis; 1 for the plane (N = 2).
    pub ns: usize,
    pub s_max: f64,
    /// Ambient dimension N ∈ {2} ∪ {4, 5, …}.
    pub dim: usize,
    /// Angular invariance order of the stored component.
    pub n: usize,
    /// Component count; rotations by 2πj/(ℓn) must be exact index shifts.
    pub ell: usize,
}

impl GridParams {
    /// Planar grid (N = 2).
    pub fn plane(nr: usize, m: usize, r_max: f64, ell: usize, n: usize) -> Self {
        Self { nr, m, r_max, ns: 1, s_max: 0.0, dim: 2, n, ell }
    }

    /// Cylindrical grid for N ≥ 4.
    pub fn cylinder(
        nr: usize,
        m: usize,
        r_max: f64,
        ns: usize,
        s_max: f64,
        dim: usize,
        ell: usize,
        n: usize,
    ) -> Self {
        Self { nr, m, r_max, ns, s_max, dim, n, ell }
    }
}

/// Discretized reduced domain with precomputed weights and stencil
/// coefficients.
#[derive(Debug)]
pub struct PolarGrid {
    pub nr: usize,
    pub m: usize,
    pub ns: usize,
    pub dim: usize,
    pub n: usize,
    pub ell: usize,
    pub r_max: f64,
    pub s_max: f64,
    pub dr: f64,
    pub dtheta: f64,
    pub ds: f64,
    /// pw[0]: full pole-cell measure (per s-slab); pw[i]: per-θ-node plane
    /// measure of ring i, already summed over the n periods.
    pw: Vec<f64>,
    /// Radial edge coefficients, edge i -> i+1 for i = 0..nr-1 (0 = pole).
    coef_r: Vec<f64>,
    /// Angular edge coefficients per ring (index 0 unused).
    coef_t: Vec<f64>,
    /// Slab coordinates s_k.
    svals: Vec<f64>,
    /// Axis cell measures |S^{N-3}| ∫_cell s^{N-3} ds (1.0 for N = 2).
    ms: Vec<f64>,
    /// Axis edge coefficients |S^{N-3}| s_{k+1/2}^{N-3} / ds.
    se: Vec<f64>,
}

impl PolarGrid {
    pub fn build(p: GridParams) -> Result<Arc<Self>> {
        if p.ell == 0 || p.n == 0 {
            return Err(Error::Config("ell and n must be >= 1".into()));
        }
        if p.m == 0 || p.m % p.ell != 0 {
            return Err(Error::Divisibility { m: p.m, ell: p.ell });
        }
        if p.nr < 8 {
            return Err(Error::Config(format!("need at least 8 radial rings, got {}", p.nr)));
        }
        if !(p.r_max > 0.0) || !p.r_max.is_finite() {
            return Err(Error::Config(format!("r_max must be positive, got {}", p.r_max)));
        }
        match p.dim {
            2 => {
                if p.ns != 1 {
                    return Err(Error::Config("planar grids have exactly one s-slab".into()));
                }
            }
            d if d >= 4 => {
                if p.ns < 4 {
                    return Err(Error::Config(format!(
                        "cylindrical grids need at least 4 s-slabs, got {}",
                        p.ns
                    )));
                }
                if !(p.s_max > 0.0) {
                    return Err(Error::Config("s_max must be positive".into()));
                }
            }
            d => {
                return Err(Error::Config(format!("ambient dimension must be 2 or >= 4, got {d}")));
            }
        }

        let nr = p.nr;
        let dr = p.r_max / nr as f64;
        let dtheta = 2.0 * PI / (p.n as f64 * p.m as f64);
        let nf = p.n as f64;

        let mut pw = vec![0.0; nr + 1];
        pw[0] = PI * (dr / 2.0) * (dr / 2.0);
        for i in 1..nr {
            pw[i] = nf * (i as f64 * dr) * dr * dtheta;
        }
        // Boundary half cell (r_max - dr/2, r_max): area (r dr/2 - dr²/8) dθ.
        pw[nr] = nf * (p.r_max * dr / 2.0 - dr * dr / 8.0) * dtheta;

        let mut coef_r = vec![0.0; nr];
        for (i, c) in coef_r.iter_mut().enumerate() {
            let r_mid = (i as f64 + 0.5) * dr;
            *c = nf * r_mid * dtheta / dr;
        }
        let mut coef_t = vec![0.0; nr + 1];
        for i in 1..nr {
            coef_t[i] = nf * dr / ((i as f64 * dr) * dtheta);
        }
        coef_t[nr] = nf * (dr / 2.0) / (p.r_max * dtheta);

        let (svals, ms, se, ds) = if p.dim == 2 {
            (vec![0.0], vec![1.0], Vec::new(), 0.0)
        } else {
            let q = (p.dim - 3) as i32;
            let area = unit_sphere_area(p.dim - 2);
            let ds = p.s_max / (p.ns - 1) as f64;
            let svals: Vec<f64> = (0..p.ns).map(|k| k as f64 * ds).collect();
            let cell_int = |a: f64, b: f64| -> f64 {
                let e = q + 1;
                (b.powi(e) - a.powi(e)) / e as f64
            };
            let mut ms = vec![0.0; p.ns];
            ms[0] = area * cell_int(0.0, ds / 2.0);
            for k in 1..p.ns - 1 {
                ms[k] = area * cell_int(svals[k] - ds / 2.0, svals[k] + ds / 2.0);
            }
            ms[p.ns - 1] = area * cell_int(p.s_max - ds / 2.0, p.s_max);
            let se: Vec<f64> = (0..p.ns - 1)
                .map(|k| area * ((k as f64 + 0.5) * ds).powi(q) / ds)
                .collect();
            (svals, ms, se, ds)
        };

        Ok(Arc::new(Self {
            nr,
            m: p.m,
            ns: p.ns,
            dim: p.dim,
            n: p.n,
            ell: p.ell,
            r_max: p.r_max,
            s_max: p.s_max,
            dr,
            dtheta,
            ds,
            pw,
            coef_r,
            coef_t,
            svals,
            ms,
            se,
        }))
    }

    pub fn radius(&self, ring: usize) -> f64 {
        ring as f64 * self.dr
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta
    }

    pub fn s_coord(&self, k: usize) -> f64 {
        self.svals[k]
    }

    /// Distance of node (ring, ·, slab) to the origin of ℝ^N.
    pub fn full_radius(&self, ring: usize, k: usize) -> f64 {
        let r = self.radius(ring);
        let s = self.svals[k];
        (r * r + s * s).sqrt()
    }

    /// Cartesian plane coordinates of node (ring, j).
    pub fn xy(&self, ring: usize, j: usize) -> (f64, f64) {
        let r = self.radius(ring);
        let t = self.theta(j);
        (r * t.cos(), r * t.sin())
    }

    /// Quadrature weight of a node (full measure on ℝ^N).
    pub fn weight(&self, ring: usize, k: usize) -> f64 {
        self.pw[ring] * self.ms[k]
    }

    pub fn pole_weight(&self, k: usize) -> f64 {
        self.pw[0] * self.ms[k]
    }

    /// Nodes per s-slab, excluding the shared pole.
    pub fn nodes_per_slab(&self) -> usize {
        self.nr * self.m
    }

    pub fn same_layout(&self, other: &PolarGrid) -> bool {
        self.nr == other.nr
            && self.m == other.m
            && self.ns == other.ns
            && self.dim == other.dim
            && self.n == other.n
            && self.r_max == other.r_max
            && self.s_max == other.s_max
    }

    #[inline]
    pub(crate) fn idx(&self, ring: usize, j: usize, k: usize) -> usize {
        debug_assert!(ring >= 1 && ring <= self.nr);
        ((ring - 1) * self.m + j) * self.ns + k
    }

    /// Weighted sum approximating ∫_{ℝ^N} f (truncated at r_max / s_max).
    pub fn integrate(&self, f: &ComponentField) -> f64 {
        assert!(f.grid().same_layout(self));
        let mut total = 0.0;
        for k in 0..self.ns {
            let msk = self.ms[k];
            let mut slab = self.pw[0] * f.pole[k];
            for i in 1..=self.nr {
                let w = self.pw[i];
                let mut row = 0.0;
                for j in 0..self.m {
                    row += f.vals[self.idx(i, j, k)];
                }
                slab += w * row;
            }
            total += msk * slab;
        }
        total
    }

    /// Total measure of the truncated domain.
    pub fn domain_measure(&self) -> f64 {
        let plane: f64 = self.pw[0] + (1..=self.nr).map(|i| self.pw[i] * self.m as f64).sum::<f64>();
        let axis: f64 = self.ms.iter().sum();
        plane * axis
    }

    /// Weighted L² inner product Σ w · u · v.
    pub fn weighted_inner(&self, u: &ComponentField, v: &ComponentField) -> f64 {
        assert!(u.grid().same_layout(self) && v.grid().same_layout(self));
        let mut acc = 0.0;
        for k in 0..self.ns {
            acc += self.pole_weight(k) * (u.pole[k] * v.pole[k]);
            for i in 1..=self.nr {
                let w = self.pw[i] * self.ms[k];
                for j in 0..self.m {
                    let id = self.idx(i, j, k);
                    acc += w * (u.vals[id] * v.vals[id]);
                }
            }
        }
        acc
    }

    /// Gradient part of the bilinear form: quadrature of ∇u·∇v with
    /// staggered midpoints. Symmetric by construction.
    pub fn dirichlet_form(&self, u: &ComponentField, v: &ComponentField) -> f64 {
        assert!(u.grid().same_layout(self) && v.grid().same_layout(self));
        let m = self.m;
        let mut acc = 0.0;
        for k in 0..self.ns {
            let msk = self.ms[k];
            let mut slab = 0.0;
            // Pole to first ring.
            let c0 = self.coef_r[0];
            for j in 0..m {
                let du = u.vals[self.idx(1, j, k)] - u.pole[k];
                let dv = v.vals[self.idx(1, j, k)] - v.pole[k];
                slab += c0 * (du * dv);
            }
            // Radial edges.
            for i in 1..self.nr {
                let c = self.coef_r[i];
                for j in 0..m {
                    let du = u.vals[self.idx(i + 1, j, k)] - u.vals[self.idx(i, j, k)];
                    let dv = v.vals[self.idx(i + 1, j, k)] - v.vals[self.idx(i, j, k)];
                    slab += c * (du * dv);
                }
            }
            // Angular edges (periodic).
            if m > 1 {
                for i in 1..=self.nr {
                    let c = self.coef_t[i];
                    for j in 0..m {
                        let j2 = if j + 1 == m { 0 } else { j + 1 };
                        let du = u.vals[self.idx(i, j2, k)] - u.vals[self.idx(i, j, k)];
                        let dv = v.vals[self.idx(i, j2, k)] - v.vals[self.idx(i, j, k)];
                        slab += c * (du * dv);
                    }
                }
            }
            acc += msk * slab;
        }
        // Axis edges.
        for k in 0..self.ns.saturating_sub(1) {
            let cs = self.se[k];
            let mut edge = self.pw[0] * ((u.pole[k + 1] - u.pole[k]) * (v.pole[k + 1] - v.pole[k]));
            for i in 1..=self.nr {
                let w = self.pw[i];
                for j in 0..m {
                    let du = u.vals[self.idx(i, j, k + 1)] - u.vals[self.idx(i, j, k)];
                    let dv = v.vals[self.idx(i, j, k + 1)] - v.vals[self.idx(i, j, k)];
                    edge += w * (du * dv);
                }
            }
            acc += cs * edge;
        }
        acc
    }

    /// ⟨u,v⟩_V = ∫ ∇u·∇v + V(|x|) u v.
    pub fn inner_product_v(
        &self,
        u: &ComponentField,
        v: &ComponentField,
        pot: &crate::potential::RadialPotential,
    ) -> f64 {
        let mut acc = self.dirichlet_form(u, v);
        for k in 0..self.ns {
            let mut slab =
                self.pw[0] * pot.value(self.full_radius(0, k)) * (u.pole[k] * v.pole[k]);
            for i in 1..=self.nr {
                let vv = pot.value(self.full_radius(i, k)) * self.pw[i];
                for j in 0..self.m {
                    let id = self.idx(i, j, k);
                    slab += vv * (u.vals[id] * v.vals[id]);
                }
            }
            acc += self.ms[k] * slab;
        }
        acc
    }

    /// Second-order discrete Laplacian: the representer of the Dirichlet
    /// form with respect to the quadrature weights. Dirichlet rows (ring nr
    /// and, in cylindrical mode, slab ns-1) are set to zero in the output.
    pub fn laplacian(&self, f: &ComponentField) -> ComponentField {
        assert!(f.grid().same_layout(self));
        let mut out = ComponentField::zeros_on(f.grid_arc());
        let m = self.m;
        let mf = m as f64;
        let interior_slabs = if self.ns == 1 { 1 } else { self.ns - 1 };
        for k in 0..interior_slabs {
            // Pole: 4(mean(ring 1) - pole)/dr², accumulated as differences
            // so a constant field gives exactly zero.
            let mut diff = 0.0;
            for j in 0..m {
                diff += f.vals[self.idx(1, j, k)] - f.pole[k];
            }
            out.pole[k] = 4.0 * diff / (mf * self.dr * self.dr);
            for i in 1..self.nr {
                let r = self.radius(i);
                let rm = r - 0.5 * self.dr;
                let rp = r + 0.5 * self.dr;
                let inv_rdr2 = 1.0 / (r * self.dr * self.dr);
                let inv_rt2 = 1.0 / (r * r * self.dtheta * self.dtheta);
                for j in 0..m {
                    let c = f.vals[self.idx(i, j, k)];
                    let inner = if i == 1 { f.pole[k] } else { f.vals[self.idx(i - 1, j, k)] };
                    let outer = f.vals[self.idx(i + 1, j, k)];
                    let mut lap = (rm * (inner - c) + rp * (outer - c)) * inv_rdr2;
                    if m > 1 {
                        let left = f.vals[self.idx(i, if j == 0 { m - 1 } else { j - 1 }, k)];
                        let right = f.vals[self.idx(i, if j + 1 == m { 0 } else { j + 1 }, k)];
                        lap += (left + right - 2.0 * c) * inv_rt2;
                    }
                    out.vals[self.idx(i, j, k)] = lap;
                }
            }
        }
        if self.ns > 1 {
            // Axis part: (1/s^{N-3}) d/ds (s^{N-3} du/ds) in conservative form.
            let area = unit_sphere_area(self.dim - 2);
            for k in 0..self.ns - 1 {
                let cell = self.ms[k] / area; // ∫_cell s^{N-3} ds
                let lower = if k == 0 { 0.0 } else { self.se[k - 1] / area * self.ds };
                let upper = self.se[k] / area * self.ds; // s_{k+1/2}^{N-3}
                let inv = 1.0 / (self.ds * cell);
                let dd = |um: f64, uc: f64, up: f64| -> f64 {
                    let low = if k == 0 { 0.0 } else { lower * (um - uc) };
                    (upper * (up - uc) + low) * inv
                };
                let um_pole = if k == 0 { 0.0 } else { f.pole[k - 1] };
                out.pole[k] += dd(um_pole, f.pole[k], f.pole[k + 1]);
                for i in 1..self.nr {
                    for j in 0..m {
                        let um = if k == 0 { 0.0 } else { f.vals[self.idx(i, j, k - 1)] };
                        let uc = f.vals[self.idx(i, j, k)];
                        let up = f.vals[self.idx(i, j, k + 1)];
                        out.vals[self.idx(i, j, k)] += dd(um, uc, up);
                    }
                }
            }
        }
        out
    }
}

/// Discrete representation of the first component u₁ on one angular period,
/// with built-in ℤ_n periodicity. The remaining components are index shifts.
#[derive(Debug, Clone)]
pub struct ComponentField {
    grid: Arc<PolarGrid>,
    /// Shared pole value per s-slab.
    pub(crate) pole: Vec<f64>,
    /// Ring values, layout ((ring-1)·M + j)·ns + k.
    pub(crate) vals: Vec<f64>,
}

impl ComponentField {
    pub fn zeros(grid: &Arc<PolarGrid>) -> Self {
        Self::zeros_on(grid.clone())
    }

    fn zeros_on(grid: Arc<PolarGrid>) -> Self {
        let vals = vec![0.0; grid.nr * grid.m * grid.ns];
        let pole = vec![0.0; grid.ns];
        Self { grid, pole, vals }
    }

    /// Sample f(x, y, s) at every node, including the Dirichlet boundary.
    pub fn from_fn(grid: &Arc<PolarGrid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..grid.ns {
            let s = grid.s_coord(k);
            out.pole[k] = f(0.0, 0.0, s);
            for i in 1..=grid.nr {
                for j in 0..grid.m {
                    let (x, y) = grid.xy(i, j);
                    out.vals[grid.idx(i, j, k)] = f(x, y, s);
                }
            }
        }
        out
    }

    /// Sample a radial profile f(|x|): one evaluation per (ring, slab), so
    /// the result is bitwise θ-uniform.
    pub fn from_radial(grid: &Arc<PolarGrid>, f: impl Fn(f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..grid.ns {
            out.pole[k] = f(grid.full_radius(0, k));
            for i in 1..=grid.nr {
                let v = f(grid.full_radius(i, k));
                for j in 0..grid.m {
                    out.vals[grid.idx(i, j, k)] = v;
                }
            }
        }
        out
    }

    /// Sum of Gaussian bumps exp(-|x-c|²/(2σ²)) at the given plane centers,
    /// periodized over the n rotational images so the stored period extends
    /// to an exactly ℤ_n-invariant function. Dirichlet rows are zeroed.
    pub fn gaussian_bumps(
        grid: &Arc<PolarGrid>,
        centers: &[[f64; 2]],
        sigma: f64,
        amplitude: f64,
    ) -> Self {
        let n = grid.n;
        let rotations: Vec<(f64, f64)> = (0..n)
            .map(|t| {
                let a = 2.0 * PI * t as f64 / n as f64;
                (a.cos(), a.sin())
            })
            .collect();
        let inv2s2 = 1.0 / (2.0 * sigma * sigma);
        let mut out = Self::from_fn(grid, |x, y, s| {
            let mut acc = 0.0;
            for (ca, sa) in &rotations {
                let rx = ca * x - sa * y;
                let ry = sa * x + ca * y;
                for c in centers {
                    let d2 = (rx - c[0]).powi(2) + (ry - c[1]).powi(2) + s * s;
                    acc += (-d2 * inv2s2).exp();
                }
            }
            amplitude * acc
        });
        out.zero_dirichlet();
        out
    }

    /// Smooth pseudo-random field: a few Gaussian bumps with seeded centers,
    /// widths and signed amplitudes. Dirichlet rows are zeroed.
    pub fn random_smooth(grid: &Arc<PolarGrid>, rng: &mut SplitMix64) -> Self {
        let mut acc = Self::zeros(grid);
        for _ in 0..4 {
            let rad = rng.range(0.0, 0.7 * grid.r_max);
            let ang = rng.range(0.0, 2.0 * PI);
            let sigma = rng.range(0.25 * grid.r_max / 8.0 + 0.3, 0.18 * grid.r_max);
            let amp = rng.range(-1.0, 1.0);
            let bump = Self::gaussian_bumps(grid, &[[rad * ang.cos(), rad * ang.sin()]], sigma, amp);
            acc.add_scaled(1.0, &bump);
        }
        acc
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<PolarGrid> {
        self.grid.clone()
    }

    /// Node value; ring 0 addresses the shared pole (j is ignored there).
    #[inline]
    pub fn at(&self, ring: usize, j: usize, k: usize) -> f64 {
        if ring == 0 {
            self.pole[k]
        } else {
            self.vals[self.grid.idx(ring, j, k)]
        }
    }

    #[inline]
    pub fn pole(&self, k: usize) -> f64 {
        self.pole[k]
    }

    pub fn set(&mut self, ring: usize, j: usize, k: usize, value: f64) {
        if ring == 0 {
            self.pole[k] = value;
        } else {
            let id = self.grid.idx(ring, j, k);
            self.vals[id] = value;
        }
    }

    /// Field of the rotated component: out(r, θ) = self(r, θ + shift·dθ).
    pub fn shifted(&self, shift: usize) -> Self {
        let g = &self.grid;
        let mut out = Self::zeros(g);
        out.pole.copy_from_slice(&self.pole);
        for i in 1..=g.nr {
            for j in 0..g.m {
                let src = g.idx(i, (j + shift) % g.m, 0);
                let dst = g.idx(i, j, 0);
                out.vals[dst..dst + g.ns].copy_from_slice(&self.vals[src..src + g.ns]);
            }
        }
        out
    }

    /// Zero the Dirichlet rows (outer ring, and outer s-slab when present).
    pub fn zero_dirichlet(&mut self) {
        let g = self.grid.clone();
        for j in 0..g.m {
            for k in 0..g.ns {
                let id = g.idx(g.nr, j, k);
                self.vals[id] = 0.0;
            }
        }
        if g.ns > 1 {
            self.pole[g.ns - 1] = 0.0;
            for i in 1..=g.nr {
                for j in 0..g.m {
                    let id = g.idx(i, j, g.ns - 1);
                    self.vals[id] = 0.0;
                }
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.pole.iter_mut().for_each(|v| *v *= c);
        self.vals.iter_mut().for_each(|v| *v *= c);
    }

    /// self += c·other.
    pub fn add_scaled(&mut self, c: f64, other: &Self) {
        assert!(self.grid.same_layout(&other.grid));
        for (a, b) in self.pole.iter_mut().zip(&other.pole) {
            *a += c * b;
        }
        for (a, b) in self.vals.iter_mut().zip(&other.vals) {
            *a += c * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        let p = self.pole.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.vals.iter().fold(p, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        let p = self.pole.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        self.vals.iter().fold(p, |m, v| m.max(*v))
    }

    pub fn is_finite(&self) -> bool {
        self.pole.iter().chain(self.vals.iter()).all(|v| v.is_finite())
    }

    /// Bilinear sample of the stored period at plane point (x, y) on slab k,
    /// using the ℤ_n periodicity to wrap the angle. Returns 0 outside r_max.
    pub fn sample_plane(&self, x: f64, y: f64, k: usize) -> f64 {
        let g = &self.grid;
        let r = (x * x + y * y).sqrt();
        if r >= g.r_max {
            return 0.0;
        }
        let period = 2.0 * PI / g.n as f64;
        let theta = y.atan2(x).rem_euclid(period);
        let fr = r / g.dr;
        let i0 = fr.floor() as usize;
        let tr = fr - i0 as f64;
        let ft = theta / g.dtheta;
        let j0 = (ft.floor() as usize).min(g.m - 1);
        let tt = ft - j0 as f64;
        let j1 = (j0 + 1) % g.m;
        let i1 = (i0 + 1).min(g.nr);
        let v00 = self.at(i0, j0, k);
        let v01 = self.at(i0, j1, k);
        let v10 = self.at(i1, j0, k);
        let v11 = self.at(i1, j1, k);
        (1.0 - tr) * ((1.0 - tt) * v00 + tt * v01) + tr * ((1.0 - tt) * v10 + tt * v11)
    }

    /// (pole slice, ring slice) in storage order.
    pub fn raw(&self) -> (&[f64], &[f64]) {
        (&self.pole, &self.vals)
    }

    pub fn raw_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.pole, &mut self.vals)
    }

    pub(crate) fn from_raw(grid: Arc<PolarGrid>, pole: Vec<f64>, vals: Vec<f64>) -> Self {
        assert_eq!(pole.len(), grid.ns);
        assert_eq!(vals.len(), grid.nr * grid.m * grid.ns);
        Self { grid, pole, vals }
    }
}
