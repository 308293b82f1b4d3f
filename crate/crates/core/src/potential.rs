//! Radial trapping potentials. Admissible potentials are radial, have a
//! strictly positive infimum, tend to a limit V_∞ > 0, and approach it from
//! below at an exponential rate slower than the minimal pinwheel chord:
//!
//! ```text
//! V(r) <= V_∞ - C₀ e^{-λ √V_∞ r}  for r >= R₀,   λ ∈ (0, 2 sin(π/ℓn)).
//! ```

use serde::{Deserialize, Serialize};

/// Radial potential profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum RadialPotential {
    /// V(r) = V_∞ - C₀ e^{-λ √V_∞ r}; monotone increasing well, R₀ = 0.
    ExpWell { v_inf: f64, c0: f64, lambda: f64 },
    /// V ≡ V_∞ (the autonomous limit problem).
    Constant { v_inf: f64 },
    /// User-supplied radial samples, linearly interpolated, constant beyond
    /// the last sample. The decay parameters are used for validation only.
    Tabulated {
        radii: Vec<f64>,
        values: Vec<f64>,
        v_inf: f64,
        c0: f64,
        lambda: f64,
        r0: f64,
    },
}

/// Outcome of the admissibility check, with one reason per failed condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

impl RadialPotential {
    pub fn exp_well(v_inf: f64, c0: f64, lambda: f64) -> Self {
        Self::ExpWell { v_inf, c0, lambda }
    }

    pub fn constant(v_inf: f64) -> Self {
        Self::Constant { v_inf }
    }

    /// Default experiment well for a given symmetry class: V_∞ = 1,
    /// C₀ = 1/2 and λ = sin(π/ℓn), half the admissible maximum.
    pub fn default_well(ell: usize, n: usize) -> Self {
        let lambda = (std::f64::consts::PI / (ell * n) as f64).sin();
        Self::ExpWell { v_inf: 1.0, c0: 0.5, lambda }
    }

    pub fn v_inf(&self) -> f64 {
        match self {
            Self::ExpWell { v_inf, .. } | Self::Constant { v_inf } | Self::Tabulated { v_inf, .. } => {
                *v_inf
            }
        }
    }

    /// V(r) for r >= 0.
    pub fn value(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "potential evaluated at negative radius {r}");
        match self {
            Self::ExpWell { v_inf, c0, lambda } => v_inf - c0 * (-lambda * v_inf.sqrt() * r).exp(),
            Self::Constant { v_inf } => *v_inf,
            Self::Tabulated { radii, values, v_inf, .. } => {
                if radii.is_empty() {
                    return *v_inf;
                }
                if r <= radii[0] {
                    return values[0];
                }
                if r >= *radii.last().unwrap() {
                    return *values.last().unwrap();
                }
                let hi = radii.partition_point(|&x| x < r);
                let (r0, r1) = (radii[hi - 1], radii[hi]);
                let t = (r - r0) / (r1 - r0);
                values[hi - 1] * (1.0 - t) + values[hi] * t
            }
        }
    }

    /// Check the standing assumptions against a symmetry class (ℓ, n).
    /// Diagnostic: never fails, lists every violated condition.
    pub fn validate(&self, ell: usize, n: usize) -> ValidationReport {
        let mut failures = Vec::new();
        let v_inf = self.v_inf();
        if !(v_inf > 0.0) {
            failures.push(format!("limit value must be positive, got {v_inf}"));
        }
        let chord = 2.0 * (std::f64::consts::PI / (ell * n) as f64).sin();
        let (c0, lambda, r0) = match self {
            Self::ExpWell { c0, lambda, .. } => (*c0, *lambda, 0.0),
            Self::Constant { .. } => {
                failures.push("constant potential never lies strictly below its limit".into());
                (0.0, 0.0, 0.0)
            }
            Self::Tabulated { c0, lambda, r0, .. } => (*c0, *lambda, *r0),
        };
        if !matches!(self, Self::Constant { .. }) {
            if !(c0 > 0.0) {
                failures.push(format!("decay amplitude must be positive, got {c0}"));
            }
            if !(lambda > 0.0 && lambda < chord) {
                failures.push(format!(
                    "decay rate {lambda} outside (0, 2 sin(pi/{})) = (0, {chord:.6})",
                    ell * n
                ));
            }
            // inf V > 0 and the upper envelope, on a radius sample.
            let r_hi = 100.0 / (lambda.max(1e-3) * v_inf.max(1e-6).sqrt());
            let samples = 2048;
            let mut inf_v = f64::INFINITY;
            let mut envelope_ok = true;
            for i in 0..=samples {
                let r = r_hi * i as f64 / samples as f64;
                let v = self.value(r);
                inf_v = inf_v.min(v);
                if r >= r0 {
                    let bound = v_inf - c0 * (-lambda * v_inf.max(0.0).sqrt() * r).exp();
                    if v > bound + 1e-12 * v_inf.abs().max(1.0) {
                        envelope_ok = false;
                    }
                }
            }
            if !(inf_v > 0.0) {
                failures.push(format!("potential is not positive everywhere (inf {inf_v:.6})"));
            }
            if !envelope_ok {
                failures.push("potential exceeds the exponential envelope beyond R0".into());
            }
        }
        ValidationReport { ok: failures.is_empty(), failures }
    }

    /// Supremum of V over [0, r_hi]; the well profiles take it at r_hi.
    pub fn sup_on(&self, r_hi: f64) -> f64 {
        match self {
            Self::ExpWell { .. } | Self::Constant { .. } => self.value(r_hi).max(self.v_inf()),
            Self::Tabulated { .. } => {
                let samples = 1024;
                (0..=samples)
                    .map(|i| self.value(r_hi * i as f64 / samples as f64))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_well_values() {
        let v = RadialPotential::exp_well(1.0, 0.5, 0.5);
        assert!((v.value(0.0) - 0.5).abs() < 1e-15);
        // Monotone increasing to the limit.
        let mut prev = v.value(0.0);
        for i in 1..200 {
            let cur = v.value(i as f64 * 0.5);
            assert!(cur >= prev);
            prev = cur;
        }
        assert!((v.value(80.0) - 1.0).abs() < 1e-12);
        // λ √V_∞ r > 30 ⇒ within 1e-12 of the limit.
        assert!((v.value(61.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_profile() {
        let v = RadialPotential::constant(2.5);
        for r in [0.0, 1.0, 100.0] {
            assert_eq!(v.value(r), 2.5);
        }
    }

    #[test]
    fn validation_accepts_default_well() {
        // λ = 0.5 < 2 sin(π/2) = 2 for ℓ=2, n=1.
        let v = RadialPotential::exp_well(1.0, 0.5, 0.5);
        let report = v.validate(2, 1);
        assert!(report.ok, "{:?}", report.failures);
    }

    #[test]
    fn validation_rejects_fast_decay() {
        // λ = 2.1 >= 2 sin(π/2) = 2.
        let v = RadialPotential::exp_well(1.0, 0.5, 2.1);
        let report = v.validate(2, 1);
        assert!(!report.ok);
        assert!(report.failures.iter().any(|f| f.contains("decay rate")));
    }

    #[test]
    fn validation_rejects_nonpositive_infimum() {
        // C₀ = 1.5 > V_∞ = 1 makes V(0) negative.
        let v = RadialPotential::exp_well(1.0, 1.5, 0.5);
        let report = v.validate(2, 1);
        assert!(!report.ok);
        assert!(report.failures.iter().any(|f| f.contains("not positive")));
    }

    #[test]
    fn tabulated_interpolates() {
        let v = RadialPotential::Tabulated {
            radii: vec![0.0, 1.0, 2.0],
            values: vec![0.5, 0.8, 1.0],
            v_inf: 1.0,
            c0: 0.5,
            lambda: 0.5,
            r0: 0.0,
        };
        assert!((v.value(0.5) - 0.65).abs() < 1e-14);
        assert_eq!(v.value(5.0), 1.0);
    }

    #[test]
    fn default_well_uses_half_admissible_rate() {
        let v = RadialPotential::default_well(2, 2);
        match v {
            RadialPotential::ExpWell { lambda, .. } => {
                assert!((lambda - (std::f64::consts::PI / 4.0).sin()).abs() < 1e-15);
            }
            _ => panic!("expected well"),
        }
        assert!(v.validate(2, 2).ok);
    }
}
