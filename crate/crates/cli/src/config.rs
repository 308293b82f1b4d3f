//! Run configuration: a flat JSON file, with command-line overrides applied
//! key by key. Unknown keys are rejected.

use pinwheel_core::grid::{GridParams, PolarGrid};
use pinwheel_core::potential::RadialPotential;
use pinwheel_core::solver::SolveOptions;
use pinwheel_core::symmetry::PinwheelConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // Problem instance.
    pub ell: usize,
    pub n: usize,
    pub dim: usize,
    pub p: f64,
    pub beta: f64,
    // Potential.
    pub v_inf: f64,
    pub c0: f64,
    /// Decay rate; if null, sin(π/ℓn) (half the admissible maximum).
    pub lambda: Option<f64>,
    /// "exp-well" or "constant".
    pub potential: String,
    // Grid.
    pub nr: usize,
    pub m: usize,
    pub r_max: f64,
    pub ns: usize,
    pub s_max: f64,
    // 1D reference grid for the limit problem.
    pub radial_cells: usize,
    pub radial_r_max: f64,
    // Solver.
    pub tol: Option<f64>,
    pub max_iters: usize,
    pub positivity_clamp: bool,
    pub monitor_radius_frac: f64,
    /// Placement radius of the initial bumps; if null, r_max/2.
    pub r_init: Option<f64>,
    /// Multi-start count over jittered placement radii (1 = single start).
    pub starts: usize,
    pub seed: u64,
    // Sweeps.
    pub beta_schedule: Vec<f64>,
    pub r_sweep: Vec<f64>,
    /// Relative support threshold for partition extraction.
    pub partition_threshold: f64,
    // Output.
    pub out_dir: String,
    /// Heatmap raster size in pixels.
    pub image_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ell: 2,
            n: 1,
            dim: 2,
            p: 2.0,
            beta: -1.0,
            v_inf: 1.0,
            c0: 0.5,
            lambda: None,
            potential: "exp-well".into(),
            nr: 64,
            m: 48,
            r_max: 8.0,
            ns: 1,
            s_max: 0.0,
            radial_cells: 768,
            radial_r_max: 12.0,
            tol: None,
            max_iters: 60_000,
            r_init: None,
            positivity_clamp: true,
            monitor_radius_frac: 0.8,
            starts: 1,
            seed: 7,
            beta_schedule: vec![-1.0, -1e1, -1e2, -1e3, -1e4],
            r_sweep: vec![8.0, 10.0, 12.0, 14.0],
            partition_threshold: 1e-3,
            out_dir: "out".into(),
            image_size: 256,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }

    /// Apply `key=value` overrides onto the JSON representation, then
    /// re-parse with unknown-key rejection.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let map = value.as_object_mut().expect("config is a JSON object");
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("override `{item}` is not key=value")))?;
            if !map.contains_key(key) {
                return Err(ConfigError(format!("unknown config key `{key}`")));
            }
            let parsed: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            map.insert(key.to_string(), parsed);
        }
        serde_json::from_value(value).map_err(|e| ConfigError(format!("invalid override: {e}")))
    }

    pub fn pinwheel(&self) -> Result<PinwheelConfig, ConfigError> {
        PinwheelConfig::new(self.ell, self.n, self.dim, self.p, self.beta)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
            .unwrap_or_else(|| (std::f64::consts::PI / (self.ell * self.n) as f64).sin())
    }

    pub fn potential(&self) -> Result<RadialPotential, ConfigError> {
        match self.potential.as_str() {
            "exp-well" => Ok(RadialPotential::exp_well(self.v_inf, self.c0, self.lambda())),
            "constant" => Ok(RadialPotential::constant(self.v_inf)),
            other => Err(ConfigError(format!(
                "unknown potential profile `{other}` (expected exp-well or constant)"
            ))),
        }
    }

    pub fn grid(&self) -> Result<Arc<PolarGrid>, ConfigError> {
        let params = if self.dim == 2 {
            GridParams::plane(self.nr, self.m, self.r_max, self.ell, self.n)
        } else {
            GridParams::cylinder(
                self.nr, self.m, self.r_max, self.ns, self.s_max, self.dim, self.ell, self.n,
            )
        };
        PolarGrid::build(params).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn solve_options(&self, c_inf: Option<f64>) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            c_inf,
            max_iters: self.max_iters,
            positivity_clamp: self.positivity_clamp,
            monitor_radius_frac: self.monitor_radius_frac,
            ..Default::default()
        }
    }

    /// Joint validation: grid divisibility, potential admissibility,
    /// subcriticality. Collects every failure. Dimension 1 is admitted as
    /// a pure radial-oracle configuration (scalar runs only).
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut failures = Vec::new();
        if self.dim != 1 {
            if let Err(e) = self.pinwheel() {
                failures.push(e.to_string());
            }
            if let Err(e) = self.grid() {
                failures.push(e.to_string());
            }
        } else if !(self.p > 1.0) {
            failures.push("exponent p must exceed 1".into());
        }
        match self.potential() {
            Ok(pot) => {
                let report = pot.validate(self.ell.max(1), self.n.max(1));
                // The constant profile is admissible for plain solves but
                // not for the decay machinery; only hard failures count.
                for f in report.failures {
                    if !f.contains("strictly below its limit") {
                        failures.push(f);
                    }
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
        if self.starts == 0 {
            failures.push("starts must be >= 1".into());
        }
        if !(self.partition_threshold > 0.0) {
            failures.push("partition threshold must be positive".into());
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(failures.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn overrides_apply_and_reject_unknown_keys() {
        let cfg = RunConfig::default();
        let out = cfg.with_overrides(&["beta=-2.5".into(), "nr=64".into()]).unwrap();
        assert_eq!(out.beta, -2.5);
        assert_eq!(out.nr, 64);
        assert!(cfg.with_overrides(&["no_such_key=1".into()]).is_err());
        assert!(cfg.with_overrides(&["beta".into()]).is_err());
    }

    #[test]
    fn unknown_json_keys_rejected() {
        let err = serde_json::from_str::<RunConfig>("{\"surprise\": 1}");
        assert!(err.is_err());
    }
}
