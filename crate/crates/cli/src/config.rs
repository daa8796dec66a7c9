//! TOML run configuration: the model, then one optional table per stage.
//!
//! ```toml
//! k = 2
//! L = 1.0
//! beta = 0.5
//! phi0 = "200*x1 + sin(x2)"
//! sigma = 150.0
//! C1 = 1.1
//! C2 = 1.1
//! seed = 7
//!
//! [perturbation]
//! law = "gaussian"
//! mean = 0.0
//! std = 0.5
//!
//! [ulam]
//! grid = [64, 64]
//! ```

use std::path::{Path, PathBuf};

use gapkit_core::expr::parse_expression;
use gapkit_core::model::{ModelSpec, PerturbationSpec};
use gapkit_core::ulam::{strategies, AssemblyOptions, StationaryOptions, SubdominantOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryOptions {
    /// Per-axis sampling resolution of the derivative bounds.
    pub resolution: usize,
    /// Nodes per transverse axis when tracing the branch boundaries.
    pub boundary_sampling: usize,
    /// Perturbation value at which the boundaries are traced.
    pub boundary_theta: f64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self {
            resolution: 64,
            boundary_sampling: 64,
            boundary_theta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferOptions {
    /// Order of the `θ` rule used by the averaged operator.
    pub quad_order: usize,
    /// Radius requested for the Lasota–Yorke constants; defaults to the
    /// separation radius of the geometry.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self {
            quad_order: 4,
            eps0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UlamOptions {
    /// Boxes per axis; 64 on every axis when empty.
    pub grid: Vec<usize>,
    pub strategy: String,
    pub theta_order: usize,
    pub subsamples: usize,
}

impl Default for UlamOptions {
    fn default() -> Self {
        let a = AssemblyOptions::default();
        Self {
            grid: Vec::new(),
            strategy: a.strategy,
            theta_order: a.theta_order,
            subsamples: a.subsamples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub cesaro_window: usize,
    pub cesaro_rounds: usize,
    pub restarts: usize,
    pub subdominant_iterations: usize,
    pub window: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        let s = StationaryOptions::default();
        let d = SubdominantOptions::default();
        Self {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            cesaro_window: s.cesaro_window,
            cesaro_rounds: s.cesaro_rounds,
            restarts: d.restarts,
            subdominant_iterations: d.max_iterations,
            window: d.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateOptions {
    pub steps: usize,
    /// `X_0, …, X_{k−1}`; zeros when empty.
    pub x0: Vec<f64>,
    pub burn_in: usize,
    /// Write the full trajectory CSV, not only its summary.
    pub write_trajectory: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            steps: 1_000_000,
            x0: Vec::new(),
            burn_in: 1000,
            write_trajectory: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarginalOptions {
    /// `L¹` bound for the cross-axis, empirical and pushforward comparisons.
    pub tolerance: f64,
    /// Sample size of the one-step pushforward check; 0 skips it.
    pub pushforward_samples: usize,
}

impl Default for MarginalOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.05,
            pushforward_samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayOptions {
    pub n_max: usize,
    /// `(f, h)` pairs written over `x1 … xk`, the values of the process in
    /// the window. Defaults to `sin(2·x1)` against `sin(2·x2)` and
    /// `cos(5·x1)` against `cos(5·x2)`, with `x2` read as `x1` when `k = 1`.
    pub pairs: Vec<[String; 2]>,
    /// Allowed excess of the fitted rate over `|λ₂|`.
    pub rate_slack: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            n_max: 40,
            pairs: Vec::new(),
            rate_slack: 0.05,
        }
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub seed: u64,
    /// Where artifacts go; left out of the artifacts themselves so that
    /// runs differing only in location produce identical files.
    #[serde(skip)]
    pub out: PathBuf,
    pub geometry: GeometryOptions,
    pub transfer: TransferOptions,
    pub ulam: UlamOptions,
    pub spectrum: SpectrumOptions,
    pub simulate: SimulateOptions,
    pub marginals: MarginalOptions,
    pub decay: DecayOptions,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    k: Option<usize>,
    #[serde(rename = "L")]
    l: Option<f64>,
    beta: Option<f64>,
    phi0: Option<String>,
    sigma: Option<f64>,
    #[serde(rename = "C1")]
    c1: Option<f64>,
    #[serde(rename = "C2")]
    c2: Option<f64>,
    perturbation: Option<PerturbationSpec>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    geometry: GeometryOptions,
    #[serde(default)]
    transfer: TransferOptions,
    #[serde(default)]
    ulam: UlamOptions,
    #[serde(default)]
    spectrum: SpectrumOptions,
    #[serde(default)]
    simulate: SimulateOptions,
    #[serde(default)]
    marginals: MarginalOptions,
    #[serde(default)]
    decay: DecayOptions,
}

pub const DEFAULT_OUT: &str = "gapkit-out";

fn required<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("{name} required")))
}

fn check(ok: bool, message: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(message.into()))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
    let k = required(raw.k, "k")?;
    check(k >= 1, "k must be at least 1")?;
    let l = required(raw.l, "L")?;
    let beta = required(raw.beta, "beta")?;
    let phi0 = required(raw.phi0, "phi0")?;
    let sigma = required(raw.sigma, "sigma")?;
    let c1 = required(raw.c1, "C1")?;
    let c2 = required(raw.c2, "C2")?;
    let perturbation = required(raw.perturbation, "perturbation")?;
    let phi0 = parse_expression(&phi0, k).map_err(|e| CliError::Config(format!("phi0: {e}")))?;
    let model = ModelSpec::new(k, l, beta, phi0, perturbation, c1, c2, sigma).map_err(|e| {
        CliError::Config(
            e.to_string()
                .trim_start_matches("invalid model: ")
                .to_string(),
        )
    })?;

    let mut cfg = RunConfig {
        model,
        seed: raw.seed.unwrap_or(0),
        out: raw.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        geometry: raw.geometry,
        transfer: raw.transfer,
        ulam: raw.ulam,
        spectrum: raw.spectrum,
        simulate: raw.simulate,
        marginals: raw.marginals,
        decay: raw.decay,
    };
    if cfg.ulam.grid.is_empty() {
        cfg.ulam.grid = vec![64; k];
    }
    if cfg.simulate.x0.is_empty() {
        cfg.simulate.x0 = vec![0.0; k];
    }
    if cfg.decay.pairs.is_empty() {
        let x2 = if k >= 2 { "x2" } else { "x1" };
        cfg.decay.pairs = vec![
            ["sin(2*x1)".into(), format!("sin(2*{x2})")],
            ["cos(5*x1)".into(), format!("cos(5*{x2})")],
        ];
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let k = self.model.k;
        let l = self.model.l;
        check(
            self.geometry.resolution >= 2,
            "geometry.resolution must be at least 2",
        )?;
        check(
            self.geometry.boundary_sampling >= 2,
            "geometry.boundary_sampling must be at least 2",
        )?;
        check(
            self.geometry.boundary_theta.is_finite(),
            "geometry.boundary_theta must be finite",
        )?;
        check(
            self.transfer.quad_order >= 2,
            "transfer.quad_order must be at least 2",
        )?;
        if let Some(e) = self.transfer.eps0 {
            check(e > 0.0 && e.is_finite(), "transfer.eps0 must be positive")?;
        }
        check(
            self.ulam.grid.len() == k,
            "ulam.grid must list one box count per axis",
        )?;
        check(
            self.ulam.grid.iter().all(|&n| n >= 1),
            "ulam.grid counts must be positive",
        )?;
        check(
            strategies().get(&self.ulam.strategy).is_ok(),
            "ulam.strategy names no registered strategy",
        )?;
        check(
            self.ulam.theta_order >= 1,
            "ulam.theta_order must be at least 1",
        )?;
        check(
            self.ulam.subsamples >= 1,
            "ulam.subsamples must be at least 1",
        )?;
        let s = &self.spectrum;
        check(s.tolerance > 0.0, "spectrum.tolerance must be positive")?;
        check(
            s.max_iterations >= 1,
            "spectrum.max_iterations must be at least 1",
        )?;
        check(
            s.cesaro_window >= 1,
            "spectrum.cesaro_window must be at least 1",
        )?;
        check(s.restarts >= 1, "spectrum.restarts must be at least 1")?;
        check(s.window >= 2, "spectrum.window must be at least 2")?;
        check(
            s.subdominant_iterations >= s.window,
            "spectrum.subdominant_iterations must be at least spectrum.window",
        )?;
        let sim = &self.simulate;
        check(sim.steps >= 1, "simulate.steps must be at least 1")?;
        check(sim.x0.len() == k, "simulate.x0 must hold k values")?;
        check(
            sim.x0.iter().all(|v| v.abs() <= l),
            "simulate.x0 values must lie in [-L, L]",
        )?;
        check(
            10 * sim.burn_in <= sim.steps + k,
            "simulate.burn_in must be at most a tenth of simulate.steps",
        )?;
        check(
            self.marginals.tolerance > 0.0,
            "marginals.tolerance must be positive",
        )?;
        check(self.decay.n_max >= 4, "decay.n_max must be at least 4")?;
        check(
            self.decay.rate_slack >= 0.0,
            "decay.rate_slack must be nonnegative",
        )?;
        for (i, pair) in self.decay.pairs.iter().enumerate() {
            for text in pair {
                parse_expression(text, k)
                    .map_err(|e| CliError::Config(format!("decay.pairs[{i}]: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions {
            strategy: self.ulam.strategy.clone(),
            theta_order: self.ulam.theta_order,
            subsamples: self.ulam.subsamples,
            seed: self.seed,
        }
    }

    pub fn stationary_options(&self) -> StationaryOptions {
        let s = &self.spectrum;
        StationaryOptions {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            cesaro_window: s.cesaro_window,
            cesaro_rounds: s.cesaro_rounds,
        }
    }

    pub fn subdominant_options(&self) -> SubdominantOptions {
        let s = &self.spectrum;
        SubdominantOptions {
            restarts: s.restarts,
            max_iterations: s.subdominant_iterations,
            window: s.window,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
k = 2
L = 1.0
beta = 0.5
phi0 = "200*x1 + sin(x2)"
sigma = 150.0
C1 = 1.1
C2 = 1.1

[perturbation]
law = "gaussian"
mean = 0.0
std = 0.5
"#;

    fn message(e: CliError) -> String {
        match e {
            CliError::Config(m) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.model.k, 2);
        assert_eq!(c.seed, 0);
        assert_eq!(c.out, PathBuf::from(DEFAULT_OUT));
        assert_eq!(c.ulam.grid, vec![64, 64]);
        assert_eq!(c.ulam.strategy, "cdf");
        assert_eq!(c.transfer.quad_order, 4);
        assert_eq!(c.simulate.x0, vec![0.0, 0.0]);
        assert_eq!(c.decay.pairs.len(), 2);
    }

    #[test]
    fn missing_phi0() {
        let text = MINIMAL.replace("phi0 = \"200*x1 + sin(x2)\"\n", "");
        assert_eq!(message(parse_config(&text).unwrap_err()), "phi0 required");
    }

    #[test]
    fn c1_below_one() {
        let text = MINIMAL.replace("C1 = 1.1", "C1 = 0.9");
        assert_eq!(
            message(parse_config(&text).unwrap_err()),
            "C1 must exceed 1"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let m = message(parse_config(&format!("{MINIMAL}\n[ulam]\ngird = [8, 8]\n")).unwrap_err());
        assert!(m.contains("gird"), "{m}");
        let m = message(parse_config(&format!("colour = 1\n{MINIMAL}")).unwrap_err());
        assert!(m.contains("colour"), "{m}");
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let m = message(parse_config("k = 2\nL = = 1\n").unwrap_err());
        assert!(m.contains("line 2"), "{m}");
    }

    #[test]
    fn stage_options_are_checked() {
        let m = message(parse_config(&format!("{MINIMAL}\n[ulam]\ngrid = [8]\n")).unwrap_err());
        assert!(m.starts_with("ulam.grid"), "{m}");
        let m = message(
            parse_config(&format!("{MINIMAL}\n[decay]\npairs = [[\"x3\", \"x1\"]]\n")).unwrap_err(),
        );
        assert!(m.starts_with("decay.pairs[0]"), "{m}");
        let m = message(
            parse_config(&format!(
                "{MINIMAL}\n[simulate]\nsteps = 100\nburn_in = 50\n"
            ))
            .unwrap_err(),
        );
        assert!(m.starts_with("simulate.burn_in"), "{m}");
    }

    #[test]
    fn resolved_config_serializes_flat() {
        let c = parse_config(MINIMAL).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["phi0"], "200*x1 + sin(x2)");
        assert_eq!(v["C1"], 1.1);
        assert_eq!(v["ulam"]["grid"], serde_json::json!([64, 64]));
    }
}
