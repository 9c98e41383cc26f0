//! Campaign configuration for `strukt certify`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use strukt_core::backward::ThresholdMode;
use strukt_core::linearize::Placement;
use strukt_core::polycore::StructureKind;

use crate::CliError;

/// Where reports go; relative paths are taken from the working directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// CSV report.
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// JSON report.
    #[serde(default)]
    pub json: Option<PathBuf>,
}

/// One certification campaign: `norms × trials` perturbations of one `P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Structure of `P`.
    pub kind: StructureKind,
    /// Odd grade of `P`.
    pub g: usize,
    /// Size of `P`.
    pub n: usize,
    /// Placement of the coefficients in `M`.
    #[serde(default = "default_placement")]
    pub placement: Placement,
    /// `σ`; must equal the kind's own sign when given.
    #[serde(default)]
    pub sigma: Option<i8>,
    /// `‖ΔL‖_F` values.
    pub norms: Vec<f64>,
    /// Trials per norm.
    pub trials: usize,
    /// Campaign seed.
    #[serde(default)]
    pub seed: u64,
    /// Threshold mode.
    #[serde(default)]
    pub mode: ThresholdMode,
    /// `‖P‖_F` of the random `P`.
    #[serde(default = "default_p_norm")]
    pub p_norm: f64,
    /// Polynomial file used instead of a random `P`.
    #[serde(default)]
    pub polynomial: Option<PathBuf>,
    /// Compare eigenvalues of `L+ΔL` and `P+ΔP`.
    #[serde(default = "default_check_eigs")]
    pub check_eigs: bool,
    /// Report destinations; CSV on stdout when both are absent.
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_placement() -> Placement {
    Placement::Tridiagonal
}

fn default_p_norm() -> f64 {
    1.0
}

fn default_check_eigs() -> bool {
    true
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: StructureKind::Symmetric,
            g: 5,
            n: 2,
            placement: Placement::Tridiagonal,
            sigma: None,
            norms: vec![1e-10, 1e-8, 1e-6],
            trials: 100,
            seed: 1,
            mode: ThresholdMode::Certified,
            p_norm: 1.0,
            polynomial: None,
            check_eigs: true,
            output: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    /// Read and validate a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check the invariants: odd grade, at least one trial, finite nonnegative norms.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        if self.g.is_multiple_of(2) {
            return bad(format!("odd grade required (got {})", self.g));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.norms.is_empty() || self.norms.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return bad("norms must be a nonempty list of finite nonnegative values".into());
        }
        if !(self.p_norm.is_finite() && self.p_norm > 0.0) {
            return bad("p_norm must be positive".into());
        }
        if let Some(s) = self.sigma {
            if s != self.kind.sigma() {
                return bad(format!("sigma for {} is {}", self.kind, self.kind.sigma()));
            }
        }
        Ok(())
    }
}
