//! Strictly parsed run configuration (TOML; unknown keys rejected).

use crate::error::{Error, Result};
use serde::Deserialize;
use std::path::Path;

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub linear: EvolutionConfig,
    #[serde(default)]
    pub nonlinear: NonlinearConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub u0: f64,
    pub ode_tol: f64,
    pub fit_degree: usize,
    /// Optional explicit shooting bracket for U''(0).
    pub q_bracket: Option<(f64, f64)>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            u0: 1.0,
            ode_tol: 1e-12,
            fit_degree: 64,
            q_bracket: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub basis_dim: usize,
    pub quad_n: usize,
    pub k_max: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            basis_dim: 64,
            quad_n: 200,
            k_max: 12,
        }
    }
}

/// Initial-data specification for evolutions.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct InitialData {
    /// "constant" | "linear" (a + b x/l) | "random" (seeded coefficients).
    pub kind: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Second coefficient for kind = "linear".
    #[serde(default)]
    pub slope: f64,
    /// Polynomial degree for kind = "random".
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default)]
    pub seed: u64,
    /// If true, rescale the random draw so |V0|_6 equals `amplitude`.
    #[serde(default)]
    pub normalize_h6: bool,
}

fn default_amplitude() -> f64 {
    0.01
}

fn default_degree() -> usize {
    10
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            kind: "constant".into(),
            amplitude: 0.01,
            slope: 0.0,
            degree: 10,
            seed: 0,
            normalize_h6: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub h: f64,
    pub s_max: f64,
    #[serde(default)]
    pub v0: InitialData,
    /// k-indices of the extra norms recorded per step.
    #[serde(default = "default_k_list")]
    pub k_list: Vec<usize>,
}

fn default_k_list() -> Vec<usize> {
    vec![2, 4, 6]
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            h: 0.01,
            s_max: 5.0,
            v0: InitialData::default(),
            k_list: default_k_list(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearConfig {
    pub h: f64,
    pub s_max: f64,
    #[serde(default)]
    pub v0: InitialData,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_gate")]
    pub smallness_gate: f64,
    #[serde(default = "default_k_list")]
    pub k_list: Vec<usize>,
    /// Record a physical snapshot every this many steps (0 = none).
    #[serde(default = "default_snapshot_stride")]
    pub snapshot_stride: usize,
}

fn default_margin() -> f64 {
    crate::nonlinear::DEFAULT_MARGIN
}

fn default_gate() -> f64 {
    crate::nonlinear::DEFAULT_SMALLNESS_GATE
}

fn default_snapshot_stride() -> usize {
    50
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        NonlinearConfig {
            h: 0.01,
            s_max: 30.0,
            v0: InitialData::default(),
            margin: default_margin(),
            smallness_gate: default_gate(),
            k_list: default_k_list(),
            snapshot_stride: default_snapshot_stride(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
        }
    }
}

impl InitialData {
    /// Realize the initial datum in a given basis. Random draws are seeded
    /// (ChaCha stream) so identical configs give identical fields.
    pub fn build(
        &self,
        basis: &crate::basis::Basis,
        table: &crate::spaces::NormTable,
    ) -> Result<crate::basis::Field> {
        use rand::SeedableRng;
        match self.kind.as_str() {
            "constant" => Ok(crate::basis::Field::constant(self.amplitude, basis.dim)),
            "linear" => {
                let mut f = crate::basis::Field::constant(self.amplitude, basis.dim);
                f.coeffs[1] = self.slope; // coefficient on P_1(x/l) = x/l
                Ok(f)
            }
            "random" => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
                let mut f = crate::basis::random_field(basis.dim, self.degree, &mut rng);
                if self.normalize_h6 {
                    let n6 = table.norm_k(&f, 6.min(table.k_max));
                    if n6 == 0.0 {
                        return Err(Error::Input("random draw degenerated to zero".into()));
                    }
                    f = f.scale(self.amplitude / n6);
                } else {
                    f = f.scale(self.amplitude);
                }
                Ok(f)
            }
            other => Err(Error::Input(format!(
                "unknown initial-data kind {other:?} (constant | linear | random)"
            ))),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_str_strict(&text)
    }

    pub fn from_str_strict(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Input(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.profile.u0 > 0.0) {
            return Err(Error::Input("U0 must be positive".into()));
        }
        if !(self.profile.ode_tol > 0.0) {
            return Err(Error::Input("ode_tol must be positive".into()));
        }
        if self.profile.fit_degree < 16 {
            return Err(Error::Input(
                "fit_degree below 16 cannot reach the residual tolerance".into(),
            ));
        }
        if self.discretization.basis_dim < 8 {
            return Err(Error::Input("basis_dim must be at least 8".into()));
        }
        if self.discretization.quad_n < self.discretization.basis_dim {
            return Err(Error::Input(
                "quad_n must be at least basis_dim for a definite mass matrix".into(),
            ));
        }
        if self.discretization.k_max > 16 {
            return Err(Error::Input("k_max above 16 is not supported".into()));
        }
        for (name, h, s) in [
            ("linear", self.linear.h, self.linear.s_max),
            ("nonlinear", self.nonlinear.h, self.nonlinear.s_max),
        ] {
            if !(h > 0.0 && h <= 1.0) {
                return Err(Error::Input(format!("{name}.h must lie in (0, 1]")));
            }
            if s < h {
                return Err(Error::Input(format!("{name}.s_max must be at least h")));
            }
        }
        if !(self.nonlinear.margin > 0.0 && self.nonlinear.margin < 1.0) {
            return Err(Error::Input("margin must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
