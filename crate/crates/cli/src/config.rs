//! Run configuration: a single JSON document selecting a command and its
//! parameters. Unknown keys are rejected everywhere.

use cgs_core::hadamard::SignMatrix;
use cgs_core::lattice::LatticeGeometry;
use cgs_core::loops::{McInit, McMode};
use cgs_core::quantum::WxyCluster;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Symmetry,
    Classical,
    Loops,
    Mc,
    Ed,
    Wxy,
    Wkb,
    Circuit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Symmetry => "symmetry",
            Command::Classical => "classical",
            Command::Loops => "loops",
            Command::Mc => "mc",
            Command::Ed => "ed",
            Command::Wxy => "wxy",
            Command::Wkb => "wkb",
            Command::Circuit => "circuit",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub lx: usize,
    pub ly: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    /// Master seed; mandatory for `mc`, defaults to 0 elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Basename prefix for result files.
    #[serde(default = "default_prefix")]
    pub out_prefix: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loops: Option<LoopsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ed: Option<EdParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wxy: Option<WxyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wkb: Option<WkbCliParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitParams>,
}

fn default_prefix() -> String {
    "run".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SymmetryParams {
    /// Also enumerate with monomial (non-diagonal) R, for exploration.
    #[serde(default)]
    pub full_monomial_r: bool,
    /// Override the coupling matrix; any 4×4 Hadamard is accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<[[i32; 4]; 4]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalParams {
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    /// Plaquette for the type-a path; defaults to an elementary-loop
    /// plaquette of the crystal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plaquette_a: Option<(usize, usize)>,
    /// Plaquette for the type-b and naive paths; defaults to a
    /// loop-surrounded plaquette of the crystal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plaquette_b: Option<(usize, usize)>,
}

fn default_steps() -> usize {
    cgs_core::classical::DEFAULT_PATH_STEPS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopsParams {
    /// Fugacities at which to evaluate the partition function.
    pub lambda: Vec<f64>,
    #[serde(default = "default_exemplars")]
    pub max_exemplars: usize,
    /// Also run the exhaustive joint (pairing × τ) factorization check
    /// (2×2 only).
    #[serde(default)]
    pub factorization: bool,
}

fn default_exemplars() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McParams {
    pub k_eff: Vec<f64>,
    pub mode: McMode,
    pub steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_every: Option<u64>,
    #[serde(default = "default_chains")]
    pub chains: u64,
    #[serde(default = "default_init")]
    pub init: McInit,
}

fn default_chains() -> u64 {
    1
}

fn default_init() -> McInit {
    McInit::Random
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdParams {
    pub lambda_j: f64,
    pub lambda_flip: LambdaFlipParam,
    /// How many low eigenvalues the iterative path reports when the
    /// dimension is too large for a dense solve.
    #[serde(default = "default_n_low")]
    pub n_low: usize,
    /// Also write the Hamiltonian terms as a coordinate-format file.
    #[serde(default)]
    pub emit_operator: bool,
}

fn default_n_low() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaFlipParam {
    Uniform(f64),
    TwoValue { type_a: f64, type_b: f64 },
}

impl LambdaFlipParam {
    pub fn to_core(&self) -> cgs_core::quantum::LambdaFlip<f64> {
        match *self {
            LambdaFlipParam::Uniform(v) => cgs_core::quantum::LambdaFlip::Uniform(v),
            LambdaFlipParam::TwoValue { type_a, type_b } => {
                cgs_core::quantum::LambdaFlip::TwoValue { type_a, type_b }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WxyParams {
    pub cluster: WxyCluster,
    #[serde(default = "default_j")]
    pub j: f64,
    #[serde(default)]
    pub bias_matter: f64,
    #[serde(default)]
    pub bias_gauge: f64,
    #[serde(default = "default_n_low")]
    pub n_low: usize,
}

fn default_j() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WkbCliParams {
    #[serde(default = "default_j")]
    pub j: f64,
    pub k: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
    pub jc_from: f64,
    pub jc_to: f64,
    #[serde(default = "default_ppd")]
    pub points_per_decade: usize,
}

fn default_ppd() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    #[serde(default = "default_d_j")]
    pub d_j: f64,
    #[serde(default = "default_e_lj_grid")]
    pub e_lj_grid: Vec<f64>,
    #[serde(default = "default_n_junctions")]
    pub calibration_junctions: usize,
    /// Disorder half-width relative to J_target (must stay within d_j).
    #[serde(default = "default_disorder")]
    pub disorder_rel: f64,
    /// Capacitances in femtofarads:
    /// [c_j, c_m, c_g, c_m_par, c_m_par2, c_m_par3, c_g_par, c_g_par2, c_g_par3].
    #[serde(default = "default_caps")]
    pub capacitances_ff: [f64; 9],
}

fn default_d_j() -> f64 {
    0.05
}

fn default_e_lj_grid() -> Vec<f64> {
    vec![0.003, 0.01, 0.03]
}

fn default_n_junctions() -> usize {
    1000
}

fn default_disorder() -> f64 {
    0.04
}

fn default_caps() -> [f64; 9] {
    [50.0, 10.0, 10.0, 1.0, 0.3, 0.1, 1.0, 0.3, 0.1]
}

/// Parse and validate a config document. Errors name the offending key or
/// the failed requirement.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), String> {
    let needs_geometry = matches!(
        config.command,
        Command::Classical | Command::Loops | Command::Mc | Command::Ed
    );
    if needs_geometry {
        let Some(geom) = config.geometry else {
            return Err(format!(
                "`geometry` is required for the {} command",
                config.command.name()
            ));
        };
        LatticeGeometry::build(geom.lx, geom.ly).map_err(|e| format!("geometry: {e}"))?;
    }
    if matches!(config.command, Command::Mc) && config.seed.is_none() {
        return Err("`seed` is mandatory for mc runs (reproducibility contract)".into());
    }
    match config.command {
        Command::Symmetry => {
            if let Some(p) = &config.symmetry {
                if let Some(w) = p.w {
                    let m = SignMatrix::new(w).map_err(|e| format!("symmetry.w: {e}"))?;
                    if !cgs_core::hadamard::is_hadamard(&m) {
                        return Err("symmetry.w: matrix is not Hadamard (WᵀW ≠ 4·1)".into());
                    }
                }
            }
        }
        Command::Classical => {
            let p = config
                .classical
                .as_ref()
                .ok_or("`classical` parameter block is required")?;
            if p.n_steps < 8 {
                return Err("classical.n_steps: must be at least 8".into());
            }
        }
        Command::Loops => {
            let p = config
                .loops
                .as_ref()
                .ok_or("`loops` parameter block is required")?;
            if p.lambda.is_empty() {
                return Err("loops.lambda: need at least one fugacity value".into());
            }
            if p.lambda.iter().any(|&l| !(l >= 0.0)) {
                return Err("loops.lambda: fugacities must be nonnegative".into());
            }
        }
        Command::Mc => {
            let p = config
                .mc
                .as_ref()
                .ok_or("`mc` parameter block is required")?;
            if p.k_eff.is_empty() || p.k_eff.iter().any(|&k| !(k > 0.0)) {
                return Err("mc.k_eff: need positive stiffness values".into());
            }
            if p.steps == 0 || p.chains == 0 {
                return Err("mc.steps and mc.chains must be positive".into());
            }
        }
        Command::Ed => {
            let p = config
                .ed
                .as_ref()
                .ok_or("`ed` parameter block is required")?;
            if !(p.lambda_j >= 0.0) {
                return Err("ed.lambda_j: must be nonnegative".into());
            }
        }
        Command::Wxy => {
            config
                .wxy
                .as_ref()
                .ok_or("`wxy` parameter block is required")?;
        }
        Command::Wkb => {
            let p = config
                .wkb
                .as_ref()
                .ok_or("`wkb` parameter block is required")?;
            if !(p.jc_from > 0.0) || !(p.jc_to > p.jc_from) {
                return Err("wkb.jc_from/jc_to: need 0 < jc_from < jc_to".into());
            }
            if p.points_per_decade == 0 {
                return Err("wkb.points_per_decade: must be positive".into());
            }
        }
        Command::Circuit => {
            let p = config
                .circuit
                .as_ref()
                .ok_or("`circuit` parameter block is required")?;
            if !(p.d_j > 0.0 && p.d_j < 1.0) {
                return Err("circuit.d_j: must lie in (0,1)".into());
            }
            if p.disorder_rel > p.d_j {
                return Err("circuit.disorder_rel: must not exceed d_j (feasibility bound)".into());
            }
        }
    }
    Ok(())
}
