//! TOML experiment configuration. The full schema with defaults is documented
//! in `configs/SCHEMA.md`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::blowup::BlowupConfig;
use crate::capacity::TRule;
use crate::error::{Error, Result};
use crate::exponents::{MassSign, ProblemParams};
use crate::grid::{Profile, RadialField, RadialGrid, DEFAULT_INNER_RATIO, DEFAULT_NODES};
use crate::mild::{LocalConfig, MildConfig};
use crate::semigroup::{Scheme, SemigroupOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Exponents,
    TransformCheck,
    SemigroupCheck,
    MildSolve,
    BlowupScan,
    CapacityFit,
    LocalSolve,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Exponents => "exponents",
            Command::TransformCheck => "transform-check",
            Command::SemigroupCheck => "semigroup-check",
            Command::MildSolve => "mild-solve",
            Command::BlowupScan => "blowup-scan",
            Command::CapacityFit => "capacity-fit",
            Command::LocalSolve => "local-solve",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Overridden by the command given on the command line.
    pub command: Option<Command>,
    pub params: ProblemParams,
    /// Output directory, relative to the working directory.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub exponents: ExponentsSection,
    #[serde(default)]
    pub semigroup: SemigroupSection,
    #[serde(default)]
    pub transform: TransformSection,
    #[serde(default)]
    pub mild: MildSection,
    #[serde(default)]
    pub local: LocalSection,
    #[serde(default)]
    pub blowup: BlowupSection,
    #[serde(default)]
    pub capacity: CapacitySection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub r_max: f64,
    pub nodes: usize,
    pub inner_ratio: f64,
    /// `implicit-euler` or `crank-nicolson`.
    pub scheme: String,
    pub max_dt: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            r_max: 50.0,
            nodes: DEFAULT_NODES,
            inner_ratio: DEFAULT_INNER_RATIO,
            scheme: "crank-nicolson".into(),
            max_dt: 1e-3,
        }
    }
}

impl GridSection {
    pub fn scheme(&self) -> Result<Scheme> {
        match self.scheme.as_str() {
            "implicit-euler" => Ok(Scheme::ImplicitEuler),
            "crank-nicolson" => Ok(Scheme::CrankNicolson),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }

    pub fn operator(&self, params: &ProblemParams) -> Result<SemigroupOp> {
        let grid = RadialGrid::log_uniform(self.inner_ratio * self.r_max, self.r_max, self.nodes)?;
        SemigroupOp::new(Arc::new(grid), params.dim, params.sigma1, self.scheme()?, self.max_dt)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub u0: String,
    pub w: String,
    /// Rescale `w` to unit mass before applying `w_scale`.
    pub w_unit_mass: bool,
    pub w_scale: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { u0: "zero".into(), w: "zero".into(), w_unit_mass: false, w_scale: 1.0 }
    }
}

impl DataSection {
    pub fn profiles(&self) -> Result<(Profile, Profile)> {
        Ok((Profile::parse(&self.u0)?, Profile::parse(&self.w)?))
    }

    /// The forcing profile with unit-mass normalization and `w_scale` folded
    /// into its amplitude. The mass is measured on the operator's grid.
    pub fn forcing_profile(&self, op: &SemigroupOp) -> Result<Profile> {
        let w = Profile::parse(&self.w)?;
        let mut factor = self.w_scale;
        if self.w_unit_mass {
            let sampled = RadialField::from_profile(op.grid().clone(), op.dim() as f64, &w);
            let mass = sampled.integral(0.0);
            if !(mass > 0.0) {
                return Err(Error::InvalidArgument("forcing must have positive mass".into()));
            }
            factor /= mass;
        }
        Ok(w.scaled(factor))
    }

    /// `(u0, w)` sampled on the operator's grid.
    pub fn fields(&self, op: &SemigroupOp) -> Result<(RadialField, RadialField)> {
        let dim = op.dim() as f64;
        let u0 = RadialField::from_profile(op.grid().clone(), dim, &Profile::parse(&self.u0)?);
        let w = RadialField::from_profile(op.grid().clone(), dim, &self.forcing_profile(op)?);
        Ok((u0, w))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentsSection {
    pub mass: MassSign,
    pub r: Option<f64>,
    /// Extra `p` values; each gets its own row.
    pub p_list: Vec<f64>,
}

impl Default for ExponentsSection {
    fn default() -> Self {
        Self { mass: MassSign::Positive, r: None, p_list: Vec::new() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemigroupSection {
    /// `(a, b)` pairs for the `L^a → L^b` decay fit.
    pub pairs: Vec<[f64; 2]>,
    /// `(q1, q2, γ)` triples for the weighted fit.
    pub weighted: Vec<[f64; 3]>,
    pub t_max: f64,
    pub n_times: usize,
    pub scaling_lambda: f64,
    pub scaling_t: f64,
}

impl Default for SemigroupSection {
    fn default() -> Self {
        Self {
            pairs: vec![[2.0, 4.0], [2.0, 8.0], [3.0, 6.0]],
            weighted: vec![[3.0, 6.0, 0.5], [4.0, 4.0, 1.0]],
            t_max: 1.0,
            n_times: 8,
            scaling_lambda: 2.0,
            scaling_t: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    /// Trajectory storage times in the original variables.
    pub times: Vec<f64>,
    /// Times at which the residual is evaluated.
    pub test_times: Vec<f64>,
    pub dt_rel: f64,
}

impl Default for TransformSection {
    fn default() -> Self {
        let times = crate::fit::logspace(0.05, 1.0, 41);
        Self { test_times: vec![times[10], times[20], times[30]], times, dt_rel: 1e-3 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MildSection {
    /// Defaults to the middle of the admissible window.
    pub r: Option<f64>,
    pub mu: Option<f64>,
    pub max_picard: Option<usize>,
    pub picard_tol: Option<f64>,
    pub substeps: Option<usize>,
    pub t_max: Option<f64>,
    pub t_min_ratio: Option<f64>,
    pub n_times: Option<usize>,
}

impl MildSection {
    pub fn resolve(&self, params: &ProblemParams) -> Result<MildConfig> {
        let mut c = MildConfig::for_params(params)?;
        if let Some(r) = self.r {
            c.r = r;
            c.mu = crate::exponents::derived_weights(params, r)?.mu;
        }
        c.mu = self.mu.unwrap_or(c.mu);
        c.max_picard = self.max_picard.unwrap_or(c.max_picard);
        c.picard_tol = self.picard_tol.unwrap_or(c.picard_tol);
        c.substeps = self.substeps.unwrap_or(c.substeps);
        c.t_max = self.t_max.unwrap_or(c.t_max);
        c.t_min_ratio = self.t_min_ratio.unwrap_or(c.t_min_ratio);
        c.n_times = self.n_times.unwrap_or(c.n_times);
        Ok(c)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalSection {
    pub q: f64,
    pub horizon_guess: f64,
    pub n_times: usize,
    pub substeps: usize,
    pub t_min_ratio: f64,
    pub max_picard: usize,
    pub picard_tol: f64,
    pub t_floor_ratio: f64,
    pub scheme_tol: f64,
}

impl Default for LocalSection {
    fn default() -> Self {
        let d = LocalConfig::default();
        Self {
            q: d.q,
            horizon_guess: d.horizon_guess,
            n_times: d.n_times,
            substeps: d.substeps,
            t_min_ratio: d.t_min_ratio,
            max_picard: d.max_picard,
            picard_tol: d.picard_tol,
            t_floor_ratio: d.t_floor_ratio,
            scheme_tol: d.scheme_tol,
        }
    }
}

impl LocalSection {
    pub fn resolve(&self) -> LocalConfig {
        LocalConfig {
            q: self.q,
            horizon_guess: self.horizon_guess,
            n_times: self.n_times,
            substeps: self.substeps,
            t_min_ratio: self.t_min_ratio,
            max_picard: self.max_picard,
            picard_tol: self.picard_tol,
            t_floor_ratio: self.t_floor_ratio,
            scheme_tol: self.scheme_tol,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupSection {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_rel: f64,
    pub max_rel_change: f64,
    pub blowup_norm_cap: f64,
    pub t_max: f64,
    pub max_steps: usize,
    pub p_grid: Vec<f64>,
    pub bisections: usize,
    /// When set, the forcing amplitude is calibrated before the scan (see `calibrate_*`).
    pub calibrate: bool,
    pub calibrate_p: f64,
    pub calibrate_t_max: f64,
    /// Amplitude ladder `2^{k/steps_per_octave}`, `k = 0..ladder_len`.
    pub ladder_steps_per_octave: u32,
    pub ladder_len: u32,
}

impl Default for BlowupSection {
    fn default() -> Self {
        let d = BlowupConfig::default();
        Self {
            dt_init: d.dt_init,
            dt_min: d.dt_min,
            dt_max: d.dt_max,
            dt_rel: d.dt_rel,
            max_rel_change: d.max_rel_change,
            blowup_norm_cap: d.blowup_norm_cap,
            t_max: d.t_max,
            max_steps: d.max_steps,
            p_grid: Vec::new(),
            bisections: 4,
            calibrate: false,
            calibrate_p: 1.5,
            calibrate_t_max: 10.0,
            ladder_steps_per_octave: 4,
            ladder_len: 40,
        }
    }
}

impl BlowupSection {
    pub fn resolve(&self) -> BlowupConfig {
        BlowupConfig {
            dt_init: self.dt_init,
            dt_min: self.dt_min,
            dt_max: self.dt_max,
            dt_rel: self.dt_rel,
            max_rel_change: self.max_rel_change,
            blowup_norm_cap: self.blowup_norm_cap,
            t_max: self.t_max,
            max_steps: self.max_steps,
        }
    }

    pub fn ladder(&self) -> Vec<f64> {
        let s = self.ladder_steps_per_octave as f64;
        (0..self.ladder_len).map(|k| 2f64.powf(k as f64 / s)).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacitySection {
    /// `subcritical` (T = R^{2+σ1}), `power` (T = R^m) or `log` (critical log cutoff).
    pub rule: String,
    pub m: Option<f64>,
    pub r_list: Vec<f64>,
}

impl Default for CapacitySection {
    fn default() -> Self {
        Self { rule: "subcritical".into(), m: None, r_list: vec![10.0, 30.0, 100.0, 300.0, 1000.0] }
    }
}

/// What a `capacity-fit` run computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityMode {
    Fit(TRule),
    Log,
}

impl CapacitySection {
    pub fn mode(&self) -> Result<CapacityMode> {
        match (self.rule.as_str(), self.m) {
            ("subcritical", _) => Ok(CapacityMode::Fit(TRule::Subcritical)),
            ("power", Some(m)) => Ok(CapacityMode::Fit(TRule::Power(m))),
            ("power", None) => Err(Error::Config("rule 'power' needs m".into())),
            ("log", _) => Ok(CapacityMode::Log),
            (other, _) => Err(Error::Config(format!("unknown capacity rule '{other}'"))),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Resolves the command: the explicit one wins over the file's.
    pub fn command(&self, explicit: Option<Command>) -> Result<Command> {
        explicit.or(self.command).ok_or_else(|| Error::Config("no command given".into()))
    }

    /// Everything that can be checked without computing: profile names,
    /// section values, and the parameter hypotheses.
    pub fn validate(&self, command: Command) -> Result<()> {
        self.data.profiles()?;
        self.grid.scheme()?;
        if !(self.grid.r_max > 0.0
            && self.grid.inner_ratio > 0.0
            && self.grid.inner_ratio < 1.0
            && self.grid.max_dt > 0.0)
        {
            return Err(Error::Config("grid needs r_max > 0, 0 < inner_ratio < 1, max_dt > 0".into()));
        }
        if !self.data.w_scale.is_finite() {
            return Err(Error::Config("w_scale must be finite".into()));
        }
        let params = self.params.validated()?;
        match command {
            Command::Exponents => {}
            Command::TransformCheck => {
                crate::transform::transform_params(&params)?;
                if self.transform.times.len() < 3 || self.transform.test_times.is_empty() {
                    return Err(Error::Config("transform needs >= 3 times and a test time".into()));
                }
            }
            Command::SemigroupCheck => {
                let s = &self.semigroup;
                for [a, b] in &s.pairs {
                    crate::semigroup::check_smoothing_pair(params.dim, params.sigma1, *a, *b)?;
                }
                for [q1, q2, g] in &s.weighted {
                    crate::semigroup::check_weighted_condition(params.dim, params.sigma1, *q1, *q2, *g)?;
                }
                if s.n_times < 2 || !(s.t_max > 0.0) {
                    return Err(Error::Config("semigroup needs n_times >= 2 and t_max > 0".into()));
                }
            }
            Command::MildSolve => {
                let c = self.mild.resolve(&params)?;
                if !crate::exponents::critical_forced(&params).is_exceeded_by(params.p) {
                    return Err(Error::ConditionViolation(format!(
                        "global construction needs p > p* = {}",
                        crate::exponents::critical_forced(&params)
                    )));
                }
                let window = crate::exponents::r_window(&params)?;
                if !window.contains_r(c.r) {
                    return Err(Error::WindowViolation { r: c.r, lo: window.lo, hi: window.hi });
                }
            }
            Command::LocalSolve => {
                crate::exponents::local_alpha(&params, self.local.q)?;
            }
            Command::BlowupScan => {
                if self.blowup.p_grid.len() < 2 {
                    return Err(Error::Config("blowup.p_grid needs at least two values".into()));
                }
                if self.blowup.p_grid.iter().any(|p| !(*p > 1.0)) {
                    return Err(Error::InvalidParams(vec!["every p in p_grid must exceed 1".into()]));
                }
            }
            Command::CapacityFit => {
                self.capacity.mode()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorClass;

    const BASE: &str = r#"
        [params]
        N = 3
        sigma1 = 0.0
        sigma2 = 0.0
        rho = -0.5
        p = 3.0
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.params, ProblemParams::new(3, 0.0, 0.0, -0.5, 3.0));
        assert_eq!(c.grid.nodes, DEFAULT_NODES);
        assert!(c.command.is_none());
        assert!(c.validate(Command::Exponents).is_ok());
    }

    #[test]
    fn explicit_command_wins() {
        let c = ExperimentConfig::from_toml(&format!("command = \"mild-solve\"\n{BASE}")).unwrap();
        assert_eq!(c.command(None).unwrap(), Command::MildSolve);
        assert_eq!(c.command(Some(Command::Exponents)).unwrap(), Command::Exponents);
    }

    #[test]
    fn unknown_profile_is_config_error() {
        let c = ExperimentConfig::from_toml(&format!("{BASE}\n[data]\nu0 = \"lorentzian(1, 2)\"")).unwrap();
        let e = c.validate(Command::Exponents).unwrap_err();
        assert_eq!(e.class(), ErrorClass::Config);
    }

    #[test]
    fn unknown_key_is_config_error() {
        let e = ExperimentConfig::from_toml(&format!("{BASE}\n[grid]\nnodez = 3")).unwrap_err();
        assert_eq!(e.class(), ErrorClass::Config);
    }

    #[test]
    fn hypothesis_violation_caught_before_compute() {
        let text = BASE.replace("p = 3.0", "p = 1.5");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c.validate(Command::MildSolve).unwrap_err().class(), ErrorClass::Hypothesis);
        let bad = BASE.replace("N = 3", "N = 1");
        let c = ExperimentConfig::from_toml(&bad).unwrap();
        assert_eq!(c.validate(Command::Exponents).unwrap_err().class(), ErrorClass::Hypothesis);
    }

    #[test]
    fn capacity_rules() {
        let mut s = CapacitySection::default();
        assert_eq!(s.mode().unwrap(), CapacityMode::Fit(TRule::Subcritical));
        s.rule = "power".into();
        assert!(s.mode().is_err());
        s.m = Some(3.0);
        assert_eq!(s.mode().unwrap(), CapacityMode::Fit(TRule::Power(3.0)));
    }
}
