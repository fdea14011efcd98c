//! JSON configuration schemas. Every struct rejects unknown keys, so typos
//! fail loudly at load time instead of silently running a different
//! experiment.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use convaug::learned::ImpulseMode;
use convaug::problems::{
    ill_conditioned_base, pl_sine, random_sc_quadratic, sample_regression_instance, InstanceJson,
    MpcProblem, Polytope, QuadraticProblem, SmoothProblem,
};
use convaug::scalar::Vector;

/// Problem source: generative kinds carry their parameters inline; `file`
/// points at a serialized instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Instance seed; omit to derive it from the sweep seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_std_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_std_b: Option<f64>,
    /// Initial-state spread for the condensed control family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_state_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl ProblemSpec {
    /// Materializes the problem for one sweep seed. Returns the smooth view
    /// plus the quadratic when one exists (needed by prox and the projected
    /// method).
    pub fn build(&self, sweep_seed: u64) -> Result<(SmoothProblem<f64>, Option<QuadraticProblem<f64>>)> {
        let seed = self.seed.unwrap_or(sweep_seed);
        match self.kind.as_str() {
            "sc-quadratic" => {
                let dim = self.dim.context("sc-quadratic needs `dim`")?;
                let kappa = self.kappa.context("sc-quadratic needs `kappa`")?;
                let q = random_sc_quadratic::<f64>(dim, kappa, seed)?;
                Ok((q.to_smooth(), Some(q)))
            }
            "regression" => {
                let dim = self.dim.context("regression needs `dim`")?;
                let kappa = self.kappa.context("regression needs `kappa` (of the base matrix)")?;
                let base = ill_conditioned_base::<f64>(dim, kappa, self.base_seed.unwrap_or(0));
                let q = sample_regression_instance(
                    &base,
                    self.noise_std_a.unwrap_or(0.05),
                    self.b_mean.unwrap_or(0.5),
                    self.noise_std_b.unwrap_or(0.2),
                    seed,
                )?;
                Ok((q.to_smooth(), Some(q)))
            }
            "pl-sine" => {
                let dim = self.dim.context("pl-sine needs `dim`")?;
                Ok((pl_sine::<f64>(dim), None))
            }
            "mpc-condensed" => {
                // condensed input program of the built-in control example at
                // a sampled initial state (or one loaded from `file`)
                let mpc = match &self.file {
                    None => MpcProblem::<f64>::double_integrator_example()?,
                    Some(path) => {
                        let text = std::fs::read_to_string(path)
                            .with_context(|| format!("reading {}", path.display()))?;
                        MpcProblem::from_json(&serde_json::from_str::<InstanceJson>(&text)?)?
                    }
                };
                let std = self.init_state_std.unwrap_or(0.5);
                let mut rng = convaug::rng::SeedSplitter::new(seed).stream("mpc-family-x0", 0);
                let x0 =
                    convaug::rng::normal_vector::<f64, _>(&mut rng, mpc.state_dim()) * std;
                let (qp, _) = mpc.condensed(&x0)?;
                Ok((qp.to_smooth(), Some(qp)))
            }
            "file" => {
                let path = self.file.as_ref().context("file problem needs `file`")?;
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let json: InstanceJson = serde_json::from_str(&text)?;
                let q = QuadraticProblem::<f64>::from_json(&json)?;
                Ok((q.to_smooth(), Some(q)))
            }
            other => bail!("unknown problem kind '{other}'"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct X0Spec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl X0Spec {
    pub fn build(&self, dim: usize, sweep_seed: u64) -> Result<Vector<f64>> {
        match self.kind.as_str() {
            "gaussian" => {
                let mut rng = convaug::rng::SeedSplitter::new(sweep_seed).stream("cli-x0", 0);
                Ok(convaug::rng::normal_vector::<f64, _>(&mut rng, dim)
                    * self.std.unwrap_or(1.0))
            }
            "zeros" => Ok(Vector::zeros(dim)),
            "values" => {
                let v = self.values.as_ref().context("x0 kind 'values' needs `values`")?;
                if v.len() != dim {
                    bail!("x0 has length {}, problem dimension is {dim}", v.len());
                }
                Ok(Vector::from_vec(v.clone()))
            }
            other => bail!("unknown x0 kind '{other}'"),
        }
    }
}

fn default_x0() -> X0Spec {
    X0Spec {
        kind: "gaussian".into(),
        std: Some(1.0),
        values: None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            kind: "none".into(),
            period: None,
            amplitude: None,
            rate: None,
            seed: None,
            checkpoint: None,
            file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub problem: ProblemSpec,
    pub baseline: String,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    pub steps: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_x0")]
    pub x0: X0Spec,
    /// Checks to enforce: any of "envelope", "rate", "regularity".
    #[serde(default)]
    pub checks: Vec<String>,
    /// Optional sweep of injection periods; emits a degraded-rate table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period_sweep: Option<Vec<usize>>,
    /// Box bound for the projected-gradient baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub command: String,
    pub problem: ProblemSpec,
    pub baseline: String,
    pub instances: usize,
    #[serde(default = "default_instance_seed")]
    pub instance_seed_offset: u64,
    pub rollout_steps: usize,
    pub epochs: usize,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_readout_scale")]
    pub readout_sigma_scale: f64,
    pub seed: u64,
    /// Target decay rate; omit to derive it from the family certificate via
    /// the smallest-admissible-period rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(default = "default_impulse")]
    pub impulse: ImpulseMode,
    #[serde(default = "default_mag_dim")]
    pub mag_dim: usize,
    #[serde(default = "default_dir_hidden")]
    pub dir_hidden: usize,
    #[serde(default = "default_x0")]
    pub x0: X0Spec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_instance_seed() -> u64 {
    0
}
fn default_population() -> usize {
    8
}
fn default_sigma() -> f64 {
    0.05
}
fn default_lr() -> f64 {
    0.1
}
fn default_readout_scale() -> f64 {
    0.01
}
fn default_impulse() -> ImpulseMode {
    ImpulseMode::InitialState
}
fn default_mag_dim() -> usize {
    6
}
fn default_dir_hidden() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcCmdConfig {
    pub command: String,
    /// Omit for the built-in double-integrator example.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem_file: Option<PathBuf>,
    pub solver: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    pub budget: usize,
    pub loop_steps: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_noise")]
    pub process_noise_std: f64,
    #[serde(default = "default_init_std")]
    pub init_state_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_noise() -> f64 {
    0.05
}
fn default_init_std() -> f64 {
    0.5
}

impl MpcCmdConfig {
    pub fn build_problem(&self) -> Result<MpcProblem<f64>> {
        match &self.problem_file {
            None => Ok(MpcProblem::double_integrator_example()?),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let json: InstanceJson = serde_json::from_str(&text)?;
                Ok(MpcProblem::from_json(&json)?)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructCmdConfig {
    pub command: String,
    pub problem: ProblemSpec,
    /// Monotone baseline doing the reconstruction.
    pub baseline: String,
    /// Target algorithm realized and then reconstructed ("nag" or a run CSV).
    pub target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_file: Option<PathBuf>,
    pub steps: usize,
    pub seed: u64,
    #[serde(default = "default_x0")]
    pub x0: X0Spec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCmdConfig {
    pub command: String,
    pub trace: PathBuf,
    pub envelope: convaug::verify::EnvelopeJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Builds a box polytope when the baseline needs one.
pub fn polytope_for(baseline: &str, dim: usize, bound: Option<f64>) -> Result<Option<Polytope<f64>>> {
    if baseline == "pgd" {
        let b = bound.context("baseline 'pgd' needs `box_bound`")?;
        Ok(Some(Polytope::box_bound(dim, b)?))
    } else {
        Ok(None)
    }
}
