use std::path::{Path, PathBuf};

use ctg::integrator::StepMode;
use ctg::pade::MAX_ORDER;
use ctg::problems::ProblemKind;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Settings shared by `run` and `convergence`, read from JSON and then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: Option<Value>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub mode: StepMode,
    #[serde(default = "default_refinements")]
    pub refinements: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub matrix: Option<PathBuf>,
    #[serde(default)]
    pub mass: Option<PathBuf>,
}

fn default_order() -> usize {
    2
}
fn default_t_end() -> f64 {
    1.0
}
fn default_refinements() -> usize {
    5
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// Flag values that override the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub params: Vec<String>,
    pub order: Option<usize>,
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub tau: Option<f64>,
    pub mode: Option<StepMode>,
    pub refinements: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub matrix: Option<PathBuf>,
    pub mass: Option<PathBuf>,
}

/// What to integrate.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Named(ProblemKind),
    Matrix { d: PathBuf, mass: Option<PathBuf> },
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn apply(mut self, o: Overrides) -> Result<Self, CliError> {
        if let Some(name) = o.problem {
            let same = self.problem.as_ref().and_then(|p| p.get("name")).and_then(Value::as_str) == Some(name.as_str());
            if !same {
                let mut obj = Map::new();
                obj.insert("name".into(), Value::String(name));
                self.problem = Some(Value::Object(obj));
            }
        }
        if !o.params.is_empty() {
            let obj = self
                .problem
                .as_mut()
                .and_then(Value::as_object_mut)
                .ok_or_else(|| CliError::usage("--param requires a problem"))?;
            for kv in &o.params {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| CliError::usage(format!("--param expects key=value, got '{kv}'")))?;
                let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
                obj.insert(k.replace('-', "_"), value);
            }
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if o.$f.is_some() { self.$f = o.$f; } )* };
        }
        set!(order, t_end, mode, refinements);
        set_opt!(output, seed, threads, matrix, mass);
        if o.steps.is_some() && o.tau.is_some() {
            return Err(CliError::usage("give either a step count or tau, not both"));
        }
        if o.steps.is_some() {
            self.steps = o.steps;
            self.tau = None;
        }
        if o.tau.is_some() {
            self.tau = o.tau;
            self.steps = None;
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(CliError::usage(format!("order must lie in 1..={MAX_ORDER}, got {}", self.order)));
        }
        if self.steps == Some(0) {
            return Err(CliError::usage("number of steps must be at least 1"));
        }
        if let Some(t) = self.tau {
            if t.is_nan() || t <= 0.0 {
                return Err(CliError::usage("tau must be positive"));
            }
        }
        if self.t_end.is_nan() || self.t_end <= 0.0 {
            return Err(CliError::usage("t_end must be positive"));
        }
        if self.threads == Some(0) {
            return Err(CliError::usage("thread count must be positive"));
        }
        if self.refinements == 0 {
            return Err(CliError::usage("refinements must be at least 1"));
        }
        Ok(())
    }

    /// Number of uniform steps; `tau` is rounded up to divide `t_end`.
    pub fn step_count(&self) -> usize {
        match (self.steps, self.tau) {
            (Some(n), _) => n,
            (None, Some(tau)) => ((self.t_end / tau) - 1e-9).ceil().max(1.0) as usize,
            (None, None) => 8,
        }
    }

    pub fn problem_source(&self) -> Result<ProblemSource, CliError> {
        if let Some(d) = &self.matrix {
            return Ok(ProblemSource::Matrix { d: d.clone(), mass: self.mass.clone() });
        }
        let mut value = self
            .problem
            .clone()
            .ok_or_else(|| CliError::usage("no problem given (use --problem NAME, a config file, or --matrix)"))?;
        let obj = value.as_object_mut().ok_or_else(|| CliError::usage("problem must be a JSON object"))?;
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::usage("problem is missing its name"))?
            .to_string();
        if !ProblemKind::NAMES.contains(&name.as_str()) {
            return Err(CliError::usage(format!(
                "unknown problem '{name}' (expected one of {})",
                ProblemKind::NAMES.join(", ")
            )));
        }
        if let Some(seed) = self.seed {
            if matches!(name.as_str(), "random" | "mass-matrix") {
                obj.insert("seed".into(), Value::from(seed));
            }
        }
        serde_json::from_value(value)
            .map(ProblemSource::Named)
            .map_err(|e| CliError::usage(format!("problem '{name}': {e}")))
    }
}
