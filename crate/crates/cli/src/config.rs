//! Experiment configuration: a single TOML document describing the
//! potential, noise levels, lattice, and requested tasks.

use serde::{Deserialize, Serialize};

use metastab::error::{Error, Result};
use metastab::potential::{catalog_entry, poly, Potential};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    /// name of a built-in landscape
    Catalog(String),
    /// inline polynomial, e.g. `0.25*x1^4 - 0.5*x1^2 + 0.25`
    Inline { inline: String, growth_const: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    CriticalPoints,
    Network,
    DEps,
    VEps,
    CapacityGeometric,
    CapacityPde,
    EkClassical,
    Simulate,
    ExitBound,
    ConvexChecks,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::CriticalPoints => "critical_points",
            Task::Network => "network",
            Task::DEps => "d_eps",
            Task::VEps => "v_eps",
            Task::CapacityGeometric => "capacity_geometric",
            Task::CapacityPde => "capacity_pde",
            Task::EkClassical => "ek_classical",
            Task::Simulate => "simulate",
            Task::ExitBound => "exit_bound",
            Task::ConvexChecks => "convex_checks",
        }
    }

    /// Fixed execution order: upstream tasks first.
    pub const ORDER: [Task; 10] = [
        Task::CriticalPoints,
        Task::Network,
        Task::DEps,
        Task::VEps,
        Task::CapacityGeometric,
        Task::CapacityPde,
        Task::EkClassical,
        Task::Simulate,
        Task::ExitBound,
        Task::ConvexChecks,
    ];
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// axis-aligned box, one `[lo, hi]` pair per dimension
    #[serde(rename = "box")]
    pub bbox: Vec<[f64; 2]>,
    pub h: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub max_steps: usize,
    pub paths: usize,
    pub target_radius: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    /// noise levels, sorted descending
    pub eps: Vec<f64>,
    /// island threshold
    pub delta: f64,
    pub tasks: Vec<Task>,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    /// transition pair; defaults to the catalog entry's canonical pair
    #[serde(default)]
    pub pair: Option<[Vec<f64>; 2]>,
}

fn default_seed() -> u64 {
    0
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigInvalid { field: field.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| invalid("(document)", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(invalid("eps", "at least one noise level is required"));
        }
        if self.eps.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
            return Err(invalid("eps", "noise levels must be positive and finite"));
        }
        if self.eps.windows(2).any(|w| w[0] <= w[1]) {
            return Err(invalid("eps", "noise levels must be sorted strictly descending"));
        }
        if self.tasks.is_empty() {
            return Err(invalid("tasks", "at least one task is required"));
        }
        if self.delta <= 0.0 {
            return Err(invalid("delta", "island threshold must be positive"));
        }
        if self.lattice.h <= 0.0 {
            return Err(invalid("lattice.h", "lattice spacing must be positive"));
        }
        let mut nodes = 1usize;
        for (i, b) in self.lattice.bbox.iter().enumerate() {
            if b[1] <= b[0] {
                return Err(invalid(
                    &format!("lattice.box[{i}]"),
                    "box extent must be nonempty",
                ));
            }
            nodes = nodes
                .saturating_mul(((b[1] - b[0]) / self.lattice.h).round().max(1.0) as usize);
        }
        if nodes > metastab::transport::NODE_BUDGET {
            return Err(invalid(
                "lattice",
                format!(
                    "{nodes} nodes exceed the budget of {}",
                    metastab::transport::NODE_BUDGET
                ),
            ));
        }
        if self.tasks.contains(&Task::Simulate) && self.sim.is_none() {
            return Err(invalid("sim", "the simulate task requires a [sim] section"));
        }
        if let Some(sim) = &self.sim {
            if sim.dt <= 0.0 || sim.paths == 0 || sim.max_steps == 0 {
                return Err(invalid("sim", "dt, paths, max_steps must be positive"));
            }
        }
        Ok(())
    }

    /// Instantiate the potential; also returns the catalog name when the
    /// config references one.
    pub fn build_potential(&self) -> Result<(Potential, Option<String>)> {
        match &self.potential {
            PotentialSpec::Catalog(name) => {
                let entry = catalog_entry(name).map_err(|_| {
                    invalid("potential", format!("unknown catalog entry '{name}'"))
                })?;
                Ok((entry.potential, Some(name.clone())))
            }
            PotentialSpec::Inline { inline, growth_const } => {
                if *growth_const <= 0.0 {
                    return Err(invalid("potential.growth_const", "must be positive"));
                }
                let p = poly::parse(inline)?;
                Ok((poly::to_potential(&p, *growth_const), None))
            }
        }
    }

    /// The transition pair: explicit config value, else the catalog default.
    pub fn transition_pair(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some([a, b]) = &self.pair {
            return Ok((a.clone(), b.clone()));
        }
        if let PotentialSpec::Catalog(name) = &self.potential {
            if let Ok(entry) = catalog_entry(name) {
                return Ok(entry.pair);
            }
        }
        Err(invalid("pair", "an inline potential requires an explicit transition pair"))
    }

    pub fn bbox(&self) -> Vec<(f64, f64)> {
        self.lattice.bbox.iter().map(|b| (b[0], b[1])).collect()
    }
}
