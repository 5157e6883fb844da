//! Scenario files.
//!
//! ```toml
//! [scenario]
//! name = "two-groups"
//! per_worker_limit = 20
//! beta = 10
//! model = "bimodal"      # deterministic | bimodal | uniform
//! x = 0.5                # bimodal only
//! # num_classes = 6      # uniform only
//! # training = "inf"     # uniform only: "inf" or a number of training answers
//!
//! [classes]
//! sizes = [30, 120, 150] # uniform: a single total worker count
//!
//! [groups]
//! sizes = [50, 50]
//! pi = [[0.05, 0.1, 0.5], [0.1, 0.2, 0.5]]   # omitted for uniform
//! ```

use std::path::Path;

use serde::Deserialize;

use super::scenario::{Scenario, TaskGroup, WorkerModel};
use crate::error::{Error, Result};
use crate::population::Training;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    scenario: ScenarioSection,
    classes: ClassesSection,
    groups: GroupsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    name: Option<String>,
    tasks: Option<usize>,
    per_worker_limit: Option<usize>,
    beta: Option<f64>,
    model: Option<String>,
    x: Option<f64>,
    num_classes: Option<usize>,
    training: Option<toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassesSection {
    sizes: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupsSection {
    sizes: Vec<usize>,
    #[serde(default)]
    pi: Vec<Vec<f64>>,
}

fn parse_training(v: &toml::Value) -> Result<Training> {
    match v {
        toml::Value::String(s) => s.parse(),
        toml::Value::Integer(n) if *n >= 0 => Ok(Training::Samples(*n as u64)),
        other => Err(Error::Config(format!(
            "training must be \"inf\" or a count, got {other}"
        ))),
    }
}

/// Parses and validates a scenario description.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: File = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    let sc = file.scenario;
    let name = sc.name.unwrap_or_else(|| "custom".into());
    let model_name = sc.model.as_deref().unwrap_or("deterministic");
    let model = match model_name {
        "deterministic" => WorkerModel::Deterministic,
        "bimodal" => WorkerModel::Bimodal(sc.x.ok_or_else(|| Error::Config("bimodal model needs x".into()))?),
        "uniform" => WorkerModel::UniformIndividual {
            num_classes: sc
                .num_classes
                .ok_or_else(|| Error::Config("uniform model needs num_classes".into()))?,
            training: sc
                .training
                .as_ref()
                .map(parse_training)
                .transpose()?
                .unwrap_or(Training::Exact),
        },
        other => {
            return Err(Error::Config(format!(
                "unknown model '{other}' (expected deterministic, bimodal or uniform)"
            )))
        }
    };
    if sc.x.is_some() && model_name != "bimodal" {
        return Err(Error::Config("x only applies to the bimodal model".into()));
    }
    if (sc.num_classes.is_some() || sc.training.is_some()) && model_name != "uniform" {
        return Err(Error::Config(
            "num_classes and training only apply to the uniform model".into(),
        ));
    }

    let g = file.groups;
    let individual = model_name == "uniform";
    if individual {
        if !g.pi.is_empty() {
            return Err(Error::Config(
                "the uniform model derives pi from training; omit [groups] pi".into(),
            ));
        }
    } else if g.pi.len() != g.sizes.len() {
        return Err(Error::Config(format!(
            "{} group sizes but {} pi rows",
            g.sizes.len(),
            g.pi.len()
        )));
    }
    let total: usize = g.sizes.iter().sum();
    if let Some(t) = sc.tasks {
        if t != total {
            return Err(Error::Config(format!("tasks = {t} but group sizes sum to {total}")));
        }
    }
    let groups = g
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| TaskGroup {
            size,
            pi: if individual { Vec::new() } else { g.pi[i].clone() },
        })
        .collect();
    let scenario = Scenario {
        name,
        groups,
        class_sizes: file.classes.sizes,
        model,
        per_worker_limit: sc.per_worker_limit.unwrap_or(20),
        beta: sc.beta.unwrap_or(10.0),
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
