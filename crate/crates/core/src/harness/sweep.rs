use std::str::FromStr;

use super::scenario::{Scenario, WorkerModel};
use crate::error::{Error, Result};
use crate::population::Training;

/// The variable an experiment sweeps over, with its values.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Beta(Vec<f64>),
    X(Vec<f64>),
    K(Vec<usize>),
    Training(Vec<Training>),
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::Beta(_) => "beta",
            Sweep::X(_) => "x",
            Sweep::K(_) => "K",
            Sweep::Training(_) => "training",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Beta(v) | Sweep::X(v) => v.len(),
            Sweep::K(v) => v.len(),
            Sweep::Training(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values as reals; an exact training estimate is infinite.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::Beta(v) | Sweep::X(v) => v.clone(),
            Sweep::K(v) => v.iter().map(|&k| k as f64).collect(),
            Sweep::Training(v) => v.iter().map(|t| t.as_f64()).collect(),
        }
    }

    /// The scenario at sweep point `i` and the `beta` to run it at.
    pub fn apply(&self, scenario: &Scenario, i: usize) -> Result<(Scenario, f64)> {
        let mut s = scenario.clone();
        let incompatible = |what: &str| {
            Err(Error::Incompatible(format!(
                "a {what} sweep does not apply to scenario '{}'",
                scenario.name
            )))
        };
        match (self, &mut s.model) {
            (Sweep::Beta(v), _) => return Ok((s, v[i])),
            (Sweep::X(v), WorkerModel::Deterministic | WorkerModel::Bimodal(_)) => {
                s.model = WorkerModel::Bimodal(v[i]);
            }
            (Sweep::K(v), WorkerModel::UniformIndividual { num_classes, .. }) => *num_classes = v[i],
            (Sweep::Training(v), WorkerModel::UniformIndividual { training, .. }) => *training = v[i],
            (Sweep::X(_), _) => return incompatible("x"),
            (Sweep::K(_), _) => return incompatible("K"),
            (Sweep::Training(_), _) => return incompatible("training"),
        }
        let beta = s.beta;
        Ok((s, beta))
    }
}

/// `a:b:step`, inclusive of `b` up to rounding.
fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("malformed range '{text}' (expected start:stop:step)"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidParameter(format!("range '{text}' needs a positive step")));
    }
    if start > stop {
        return Err(Error::InvalidParameter(format!("range '{text}' is empty")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|i| {
            let v = start + i as f64 * step;
            (v * 1e12).round() / 1e12
        })
        .collect())
}

fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>> {
    let values = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidParameter(format!("bad sweep value '{}'", p.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values)
}

fn parse_reals(text: &str) -> Result<Vec<f64>> {
    if text.contains(':') {
        parse_range(text)
    } else {
        parse_list(text)
    }
}

impl FromStr for Sweep {
    type Err = Error;

    /// `beta=2:20:2`, `x=0:1:0.1`, `K=1,3,6,9`, `training=0,10,inf`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("sweep '{s}' is not of the form <variable>=<values>")))?;
        let values = values.trim();
        if values.is_empty() {
            return Err(Error::InvalidParameter(format!("sweep '{s}' has no values")));
        }
        let sweep = match name.trim() {
            "beta" => Sweep::Beta(parse_reals(values)?),
            "x" => Sweep::X(parse_reals(values)?),
            "K" | "k" => {
                if values.contains(':') {
                    let reals = parse_range(values)?;
                    if reals.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "K range '{values}' must be positive integers"
                        )));
                    }
                    Sweep::K(reals.into_iter().map(|v| v as usize).collect())
                } else {
                    Sweep::K(parse_list(values)?)
                }
            }
            "training" => Sweep::Training(parse_list(values)?),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown sweep variable '{other}' (expected beta, x, K or training)"
                )))
            }
        };
        if let Sweep::X(v) = &sweep {
            if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidParameter(format!(
                    "sweep value x = {x} is outside [0, 1]"
                )));
            }
        }
        if let Sweep::K(v) = &sweep {
            if v.contains(&0) {
                return Err(Error::InvalidParameter("sweep value K = 0 is not allowed".into()));
            }
        }
        Ok(sweep)
    }
}
