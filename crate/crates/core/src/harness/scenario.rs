use crate::error::{Error, Result};
use crate::population::{quantized_class_pi, ClassProfile, Training};

/// How true error probabilities are generated from the class table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkerModel {
    /// Every worker has exactly its class value.
    Deterministic,
    /// Two-type mixture with spread `x`; `x = 0` is deterministic.
    Bimodal(f64),
    /// Individual probabilities uniform on `(0, 1/2]`, grouped into
    /// `num_classes` classes from training estimates.
    UniformIndividual { num_classes: usize, training: Training },
}

/// A block of consecutive tasks sharing one row of class error probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGroup {
    pub size: usize,
    pub pi: Vec<f64>,
}

/// Parameters of one experiment setting.
///
/// For [`WorkerModel::UniformIndividual`] the class table is produced per
/// trial, so `groups` carry empty `pi` rows and `class_sizes` holds a single
/// entry with the total number of workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub groups: Vec<TaskGroup>,
    pub class_sizes: Vec<usize>,
    pub model: WorkerModel,
    pub per_worker_limit: usize,
    /// Default operating point `C / T` for sweeps over other variables.
    pub beta: f64,
}

impl Scenario {
    pub fn num_tasks(&self) -> usize {
        self.groups.iter().map(|g| g.size).sum()
    }

    pub fn num_workers(&self) -> usize {
        self.class_sizes.iter().sum()
    }

    pub fn capacity(&self) -> usize {
        self.num_workers() * self.per_worker_limit
    }

    /// Task indices of each group.
    pub fn task_groups(&self) -> Vec<Vec<usize>> {
        let mut start = 0;
        self.groups
            .iter()
            .map(|g| {
                let tasks = (start..start + g.size).collect();
                start += g.size;
                tasks
            })
            .collect()
    }

    fn is_individual(&self) -> bool {
        matches!(self.model, WorkerModel::UniformIndividual { .. })
    }

    /// `C = round(beta T)`.
    pub fn budget_for(&self, beta: f64) -> Result<usize> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta = {beta} must be a non-negative number"
            )));
        }
        let budget = (beta * self.num_tasks() as f64).round() as usize;
        if budget > self.capacity() {
            return Err(Error::Infeasible(format!(
                "budget {budget} (beta = {beta}) exceeds the total worker capacity {}",
                self.capacity()
            )));
        }
        Ok(budget)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("scenario '{}': {msg}", self.name)));
        if self.groups.is_empty() || self.num_tasks() == 0 {
            return fail("at least one task is required".into());
        }
        if self.groups.iter().any(|g| g.size == 0) {
            return fail("task groups must be non-empty".into());
        }
        if self.num_workers() == 0 {
            return fail("at least one worker is required".into());
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return fail(format!("beta = {} must be non-negative", self.beta));
        }
        match self.model {
            WorkerModel::Bimodal(x) if !(0.0..=1.0).contains(&x) => {
                return fail(format!("bimodal x = {x} is outside [0, 1]"));
            }
            WorkerModel::UniformIndividual { num_classes, .. } => {
                if num_classes == 0 {
                    return fail("number of classes must be >= 1".into());
                }
                if self.class_sizes.len() != 1 {
                    return fail("individual workers take a single worker count".into());
                }
                return Ok(());
            }
            _ => {}
        }
        let k = self.class_sizes.len();
        for (i, g) in self.groups.iter().enumerate() {
            if g.pi.len() != k {
                return fail(format!(
                    "group {} has {} error probabilities for {k} classes",
                    i + 1,
                    g.pi.len()
                ));
            }
            if let Some(p) = g.pi.iter().find(|p| !(0.0..=0.5).contains(*p)) {
                return fail(format!("group {} error probability {p} is outside [0, 1/2]", i + 1));
            }
        }
        Ok(())
    }

    /// Class-level table for a fixed class map, `None` for individual workers.
    pub fn profile(&self, budget: usize) -> Result<Option<ClassProfile>> {
        if self.is_individual() {
            return Ok(None);
        }
        let rows = self
            .groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.pi.clone(), g.size))
            .collect();
        ClassProfile::new(rows, &self.class_sizes, self.per_worker_limit, budget).map(Some)
    }

    /// Class table after classification of individual workers.
    pub(crate) fn individual_profile(&self, class_of: Vec<usize>, pi: &[f64], budget: usize) -> Result<ClassProfile> {
        let rows = vec![pi.to_vec(); self.num_tasks()];
        let limits = vec![self.per_worker_limit; class_of.len()];
        ClassProfile::with_class_map(rows, pi.len(), class_of, limits, budget)
    }
}

fn group(size: usize, pi: &[f64]) -> TaskGroup {
    TaskGroup { size, pi: pi.to_vec() }
}

/// The four named settings `s1` to `s4`.
pub fn scenario_presets() -> Vec<Scenario> {
    let base = |name: &str, groups, class_sizes| Scenario {
        name: name.into(),
        groups,
        class_sizes,
        model: WorkerModel::Deterministic,
        per_worker_limit: 20,
        beta: 10.0,
    };
    vec![
        base("s1", vec![group(100, &[0.1, 0.2, 0.5])], vec![30, 120, 150]),
        base(
            "s2",
            vec![group(50, &[0.05, 0.1, 0.5]), group(50, &[0.1, 0.2, 0.5])],
            vec![30, 120, 150],
        ),
        base(
            "s3",
            vec![group(50, &[0.1, 0.2, 0.5]), group(50, &[0.5, 0.2, 0.1])],
            vec![40, 120, 40],
        ),
        Scenario {
            model: WorkerModel::UniformIndividual {
                num_classes: 6,
                training: Training::Exact,
            },
            ..base("s4", vec![group(100, &[])], vec![90])
        },
    ]
}

pub fn preset(name: &str) -> Result<Scenario> {
    scenario_presets()
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario '{name}' (expected s1, s2, s3 or s4)")))
}

/// One-line human-readable summary.
pub fn describe(s: &Scenario) -> String {
    let model = match s.model {
        WorkerModel::Deterministic => "deterministic".to_string(),
        WorkerModel::Bimodal(x) => format!("bimodal x={x}"),
        WorkerModel::UniformIndividual { num_classes, training } => {
            let pi: Vec<String> = (0..num_classes)
                .map(|k| format!("{:.4}", quantized_class_pi(k, num_classes)))
                .collect();
            format!(
                "uniform individual, K={num_classes} pi=({}), training={training}",
                pi.join(",")
            )
        }
    };
    let groups: Vec<String> = s
        .groups
        .iter()
        .map(|g| {
            if g.pi.is_empty() {
                format!("{} tasks", g.size)
            } else {
                let pi: Vec<String> = g.pi.iter().map(|p| p.to_string()).collect();
                format!("{} tasks pi=({})", g.size, pi.join(","))
            }
        })
        .collect();
    let sizes: Vec<String> = s.class_sizes.iter().map(|n| n.to_string()).collect();
    format!(
        "{}: T={} [{}] W=({}) r_w={} {}",
        s.name,
        s.num_tasks(),
        groups.join("; "),
        sizes.join(","),
        s.per_worker_limit,
        model
    )
}
