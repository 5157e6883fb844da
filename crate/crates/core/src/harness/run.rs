use rand::Rng;
use rayon::prelude::*;

use super::results::{ExperimentResult, ResultRow};
use super::scenario::{Scenario, WorkerModel};
use super::strategy::{Allocator, Decider, StrategySpec};
use super::sweep::Sweep;
use crate::allocation::{greedy_allocate, is_feasible, uniform_allocate, Allocation};
use crate::answers::AnswerMatrix;
use crate::decision::{
    decide_lra, decide_lra_blocks, decide_majority, decide_map, decide_mp, decide_mp_haldane, decide_oracle_map,
    DecisionResult, MpConfig,
};
use crate::error::{Error, Result};
use crate::population::{
    estimate_and_classify, make_bimodal_population, make_deterministic_population, make_uniform_population,
    sample_answers, ClassProfile, Population, TaskTruths, PROB_FLOOR,
};
use crate::rng::{derive_seed, stage_rng};

const STAGE_TRUTHS: u64 = 0;
const STAGE_POPULATION: u64 = 1;
const STAGE_CLASSIFICATION: u64 = 2;
const STAGE_ALLOCATION: u64 = 3;
const STAGE_ANSWERS: u64 = 4;
const STAGE_DECISION: u64 = 5;

/// Rejects strategy and scenario pairs that cannot run together.
pub fn check_compatible(scenario: &Scenario, strategy: &StrategySpec) -> Result<()> {
    if strategy.decider == Decider::LraBlocks && scenario.groups.len() < 2 {
        return Err(Error::Incompatible(format!(
            "{strategy} needs a scenario with several task groups; '{}' has one",
            scenario.name
        )));
    }
    if let Decider::Mp(cfg) | Decider::MpHaldane(cfg) = strategy.decider {
        cfg.validate()?;
    }
    Ok(())
}

/// Everything about one sweep point that does not change between trials.
struct Point<'a> {
    scenario: &'a Scenario,
    strategy: StrategySpec,
    budget: usize,
    groups: Vec<Vec<usize>>,
    /// Class table when the class map is fixed.
    profile: Option<ClassProfile>,
    /// Greedy allocation when it is the same for every trial.
    allocation: Option<Allocation>,
}

impl<'a> Point<'a> {
    fn new(scenario: &'a Scenario, strategy: StrategySpec, budget: usize) -> Result<Self> {
        scenario.validate()?;
        check_compatible(scenario, &strategy)?;
        if budget > scenario.capacity() {
            return Err(Error::Infeasible(format!(
                "budget {budget} exceeds the total worker capacity {}",
                scenario.capacity()
            )));
        }
        let profile = scenario.profile(budget)?;
        let allocation = match (&profile, strategy.allocator) {
            (Some(p), Allocator::Greedy(kind)) => Some(greedy_allocate(p, kind)),
            _ => None,
        };
        Ok(Self {
            scenario,
            strategy,
            budget,
            groups: scenario.task_groups(),
            profile,
            allocation,
        })
    }

    fn trial(&self, seed: u64) -> Result<Vec<bool>> {
        let s = self.scenario;
        let truths = TaskTruths::draw(s.num_tasks(), &mut stage_rng(seed, STAGE_TRUTHS));
        let mut pop_rng = stage_rng(seed, STAGE_POPULATION);
        let individual;
        let (pop, profile) = match (s.model, &self.profile) {
            (WorkerModel::Deterministic, Some(p)) => (make_deterministic_population(p), p),
            (WorkerModel::Bimodal(x), Some(p)) => (make_bimodal_population(p, x, &mut pop_rng)?, p),
            (WorkerModel::UniformIndividual { num_classes, training }, None) => {
                let mut pop = make_uniform_population(s.num_tasks(), s.num_workers(), &mut pop_rng)?;
                let mut rng = stage_rng(seed, STAGE_CLASSIFICATION);
                let (class_of, pi) = estimate_and_classify(&pop, training, num_classes, &mut rng)?;
                individual = s.individual_profile(class_of.clone(), &pi, self.budget)?;
                pop.set_class_of(class_of);
                (pop, &individual)
            }
            _ => unreachable!("class table exists exactly for fixed class maps"),
        };

        let drawn;
        let alloc = match &self.allocation {
            Some(a) => a,
            None => {
                let mut rng = stage_rng(seed, STAGE_ALLOCATION);
                drawn = match self.strategy.allocator {
                    Allocator::Uniform => uniform_allocate(profile, &mut rng)?,
                    Allocator::Greedy(kind) => greedy_allocate(profile, kind),
                };
                &drawn
            }
        };
        if !is_feasible(alloc, profile) {
            return Err(Error::AllocationFailed(format!(
                "{} produced an infeasible allocation",
                self.strategy.allocator.token()
            )));
        }

        let answers = sample_answers(&pop, alloc, &truths, &mut stage_rng(seed, STAGE_ANSWERS))?;
        let mut rng = stage_rng(seed, STAGE_DECISION);
        let result = decide(self.strategy.decider, &answers, profile, &pop, &self.groups, &mut rng)?;
        Ok(result.errors(&truths))
    }
}

/// Applies one decision rule. MP variants and block LRA run per task group.
pub fn decide<R: Rng + ?Sized>(
    decider: Decider,
    answers: &AnswerMatrix,
    profile: &ClassProfile,
    pop: &Population,
    groups: &[Vec<usize>],
    rng: &mut R,
) -> Result<DecisionResult> {
    match decider {
        Decider::Majority => Ok(decide_majority(answers, rng)),
        Decider::Map => decide_map(answers, &profile.clamped(PROB_FLOOR), rng),
        Decider::OracleMap => decide_oracle_map(answers, &pop.clamped(PROB_FLOOR), rng),
        Decider::Lra => Ok(decide_lra(answers, rng)),
        Decider::LraBlocks => decide_lra_blocks(answers, groups, rng),
        Decider::Mp(cfg) | Decider::MpHaldane(cfg) => {
            let haldane = matches!(decider, Decider::MpHaldane(_));
            mp_per_group(answers, profile, groups, &cfg, haldane, rng)
        }
    }
}

fn mp_per_group<R: Rng + ?Sized>(
    answers: &AnswerMatrix,
    profile: &ClassProfile,
    groups: &[Vec<usize>],
    cfg: &MpConfig,
    haldane: bool,
    rng: &mut R,
) -> Result<DecisionResult> {
    let t_count = answers.num_tasks();
    let mut merged = DecisionResult {
        estimates: vec![0; t_count],
        scores: vec![0.0; t_count],
        tie_broken: vec![false; t_count],
    };
    for group in groups {
        let Some(&first) = group.first() else { continue };
        let pi: Vec<f64> = profile.pi_row(first).iter().map(|p| p.clamp(PROB_FLOOR, 0.5)).collect();
        if group.iter().any(|&t| profile.pi_row(t) != profile.pi_row(first)) {
            return Err(Error::Incompatible(
                "message passing needs task-independent class probabilities within each group".into(),
            ));
        }
        let (block, kept) = answers.restrict(group)?;
        let r = if haldane {
            decide_mp_haldane(&block, cfg, rng)?
        } else {
            let class_of: Vec<usize> = kept.iter().map(|&w| profile.class_of()[w]).collect();
            decide_mp(&block, &class_of, &pi, cfg, rng)?
        };
        for (i, &t) in group.iter().enumerate() {
            merged.estimates[t] = r.estimates[i];
            merged.scores[t] = r.scores[i];
            merged.tie_broken[t] = r.tie_broken[i];
        }
    }
    Ok(merged)
}

/// One full pipeline: truths, population, (classification), allocation,
/// answers and decision. Returns the per-task error indicators.
pub fn run_trial(scenario: &Scenario, strategy: &StrategySpec, budget: usize, seed: u64) -> Result<Vec<bool>> {
    Point::new(scenario, *strategy, budget)?.trial(seed)
}

/// Error indicators of `n_trials` trials at one operating point, with trial
/// seeds derived from `master_seed` and the given coordinates.
pub fn run_trials(
    scenario: &Scenario,
    strategy: &StrategySpec,
    budget: usize,
    n_trials: usize,
    master_seed: u64,
    coords: &[u64],
) -> Result<Vec<Vec<bool>>> {
    let point = Point::new(scenario, *strategy, budget)?;
    (0..n_trials)
        .into_par_iter()
        .map(|n| {
            let mut c = coords.to_vec();
            c.push(n as u64);
            point.trial(derive_seed(master_seed, &c))
        })
        .collect()
}

/// Average per-task error frequency `P_e` with its 3-sigma normal half-width.
pub fn error_rate(errors: u64, decisions: u64) -> (f64, f64) {
    if decisions == 0 {
        return (0.0, 0.0);
    }
    let p = errors as f64 / decisions as f64;
    (p, 3.0 * (p * (1.0 - p) / decisions as f64).sqrt())
}

/// Estimates `P_e` for every strategy at every sweep point.
pub fn run_sweep(
    scenario: &Scenario,
    strategies: &[StrategySpec],
    sweep: &Sweep,
    n_trials: usize,
    master_seed: u64,
) -> Result<ExperimentResult> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("n_trials must be at least 1".into()));
    }
    scenario.validate()?;
    for s in strategies {
        check_compatible(scenario, s)?;
    }
    let values = sweep.values();
    let mut rows = Vec::with_capacity(values.len() * strategies.len());
    for (i, &value) in values.iter().enumerate() {
        let (point_scenario, beta) = sweep.apply(scenario, i)?;
        let budget = point_scenario.budget_for(beta)?;
        for (j, strategy) in strategies.iter().enumerate() {
            let point = Point::new(&point_scenario, *strategy, budget)?;
            let errors: u64 = (0..n_trials)
                .into_par_iter()
                .map(|n| {
                    let seed = derive_seed(master_seed, &[i as u64, j as u64, n as u64]);
                    point.trial(seed).map(|e| e.iter().filter(|&&x| x).count() as u64)
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            let decisions = (n_trials * point_scenario.num_tasks()) as u64;
            let (p_e, ci_halfwidth) = error_rate(errors, decisions);
            rows.push(ResultRow {
                sweep_value: value,
                strategy: strategy.to_string(),
                p_e,
                ci_halfwidth,
                n_trials,
                seed: master_seed,
            });
        }
    }
    Ok(ExperimentResult {
        sweep_variable: Some(sweep.name().to_string()),
        rows,
    })
}
