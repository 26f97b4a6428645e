//! Drives pairwise reduction of a whole system to a fixed point.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{apply_rules, Coeff, Expression, RewriteRule, System, Term, VariableTable};
use crate::quotient::{apply_reduction, find_reduction, EngineError, Reduction};

/// Direction of the first pairing rule: prefer as few (or as many) kernels
/// of the shorter equation missing from the longer one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Few,
    Many,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Few => "few",
            Strategy::Many => "many",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "few" => Ok(Strategy::Few),
            "many" => Ok(Strategy::Many),
            _ => Err(format!("unknown strategy `{s}` (expected `few` or `many`)")),
        }
    }
}

/// Number of distinct kernels of `short` that do not occur in `long`.
pub fn alien_count(short: &Expression, long: &Expression) -> usize {
    let long_kernels = long.kernels();
    short
        .kernels()
        .into_iter()
        .filter(|k| long_kernels.binary_search(k).is_err())
        .count()
}

/// Sort key for a candidate pair; lower keys are tried first.
pub fn pair_priority(short: &Expression, long: &Expression, strategy: Strategy) -> (i64, usize, usize) {
    let alien = alien_count(short, long) as i64;
    let first = match strategy {
        Strategy::Few => alien,
        Strategy::Many => -alien,
    };
    (first, short.term_count(), long.term_count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepOutcome {
    /// The longer equation was replaced by the shorter combination.
    Replaced,
    /// The combination vanished; the longer equation was redundant and removed.
    Redundant,
    /// The combination is a nonzero condition free of unknowns; kept and flagged.
    Inconsistent,
}

/// One accepted combination. Indices are slots of the input system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionStep {
    pub replaced: usize,
    pub kept: usize,
    pub reduction: Reduction,
    pub terms_before: usize,
    pub terms_kept: usize,
    /// Length of the stored result (after rewrite rules and content removal).
    pub terms_after: usize,
    pub multiplier_replaced: Term,
    pub multiplier_kept: Term,
    /// The stored result is the raw combination divided by this.
    pub content: Coeff,
    pub result: Expression,
    pub outcome: StepOutcome,
}

#[derive(Clone, Debug)]
pub struct SystemState {
    pub vars: VariableTable,
    pub rules: Vec<RewriteRule>,
    pub strategy: Strategy,
    slots: Vec<Option<Expression>>,
    attempted: HashSet<(usize, usize)>,
    log: Vec<ReductionStep>,
}

impl SystemState {
    pub fn new(system: System, strategy: Strategy) -> Self {
        SystemState {
            vars: system.vars,
            rules: system.rules,
            strategy,
            slots: system.equations.into_iter().map(Some).collect(),
            attempted: HashSet::new(),
            log: Vec::new(),
        }
    }

    /// Live equations with their slot index.
    pub fn equations(&self) -> impl Iterator<Item = (usize, &Expression)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|e| (i, e)))
    }

    pub fn equation_count(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    pub fn total_terms(&self) -> usize {
        self.slots.iter().flatten().map(Expression::term_count).sum()
    }

    pub fn steps(&self) -> usize {
        self.log.len()
    }

    pub fn log(&self) -> &[ReductionStep] {
        &self.log
    }

    pub fn count_outcome(&self, outcome: StepOutcome) -> usize {
        self.log.iter().filter(|s| s.outcome == outcome).count()
    }

    /// The live equations as a system, in slot order.
    pub fn to_system(&self) -> System {
        System {
            vars: self.vars.clone(),
            equations: self.equations().map(|(_, e)| e.clone()).collect(),
            rules: self.rules.clone(),
        }
    }

    /// `(replaced, kept)` roles for a pair: the longer equation is replaced;
    /// at equal length the one with more kernels, then the lower slot.
    fn roles(&self, i: usize, j: usize) -> (usize, usize) {
        let (a, b) = (self.slots[i].as_ref().unwrap(), self.slots[j].as_ref().unwrap());
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let (a, b) = if i < j { (a, b) } else { (b, a) };
        let by_len = a.term_count().cmp(&b.term_count());
        let by_kernels = a.kernels().len().cmp(&b.kernels().len());
        match by_len.then(by_kernels) {
            std::cmp::Ordering::Less => (j, i),
            _ => (i, j),
        }
    }

    fn candidates(&self) -> Vec<((i64, usize, usize), usize, usize)> {
        let live: Vec<usize> = self.equations().map(|(i, _)| i).collect();
        let mut out = Vec::new();
        for (x, &i) in live.iter().enumerate() {
            for &j in &live[x + 1..] {
                if self.attempted.contains(&(i, j)) {
                    continue;
                }
                let (long, short) = self.roles(i, j);
                let key = pair_priority(
                    self.slots[short].as_ref().unwrap(),
                    self.slots[long].as_ref().unwrap(),
                    self.strategy,
                );
                out.push((key, long, short));
            }
        }
        out.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then((a.1.min(a.2), a.1.max(a.2)).cmp(&(b.1.min(b.2), b.1.max(b.2))))
        });
        out
    }

    fn mark_attempted(&mut self, a: usize, b: usize) {
        self.attempted.insert((a.min(b), a.max(b)));
    }

    fn accept(&mut self, long: usize, short: usize, c: Candidate) {
        let outcome = if c.result.is_zero() {
            StepOutcome::Redundant
        } else if c.result.is_parametric() {
            StepOutcome::Inconsistent
        } else {
            StepOutcome::Replaced
        };
        let terms_before = self.slots[long].as_ref().unwrap().term_count();
        let terms_kept = self.slots[short].as_ref().unwrap().term_count();
        self.log.push(ReductionStep {
            replaced: long,
            kept: short,
            multiplier_replaced: c.reduction.multiplier_e1(),
            multiplier_kept: c.reduction.multiplier_e2(),
            reduction: c.reduction,
            terms_before,
            terms_kept,
            terms_after: c.result.term_count(),
            content: c.content,
            result: c.result.clone(),
            outcome,
        });
        self.slots[long] = (outcome != StepOutcome::Redundant).then_some(c.result);
        self.attempted.retain(|&(a, b)| a != long && b != long);
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Stop after this many accepted steps.
    pub max_steps: Option<usize>,
    /// Candidate pairs evaluated concurrently; 1 means sequential.
    pub threads: usize,
    pub pruning: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_steps: None,
            threads: 1,
            pruning: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("step {step}: check failed: {message}")]
    CheckFailed { step: usize, message: String },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

struct Candidate {
    reduction: Reduction,
    raw: Expression,
    result: Expression,
    content: Coeff,
}

fn evaluate(
    long: &Expression,
    short: &Expression,
    rules: &[RewriteRule],
    pruning: bool,
) -> Result<Option<Candidate>, EngineError> {
    let Some(reduction) = find_reduction(long, short, pruning).reduction else {
        return Ok(None);
    };
    let raw = apply_reduction(long, short, &reduction)?;
    let rewritten = apply_rules(&raw, rules);
    if rewritten.term_count() >= long.term_count() {
        return Ok(None);
    }
    let (result, content) = rewritten.primitive();
    Ok(Some(Candidate {
        reduction,
        raw,
        result,
        content,
    }))
}

/// Runs to a fixed point with no per-step check.
pub fn run_reduction(state: SystemState, cfg: &RunConfig) -> Result<SystemState, RunError> {
    run_reduction_with(state, cfg, |_, _, _, _| Ok(()))
}

/// Runs to a fixed point. `check(e_replaced, e_kept, reduction, raw_e3)` is
/// called before each step is accepted; an error aborts the run.
pub fn run_reduction_with<F>(mut state: SystemState, cfg: &RunConfig, mut check: F) -> Result<SystemState, RunError>
where
    F: FnMut(&Expression, &Expression, &Reduction, &Expression) -> Result<(), String>,
{
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| RunError::Pool(e.to_string()))?,
        )
    } else {
        None
    };
    let batch = cfg.threads.max(1);

    'outer: loop {
        if cfg.max_steps.is_some_and(|m| state.steps() >= m) {
            break;
        }
        let candidates = state.candidates();
        if candidates.is_empty() {
            break;
        }
        for chunk in candidates.chunks(batch) {
            let eval = |&(_, long, short): &((i64, usize, usize), usize, usize)| {
                evaluate(
                    state.slots[long].as_ref().unwrap(),
                    state.slots[short].as_ref().unwrap(),
                    &state.rules,
                    cfg.pruning,
                )
            };
            let results: Vec<Result<Option<Candidate>, EngineError>> = match &pool {
                Some(pool) => pool.install(|| chunk.par_iter().map(eval).collect()),
                None => chunk.iter().map(eval).collect(),
            };
            let mut winner = None;
            for (&(_, long, short), res) in chunk.iter().zip(results) {
                match res? {
                    Some(c) if winner.is_none() => winner = Some((long, short, c)),
                    Some(_) => {}
                    None => state.mark_attempted(long, short),
                }
            }
            if let Some((long, short, c)) = winner {
                check(
                    state.slots[long].as_ref().unwrap(),
                    state.slots[short].as_ref().unwrap(),
                    &c.reduction,
                    &c.raw,
                )
                .map_err(|message| RunError::CheckFailed {
                    step: state.steps() + 1,
                    message,
                })?;
                state.accept(long, short, c);
                continue 'outer;
            }
        }
    }
    Ok(state)
}
