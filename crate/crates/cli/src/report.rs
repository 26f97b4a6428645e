//! Stats and step-log records. Field names are part of the output format.

use serde::Serialize;

use termred::diagnostics::OdeFinding;
use termred::expr::{Coeff, System};
use termred::scheduler::{ReductionStep, StepOutcome, Strategy, SystemState};

#[derive(Debug, Serialize)]
pub struct Stats {
    pub equations_before: usize,
    pub equations_after: usize,
    pub terms_before: usize,
    pub terms_after: usize,
    pub steps: usize,
    pub strategy: Strategy,
    pub inconsistencies: usize,
    pub deleted_redundancies: usize,
    pub ode_findings: Vec<OdeFinding>,
}

impl Stats {
    pub fn new(before: &System, after: &SystemState, ode_findings: Vec<OdeFinding>) -> Self {
        Stats {
            equations_before: before.equations.len(),
            equations_after: after.equation_count(),
            terms_before: before.total_terms(),
            terms_after: after.total_terms(),
            steps: after.steps(),
            strategy: after.strategy,
            inconsistencies: after.count_outcome(StepOutcome::Inconsistent),
            deleted_redundancies: after.count_outcome(StepOutcome::Redundant),
            ode_findings,
        }
    }
}

fn coeff_string(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// One line of the step log. Indices are positions in the input system.
#[derive(Debug, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub replaced: usize,
    pub kept: usize,
    pub quotient: String,
    pub m: usize,
    pub class_total: usize,
    pub terms_replaced: usize,
    pub terms_kept: usize,
    pub predicted: usize,
    pub terms_after: usize,
    pub multiplier_replaced: String,
    pub multiplier_kept: String,
    pub content: String,
    pub outcome: StepOutcome,
    pub result: String,
}

impl StepRecord {
    pub fn new(step: usize, s: &ReductionStep) -> Self {
        StepRecord {
            step,
            replaced: s.replaced,
            kept: s.kept,
            quotient: s.reduction.quotient_string(),
            m: s.reduction.multiplicity,
            class_total: s.reduction.class_total,
            terms_replaced: s.terms_before,
            terms_kept: s.terms_kept,
            predicted: s.reduction.predicted_n3,
            terms_after: s.terms_after,
            multiplier_replaced: s.multiplier_replaced.to_string(),
            multiplier_kept: s.multiplier_kept.to_string(),
            content: coeff_string(&s.content),
            outcome: s.outcome,
            result: s.result.to_string(),
        }
    }
}
