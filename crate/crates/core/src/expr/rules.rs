use std::collections::BTreeSet;
use std::fmt;

use super::atom::ParamAtom;
use super::expression::{Expression, Term};

/// `atom^exponent => rhs`, with `rhs` free of unknowns and of `atom`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RewriteRule {
    pub atom: ParamAtom,
    pub exponent: u32,
    pub rhs: Expression,
}

impl RewriteRule {
    pub fn mentions_own_atom(&self) -> bool {
        self.rhs.terms().iter().any(|t| t.param.exponent(&self.atom) > 0)
    }

    fn rewrite(&self, t: &Term) -> Option<Vec<Term>> {
        let rest = t.param.reduce_atom(&self.atom, self.exponent)?;
        Some(
            self.rhs
                .terms()
                .iter()
                .map(|r| Term::new(&t.coeff * &r.coeff, rest.mul(&r.param), t.kernel.clone()))
                .collect(),
        )
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{} = {}", self.atom, self.exponent, self.rhs)
    }
}

/// Index of the first rule that participates in a dependency cycle, if any.
/// Rule `a` depends on rule `b` when `b`'s atom occurs in `a`'s right-hand side.
pub fn find_rule_cycle(rules: &[RewriteRule]) -> Option<usize> {
    let deps: Vec<BTreeSet<usize>> = rules
        .iter()
        .map(|r| {
            rules
                .iter()
                .enumerate()
                .filter(|(_, o)| r.rhs.terms().iter().any(|t| t.param.exponent(&o.atom) > 0))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(i: usize, deps: &[BTreeSet<usize>], state: &mut [u8]) -> bool {
        match state[i] {
            1 => return true,
            2 => return false,
            _ => {}
        }
        state[i] = 1;
        for &j in &deps[i] {
            if visit(j, deps, state) {
                return true;
            }
        }
        state[i] = 2;
        false
    }

    let mut state = vec![0u8; rules.len()];
    (0..rules.len()).find(|&i| visit(i, &deps, &mut state))
}

/// Applies the rules to a fixpoint. Requires an acyclic rule set (see
/// [`find_rule_cycle`]); every rewrite strictly lowers the exponent of the
/// matched atom.
pub fn apply_rules(e: &Expression, rules: &[RewriteRule]) -> Expression {
    if rules.is_empty() {
        return e.clone();
    }
    let mut pending: Vec<Term> = e.terms().to_vec();
    let mut done: Vec<Term> = Vec::with_capacity(pending.len());
    let mut changed = false;
    while let Some(t) = pending.pop() {
        match rules.iter().find_map(|r| r.rewrite(&t)) {
            Some(expanded) => {
                changed = true;
                pending.extend(expanded);
            }
            None => done.push(t),
        }
    }
    if !changed {
        return e.clone();
    }
    Expression::normalize(done)
}
