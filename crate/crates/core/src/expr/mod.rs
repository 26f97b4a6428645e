//! Canonical sparse expressions with exact rational coefficients.
//!
//! A term is `coeff * parametric monomial * kernel monomial`. Parametric
//! atoms (independents, parameters, opaque functions of independents) may
//! appear in multipliers; kernel atoms (unknowns, their derivatives, opaque
//! constructs over unknowns) never do.

mod atom;
mod expression;
mod monomial;
mod parse;
mod rules;

pub use atom::{KernelAtom, Name, ParamAtom};
pub use expression::{term_to_string, Coeff, ExprError, Expression, Term};
pub use monomial::{KernelMonomial, Monomial, ParamMonomial};
pub use parse::{parse_expression, parse_system, AtomClass, ParseError, System, VariableTable};
pub use rules::{apply_rules, find_rule_cycle, RewriteRule};
