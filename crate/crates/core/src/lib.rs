//! Term-count reduction for systems of algebraic and differential equations.
//!
//! Pairs of equations are combined as `d*E1 - n*E2` with single-term,
//! unknown-free multipliers `d`, `n` whenever the result is strictly shorter
//! than the longer equation. The best multipliers are found by grouping the
//! quotients of matching terms into classes that differ only by a numeric
//! factor.

pub mod diagnostics;
pub mod expr;
pub mod linearize;
pub mod quotient;
pub mod scheduler;
pub mod toolkit;
