//! Random inputs, an exhaustive reference search and a timing harness.

use std::collections::HashSet;
use std::fmt;
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Coeff, Expression, KernelAtom, KernelMonomial, ParamAtom, ParamMonomial, Term, VariableTable};
use crate::quotient::find_reduction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolkitError {
    #[error("{requested} distinct terms requested but only {available} monomials exist")]
    TooManyTerms { requested: usize, available: u128 },
    #[error("oracle guard exceeded: {n1} x {n2} term pairs")]
    GuardExceeded { n1: usize, n2: usize },
}

/// `x1..xn`, the independents used by generated polynomials.
pub fn poly_var_names(n_vars: usize) -> Vec<String> {
    (1..=n_vars).map(|i| format!("x{i}")).collect()
}

pub fn poly_vars(n_vars: usize) -> VariableTable {
    let names = poly_var_names(n_vars);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    VariableTable::new(&refs, &[], &[]).expect("generated names are valid")
}

/// `C(n + d, n)`, saturating.
pub fn monomial_count(n_vars: usize, max_degree: u32) -> u128 {
    let (n, d) = (n_vars as u128, max_degree as u128);
    let k = n.min(d);
    let mut c: u128 = 1;
    for i in 1..=k {
        c = match c.checked_mul(n + d + 1 - i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    c
}

fn nonzero_coeff(rng: &mut impl Rng, bound: i64) -> Coeff {
    let v: i64 = rng.gen_range(1..=bound);
    Coeff::from_integer(if rng.gen() { v } else { -v }.into())
}

/// Uniform exponent vector of total degree at most `d`: choosing `n` of the
/// `n + d` slots fixes the `n` exponents and the slack (stars and bars).
fn exponent_vector(rng: &mut impl Rng, n: usize, d: u32) -> Vec<u32> {
    let mut picks = index::sample(rng, n + d as usize, n).into_vec();
    picks.sort_unstable();
    let mut prev: Option<usize> = None;
    picks
        .into_iter()
        .map(|p| {
            let e = match prev {
                None => p,
                Some(q) => p - q - 1,
            };
            prev = Some(p);
            e as u32
        })
        .collect()
}

fn monomial_from(exps: &[u32], names: &[String]) -> ParamMonomial {
    ParamMonomial::from_factors(exps.iter().zip(names).map(|(&e, name)| (ParamAtom::indep(name), e)))
}

fn random_poly_rng(
    rng: &mut impl Rng,
    n_terms: usize,
    n_vars: usize,
    max_degree: u32,
) -> Result<Expression, ToolkitError> {
    let available = monomial_count(n_vars, max_degree);
    if n_terms as u128 > available {
        return Err(ToolkitError::TooManyTerms {
            requested: n_terms,
            available,
        });
    }
    let names = poly_var_names(n_vars);
    let mut seen = HashSet::with_capacity(n_terms);
    let mut terms = Vec::with_capacity(n_terms);
    while terms.len() < n_terms {
        let exps = exponent_vector(rng, n_vars, max_degree);
        if seen.insert(exps.clone()) {
            terms.push(Term::parametric(nonzero_coeff(rng, 99), monomial_from(&exps, &names)));
        }
    }
    Ok(Expression::normalize(terms))
}

/// A polynomial in `x1..x{n_vars}` with exactly `n_terms` distinct monomials
/// of degree at most `max_degree` and coefficients in `[-99, 99] \ {0}`.
pub fn random_poly(seed: u64, n_terms: usize, n_vars: usize, max_degree: u32) -> Result<Expression, ToolkitError> {
    random_poly_rng(&mut ChaCha8Rng::seed_from_u64(seed), n_terms, n_vars, max_degree)
}

/// Keeps the `n` highest terms (descending monomial order).
fn truncate_top(e: &Expression, n: usize) -> Expression {
    let terms = e.terms();
    Expression::normalize(terms[terms.len().saturating_sub(n)..].to_vec())
}

/// `(P3, P1)` with `P1` of `n_short` terms and `P3` the `n_long` highest terms
/// of `c*m*P1 + P2`, where `m` is a random monomial of degree 2 and `P2` a
/// random `n_long`-term polynomial. The multiple of `P1` dominates `P3`, so
/// the pair is usually reducible.
pub fn reducible_pair_sized(
    seed: u64,
    n_long: usize,
    n_short: usize,
    n_vars: usize,
    max_degree: u32,
) -> Result<(Expression, Expression), ToolkitError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p1 = random_poly_rng(&mut rng, n_short, n_vars, max_degree)?;
    let p2 = random_poly_rng(&mut rng, n_long, n_vars, max_degree)?;
    let names = poly_var_names(n_vars);
    let mut exps = vec![0u32; n_vars];
    for _ in 0..2 {
        exps[rng.gen_range(0..n_vars)] += 1;
    }
    let m = Term::parametric(nonzero_coeff(&mut rng, 9), monomial_from(&exps, &names));
    let sum = p1.multiply_by_term(&m).expect("parametric multiplier").add(&p2);
    Ok((truncate_top(&sum, n_long), p1))
}

/// Same-length [`reducible_pair_sized`], returned as `(P1, P3)`.
pub fn reducible_pair(
    seed: u64,
    n_terms: usize,
    n_vars: usize,
    max_degree: u32,
) -> Result<(Expression, Expression), ToolkitError> {
    let (p3, p1) = reducible_pair_sized(seed, n_terms, n_terms, n_vars, max_degree)?;
    Ok((p1, p3))
}

/// Small mixed pair over independents `x1..x3`, unknowns `f, g, h` and the
/// derivative `d(f,x1)`, with at most 8 terms each and small coefficients so
/// that quotient classes collide often. About half the pairs are built from a
/// multiple of the first equation.
pub fn random_small_pair(seed: u64) -> (Expression, Expression) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_vars = rng.gen_range(1..=3);
    let n_unknowns = rng.gen_range(1..=3);
    let names = poly_var_names(n_vars);
    let mut kernels = vec![KernelMonomial::one()];
    for u in ["f", "g", "h"].iter().take(n_unknowns) {
        kernels.push(KernelMonomial::atom(KernelAtom::unknown(u)));
    }
    kernels.push(KernelMonomial::atom(KernelAtom::deriv("f", &["x1"])));

    let term = |rng: &mut ChaCha8Rng| {
        let exps = exponent_vector(rng, n_vars, 2);
        let k = kernels[rng.gen_range(0..kernels.len())].clone();
        Term::new(nonzero_coeff(rng, 3), monomial_from(&exps, &names), k)
    };
    let n1 = rng.gen_range(1..=8);
    let e1 = Expression::normalize((0..n1).map(|_| term(&mut rng)).collect());
    let e2 = if rng.gen_bool(0.5) {
        let n2 = rng.gen_range(1..=8);
        Expression::normalize((0..n2).map(|_| term(&mut rng)).collect())
    } else {
        let exps = exponent_vector(&mut rng, n_vars, 1);
        let m = Term::parametric(nonzero_coeff(&mut rng, 3), monomial_from(&exps, &names));
        let scaled = e1.multiply_by_term(&m).expect("parametric multiplier");
        let mut terms: Vec<Term> = scaled.terms().iter().filter(|_| rng.gen_bool(0.7)).cloned().collect();
        for _ in 0..rng.gen_range(0..=3) {
            terms.push(term(&mut rng));
        }
        let e = Expression::normalize(terms);
        Expression::normalize(e.terms().iter().take(8).cloned().collect())
    };
    (e1, e2)
}

/// Reference result of trying every term pair of `e1, e2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    /// Fewest terms reachable, counting the untouched `e1` as a candidate.
    pub min_terms: usize,
    /// Multipliers `(d, n)` such that `d*e1 - n*e2` has `min_terms` terms;
    /// `None` when no combination beats `e1`.
    pub witness: Option<(Term, Term)>,
}

pub const ORACLE_GUARD: usize = 10_000;

fn monomial_gcd(a: &ParamMonomial, b: &ParamMonomial) -> ParamMonomial {
    ParamMonomial::from_factors(
        a.factors()
            .iter()
            .map(|(atom, e)| (atom.clone(), (*e).min(b.exponent(atom)))),
    )
}

/// Brute force: for every term pair with equal kernels, cancel that pair
/// exactly with the smallest monomial multipliers and count the result.
pub fn oracle_best(e1: &Expression, e2: &Expression) -> Result<OracleResult, ToolkitError> {
    let (n1, n2) = (e1.term_count(), e2.term_count());
    if n1 * n2 > ORACLE_GUARD {
        return Err(ToolkitError::GuardExceeded { n1, n2 });
    }
    let mut best = OracleResult {
        min_terms: n1,
        witness: None,
    };
    let mut tried = HashSet::new();
    for t1 in e1.terms() {
        for t2 in e2.terms().iter().filter(|t2| t2.kernel == t1.kernel) {
            let g = monomial_gcd(&t1.param, &t2.param);
            let d_mono = t2.param.div_exact(&g).expect("gcd divides");
            let n_mono = t1.param.div_exact(&g).expect("gcd divides");
            let d = Term::parametric(t2.coeff.clone(), d_mono);
            let n = Term::parametric(t1.coeff.clone(), n_mono);
            // d/n up to scaling identifies the combination
            let ratio = &n.coeff / &d.coeff;
            if !tried.insert((ratio, d.param.clone(), n.param.clone())) {
                continue;
            }
            let e3 = e1
                .multiply_by_term(&d)
                .expect("parametric")
                .subtract(&e2.multiply_by_term(&n).expect("parametric"));
            if e3.term_count() < best.min_terms {
                best = OracleResult {
                    min_terms: e3.term_count(),
                    witness: Some((d, n)),
                };
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    /// Independent random polynomials.
    Unsuccessful,
    /// Constructed with [`reducible_pair_sized`].
    Successful,
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairKind::Unsuccessful => "unsuccessful",
            PairKind::Successful => "successful",
        })
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
    pub vars: usize,
    pub degree: u32,
    pub reps: usize,
    pub seed: u64,
    pub kind: PairKind,
    pub pruning: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchCell {
    pub n1: usize,
    pub n2: usize,
    pub vars: usize,
    pub degree: u32,
    /// Whether the engine found a reduction for the timed pairs
    /// (`reduced`, `none` or `mixed`).
    pub outcome: String,
    pub median_ms: f64,
    pub reps: usize,
}

pub const CSV_HEADER: &str = "n1,n2,vars,degree,outcome,median_ms,reps";

impl BenchCell {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3},{}",
            self.n1, self.n2, self.vars, self.degree, self.outcome, self.median_ms, self.reps
        )
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k == 0 {
        0.0
    } else if k % 2 == 1 {
        xs[k / 2]
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) / 2.0
    }
}

/// Times one cell: each repetition uses a fresh pair and times only the
/// pair search on the calling thread.
pub fn bench_cell(cfg: &BenchConfig, n1: usize, n2: usize) -> Result<BenchCell, ToolkitError> {
    let mut times = Vec::with_capacity(cfg.reps);
    let (mut reduced, mut failed) = (0, 0);
    for rep in 0..cfg.reps {
        let seed = cfg
            .seed
            .wrapping_add((n1 as u64) << 32)
            .wrapping_add((n2 as u64) << 16)
            .wrapping_add(rep as u64);
        let (a, b) = match cfg.kind {
            PairKind::Unsuccessful => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_poly_rng(&mut rng, n1, cfg.vars, cfg.degree)?;
                let b = random_poly_rng(&mut rng, n2, cfg.vars, cfg.degree)?;
                (a, b)
            }
            PairKind::Successful => {
                let (long, short) = reducible_pair_sized(seed, n1.max(n2), n1.min(n2), cfg.vars, cfg.degree)?;
                (long, short)
            }
        };
        let (long, short) = if a.term_count() >= b.term_count() {
            (a, b)
        } else {
            (b, a)
        };
        let start = Instant::now();
        let found = find_reduction(&long, &short, cfg.pruning).reduction.is_some();
        times.push(start.elapsed().as_secs_f64() * 1e3);
        if found {
            reduced += 1;
        } else {
            failed += 1;
        }
    }
    let outcome = match (reduced, failed) {
        (_, 0) if reduced > 0 => "reduced",
        (0, _) => "none",
        _ => "mixed",
    };
    Ok(BenchCell {
        n1,
        n2,
        vars: cfg.vars,
        degree: cfg.degree,
        outcome: outcome.to_string(),
        median_ms: median(times),
        reps: cfg.reps,
    })
}

/// Every `(n1, n2)` cell of the grid, in row-major order.
pub fn bench_grid(cfg: &BenchConfig) -> Result<Vec<BenchCell>, ToolkitError> {
    let mut cells = Vec::new();
    for &n1 in &cfg.n1 {
        for &n2 in &cfg.n2 {
            cells.push(bench_cell(cfg, n1, n2)?);
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    #[test]
    fn counts() {
        assert_eq!(monomial_count(1, 0), 1);
        assert_eq!(monomial_count(2, 2), 6);
        assert_eq!(monomial_count(7, 7), 3432);
    }

    #[test]
    fn constant_poly() {
        let p = random_poly(5, 1, 1, 0).unwrap();
        assert_eq!(p.term_count(), 1);
        assert!(p.terms()[0].param.is_one());
    }

    #[test]
    fn exact_size_and_determinism() {
        let p = random_poly(11, 300, 7, 7).unwrap();
        assert_eq!(p.term_count(), 300);
        assert_eq!(p, random_poly(11, 300, 7, 7).unwrap());
        assert_ne!(p, random_poly(12, 300, 7, 7).unwrap());
        for t in p.terms() {
            assert!(t.param.degree() <= 7);
            let c = t.coeff.numer().clone();
            assert!(c != 0.into() && c >= (-99).into() && c <= 99.into());
        }
    }

    #[test]
    fn full_monomial_set() {
        let p = random_poly(1, 6, 2, 2).unwrap();
        assert_eq!(p.term_count(), 6);
        assert!(matches!(
            random_poly(1, 7, 2, 2),
            Err(ToolkitError::TooManyTerms {
                requested: 7,
                available: 6
            })
        ));
    }

    #[test]
    fn exponent_vectors_cover_uniformly() {
        // 2 vars, degree <= 1: three vectors, each near 1/3
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hist = std::collections::HashMap::new();
        for _ in 0..3000 {
            *hist.entry(exponent_vector(&mut rng, 2, 1)).or_insert(0) += 1;
        }
        assert_eq!(hist.len(), 3);
        assert!(hist.values().all(|&c| (850..1150).contains(&c)));
    }

    #[test]
    fn single_term_pair() {
        let (p1, p3) = reducible_pair(4, 1, 2, 3).unwrap();
        assert_eq!((p1.term_count(), p3.term_count()), (1, 1));
    }

    #[test]
    fn reducible_pair_success_rate() {
        let ok = (0..100)
            .filter(|&s| {
                let (p1, p3) = reducible_pair(s, 300, 5, 7).unwrap();
                find_reduction(&p3, &p1, true).reduction.is_some()
            })
            .count();
        assert!(ok >= 90, "{ok}/100");
    }

    #[test]
    fn oracle_worked_example() {
        let v = VariableTable::new(&["x", "y"], &["f", "g"], &[]).unwrap();
        let e1 = parse_expression("2*x*f + 6*y*f + 4*x*g + 5*x", &v).unwrap();
        let e2 = parse_expression("3*y*f - 3*x*f + 6*y*g - 7*y", &v).unwrap();
        let r = oracle_best(&e1, &e2).unwrap();
        assert_eq!(r.min_terms, 3);
        let (d, n) = r.witness.unwrap();
        assert_eq!((d.to_string(), n.to_string()), ("3*y".to_string(), "2*x".to_string()));
    }

    #[test]
    fn oracle_trivial_cases() {
        let v = VariableTable::new(&["x"], &["f", "g"], &[]).unwrap();
        let e1 = parse_expression("x*f + f", &v).unwrap();
        let e2 = parse_expression("x*g", &v).unwrap();
        assert_eq!(oracle_best(&e1, &e2).unwrap().min_terms, 2);
        assert_eq!(oracle_best(&e1, &e1).unwrap().min_terms, 0);
    }

    #[test]
    fn oracle_guard() {
        let p = random_poly(1, 101, 4, 6).unwrap();
        assert!(matches!(oracle_best(&p, &p), Err(ToolkitError::GuardExceeded { .. })));
    }

    #[test]
    fn small_pairs_are_bounded() {
        for s in 0..200 {
            let (a, b) = random_small_pair(s);
            assert!((1..=8).contains(&a.term_count()));
            assert!(b.term_count() <= 8);
        }
    }

    #[test]
    fn grid_shape() {
        let cfg = BenchConfig {
            n1: vec![10, 20],
            n2: vec![5, 20],
            vars: 3,
            degree: 4,
            reps: 2,
            seed: 0,
            kind: PairKind::Unsuccessful,
            pruning: true,
        };
        let cells = bench_grid(&cfg).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[3].csv_row().split(',').count(), CSV_HEADER.split(',').count());
    }
}
