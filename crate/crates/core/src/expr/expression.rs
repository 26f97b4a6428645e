use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::atom::{KernelAtom, ParamAtom};
use super::monomial::{KernelMonomial, Monomial, ParamMonomial};

pub type Coeff = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("multiplier coefficient must be nonzero")]
    ZeroMultiplier,
    #[error("multiplier `{0}` contains an unknown")]
    KernelInMultiplier(String),
}

/// `coeff * param * kernel`, with `coeff != 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: Coeff,
    pub param: ParamMonomial,
    pub kernel: KernelMonomial,
}

impl Term {
    pub fn new(coeff: Coeff, param: ParamMonomial, kernel: KernelMonomial) -> Self {
        Term { coeff, param, kernel }
    }

    /// A term free of unknowns, as used for multipliers.
    pub fn parametric(coeff: Coeff, param: ParamMonomial) -> Self {
        Term::new(coeff, param, Monomial::one())
    }

    fn key_cmp(&self, other: &Term) -> Ordering {
        self.kernel
            .cmp(&other.kernel)
            .then_with(|| self.param.cmp(&other.param))
    }

    fn same_monomial(&self, other: &Term) -> bool {
        self.kernel == other.kernel && self.param == other.param
    }
}

/// A canonical sum of terms: like terms merged, no zero coefficients, terms
/// sorted by kernel monomial and then parametric monomial. The empty sum is
/// zero. Values are immutable once built.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Expression {
    terms: Vec<Term>,
}

impl Expression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Coeff) -> Self {
        Self::normalize(vec![Term::new(c, Monomial::one(), Monomial::one())])
    }

    pub fn from_param_atom(a: ParamAtom) -> Self {
        Self::normalize(vec![Term::new(Coeff::one(), Monomial::atom(a), Monomial::one())])
    }

    pub fn from_kernel_atom(a: KernelAtom) -> Self {
        Self::normalize(vec![Term::new(Coeff::one(), Monomial::one(), Monomial::atom(a))])
    }

    /// Canonical form of an arbitrary term list.
    pub fn normalize(mut raw: Vec<Term>) -> Self {
        raw.sort_by(|a, b| a.key_cmp(b));
        let mut terms: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match terms.last_mut() {
                Some(last) if last.same_monomial(&t) => last.coeff += t.coeff,
                _ => {
                    if let Some(last) = terms.last() {
                        if last.coeff.is_zero() {
                            terms.pop();
                        }
                    }
                    terms.push(t);
                }
            }
        }
        if terms.last().is_some_and(|t| t.coeff.is_zero()) {
            terms.pop();
        }
        Expression { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no term carries an unknown.
    pub fn is_parametric(&self) -> bool {
        self.terms.iter().all(|t| t.kernel.is_one())
    }

    /// Distinct kernel monomials, in canonical order.
    pub fn kernels(&self) -> Vec<&KernelMonomial> {
        let mut out: Vec<&KernelMonomial> = Vec::new();
        for t in &self.terms {
            if out.last() != Some(&&t.kernel) {
                out.push(&t.kernel);
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        Expression {
            terms: self
                .terms
                .iter()
                .map(|t| Term::new(-t.coeff.clone(), t.param.clone(), t.kernel.clone()))
                .collect(),
        }
    }

    fn merge(&self, other: &Self, negate_other: bool) -> Self {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        let sign = |t: &Term| {
            if negate_other {
                Term::new(-t.coeff.clone(), t.param.clone(), t.kernel.clone())
            } else {
                t.clone()
            }
        };
        while i < a.len() && j < b.len() {
            match a[i].key_cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(sign(&b[j]));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate_other {
                        &a[i].coeff - &b[j].coeff
                    } else {
                        &a[i].coeff + &b[j].coeff
                    };
                    if !c.is_zero() {
                        out.push(Term::new(c, a[i].param.clone(), a[i].kernel.clone()));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().map(sign));
        Expression { terms: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.merge(other, false)
    }

    /// Normalized difference `self - other`.
    pub fn subtract(&self, other: &Self) -> Self {
        self.merge(other, true)
    }

    /// Full product; used when parsing input, never by the reduction itself.
    pub fn mul(&self, other: &Self) -> Self {
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                raw.push(Term::new(
                    &a.coeff * &b.coeff,
                    a.param.mul(&b.param),
                    a.kernel.mul(&b.kernel),
                ));
            }
        }
        Self::normalize(raw)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(Coeff::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `c * m * self` for a nonzero rational `c` and parametric monomial `m`.
    /// The term count is unchanged.
    pub fn scale(&self, c: &Coeff, m: &ParamMonomial) -> Result<Self, ExprError> {
        if c.is_zero() {
            return Err(ExprError::ZeroMultiplier);
        }
        let mut terms: Vec<Term> = self
            .terms
            .iter()
            .map(|t| Term::new(&t.coeff * c, t.param.mul(m), t.kernel.clone()))
            .collect();
        if !m.is_one() {
            terms.sort_by(|a, b| a.key_cmp(b));
        }
        Ok(Expression { terms })
    }

    /// Multiply by a single term, which must be free of unknowns.
    pub fn multiply_by_term(&self, t: &Term) -> Result<Self, ExprError> {
        if !t.kernel.is_one() {
            return Err(ExprError::KernelInMultiplier(term_to_string(t)));
        }
        self.scale(&t.coeff, &t.param)
    }

    /// Splits off the rational content: returns `(p, c)` with `self = c * p`,
    /// `p` having coprime integer coefficients and a positive first term.
    pub fn primitive(&self) -> (Self, Coeff) {
        if self.is_zero() {
            return (self.clone(), Coeff::one());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for t in &self.terms {
            num_gcd = num_gcd.gcd(t.coeff.numer());
            den_lcm = den_lcm.lcm(t.coeff.denom());
        }
        let mut content = BigRational::new(num_gcd, den_lcm);
        if self.terms[0].coeff.is_negative() {
            content = -content;
        }
        if content.is_one() {
            return (self.clone(), content);
        }
        let inv = content.recip();
        let terms = self
            .terms
            .iter()
            .map(|t| Term::new(&t.coeff * &inv, t.param.clone(), t.kernel.clone()))
            .collect();
        (Expression { terms }, content)
    }
}

pub(crate) fn coeff_to_string(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Monomial part of a term (`param*kernel`), or empty for a pure number.
fn monomial_part(t: &Term) -> String {
    match (t.param.is_one(), t.kernel.is_one()) {
        (true, true) => String::new(),
        (false, true) => t.param.to_string(),
        (true, false) => t.kernel.to_string(),
        (false, false) => format!("{}*{}", t.param, t.kernel),
    }
}

/// Prints `|coeff| * monomial` without sign.
fn unsigned_term(t: &Term) -> String {
    let mono = monomial_part(t);
    let abs = t.coeff.abs();
    if mono.is_empty() {
        coeff_to_string(&abs)
    } else if abs.is_one() {
        mono
    } else {
        format!("{}*{}", coeff_to_string(&abs), mono)
    }
}

pub fn term_to_string(t: &Term) -> String {
    if t.coeff.is_negative() {
        format!("-{}", unsigned_term(t))
    } else {
        unsigned_term(t)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&term_to_string(self))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i == 0 {
                f.write_str(&term_to_string(t))?;
            } else if t.coeff.is_negative() {
                write!(f, " - {}", unsigned_term(t))?;
            } else {
                write!(f, " + {}", unsigned_term(t))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Coeff {
        Coeff::from_integer(n.into())
    }

    fn x() -> Expression {
        Expression::from_param_atom(ParamAtom::indep("x"))
    }

    fn y() -> Expression {
        Expression::from_param_atom(ParamAtom::indep("y"))
    }

    fn f() -> Expression {
        Expression::from_kernel_atom(KernelAtom::unknown("f"))
    }

    #[test]
    fn cancel_to_zero() {
        let a = Expression::constant(q(3)).mul(&x()).mul(&f());
        assert!(a.subtract(&a).is_zero());
        assert_eq!(a.subtract(&a).to_string(), "0");
    }

    #[test]
    fn like_terms_merge() {
        let xy = x().mul(&y());
        let e = Expression::constant(q(15))
            .mul(&xy)
            .add(&Expression::constant(q(14)).mul(&xy));
        assert_eq!(e.term_count(), 1);
        assert_eq!(e.to_string(), "29*x*y");
    }

    #[test]
    fn negation_by_scale() {
        let e = x().subtract(&y());
        let n = e.scale(&q(-1), &Monomial::one()).unwrap();
        assert_eq!(n.to_string(), "-x + y");
        assert_eq!(e.scale(&q(1), &Monomial::one()).unwrap(), e);
    }

    #[test]
    fn subtract_partial() {
        assert_eq!(x().add(&y()).subtract(&y()), x());
    }

    #[test]
    fn kernel_multiplier_rejected() {
        let t = Term::new(q(1), Monomial::one(), Monomial::atom(KernelAtom::unknown("f")));
        assert!(matches!(
            x().multiply_by_term(&t),
            Err(ExprError::KernelInMultiplier(_))
        ));
        assert_eq!(x().scale(&q(0), &Monomial::one()), Err(ExprError::ZeroMultiplier));
    }

    #[test]
    fn primitive_part() {
        let e = Expression::constant(q(-4))
            .mul(&x())
            .add(&Expression::constant(q(6)).mul(&y()));
        let (p, c) = e.primitive();
        assert_eq!(c, q(-2));
        assert_eq!(p.to_string(), "2*x - 3*y");
        assert_eq!(p.scale(&c, &Monomial::one()).unwrap(), e);
    }

    #[test]
    fn rational_printing() {
        let e = Expression::constant(Coeff::new((-3).into(), 2.into())).mul(&x());
        assert_eq!(e.to_string(), "-3/2*x");
        assert_eq!(Expression::constant(Coeff::new(1.into(), 2.into())).to_string(), "1/2");
    }
}
