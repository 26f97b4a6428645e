use std::cmp::Ordering;
use std::fmt;

use super::atom::{KernelAtom, ParamAtom};

/// Product of atoms with positive exponents, stored sorted by atom with no
/// zero exponents. The empty product is the monomial `1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial<A> {
    factors: Vec<(A, u32)>,
}

pub type ParamMonomial = Monomial<ParamAtom>;
pub type KernelMonomial = Monomial<KernelAtom>;

impl<A> Default for Monomial<A> {
    fn default() -> Self {
        Monomial { factors: Vec::new() }
    }
}

impl<A: Ord + Clone> Monomial<A> {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn atom(a: A) -> Self {
        Monomial { factors: vec![(a, 1)] }
    }

    /// Builds a monomial from arbitrary factors, merging repeated atoms and
    /// dropping zero exponents.
    pub fn from_factors(factors: impl IntoIterator<Item = (A, u32)>) -> Self {
        let mut v: Vec<(A, u32)> = factors.into_iter().filter(|(_, e)| *e > 0).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(A, u32)> = Vec::with_capacity(v.len());
        for (a, e) in v {
            match out.last_mut() {
                Some((last, le)) if *last == a => *le += e,
                _ => out.push((a, e)),
            }
        }
        Monomial { factors: out }
    }

    pub fn factors(&self) -> &[(A, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, atom: &A) -> u32 {
        self.factors
            .binary_search_by(|(a, _)| a.cmp(atom))
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &A> {
        self.factors.iter().map(|(a, _)| a)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if other.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return other.clone();
        }
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { factors: out }
    }

    pub fn pow(&self, k: u32) -> Self {
        if k == 0 {
            return Self::one();
        }
        Monomial {
            factors: self.factors.iter().map(|(a, e)| (a.clone(), e * k)).collect(),
        }
    }

    /// `self / other` if `other` divides `self`.
    pub fn div_exact(&self, other: &Self) -> Option<Self> {
        let (num, den) = self.ratio(other);
        den.is_one().then_some(num)
    }

    /// The reduced fraction `self / other` as a coprime `(numerator, denominator)`.
    pub fn ratio(&self, other: &Self) -> (Self, Self) {
        let mut num = Vec::new();
        let mut den = Vec::new();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    num.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    den.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let (ea, eb) = (a[i].1, b[j].1);
                    match ea.cmp(&eb) {
                        Ordering::Greater => num.push((a[i].0.clone(), ea - eb)),
                        Ordering::Less => den.push((a[i].0.clone(), eb - ea)),
                        Ordering::Equal => {}
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        num.extend_from_slice(&a[i..]);
        den.extend_from_slice(&b[j..]);
        (Monomial { factors: num }, Monomial { factors: den })
    }

    /// Remove `atom^k` from the monomial; `None` if the exponent is too small.
    pub fn reduce_atom(&self, atom: &A, k: u32) -> Option<Self> {
        let i = self.factors.binary_search_by(|(a, _)| a.cmp(atom)).ok()?;
        let e = self.factors[i].1;
        if e < k {
            return None;
        }
        let mut factors = self.factors.clone();
        if e == k {
            factors.remove(i);
        } else {
            factors[i].1 = e - k;
        }
        Some(Monomial { factors })
    }
}

/// Graded order: total degree first, then the factor lists compared
/// lexicographically.
impl<A: Ord> Ord for Monomial<A> {
    fn cmp(&self, other: &Self) -> Ordering {
        let da: u32 = self.factors.iter().map(|(_, e)| e).sum();
        let db: u32 = other.factors.iter().map(|(_, e)| e).sum();
        da.cmp(&db).then_with(|| self.factors.cmp(&other.factors))
    }
}

impl<A: Ord> PartialOrd for Monomial<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<A: fmt::Display> fmt::Display for Monomial<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        for (i, (a, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{}", a)?;
            } else {
                write!(f, "{}^{}", a, e)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(f: &[(&str, u32)]) -> ParamMonomial {
        Monomial::from_factors(f.iter().map(|(n, e)| (ParamAtom::indep(n), *e)))
    }

    #[test]
    fn ratio_is_coprime() {
        let (n, d) = m(&[("x", 2), ("y", 1)]).ratio(&m(&[("x", 1), ("y", 3), ("z", 1)]));
        assert_eq!(n, m(&[("x", 1)]));
        assert_eq!(d, m(&[("y", 2), ("z", 1)]));
        assert_eq!(
            m(&[("x", 1)]).ratio(&m(&[("x", 1)])),
            (Monomial::one(), Monomial::one())
        );
    }

    #[test]
    fn merge_and_drop_zero() {
        let a = Monomial::from_factors(vec![
            (ParamAtom::indep("y"), 1),
            (ParamAtom::indep("x"), 0),
            (ParamAtom::indep("y"), 2),
        ]);
        assert_eq!(a, m(&[("y", 3)]));
        assert_eq!(a.to_string(), "y^3");
        assert_eq!(m(&[]).to_string(), "1");
    }

    #[test]
    fn mul_then_div() {
        let a = m(&[("x", 1), ("y", 2)]);
        let b = m(&[("y", 1), ("z", 4)]);
        assert_eq!(a.mul(&b).div_exact(&b), Some(a.clone()));
        assert_eq!(a.div_exact(&b), None);
        assert_eq!(a.mul(&b).degree(), 8);
    }

    #[test]
    fn graded_order() {
        assert!(m(&[]) < m(&[("y", 1)]));
        assert!(m(&[("z", 1)]) < m(&[("x", 2)]));
        assert!(m(&[("x", 1)]) < m(&[("y", 1)]));
    }
}
