//! Optimal single-term combination of two equations.
//!
//! For `E1` (longer, `n1` terms) and `E2` (shorter, `n2` terms), every
//! quotient `t1/t2` of terms sharing a kernel is reduced to a numeric factor
//! times a coprime monomial ratio. Quotients with the same ratio form a class
//! `c_i`; the multiplicity `m` of one quotient and the class total `M` give the
//! length of `d*E1 - n*E2` as `n1 + n2 - m - M`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Coeff, Expression, ParamAtom, ParamMonomial, Term};
use crate::linearize::{common_blocks, partition, KernelBlock, KernelPartition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("internal consistency: predicted {predicted} terms, combination has {actual}")]
    CountMismatch { predicted: usize, actual: usize },
}

/// Class identity: a coprime, sign-free monomial ratio `numerator/denominator`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuotientKey {
    pub numerator: ParamMonomial,
    pub denominator: ParamMonomial,
}

impl QuotientKey {
    pub fn of(p1: &ParamMonomial, p2: &ParamMonomial) -> Self {
        let (numerator, denominator) = p1.ratio(p2);
        QuotientKey { numerator, denominator }
    }

    pub fn degree(&self) -> u32 {
        self.numerator.degree() + self.denominator.degree()
    }
}

impl fmt::Display for QuotientKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// One class `c_i`: distinct numeric factors with multiplicities `m_ij` and
/// their sum `M_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientClass {
    pub key: QuotientKey,
    /// Sorted by coefficient.
    pub members: Vec<(Coeff, usize)>,
    pub total: usize,
}

impl QuotientClass {
    pub fn multiplicity(&self, c: &Coeff) -> usize {
        self.members.iter().find(|(q, _)| q == c).map_or(0, |(_, m)| *m)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ScanStats {
    /// Number of term quotients actually computed.
    pub raw_quotients: usize,
    pub classes_dropped: usize,
    /// The table emptied after new classes were no longer admitted.
    pub aborted: bool,
}

/// The list `L` for one ordered pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientTable {
    /// Sorted by key.
    pub classes: Vec<QuotientClass>,
    pub n1: usize,
    pub n2: usize,
    pub stats: ScanStats,
}

impl QuotientTable {
    pub fn class(&self, key: &QuotientKey) -> Option<&QuotientClass> {
        self.classes
            .binary_search_by(|c| c.key.cmp(key))
            .ok()
            .map(|i| &self.classes[i])
    }
}

/// The chosen combination `E3 = (c_d*den)*E1 - (c_n*num)*E2` where the
/// quotient is `(c_n/c_d) * num/den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub coeff: Coeff,
    pub key: QuotientKey,
    /// `m`: occurrences of this exact quotient.
    pub multiplicity: usize,
    /// `M`: occurrences of any quotient in its class.
    pub class_total: usize,
    pub n1: usize,
    pub n2: usize,
    pub predicted_n3: usize,
}

impl Reduction {
    fn new(coeff: Coeff, key: QuotientKey, m: usize, total: usize, n1: usize, n2: usize) -> Self {
        debug_assert!(m + total > n2);
        Reduction {
            predicted_n3: n1 + n2 - m - total,
            coeff,
            key,
            multiplicity: m,
            class_total: total,
            n1,
            n2,
        }
    }

    /// Denominator side of the quotient; multiplies `E1`.
    pub fn multiplier_e1(&self) -> Term {
        Term::parametric(
            Coeff::from_integer(self.coeff.denom().clone()),
            self.key.denominator.clone(),
        )
    }

    /// Numerator side of the quotient; multiplies `E2`.
    pub fn multiplier_e2(&self) -> Term {
        Term::parametric(
            Coeff::from_integer(self.coeff.numer().clone()),
            self.key.numerator.clone(),
        )
    }

    /// The quotient as `numerator/denominator` terms, e.g. `2*x/(3*y)`.
    pub fn quotient_string(&self) -> String {
        let num = self.multiplier_e2().to_string();
        let den = self.multiplier_e1();
        if den.coeff.is_one() && den.param.is_one() {
            num
        } else if den.param.factors().len() + usize::from(!den.coeff.is_one()) > 1 {
            format!("{}/({})", num, den)
        } else {
            format!("{}/{}", num, den)
        }
    }
}

/// Necessary condition for any length reduction: more than `n2` terms must be
/// saved, and kernel `j` can save at most `2*min(n_1j, n_2j)`.
pub fn precheck(p1: &KernelPartition<'_>, p2: &KernelPartition<'_>, n2: usize) -> bool {
    let potential: usize = common_blocks(p1, p2)
        .iter()
        .map(|(a, b)| 2 * a.len().min(b.len()))
        .sum();
    potential > n2
}

/// Kernel processing order for the scan: shared kernels by descending
/// `min(n_1j, n_2j)`, ties in canonical kernel order.
#[derive(Clone, Debug)]
pub struct ScanPlan<'a, 'b> {
    blocks: Vec<(KernelBlock<'a>, KernelBlock<'b>)>,
    /// `tail[j] = sum_{i >= j} min(n_1i, n_2i)`.
    tail: Vec<usize>,
}

impl<'a, 'b> ScanPlan<'a, 'b> {
    pub fn new(p1: &KernelPartition<'a>, p2: &KernelPartition<'b>) -> Self {
        let mut blocks = common_blocks(p1, p2);
        // stable sort keeps canonical order among equal minima
        blocks.sort_by_key(|(a, b)| std::cmp::Reverse(a.len().min(b.len())));
        let mut tail = vec![0; blocks.len() + 1];
        for j in (0..blocks.len()).rev() {
            tail[j] = tail[j + 1] + blocks[j].0.len().min(blocks[j].1.len());
        }
        ScanPlan { blocks, tail }
    }

    pub fn blocks(&self) -> &[(KernelBlock<'a>, KernelBlock<'b>)] {
        &self.blocks
    }

    /// `B_j(w)`: upper bound on cancellations still to be found once the first
    /// `w` E1 terms of kernel `j` (in plan order) have been processed.
    pub fn bound(&self, j: usize, w: usize) -> usize {
        match self.blocks.get(j) {
            None => 0,
            Some((a, b)) => (a.len() - w.min(a.len())).min(b.len()) + self.tail[j + 1],
        }
    }
}

/// `B_j(w)` for kernel position `j` of the scan plan of `(p1, p2)`.
pub fn bound_b(p1: &KernelPartition<'_>, p2: &KernelPartition<'_>, j: usize, w: usize) -> usize {
    ScanPlan::new(p1, p2).bound(j, w)
}

/// Sparse exponent vector over indices into a sorted atom list.
type Code = Vec<(u32, u32)>;

/// Dense numbering of the parametric atoms of a pair, in canonical order, so
/// the scan can hash small integer vectors instead of monomials.
struct AtomCodec {
    atoms: Vec<ParamAtom>,
}

impl AtomCodec {
    fn new(plan: &ScanPlan<'_, '_>) -> Self {
        let set: BTreeSet<&ParamAtom> = plan
            .blocks()
            .iter()
            .flat_map(|(a, b)| a.terms.iter().chain(b.terms))
            .flat_map(|t| t.param.atoms())
            .collect();
        AtomCodec {
            atoms: set.into_iter().cloned().collect(),
        }
    }

    fn encode_all(&self, terms: &[Term]) -> Vec<Code> {
        terms
            .iter()
            .map(|t| {
                t.param
                    .factors()
                    .iter()
                    .map(|(a, e)| (self.atoms.binary_search(a).expect("atom indexed") as u32, *e))
                    .collect()
            })
            .collect()
    }

    /// Positive entries form the numerator, negative ones the denominator.
    fn decode(&self, key: &[(u32, i32)]) -> QuotientKey {
        let side = |positive: bool| {
            ParamMonomial::from_factors(
                key.iter()
                    .filter(|(_, e)| (*e > 0) == positive)
                    .map(|(i, e)| (self.atoms[*i as usize].clone(), e.unsigned_abs())),
            )
        };
        QuotientKey {
            numerator: side(true),
            denominator: side(false),
        }
    }
}

/// Writes the exponent difference `a - b` into `out`, omitting zeros.
fn signed_ratio(a: &[(u32, u32)], b: &[(u32, u32)], out: &mut Vec<(u32, i32)>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ai = a.get(i).map_or(u32::MAX, |x| x.0);
        let bj = b.get(j).map_or(u32::MAX, |x| x.0);
        match ai.cmp(&bj) {
            Ordering::Less => {
                out.push((ai, a[i].1 as i32));
                i += 1;
            }
            Ordering::Greater => {
                out.push((bj, -(b[j].1 as i32)));
                j += 1;
            }
            Ordering::Equal => {
                let d = a[i].1 as i32 - b[j].1 as i32;
                if d != 0 {
                    out.push((ai, d));
                }
                i += 1;
                j += 1;
            }
        }
    }
}

/// Coefficient quotient with a machine-word fast path. Canonical: `Small`
/// whenever the reduced value fits, so derived equality is value equality.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Ratio {
    Small(i64, i64),
    Big(Coeff),
}

impl Ratio {
    fn quotient(a: &Coeff, b: &Coeff) -> Self {
        let small = |c: &Coeff| Some((c.numer().to_i64()?, c.denom().to_i64()?));
        if let (Some((an, ad)), Some((bn, bd))) = (small(a), small(b)) {
            let mut n = an as i128 * bd as i128;
            let mut d = ad as i128 * bn as i128;
            if d < 0 {
                n = -n;
                d = -d;
            }
            let g = n.gcd(&d);
            if let (Ok(n), Ok(d)) = (i64::try_from(n / g), i64::try_from(d / g)) {
                return Ratio::Small(n, d);
            }
        }
        Ratio::Big(a / b)
    }

    fn into_coeff(self) -> Coeff {
        match self {
            Ratio::Small(n, d) => Coeff::new_raw(n.into(), d.into()),
            Ratio::Big(c) => c,
        }
    }
}

#[derive(Default)]
struct ClassAcc {
    members: Vec<(Ratio, usize)>,
    total: usize,
    best: usize,
}

impl ClassAcc {
    fn record(&mut self, c: Ratio) {
        self.total += 1;
        let m = match self.members.iter_mut().find(|(q, _)| *q == c) {
            Some((_, m)) => {
                *m += 1;
                *m
            }
            None => {
                self.members.push((c, 1));
                1
            }
        };
        self.best = self.best.max(m);
    }

    fn viable(&self, bound: usize, n2: usize) -> bool {
        self.total + self.best + 2 * bound > n2
    }
}

/// Builds the quotient table kernel by kernel.
///
/// With `pruning`, classes that can no longer satisfy
/// `M_k + m_kl + 2*B_j(w) > n2` are dropped, no classes are admitted once
/// `2*B_j(w) <= n2`, and the scan stops if the table empties after that
/// point. The scan never stops on the first viable quotient.
pub fn collect_quotients(p1: &KernelPartition<'_>, p2: &KernelPartition<'_>, pruning: bool) -> QuotientTable {
    let n1 = p1.term_count();
    let n2 = p2.term_count();
    let plan = ScanPlan::new(p1, p2);
    let mut stats = ScanStats::default();
    let codec = AtomCodec::new(&plan);
    let encoded: Vec<(Vec<Code>, Vec<Code>)> = plan
        .blocks()
        .iter()
        .map(|(b1, b2)| (codec.encode_all(b1.terms), codec.encode_all(b2.terms)))
        .collect();
    let mut table: HashMap<Box<[(u32, i32)]>, ClassAcc> = HashMap::new();
    let mut dead: HashSet<Box<[(u32, i32)]>> = HashSet::new();
    let mut admitting = true;
    let mut since_sweep = 0usize;
    let mut key = Vec::new();

    'scan: for (j, (b1, b2)) in plan.blocks().iter().enumerate() {
        let (c1, c2) = &encoded[j];
        for (w, t1) in b1.terms.iter().enumerate() {
            if pruning && admitting && 2 * plan.bound(j, w) <= n2 {
                admitting = false;
                dead.clear();
            }
            if pruning && !admitting && table.is_empty() {
                stats.aborted = true;
                break 'scan;
            }
            for (t2, code2) in b2.terms.iter().zip(c2) {
                stats.raw_quotients += 1;
                signed_ratio(&c1[w], code2, &mut key);
                let c = Ratio::quotient(&t1.coeff, &t2.coeff);
                if let Some(acc) = table.get_mut(key.as_slice()) {
                    acc.record(c);
                } else if admitting && !dead.contains(key.as_slice()) {
                    let mut acc = ClassAcc::default();
                    acc.record(c);
                    table.insert(key.as_slice().into(), acc);
                }
            }
            if pruning {
                since_sweep += b2.len();
                if !admitting || since_sweep >= table.len() {
                    since_sweep = 0;
                    let bound = plan.bound(j, w + 1);
                    let before = table.len();
                    table.retain(|k, acc| {
                        let keep = acc.viable(bound, n2);
                        if !keep && admitting {
                            dead.insert(k.clone());
                        }
                        keep
                    });
                    stats.classes_dropped += before - table.len();
                }
            }
        }
    }
    if pruning && !stats.aborted && !admitting && table.is_empty() {
        stats.aborted = true;
    }

    let mut classes: Vec<QuotientClass> = table
        .into_iter()
        .map(|(key, acc)| {
            let mut members: Vec<(Coeff, usize)> = acc.members.into_iter().map(|(c, m)| (c.into_coeff(), m)).collect();
            members.sort_by(|a, b| a.0.cmp(&b.0));
            QuotientClass {
                key: codec.decode(&key),
                members,
                total: acc.total,
            }
        })
        .collect();
    classes.sort_by(|a, b| a.key.cmp(&b.key));
    QuotientTable { classes, n1, n2, stats }
}

fn coeff_preference(a: &Coeff, b: &Coeff) -> Ordering {
    a.abs()
        .cmp(&b.abs())
        .then_with(|| b.is_positive().cmp(&a.is_positive()))
}

/// Picks the quotient maximizing `m + M` subject to `m + M > n2`.
///
/// Ties: lower total degree of the key, then canonical key order, then the
/// smaller absolute coefficient (positive before negative).
pub fn best_reduction(t: &QuotientTable) -> Option<Reduction> {
    let mut best: Option<(usize, &QuotientClass, &Coeff, usize)> = None;
    for class in &t.classes {
        let Some((c, m)) = class
            .members
            .iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| coeff_preference(&b.0, &a.0)))
        else {
            continue;
        };
        let score = m + class.total;
        if score <= t.n2 {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bs, bc, bcoeff, _)) => {
                score
                    .cmp(bs)
                    .then_with(|| bc.key.degree().cmp(&class.key.degree()))
                    .then_with(|| bc.key.cmp(&class.key))
                    .then_with(|| coeff_preference(bcoeff, c))
                    == Ordering::Greater
            }
        };
        if better {
            best = Some((score, class, c, *m));
        }
    }
    best.map(|(_, class, c, m)| Reduction::new(c.clone(), class.key.clone(), m, class.total, t.n1, t.n2))
}

/// `E3 = (c_d*den)*E1 - (c_n*num)*E2`, checked against the predicted length.
pub fn apply_reduction(e1: &Expression, e2: &Expression, r: &Reduction) -> Result<Expression, EngineError> {
    let left = e1
        .multiply_by_term(&r.multiplier_e1())
        .expect("multiplier is parametric and nonzero");
    let right = e2
        .multiply_by_term(&r.multiplier_e2())
        .expect("multiplier is parametric and nonzero");
    let e3 = left.subtract(&right);
    if e3.term_count() != r.predicted_n3 {
        return Err(EngineError::CountMismatch {
            predicted: r.predicted_n3,
            actual: e3.term_count(),
        });
    }
    Ok(e3)
}

/// Result of investigating one ordered pair.
#[derive(Clone, Debug)]
pub struct PairSearch {
    pub reduction: Option<Reduction>,
    pub feasible: bool,
    pub stats: ScanStats,
}

/// Full pair investigation: partition, precheck, quotient scan, selection.
/// `e1` must have at least as many terms as `e2`.
pub fn find_reduction(e1: &Expression, e2: &Expression, pruning: bool) -> PairSearch {
    debug_assert!(e1.term_count() >= e2.term_count());
    let (p1, p2) = (partition(e1), partition(e2));
    if e2.is_zero() || !precheck(&p1, &p2, e2.term_count()) {
        return PairSearch {
            reduction: None,
            feasible: false,
            stats: ScanStats::default(),
        };
    }
    let table = collect_quotients(&p1, &p2, pruning);
    PairSearch {
        reduction: best_reduction(&table),
        feasible: true,
        stats: table.stats,
    }
}
