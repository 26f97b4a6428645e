//! Side products of reduction: which unknowns each equation still couples,
//! and which equations have become ordinary differential equations.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::expr::{Expression, KernelAtom, Name};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OccupancyRow {
    pub equation: usize,
    pub terms: usize,
    pub unknowns: Vec<String>,
}

/// Unknown names occurring in `e` through any kernel atom, sorted.
pub fn unknowns_of(e: &Expression) -> Vec<String> {
    let set: BTreeSet<Name> = e
        .terms()
        .iter()
        .flat_map(|t| t.kernel.atoms())
        .flat_map(KernelAtom::unknowns)
        .collect();
    set.into_iter().map(|n| n.to_string()).collect()
}

pub fn occupancy_table<'a>(equations: impl IntoIterator<Item = (usize, &'a Expression)>) -> Vec<OccupancyRow> {
    equations
        .into_iter()
        .map(|(equation, e)| OccupancyRow {
            equation,
            terms: e.term_count(),
            unknowns: unknowns_of(e),
        })
        .collect()
}

/// All derivatives in the equation are `d^k/dx^k` of one base derivative
/// `d(unknown, base...)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OdeForm {
    pub unknown: String,
    pub base: Vec<String>,
    pub variable: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OdeFinding {
    pub equation: usize,
    #[serde(flatten)]
    pub form: OdeForm,
}

type Multiset = BTreeMap<Name, u32>;

pub fn detect_ode(e: &Expression) -> Option<OdeForm> {
    let mut unknown: Option<&Name> = None;
    let mut multisets: BTreeSet<Multiset> = BTreeSet::new();
    for atom in e.terms().iter().flat_map(|t| t.kernel.atoms()) {
        let (u, vars): (&Name, &[Name]) = match atom {
            KernelAtom::Unknown(u) => (u, &[]),
            KernelAtom::Deriv { unknown, vars } => (unknown, vars),
            KernelAtom::Apply { .. } => return None,
        };
        if unknown.is_some_and(|seen| seen != u) {
            return None;
        }
        unknown = Some(u);
        let mut ms = Multiset::new();
        for v in vars {
            *ms.entry(v.clone()).or_default() += 1;
        }
        multisets.insert(ms);
    }
    let unknown = unknown?;

    // Variables whose count is not the same across all multisets.
    let all_vars: BTreeSet<&Name> = multisets.iter().flat_map(|m| m.keys()).collect();
    let varying: Vec<&Name> = all_vars
        .iter()
        .copied()
        .filter(|v| {
            let mut counts = multisets.iter().map(|m| m.get(*v).copied().unwrap_or(0));
            let first = counts.next();
            counts.any(|c| Some(c) != first)
        })
        .collect();
    let variable = match varying.as_slice() {
        [] => *all_vars.iter().next()?,
        [v] => *v,
        _ => return None,
    };

    let any = multisets.iter().next()?;
    let base = any
        .iter()
        .filter(|(v, _)| *v != variable)
        .flat_map(|(v, &c)| std::iter::repeat_n(v.to_string(), c as usize))
        .collect();
    Some(OdeForm {
        unknown: unknown.to_string(),
        base,
        variable: variable.to_string(),
    })
}

pub fn ode_findings<'a>(equations: impl IntoIterator<Item = (usize, &'a Expression)>) -> Vec<OdeFinding> {
    equations
        .into_iter()
        .filter_map(|(equation, e)| detect_ode(e).map(|form| OdeFinding { equation, form }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, VariableTable};

    fn vars() -> VariableTable {
        VariableTable::new(&["x", "y", "r"], &["f", "g"], &["b"]).unwrap()
    }

    fn ode(src: &str) -> Option<OdeForm> {
        detect_ode(&parse_expression(src, &vars()).unwrap())
    }

    fn form(unknown: &str, base: &[&str], variable: &str) -> Option<OdeForm> {
        Some(OdeForm {
            unknown: unknown.into(),
            base: base.iter().map(|s| s.to_string()).collect(),
            variable: variable.into(),
        })
    }

    #[test]
    fn first_order_in_r() {
        assert_eq!(ode("r*d(f,r) + 2*f"), form("f", &[], "r"));
    }

    #[test]
    fn mixed_base() {
        assert_eq!(ode("d(f,y) + x*d(f,x,y) + d(f,x,x,y)"), form("f", &["y"], "x"));
    }

    #[test]
    fn single_derivative() {
        assert_eq!(ode("d(f,x,x)"), form("f", &[], "x"));
    }

    #[test]
    fn rejections() {
        assert_eq!(ode("d(f,x) + g"), None);
        assert_eq!(ode("d(f,x) + d(f,y)"), None);
        assert_eq!(ode("x*f + 1"), None);
        assert_eq!(ode("sin(d(f,x)) + d(f,x)"), None);
        assert_eq!(ode("b*x"), None);
    }

    #[test]
    fn scaling_invariance() {
        let v = vars();
        let e = parse_expression("r*d(f,r) + 2*f", &v).unwrap();
        let r2 = parse_expression("r^2", &v).unwrap();
        assert_eq!(detect_ode(&e.mul(&r2)), detect_ode(&e));
    }

    #[test]
    fn occupancy() {
        let v = vars();
        let e = parse_expression("2*x*f + 6*y*f + 4*x*g + 5*x", &v).unwrap();
        let rows = occupancy_table([(0, &e)]);
        assert_eq!(rows[0].terms, 4);
        assert_eq!(rows[0].unknowns, ["f", "g"]);
        let p = parse_expression("b + x", &v).unwrap();
        assert!(occupancy_table([(3, &p)])[0].unknowns.is_empty());
        assert!(occupancy_table(std::iter::empty()).is_empty());
    }
}
