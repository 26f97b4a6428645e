use std::fmt;
use std::sync::Arc;

/// Interned-ish symbol name. Cloning is a reference-count bump.
pub type Name = Arc<str>;

/// A factor that may appear in multipliers and quotients.
///
/// Variant order is the canonical category order: independents, then
/// parameters, then opaque applications of independents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamAtom {
    Indep(Name),
    Param(Name),
    /// `func(x, y, ...)` where every argument is an independent variable.
    Apply {
        func: Name,
        args: Vec<Name>,
    },
}

/// A factor carrying an unknown. Products of these form the kernels `v_j`.
///
/// Derivatives are opaque symbols: `d(f,x,x)` and `d(f,x)` are unrelated
/// atoms as far as the algebra is concerned.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelAtom {
    Unknown(Name),
    /// `vars` is the sorted, nonempty multiset of differentiation variables.
    Deriv {
        unknown: Name,
        vars: Vec<Name>,
    },
    /// `func(<args>)` with at least one argument involving an unknown, keyed by
    /// the canonical print of its arguments.
    Apply {
        func: Name,
        args: Name,
        unknowns: Vec<Name>,
    },
}

impl ParamAtom {
    pub fn indep(name: &str) -> Self {
        ParamAtom::Indep(name.into())
    }

    pub fn param(name: &str) -> Self {
        ParamAtom::Param(name.into())
    }
}

impl KernelAtom {
    pub fn unknown(name: &str) -> Self {
        KernelAtom::Unknown(name.into())
    }

    /// Derivative of `unknown`; `vars` is sorted here. Panics on an empty
    /// variable list, which has no meaning as a derivative.
    pub fn deriv(unknown: &str, vars: &[&str]) -> Self {
        assert!(!vars.is_empty(), "derivative needs at least one variable");
        let mut vars: Vec<Name> = vars.iter().map(|v| Name::from(*v)).collect();
        vars.sort();
        KernelAtom::Deriv {
            unknown: unknown.into(),
            vars,
        }
    }

    /// Unknown functions this atom depends on.
    pub fn unknowns(&self) -> Vec<Name> {
        match self {
            KernelAtom::Unknown(u) => vec![u.clone()],
            KernelAtom::Deriv { unknown, .. } => vec![unknown.clone()],
            KernelAtom::Apply { unknowns, .. } => unknowns.clone(),
        }
    }
}

impl fmt::Display for ParamAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamAtom::Indep(n) | ParamAtom::Param(n) => f.write_str(n),
            ParamAtom::Apply { func, args } => write!(f, "{}({})", func, args.join(",")),
        }
    }
}

impl fmt::Display for KernelAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelAtom::Unknown(n) => f.write_str(n),
            KernelAtom::Deriv { unknown, vars } => write!(f, "d({},{})", unknown, vars.join(",")),
            KernelAtom::Apply { func, args, .. } => write!(f, "{}({})", func, args),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_order() {
        let atoms = [
            ParamAtom::indep("z"),
            ParamAtom::param("a"),
            ParamAtom::Apply {
                func: "cos".into(),
                args: vec!["a".into()],
            },
        ];
        assert!(atoms.windows(2).all(|w| w[0] < w[1]));

        let k = [
            KernelAtom::unknown("z"),
            KernelAtom::deriv("a", &["x"]),
            KernelAtom::deriv("a", &["x", "x"]),
            KernelAtom::Apply {
                func: "sin".into(),
                args: "d(g,y)".into(),
                unknowns: vec!["g".into()],
            },
        ];
        assert!(k.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn deriv_sorts_vars() {
        assert_eq!(KernelAtom::deriv("f", &["y", "x"]).to_string(), "d(f,x,y)");
    }
}
