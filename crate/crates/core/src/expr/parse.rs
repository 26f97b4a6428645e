use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::atom::{KernelAtom, Name, ParamAtom};
use super::expression::{Coeff, Expression};
use super::rules::{apply_rules, find_rule_cycle, RewriteRule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undeclared atom `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `d` applied to `{name}`, which is not a declared unknown")]
    DerivativeOfNonUnknown { line: usize, col: usize, name: String },
    #[error("{line}:{col}: differentiation variable `{name}` is not a declared independent")]
    DerivativeVariable { line: usize, col: usize, name: String },
    #[error("line {line}: rule for `{atom}` mentions `{atom}` on its right-hand side")]
    SelfReferentialRule { line: usize, atom: String },
    #[error("line {line}: rewrite rules form a cycle")]
    RuleCycle { line: usize },
    #[error("line {line}: {msg}")]
    Declaration { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomClass {
    Independent,
    Unknown,
    Parameter,
}

/// The three disjoint name sets of a system, each kept in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VariableTable {
    independents: Vec<Name>,
    unknowns: Vec<Name>,
    parameters: Vec<Name>,
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "d"
}

impl VariableTable {
    pub fn new(independents: &[&str], unknowns: &[&str], parameters: &[&str]) -> Result<Self, ParseError> {
        let mut t = VariableTable::default();
        for (names, class) in [
            (independents, AtomClass::Independent),
            (unknowns, AtomClass::Unknown),
            (parameters, AtomClass::Parameter),
        ] {
            for n in names {
                t.declare(n, class, 0)?;
            }
        }
        Ok(t)
    }

    fn declare(&mut self, name: &str, class: AtomClass, line: usize) -> Result<(), ParseError> {
        if !valid_identifier(name) {
            return Err(ParseError::Declaration {
                line,
                msg: format!("`{name}` is not a valid name"),
            });
        }
        if self.classify(name).is_some() {
            return Err(ParseError::Declaration {
                line,
                msg: format!("`{name}` is declared more than once"),
            });
        }
        let list = match class {
            AtomClass::Independent => &mut self.independents,
            AtomClass::Unknown => &mut self.unknowns,
            AtomClass::Parameter => &mut self.parameters,
        };
        list.push(name.into());
        Ok(())
    }

    pub fn classify(&self, name: &str) -> Option<AtomClass> {
        if self.independents.iter().any(|n| &**n == name) {
            Some(AtomClass::Independent)
        } else if self.unknowns.iter().any(|n| &**n == name) {
            Some(AtomClass::Unknown)
        } else if self.parameters.iter().any(|n| &**n == name) {
            Some(AtomClass::Parameter)
        } else {
            None
        }
    }

    pub fn independents(&self) -> &[Name] {
        &self.independents
    }

    pub fn unknowns(&self) -> &[Name] {
        &self.unknowns
    }

    pub fn parameters(&self) -> &[Name] {
        &self.parameters
    }
}

/// A parsed equation file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct System {
    pub vars: VariableTable,
    pub equations: Vec<Expression>,
    pub rules: Vec<RewriteRule>,
}

impl System {
    pub fn total_terms(&self) -> usize {
        self.equations.iter().map(Expression::term_count).sum()
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (kw, names) in [
            ("indep", &self.vars.independents),
            ("unknown", &self.vars.unknowns),
            ("param", &self.vars.parameters),
        ] {
            if !names.is_empty() {
                writeln!(f, "{} {}", kw, names.join(" "))?;
            }
        }
        for r in &self.rules {
            writeln!(f, "rule {}", r)?;
        }
        for e in &self.equations {
            writeln!(f, "eq {}", e)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
}

fn lex(src: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            out.push((Tok::Int(digits.parse().expect("digits")), col));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '/' => Tok::Slash,
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((tok, col));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    vars: &'a VariableTable,
}

impl<'a> Parser<'a> {
    fn new(src: &str, line: usize, col0: usize, vars: &'a VariableTable) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src, line, col0)?,
            pos: 0,
            line,
            end_col: col0 + src.chars().count(),
            vars,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.syntax(format!("expected {what}"))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            return self.syntax("unexpected trailing input");
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut negate = false;
        if self.eat(&Tok::Minus) {
            negate = true;
        } else {
            self.eat(&Tok::Plus);
        }
        let first = self.product()?;
        let mut acc = if negate { first.neg() } else { first };
        loop {
            if self.eat(&Tok::Plus) {
                acc = acc.add(&self.product()?);
            } else if self.eat(&Tok::Minus) {
                acc = acc.subtract(&self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.power()?;
        while self.eat(&Tok::Star) {
            acc = acc.mul(&self.power()?);
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.primary()?;
        if self.eat(&Tok::Caret) {
            let k = match self.peek() {
                Some(Tok::Int(n)) => match n.to_u32() {
                    Some(k) => k,
                    None => return self.syntax("exponent too large"),
                },
                _ => return self.syntax("expected a nonnegative integer exponent"),
            };
            self.pos += 1;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expression, ParseError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                if self.eat(&Tok::Slash) {
                    let d = match self.peek() {
                        Some(Tok::Int(d)) => d.clone(),
                        _ => return self.syntax("expected an integer denominator"),
                    };
                    if d.is_zero() {
                        return self.syntax("zero denominator");
                    }
                    self.pos += 1;
                    return Ok(Expression::constant(Coeff::new(n, d)));
                }
                Ok(Expression::constant(Coeff::from_integer(n)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    if name == "d" {
                        return self.derivative();
                    }
                    return self.application(name, col);
                }
                match self.vars.classify(&name) {
                    Some(AtomClass::Independent) => Ok(Expression::from_param_atom(ParamAtom::Indep(name.into()))),
                    Some(AtomClass::Parameter) => Ok(Expression::from_param_atom(ParamAtom::Param(name.into()))),
                    Some(AtomClass::Unknown) => Ok(Expression::from_kernel_atom(KernelAtom::Unknown(name.into()))),
                    None => Err(ParseError::Undeclared {
                        line: self.line,
                        col,
                        name,
                    }),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(_) => self.syntax("expected a number, atom or `(`"),
            None => self.syntax("unexpected end of expression"),
        }
    }

    fn ident(&mut self) -> Result<(String, usize), ParseError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Ident(n)) => {
                self.pos += 1;
                Ok((n, col))
            }
            _ => self.syntax("expected a name"),
        }
    }

    fn derivative(&mut self) -> Result<Expression, ParseError> {
        let (unknown, ucol) = self.ident()?;
        if self.vars.classify(&unknown) != Some(AtomClass::Unknown) {
            return Err(ParseError::DerivativeOfNonUnknown {
                line: self.line,
                col: ucol,
                name: unknown,
            });
        }
        let mut vars: Vec<Name> = Vec::new();
        while self.eat(&Tok::Comma) {
            let (v, vcol) = self.ident()?;
            if self.vars.classify(&v) != Some(AtomClass::Independent) {
                return Err(ParseError::DerivativeVariable {
                    line: self.line,
                    col: vcol,
                    name: v,
                });
            }
            vars.push(v.into());
        }
        if vars.is_empty() {
            return self.syntax("derivative needs at least one differentiation variable");
        }
        self.expect(&Tok::RParen, "`)`")?;
        vars.sort();
        Ok(Expression::from_kernel_atom(KernelAtom::Deriv {
            unknown: unknown.into(),
            vars,
        }))
    }

    fn application(&mut self, func: String, col: usize) -> Result<Expression, ParseError> {
        let mut args = vec![self.expr()?];
        while self.eat(&Tok::Comma) {
            args.push(self.expr()?);
        }
        self.expect(&Tok::RParen, "`)`")?;

        let plain_indeps: Option<Vec<Name>> = args
            .iter()
            .map(|a| match a.terms() {
                [t] if t.coeff.is_one() && t.kernel.is_one() => match t.param.factors() {
                    [(ParamAtom::Indep(n), 1)] => Some(n.clone()),
                    _ => None,
                },
                _ => None,
            })
            .collect();
        if let Some(args) = plain_indeps {
            return Ok(Expression::from_param_atom(ParamAtom::Apply {
                func: func.into(),
                args,
            }));
        }

        let unknowns: BTreeSet<Name> = args
            .iter()
            .flat_map(|a| a.terms().iter())
            .flat_map(|t| t.kernel.atoms().flat_map(KernelAtom::unknowns).collect::<Vec<_>>())
            .collect();
        if unknowns.is_empty() {
            return Err(ParseError::Syntax {
                line: self.line,
                col,
                msg: format!("arguments of `{func}` must be independent variables or involve an unknown"),
            });
        }
        let printed: Vec<String> = args.iter().map(|a| a.to_string()).collect();
        Ok(Expression::from_kernel_atom(KernelAtom::Apply {
            func: func.into(),
            args: printed.join(",").into(),
            unknowns: unknowns.into_iter().collect(),
        }))
    }
}

/// Parses a single expression against `vars` (reported as line 1).
pub fn parse_expression(src: &str, vars: &VariableTable) -> Result<Expression, ParseError> {
    parse_expression_at(src, vars, 1, 1)
}

fn parse_expression_at(src: &str, vars: &VariableTable, line: usize, col0: usize) -> Result<Expression, ParseError> {
    let mut p = Parser::new(src, line, col0, vars)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

fn split_keyword(line: &str) -> (&str, &str, usize) {
    let trimmed = line.trim_start();
    let lead = line.len() - trimmed.len();
    match trimmed.find(char::is_whitespace) {
        Some(i) => (&trimmed[..i], &trimmed[i..], lead + i),
        None => (trimmed, "", lead + trimmed.len()),
    }
}

fn parse_rule(rest: &str, offset: usize, line: usize, vars: &VariableTable) -> Result<RewriteRule, ParseError> {
    let Some(eq) = rest.find('=') else {
        return Err(ParseError::Syntax {
            line,
            col: offset + rest.chars().count() + 1,
            msg: "expected `=` in rule".into(),
        });
    };
    let lhs_src = &rest[..eq];
    let rhs_src = &rest[eq + 1..];
    let lhs_col = offset + 1;
    let rhs_col = offset + rest[..=eq].chars().count() + 1;

    let lhs = parse_expression_at(lhs_src, vars, line, lhs_col)?;
    let (atom, exponent) = match lhs.terms() {
        [t] if t.coeff.is_one() && t.kernel.is_one() => match t.param.factors() {
            [(a, e)] => (a.clone(), *e),
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    col: lhs_col,
                    msg: "rule left-hand side must be a single parametric atom power".into(),
                })
            }
        },
        _ => {
            return Err(ParseError::Syntax {
                line,
                col: lhs_col,
                msg: "rule left-hand side must be a single parametric atom power".into(),
            })
        }
    };
    let rhs = parse_expression_at(rhs_src, vars, line, rhs_col)?;
    if !rhs.is_parametric() {
        return Err(ParseError::Syntax {
            line,
            col: rhs_col,
            msg: "rule right-hand side must not involve unknowns".into(),
        });
    }
    let rule = RewriteRule { atom, exponent, rhs };
    if rule.mentions_own_atom() {
        return Err(ParseError::SelfReferentialRule {
            line,
            atom: rule.atom.to_string(),
        });
    }
    Ok(rule)
}

/// Parses an equation file. Every equation comes back normalized with the
/// file's rewrite rules applied to a fixpoint.
pub fn parse_system(text: &str) -> Result<System, ParseError> {
    let mut vars = VariableTable::default();
    for (idx, line) in text.lines().enumerate() {
        let (kw, rest, _) = split_keyword(line);
        let class = match kw {
            "indep" => AtomClass::Independent,
            "unknown" => AtomClass::Unknown,
            "param" => AtomClass::Parameter,
            _ => continue,
        };
        for name in rest.split_whitespace() {
            vars.declare(name, class, idx + 1)?;
        }
    }

    let mut rules = Vec::new();
    let mut rule_lines = Vec::new();
    let mut raw_eqs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let (kw, rest, offset) = split_keyword(line);
        match kw {
            "" | "indep" | "unknown" | "param" => {}
            k if k.starts_with('#') => {}
            "rule" => {
                rules.push(parse_rule(rest, offset, lineno, &vars)?);
                rule_lines.push(lineno);
            }
            "eq" => raw_eqs.push(parse_expression_at(rest, &vars, lineno, offset + 1)?),
            other => {
                return Err(ParseError::Syntax {
                    line: lineno,
                    col: line.len() - line.trim_start().len() + 1,
                    msg: format!("unknown directive `{other}`"),
                })
            }
        }
    }
    if let Some(i) = find_rule_cycle(&rules) {
        return Err(ParseError::RuleCycle { line: rule_lines[i] });
    }
    let equations = raw_eqs.iter().map(|e| apply_rules(e, &rules)).collect();
    Ok(System { vars, equations, rules })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_equation() {
        let sys = parse_system("indep x y\nunknown f g\neq 2*x*f+6*y*f+4*x*g+5*x\n").unwrap();
        assert_eq!(sys.equations.len(), 1);
        let e = &sys.equations[0];
        assert_eq!(e.term_count(), 4);
        let kernels: Vec<String> = e.kernels().iter().map(|k| k.to_string()).collect();
        assert_eq!(kernels, ["1", "f", "g"]);
    }

    #[test]
    fn zero_equation() {
        let sys = parse_system("eq 0").unwrap();
        assert!(sys.equations[0].is_zero());
    }

    #[test]
    fn like_terms() {
        let sys = parse_system("indep x\nunknown f\neq x*f + x*f").unwrap();
        assert_eq!(sys.equations[0].to_string(), "2*x*f");
    }

    #[test]
    fn rule_applied_at_parse() {
        let sys = parse_system("indep h\nunknown k\nrule sin(h)^2 = 1 - cos(h)^2\neq sin(h)^2*k + cos(h)^2*k").unwrap();
        assert_eq!(sys.equations[0].to_string(), "k");
    }

    #[test]
    fn derivative_and_opaque_kernel() {
        let vars = VariableTable::new(&["x", "y"], &["f", "g"], &[]).unwrap();
        let e = parse_expression("3*cos(x)*f*d(g,x) + sin(d(g,y))", &vars).unwrap();
        assert_eq!(e.to_string(), "sin(d(g,y)) + 3*cos(x)*f*d(g,x)");
        assert_eq!(parse_expression(&e.to_string(), &vars).unwrap(), e);
    }

    #[test]
    fn declarations_after_use_are_fine() {
        let sys = parse_system("eq x*f\nindep x\nunknown f").unwrap();
        assert_eq!(sys.total_terms(), 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_system("indep x\neq x + z"),
            Err(ParseError::Undeclared { line: 2, col: 8, .. })
        ));
        assert!(matches!(
            parse_system("indep x\neq d(x,x)"),
            Err(ParseError::DerivativeOfNonUnknown { line: 2, .. })
        ));
        assert!(matches!(
            parse_system("indep x\nunknown f\neq d(f)"),
            Err(ParseError::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            parse_system("indep h\nrule sin(h)^2 = 1 - sin(h)^2"),
            Err(ParseError::SelfReferentialRule { line: 2, .. })
        ));
        assert!(matches!(
            parse_system("indep h\nrule sin(h)^2 = 1 - cos(h)^2\nrule cos(h)^2 = 1 - sin(h)^2"),
            Err(ParseError::RuleCycle { .. })
        ));
        assert!(matches!(
            parse_system("indep x\neq 2 x"),
            Err(ParseError::Syntax { line: 2, col: 6, .. })
        ));
        assert!(matches!(
            parse_system("indep x\nunknown x"),
            Err(ParseError::Declaration { line: 2, .. })
        ));
        assert!(matches!(
            parse_system("indep x\neq x/2"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_system("frob x"),
            Err(ParseError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn system_round_trip() {
        let text = "indep x y\nunknown f g\nparam b\nrule cos(x)^2 = 1 - sin(x)^2\neq 3*cos(x)^3*b*f - 1/2*y + d(g,y,x)\neq 0\n";
        let sys = parse_system(text).unwrap();
        let printed = sys.to_string();
        assert_eq!(parse_system(&printed).unwrap(), sys);
        assert_eq!(
            sys.equations[0].to_string(),
            "-1/2*y + 3*b*cos(x)*f - 3*b*cos(x)*sin(x)^2*f + d(g,x,y)"
        );
    }
}
