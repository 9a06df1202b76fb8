//! Formulas over graph variables with the inclusion predicate `P` and the
//! overlap predicate `Q`.
//!
//! Text syntax, loosest binding first:
//!
//! ```text
//! forall X, Y . body      exists X . body
//! a -> b                  (right associative)
//! a | b
//! a & b
//! !a
//! P(X)  P(X,~G)  Q(X)  Q(X,~G)  X  true  false  (a)
//! ```
//!
//! A bare variable `X` abbreviates `P(X)`; `~G` is the complement of the host.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    /// Total inclusion.
    P,
    /// Overlap on at least one edge.
    Q,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: Pred,
    pub var: String,
    /// Evaluate against the complement of the host.
    pub complement: bool,
}

impl Atom {
    pub fn p(var: impl Into<String>) -> Atom {
        Atom {
            pred: Pred::P,
            var: var.into(),
            complement: false,
        }
    }

    pub fn new(pred: Pred, var: impl Into<String>, complement: bool) -> Atom {
        Atom {
            pred,
            var: var.into(),
            complement,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn atom(var: impl Into<String>) -> Formula {
        Formula::Atom(Atom::p(var))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists(var.into(), Box::new(body))
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall(var.into(), Box::new(body))
    }

    /// Variables bound by a quantifier, in order of appearance.
    pub fn bound_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |f| {
            if let Formula::Exists(v, _) | Formula::Forall(v, _) = f {
                out.push(v.clone());
            }
        });
        out
    }

    /// Variables used in atoms.
    pub fn atom_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Atom(a) = f {
                out.insert(a.var.clone());
            }
        });
        out
    }

    /// Atom variables not bound by an enclosing quantifier.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Formula::True | Formula::False => {}
                Formula::Atom(a) => {
                    if !bound.contains(&a.var) {
                        out.insert(a.var.clone());
                    }
                }
                Formula::Not(g) => go(g, bound, out),
                Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| go(g, bound, out)),
                Formula::Implies(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::Exists(v, g) | Formula::Forall(v, g) => {
                    bound.push(v.clone());
                    go(g, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Pre-order traversal.
    pub fn walk(&self, visit: &mut dyn FnMut(&Formula)) {
        visit(self);
        match self {
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.walk(visit),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.walk(visit)),
            Formula::Implies(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            Formula::True | Formula::False | Formula::Atom(_) => {}
        }
    }

    /// Rename variables (bound and used) through `f`.
    pub fn rename_vars(&self, f: &dyn Fn(&str) -> Option<String>) -> Formula {
        let r = |v: &String| f(v).unwrap_or_else(|| v.clone());
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::Atom(Atom {
                var: r(&a.var),
                ..a.clone()
            }),
            Formula::Not(g) => Formula::not(g.rename_vars(f)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.rename_vars(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.rename_vars(f)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.rename_vars(f), b.rename_vars(f)),
            Formula::Exists(v, g) => Formula::exists(r(v), g.rename_vars(f)),
            Formula::Forall(v, g) => Formula::forall(r(v), g.rename_vars(f)),
        }
    }

    /// Negation normal form without implications. Negations end up directly
    /// on atoms; `!Q` atoms are kept as written.
    pub fn nnf(&self) -> Formula {
        self.nnf_with(false)
    }

    fn nnf_with(&self, neg: bool) -> Formula {
        match (self, neg) {
            (Formula::True, false) | (Formula::False, true) => Formula::True,
            (Formula::True, true) | (Formula::False, false) => Formula::False,
            (Formula::Atom(_), false) => self.clone(),
            (Formula::Atom(_), true) => Formula::not(self.clone()),
            (Formula::Not(g), _) => g.nnf_with(!neg),
            (Formula::And(gs), false) => {
                Formula::And(gs.iter().map(|g| g.nnf_with(false)).collect())
            }
            (Formula::And(gs), true) => Formula::Or(gs.iter().map(|g| g.nnf_with(true)).collect()),
            (Formula::Or(gs), false) => Formula::Or(gs.iter().map(|g| g.nnf_with(false)).collect()),
            (Formula::Or(gs), true) => Formula::And(gs.iter().map(|g| g.nnf_with(true)).collect()),
            (Formula::Implies(a, b), false) => {
                Formula::Or(vec![a.nnf_with(true), b.nnf_with(false)])
            }
            (Formula::Implies(a, b), true) => {
                Formula::And(vec![a.nnf_with(false), b.nnf_with(true)])
            }
            (Formula::Exists(v, g), false) => Formula::exists(v.clone(), g.nnf_with(false)),
            (Formula::Exists(v, g), true) => Formula::forall(v.clone(), g.nnf_with(true)),
            (Formula::Forall(v, g), false) => Formula::forall(v.clone(), g.nnf_with(false)),
            (Formula::Forall(v, g), true) => Formula::exists(v.clone(), g.nnf_with(true)),
        }
    }

    /// Fold constants and flatten nested conjunctions and disjunctions.
    /// `forall X . true` and `exists X . false` fold; `exists X . true` is
    /// kept since it still demands a placement of `X`.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::Not(g) => match g.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Not(h) => *h,
                h => Formula::not(h),
            },
            Formula::And(gs) => {
                let mut out = Vec::new();
                for g in gs {
                    match g.simplify() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        Formula::And(hs) => out.extend(hs),
                        h => out.push(h),
                    }
                }
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(gs) => {
                let mut out = Vec::new();
                for g in gs {
                    match g.simplify() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        Formula::Or(hs) => out.extend(hs),
                        h => out.push(h),
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
            Formula::Implies(a, b) => match (a.simplify(), b.simplify()) {
                (Formula::False, _) | (_, Formula::True) => Formula::True,
                (Formula::True, b) => b,
                (a, b) => Formula::implies(a, b),
            },
            Formula::Exists(v, g) => match g.simplify() {
                Formula::False => Formula::False,
                h => Formula::exists(v.clone(), h),
            },
            Formula::Forall(v, g) => match g.simplify() {
                Formula::True => Formula::True,
                h => Formula::forall(v.clone(), h),
            },
            _ => self.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Formula> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let f = p.formula()?;
        if p.pos != p.tokens.len() {
            return Err(Error::MalformedFormula(format!(
                "unexpected {:?}",
                p.tokens[p.pos]
            )));
        }
        Ok(f)
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists(..) | Formula::Forall(..) => 0,
            Formula::Implies(..) => 1,
            Formula::Or(gs) | Formula::And(gs) if gs.len() == 1 => gs[0].precedence(),
            Formula::Or(gs) | Formula::And(gs) if gs.is_empty() => 5,
            Formula::Or(_) => 2,
            Formula::And(_) => 3,
            Formula::Not(_) => 4,
            _ => 5,
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Formula> {
        Formula::parse(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Not,
    And,
    Or,
    Arrow,
    Tilde,
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let ident_char = |c: char| c.is_alphanumeric() || matches!(c, '_' | '#' | '@' | '\'');
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1
            }
            '.' => {
                out.push(Tok::Dot);
                i += 1
            }
            '!' => {
                out.push(Tok::Not);
                i += 1
            }
            '&' => {
                out.push(Tok::And);
                i += 1
            }
            '|' => {
                out.push(Tok::Or);
                i += 1
            }
            '~' => {
                out.push(Tok::Tilde);
                i += 1
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Tok::Arrow);
                i += 2
            }
            c if ident_char(c) => {
                let start = i;
                // dots inside identifiers are allowed between identifier characters
                while i < chars.len()
                    && (ident_char(chars[i])
                        || (chars[i] == '.'
                            && i > start
                            && chars.get(i + 1).is_some_and(|c| ident_char(*c))))
                {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(Error::MalformedFormula(format!(
                    "unexpected character {other:?}"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(Error::MalformedFormula(format!(
                "expected {t:?} at token {}",
                self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.tokens.get(self.pos) {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            other => Err(Error::MalformedFormula(format!(
                "expected a name, found {other:?}"
            ))),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        if let Some(Tok::Ident(kw)) = self.peek() {
            if kw == "forall" || kw == "exists" {
                let universal = kw == "forall";
                self.pos += 1;
                let mut vars = vec![self.ident()?];
                while self.eat(&Tok::Comma) {
                    vars.push(self.ident()?);
                }
                self.expect(&Tok::Dot)?;
                let mut body = self.formula()?;
                for v in vars.into_iter().rev() {
                    body = if universal {
                        Formula::forall(v, body)
                    } else {
                        Formula::exists(v, body)
                    };
                }
                return Ok(body);
            }
        }
        self.implication()
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula_or_implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn formula_or_implication(&mut self) -> Result<Formula> {
        self.formula()
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(&Tok::Or) {
            parts.push(self.conjunction_or_quantifier()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::And) {
            parts.push(self.unary_or_quantifier()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        })
    }

    fn conjunction_or_quantifier(&mut self) -> Result<Formula> {
        if self.at_quantifier() {
            return self.formula();
        }
        self.conjunction()
    }

    fn unary_or_quantifier(&mut self) -> Result<Formula> {
        if self.at_quantifier() {
            return self.formula();
        }
        self.unary()
    }

    fn at_quantifier(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(k)) if k == "forall" || k == "exists")
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat(&Tok::Not) {
            if self.at_quantifier() {
                return Ok(Formula::not(self.formula()?));
            }
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(&Tok::RParen)?;
            return Ok(f);
        }
        if self.at_quantifier() {
            return self.formula();
        }
        let name = self.ident()?;
        match name.as_str() {
            "true" => return Ok(Formula::True),
            "false" => return Ok(Formula::False),
            "P" | "Q" if self.peek() == Some(&Tok::LParen) => {
                self.pos += 1;
                let var = self.ident()?;
                let mut complement = false;
                if self.eat(&Tok::Comma) {
                    complement = self.eat(&Tok::Tilde);
                    let host = self.ident()?;
                    if host != "G" {
                        return Err(Error::MalformedFormula(format!(
                            "second argument must be G or ~G, found {host}"
                        )));
                    }
                }
                self.expect(&Tok::RParen)?;
                let pred = if name == "P" { Pred::P } else { Pred::Q };
                return Ok(Formula::Atom(Atom::new(pred, var, complement)));
            }
            _ => {}
        }
        if name == "forall" || name == "exists" {
            return Err(Error::MalformedFormula(format!("misplaced {name}")));
        }
        Ok(Formula::atom(name))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.pred, self.complement) {
            (Pred::P, false) => write!(f, "{}", self.var),
            (Pred::P, true) => write!(f, "P({},~G)", self.var),
            (Pred::Q, false) => write!(f, "Q({})", self.var),
            (Pred::Q, true) => write!(f, "Q({},~G)", self.var),
        }
    }
}

fn is_keyword(v: &str) -> bool {
    matches!(v, "true" | "false" | "forall" | "exists" | "P" | "Q")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // children of lower or equal precedence are parenthesized, except the
        // right operand of an implication and the bodies of quantifiers
        let child = |f: &mut fmt::Formatter<'_>, g: &Formula, min: u8| -> fmt::Result {
            if g.precedence() < min {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        };
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) if a.pred == Pred::P && !a.complement && is_keyword(&a.var) => {
                write!(f, "P({})", a.var)
            }
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => {
                write!(f, "!")?;
                child(f, g, 4)
            }
            // degenerate connectives print as their neutral value or sole member
            Formula::And(gs) if gs.is_empty() => write!(f, "true"),
            Formula::Or(gs) if gs.is_empty() => write!(f, "false"),
            Formula::And(gs) | Formula::Or(gs) if gs.len() == 1 => write!(f, "{}", gs[0]),
            Formula::And(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    child(f, g, 4)?;
                }
                Ok(())
            }
            Formula::Or(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    child(f, g, 3)?;
                }
                Ok(())
            }
            Formula::Implies(a, b) => {
                child(f, a, 2)?;
                write!(f, " -> ")?;
                child(f, b, 1)
            }
            Formula::Exists(..) | Formula::Forall(..) => {
                let universal = matches!(self, Formula::Forall(..));
                let mut vars = Vec::new();
                let mut body = self;
                loop {
                    match (body, universal) {
                        (Formula::Forall(v, g), true) | (Formula::Exists(v, g), false) => {
                            vars.push(v.as_str());
                            body = g;
                        }
                        _ => break,
                    }
                }
                let kw = if universal { "forall" } else { "exists" };
                write!(f, "{kw} {} . {body}", vars.join(", "))
            }
        }
    }
}
