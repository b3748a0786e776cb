//! Exact multivariate polynomial calculus and polynomial vector fields on a
//! coordinate chart.
//!
//! Coefficients are exact rationals throughout; no floating point enters
//! this module.  Polynomials are stored as canonical term maps (exponent
//! vector → coefficient, no zero coefficients), which makes printing and
//! serialization bit-exact.

use crate::rational::{format_rat, parse_rat, Rat};
use num::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Hard ceiling on the total degree of any stored term.  Brackets and
/// products raise degree; the cap turns silent blowup into an explicit
/// error.
pub const DEFAULT_DEGREE_CAP: u32 = 8;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable sets differ: [{0}] vs [{1}]")]
    VarMismatch(String, String),
    #[error("term degree {degree} exceeds the degree cap {cap}")]
    DegreeOverflow { degree: u32, cap: u32 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("parse error at column {col}: {msg}")]
    Parse { col: usize, msg: String },
    #[error("point dimension {got}, chart dimension {want}")]
    PointDimension { got: usize, want: usize },
    #[error("not divisible: {0}")]
    NotDivisible(String),
    #[error("variable `{0}` still occurs; cannot drop it")]
    VariableInUse(String),
}

/// An ordered set of variable names shared by a family of polynomials,
/// together with the degree cap they all observe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
    degree_cap: u32,
}

impl VarSet {
    pub fn new<S: Into<String>>(names: Vec<S>) -> Arc<VarSet> {
        Self::with_cap(names, DEFAULT_DEGREE_CAP)
    }

    pub fn with_cap<S: Into<String>>(names: Vec<S>, degree_cap: u32) -> Arc<VarSet> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        assert!(!names.is_empty(), "empty variable set");
        Arc::new(VarSet { names, degree_cap })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// The same variables extended by one extra name (used to adjoin `t`).
    pub fn extended<S: Into<String>>(&self, extra: S) -> Arc<VarSet> {
        let mut names = self.names.clone();
        names.push(extra.into());
        Arc::new(VarSet {
            names,
            degree_cap: self.degree_cap,
        })
    }

    fn joined(&self) -> String {
        self.names.join(",")
    }
}

type Monomial = Vec<u32>;

/// Multivariate polynomial with exact rational coefficients in canonical
/// form: no zero coefficients, terms keyed by exponent vector.
#[derive(Debug, Clone)]
pub struct Polynomial {
    vars: Arc<VarSet>,
    terms: BTreeMap<Monomial, Rat>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.vars.names == other.vars.names && self.terms == other.terms
    }
}

impl Eq for Polynomial {}

impl Polynomial {
    pub fn zero(vars: &Arc<VarSet>) -> Polynomial {
        Polynomial {
            vars: Arc::clone(vars),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Arc<VarSet>, c: Rat) -> Polynomial {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; vars.len()], c);
        }
        p
    }

    pub fn one(vars: &Arc<VarSet>) -> Polynomial {
        Self::constant(vars, Rat::one())
    }

    pub fn var(vars: &Arc<VarSet>, index: usize) -> Polynomial {
        assert!(index < vars.len(), "variable index out of range");
        let mut mono = vec![0; vars.len()];
        mono[index] = 1;
        let mut p = Self::zero(vars);
        p.terms.insert(mono, Rat::one());
        p
    }

    /// A zero polynomial over the same variables (used by generic kernels).
    pub fn zero_like(&self) -> Polynomial {
        Self::zero(&self.vars)
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() <= 1 && self.terms.keys().all(|m| m.iter().all(|&e| e == 0))
    }

    /// Value of the constant term.
    pub fn constant_term(&self) -> Rat {
        self.terms
            .get(&vec![0; self.vars.len()])
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    /// Total degree; zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Largest exponent of one variable.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m[var]).max().unwrap_or(0)
    }

    fn check_same_vars(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.vars.names != other.vars.names {
            return Err(PolyError::VarMismatch(
                self.vars.joined(),
                other.vars.joined(),
            ));
        }
        Ok(())
    }

    fn insert_term(terms: &mut BTreeMap<Monomial, Rat>, mono: Monomial, coef: Rat) {
        if coef.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.vars.names, other.vars.names);
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            Self::insert_term(&mut terms, m.clone(), c.clone());
        }
        Polynomial {
            vars: Arc::clone(&self.vars),
            terms,
        }
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            vars: Arc::clone(&self.vars),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn add_scalar(&self, c: &Rat) -> Polynomial {
        self.add(&Polynomial::constant(&self.vars, c.clone()))
    }

    pub fn scale(&self, c: &Rat) -> Polynomial {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        Polynomial {
            vars: Arc::clone(&self.vars),
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.clone() * c.clone()))
                .collect(),
        }
    }

    fn mul_uncapped(&self, other: &Polynomial) -> Polynomial {
        let mut terms = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mono: Monomial = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                Self::insert_term(&mut terms, mono, c1.clone() * c2.clone());
            }
        }
        Polynomial {
            vars: Arc::clone(&self.vars),
            terms,
        }
    }

    fn check_cap(&self) -> Result<(), PolyError> {
        let cap = self.vars.degree_cap;
        let degree = self.degree();
        if degree > cap {
            return Err(PolyError::DegreeOverflow { degree, cap });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_same_vars(other)?;
        let out = self.mul_uncapped(other);
        out.check_cap()?;
        Ok(out)
    }

    /// Partial derivative with respect to one variable.
    pub fn derivative(&self, var: usize) -> Polynomial {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m[var];
            if e == 0 {
                continue;
            }
            let mut mono = m.clone();
            mono[var] = e - 1;
            Self::insert_term(&mut terms, mono, c.clone() * Rat::from_integer(e.into()));
        }
        Polynomial {
            vars: Arc::clone(&self.vars),
            terms,
        }
    }

    /// Exact evaluation at a rational point (all variables).
    pub fn eval(&self, point: &[Rat]) -> Result<Rat, PolyError> {
        if point.len() != self.vars.len() {
            return Err(PolyError::PointDimension {
                got: point.len(),
                want: self.vars.len(),
            });
        }
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    term *= point[i].clone();
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// f64 evaluation, for the numeric chart module.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = crate::rational::rat_to_f64(c);
            for (i, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    term *= point[i];
                }
            }
            acc += term;
        }
        acc
    }

    /// Substitutes polynomials (over a common variable set) for every
    /// variable.
    pub fn eval_poly(&self, args: &[Polynomial]) -> Result<Polynomial, PolyError> {
        assert_eq!(args.len(), self.vars.len(), "one argument per variable");
        let target = args[0].vars();
        for a in args {
            args[0].check_same_vars(a)?;
        }
        let mut acc = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(target, c.clone());
            for (i, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    term = term.mul(&args[i])?;
                }
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// Substitutes a rational for one variable; the variable stays in the
    /// variable set with exponent zero.
    pub fn subst(&self, var: usize, value: &Rat) -> Polynomial {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m[var];
            let mut coef = c.clone();
            for _ in 0..e {
                coef *= value.clone();
            }
            let mut mono = m.clone();
            mono[var] = 0;
            Self::insert_term(&mut terms, mono, coef);
        }
        Polynomial {
            vars: Arc::clone(&self.vars),
            terms,
        }
    }

    /// Coefficient of `var^k`, as a polynomial with that variable removed
    /// from the exponents (still over the same variable set).
    pub fn coeff_of(&self, var: usize, k: u32) -> Polynomial {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m[var] != k {
                continue;
            }
            let mut mono = m.clone();
            mono[var] = 0;
            Self::insert_term(&mut terms, mono, c.clone());
        }
        Polynomial {
            vars: Arc::clone(&self.vars),
            terms,
        }
    }

    /// Smallest exponent of `var` over the nonzero terms.
    pub fn min_degree_in(&self, var: usize) -> Option<u32> {
        self.terms.keys().map(|m| m[var]).min()
    }

    /// Multiplies by `var^k`.
    pub fn mul_var_pow(&self, var: usize, k: u32) -> Result<Polynomial, PolyError> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut mono = m.clone();
            mono[var] += k;
            terms.insert(mono, c.clone());
        }
        let out = Polynomial {
            vars: Arc::clone(&self.vars),
            terms,
        };
        out.check_cap()?;
        Ok(out)
    }

    /// Divides by `var^k`; every term must carry at least `var^k`.
    pub fn div_var_pow(&self, var: usize, k: u32) -> Result<Polynomial, PolyError> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m[var] < k {
                return Err(PolyError::NotDivisible(format!(
                    "term with {}^{} present, need exponent >= {}",
                    self.vars.names[var], m[var], k
                )));
            }
            let mut mono = m.clone();
            mono[var] -= k;
            terms.insert(mono, c.clone());
        }
        Ok(Polynomial {
            vars: Arc::clone(&self.vars),
            terms,
        })
    }

    /// Re-expresses this polynomial over a superset of its variables,
    /// matching variables by name.
    pub fn lift(&self, target: &Arc<VarSet>) -> Result<Polynomial, PolyError> {
        let map: Vec<usize> = self
            .vars
            .names
            .iter()
            .map(|n| {
                target
                    .index_of(n)
                    .ok_or_else(|| PolyError::UnknownVariable(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut mono = vec![0u32; target.len()];
            for (i, &e) in m.iter().enumerate() {
                mono[map[i]] += e;
            }
            Self::insert_term(&mut terms, mono, c.clone());
        }
        Ok(Polynomial {
            vars: Arc::clone(target),
            terms,
        })
    }

    /// Removes a variable that no longer occurs (e.g. `t` after
    /// substitution), producing a polynomial over the smaller set.
    pub fn drop_var(&self, var: usize, target: &Arc<VarSet>) -> Result<Polynomial, PolyError> {
        let name = &self.vars.names[var];
        if self.terms.keys().any(|m| m[var] != 0) {
            return Err(PolyError::VariableInUse(name.clone()));
        }
        debug_assert_eq!(target.len() + 1, self.vars.len());
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mono: Monomial = m
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != var)
                .map(|(_, &e)| e)
                .collect();
            terms.insert(mono, c.clone());
        }
        Ok(Polynomial {
            vars: Arc::clone(target),
            terms,
        })
    }

    /// Exact polynomial division; errors unless `divisor` divides `self`.
    pub fn div_exact(&self, divisor: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_same_vars(divisor)?;
        if divisor.is_zero() {
            return Err(PolyError::NotDivisible("division by zero".to_string()));
        }
        let (lead_m, lead_c) = divisor.terms.last_key_value().expect("nonzero divisor");
        let mut remainder = self.clone();
        let mut quotient = Polynomial::zero(&self.vars);
        while !remainder.is_zero() {
            let (rm, rc) = remainder.terms.last_key_value().expect("nonzero remainder");
            if rm.iter().zip(lead_m).any(|(a, b)| a < b) {
                return Err(PolyError::NotDivisible(format!(
                    "`{divisor}` does not divide `{self}`"
                )));
            }
            let mono: Monomial = rm.iter().zip(lead_m).map(|(a, b)| a - b).collect();
            let coef = rc.clone() / lead_c.clone();
            let mut t = Polynomial::zero(&self.vars);
            t.terms.insert(mono, coef);
            remainder = remainder.sub(&t.mul_uncapped(divisor));
            quotient = quotient.add(&t);
        }
        quotient.check_cap()?;
        Ok(quotient)
    }

    /// Parses the published polynomial grammar: `+`/`-` separated terms,
    /// each a `*`-joined product of rational constants (`p/q` or integer)
    /// and variable powers `x^k`; whitespace is ignored.
    pub fn parse(vars: &Arc<VarSet>, input: &str) -> Result<Polynomial, PolyError> {
        Parser::new(vars, input).parse()
    }

    /// Iterates terms in the canonical stored order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // Canonical printed order: descending total degree, then descending
        // exponent vector; leading term first.
        let mut terms: Vec<(&Monomial, &Rat)> = self.terms.iter().collect();
        terms.sort_by(|(ma, _), (mb, _)| {
            let da: u32 = ma.iter().sum();
            let db: u32 = mb.iter().sum();
            db.cmp(&da).then_with(|| mb.cmp(ma))
        });
        for (i, (mono, coef)) in terms.iter().enumerate() {
            let mag = coef.abs();
            if i == 0 {
                if coef.is_negative() {
                    write!(f, "-")?;
                }
            } else if coef.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let factors: Vec<String> = mono
                .iter()
                .enumerate()
                .filter(|&(_, &e)| e > 0)
                .map(|(v, &e)| {
                    if e == 1 {
                        self.vars.names[v].clone()
                    } else {
                        format!("{}^{}", self.vars.names[v], e)
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{}", format_rat(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", format_rat(&mag), factors.join("*"))?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    vars: &'a Arc<VarSet>,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(vars: &'a Arc<VarSet>, input: &'a str) -> Self {
        Parser {
            vars,
            bytes: input.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Parse {
            col: self.pos + 1,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = Polynomial::zero(self.vars);
        let mut sign = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -Rat::one()
            }
            Some(b'+') => {
                self.pos += 1;
                Rat::one()
            }
            Some(_) => Rat::one(),
            None => return self.err("empty polynomial"),
        };
        loop {
            let term = self.parse_term()?;
            acc = acc.add(&term.scale(&sign));
            match self.peek() {
                None => break,
                Some(b'+') => {
                    self.pos += 1;
                    sign = Rat::one();
                }
                Some(b'-') => {
                    self.pos += 1;
                    sign = -Rat::one();
                }
                Some(c) => return self.err(format!("expected `+` or `-`, found `{}`", c as char)),
            }
        }
        acc.check_cap()?;
        Ok(acc)
    }

    fn parse_term(&mut self) -> Result<Polynomial, PolyError> {
        let mut coef = Rat::one();
        let mut mono = vec![0u32; self.vars.len()];
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    coef *= self.parse_rational()?;
                }
                Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                    let (var, exp) = self.parse_var_power()?;
                    mono[var] += exp;
                }
                Some(c) => return self.err(format!("expected a factor, found `{}`", c as char)),
                None => return self.err("expected a factor, found end of input"),
            }
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
        let mut p = Polynomial::zero(self.vars);
        Polynomial::insert_term(&mut p.terms, mono, coef);
        Ok(p)
    }

    fn parse_uint(&mut self) -> Result<String, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .to_string())
    }

    fn parse_rational(&mut self) -> Result<Rat, PolyError> {
        let numer = self.parse_uint()?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let denom = self.parse_uint()?;
            parse_rat(&format!("{numer}/{denom}")).or_else(|e| self.err(e))
        } else {
            parse_rat(&numer).or_else(|e| self.err(e))
        }
    }

    fn parse_var_power(&mut self) -> Result<(usize, u32), PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii identifier");
        let var = match self.vars.index_of(name) {
            Some(v) => v,
            None => {
                self.pos = start;
                return self.err(format!(
                    "unknown variable `{name}` (chart variables: {})",
                    self.vars.joined()
                ));
            }
        };
        let exp = if self.peek() == Some(b'^') {
            self.pos += 1;
            let digits = self.parse_uint()?;
            digits
                .parse::<u32>()
                .map_err(|_| PolyError::Parse {
                    col: self.pos,
                    msg: format!("exponent `{digits}` out of range"),
                })?
        } else {
            1
        };
        Ok((var, exp))
    }
}

/// A vector field with polynomial coefficient functions, expressed in the
/// coordinate basis: component `i` multiplies `∂/∂x_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyVectorField {
    components: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn new(components: Vec<Polynomial>) -> PolyVectorField {
        assert!(!components.is_empty(), "empty vector field");
        let vars = components[0].vars();
        assert!(
            components.iter().all(|c| c.vars().names() == vars.names()),
            "all components must share the chart's variable set"
        );
        PolyVectorField { components }
    }

    pub fn zero(vars: &Arc<VarSet>, dim: usize) -> PolyVectorField {
        PolyVectorField {
            components: vec![Polynomial::zero(vars); dim],
        }
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn coordinate(vars: &Arc<VarSet>, dim: usize, i: usize) -> PolyVectorField {
        let mut components = vec![Polynomial::zero(vars); dim];
        components[i] = Polynomial::one(vars);
        PolyVectorField { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        self.components[0].vars()
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    fn check_same_chart(&self, other: &PolyVectorField) -> Result<(), PolyError> {
        if self.vars().names() != other.vars().names() || self.dim() != other.dim() {
            return Err(PolyError::VarMismatch(
                self.vars().joined(),
                other.vars().joined(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
        self.check_same_chart(other)?;
        Ok(PolyVectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> PolyVectorField {
        PolyVectorField {
            components: self.components.iter().map(Polynomial::neg).collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> PolyVectorField {
        PolyVectorField {
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// `f · X` with a polynomial function `f`.
    pub fn scale_poly(&self, f: &Polynomial) -> Result<PolyVectorField, PolyError> {
        Ok(PolyVectorField {
            components: self
                .components
                .iter()
                .map(|p| p.mul(f))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Lie bracket of vector fields: component `i` of `[X, Y]` is
    /// `Σ_j (X^j ∂_j Y^i − Y^j ∂_j X^i)`.
    pub fn lie_bracket(&self, other: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
        self.check_same_chart(other)?;
        let n = self.dim();
        let mut components = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Polynomial::zero(self.vars());
            for j in 0..n {
                // derivatives are taken only in the first `dim` variables,
                // so a trailing parameter variable (t) is untouched
                let fwd = self.components[j].mul(&other.components[i].derivative(j))?;
                let bwd = other.components[j].mul(&self.components[i].derivative(j))?;
                acc = acc.add(&fwd).sub(&bwd);
            }
            components.push(acc);
        }
        Ok(PolyVectorField { components })
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate(&self, point: &[Rat]) -> Result<Vec<Rat>, PolyError> {
        self.components.iter().map(|p| p.eval(point)).collect()
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval_f64(point)).collect()
    }

    /// The field applied to a function: the directional derivative
    /// `Σ_j X^j ∂_j f`.
    pub fn apply(&self, f: &Polynomial) -> Result<Polynomial, PolyError> {
        if self.vars().names() != f.vars().names() {
            return Err(PolyError::VarMismatch(
                self.vars().joined(),
                f.vars().joined(),
            ));
        }
        let mut acc = Polynomial::zero(self.vars());
        for (j, comp) in self.components.iter().enumerate() {
            acc = acc.add(&comp.mul(&f.derivative(j))?);
        }
        Ok(acc)
    }

    /// Componentwise lift into a larger variable set (adjoining `t`).
    pub fn lift(&self, target: &Arc<VarSet>) -> Result<PolyVectorField, PolyError> {
        Ok(PolyVectorField {
            components: self
                .components
                .iter()
                .map(|p| p.lift(target))
                .collect::<Result<_, _>>()?,
        })
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, p)| format!("({p})·∂{}", self.vars().names()[i]))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}
