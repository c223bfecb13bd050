//! Exact coefficient arithmetic.
//!
//! Every coefficient in the engine is a [`Coef`]: a quotient of two
//! polynomials in the symbolic parameters γ and ξ with arbitrary-precision
//! rational coefficients. Quotients are not reduced by a polynomial GCD;
//! equality and zero testing go through the expanded numerator. When the
//! denominator is a single monomial (the only case the realizations
//! produce) the fraction is normalized to a Laurent-polynomial form, which
//! keeps term growth in check.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number; always stored in lowest terms with
/// a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("denominator vanishes at the given parameter values")]
    DenominatorVanishes,
    #[error("cannot parse `{0}` as a coefficient")]
    Parse(String),
}

/// Builds a rational from a small numerator and denominator.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p`, `-p` or `p/q` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ScalarError> {
    let s = s.trim();
    let bad = || ScalarError::Parse(s.to_string());
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(n).map_err(|_| bad())?;
    let d = BigInt::from_str(d).map_err(|_| bad())?;
    if d.is_zero() {
        return Err(ScalarError::DivisionByZero);
    }
    Ok(Rational::new(n, d))
}

pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// The two symbolic parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Gamma,
    Xi,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Gamma => "gamma",
            Param::Xi => "xi",
        }
    }
}

/// Exponent pair (power of γ, power of ξ).
type PExp = (u32, u32);

/// Polynomial in γ, ξ over the rationals. No zero coefficients are stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ParamPoly {
    terms: BTreeMap<PExp, Rational>,
}

impl ParamPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn monomial(c: Rational, gamma_exp: u32, xi_exp: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((gamma_exp, xi_exp), c);
        }
        Self { terms }
    }

    pub fn param(p: Param) -> Self {
        match p {
            Param::Gamma => Self::monomial(Rational::one(), 1, 0),
            Param::Xi => Self::monomial(Rational::one(), 0, 1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PExp, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value, if the polynomial has no γ or ξ dependence.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    fn single_term(&self) -> Option<(PExp, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(e, c)| (*e, c))
        } else {
            None
        }
    }

    fn add_term(&mut self, e: PExp, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect(),
        }
    }

    fn shift(&self, by: PExp) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(e, v)| ((e.0 + by.0, e.1 + by.1), v.clone()))
                .collect(),
        }
    }

    fn unshift(&self, by: PExp) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(e, v)| ((e.0 - by.0, e.1 - by.1), v.clone()))
                .collect(),
        }
    }

    fn min_exponents(&self) -> PExp {
        self.terms
            .keys()
            .fold((u32::MAX, u32::MAX), |acc, e| (acc.0.min(e.0), acc.1.min(e.1)))
    }

    fn leading_coefficient(&self) -> Option<&Rational> {
        self.terms.values().next_back()
    }

    pub fn eval(&self, gamma: &Rational, xi: &Rational) -> Rational {
        self.terms
            .iter()
            .map(|((a, b), c)| c * pow(gamma, *a) * pow(xi, *b))
            .fold(Rational::zero(), |acc, v| acc + v)
    }

    /// Substitutes one parameter by a rational value.
    pub fn substitute(&self, p: Param, value: &Rational) -> Self {
        let mut out = Self::zero();
        for (&(a, b), c) in &self.terms {
            let (e, k) = match p {
                Param::Gamma => ((0, b), pow(value, a)),
                Param::Xi => ((a, 0), pow(value, b)),
            };
            out.add_term(e, c * k);
        }
        out
    }
}

fn pow(base: &Rational, e: u32) -> Rational {
    num_traits::pow(base.clone(), e as usize)
}

impl Add for &ParamPoly {
    type Output = ParamPoly;
    fn add(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &ParamPoly {
    type Output = ParamPoly;
    fn sub(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Mul for &ParamPoly {
    type Output = ParamPoly;
    fn mul(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                out.add_term((e1.0 + e2.0, e1.1 + e2.1), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &ParamPoly {
    type Output = ParamPoly;
    fn neg(self) -> ParamPoly {
        ParamPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
}

impl fmt::Display for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest degree first
        for (i, ((a, b), c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut factors = Vec::new();
            if !mag.is_one() || (*a == 0 && *b == 0) {
                factors.push(fmt_rational(&mag));
            }
            for (p, e) in [(Param::Gamma, *a), (Param::Xi, *b)] {
                match e {
                    0 => {}
                    1 => factors.push(p.name().to_string()),
                    _ => factors.push(format!("{}^{}", p.name(), e)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Repr {
    /// Parameter-free value; the common case when γ, ξ are instantiated.
    Rat(Rational),
    Frac { num: ParamPoly, den: ParamPoly },
}

/// Rational function in γ and ξ. See the module docs for the equality
/// semantics.
#[derive(Debug, Clone)]
pub struct Coef(Repr);

impl Coef {
    pub fn zero() -> Self {
        Coef(Repr::Rat(Rational::zero()))
    }

    pub fn one() -> Self {
        Coef(Repr::Rat(Rational::one()))
    }

    pub fn int(n: i64) -> Self {
        Coef(Repr::Rat(rat_int(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Coef(Repr::Rat(rat(n, d)))
    }

    pub fn param(p: Param) -> Self {
        Coef(Repr::Frac {
            num: ParamPoly::param(p),
            den: ParamPoly::one(),
        })
    }

    pub fn gamma() -> Self {
        Self::param(Param::Gamma)
    }

    pub fn xi() -> Self {
        Self::param(Param::Xi)
    }

    /// `num / den`; fails when `den` is the zero polynomial.
    pub fn from_polys(num: ParamPoly, den: ParamPoly) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    pub fn numerator(&self) -> ParamPoly {
        match &self.0 {
            Repr::Rat(r) => ParamPoly::constant(r.clone()),
            Repr::Frac { num, .. } => num.clone(),
        }
    }

    pub fn denominator(&self) -> ParamPoly {
        match &self.0 {
            Repr::Rat(_) => ParamPoly::one(),
            Repr::Frac { den, .. } => den.clone(),
        }
    }

    fn parts(&self) -> (ParamPoly, ParamPoly) {
        (self.numerator(), self.denominator())
    }

    fn normalized(num: ParamPoly, den: ParamPoly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let (num, den) = if let Some((e, c)) = den.single_term() {
            let inv = c.recip();
            let num = num.scale(&inv);
            let m = num.min_exponents();
            let common = (m.0.min(e.0), m.1.min(e.1));
            let num = num.unshift(common);
            let den = ParamPoly::monomial(Rational::one(), e.0 - common.0, e.1 - common.1);
            (num, den)
        } else {
            let lc = den.leading_coefficient().cloned().unwrap_or_else(Rational::one);
            let inv = lc.recip();
            (num.scale(&inv), den.scale(&inv))
        };
        if let (Some(n), Some(d)) = (num.as_constant(), den.as_constant()) {
            return Coef(Repr::Rat(n / d));
        }
        Coef(Repr::Frac { num, den })
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Rat(r) => r.is_zero(),
            Repr::Frac { num, .. } => num.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self.as_rational(), Some(r) if r.is_one())
    }

    /// The value as a plain rational when it does not depend on γ or ξ.
    pub fn as_rational(&self) -> Option<Rational> {
        match &self.0 {
            Repr::Rat(r) => Some(r.clone()),
            Repr::Frac { num, den } => {
                if let (Some(n), Some(d)) = (num.as_constant(), den.as_constant()) {
                    return Some(n / d);
                }
                // num = c * den for some rational c
                let ln = num.leading_coefficient()?;
                let ld = den.leading_coefficient()?;
                let c = ln / ld;
                if (num - &den.scale(&c)).is_zero() {
                    Some(c)
                } else {
                    None
                }
            }
        }
    }

    pub fn is_negative_rational(&self) -> bool {
        matches!(self.as_rational(), Some(r) if r.is_negative())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        match &self.0 {
            Repr::Rat(r) => Coef(Repr::Rat(r * c)),
            Repr::Frac { num, den } => Self::normalized(num.scale(c), den.clone()),
        }
    }

    pub fn checked_div(&self, rhs: &Coef) -> Result<Coef, ScalarError> {
        if rhs.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        if let (Repr::Rat(a), Repr::Rat(b)) = (&self.0, &rhs.0) {
            return Ok(Coef(Repr::Rat(a / b)));
        }
        let (n1, d1) = self.parts();
        let (n2, d2) = rhs.parts();
        Ok(Self::normalized(&n1 * &d2, &d1 * &n2))
    }

    pub fn recip(&self) -> Result<Coef, ScalarError> {
        Coef::one().checked_div(self)
    }

    /// Integer power; negative exponents invert.
    pub fn powi(&self, e: i64) -> Result<Coef, ScalarError> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut out = Coef::one();
        for _ in 0..e.unsigned_abs() {
            out = &out * &base;
        }
        Ok(out)
    }

    /// Exact evaluation at rational parameter values.
    pub fn instantiate(&self, gamma: &Rational, xi: &Rational) -> Result<Rational, ScalarError> {
        match &self.0 {
            Repr::Rat(r) => Ok(r.clone()),
            Repr::Frac { num, den } => {
                let d = den.eval(gamma, xi);
                if d.is_zero() {
                    return Err(ScalarError::DenominatorVanishes);
                }
                Ok(num.eval(gamma, xi) / d)
            }
        }
    }

    /// Substitutes a single parameter, keeping the other symbolic.
    pub fn substitute(&self, p: Param, value: &Rational) -> Result<Coef, ScalarError> {
        match &self.0 {
            Repr::Rat(_) => Ok(self.clone()),
            Repr::Frac { num, den } => {
                let den = den.substitute(p, value);
                if den.is_zero() {
                    return Err(ScalarError::DenominatorVanishes);
                }
                Ok(Self::normalized(num.substitute(p, value), den))
            }
        }
    }

    /// Plain-text form; `num` or `(num)/(den)`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl From<Rational> for Coef {
    fn from(r: Rational) -> Self {
        Coef(Repr::Rat(r))
    }
}

impl From<i64> for Coef {
    fn from(n: i64) -> Self {
        Coef::int(n)
    }
}

impl From<BigInt> for Coef {
    fn from(n: BigInt) -> Self {
        Coef(Repr::Rat(Rational::from_integer(n)))
    }
}

impl PartialEq for Coef {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Rat(a), Repr::Rat(b)) => a == b,
            _ => {
                let (n1, d1) = self.parts();
                let (n2, d2) = other.parts();
                if d1 == d2 {
                    n1 == n2
                } else {
                    (&(&n1 * &d2) - &(&n2 * &d1)).is_zero()
                }
            }
        }
    }
}

impl Eq for Coef {}

impl Add for &Coef {
    type Output = Coef;
    fn add(self, rhs: &Coef) -> Coef {
        if let (Repr::Rat(a), Repr::Rat(b)) = (&self.0, &rhs.0) {
            return Coef(Repr::Rat(a + b));
        }
        let (n1, d1) = self.parts();
        let (n2, d2) = rhs.parts();
        if d1 == d2 {
            return Coef::normalized(&n1 + &n2, d1);
        }
        if let (Some((e1, _)), Some((e2, _))) = (d1.single_term(), d2.single_term()) {
            // both normalized monic monomials: bring to the lcm
            let l = (e1.0.max(e2.0), e1.1.max(e2.1));
            let a = n1.shift((l.0 - e1.0, l.1 - e1.1));
            let b = n2.shift((l.0 - e2.0, l.1 - e2.1));
            return Coef::normalized(&a + &b, ParamPoly::monomial(Rational::one(), l.0, l.1));
        }
        Coef::normalized(&(&n1 * &d2) + &(&n2 * &d1), &d1 * &d2)
    }
}

impl Neg for &Coef {
    type Output = Coef;
    fn neg(self) -> Coef {
        match &self.0 {
            Repr::Rat(r) => Coef(Repr::Rat(-r.clone())),
            Repr::Frac { num, den } => Coef(Repr::Frac {
                num: -num,
                den: den.clone(),
            }),
        }
    }
}

impl Neg for Coef {
    type Output = Coef;
    fn neg(self) -> Coef {
        -&self
    }
}

impl Sub for &Coef {
    type Output = Coef;
    fn sub(self, rhs: &Coef) -> Coef {
        self + &(-rhs)
    }
}

impl Mul for &Coef {
    type Output = Coef;
    fn mul(self, rhs: &Coef) -> Coef {
        match (&self.0, &rhs.0) {
            (Repr::Rat(a), Repr::Rat(b)) => Coef(Repr::Rat(a * b)),
            (Repr::Rat(a), _) => rhs.scale(a),
            (_, Repr::Rat(b)) => self.scale(b),
            _ => {
                let (n1, d1) = self.parts();
                let (n2, d2) = rhs.parts();
                Coef::normalized(&n1 * &n2, &d1 * &d2)
            }
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Coef {
            type Output = Coef;
            fn $m(self, rhs: Coef) -> Coef {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Coef> for Coef {
            type Output = Coef;
            fn $m(self, rhs: &Coef) -> Coef {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

fn poly_text(p: &ParamPoly) -> String {
    let s = p.to_string();
    if p.len() > 1 {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Rat(r) => write!(f, "{}", fmt_rational(r)),
            Repr::Frac { num, den } => {
                if den.as_constant().is_some_and(|d| d.is_one()) {
                    write!(f, "{num}")
                } else {
                    write!(f, "{}/{}", poly_text(num), poly_text(den))
                }
            }
        }
    }
}

impl FromStr for Coef {
    type Err = ScalarError;

    /// Accepts the [`fmt::Display`] output: sums of products of rationals
    /// and `gamma`/`xi` powers, optionally parenthesized, optionally over
    /// a second such polynomial.
    fn from_str(s: &str) -> Result<Self, ScalarError> {
        let mut p = PolyParser::new(s);
        let (num, bare) = p.group()?;
        let den = if p.eat('/') {
            // `a + b/c` is ambiguous; a multi-term numerator needs parentheses
            if bare && num.len() > 1 {
                return Err(ScalarError::Parse(s.to_string()));
            }
            p.group()?.0
        } else {
            ParamPoly::one()
        };
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(ScalarError::Parse(s.to_string()));
        }
        Coef::from_polys(num, den)
    }
}

struct PolyParser<'a> {
    src: &'a [u8],
    pos: usize,
    text: &'a str,
}

impl<'a> PolyParser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            src: text.as_bytes(),
            pos: 0,
            text,
        }
    }

    fn err(&self) -> ScalarError {
        ScalarError::Parse(self.text.to_string())
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c as u8) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// A parenthesized or bare polynomial; the flag is true for bare.
    fn group(&mut self) -> Result<(ParamPoly, bool), ScalarError> {
        if self.eat('(') {
            let p = self.poly()?;
            if !self.eat(')') {
                return Err(self.err());
            }
            Ok((p, false))
        } else {
            Ok((self.poly()?, true))
        }
    }

    fn poly(&mut self) -> Result<ParamPoly, ScalarError> {
        let mut acc = ParamPoly::zero();
        let mut neg = self.eat('-');
        loop {
            let m = self.monomial()?;
            acc = if neg { &acc - &m } else { &acc + &m };
            if self.eat('+') {
                neg = false;
            } else if self.eat('-') {
                neg = true;
            } else {
                return Ok(acc);
            }
        }
    }

    fn monomial(&mut self) -> Result<ParamPoly, ScalarError> {
        let mut acc = ParamPoly::one();
        loop {
            let factor = self.factor()?;
            acc = &acc * &factor;
            // `*` continues the monomial; a bare `/` followed by digits is
            // part of a rational factor and was consumed by `factor`
            if !self.eat('*') {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<ParamPoly, ScalarError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        for p in [Param::Gamma, Param::Xi] {
            if rest.starts_with(p.name()) {
                self.pos += p.name().len();
                let mut e = 1u32;
                if self.eat('^') {
                    e = self.unsigned()?;
                }
                let base = ParamPoly::param(p);
                let mut out = ParamPoly::one();
                for _ in 0..e {
                    out = &out * &base;
                }
                return Ok(out);
            }
        }
        let n = self.unsigned_big()?;
        // `a/b` with digits on both sides is a rational literal
        let save = self.pos;
        if self.src.get(self.pos) == Some(&b'/')
            && self.src.get(self.pos + 1).is_some_and(|c| c.is_ascii_digit())
        {
            self.pos += 1;
            let d = self.unsigned_big()?;
            if d.is_zero() {
                return Err(ScalarError::DivisionByZero);
            }
            return Ok(ParamPoly::constant(Rational::new(n, d)));
        }
        self.pos = save;
        Ok(ParamPoly::constant(Rational::from_integer(n)))
    }

    fn unsigned_big(&mut self) -> Result<BigInt, ScalarError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err());
        }
        BigInt::from_str(&self.text[start..self.pos]).map_err(|_| self.err())
    }

    fn unsigned(&mut self) -> Result<u32, ScalarError> {
        self.unsigned_big()?.to_u32().ok_or_else(|| self.err())
    }
}

/// Factorial as a big integer.
pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Binomial coefficient C(n, k); zero outside 0 ≤ k ≤ n.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc = acc.div_floor(&BigInt::from(i + 1));
    }
    acc
}

/// Falling factorial p (p-1) ... (p-k+1) for rational p.
pub fn falling_factorial(p: &Rational, k: u32) -> Rational {
    let mut acc = Rational::one();
    let mut cur = p.clone();
    for _ in 0..k {
        acc *= &cur;
        cur -= Rational::one();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Coef {
        s.parse().unwrap()
    }

    #[test]
    fn field_examples() {
        let one_over_xi = Coef::one().checked_div(&Coef::xi()).unwrap();
        assert_eq!(&one_over_xi * &Coef::xi(), Coef::one());
        let two_over_xi = Coef::int(2).checked_div(&Coef::xi()).unwrap();
        assert_eq!(&two_over_xi + &two_over_xi, c("4/xi"));
        let two_over_gamma = Coef::int(2).checked_div(&Coef::gamma()).unwrap();
        let gamma_half = Coef::gamma().scale(&rat(1, 2));
        assert_eq!(&two_over_gamma * &gamma_half, Coef::one());
    }

    #[test]
    fn division_by_zero() {
        let z = &Coef::xi() - &Coef::xi();
        assert_eq!(Coef::one().checked_div(&z), Err(ScalarError::DivisionByZero));
    }

    #[test]
    fn zero_tests() {
        let xi_over_xi = Coef::xi().checked_div(&Coef::xi()).unwrap();
        assert!((&xi_over_xi - &Coef::one()).is_zero());
        assert!(!(&Coef::gamma() - &Coef::xi()).is_zero());
        let gx = &Coef::gamma() * &Coef::xi();
        let xg = &Coef::xi() * &Coef::gamma();
        assert!((&gx - &xg).checked_div(&Coef::xi()).unwrap().is_zero());
    }

    #[test]
    fn instantiate_examples() {
        let two_over_xi = c("2/xi");
        assert_eq!(two_over_xi.instantiate(&rat_int(1), &rat_int(1)), Ok(rat_int(2)));
        assert_eq!(
            two_over_xi.instantiate(&rat_int(1), &rat_int(0)),
            Err(ScalarError::DenominatorVanishes)
        );
        let q = Coef::xi().checked_div(&Coef::gamma().scale(&rat_int(2))).unwrap();
        assert_eq!(q.instantiate(&rat_int(1), &rat_int(1)), Ok(rat(1, 2)));
    }

    #[test]
    fn general_denominators_compare_by_cross_multiplication() {
        let a = c("1/(gamma + xi)");
        let b = c("2/(2*gamma + 2*xi)");
        assert_eq!(a, b);
        let sum = &a + &c("gamma/(gamma + xi)");
        assert_ne!(sum, Coef::one());
        assert_eq!(&a * &c("gamma + xi"), Coef::one());
        assert_eq!(c("(gamma + xi)/(gamma + xi)").as_rational(), Some(rat_int(1)));
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "-3/4", "gamma", "-2*gamma^2*xi", "(gamma - 1/2*xi)/xi", "2/(gamma*xi)", "(gamma + xi)/(gamma - xi)"] {
            let v = c(s);
            assert_eq!(c(&v.to_string()), v, "{s}");
        }
        assert!("gamma +".parse::<Coef>().is_err());
        assert!("1/0".parse::<Coef>().is_err());
        assert!("gamma + xi/xi".parse::<Coef>().is_err());
    }

    #[test]
    fn substitute_xi_zero_after_rescaling() {
        // ξ · (2γ/ξ) has a finite ξ → 0 limit
        let v = &Coef::xi() * &c("2*gamma/xi");
        assert_eq!(v.substitute(Param::Xi, &rat_int(0)), Ok(c("2*gamma")));
        assert_eq!(c("1/xi").substitute(Param::Xi, &rat_int(0)), Err(ScalarError::DenominatorVanishes));
    }

    #[test]
    fn combinatorics() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(3, 5), BigInt::zero());
        assert_eq!(factorial(6), BigInt::from(720));
        assert_eq!(falling_factorial(&rat(1, 2), 2), rat(-1, 4));
        assert_eq!(falling_factorial(&rat_int(3), 4), rat_int(0));
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("-7/3"), Ok(rat(-7, 3)));
        assert_eq!(parse_rational(" 4 "), Ok(rat_int(4)));
        assert!(parse_rational("1.5").is_err());
        assert_eq!(parse_rational("1/0"), Err(ScalarError::DivisionByZero));
    }
}
