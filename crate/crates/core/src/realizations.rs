//! Generator families and invariant operators.
//!
//! Every family is a named, ordered list of [`WeylElement`]s over one
//! [`VarTable`]. Families come in two conventions: [`Convention::Verbatim`]
//! builds the printed formulas exactly, [`Convention::Corrected`] applies the
//! documented non-additive corrections (a sign, a missing exponential factor,
//! a zero-mode operator). Additive constants are never patched here; see
//! `verify::calibrate_constants`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{binomial, factorial, fmt_rational, rat, rat_int, Coef, Param, Rational};
use crate::weyl::{ExpDomain, VarTable, WeylElement, WeylError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealizationError {
    #[error("parameter {0} must be nonzero")]
    ZeroParameter(&'static str),
    #[error("invalid spin label l = {0}; need l >= 1")]
    InvalidEll(u32),
    #[error("frequencies must be nonzero")]
    ZeroFrequency,
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

pub type Result<T> = std::result::Result<T, RealizationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Convention {
    Verbatim,
    Corrected,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Verbatim => "verbatim",
            Convention::Corrected => "corrected",
        }
    }
}

/// γ or ξ: left symbolic or fixed to a rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamValue {
    Symbolic,
    Value(Rational),
}

impl ParamValue {
    pub fn int(n: i64) -> Self {
        ParamValue::Value(rat_int(n))
    }

    pub fn text(&self) -> String {
        match self {
            ParamValue::Symbolic => "symbolic".into(),
            ParamValue::Value(r) => fmt_rational(r),
        }
    }

    fn coef(&self, p: Param) -> Coef {
        match self {
            ParamValue::Symbolic => Coef::param(p),
            ParamValue::Value(r) => Coef::from(r.clone()),
        }
    }

    fn check(&self, name: &'static str) -> Result<()> {
        match self {
            ParamValue::Value(r) if r.is_zero() => Err(RealizationError::ZeroParameter(name)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Fixed,
    Xi0 { omega1: Rational, omega2: Rational, gamma: Coef },
}

#[derive(Debug, Clone)]
pub struct GeneratorFamily {
    pub name: String,
    pub table: Arc<VarTable>,
    pub params: BTreeMap<String, String>,
    pub convention: Convention,
    generators: Vec<(String, WeylElement)>,
    source: Source,
}

impl GeneratorFamily {
    fn new(name: &str, table: &Arc<VarTable>, convention: Convention) -> Self {
        Self {
            name: name.to_string(),
            table: table.clone(),
            params: BTreeMap::new(),
            convention,
            generators: Vec::new(),
            source: Source::Fixed,
        }
    }

    fn push(&mut self, name: impl Into<String>, g: WeylElement) {
        self.generators.push((name.into(), g));
    }

    fn param(mut self, key: &str, value: impl Into<String>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn generators(&self) -> &[(String, WeylElement)] {
        &self.generators
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.generators.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&WeylElement> {
        self.generators.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    /// Like [`get`](Self::get), but indexed members of infinite families are
    /// built on demand outside the stored cutoff.
    pub fn resolve(&self, name: &str) -> Result<WeylElement> {
        if let Some(g) = self.get(name) {
            return Ok(g.clone());
        }
        if let Source::Xi0 { omega1, omega2, gamma } = &self.source {
            if let Some((kind, n)) = parse_indexed(name) {
                if let Some(kind) = Xi0Kind::from_name(kind) {
                    let b = Xi0Builder::new(&self.table, omega1, omega2, gamma);
                    return b.generator(kind, n, self.convention);
                }
            }
        }
        Err(RealizationError::UnknownGenerator(name.to_string()))
    }

    /// Adds `δ_g` to the listed generators.
    pub fn shifted(&self, deltas: &BTreeMap<String, Coef>) -> Result<Self> {
        let mut out = self.clone();
        for (name, d) in deltas {
            let slot = out
                .generators
                .iter_mut()
                .find(|(n, _)| n == name)
                .ok_or_else(|| RealizationError::UnknownGenerator(name.clone()))?;
            slot.1 = &slot.1 + &WeylElement::scalar(&out.table, d.clone());
        }
        Ok(out)
    }

    /// The same family restricted to the listed generator names, in order.
    pub fn subset(&self, names: &[&str]) -> Result<Self> {
        let mut out = self.clone();
        out.generators = names
            .iter()
            .map(|n| Ok((n.to_string(), self.resolve(n)?)))
            .collect::<Result<_>>()?;
        Ok(out)
    }
}

fn parse_indexed(name: &str) -> Option<(&str, i64)> {
    let (kind, rest) = name.split_once('(')?;
    let n = rest.strip_suffix(')')?.parse().ok()?;
    Some((kind, n))
}

/// `+k`, `0`, `-k`.
pub fn signed_index(k: i64) -> String {
    if k > 0 {
        format!("+{k}")
    } else {
        k.to_string()
    }
}

/// Three invariant operators closing sl(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantTriplet {
    pub plus: WeylElement,
    pub zero: WeylElement,
    pub minus: WeylElement,
}

impl InvariantTriplet {
    pub fn named(&self) -> [(&'static str, &WeylElement); 3] {
        [("Omega+1", &self.plus), ("Omega0", &self.zero), ("Omega-1", &self.minus)]
    }
}

pub fn l1_names() -> [&'static str; 12] {
    ["z+", "z0", "z-", "r", "v+1", "v0", "v-1", "w+1", "w0", "w-1", "theta", "q"]
}

/// Space variables `x, y, u` with natural powers.
pub fn osc_table() -> Arc<VarTable> {
    VarTable::new(
        vec![("x", ExpDomain::NatPow), ("y", ExpDomain::NatPow), ("u", ExpDomain::NatPow)],
        true,
    )
    .expect("static table")
}

/// `tau` with integer powers, then `x, y, u`.
pub fn free_table() -> Arc<VarTable> {
    VarTable::new(
        vec![
            ("tau", ExpDomain::IntPow),
            ("x", ExpDomain::NatPow),
            ("y", ExpDomain::NatPow),
            ("u", ExpDomain::NatPow),
        ],
        false,
    )
    .expect("static table")
}

fn instantiate(g: WeylElement, gamma: &ParamValue, xi: &ParamValue) -> Result<WeylElement> {
    let mut g = g;
    if let ParamValue::Value(v) = gamma {
        g = g.try_map_coefs(|c| c.substitute(Param::Gamma, v))?;
    }
    if let ParamValue::Value(v) = xi {
        g = g.try_map_coefs(|c| c.substitute(Param::Xi, v))?;
    }
    Ok(g)
}

fn from_texts(
    name: &str,
    table: &Arc<VarTable>,
    texts: &[(&str, &str)],
    gamma: &ParamValue,
    xi: &ParamValue,
) -> Result<GeneratorFamily> {
    gamma.check("gamma")?;
    xi.check("xi")?;
    let mut fam = GeneratorFamily::new(name, table, Convention::Verbatim)
        .param("gamma", gamma.text())
        .param("xi", xi.text());
    for (n, text) in texts {
        let g = WeylElement::parse(table, text)?;
        fam.push(*n, instantiate(g, gamma, xi)?);
    }
    Ok(fam)
}

const FREE_L1: [(&str, &str); 12] = [
    ("z+", "d[tau]"),
    ("z0", "-tau * d[tau] - x * d[x] - y * d[y] + 1"),
    (
        "z-",
        "-tau^2 * d[tau] - 2 * tau * x * d[x] - 2 * tau * y * d[y] - 2/xi * x * d[u] - 2/gamma * u * y - 2 * tau",
    ),
    ("r", "-x * d[x] + y * d[y] - u * d[u]"),
    ("v+1", "gamma * d[x]"),
    ("v0", "gamma * tau * d[x] + gamma/xi * d[u]"),
    ("v-1", "gamma * tau^2 * d[x] + 2*gamma/xi * tau * d[u] + 2/xi * y"),
    ("w+1", "xi * d[y]"),
    ("w0", "xi * tau * d[y] + xi/gamma * u"),
    ("w-1", "xi * tau^2 * d[y] + 2*xi/gamma * tau * u - 2/gamma * x"),
    ("theta", "1"),
    ("q", "x * d[y] + 1/2*xi/gamma * u^2"),
];

const OSC_L1: [(&str, &str); 12] = [
    ("z+", "e^{-t} * d[t] - e^{-t} * x * d[x] - e^{-t} * y * d[y]"),
    ("z0", "-d[t] - 1"),
    (
        "z-",
        "-e^{t} * d[t] - e^{t} * x * d[x] - e^{t} * y * d[y] - 2/xi * e^{t} * x * d[u] - 2/gamma * e^{t} * u * y - 2 * e^{t}",
    ),
    ("r", "-x * d[x] + y * d[y] - u * d[u]"),
    ("v+1", "gamma * e^{-t} * d[x]"),
    ("v0", "gamma * d[x] + gamma/xi * d[u]"),
    ("v-1", "gamma * e^{t} * d[x] + 2*gamma/xi * e^{t} * d[u] + 2/xi * e^{t} * y"),
    ("w+1", "xi * e^{-t} * d[y]"),
    ("w0", "xi * d[y] + xi/gamma * u"),
    ("w-1", "xi * e^{t} * d[y] + 2*xi/gamma * e^{t} * u - 2/gamma * e^{t} * x"),
    ("theta", "1"),
    ("q", "x * d[y] + 1/2*xi/gamma * u^2"),
];

/// The twelve first-order generators in the `τ` picture, constants as printed.
pub fn build_free_l1(gamma: &ParamValue, xi: &ParamValue) -> Result<GeneratorFamily> {
    from_texts("free-l1", &free_table(), &FREE_L1, gamma, xi)
}

/// The twelve generators in the oscillator (`t`) picture.
pub fn build_osc_l1(gamma: &ParamValue, xi: &ParamValue) -> Result<GeneratorFamily> {
    build_osc_l1_over(&osc_table(), gamma, xi)
}

/// [`build_osc_l1`] over a caller-supplied table with the same variable
/// names (used to widen exponent domains).
pub fn build_osc_l1_over(table: &Arc<VarTable>, gamma: &ParamValue, xi: &ParamValue) -> Result<GeneratorFamily> {
    from_texts("osc-l1", table, &OSC_L1, gamma, xi)
}

fn half() -> Coef {
    Coef::ratio(1, 2)
}

fn quarter() -> Coef {
    Coef::ratio(1, 4)
}

/// `Ω_k` from the quadratic formulas of an ℓ = 1 family.
pub fn build_triplet(fam: &GeneratorFamily) -> Result<InvariantTriplet> {
    let g = |n: &str| fam.resolve(n);
    let anti = |a: &str, b: &str| -> Result<WeylElement> { Ok(g(a)?.anticommutator(&g(b)?)?) };
    let plus = g("z+")? + (anti("v+1", "w0")? - anti("v0", "w+1")?).scale(&half());
    let zero = g("z0")? - (anti("v+1", "w-1")? - anti("v-1", "w+1")?).scale(&quarter());
    let minus = g("z-")? - (anti("v0", "w-1")? - anti("v-1", "w0")?).scale(&half());
    Ok(InvariantTriplet { plus, zero, minus })
}

/// `-d[t] + x d[x] + ω y d[y] + γ d[y] d[u] - ξ u d[x]` over the family table.
pub fn omega_operator(osc: &GeneratorFamily, omega: &Rational) -> Result<WeylElement> {
    let t = &osc.table;
    let gamma = coef_param(osc, "gamma", Param::Gamma)?;
    let xi = coef_param(osc, "xi", Param::Xi)?;
    let mut out = WeylElement::parse(t, "-d[t] + x * d[x]")?;
    out = out + WeylElement::parse(t, "y * d[y]")?.scale_rat(omega);
    out = out + WeylElement::parse(t, "d[y] * d[u]")?.scale(&gamma);
    out = out - WeylElement::parse(t, "u * d[x]")?.scale(&xi);
    Ok(out)
}

fn coef_param(fam: &GeneratorFamily, key: &str, p: Param) -> Result<Coef> {
    match fam.params.get(key).map(String::as_str) {
        Some("symbolic") | None => Ok(Coef::param(p)),
        Some(v) => Ok(Coef::from(
            crate::scalar::parse_rational(v).map_err(WeylError::from)?,
        )),
    }
}

/// `½(v₋₁ w₊₁ − w₋₁ v₊₁)` for the oscillator family.
pub fn build_h(fam: &GeneratorFamily) -> Result<WeylElement> {
    let g = |n: &str| fam.resolve(n);
    let h = g("v-1")?.mul(&g("w+1")?)? - g("w-1")?.mul(&g("v+1")?)?;
    Ok(h.scale(&half()))
}

/// `I_n = (-1)^n (2ℓ - n)! n!`.
pub fn i_const(l: u32, n: u32) -> BigInt {
    let v = factorial(u64::from(2 * l - n)) * factorial(u64::from(n));
    if n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `(tau, x1..xl, u, y1..yl)`; `u` plays the role of `x_{l+1}`.
pub fn general_table(l: u32) -> Result<Arc<VarTable>> {
    let mut names = vec!["tau".to_string()];
    names.extend((1..=l).map(|k| format!("x{k}")));
    names.push("u".into());
    names.extend((1..=l).map(|k| format!("y{k}")));
    let vars = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), if i == 0 { ExpDomain::IntPow } else { ExpDomain::NatPow }))
        .collect();
    Ok(VarTable::new(vars, false)?)
}

struct Ops<'a> {
    t: &'a Arc<VarTable>,
}

impl Ops<'_> {
    fn var(&self, n: &str) -> Result<WeylElement> {
        Ok(WeylElement::var(self.t, n)?)
    }

    fn pow(&self, n: &str, p: Rational) -> Result<WeylElement> {
        Ok(WeylElement::var_pow(self.t, n, p)?)
    }

    fn d(&self, n: &str) -> Result<WeylElement> {
        Ok(WeylElement::deriv(self.t, n, 1)?)
    }

    fn c(&self, c: impl Into<Coef>) -> WeylElement {
        WeylElement::scalar(self.t, c)
    }

    fn e(&self, alpha: Rational) -> Result<WeylElement> {
        Ok(WeylElement::exp_t(self.t, alpha)?)
    }

    fn prod(&self, factors: &[&WeylElement]) -> Result<WeylElement> {
        let mut out = WeylElement::one(self.t);
        for f in factors {
            out = out.mul(f)?;
        }
        Ok(out)
    }

    /// `v d[v]`.
    fn euler(&self, n: &str) -> Result<WeylElement> {
        self.prod(&[&self.var(n)?, &self.d(n)?])
    }
}

fn big(n: BigInt) -> Coef {
    Coef::from(n)
}

fn xk(l: u32, k: u32) -> String {
    if k == l + 1 {
        "u".into()
    } else {
        format!("x{k}")
    }
}

/// Generators of arbitrary integer ℓ at γ = ξ = 1. Verbatim keeps the
/// printed `z+ = -d[tau]`; corrected uses `+d[tau]`.
pub fn build_free_general(l: u32, convention: Convention) -> Result<GeneratorFamily> {
    if l == 0 {
        return Err(RealizationError::InvalidEll(l));
    }
    let t = general_table(l)?;
    let o = Ops { t: &t };
    let li = i64::from(l);
    let tau_pow = |k: i64| o.pow("tau", rat_int(k));
    let y = |k: u32| format!("y{k}");

    let zp = match convention {
        Convention::Verbatim => -o.d("tau")?,
        Convention::Corrected => o.d("tau")?,
    };
    let mut z0 = -o.euler("tau")?;
    for k in 1..=l {
        let w = Coef::from(i64::from(l + 1 - k));
        z0 = z0 - (o.euler(&xk(l, k))? + o.euler(&y(k))?).scale(&w);
    }
    z0 = z0 - o.c(Coef::ratio(li * (li + 1), 2));

    let mut zm = o.prod(&[&o.c(2), &o.var("tau")?, &z0])? + o.prod(&[&tau_pow(2)?, &o.d("tau")?])?;
    zm = zm - o.prod(&[&o.c(big(BigInt::from(l) * i_const(l, l + 1))), &o.var("u")?, &o.var(&y(l))?])?;
    for k in 1..=l {
        let w = o.c(i64::from(2 * l + 1 - k));
        zm = zm - o.prod(&[&w, &o.var(&xk(l, k))?, &o.d(&xk(l, k + 1))?])?;
    }
    for k in 1..l {
        let w = o.c(i64::from(2 * l + 1 - k));
        zm = zm - o.prod(&[&w, &o.var(&y(k))?, &o.d(&y(k + 1))?])?;
    }

    let mut r = -o.euler("u")?;
    for k in 1..=l {
        r = r - o.euler(&xk(l, k))? + o.euler(&y(k))?;
    }

    let mut fam = GeneratorFamily::new(&format!("free-general({l})"), &t, convention)
        .param("l", l.to_string())
        .param("gamma", "1")
        .param("xi", "1");
    fam.push("z+", zp);
    fam.push("z0", z0);
    fam.push("z-", zm);
    fam.push("r", r);

    let bin = |n: i64, k: i64| big(binomial(n, k));
    // v_n, w_n for n >= 0 (w_0 comes from the negative-index formula)
    let mut v = BTreeMap::new();
    let mut w = BTreeMap::new();
    for n in 0..=li {
        let mut acc = WeylElement::zero(&t);
        let mut acc_w = WeylElement::zero(&t);
        for k in n..=li {
            let c = o.prod(&[&o.c(bin(li - n, li - k)), &tau_pow(li - k)?])?;
            acc = acc + c.mul(&o.d(&xk(l, (k + 1 - n) as u32))?)?;
            if n >= 1 {
                acc_w = acc_w + c.mul(&o.d(&y((k + 1 - n) as u32))?)?;
            }
        }
        v.insert(n, acc);
        if n >= 1 {
            w.insert(n, acc_w);
        }
    }
    for n in 1..=li {
        let mut acc = WeylElement::zero(&t);
        for k in 0..=li {
            let c = o.prod(&[&o.c(bin(li + n, n + k)), &tau_pow(n + k)?])?;
            acc = acc + c.mul(&o.d(&xk(l, (li + 1 - k) as u32))?)?;
        }
        for k in 1..=n {
            let c = bin(li + n, n - k) * big(i_const(l, (li + k) as u32));
            acc = acc + o.prod(&[&o.c(c), &tau_pow(n - k)?, &o.var(&y((li + 1 - k) as u32))?])?;
        }
        v.insert(-n, acc);
    }
    for n in 0..=li {
        let mut acc = WeylElement::zero(&t);
        for k in 1..=li {
            let c = o.prod(&[&o.c(bin(li + n, n + k)), &tau_pow(n + k)?])?;
            acc = acc + c.mul(&o.d(&y((li + 1 - k) as u32))?)?;
        }
        for k in 0..=n {
            let c = bin(li + n, n - k) * big(i_const(l, (li + k) as u32));
            acc = acc - o.prod(&[&o.c(c), &tau_pow(n - k)?, &o.var(&xk(l, (li + 1 - k) as u32))?])?;
        }
        w.insert(-n, acc);
    }
    for a in (-li..=li).rev() {
        fam.push(format!("v{}", signed_index(a)), v[&a].clone());
    }
    for a in (-li..=li).rev() {
        fam.push(format!("w{}", signed_index(a)), w[&a].clone());
    }
    Ok(fam)
}

/// Creation and annihilation operators built from a general family.
#[derive(Debug, Clone)]
pub struct LadderSet {
    pub l: u32,
    pub family: GeneratorFamily,
    pub a: Vec<WeylElement>,
    pub a_dag: Vec<WeylElement>,
    pub b: Vec<WeylElement>,
    pub b_dag: Vec<WeylElement>,
}

pub fn build_ladder(l: u32, convention: Convention) -> Result<LadderSet> {
    let family = build_free_general(l, convention)?;
    let mut a = Vec::new();
    let mut a_dag = Vec::new();
    let mut b = Vec::new();
    let mut b_dag = Vec::new();
    for n in 0..=i64::from(l) {
        let inv = Coef::from(Rational::new(BigInt::one(), i_const(l, l + n as u32)));
        a.push(family.resolve(&format!("v{}", signed_index(n)))?);
        a_dag.push(family.resolve(&format!("w{}", signed_index(-n)))?.scale(&inv).neg());
        b.push(family.resolve(&format!("w{}", signed_index(n)))?.scale(&inv));
        b_dag.push(family.resolve(&format!("v{}", signed_index(-n)))?);
    }
    Ok(LadderSet {
        l,
        family,
        a,
        a_dag,
        b,
        b_dag,
    })
}

impl LadderSet {
    /// `Σ_{n≥1} n (a†_n a_n + b†_n b_n)`.
    pub fn hamiltonian(&self) -> Result<WeylElement> {
        let mut h = WeylElement::zero(&self.family.table);
        for n in 1..=self.l as usize {
            let term = self.a_dag[n].mul(&self.a[n])? + self.b_dag[n].mul(&self.b[n])?;
            h = h + term.scale(&Coef::from(n as i64));
        }
        Ok(h)
    }

    /// The explicit first-order-in-`d[tau]` invariant operator.
    pub fn omega1_explicit(&self) -> Result<WeylElement> {
        let l = self.l;
        let o = Ops { t: &self.family.table };
        let mut out = o.d("tau")?;
        for n in 1..=l {
            out = out + o.prod(&[&o.c(i64::from(n)), &o.var(&xk(l, n + 1))?, &o.d(&xk(l, n))?])?;
        }
        for n in 1..l {
            out = out + o.prod(&[&o.c(i64::from(n)), &o.var(&format!("y{}", n + 1))?, &o.d(&format!("y{n}"))?])?;
        }
        let sign = if l.is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
        let c = Rational::new(sign, factorial(u64::from(l)) * factorial(u64::from(l - 1)));
        out = out + o.prod(&[&o.c(Coef::from(c)), &o.d(&format!("y{l}"))?, &o.d("u")?])?;
        Ok(out)
    }

    /// The same operator from ladder quadratics. `daggered_second` selects
    /// the printed `a†_n a†_{n+1}` reading; otherwise `a†_n a_{n+1}`.
    pub fn omega1_ladder(&self, daggered_second: bool) -> Result<WeylElement> {
        let l = self.l as usize;
        let mut out = self.family.resolve("z+")?;
        for n in 0..l {
            let (a2, b2) = if daggered_second {
                (&self.a_dag[n + 1], &self.b_dag[n + 1])
            } else {
                (&self.a[n + 1], &self.b[n + 1])
            };
            let ca = Coef::from((l - n) as i64);
            let cb = Coef::from((l + n + 1) as i64);
            out = out + self.a_dag[n].mul(a2)?.scale(&ca) - self.b_dag[n].mul(b2)?.scale(&cb);
        }
        Ok(out)
    }
}

/// Kinds of the ξ = 0 infinite family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Xi0Kind {
    J0,
    JPlus,
    JMinus,
    R,
    Chi,
    W,
    Rho,
    V,
    U,
    Theta,
}

impl Xi0Kind {
    pub const ALL: [Xi0Kind; 10] = [
        Xi0Kind::J0,
        Xi0Kind::JPlus,
        Xi0Kind::JMinus,
        Xi0Kind::R,
        Xi0Kind::Chi,
        Xi0Kind::W,
        Xi0Kind::Rho,
        Xi0Kind::V,
        Xi0Kind::U,
        Xi0Kind::Theta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Xi0Kind::J0 => "j0",
            Xi0Kind::JPlus => "j+",
            Xi0Kind::JMinus => "j-",
            Xi0Kind::R => "r",
            Xi0Kind::Chi => "chi",
            Xi0Kind::W => "w",
            Xi0Kind::Rho => "rho",
            Xi0Kind::V => "v",
            Xi0Kind::U => "u",
            Xi0Kind::Theta => "theta",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn indexed(self, n: i64) -> String {
        format!("{}({n})", self.name())
    }
}

/// `(t; x with exponents in (1/den) Z; y, u)` where `den` is the denominator
/// of `ω₂/ω₁`.
pub fn xi0_table(omega1: &Rational, omega2: &Rational) -> Result<Arc<VarTable>> {
    if omega1.is_zero() || omega2.is_zero() {
        return Err(RealizationError::ZeroFrequency);
    }
    let ratio = omega2 / omega1;
    Ok(VarTable::new(
        vec![
            ("x", ExpDomain::RatPow(ratio.denom().clone())),
            ("y", ExpDomain::NatPow),
            ("u", ExpDomain::NatPow),
        ],
        true,
    )?)
}

struct Xi0Builder<'a> {
    o: Ops<'a>,
    w1: &'a Rational,
    w2: &'a Rational,
    gamma: &'a Coef,
}

impl<'a> Xi0Builder<'a> {
    fn new(t: &'a Arc<VarTable>, w1: &'a Rational, w2: &'a Rational, gamma: &'a Coef) -> Self {
        Self {
            o: Ops { t },
            w1,
            w2,
            gamma,
        }
    }

    fn ratio(&self) -> Rational {
        self.w2 / self.w1
    }

    fn kappa(&self, n: i64) -> Result<WeylElement> {
        let n = rat_int(n);
        let mut m = crate::weyl::Monomial::one(self.o.t.len());
        m.exp_weight = self.w2 * &n;
        m.powers[0] = self.ratio() * &n;
        Ok(WeylElement::term(self.o.t, Coef::one(), m, crate::weyl::DerivIndex::none(self.o.t.len()))?)
    }

    fn rc(&self, r: &Rational) -> WeylElement {
        self.o.c(Coef::from(r.clone()))
    }

    /// `-d[t] + ω₁ x d[x]`.
    fn base(&self) -> Result<WeylElement> {
        Ok(-self.o.d("t")? + self.o.euler("x")?.scale_rat(self.w1))
    }

    fn gamma_inv(&self) -> Result<Coef> {
        Ok(self.gamma.recip().map_err(WeylError::from)?)
    }

    fn generator(&self, kind: Xi0Kind, n: i64, convention: Convention) -> Result<WeylElement> {
        let o = &self.o;
        let k = self.kappa(n)?;
        let w2 = self.w2;
        let body = match kind {
            Xi0Kind::J0 => {
                let inner = -o.euler("y")? + o.euler("u")? + o.c(1);
                self.base()? - inner.scale_rat(&(w2 * rat(1, 2)))
            }
            Xi0Kind::JPlus => {
                let inner = self.base()? + o.euler("y")?.scale_rat(w2);
                -o.prod(&[&o.e(-w2.clone())?, &inner])?
            }
            Xi0Kind::JMinus => {
                let uy = o.prod(&[&o.var("u")?, &o.var("y")?])?;
                let inner = self.base()? - o.euler("u")?.scale_rat(w2)
                    - uy.scale(&(&Coef::from(w2 * w2) * &self.gamma_inv()?))
                    - self.rc(w2);
                match convention {
                    Convention::Verbatim => inner,
                    Convention::Corrected => o.prod(&[&o.e(w2.clone())?, &inner])?,
                }
            }
            Xi0Kind::R => -o.euler("y")? + o.euler("u")?,
            Xi0Kind::Chi => o.euler("x")?,
            Xi0Kind::W => o.d("y")? + o.var("u")?.scale(&(&Coef::from(w2.clone()) * &self.gamma_inv()?)),
            Xi0Kind::Rho => o.prod(&[&o.pow("x", self.ratio())?, &o.d("y")?])?,
            Xi0Kind::V => {
                let inner = o.d("u")?.scale(self.gamma) + o.var("y")?.scale_rat(w2);
                o.prod(&[&o.pow("x", -self.ratio())?, &inner])?
            }
            Xi0Kind::U => o.d("u")?.scale(self.gamma),
            Xi0Kind::Theta => o.c(1),
        };
        Ok(k.mul(&body)?)
    }
}

/// The ξ = 0 sector: limit ladder operators, `Ω`, and the infinite family
/// truncated at `|n| ≤ N`.
pub fn build_xi0(
    omega1: &Rational,
    omega2: &Rational,
    gamma: &ParamValue,
    cutoff: u32,
    convention: Convention,
) -> Result<GeneratorFamily> {
    gamma.check("gamma")?;
    let t = xi0_table(omega1, omega2)?;
    let g = gamma.coef(Param::Gamma);
    let b = Xi0Builder::new(&t, omega1, omega2, &g);
    let o = &b.o;
    let (w1, w2) = (omega1, omega2);
    let mut fam = GeneratorFamily::new(&format!("xi0({},{},{cutoff})", fmt_rational(w1), fmt_rational(w2)), &t, convention)
        .param("omega1", fmt_rational(w1))
        .param("omega2", fmt_rational(w2))
        .param("gamma", gamma.text())
        .param("N", cutoff.to_string());
    let gi = b.gamma_inv()?;
    let c = |r: Rational| Coef::from(r);
    fam.push("v+1", o.prod(&[&o.c(g.clone()), &o.e(-w1.clone())?, &o.d("x")?])?);
    let v_m1 = o.d("u")?.scale(&g) + o.var("y")?.scale_rat(w2);
    fam.push("v-1", o.prod(&[&o.c(c(w2 * rat_int(2))), &o.e(w2.clone())?, &v_m1])?);
    fam.push("w+1", o.prod(&[&o.e(-w2.clone())?, &o.d("y")?])?);
    let wm = &c(-(w1 * w1) * rat_int(2)) * &gi;
    fam.push("w-1", o.prod(&[&o.c(wm), &o.e(w1.clone())?, &o.var("x")?])?);
    fam.push("v0", o.d("u")?.scale(&g));
    let w0 = match convention {
        Convention::Verbatim => o.var("u")?.scale(&gi),
        Convention::Corrected => o.d("y")? + o.var("u")?.scale(&(&c(w2.clone()) * &gi)),
    };
    fam.push("w0", w0);
    fam.push("z0", -o.d("t")? - b.rc(&((w1 + w2) * rat(1, 2))));
    let omega = -o.d("t")? + o.euler("x")?.scale_rat(w1) + o.euler("y")?.scale_rat(w2)
        + o.prod(&[&o.d("y")?, &o.d("u")?])?.scale(&g);
    fam.push("Omega", omega);
    let n = i64::from(cutoff);
    for kind in Xi0Kind::ALL {
        for i in -n..=n {
            fam.push(kind.indexed(i), b.generator(kind, i, convention)?);
        }
    }
    fam.source = Source::Xi0 {
        omega1: w1.clone(),
        omega2: w2.clone(),
        gamma: g,
    };
    Ok(fam)
}

/// `Ω` and `Ω_± = ∓e^{∓ω₂t} Ω`.
pub fn xi0_triplet(fam: &GeneratorFamily) -> Result<InvariantTriplet> {
    let omega = fam.resolve("Omega")?;
    let w2 = xi0_omega(fam, "omega2")?;
    let t = &fam.table;
    let plus = WeylElement::exp_t(t, -w2.clone())?.mul(&omega)?.neg();
    let minus = WeylElement::exp_t(t, w2)?.mul(&omega)?;
    Ok(InvariantTriplet {
        plus,
        zero: omega,
        minus,
    })
}

pub fn xi0_omega(fam: &GeneratorFamily, key: &str) -> Result<Rational> {
    let v = fam
        .params
        .get(key)
        .ok_or_else(|| RealizationError::UnknownGenerator(key.to_string()))?;
    Ok(crate::scalar::parse_rational(v).map_err(WeylError::from)?)
}

/// `H = Ω + d[t]` for the ξ = 0 family, built from the anticommutator
/// formula with the two frequencies.
pub fn build_h_xi0(fam: &GeneratorFamily) -> Result<WeylElement> {
    let w1 = xi0_omega(fam, "omega1")?;
    let w2 = xi0_omega(fam, "omega2")?;
    let g = |n: &str| fam.resolve(n);
    let a = g("v+1")?.anticommutator(&g("w-1")?)?;
    let b = g("v-1")?.anticommutator(&g("w+1")?)?;
    let k1 = Coef::from(Rational::one() / (rat_int(4) * &w1));
    let k2 = Coef::from(Rational::one() / (rat_int(4) * &w2));
    let shift = Coef::from((&w1 + &w2) * rat(1, 2));
    Ok(b.scale(&k2) - a.scale(&k1) - WeylElement::scalar(&fam.table, shift))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: &Arc<VarTable>, s: &str) -> WeylElement {
        WeylElement::parse(t, s).unwrap()
    }

    #[test]
    fn free_examples() {
        let f = build_free_l1(&ParamValue::Symbolic, &ParamValue::Symbolic).unwrap();
        assert_eq!(f.get("w0").unwrap(), &p(&f.table, "xi * tau * d[y] + xi/gamma * u"));
        assert_eq!(f.get("theta").unwrap(), &WeylElement::one(&f.table));
        let f1 = build_free_l1(&ParamValue::int(1), &ParamValue::int(1)).unwrap();
        assert_eq!(f1.get("v0").unwrap(), &p(&f1.table, "tau * d[x] + d[u]"));
        assert_eq!(
            build_free_l1(&ParamValue::int(0), &ParamValue::int(1)).unwrap_err(),
            RealizationError::ZeroParameter("gamma")
        );
    }

    #[test]
    fn osc_examples() {
        let f = build_osc_l1(&ParamValue::Symbolic, &ParamValue::Symbolic).unwrap();
        assert_eq!(f.get("z0").unwrap(), &p(&f.table, "-d[t] - 1"));
        assert_eq!(f.get("q").unwrap(), &p(&f.table, "x * d[y] + xi/(2*gamma) * u^2"));
        let f1 = build_osc_l1(&ParamValue::Symbolic, &ParamValue::int(1)).unwrap();
        assert_eq!(f1.get("w+1").unwrap(), &p(&f1.table, "e^{-t} * d[y]"));
    }

    #[test]
    fn triplet_closed_forms() {
        let f = build_osc_l1(&ParamValue::Symbolic, &ParamValue::Symbolic).unwrap();
        let tr = build_triplet(&f).unwrap();
        let om0 = p(&f.table, "-d[t] + x * d[x] + y * d[y] - xi * u * d[x] + gamma * d[y] * d[u]");
        assert_eq!(tr.zero, om0);
        let e = |a: &str| WeylElement::parse(&f.table, a).unwrap();
        assert_eq!(tr.plus, e("e^{-t}").mul(&om0).unwrap().neg());
        assert_eq!(tr.minus, e("e^{t}").mul(&om0).unwrap());

        let free = build_free_l1(&ParamValue::Symbolic, &ParamValue::Symbolic).unwrap();
        let tr = build_triplet(&free).unwrap();
        let plus = p(&free.table, "d[tau] + xi * u * d[x] - gamma * d[y] * d[u]");
        assert_eq!(tr.plus, plus);
        let tau = p(&free.table, "tau");
        // printed z0 constant leaves a shift of 2 against the closed form
        assert_eq!(tr.zero, tau.mul(&plus).unwrap().neg() + WeylElement::scalar(&free.table, 2));
        assert_eq!(tr.minus, tau.mul(&tau).unwrap().mul(&plus).unwrap().neg());
    }

    #[test]
    fn osc_hamiltonian() {
        let f = build_osc_l1(&ParamValue::Symbolic, &ParamValue::Symbolic).unwrap();
        let h = build_h(&f).unwrap();
        assert_eq!(h, p(&f.table, "x * d[x] + y * d[y] + gamma * d[y] * d[u] - xi * u * d[x]"));
    }

    #[test]
    fn general_examples() {
        let f = build_free_general(2, Convention::Verbatim).unwrap();
        assert_eq!(f.get("z0").unwrap().constant_term(), Coef::int(-3));
        assert_eq!(i_const(2, 3), BigInt::from(-6));
        assert_eq!(build_free_general(0, Convention::Verbatim).unwrap_err(), RealizationError::InvalidEll(0));
        let f1 = build_free_general(1, Convention::Corrected).unwrap();
        assert_eq!(f1.get("v0").unwrap(), &p(&f1.table, "tau * d[x1] + d[u]"));
        assert_eq!(f1.get("w0").unwrap(), &p(&f1.table, "tau * d[y1] + u"));
        let l2 = build_ladder(2, Convention::Corrected).unwrap();
        let om = l2.omega1_explicit().unwrap();
        let key = om
            .terms()
            .find(|((d, _), _)| d.orders[l2.family.table.index("y2").unwrap()] == 1 && d.orders[l2.family.table.index("u").unwrap()] == 1)
            .map(|(_, c)| c.clone())
            .unwrap();
        assert_eq!(key, Coef::ratio(1, 2));
    }

    #[test]
    fn xi0_examples() {
        let f = build_xi0(&rat_int(1), &rat_int(1), &ParamValue::Symbolic, 1, Convention::Corrected).unwrap();
        assert_eq!(
            f.get("Omega").unwrap(),
            &p(&f.table, "-d[t] + x * d[x] + y * d[y] + gamma * d[y] * d[u]")
        );
        assert_eq!(f.get("theta(1)").unwrap(), &p(&f.table, "e^{t} * x"));
        assert_eq!(f.get("w-1").unwrap(), &p(&f.table, "-2/gamma * e^{t} * x"));
        let h = build_h_xi0(&f).unwrap();
        assert_eq!(h, p(&f.table, "x * d[x] + y * d[y] + gamma * d[y] * d[u]"));
        assert_eq!(h, build_h(&f).unwrap());
        // generators past the cutoff resolve on demand
        let rho = f.resolve("rho(-4)").unwrap();
        assert_eq!(rho, p(&f.table, "e^{-4*t} * x^{-3} * d[y]"));
        assert!(f.resolve("zeta(1)").is_err());
        assert_eq!(
            build_xi0(&rat_int(0), &rat_int(1), &ParamValue::Symbolic, 1, Convention::Corrected).unwrap_err(),
            RealizationError::ZeroFrequency
        );
    }
}
