//! Normal-ordered differential operators.
//!
//! A [`WeylElement`] is a finite sum of terms
//! `coef * e^{αt} * v1^p1 ... * d[v1]^k1 ... * d[t]^m` over a declared
//! [`VarTable`]. Multiplication reorders derivatives to the right using the
//! falling-factorial rule, so every element is kept in canonical form and
//! equality is structural.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::scalar::{binomial, falling_factorial, fmt_rational, parse_rational, Coef, Rational, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeylError {
    #[error("exponent {exponent} of `{var}` leaves its declared domain")]
    DomainViolation { var: String, exponent: String },
    #[error("operands live over different variable tables")]
    TableMismatch,
    #[error("scale factor for `{0}` is zero")]
    ZeroScaleFactor(String),
    #[error("non-integer power {1} of the scale factor for `{0}`")]
    NonIntegerScalePower(String, String),
    #[error("time weight {0} does not give an integer power of tau")]
    NonIntegerTimeWeight(String),
    #[error("element has a derivative part")]
    NotDerivativeFree,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid variable table: {0}")]
    InvalidTable(String),
    #[error("cannot parse operator text: {0}")]
    Parse(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

pub type Result<T> = std::result::Result<T, WeylError>;

/// Which exponents a variable may carry.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExpDomain {
    NatPow,
    IntPow,
    /// Rational exponents whose denominator divides the given bound.
    RatPow(BigInt),
}

impl ExpDomain {
    pub fn rat(denominator_bound: i64) -> Self {
        ExpDomain::RatPow(BigInt::from(denominator_bound))
    }

    fn admits(&self, p: &Rational) -> bool {
        match self {
            ExpDomain::NatPow => p.is_integer() && !p.is_negative(),
            ExpDomain::IntPow => p.is_integer(),
            ExpDomain::RatPow(d) => (d % p.denom()).is_zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Var {
    pub name: String,
    pub domain: ExpDomain,
}

pub const TIME: &str = "t";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarTable {
    vars: Vec<Var>,
    has_time: bool,
}

impl VarTable {
    pub fn new(vars: Vec<(&str, ExpDomain)>, has_time: bool) -> Result<Arc<Self>> {
        let vars: Vec<Var> = vars
            .into_iter()
            .map(|(n, d)| Var {
                name: n.to_string(),
                domain: d,
            })
            .collect();
        for (i, v) in vars.iter().enumerate() {
            let ok_name = !v.name.is_empty()
                && v.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && v.name.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
            if !ok_name || ["e", "d", "gamma", "xi"].contains(&v.name.as_str()) {
                return Err(WeylError::InvalidTable(format!("bad variable name `{}`", v.name)));
            }
            if has_time && v.name == TIME {
                return Err(WeylError::InvalidTable("`t` is reserved for the time variable".into()));
            }
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(WeylError::InvalidTable(format!("duplicate variable `{}`", v.name)));
            }
            if let ExpDomain::RatPow(d) = &v.domain {
                if !d.is_positive() {
                    return Err(WeylError::InvalidTable("denominator bound must be positive".into()));
                }
            }
        }
        Ok(Arc::new(Self { vars, has_time }))
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn has_time(&self) -> bool {
        self.has_time
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| WeylError::UnknownVariable(name.to_string()))
    }
}

/// `e^{αt}` times a product of variable powers; dense over the table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub exp_weight: Rational,
    pub powers: Vec<Rational>,
}

impl Monomial {
    pub fn one(n: usize) -> Self {
        Self {
            exp_weight: Rational::zero(),
            powers: vec![Rational::zero(); n],
        }
    }

    pub fn is_one(&self) -> bool {
        self.exp_weight.is_zero() && self.powers.iter().all(Zero::is_zero)
    }

    fn times(&self, other: &Monomial) -> Monomial {
        Monomial {
            exp_weight: &self.exp_weight + &other.exp_weight,
            powers: self.powers.iter().zip(&other.powers).map(|(a, b)| a + b).collect(),
        }
    }

    fn over(&self, other: &Monomial) -> Monomial {
        Monomial {
            exp_weight: &self.exp_weight - &other.exp_weight,
            powers: self.powers.iter().zip(&other.powers).map(|(a, b)| a - b).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivIndex {
    pub orders: Vec<u32>,
    pub t_order: u32,
}

impl DerivIndex {
    pub fn none(n: usize) -> Self {
        Self {
            orders: vec![0; n],
            t_order: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.t_order == 0 && self.orders.iter().all(|&k| k == 0)
    }

    pub fn total(&self) -> u32 {
        self.t_order + self.orders.iter().sum::<u32>()
    }

    fn plus(&self, other: &DerivIndex) -> DerivIndex {
        DerivIndex {
            orders: self.orders.iter().zip(&other.orders).map(|(a, b)| a + b).collect(),
            t_order: self.t_order + other.t_order,
        }
    }
}

/// Terms are ordered by derivative index first, then monomial; both
/// lexicographic. The order is compatible with multiplication by a
/// derivative-free monomial, which the on-shell factorization relies on.
pub type TermKey = (DerivIndex, Monomial);

#[derive(Debug, Clone)]
pub struct WeylElement {
    table: Arc<VarTable>,
    terms: BTreeMap<TermKey, Coef>,
}

impl PartialEq for WeylElement {
    fn eq(&self, other: &Self) -> bool {
        same_table(&self.table, &other.table) && self.terms == other.terms
    }
}

impl Eq for WeylElement {}

fn same_table(a: &Arc<VarTable>, b: &Arc<VarTable>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl WeylElement {
    pub fn zero(table: &Arc<VarTable>) -> Self {
        Self {
            table: table.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(table: &Arc<VarTable>, c: impl Into<Coef>) -> Self {
        let n = table.len();
        Self::from_term(table, c.into(), Monomial::one(n), DerivIndex::none(n))
    }

    pub fn one(table: &Arc<VarTable>) -> Self {
        Self::scalar(table, Coef::one())
    }

    /// Single term; the monomial is checked against the variable domains.
    pub fn term(table: &Arc<VarTable>, c: Coef, m: Monomial, d: DerivIndex) -> Result<Self> {
        check_monomial(table, &m)?;
        if m.powers.len() != table.len() || d.orders.len() != table.len() {
            return Err(WeylError::InvalidTable("term arity does not match the table".into()));
        }
        if !table.has_time && (!m.exp_weight.is_zero() || d.t_order > 0) {
            return Err(WeylError::UnknownVariable(TIME.into()));
        }
        Ok(Self::from_term(table, c, m, d))
    }

    fn from_term(table: &Arc<VarTable>, c: Coef, m: Monomial, d: DerivIndex) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((d, m), c);
        }
        Self {
            table: table.clone(),
            terms,
        }
    }

    /// The variable `name` raised to `p`.
    pub fn var_pow(table: &Arc<VarTable>, name: &str, p: Rational) -> Result<Self> {
        let i = table.index(name)?;
        let mut m = Monomial::one(table.len());
        m.powers[i] = p;
        Self::term(table, Coef::one(), m, DerivIndex::none(table.len()))
    }

    pub fn var(table: &Arc<VarTable>, name: &str) -> Result<Self> {
        Self::var_pow(table, name, Rational::one())
    }

    /// `d[name]^k`; `name` may be the time variable.
    pub fn deriv(table: &Arc<VarTable>, name: &str, k: u32) -> Result<Self> {
        let n = table.len();
        let mut d = DerivIndex::none(n);
        if table.has_time && name == TIME {
            d.t_order = k;
        } else {
            d.orders[table.index(name)?] = k;
        }
        Self::term(table, Coef::one(), Monomial::one(n), d)
    }

    /// `e^{αt}`.
    pub fn exp_t(table: &Arc<VarTable>, alpha: Rational) -> Result<Self> {
        let mut m = Monomial::one(table.len());
        m.exp_weight = alpha;
        Self::term(table, Coef::one(), m, DerivIndex::none(table.len()))
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&TermKey, &Coef)> {
        self.terms.iter()
    }

    pub fn coef_of(&self, key: &TermKey) -> Coef {
        self.terms.get(key).cloned().unwrap_or_else(Coef::zero)
    }

    /// The term maximal in the term order.
    pub fn leading_term(&self) -> Option<(&TermKey, &Coef)> {
        self.terms.iter().next_back()
    }

    pub fn is_derivative_free(&self) -> bool {
        self.terms.keys().all(|(d, _)| d.is_empty())
    }

    /// The value when the element is a pure scalar (zero included).
    pub fn as_scalar(&self) -> Option<Coef> {
        match self.terms.len() {
            0 => Some(Coef::zero()),
            1 => {
                let ((d, m), c) = self.terms.iter().next()?;
                (d.is_empty() && m.is_one()).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Coefficient of the bare scalar term.
    pub fn constant_term(&self) -> Coef {
        let n = self.table.len();
        self.coef_of(&(DerivIndex::none(n), Monomial::one(n)))
    }

    fn check_table(&self, other: &Self) -> Result<()> {
        if same_table(&self.table, &other.table) {
            Ok(())
        } else {
            Err(WeylError::TableMismatch)
        }
    }

    fn accumulate(terms: &mut BTreeMap<TermKey, Coef>, key: TermKey, c: Coef) {
        if c.is_zero() {
            return;
        }
        match terms.get_mut(&key) {
            Some(slot) => {
                let v = &*slot + &c;
                if v.is_zero() {
                    terms.remove(&key);
                } else {
                    *slot = v;
                }
            }
            None => {
                terms.insert(key, c);
            }
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_table(other)?;
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            Self::accumulate(&mut terms, k.clone(), c.clone());
        }
        Ok(Self {
            table: self.table.clone(),
            terms,
        })
    }

    pub fn scale(&self, c: &Coef) -> Self {
        if c.is_zero() {
            return Self::zero(&self.table);
        }
        Self {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn scale_rat(&self, r: &Rational) -> Self {
        self.scale(&Coef::from(r.clone()))
    }

    pub fn neg(&self) -> Self {
        Self {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }

    /// Canonical product `self ∘ other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_table(other)?;
        let mut terms = BTreeMap::new();
        for ((d1, m1), c1) in &self.terms {
            for ((d2, m2), c2) in &other.terms {
                let c12 = c1 * c2;
                for (r, shift, rest) in reorder(d1, m2) {
                    let mut m = m1.times(m2);
                    for (p, s) in m.powers.iter_mut().zip(&shift) {
                        *p -= Rational::from_integer(BigInt::from(*s));
                    }
                    check_monomial(&self.table, &m)?;
                    let c = c12.scale(&r);
                    Self::accumulate(&mut terms, (rest.plus(d2), m), c);
                }
            }
        }
        Ok(Self {
            table: self.table.clone(),
            terms,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(other)? - other.mul(self)?)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(other)? + other.mul(self)?)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut out = Self::one(&self.table);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Lets the operator act on a function.
    pub fn apply(&self, f: &FockState) -> Result<FockState> {
        let prod = self.mul(f.as_element())?;
        let terms = prod.terms.into_iter().filter(|((d, _), _)| d.is_empty()).collect();
        Ok(FockState(Self {
            table: prod.table,
            terms,
        }))
    }

    /// Applies `c` to every coefficient.
    pub fn try_map_coefs(&self, f: impl Fn(&Coef) -> std::result::Result<Coef, ScalarError>) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            Self::accumulate(&mut terms, k.clone(), f(c)?);
        }
        Ok(Self {
            table: self.table.clone(),
            terms,
        })
    }

    /// Dilation `v ↦ c_v v`, `d[v] ↦ c_v^{-1} d[v]` for the listed variables.
    pub fn substitute(&self, sigma: &SubstitutionMap) -> Result<Self> {
        let mut scales: Vec<Option<&Coef>> = vec![None; self.table.len()];
        for (name, c) in &sigma.scales {
            if c.is_zero() {
                return Err(WeylError::ZeroScaleFactor(name.clone()));
            }
            scales[self.table.index(name)?] = Some(c);
        }
        let mut terms = BTreeMap::new();
        for ((d, m), c) in &self.terms {
            let mut factor = c.clone();
            for (i, s) in scales.iter().enumerate() {
                let Some(s) = s else { continue };
                let net = &m.powers[i] - Rational::from_integer(BigInt::from(d.orders[i]));
                if !net.is_integer() {
                    return Err(WeylError::NonIntegerScalePower(
                        self.table.vars[i].name.clone(),
                        fmt_rational(&net),
                    ));
                }
                let e = net.to_integer().to_i64().ok_or_else(|| {
                    WeylError::NonIntegerScalePower(self.table.vars[i].name.clone(), fmt_rational(&net))
                })?;
                factor = &factor * &s.powi(e)?;
            }
            Self::accumulate(&mut terms, (d.clone(), m.clone()), factor);
        }
        Ok(Self {
            table: self.table.clone(),
            terms,
        })
    }

    /// Sets `t = 0`: drops every `e^{αt}`. Only meaningful for
    /// derivative-free elements or elements without `d[t]`.
    pub fn at_time_zero(&self) -> Self {
        let mut terms = BTreeMap::new();
        for ((d, m), c) in &self.terms {
            let mut m = m.clone();
            m.exp_weight = Rational::zero();
            Self::accumulate(&mut terms, (d.clone(), m), c.clone());
        }
        Self {
            table: self.table.clone(),
            terms,
        }
    }

    /// Re-expresses the element over another table holding the same
    /// variables (by name) plus possibly more.
    pub fn retable(&self, target: &Arc<VarTable>) -> Result<Self> {
        if self.table.has_time && !target.has_time
            && self.terms.keys().any(|(d, m)| d.t_order > 0 || !m.exp_weight.is_zero())
        {
            return Err(WeylError::UnknownVariable(TIME.into()));
        }
        let map: Vec<usize> = self
            .table
            .vars
            .iter()
            .map(|v| target.index(&v.name))
            .collect::<Result<_>>()?;
        let n = target.len();
        let mut terms = BTreeMap::new();
        for ((d, m), c) in &self.terms {
            let mut nm = Monomial::one(n);
            nm.exp_weight = m.exp_weight.clone();
            let mut nd = DerivIndex::none(n);
            nd.t_order = d.t_order;
            for (i, &j) in map.iter().enumerate() {
                nm.powers[j] = m.powers[i].clone();
                nd.orders[j] = d.orders[i];
            }
            check_monomial(target, &nm)?;
            Self::accumulate(&mut terms, (nd, nm), c.clone());
        }
        Ok(Self {
            table: target.clone(),
            terms,
        })
    }

    /// Multiplies by a derivative-free monomial on the left.
    fn monomial_times(&self, c: &Coef, m: &Monomial) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for ((d, m2), c2) in &self.terms {
            let nm = m.times(m2);
            check_monomial(&self.table, &nm)?;
            Self::accumulate(&mut terms, (d.clone(), nm), c * c2);
        }
        Ok(Self {
            table: self.table.clone(),
            terms,
        })
    }

    /// Finds a derivative-free `f` with `self = f · divisor` by leading-term
    /// division. `None` when no such `f` exists or the iteration cap is hit.
    pub fn left_divide(&self, divisor: &Self, max_steps: usize) -> Result<Option<Self>> {
        self.check_table(divisor)?;
        let Some(((ld, lm), lc)) = divisor.leading_term() else {
            return Ok(if self.is_zero() { Some(Self::zero(&self.table)) } else { None });
        };
        let mut rest = self.clone();
        let mut f = Self::zero(&self.table);
        for _ in 0..max_steps {
            let Some(((rd, rm), rc)) = rest.leading_term() else {
                return Ok(Some(f));
            };
            if rd != ld {
                return Ok(None);
            }
            let qm = rm.over(lm);
            if check_monomial(&self.table, &qm).is_err() {
                return Ok(None);
            }
            let qc = rc.checked_div(lc)?;
            let step = divisor.monomial_times(&qc, &qm)?;
            rest = rest - step;
            let n = self.table.len();
            Self::accumulate(&mut f.terms, (DerivIndex::none(n), qm), qc);
        }
        Ok(if rest.is_zero() { Some(f) } else { None })
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses the [`fmt::Display`] output back over `table`.
    pub fn parse(table: &Arc<VarTable>, text: &str) -> Result<Self> {
        parse_element(table, text)
    }
}

fn check_monomial(table: &VarTable, m: &Monomial) -> Result<()> {
    for (v, p) in table.vars.iter().zip(&m.powers) {
        if !p.is_zero() && !v.domain.admits(p) {
            return Err(WeylError::DomainViolation {
                var: v.name.clone(),
                exponent: fmt_rational(p),
            });
        }
    }
    Ok(())
}

/// Expands `D ∘ m` into `Σ r · m' · D'` where `m' = m / Π v^{s_v}`.
/// Returns (rational factor, per-variable power decrease, residual D').
fn reorder(d: &DerivIndex, m: &Monomial) -> Vec<(Rational, Vec<u32>, DerivIndex)> {
    let n = d.orders.len();
    let mut acc: Vec<(Rational, Vec<u32>, DerivIndex)> = vec![(Rational::one(), vec![0; n], DerivIndex::none(n))];
    for i in 0..n {
        let a = d.orders[i];
        if a == 0 {
            continue;
        }
        let p = &m.powers[i];
        let mut next = Vec::new();
        for (r, s, rest) in &acc {
            for k in 0..=a {
                let ff = falling_factorial(p, k);
                if ff.is_zero() {
                    continue;
                }
                let f = Rational::from_integer(binomial(a as i64, k as i64)) * ff;
                let mut s2 = s.clone();
                s2[i] = k;
                let mut rest2 = rest.clone();
                rest2.orders[i] = a - k;
                next.push((r * &f, s2, rest2));
            }
        }
        acc = next;
    }
    if d.t_order > 0 {
        let a = d.t_order;
        let alpha = &m.exp_weight;
        let mut next = Vec::new();
        for (r, s, rest) in &acc {
            for k in 0..=a {
                let w = num_traits::pow(alpha.clone(), k as usize);
                if w.is_zero() {
                    continue;
                }
                let f = Rational::from_integer(binomial(a as i64, k as i64)) * w;
                let mut rest2 = rest.clone();
                rest2.t_order = a - k;
                next.push((r * &f, s.clone(), rest2));
            }
        }
        acc = next;
    }
    acc
}

impl std::ops::Add for WeylElement {
    type Output = WeylElement;
    fn add(self, rhs: WeylElement) -> WeylElement {
        &self + &rhs
    }
}

impl std::ops::Add for &WeylElement {
    type Output = WeylElement;
    fn add(self, rhs: &WeylElement) -> WeylElement {
        self.try_add(rhs).expect("adding elements over different tables")
    }
}

impl std::ops::Sub for WeylElement {
    type Output = WeylElement;
    fn sub(self, rhs: WeylElement) -> WeylElement {
        &self - &rhs
    }
}

impl std::ops::Sub for &WeylElement {
    type Output = WeylElement;
    fn sub(self, rhs: &WeylElement) -> WeylElement {
        self.try_add(&rhs.neg()).expect("subtracting elements over different tables")
    }
}

impl std::ops::Neg for WeylElement {
    type Output = WeylElement;
    fn neg(self) -> WeylElement {
        WeylElement::neg(&self)
    }
}

impl std::ops::Neg for &WeylElement {
    type Output = WeylElement;
    fn neg(self) -> WeylElement {
        WeylElement::neg(self)
    }
}

/// Scale factors for [`WeylElement::substitute`], keyed by variable name.
#[derive(Debug, Clone, Default)]
pub struct SubstitutionMap {
    scales: BTreeMap<String, Coef>,
}

impl SubstitutionMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: &str, c: Coef) -> Self {
        self.scales.insert(var.to_string(), c);
        self
    }
}

/// A function of the space variables: an element with no derivative part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockState(WeylElement);

impl FockState {
    pub fn new(f: WeylElement) -> Result<Self> {
        if f.is_derivative_free() {
            Ok(FockState(f))
        } else {
            Err(WeylError::NotDerivativeFree)
        }
    }

    pub fn as_element(&self) -> &WeylElement {
        &self.0
    }

    pub fn into_element(self) -> WeylElement {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn at_time_zero(&self) -> Self {
        FockState(self.0.at_time_zero())
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The table of the `τ`-picture matching an oscillator table: `tau`
/// (integer powers) followed by the same space variables.
pub fn tau_table(osc: &VarTable) -> Result<Arc<VarTable>> {
    let mut vars = vec![("tau", ExpDomain::IntPow)];
    vars.extend(osc.vars.iter().map(|v| (v.name.as_str(), v.domain.clone())));
    VarTable::new(vars, false)
}

/// Conjugation by `e^{t X}`, `X = -x d[x] - y d[y]`, followed by the time
/// map `e^{kt} ↦ tau^k`, `d[t] ↦ tau d[tau]`. `x` and `y` must be
/// declared in the source table.
pub fn free_to_osc(a: &WeylElement, target: &Arc<VarTable>) -> Result<WeylElement> {
    let src = a.table();
    if !src.has_time || target.has_time {
        return Err(WeylError::InvalidTable("expected a time table mapped to a tau table".into()));
    }
    let ix = src.index("x")?;
    let iy = src.index("y")?;
    let tau = target.index("tau")?;
    let map: Vec<usize> = src.vars.iter().map(|v| target.index(&v.name)).collect::<Result<_>>()?;
    let n = target.len();
    let euler = WeylElement::var(target, "x")?.mul(&WeylElement::deriv(target, "x", 1)?)?
        + WeylElement::var(target, "y")?.mul(&WeylElement::deriv(target, "y", 1)?)?;
    let dt_image = WeylElement::var(target, "tau")?.mul(&WeylElement::deriv(target, "tau", 1)?)? + euler;
    let mut out = WeylElement::zero(target);
    for ((d, m), c) in a.terms() {
        let mut beta = m.exp_weight.clone();
        for i in [ix, iy] {
            beta -= &m.powers[i];
            beta += Rational::from_integer(BigInt::from(d.orders[i]));
        }
        if !beta.is_integer() {
            return Err(WeylError::NonIntegerTimeWeight(fmt_rational(&beta)));
        }
        let mut nm = Monomial::one(n);
        nm.powers[tau] = beta;
        let mut nd = DerivIndex::none(n);
        for (i, &j) in map.iter().enumerate() {
            nm.powers[j] = m.powers[i].clone();
            nd.orders[j] = d.orders[i];
        }
        let head = WeylElement::term(target, c.clone(), nm, nd)?;
        out = out + head.mul(&dt_image.pow(d.t_order)?)?;
    }
    Ok(out)
}

/// The `n` with `[z0, g] = n g`, if `g` is homogeneous.
pub fn degree_of(g: &WeylElement, z0: &WeylElement) -> Result<Option<Rational>> {
    let c = z0.commutator(g)?;
    let Some((key, gc)) = g.leading_term() else {
        return Ok(None);
    };
    let ratio = c.coef_of(key).checked_div(gc)?;
    let Some(r) = ratio.as_rational() else {
        return Ok(None);
    };
    Ok((c == g.scale_rat(&r)).then_some(r))
}

fn fmt_exponent(p: &Rational) -> String {
    if p.is_integer() && p.is_positive() {
        fmt_rational(p)
    } else {
        format!("{{{}}}", fmt_rational(p))
    }
}

fn fmt_term_factors(table: &VarTable, d: &DerivIndex, m: &Monomial) -> Vec<String> {
    let mut out = Vec::new();
    if !m.exp_weight.is_zero() {
        let w = &m.exp_weight;
        let s = if w.is_one() {
            "t".to_string()
        } else if (-w).is_one() {
            "-t".to_string()
        } else {
            format!("{}*t", fmt_rational(w))
        };
        out.push(format!("e^{{{s}}}"));
    }
    for (v, p) in table.vars.iter().zip(&m.powers) {
        if p.is_zero() {
            continue;
        }
        if p.is_one() {
            out.push(v.name.clone());
        } else {
            out.push(format!("{}^{}", v.name, fmt_exponent(p)));
        }
    }
    let dname = |name: &str, k: u32| {
        if k == 1 {
            format!("d[{name}]")
        } else {
            format!("d[{name}]^{k}")
        }
    };
    for (v, &k) in table.vars.iter().zip(&d.orders) {
        if k > 0 {
            out.push(dname(&v.name, k));
        }
    }
    if d.t_order > 0 {
        out.push(dname(TIME, d.t_order));
    }
    out
}

impl fmt::Display for WeylElement {
    /// Highest term first; terms joined by ` + ` / ` - `, factors by ` * `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, ((d, m), c)) in self.terms.iter().rev().enumerate() {
            let mut ctext = c.to_string();
            let neg = ctext.starts_with('-');
            if neg {
                ctext.remove(0);
            }
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut parts = fmt_term_factors(&self.table, d, m);
            if ctext != "1" || parts.is_empty() {
                parts.insert(0, ctext);
            }
            write!(f, "{}", parts.join(" * "))?;
        }
        Ok(())
    }
}

/// Splits at ` + ` / ` - ` outside brackets, keeping the sign with each piece.
fn split_terms(text: &str) -> Result<Vec<(bool, String)>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut neg = false;
    let s = text.trim();
    let (mut neg_first, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let chars: Vec<char> = body.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            '(' | '{' | '[' => depth += 1,
            ')' | '}' | ']' => depth -= 1,
            _ => {}
        }
        if depth == 0
            && ch == ' '
            && i + 2 < chars.len()
            && (chars[i + 1] == '+' || chars[i + 1] == '-')
            && chars[i + 2] == ' '
        {
            out.push((neg || neg_first, std::mem::take(&mut cur)));
            neg_first = false;
            neg = chars[i + 1] == '-';
            i += 3;
            continue;
        }
        cur.push(ch);
        i += 1;
    }
    if depth != 0 {
        return Err(WeylError::Parse(text.to_string()));
    }
    out.push((neg || neg_first, cur));
    Ok(out)
}

fn parse_exponent(s: &str) -> Result<Rational> {
    let inner = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')).unwrap_or(s);
    Ok(parse_rational(inner)?)
}

fn parse_element(table: &Arc<VarTable>, text: &str) -> Result<WeylElement> {
    let bad = || WeylError::Parse(text.to_string());
    if text.trim() == "0" {
        return Ok(WeylElement::zero(table));
    }
    let n = table.len();
    let mut out = WeylElement::zero(table);
    for (neg, piece) in split_terms(text)? {
        let mut coef = Coef::one();
        let mut m = Monomial::one(n);
        let mut d = DerivIndex::none(n);
        for (k, factor) in piece.split(" * ").enumerate() {
            let factor = factor.trim();
            if factor.is_empty() {
                return Err(bad());
            }
            if let Some(rest) = factor.strip_prefix("e^{").and_then(|r| r.strip_suffix('}')) {
                let w = match rest {
                    "t" => Rational::one(),
                    "-t" => -Rational::one(),
                    _ => parse_rational(rest.strip_suffix("*t").ok_or_else(bad)?)?,
                };
                m.exp_weight += w;
            } else if let Some(rest) = factor.strip_prefix("d[") {
                let (name, tail) = rest.split_once(']').ok_or_else(bad)?;
                let order = match tail.strip_prefix('^') {
                    Some(e) => e.parse::<u32>().map_err(|_| bad())?,
                    None if tail.is_empty() => 1,
                    None => return Err(bad()),
                };
                if table.has_time && name == TIME {
                    d.t_order += order;
                } else {
                    d.orders[table.index(name)?] += order;
                }
            } else {
                let (name, e) = match factor.split_once('^') {
                    Some((nm, e)) => (nm, Some(e)),
                    None => (factor, None),
                };
                match table.index(name) {
                    Ok(i) => {
                        let p = match e {
                            Some(e) => parse_exponent(e)?,
                            None => Rational::one(),
                        };
                        m.powers[i] += p;
                    }
                    Err(_) if k == 0 => {
                        coef = factor.parse::<Coef>().map_err(|_| bad())?;
                    }
                    Err(err) => return Err(err),
                }
            }
        }
        if neg {
            coef = -coef;
        }
        out = out + WeylElement::term(table, coef, m, d)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn plain() -> Arc<VarTable> {
        VarTable::new(
            vec![("x", ExpDomain::NatPow), ("y", ExpDomain::NatPow), ("u", ExpDomain::NatPow)],
            false,
        )
        .unwrap()
    }

    fn timed() -> Arc<VarTable> {
        VarTable::new(
            vec![("x", ExpDomain::rat(2)), ("y", ExpDomain::NatPow), ("u", ExpDomain::NatPow)],
            true,
        )
        .unwrap()
    }

    fn p(table: &Arc<VarTable>, s: &str) -> WeylElement {
        WeylElement::parse(table, s).unwrap()
    }

    #[test]
    fn heisenberg_relation() {
        let t = plain();
        let dx = p(&t, "d[x]");
        let x = p(&t, "x");
        assert_eq!(dx.mul(&x).unwrap(), p(&t, "x * d[x] + 1"));
    }

    #[test]
    fn exponential_shift() {
        let t = timed();
        let lhs = p(&t, "d[t]").mul(&p(&t, "e^{-t}")).unwrap();
        assert_eq!(lhs, p(&t, "e^{-t} * d[t] - e^{-t}"));
    }

    #[test]
    fn rational_falling_factorial() {
        let t = timed();
        let lhs = p(&t, "d[x]").mul(&p(&t, "x^{1/2}")).unwrap();
        assert_eq!(lhs, p(&t, "x^{1/2} * d[x] + 1/2 * x^{-1/2}"));
    }

    #[test]
    fn domain_violation_on_negative_nat_power() {
        let t = plain();
        assert!(matches!(
            WeylElement::var_pow(&t, "y", rat_int(-1)),
            Err(WeylError::DomainViolation { .. })
        ));
        let t2 = timed();
        assert!(WeylElement::var_pow(&t2, "x", rat(1, 3)).is_err());
        assert!(WeylElement::var_pow(&t2, "x", rat(-3, 2)).is_ok());
    }

    #[test]
    fn second_derivative_kills_linear_power() {
        let t = plain();
        let lhs = p(&t, "d[x]^2").mul(&p(&t, "x")).unwrap();
        assert_eq!(lhs, p(&t, "x * d[x]^2 + 2 * d[x]"));
    }

    #[test]
    fn apply_examples() {
        let t = plain();
        let h = p(&t, "x * d[x] + y * d[y] + gamma * d[y] * d[u] - xi * u * d[x]");
        let y = FockState::new(p(&t, "y")).unwrap();
        assert_eq!(h.apply(&y).unwrap(), y);
        let zero = FockState::new(WeylElement::zero(&t)).unwrap();
        assert!(h.apply(&zero).unwrap().is_zero());
        assert_eq!(FockState::new(p(&t, "d[x]")), Err(WeylError::NotDerivativeFree));
    }

    #[test]
    fn euler_operator_is_dilation_invariant() {
        let t = plain();
        let e = p(&t, "x * d[x]");
        let sigma = SubstitutionMap::identity().with("x", Coef::xi());
        assert_eq!(e.substitute(&sigma).unwrap(), e);
        let dx = p(&t, "d[x]");
        assert_eq!(dx.substitute(&sigma).unwrap(), p(&t, "1/xi * d[x]"));
        let zero = SubstitutionMap::identity().with("x", Coef::zero());
        assert_eq!(e.substitute(&zero), Err(WeylError::ZeroScaleFactor("x".into())));
    }

    #[test]
    fn free_to_osc_examples() {
        let t = timed();
        let tau = tau_table(&t).unwrap();
        let zp = p(&t, "e^{-t} * d[t] - e^{-t} * x * d[x] - e^{-t} * y * d[y]");
        assert_eq!(free_to_osc(&zp, &tau).unwrap(), p(&tau, "d[tau]"));
        let v = p(&t, "gamma * e^{-t} * d[x]");
        assert_eq!(free_to_osc(&v, &tau).unwrap(), p(&tau, "gamma * d[x]"));
        let one = WeylElement::one(&t);
        assert_eq!(free_to_osc(&one, &tau).unwrap(), WeylElement::one(&tau));
        let half = p(&t, "x^{1/2}");
        assert!(matches!(free_to_osc(&half, &tau), Err(WeylError::NonIntegerTimeWeight(_))));
    }

    #[test]
    fn degree_examples() {
        let t = VarTable::new(
            vec![("tau", ExpDomain::IntPow), ("x", ExpDomain::NatPow), ("y", ExpDomain::NatPow), ("u", ExpDomain::NatPow)],
            false,
        )
        .unwrap();
        let z0 = p(&t, "-tau * d[tau] - x * d[x] - y * d[y] - 1");
        let v1 = p(&t, "gamma * d[x]");
        let v0 = p(&t, "gamma * tau * d[x] + gamma/xi * d[u]");
        assert_eq!(degree_of(&v1, &z0).unwrap(), Some(rat_int(1)));
        assert_eq!(degree_of(&z0, &z0).unwrap(), Some(rat_int(0)));
        assert_eq!(degree_of(&(&v1 + &v0), &z0).unwrap(), None);
    }

    #[test]
    fn left_division() {
        let t = timed();
        let omega = p(&t, "-d[t] + x * d[x] + y * d[y] + gamma * d[y] * d[u]");
        let f = p(&t, "3 * e^{-2*t} * x^{-3/2}");
        let prod = f.mul(&omega).unwrap();
        assert_eq!(prod.left_divide(&omega, 64).unwrap(), Some(f));
        let not_multiple = &prod + &p(&t, "d[u]");
        assert_eq!(not_multiple.left_divide(&omega, 64).unwrap(), None);
    }

    #[test]
    fn text_round_trip() {
        let t = timed();
        for s in [
            "0",
            "1",
            "-d[t]",
            "e^{3/2*t} * x^{-1/2} * y^2 * d[u]^2 * d[t]",
            "(gamma + xi)/xi * u - 2/gamma * e^{-t} * x + 7/3",
            "-gamma^2*xi * y * d[y] - e^{t}",
        ] {
            let e = p(&t, s);
            assert_eq!(p(&t, &e.to_string()), e, "{s}");
        }
        assert!(WeylElement::parse(&t, "q * d[x]").is_err());
        assert!(WeylElement::parse(&t, "d[x").is_err());
    }

    #[test]
    fn table_validation() {
        assert!(VarTable::new(vec![("x", ExpDomain::NatPow), ("x", ExpDomain::NatPow)], false).is_err());
        assert!(VarTable::new(vec![("t", ExpDomain::NatPow)], true).is_err());
        assert!(VarTable::new(vec![("gamma", ExpDomain::NatPow)], false).is_err());
        let a = plain();
        let b = VarTable::new(vec![("x", ExpDomain::NatPow)], false).unwrap();
        assert_eq!(
            WeylElement::one(&a).mul(&WeylElement::one(&b)),
            Err(WeylError::TableMismatch)
        );
    }
}
