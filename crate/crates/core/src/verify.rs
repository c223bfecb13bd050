//! Exact checks: structure-constant tables, additive-constant calibration,
//! on-shell factorization, sl(2) closure, the general-ℓ invariant, the
//! similarity map and Jacobi identities.
//!
//! Every check returns a [`Section`] with one [`Record`] per relation, in
//! table order, so reports are deterministic.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::realizations::{
    build_free_general, build_free_l1, build_ladder, build_osc_l1, build_triplet, i_const, omega_operator,
    signed_index, xi0_omega, xi0_triplet, Convention, GeneratorFamily, InvariantTriplet, ParamValue,
    RealizationError, Xi0Kind,
};
use crate::report::{Record, Section, Status};
use crate::scalar::{fmt_rational, parse_rational, rat, rat_int, Coef, Param, Rational, ScalarError};
use crate::weyl::{free_to_osc, SubstitutionMap, VarTable, WeylElement, WeylError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("calibration system is inconsistent; minimal failing relations: {}", .0.join(", "))]
    InconsistentSystem(Vec<String>),
    #[error(transparent)]
    Realization(RealizationError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

impl From<RealizationError> for VerifyError {
    fn from(e: RealizationError) -> Self {
        match e {
            RealizationError::UnknownGenerator(n) => VerifyError::UnknownGenerator(n),
            other => VerifyError::Realization(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, VerifyError>;

/// Cap on leading-term division steps; the factors met here have a handful
/// of terms.
const DIVISION_STEPS: usize = 512;

/// A formal combination `Σ c_i g_i + s` of generator names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinComb {
    pub terms: Vec<(Coef, String)>,
    pub scalar: Coef,
}

impl Default for LinComb {
    fn default() -> Self {
        Self::zero()
    }
}

impl LinComb {
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            scalar: Coef::zero(),
        }
    }

    pub fn gen(name: &str) -> Self {
        Self::zero().plus(Coef::one(), name)
    }

    pub fn constant(c: impl Into<Coef>) -> Self {
        Self {
            terms: Vec::new(),
            scalar: c.into(),
        }
    }

    pub fn term(c: impl Into<Coef>, name: &str) -> Self {
        Self::zero().plus(c, name)
    }

    pub fn plus(mut self, c: impl Into<Coef>, name: &str) -> Self {
        let c = c.into();
        if !c.is_zero() {
            self.terms.push((c, name.to_string()));
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.scalar.is_zero()
    }

    pub fn eval(&self, fam: &GeneratorFamily) -> Result<WeylElement> {
        let mut out = WeylElement::scalar(&fam.table, self.scalar.clone());
        for (c, n) in &self.terms {
            out = out + fam.resolve(n)?.scale(c);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (c, n) in &self.terms {
            let s = if c.is_one() {
                n.clone()
            } else if (-c).is_one() {
                format!("-{n}")
            } else if c.as_rational().is_some() {
                format!("{c}*{n}")
            } else {
                format!("({c})*{n}")
            };
            parts.push(s);
        }
        if !self.scalar.is_zero() || parts.is_empty() {
            parts.push(self.scalar.to_string());
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            match p.strip_prefix('-') {
                Some(rest) => {
                    out.push_str(" - ");
                    out.push_str(rest);
                }
                None => {
                    out.push_str(" + ");
                    out.push_str(p);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub a: String,
    pub b: String,
    pub rhs: LinComb,
}

impl Relation {
    pub fn new(a: &str, b: &str, rhs: LinComb) -> Self {
        Self {
            a: a.to_string(),
            b: b.to_string(),
            rhs,
        }
    }

    pub fn lhs_text(&self) -> String {
        format!("[{}, {}]", self.a, self.b)
    }
}

/// Commutation relations. With `closed`, every pair of family generators
/// not listed is asserted to commute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTable {
    pub name: String,
    pub entries: Vec<Relation>,
    pub closed: bool,
}

impl RelationTable {
    pub fn new(name: &str, closed: bool) -> Self {
        Self {
            name: name.to_string(),
            entries: Vec::new(),
            closed,
        }
    }

    pub fn push(&mut self, a: &str, b: &str, rhs: LinComb) {
        self.entries.push(Relation::new(a, b, rhs));
    }

    /// Listed entries first, then the implied commuting pairs in family
    /// order.
    pub fn expand(&self, fam: &GeneratorFamily) -> Result<Vec<Relation>> {
        let mut out = self.entries.clone();
        for r in &self.entries {
            for n in [&r.a, &r.b] {
                fam.resolve(n)?;
            }
            for (_, n) in &r.rhs.terms {
                fam.resolve(n)?;
            }
        }
        if self.closed {
            let listed: BTreeSet<(String, String)> = self
                .entries
                .iter()
                .flat_map(|r| [(r.a.clone(), r.b.clone()), (r.b.clone(), r.a.clone())])
                .collect();
            let names: Vec<&str> = fam.names().collect();
            for (i, a) in names.iter().enumerate() {
                for b in &names[i + 1..] {
                    if !listed.contains(&(a.to_string(), b.to_string())) {
                        out.push(Relation::new(a, b, LinComb::zero()));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `[a, b] - rhs` for one relation.
pub fn residual(fam: &GeneratorFamily, r: &Relation) -> Result<WeylElement> {
    let lhs = fam.resolve(&r.a)?.commutator(&fam.resolve(&r.b)?)?;
    Ok(lhs - r.rhs.eval(fam)?)
}

fn base_section(name: &str, fam: &GeneratorFamily) -> Section {
    let mut s = Section::new(name, &fam.name).with_params(&fam.params);
    s.params.insert("convention".into(), fam.convention.name().into());
    s
}

fn relation_record(fam: &GeneratorFamily, r: &Relation, res: &WeylElement, ok: Status) -> Record {
    let status = if res.is_zero() { ok } else { Status::Failed };
    Record::new(&fam.name, r.lhs_text(), r.rhs.to_text(), status).residual(res.to_text())
}

/// Checks every listed (and, for closed tables, every implied) relation.
pub fn verify_table(fam: &GeneratorFamily, table: &RelationTable) -> Result<Section> {
    let mut s = base_section(&table.name, fam);
    for r in table.expand(fam)? {
        let res = residual(fam, &r)?;
        s.push(relation_record(fam, &r, &res, Status::Exact));
    }
    Ok(s)
}

/// Additive shifts `g ↦ g + δ_g`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Calibration {
    /// Nonzero shifts only.
    pub deltas: BTreeMap<String, Coef>,
}

impl Calibration {
    pub fn is_trivial(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn texts(&self) -> BTreeMap<String, String> {
        self.deltas.iter().map(|(g, d)| (g.clone(), d.to_string())).collect()
    }
}

struct Equation {
    label: String,
    coefs: BTreeMap<usize, Coef>,
    rhs: Coef,
}

/// Solves `Σ_j c_ij δ_j = r_i` exactly. Free unknowns are set to zero.
fn solve_linear(eqs: &[&Equation], n: usize) -> Result<Option<Vec<Coef>>> {
    let mut rows: Vec<Vec<Coef>> = eqs
        .iter()
        .map(|e| {
            let mut row = vec![Coef::zero(); n + 1];
            for (j, c) in &e.coefs {
                row[*j] = c.clone();
            }
            row[n] = e.rhs.clone();
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r0 = 0;
    for col in 0..n {
        let Some(p) = (r0..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r0, p);
        let lead = rows[r0][col].clone();
        for x in &mut rows[r0][col..=n] {
            *x = x.checked_div(&lead)?;
        }
        let pivot = rows[r0].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r0 && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, p) in row[col..=n].iter_mut().zip(&pivot[col..=n]) {
                    *x = &*x - &(&f * p);
                }
            }
        }
        pivots.push(col);
        r0 += 1;
    }
    if rows[r0..].iter().any(|row| !row[n].is_zero()) {
        return Ok(None);
    }
    let mut x = vec![Coef::zero(); n];
    for (i, &col) in pivots.iter().enumerate() {
        x[col] = rows[i][n].clone();
    }
    Ok(Some(x))
}

/// Finds additive constants making every relation of `table` hold, then
/// re-verifies the shifted family. Scalar generators are not shifted.
pub fn calibrate_constants(fam: &GeneratorFamily, table: &RelationTable) -> Result<(Calibration, Section)> {
    let relations = table.expand(fam)?;
    let unknowns: Vec<String> = fam
        .generators()
        .iter()
        .filter(|(_, g)| g.as_scalar().is_none())
        .map(|(n, _)| n.clone())
        .collect();
    let index: BTreeMap<&str, usize> = unknowns.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut eqs = Vec::new();
    let mut raw = Vec::new();
    for r in &relations {
        let res = residual(fam, r)?;
        let Some(c) = res.as_scalar() else {
            return Err(VerifyError::InconsistentSystem(vec![r.lhs_text()]));
        };
        let mut coefs = BTreeMap::new();
        for (k, n) in &r.rhs.terms {
            if let Some(&j) = index.get(n.as_str()) {
                let slot: &mut Coef = coefs.entry(j).or_insert_with(Coef::zero);
                *slot = &*slot + k;
            }
        }
        coefs.retain(|_, c: &mut Coef| !c.is_zero());
        eqs.push(Equation {
            label: r.lhs_text(),
            coefs,
            rhs: c,
        });
        raw.push(res.is_zero());
    }

    let all: Vec<&Equation> = eqs.iter().collect();
    let Some(x) = solve_linear(&all, unknowns.len())? else {
        // deletion filter down to a minimal inconsistent subset
        let mut keep = all;
        let mut i = 0;
        while i < keep.len() {
            let mut trial = keep.clone();
            trial.remove(i);
            if solve_linear(&trial, unknowns.len())?.is_none() {
                keep = trial;
            } else {
                i += 1;
            }
        }
        return Err(VerifyError::InconsistentSystem(keep.iter().map(|e| e.label.clone()).collect()));
    };

    let deltas: BTreeMap<String, Coef> = unknowns
        .iter()
        .zip(x)
        .filter(|(_, d)| !d.is_zero())
        .map(|(n, d)| (n.clone(), d))
        .collect();
    let cal = Calibration { deltas };
    let shifted = fam.shifted(&cal.deltas)?;
    let mut s = base_section(&table.name, fam);
    s.calibration = cal.texts();
    for (r, was_exact) in relations.iter().zip(raw) {
        let res = residual(&shifted, r)?;
        let ok = if was_exact { Status::Exact } else { Status::ExactAfterCalibration };
        s.push(relation_record(fam, r, &res, ok));
    }
    Ok((cal, s))
}

fn param_coef(fam: &GeneratorFamily, key: &str, p: Param) -> Result<Coef> {
    match fam.params.get(key).map(String::as_str) {
        None | Some("symbolic") => Ok(Coef::param(p)),
        Some(v) => Ok(Coef::from(parse_rational(v)?)),
    }
}

/// Structure constants of the ℓ = 1 families, including `q`.
pub fn structure_table_l1(fam: &GeneratorFamily) -> Result<RelationTable> {
    let gamma = param_coef(fam, "gamma", Param::Gamma)?;
    let xi = param_coef(fam, "xi", Param::Xi)?;
    let g_over_x = gamma.checked_div(&xi)?;
    let mut t = RelationTable::new("structure constants (l = 1)", true);
    t.push("z0", "z+", LinComb::gen("z+"));
    t.push("z0", "z-", LinComb::term(-1, "z-"));
    t.push("z+", "z-", LinComb::term(2, "z0"));
    for f in ["v", "w"] {
        for k in [1i64, 0, -1] {
            let g = format!("{f}{}", signed_index(k));
            let up = format!("{f}{}", signed_index(k + 1));
            let down = format!("{f}{}", signed_index(k - 1));
            t.push("z0", &g, LinComb::term(k, &g));
            t.push("z+", &g, LinComb::term(1 - k, &up));
            t.push("z-", &g, LinComb::term(1 + k, &down));
            t.push("r", &g, LinComb::term(if f == "v" { 1 } else { -1 }, &g));
        }
    }
    t.push("v+1", "w-1", LinComb::constant(-2));
    t.push("v0", "w0", LinComb::constant(1));
    t.push("v-1", "w+1", LinComb::constant(-2));
    t.push("r", "q", LinComb::term(-2, "q"));
    for k in ["+1", "0", "-1"] {
        t.push(&format!("v{k}"), "q", LinComb::term(g_over_x.clone(), &format!("w{k}")));
    }
    Ok(t)
}

/// Structure constants of the general-ℓ family.
pub fn structure_table_general(l: u32) -> RelationTable {
    let li = i64::from(l);
    let mut t = RelationTable::new(&format!("structure constants (l = {l})"), true);
    t.push("z0", "z+", LinComb::gen("z+"));
    t.push("z0", "z-", LinComb::term(-1, "z-"));
    t.push("z+", "z-", LinComb::term(2, "z0"));
    for f in ["v", "w"] {
        for a in (-li..=li).rev() {
            let g = format!("{f}{}", signed_index(a));
            t.push("z0", &g, LinComb::term(a, &g));
            let up = if a < li { LinComb::term(li - a, &format!("{f}{}", signed_index(a + 1))) } else { LinComb::zero() };
            t.push("z+", &g, up);
            let down = if a > -li { LinComb::term(li + a, &format!("{f}{}", signed_index(a - 1))) } else { LinComb::zero() };
            t.push("z-", &g, down);
            t.push("r", &g, LinComb::term(if f == "v" { 1 } else { -1 }, &g));
        }
    }
    for n in (0..=li).rev() {
        let c = Coef::from(-i_const(l, l + n as u32));
        t.push(&format!("v{}", signed_index(n)), &format!("w{}", signed_index(-n)), LinComb::constant(c.clone()));
        if n > 0 {
            t.push(&format!("v{}", signed_index(-n)), &format!("w{}", signed_index(n)), LinComb::constant(c));
        }
    }
    t
}

/// The free family with the calibration against [`structure_table_l1`] applied.
pub fn calibrated_free_l1(gamma: &ParamValue, xi: &ParamValue) -> Result<(GeneratorFamily, Calibration)> {
    let fam = build_free_l1(gamma, xi)?;
    let (cal, _) = calibrate_constants(&fam, &structure_table_l1(&fam)?)?;
    Ok((fam.shifted(&cal.deltas)?, cal))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OnShellOutcome {
    Commutes,
    /// `[g, Ω] = f Ω` with derivative-free `f`.
    Factor(WeylElement),
    /// The commutator is not a left multiple of `Ω`; carries the commutator.
    Failed(WeylElement),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnShellWitness {
    pub generator: String,
    pub omega: String,
    pub outcome: OnShellOutcome,
}

impl OnShellWitness {
    /// The multiplier, zero when the pair commutes.
    pub fn factor(&self, table: &std::sync::Arc<VarTable>) -> Option<WeylElement> {
        match &self.outcome {
            OnShellOutcome::Commutes => Some(WeylElement::zero(table)),
            OnShellOutcome::Factor(f) => Some(f.clone()),
            OnShellOutcome::Failed(_) => None,
        }
    }
}

pub fn onshell_factor(g: &WeylElement, omega: &WeylElement) -> Result<OnShellOutcome> {
    let c = g.commutator(omega)?;
    if c.is_zero() {
        return Ok(OnShellOutcome::Commutes);
    }
    match c.left_divide(omega, DIVISION_STEPS)? {
        Some(f) => {
            debug_assert!(f.is_derivative_free());
            Ok(OnShellOutcome::Factor(f))
        }
        None => Ok(OnShellOutcome::Failed(c)),
    }
}

pub fn onshell_check(fam: &GeneratorFamily, omegas: &[(String, WeylElement)]) -> Result<Vec<OnShellWitness>> {
    let mut out = Vec::new();
    for (g, ge) in fam.generators() {
        for (o, oe) in omegas {
            out.push(OnShellWitness {
                generator: g.clone(),
                omega: o.clone(),
                outcome: onshell_factor(ge, oe)?,
            });
        }
    }
    Ok(out)
}

pub fn triplet_named(tr: &InvariantTriplet) -> Vec<(String, WeylElement)> {
    tr.named().iter().map(|(n, e)| (n.to_string(), (*e).clone())).collect()
}

/// Nonzero multipliers keyed by (generator, Ω); every other pair commutes.
pub type FactorTable = BTreeMap<(String, String), WeylElement>;

/// Multipliers of an ℓ = 1 triplet. `unit` is `tau` in the free picture and
/// `e^{t}` in the oscillator picture.
pub fn l1_factor_table(unit: &WeylElement) -> Result<FactorTable> {
    let table = unit.table();
    let inv = if table.has_time() {
        WeylElement::parse(table, "e^{-t}")?
    } else {
        WeylElement::parse(table, "tau^{-1}")?
    };
    let key = |g: &str, o: &str| (g.to_string(), o.to_string());
    let mut m = FactorTable::new();
    m.insert(key("z0", "Omega+1"), WeylElement::one(table));
    m.insert(key("z0", "Omega-1"), WeylElement::scalar(table, -1));
    m.insert(key("z+", "Omega0"), inv.clone());
    m.insert(key("z+", "Omega-1"), inv.scale(&Coef::int(2)));
    m.insert(key("z-", "Omega+1"), unit.scale(&Coef::int(2)));
    m.insert(key("z-", "Omega0"), unit.clone());
    Ok(m)
}

/// Multipliers `[j±(n), Ω] = ω₂ κⁿ e^{∓ω₂t}` for the ξ = 0 family.
pub fn xi0_factor_table(fam: &GeneratorFamily) -> Result<FactorTable> {
    let w2 = xi0_omega(fam, "omega2")?;
    let n = parse_rational(&fam.params["N"])?.to_integer();
    let n: i64 = n.try_into().unwrap_or(0);
    let mut m = FactorTable::new();
    for i in -n..=n {
        let kappa = fam.resolve(&Xi0Kind::Theta.indexed(i))?;
        for (kind, sign) in [(Xi0Kind::JPlus, -1), (Xi0Kind::JMinus, 1)] {
            let e = WeylElement::exp_t(&fam.table, &w2 * rat_int(sign))?;
            let f = kappa.mul(&e)?.scale_rat(&w2);
            m.insert((kind.indexed(i), "Omega".to_string()), f);
        }
    }
    Ok(m)
}

fn factor_text(o: &OnShellOutcome) -> String {
    match o {
        OnShellOutcome::Commutes => "commutes".into(),
        OnShellOutcome::Factor(f) => f.to_text(),
        OnShellOutcome::Failed(_) => String::new(),
    }
}

/// Every generator against every Ω, compared with the expected multipliers.
pub fn onshell_section(
    name: &str,
    fam: &GeneratorFamily,
    omegas: &[(String, WeylElement)],
    expected: &FactorTable,
) -> Result<Section> {
    let mut s = base_section(name, fam);
    for w in onshell_check(fam, omegas)? {
        let exp = expected
            .get(&(w.generator.clone(), w.omega.clone()))
            .cloned()
            .unwrap_or_else(|| WeylElement::zero(&fam.table));
        let exp_text = if exp.is_zero() { "0".to_string() } else { format!("({exp}) * {}", w.omega) };
        let lhs = format!("[{}, {}]", w.generator, w.omega);
        let rec = match w.factor(&fam.table) {
            Some(f) if f == exp => Record::new(&fam.name, lhs, exp_text, Status::Exact),
            Some(f) => Record::new(&fam.name, lhs, exp_text, Status::Mismatch).residual((f - exp).to_text()),
            None => {
                let OnShellOutcome::Failed(c) = &w.outcome else { unreachable!() };
                Record::new(&fam.name, lhs, exp_text, Status::Failed).residual(c.to_text())
            }
        };
        s.push(rec.factor(factor_text(&w.outcome)));
    }
    Ok(s)
}

/// Whether every generator factorizes against `omega`, with one record
/// per generator.
pub fn rigidity_section(name: &str, fam: &GeneratorFamily, omega_name: &str, omega: &WeylElement) -> Result<Section> {
    let mut s = base_section(name, fam);
    for (g, ge) in fam.generators() {
        let o = onshell_factor(ge, omega)?;
        let lhs = format!("[{g}, {omega_name}]");
        let rec = match &o {
            OnShellOutcome::Failed(c) => {
                Record::new(&fam.name, lhs, format!("f * {omega_name}"), Status::Failed).residual(c.to_text())
            }
            _ => Record::new(&fam.name, lhs, format!("f * {omega_name}"), Status::Exact).factor(factor_text(&o)),
        };
        s.push(rec);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Free,
    Osc,
}

/// The deformed operator with `ω` in place of 1 in front of `y d[y]`,
/// tested against the calibrated ℓ = 1 family of the chosen picture.
pub fn omega_rigidity(picture: Picture, omega: &Rational) -> Result<Section> {
    let osc = build_osc_l1(&ParamValue::Symbolic, &ParamValue::Symbolic)?;
    let op = omega_operator(&osc, omega)?;
    let name = format!("Omega[omega={}]", fmt_rational(omega));
    let mut s = match picture {
        Picture::Osc => rigidity_section("omega rigidity", &osc, &name, &op)?,
        Picture::Free => {
            let (free, _) = calibrated_free_l1(&ParamValue::Symbolic, &ParamValue::Symbolic)?;
            let image = free_to_osc(&op, &free.table)?;
            rigidity_section("omega rigidity", &free, &name, &image)?
        }
    };
    s.params.insert("omega".into(), fmt_rational(omega));
    s.notes.push(format!("operator: {}", op.to_text()));
    Ok(s)
}

/// `[Ω₀, Ω±] = ±w Ω±` and `[Ω₊, Ω₋] = 2w Ω₀`.
pub fn sl2_records(family: &str, tr: &InvariantTriplet, weight: &Rational) -> Result<Vec<Record>> {
    let w = Coef::from(weight.clone());
    let checks = [
        ("[Omega0, Omega+1]", "w * Omega+1", tr.zero.commutator(&tr.plus)?, tr.plus.scale(&w)),
        ("[Omega0, Omega-1]", "-w * Omega-1", tr.zero.commutator(&tr.minus)?, tr.minus.scale(&w).neg()),
        (
            "[Omega+1, Omega-1]",
            "2*w * Omega0",
            tr.plus.commutator(&tr.minus)?,
            tr.zero.scale(&(&w * &Coef::int(2))),
        ),
    ];
    let wt = fmt_rational(weight);
    Ok(checks
        .into_iter()
        .map(|(lhs, exp, got, want)| {
            let res = got - want;
            let status = if res.is_zero() { Status::Exact } else { Status::Failed };
            Record::new(family, lhs, exp.replace('w', &wt), status).residual(res.to_text())
        })
        .collect())
}

pub fn verify_sl2(tr: &InvariantTriplet, weight: &Rational) -> Result<bool> {
    Ok(sl2_records("", tr, weight)?.iter().all(|r| r.status == Status::Exact))
}

/// Compares two elements: equal, off by a scalar, negated, rescaled or
/// unrelated. Returns the status, residual text and factor text.
pub fn classify(found: &WeylElement, expected: &WeylElement) -> (Status, String, String) {
    if found == expected {
        return (Status::Exact, "0".into(), String::new());
    }
    let diff = found - expected;
    if let Some(c) = diff.as_scalar() {
        return (Status::ConstantShift, c.to_string(), String::new());
    }
    if found == &expected.neg() {
        return (Status::SignFlip, diff.to_text(), "-1".into());
    }
    if let (Some((k1, c1)), Some((k2, c2))) = (found.leading_term(), expected.leading_term()) {
        if k1 == k2 {
            if let Ok(q) = c1.checked_div(c2) {
                if found == &expected.scale(&q) {
                    return (Status::Rescaled, diff.to_text(), q.to_string());
                }
            }
        }
    }
    (Status::Mismatch, diff.to_text(), String::new())
}

fn diff_record(family: &str, lhs: String, expected: String, found: &WeylElement, want: &WeylElement) -> Record {
    let (status, res, fac) = classify(found, want);
    Record::new(family, lhs, expected, status).residual(res).factor(fac)
}

/// Maps every oscillator generator and invariant operator to the `τ`
/// picture and compares with the free family as built, then with the
/// calibrated one.
pub fn verify_similarity() -> Result<Section> {
    let sym = ParamValue::Symbolic;
    let osc = build_osc_l1(&sym, &sym)?;
    let free = build_free_l1(&sym, &sym)?;
    let (cal, _) = calibrated_free_l1(&sym, &sym)?;
    let mut s = Section::new("similarity map", "osc-l1 -> free-l1");
    s.params = osc.params.clone();
    let image = |g: &WeylElement| free_to_osc(g, &free.table);
    for (n, g) in osc.generators() {
        let img = image(g)?;
        let want = free.resolve(n)?;
        s.push(diff_record("free-l1", format!("S({n})"), n.clone(), &img, &want));
    }
    let osc_tr = build_triplet(&osc)?;
    let free_tr = build_triplet(&free)?;
    for ((n, g), (_, want)) in osc_tr.named().into_iter().zip(free_tr.named()) {
        s.push(diff_record("free-l1", format!("S({n})"), n.to_string(), &image(g)?, want));
    }
    let cal_tr = build_triplet(&cal)?;
    s.push(diff_record(
        "free-l1 (calibrated)",
        "S(z0)".into(),
        "z0".into(),
        &image(&osc.resolve("z0")?)?,
        &cal.resolve("z0")?,
    ));
    s.push(diff_record("free-l1 (calibrated)", "S(Omega0)".into(), "Omega0".into(), &image(&osc_tr.zero)?, &cal_tr.zero));
    Ok(s)
}

/// `x ↦ x/ξ`, `y ↦ y/γ` applied to the unit-parameter free family, compared
/// with the symbolic one (both calibrated).
pub fn verify_dilation() -> Result<Section> {
    let one = ParamValue::int(1);
    let sym = ParamValue::Symbolic;
    let (unit, _) = calibrated_free_l1(&one, &one)?;
    let (full, _) = calibrated_free_l1(&sym, &sym)?;
    let sigma = SubstitutionMap::identity()
        .with("x", Coef::xi().recip()?)
        .with("y", Coef::gamma().recip()?);
    let mut s = Section::new("dilation", "free-l1(1,1) -> free-l1");
    s.params.insert("x".into(), "x/xi".into());
    s.params.insert("y".into(), "y/gamma".into());
    for (n, g) in unit.generators() {
        let img = g.retable(&full.table)?.substitute(&sigma)?;
        s.push(diff_record("free-l1", format!("D({n})"), n.clone(), &img, &full.resolve(n)?));
    }
    Ok(s)
}

/// `free-general(1)` against `free-l1(1,1)` with `x1 → x`, `y1 → y`.
pub fn compare_general_l1(convention: Convention) -> Result<Section> {
    let general = build_free_general(1, convention)?;
    let (l1, _) = calibrated_free_l1(&ParamValue::int(1), &ParamValue::int(1))?;
    let renamed = VarTable::new(
        general
            .table
            .vars()
            .iter()
            .map(|v| {
                let n = match v.name.as_str() {
                    "x1" => "x",
                    "y1" => "y",
                    other => other,
                };
                (n, v.domain.clone())
            })
            .collect::<Vec<_>>()
            .iter()
            .map(|(n, d)| (*n, d.clone()))
            .collect(),
        false,
    )?;
    let mut s = Section::new("general l = 1 against free-l1", "free-general(1)");
    s.params.insert("convention".into(), convention.name().into());
    for (n, g) in general.generators() {
        let moved = rename_table(g, &renamed)?.retable(&l1.table)?;
        s.push(diff_record("free-general(1)", n.clone(), n.clone(), &moved, &l1.resolve(n)?));
    }
    Ok(s)
}

/// Same element over a table with identical layout but other names.
fn rename_table(g: &WeylElement, target: &std::sync::Arc<VarTable>) -> Result<WeylElement> {
    let mut out = WeylElement::zero(target);
    for ((d, m), c) in g.terms() {
        out = out + WeylElement::term(target, c.clone(), m.clone(), d.clone())?;
    }
    Ok(out)
}

/// Table check of the general family under both signs of `z+`.
pub fn general_sign_report(l: u32) -> Result<Vec<Section>> {
    let mut out = Vec::new();
    for conv in [Convention::Verbatim, Convention::Corrected] {
        let fam = build_free_general(l, conv)?;
        let mut s = verify_table(&fam, &structure_table_general(l))?;
        let sign = if conv == Convention::Verbatim { "-d[tau]" } else { "+d[tau]" };
        s.notes.push(format!(
            "z+ = {sign}: {}",
            if s.passed() { "table holds" } else { "table fails" }
        ));
        out.push(s);
    }
    Ok(out)
}

fn check(family: &str, lhs: String, expected: String, got: WeylElement, want: &WeylElement) -> Record {
    let res = got - want.clone();
    let status = if res.is_zero() { Status::Exact } else { Status::Failed };
    Record::new(family, lhs, expected, status).residual(res.to_text())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    A,
    B,
}

/// Ladder operator with its canonical mode. `b0` and `b0†` are rewritten
/// through `b0 = -a0†`, `b0† = a0`.
struct LadderOp {
    name: String,
    elem: WeylElement,
    mode: Mode,
    n: usize,
    creation: bool,
    sign: i64,
}

fn ladder_ops(ls: &crate::realizations::LadderSet) -> Vec<LadderOp> {
    let mut ops = Vec::new();
    for n in 0..=ls.l as usize {
        let b_mode = |creation: bool| -> (Mode, bool, i64) {
            match (n, creation) {
                (0, false) => (Mode::A, true, -1),
                (0, true) => (Mode::A, false, 1),
                _ => (Mode::B, creation, 1),
            }
        };
        ops.push(LadderOp { name: format!("a{n}"), elem: ls.a[n].clone(), mode: Mode::A, n, creation: false, sign: 1 });
        ops.push(LadderOp { name: format!("a{n}^+"), elem: ls.a_dag[n].clone(), mode: Mode::A, n, creation: true, sign: 1 });
        let (m, c, s) = b_mode(false);
        ops.push(LadderOp { name: format!("b{n}"), elem: ls.b[n].clone(), mode: m, n, creation: c, sign: s });
        let (m, c, s) = b_mode(true);
        ops.push(LadderOp { name: format!("b{n}^+"), elem: ls.b_dag[n].clone(), mode: m, n, creation: c, sign: s });
    }
    ops
}

fn canonical_bracket(x: &LadderOp, y: &LadderOp) -> i64 {
    if x.mode != y.mode || x.n != y.n || x.creation == y.creation {
        return 0;
    }
    let base = if x.creation { -1 } else { 1 };
    base * x.sign * y.sign
}

/// Canonical commutation relations, the zero-mode identification, the two
/// forms of the degree-one invariant and the Cartan identity.
pub fn verify_general_invariant(l: u32, convention: Convention) -> Result<Section> {
    let ls = build_ladder(l, convention)?;
    let fam = &ls.family;
    let t = &fam.table;
    let name = format!("ladder({l})");
    let mut s = base_section(&format!("general invariant (l = {l})"), fam);
    s.family = name.clone();

    let ops = ladder_ops(&ls);
    for (i, x) in ops.iter().enumerate() {
        for y in &ops[i + 1..] {
            let want = canonical_bracket(x, y);
            s.push(check(
                &name,
                format!("[{}, {}]", x.name, y.name),
                want.to_string(),
                x.elem.commutator(&y.elem)?,
                &WeylElement::scalar(t, want),
            ));
        }
    }
    s.push(check(&name, "b0".into(), "-a0^+".into(), ls.b[0].clone(), &ls.a_dag[0].neg()));
    s.push(check(&name, "b0^+".into(), "a0".into(), ls.b_dag[0].clone(), &ls.a[0]));

    let explicit = ls.omega1_explicit()?;
    let printed = convention == Convention::Verbatim;
    let ladder = ls.omega1_ladder(printed)?;
    let form = if printed { "a_n^+ a_{n+1}^+" } else { "a_n^+ a_{n+1}" };
    s.push(check(&name, "Omega1".into(), format!("ladder form ({form})"), ladder, &explicit));

    let z0 = fam.resolve("z0")?;
    s.push(check(&name, "[z0, Omega1]".into(), "Omega1".into(), z0.commutator(&explicit)?, &explicit));

    let h = ls.hamiltonian()?;
    let lc = Coef::ratio(i64::from(l * (l + 1)), 2);
    let omega0 = &z0 + &h + WeylElement::scalar(t, lc);
    let cartan = fam.resolve("z-")?.commutator(&explicit)?;
    s.push(check(&name, "[z-, Omega1]".into(), "-2*Omega0".into(), cartan, &omega0.scale(&Coef::int(-2))));
    s.notes.push(format!("H = {}", h.to_text()));
    Ok(s)
}

/// Right-hand side of the loop, Witt and abelian relations for
/// `[k1(n), k2(m)]`, with `r = ω₂/ω₁`.
pub fn inf_bracket(k1: Xi0Kind, n: i64, k2: Xi0Kind, m: i64, omega2: &Rational, ratio: &Rational) -> LinComb {
    if let Some(c) = inf_forward(k1, n, k2, m, omega2, ratio) {
        return c;
    }
    match inf_forward(k2, m, k1, n, omega2, ratio) {
        Some(back) => LinComb {
            terms: back.terms.into_iter().map(|(c, name)| (-c, name)).collect(),
            scalar: -back.scalar,
        },
        None => LinComb::zero(),
    }
}

fn inf_forward(k1: Xi0Kind, n: i64, k2: Xi0Kind, m: i64, omega2: &Rational, ratio: &Rational) -> Option<LinComb> {
    use Xi0Kind::*;
    let w2 = Coef::from(omega2.clone());
    let r = Coef::from(ratio.clone());
    let half_w2 = Coef::from(omega2 * rat(1, 2));
    let g = |k: Xi0Kind, i: i64| k.indexed(i);
    let at = |c: &Coef, k: Xi0Kind, i: i64| LinComb::term(c.clone(), &g(k, i));
    let nm = n + m;
    match (k1, k2) {
        (J0, JPlus) => Some(at(&w2, JPlus, nm)),
        (J0, JMinus) => Some(at(&-&w2, JMinus, nm)),
        (JPlus, JMinus) => Some(at(&(&w2 * &Coef::int(2)), J0, nm)),
        (Chi, Chi) => Some(at(&(&r * &Coef::int(m - n)), Chi, nm)),
        (Chi, k @ (J0 | JPlus | JMinus | R | W | U | Theta)) => Some(at(&(&r * &Coef::int(m)), k, nm)),
        (Chi, Rho) => Some(at(&(&r * &Coef::int(m + 1)), Rho, nm)),
        (Chi, V) => Some(at(&(&r * &Coef::int(m - 1)), V, nm)),
        (J0, W) => Some(at(&-&half_w2, W, nm)),
        (J0, Rho) => Some(at(&half_w2, Rho, nm)),
        (J0, V) => Some(at(&-&half_w2, V, nm)),
        (J0, U) => Some(at(&half_w2, U, nm)),
        (JPlus, W) => Some(at(&w2, Rho, nm - 1)),
        (JPlus, V) => Some(at(&w2, U, nm - 1)),
        (JMinus, Rho) => Some(at(&w2, W, nm + 1)),
        (JMinus, U) => Some(at(&w2, V, nm + 1)),
        (R, W) => Some(at(&Coef::one(), W, nm)),
        (R, Rho) => Some(at(&Coef::one(), Rho, nm)),
        (R, V) => Some(at(&Coef::int(-1), V, nm)),
        (R, U) => Some(at(&Coef::int(-1), U, nm)),
        (Rho, V) => Some(at(&w2, Theta, nm)),
        (U, W) => Some(at(&w2, Theta, nm)),
        _ => None,
    }
}

fn xi0_ratio(fam: &GeneratorFamily) -> Result<(Rational, Rational)> {
    let w1 = xi0_omega(fam, "omega1")?;
    let w2 = xi0_omega(fam, "omega2")?;
    let r = &w2 / &w1;
    Ok((w2, r))
}

/// All pairs `k1(n), k2(m)` with `|n|, |m|, |n + m| ≤ N`.
pub fn inf_dim_table(fam: &GeneratorFamily, cutoff: u32) -> Result<RelationTable> {
    let (w2, r) = xi0_ratio(fam)?;
    let n = i64::from(cutoff);
    let gens: Vec<(Xi0Kind, i64)> = Xi0Kind::ALL.iter().flat_map(|&k| (-n..=n).map(move |i| (k, i))).collect();
    let mut t = RelationTable::new(&format!("infinite algebra (N = {cutoff})"), false);
    for (i, &(k1, a)) in gens.iter().enumerate() {
        for &(k2, b) in &gens[i + 1..] {
            if (a + b).abs() > n {
                continue;
            }
            t.push(&k1.indexed(a), &k2.indexed(b), inf_bracket(k1, a, k2, b, &w2, &r));
        }
    }
    Ok(t)
}

fn kind_of(name: &str) -> Option<Xi0Kind> {
    Xi0Kind::from_name(name.split_once('(')?.0)
}

/// Loop, Witt, abelian and Heisenberg-type relations, plus the claimed
/// semidirect structure: each bracket of two parts lands in the stated part.
pub fn verify_subalgebra_structure(fam: &GeneratorFamily, cutoff: u32) -> Result<Section> {
    use Xi0Kind::*;
    let table = inf_dim_table(fam, cutoff)?;
    let mut s = verify_table(fam, &table)?;
    s.name = format!("infinite algebra (N = {cutoff})");

    let h1 = [J0, JPlus, JMinus];
    let h2 = [Chi];
    let h3 = [R];
    let h4 = [W, U, V, Rho, Theta];
    let h: Vec<Xi0Kind> = [&h1[..], &h2, &h3].concat();
    type Claim<'a> = (&'a str, &'a [Xi0Kind], &'a [Xi0Kind], &'a [Xi0Kind]);
    let claims: [Claim; 8] = [
        ("[h1, h1] in h1", &h1, &h1, &h1),
        ("[h2, h2] in h2", &h2, &h2, &h2),
        ("[h3, h3] = 0", &h3, &h3, &[]),
        ("[h1, h3] = 0", &h1, &h3, &[]),
        ("[h2, h1] in h1", &h2, &h1, &h1),
        ("[h2, h3] in h3", &h2, &h3, &h3),
        ("[h, h4] in h4", &h, &h4, &h4),
        ("[h4, h4] in span(theta)", &h4, &h4, &[Theta]),
    ];
    let exact: BTreeSet<(String, String)> = s
        .records
        .iter()
        .filter(|r| r.status == Status::Exact)
        .filter_map(|r| {
            let inner = r.lhs.strip_prefix('[')?.strip_suffix(']')?;
            let (a, b) = inner.split_once(", ")?;
            Some((a.to_string(), b.to_string()))
        })
        .collect();
    for (label, p, q, target) in claims {
        let mut bad = Vec::new();
        for rel in &table.entries {
            let (Some(ka), Some(kb)) = (kind_of(&rel.a), kind_of(&rel.b)) else { continue };
            let inside = (p.contains(&ka) && q.contains(&kb)) || (p.contains(&kb) && q.contains(&ka));
            if !inside {
                continue;
            }
            let lands = rel.rhs.scalar.is_zero()
                && rel.rhs.terms.iter().all(|(_, n)| kind_of(n).is_some_and(|k| target.contains(&k)));
            if !lands || !exact.contains(&(rel.a.clone(), rel.b.clone())) {
                bad.push(rel.lhs_text());
            }
        }
        let status = if bad.is_empty() { Status::Exact } else { Status::Failed };
        s.push(Record::new(&fam.name, label, "closed", status).residual(if bad.is_empty() {
            "0".into()
        } else {
            bad.join("; ")
        }));
    }

    let omega = fam.resolve("Omega")?;
    let kappa = fam.resolve(&Theta.indexed(1))?;
    s.push(check(&fam.name, "[Omega, theta(1)]".into(), "0".into(), omega.commutator(&kappa)?, &WeylElement::zero(&fam.table)));
    Ok(s)
}

/// `[[a,b],c] + [[b,c],a] + [[c,a],b] = 0` over all triples; one record
/// per failing triple plus a summary record.
pub fn jacobi_section(fam: &GeneratorFamily) -> Result<Section> {
    let gens = fam.generators();
    let mut brackets: BTreeMap<(usize, usize), WeylElement> = BTreeMap::new();
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            brackets.insert((i, j), gens[i].1.commutator(&gens[j].1)?);
        }
    }
    let br = |i: usize, j: usize| -> WeylElement {
        if i < j {
            brackets[&(i, j)].clone()
        } else {
            brackets[&(j, i)].neg()
        }
    };
    let mut s = base_section("jacobi", fam);
    let mut count = 0u64;
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            for k in j + 1..gens.len() {
                count += 1;
                let sum = br(i, j).commutator(&gens[k].1)? + br(j, k).commutator(&gens[i].1)?
                    + br(k, i).commutator(&gens[j].1)?;
                if !sum.is_zero() {
                    let lhs = format!("jacobi({}, {}, {})", gens[i].0, gens[j].0, gens[k].0);
                    s.push(Record::new(&fam.name, lhs, "0", Status::Failed).residual(sum.to_text()));
                }
            }
        }
    }
    let status = if s.records.is_empty() { Status::Exact } else { Status::Failed };
    s.push(Record::new(&fam.name, format!("jacobi over {count} triples"), "0", status));
    Ok(s)
}

/// Everything the ℓ = 1 pictures claim: tables (with calibration for the
/// free picture), on-shell multipliers and sl(2) closure.
pub fn l1_suite(picture: Picture, gamma: &ParamValue, xi: &ParamValue, calibrate: bool) -> Result<Vec<Section>> {
    let mut out = Vec::new();
    let fam = match picture {
        Picture::Free => build_free_l1(gamma, xi)?,
        Picture::Osc => build_osc_l1(gamma, xi)?,
    };
    let table = structure_table_l1(&fam)?;
    let fam = if calibrate {
        let (cal, s) = calibrate_constants(&fam, &table)?;
        out.push(s);
        fam.shifted(&cal.deltas)?
    } else {
        out.push(verify_table(&fam, &table)?);
        fam
    };
    out.push(onshell_l1(&fam)?);
    let mut sl2 = base_section("sl(2) closure", &fam);
    for r in sl2_records(&fam.name, &build_triplet(&fam)?, &rat_int(1))? {
        sl2.push(r);
    }
    out.push(sl2);
    Ok(out)
}

/// On-shell witnesses of an ℓ = 1 family against its own triplet.
pub fn onshell_l1(fam: &GeneratorFamily) -> Result<Section> {
    let unit = if fam.table.has_time() {
        WeylElement::parse(&fam.table, "e^{t}")?
    } else {
        WeylElement::parse(&fam.table, "tau")?
    };
    onshell_section("on-shell", fam, &triplet_named(&build_triplet(fam)?), &l1_factor_table(&unit)?)
}

/// On-shell multipliers and sl(2) closure for the ξ = 0 family.
pub fn xi0_invariance(fam: &GeneratorFamily) -> Result<Vec<Section>> {
    let tr = xi0_triplet(fam)?;
    let omegas = vec![("Omega".to_string(), tr.zero.clone())];
    let on = onshell_section("on-shell", fam, &omegas, &xi0_factor_table(fam)?)?;
    let (w2, _) = xi0_ratio(fam)?;
    let mut sl2 = base_section("sl(2) closure", fam);
    for r in sl2_records(&fam.name, &tr, &w2)? {
        sl2.push(r);
    }
    Ok(vec![on, sl2])
}
