//! Bounded random elements for the property suites.

#![allow(dead_code)]

use std::sync::Arc;

use cga_core::scalar::{rat, Coef};
use cga_core::weyl::{DerivIndex, ExpDomain, FockState, Monomial, VarTable, WeylElement};
use rand::Rng;

/// `t`; `x` natural, `y` integer, `u` half-integer powers.
pub fn mixed_table() -> Arc<VarTable> {
    VarTable::new(
        vec![("x", ExpDomain::NatPow), ("y", ExpDomain::IntPow), ("u", ExpDomain::rat(2))],
        true,
    )
    .unwrap()
}

pub fn random_coef<R: Rng>(rng: &mut R) -> Coef {
    let mut c = Coef::from(rat(rng.gen_range(-5..=5), rng.gen_range(1..=3)));
    if c.is_zero() {
        c = Coef::one();
    }
    match rng.gen_range(0..4) {
        0 => &c * &Coef::gamma(),
        1 => &c * &Coef::xi().recip().unwrap(),
        _ => c,
    }
}

fn random_monomial<R: Rng>(rng: &mut R, n: usize) -> Monomial {
    let mut m = Monomial::one(n);
    m.exp_weight = rat(rng.gen_range(-2..=2), rng.gen_range(1..=2));
    m.powers[0] = rat(rng.gen_range(0..=2), 1);
    m.powers[1] = rat(rng.gen_range(-2..=2), 1);
    m.powers[2] = rat(rng.gen_range(0..=4), 2);
    m
}

pub fn random_element<R: Rng>(rng: &mut R, table: &Arc<VarTable>) -> WeylElement {
    let n = table.len();
    let mut out = WeylElement::zero(table);
    for _ in 0..rng.gen_range(1..=3) {
        let mut d = DerivIndex::none(n);
        for o in d.orders.iter_mut() {
            *o = rng.gen_range(0..=1);
        }
        d.t_order = rng.gen_range(0..=1);
        let t = WeylElement::term(table, random_coef(rng), random_monomial(rng, n), d).unwrap();
        out = out + t;
    }
    out
}

pub fn random_state<R: Rng>(rng: &mut R, table: &Arc<VarTable>) -> FockState {
    let n = table.len();
    let mut out = WeylElement::zero(table);
    for _ in 0..rng.gen_range(1..=3) {
        let t = WeylElement::term(table, random_coef(rng), random_monomial(rng, n), DerivIndex::none(n)).unwrap();
        out = out + t;
    }
    FockState::new(out).unwrap()
}
