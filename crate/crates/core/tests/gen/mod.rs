//! Random terms for property tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;

use cur_kernel::{Name, Term, TermKind};
use proptest::prelude::*;

#[derive(Clone, Debug)]
pub struct Pool {
    pub vars: Vec<Name>,
    pub metas: Vec<Name>,
}

impl Pool {
    /// The process-wide pool, so that separately drawn terms share names.
    pub fn shared() -> &'static Pool {
        static POOL: OnceLock<Pool> = OnceLock::new();
        POOL.get_or_init(|| Pool {
            vars: ["x", "y", "z"].map(Name::fresh).to_vec(),
            metas: ["X", "Y", "W"].map(Name::fresh).to_vec(),
        })
    }
}

const CONSTS: [&str; 5] = ["Nat", "Z", "S", "Bool", "true"];

fn atoms(pool: &Pool, metas: bool) -> BoxedStrategy<Term> {
    let vars = prop::sample::select(pool.vars.clone()).prop_map(|x| Term::var(&x));
    let consts = prop::sample::select(CONSTS.to_vec()).prop_map(Term::constant);
    if metas {
        let ms = prop::sample::select(pool.metas.clone()).prop_map(|x| Term::var(&x));
        prop_oneof![3 => vars, 3 => consts, 1 => Just(Term::universe()), 3 => ms].boxed()
    } else {
        prop_oneof![3 => vars, 3 => consts, 1 => Just(Term::universe())].boxed()
    }
}

/// Arbitrary terms of depth at most `depth`, redexes included.
pub fn term(pool: &Pool, depth: u32) -> BoxedStrategy<Term> {
    let binders = pool.vars.clone();
    atoms(pool, false)
        .prop_recursive(depth, 48, 3, move |inner| {
            let b = prop::sample::select(binders.clone());
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(f, a)| Term::app(f, a)),
                (b.clone(), prop::option::of(inner.clone()), inner.clone())
                    .prop_map(|(x, ann, body)| Term::lam(&x, ann, body)),
                (b, inner.clone(), inner).prop_map(|(x, d, c)| Term::pi(&x, d, c)),
            ]
        })
        .boxed()
}

/// β-normal terms: applications only have atomic heads.
pub fn normal(pool: &Pool, depth: u32, metas: bool) -> BoxedStrategy<Term> {
    let binders = pool.vars.clone();
    let heads = atoms(pool, metas);
    atoms(pool, metas)
        .prop_recursive(depth, 48, 3, move |inner| {
            let b = prop::sample::select(binders.clone());
            prop_oneof![
                (heads.clone(), prop::collection::vec(inner.clone(), 1..3))
                    .prop_map(|(h, args)| Term::apps(h, args)),
                (b.clone(), prop::option::of(inner.clone()), inner.clone())
                    .prop_map(|(x, ann, body)| Term::lam(&x, ann, body)),
                (b, inner.clone(), inner).prop_map(|(x, d, c)| Term::pi(&x, d, c)),
            ]
        })
        .boxed()
}

/// Substitution that ignores capture; only sound on binder-fresh terms.
pub fn naive_subst(t: &Term, x: &Name, v: &Term) -> Term {
    match t.kind() {
        TermKind::Var(y) if y == x => v.clone(),
        TermKind::Lam(y, a, b) => {
            let b = if y == x { b.clone() } else { naive_subst(b, x, v) };
            Term::lam(y, a.as_ref().map(|a| naive_subst(a, x, v)), b)
        }
        TermKind::Pi(y, d, c) => {
            let c = if y == x { c.clone() } else { naive_subst(c, x, v) };
            Term::pi(y, naive_subst(d, x, v), c)
        }
        TermKind::App(f, a) => Term::app(naive_subst(f, x, v), naive_subst(a, x, v)),
        _ => t.clone(),
    }
}

/// Renames every binder to a fresh name.
pub fn freshen_binders(t: &Term) -> Term {
    match t.kind() {
        TermKind::Lam(y, a, b) => {
            let z = y.refresh();
            Term::lam(&z, a.as_ref().map(freshen_binders), freshen_binders(&naive_subst(b, y, &Term::var(&z))))
        }
        TermKind::Pi(y, d, c) => {
            let z = y.refresh();
            Term::pi(&z, freshen_binders(d), freshen_binders(&naive_subst(c, y, &Term::var(&z))))
        }
        TermKind::App(f, a) => Term::app(freshen_binders(f), freshen_binders(a)),
        _ => t.clone(),
    }
}

/// Reference substitution: rename every binder first, then replace.
pub fn oracle_subst(t: &Term, x: &Name, v: &Term) -> Term {
    naive_subst(&freshen_binders(t), x, v)
}

/// A substitution for the solvables; its values mention no solvable.
pub fn substitution(pool: &Pool, depth: u32) -> BoxedStrategy<BTreeMap<Name, Term>> {
    let metas = pool.metas.clone();
    prop::collection::vec(term(pool, depth), metas.len())
        .prop_map(move |vals| metas.iter().cloned().zip(vals).collect())
        .boxed()
}
