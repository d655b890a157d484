//! First-order unification over designated solvable variables, and the
//! implicit-argument elaboration built on it.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::check::Elaborator;
use crate::env::{Env, GlobalKind};
use crate::error::{Error, ErrorKind, Result};
use crate::print::{show, show_in};
use crate::reader::SurfaceTerm;
use crate::term::{alpha_eq_erased, split_pi_n, Context, Name, Term, TermKind};

/// Solutions for solvable variables. Kept idempotent.
pub type MetaSubst = BTreeMap<Name, Term>;

/// A pair of terms to be made equal, with the binders introduced by the
/// binder case so far.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub left: Term,
    pub right: Term,
    pub bound: Vec<Name>,
}

impl Constraint {
    pub fn new(left: Term, right: Term) -> Constraint {
        Constraint { left, right, bound: Vec::new() }
    }
}

fn solvable<'t>(t: &'t Term, solvables: &BTreeSet<Name>) -> Option<&'t Name> {
    t.as_var().filter(|x| solvables.contains(*x))
}

fn fail(c: &Constraint) -> Error {
    Error::new(ErrorKind::Unify(show(&c.left), show(&c.right)))
}

/// Solves `constraints` for the variables in `solvables`, extending `seed`.
/// Equality is taken modulo the reduction rules of `env`.
pub fn unify(env: &Env, constraints: Vec<Constraint>, solvables: &BTreeSet<Name>, seed: MetaSubst) -> Result<MetaSubst> {
    let mut work: VecDeque<Constraint> = constraints.into();
    let mut sigma = seed;
    while let Some(c) = work.pop_front() {
        // (2) swap a solvable variable to the left.
        let c = if solvable(&c.right, solvables).is_some() && solvable(&c.left, solvables).is_none() {
            Constraint { left: c.right, right: c.left, bound: c.bound }
        } else {
            c
        };
        if let Some(x) = solvable(&c.left, solvables) {
            // (3) already solved: re-unify against the stored solution.
            if let Some(sol) = sigma.get(x) {
                work.push_front(Constraint { left: sol.clone(), right: c.right.clone(), bound: c.bound.clone() });
                continue;
            }
            // (4) eliminate.
            let r = c.right.substitute(&sigma);
            if r.as_var() == Some(x) {
                continue;
            }
            let fv = r.free_vars();
            if !fv.contains(x) && !c.bound.iter().any(|b| fv.contains(b)) {
                let one: MetaSubst = [(x.clone(), r.clone())].into();
                for v in sigma.values_mut() {
                    *v = v.substitute(&one);
                }
                sigma.insert(x.clone(), r);
                continue;
            }
        }
        // (5) delete, once nothing is left to learn from the pair.
        let (sl, sr) = (c.left.substitute(&sigma), c.right.substitute(&sigma));
        let equal = def_eq(env, &sl, &sr)?;
        let flexible = |t: &Term| t.free_vars().iter().any(|x| solvables.contains(x));
        if equal && !flexible(&sl) && !flexible(&sr) {
            continue;
        }
        // (6) decompose.
        if let Some(parts) = decompose(&c, solvables) {
            for p in parts.into_iter().rev() {
                work.push_front(p);
            }
            continue;
        }
        // (7) binders.
        if let Some(parts) = binder_case(&c) {
            for p in parts.into_iter().rev() {
                work.push_front(p);
            }
            continue;
        }
        let l = env.whnf(&sl)?;
        let r = env.whnf(&sr)?;
        if l != c.left || r != c.right {
            work.push_front(Constraint { left: l, right: r, bound: c.bound });
            continue;
        }
        if equal {
            continue;
        }
        // (8)
        return Err(fail(&c));
    }
    Ok(sigma)
}

/// Equality for the delete step. Terms that exhaust fuel count as unequal.
fn def_eq(env: &Env, a: &Term, b: &Term) -> Result<bool> {
    if alpha_eq_erased(a, b) {
        return Ok(true);
    }
    match (env.normalize(a), env.normalize(b)) {
        (Ok(x), Ok(y)) => Ok(alpha_eq_erased(&x, &y)),
        (Err(e), _) | (_, Err(e)) if matches!(e.kind, ErrorKind::Diverged { .. }) => Ok(false),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

fn decompose(c: &Constraint, solvables: &BTreeSet<Name>) -> Option<Vec<Constraint>> {
    let (h1, a1) = c.left.spine();
    let (h2, mut a2) = c.right.spine();
    let sub = |l: &Term, r: &Term| Constraint { left: l.clone(), right: r.clone(), bound: c.bound.clone() };
    let mut out = Vec::new();
    if a1.len() != a2.len() {
        // First-order approximation: the flexible head takes the extra
        // leading arguments.
        let flex = matches!(h1.kind(), TermKind::Var(x) if solvables.contains(x));
        if !flex || a1.is_empty() || a2.len() < a1.len() {
            return None;
        }
        let rest = a2.split_off(a2.len() - a1.len());
        out.push(sub(h1, &Term::apps(h2.clone(), a2.into_iter().cloned())));
        out.extend(a1.iter().zip(&rest).map(|(x, y)| sub(x, y)));
        return Some(out);
    }
    match (h1.kind(), h2.kind()) {
        (TermKind::Const(x), TermKind::Const(y)) if x == y && !a1.is_empty() => {}
        (TermKind::Universe, TermKind::Universe) if !a1.is_empty() => {}
        (TermKind::Var(x), TermKind::Var(y)) if x == y && !solvables.contains(x) && !a1.is_empty() => {}
        // First-order approximation of a flexible head.
        (TermKind::Var(x), _) if solvables.contains(x) && !a1.is_empty() => out.push(sub(h1, h2)),
        (
            TermKind::Elim { datatype: d1, target: t1, motive: p1, methods: m1 },
            TermKind::Elim { datatype: d2, target: t2, motive: p2, methods: m2 },
        ) if d1 == d2 && m1.len() == m2.len() => {
            out.push(sub(t1, t2));
            out.push(sub(p1, p2));
            out.extend(m1.iter().zip(m2).map(|(x, y)| sub(x, y)));
        }
        _ => return None,
    }
    out.extend(a1.iter().zip(&a2).map(|(x, y)| sub(x, y)));
    Some(out)
}

fn binder_case(c: &Constraint) -> Option<Vec<Constraint>> {
    let (x1, d1, b1, x2, d2, b2) = match (c.left.kind(), c.right.kind()) {
        (TermKind::Lam(x1, d1, b1), TermKind::Lam(x2, d2, b2)) => (x1, d1.clone(), b1, x2, d2.clone(), b2),
        (TermKind::Pi(x1, d1, b1), TermKind::Pi(x2, d2, b2)) => {
            (x1, Some(d1.clone()), b1, x2, Some(d2.clone()), b2)
        }
        _ => return None,
    };
    let mut out = Vec::new();
    if let (Some(d1), Some(d2)) = (d1, d2) {
        out.push(Constraint { left: d1, right: d2, bound: c.bound.clone() });
    }
    let z = x1.refresh();
    let mut bound = c.bound.clone();
    bound.push(z.clone());
    out.push(Constraint { left: b1.subst(x1, &Term::var(&z)), right: b2.subst(x2, &Term::var(&z)), bound });
    Some(out)
}

impl Elaborator<'_> {
    /// `(f′ arg…)` where `f′` abbreviates `f` with its leading arguments
    /// omitted; the omitted ones are solved by unification.
    pub fn elab_implicit_app(
        &self,
        ctx: &Context,
        name: &str,
        args: &[SurfaceTerm],
        expected: Option<&Term>,
        s: &SurfaceTerm,
    ) -> Result<(Term, Term)> {
        let Some(GlobalKind::Implicit { target, omit }) = self.env.global(name).map(|g| g.kind.clone()) else {
            return Err(Error::at(ErrorKind::Unbound(name.to_string()), &s.span));
        };
        let fty = self.env.global(&target).map(|g| g.ty.clone()).ok_or_else(|| Error::new(ErrorKind::Unbound(target.to_string())))?;
        let (tele, out) = split_pi_n(&fty, omit + args.len());
        let (tele, map) = tele.freshen();
        let out = out.substitute(&map);
        if tele.len() < omit {
            return Err(Error::at(
                ErrorKind::Datatype(format!("{name} omits {omit} argument(s) but {target} takes only {}", tele.len())),
                &s.span,
            ));
        }
        let explicit = tele.len() - omit;
        let implicits: Vec<(Name, Term)> = tele.0[..omit].to_vec();
        let solvables: BTreeSet<Name> = implicits.iter().map(|(x, _)| x.clone()).collect();
        let explicit_names: BTreeSet<Name> = tele.0[omit..].iter().map(|(x, _)| x.clone()).collect();
        let mut sigma = MetaSubst::new();
        let mut expected_done = false;
        if let Some(e) = expected {
            if args.len() == explicit && out.free_vars().is_disjoint(&explicit_names) {
                sigma = unify(self.env, alloc::vec![Constraint::new(e.clone(), out.clone())], &solvables, sigma)
                    .map_err(|err| err.or_span(&s.span))?;
                expected_done = true;
            }
        }
        let mut arg_map: MetaSubst = MetaSubst::new();
        let mut cores = Vec::new();
        for ((x, declared), arg) in tele.0[omit..].iter().zip(args) {
            let declared = declared.substitute(&arg_map).substitute(&sigma);
            let open = declared.free_vars().iter().any(|v| solvables.contains(v));
            let core = if open {
                let (core, ty) = self.infer(ctx, arg)?;
                sigma = unify(self.env, alloc::vec![Constraint::new(ty, declared)], &solvables, sigma)
                    .map_err(|e| e.or_span(&arg.span))?;
                core
            } else {
                self.check(ctx, arg, &declared)?
            };
            arg_map.insert(x.clone(), core.clone());
            cores.push(core);
        }
        let mut out_ty = out.substitute(&arg_map);
        if let (Some(e), false) = (expected, expected_done) {
            if args.len() == explicit {
                sigma = unify(self.env, alloc::vec![Constraint::new(e.clone(), out_ty.substitute(&sigma))], &solvables, sigma)
                    .map_err(|err| err.or_span(&s.span))?;
            }
        }
        let unsolved: Vec<&str> = implicits.iter().filter(|(x, _)| !sigma.contains_key(x)).map(|(x, _)| &*x.hint).collect();
        if !unsolved.is_empty() {
            return Err(Error::at(
                ErrorKind::UnsolvedImplicit(format!("{} in ({name} …)", unsolved.join(", "))),
                &s.span,
            ));
        }
        let mut solved = Vec::new();
        let mut inst = MetaSubst::new();
        for (x, ty) in &implicits {
            let v = sigma[x].clone();
            self.check_term(ctx, &v, &ty.substitute(&inst)).map_err(|e| e.or_span(&s.span))?;
            inst.insert(x.clone(), v.clone());
            solved.push(v);
        }
        out_ty = self.normalize(&out_ty.substitute(&sigma))?;
        let mut core = Term::apps(Term::const_sym(&target), solved.into_iter().chain(cores)).with_span(&s.span);
        for arg in &args[explicit.min(args.len())..] {
            let (c, t, _) = self.apply(ctx, &core, &out_ty, arg, false)?;
            core = c;
            out_ty = t;
        }
        if let Some(e) = expected {
            if !self.def_eq(&out_ty, e)? {
                return Err(self.mismatch(ctx, e, &out_ty).or_span(&s.span));
            }
        }
        let _ = show_in;
        Ok((core, out_ty))
    }
}
