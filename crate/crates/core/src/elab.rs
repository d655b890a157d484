//! Surface-level elaboration: currying sugar, literals, `match`, recursive
//! definitions with termination checking, axioms, sized definitions and the
//! top-level declaration forms.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::check::{as_binder, binder_name, canonical, is_special, split_binders, syntax, EqMode, Elaborator};
use crate::data::{self, Datatype, Generic, PAT_TO_CTXT};
use crate::env::{Env, GlobalKind, SizedSig};
use crate::error::{Error, ErrorKind, Result};
use crate::print::{show, show_in};
use crate::reader::{parse, AtomKind, Span, SurfaceKind, SurfaceTerm};
use crate::reduce::{Contractum, Pattern, RuleHead};
use crate::sized::{get_sz, inc_sz, Size};
use crate::term::{Context, Name, Sym, Telescope, Term, TermKind};

/// Largest numeric literal accepted.
pub const MAX_LITERAL: u64 = 10_000;

/// `n` as `(S … Z)`.
pub fn lift_literal(s: &SurfaceTerm) -> Result<SurfaceTerm> {
    let text = s.as_atom().map(|a| &*a.text).unwrap_or("");
    let n: u64 = text.parse().map_err(|_| Error::at(ErrorKind::UnsupportedLiteral(text.to_string()), &s.span))?;
    if n > MAX_LITERAL {
        return Err(Error::at(ErrorKind::UnsupportedLiteral(format!("{text} exceeds {MAX_LITERAL}")), &s.span));
    }
    let mut acc = SurfaceTerm::symbol("Z", s.span.clone());
    for _ in 0..n {
        acc = SurfaceTerm::list(vec![SurfaceTerm::symbol("S", s.span.clone()), acc], s.span.clone());
    }
    Ok(acc)
}

fn anonymous_binder(ty: &SurfaceTerm) -> SurfaceTerm {
    let sp = ty.span.clone();
    SurfaceTerm::square(vec![SurfaceTerm::generated_symbol("_", sp.clone()), SurfaceTerm::symbol(":", sp), ty.clone()], ty.span.clone())
}

/// One level of currying for `λ`, `Π`, `∀` and `→`.
pub fn desugar_step(s: &SurfaceTerm) -> SurfaceTerm {
    let Some(items) = s.as_list() else { return s.clone() };
    let Some(h) = items.first().and_then(|h| h.as_symbol()) else { return s.clone() };
    let sp = s.span.clone();
    match canonical(h) {
        "λ" | "Π" | "∀" if items.len() > 3 => {
            let mut inner = vec![items[0].clone()];
            inner.extend(items[2..].iter().cloned());
            SurfaceTerm::list(vec![items[0].clone(), items[1].clone(), SurfaceTerm::list(inner, sp.clone())], sp)
        }
        "Π" | "∀" if items.len() == 3 && as_binder(&items[1]).is_none() => {
            SurfaceTerm::list(vec![items[0].clone(), anonymous_binder(&items[1]), items[2].clone()], sp)
        }
        "→" if items.len() >= 3 => {
            let rest = if items.len() == 3 {
                items[2].clone()
            } else {
                let mut r = vec![items[0].clone()];
                r.extend(items[2..].iter().cloned());
                SurfaceTerm::list(r, sp.clone())
            };
            let binder = if as_binder(&items[1]).is_some() { items[1].clone() } else { anonymous_binder(&items[1]) };
            SurfaceTerm::list(vec![SurfaceTerm::symbol("Π", items[0].span.clone()), binder, rest], sp)
        }
        _ => s.clone(),
    }
}

fn is_form_keyword(h: &str) -> bool {
    is_special(h)
        || h.starts_with("define")
        || matches!(h, "check" | "print-assumptions" | "import" | "lift-datatype")
}

/// Full currying: multi-binder forms and multi-argument applications become
/// univariate, and `→` becomes `Π` with an anonymous binder. Other special
/// forms are left untouched.
pub fn desugar(s: &SurfaceTerm) -> SurfaceTerm {
    let Some(items) = s.as_list() else { return s.clone() };
    let sp = s.span.clone();
    let head = items.first().and_then(|h| h.as_symbol()).map(canonical);
    match head {
        Some("λ" | "Π" | "∀" | "→") => {
            let d = desugar_step(s);
            if d != *s {
                return desugar(&d);
            }
            let out = items
                .iter()
                .map(|it| match as_binder(it) {
                    Some((x, ty)) => {
                        let parts = vec![x.clone(), it.as_list().unwrap()[1].clone(), desugar(ty)];
                        SurfaceTerm { kind: SurfaceKind::List(bracket_of(it), parts), span: it.span.clone() }
                    }
                    None => desugar(it),
                })
                .collect();
            SurfaceTerm { kind: SurfaceKind::List(bracket_of(s), out), span: sp }
        }
        Some(h) if is_form_keyword(h) => s.clone(),
        _ if items.len() > 2 => {
            let fun = SurfaceTerm::list(items[..items.len() - 1].to_vec(), sp.clone());
            SurfaceTerm::list(vec![desugar(&fun), desugar(&items[items.len() - 1])], sp)
        }
        _ => SurfaceTerm { kind: SurfaceKind::List(bracket_of(s), items.iter().map(desugar).collect()), span: sp },
    }
}

fn bracket_of(s: &SurfaceTerm) -> crate::reader::Bracket {
    match &s.kind {
        SurfaceKind::List(b, _) => *b,
        SurfaceKind::Atom(_) => crate::reader::Bracket::Round,
    }
}

fn pattern_err(msg: impl Into<String>, span: &Span) -> Error {
    Error::at(ErrorKind::Pattern(msg.into()), span)
}

/// A resolved single-level pattern.
#[derive(Clone, Debug)]
enum Pat {
    Wild,
    Var(SurfaceTerm),
    Ctor {
        index: usize,
        /// Name used in the pattern; selects the `pat->ctxt` instance.
        owner: Sym,
        binders: Vec<SurfaceTerm>,
        alias: Option<SurfaceTerm>,
    },
}

impl Pat {
    fn is_irrefutable(&self) -> bool {
        matches!(self, Pat::Wild | Pat::Var(_))
    }
}

/// Constructor index of `dt` named by `name`, directly or through a sized
/// wrapper or an implicit abbreviation. Also returns the number of leading
/// arguments the abbreviation omits beyond the parameters.
fn ctor_of(env: &Env, dt: &Datatype, name: &str) -> Option<(usize, usize)> {
    if let Some(i) = dt.ctor_index(name) {
        return Some((i, 0));
    }
    match env.global(name).map(|g| &g.kind) {
        Some(GlobalKind::SizedCtor { ctor, .. }) => dt.ctor_index(ctor).map(|i| (i, 0)),
        Some(GlobalKind::Implicit { target, omit }) => {
            let i = dt.ctor_index(target)?;
            Some((i, omit.saturating_sub(dt.params.len())))
        }
        _ => None,
    }
}

fn resolve_pattern(env: &Env, dt: Option<&Datatype>, p: &SurfaceTerm, allow_var: bool) -> Result<Pat> {
    let unknown = |n: &str| pattern_err(format!("unknown constructor {n}"), &p.span);
    if let Some(text) = p.as_symbol() {
        if text == "_" {
            return Ok(Pat::Wild);
        }
        if let Some(dt) = dt {
            if let Some((index, extra)) = ctor_of(env, dt, text) {
                let arity = dt.ctors[index].args.len();
                if arity != extra {
                    return Err(pattern_err(
                        format!("constructor {text} expects {} argument(s), got 0", arity - extra),
                        &p.span,
                    ));
                }
                let binders = (0..extra).map(|_| SurfaceTerm::generated_symbol("_", p.span.clone())).collect();
                return Ok(Pat::Ctor { index, owner: text.into(), binders, alias: None });
            }
        }
        if allow_var {
            return Ok(Pat::Var(p.clone()));
        }
        return Err(unknown(text));
    }
    let Some([head, args @ ..]) = p.as_list() else {
        return Err(pattern_err(format!("bad pattern {p}"), &p.span));
    };
    let Some(h) = head.as_symbol() else {
        return Err(pattern_err(format!("bad pattern {p}"), &p.span));
    };
    let Some(dt) = dt else {
        return Err(pattern_err(format!("constructor pattern {p} on a value that is not of a datatype"), &p.span));
    };
    let Some((index, extra)) = ctor_of(env, dt, h) else {
        return Err(unknown(h));
    };
    let mut binders: Vec<SurfaceTerm> = (0..extra).map(|_| SurfaceTerm::generated_symbol("_", p.span.clone())).collect();
    for a in args {
        if a.as_symbol().is_none() {
            return Err(pattern_err(format!("nested patterns are not supported: {a}"), &a.span));
        }
        binders.push(a.clone());
    }
    let arity = dt.ctors[index].args.len();
    if binders.len() != arity {
        return Err(pattern_err(
            format!("constructor {h} expects {} argument(s), got {}", arity - extra, binders.len() - extra),
            &p.span,
        ));
    }
    Ok(Pat::Ctor { index, owner: h.into(), binders, alias: None })
}

/// Splits a case `[pat… body]` or `[pat… => body]`.
fn split_row(row: &SurfaceTerm) -> Result<(&[SurfaceTerm], &SurfaceTerm)> {
    let Some(items) = row.as_list().filter(|xs| xs.len() >= 2) else {
        return Err(syntax(format!("expected a case [pattern… body], found {row}"), &row.span));
    };
    match items.iter().position(|x| x.is_symbol("=>")) {
        Some(k) if k + 2 == items.len() => Ok((&items[..k], &items[k + 1])),
        Some(_) => Err(syntax("expected exactly one body after =>", &row.span)),
        None => Ok((&items[..items.len() - 1], &items[items.len() - 1])),
    }
}

struct MatchForm<'s> {
    target: &'s SurfaceTerm,
    as_name: Option<&'s SurfaceTerm>,
    indices: Option<Vec<&'s SurfaceTerm>>,
    in_ty: Option<&'s SurfaceTerm>,
    ret: Option<&'s SurfaceTerm>,
    cases: Vec<&'s SurfaceTerm>,
}

fn parse_match(s: &SurfaceTerm) -> Result<MatchForm<'_>> {
    let items = s.as_list().unwrap_or(&[]);
    let Some(target) = items.get(1) else {
        return Err(syntax("expected (match e case…)", &s.span));
    };
    let mut m = MatchForm { target, as_name: None, indices: None, in_ty: None, ret: None, cases: Vec::new() };
    let mut i = 2;
    while i < items.len() {
        let it = &items[i];
        let next = || items.get(i + 1).ok_or_else(|| syntax(format!("{it} needs an argument"), &it.span));
        match it.as_keyword() {
            Some("#:as") => {
                m.as_name = Some(next()?);
                i += 2;
            }
            Some("#:in") => {
                m.in_ty = Some(next()?);
                i += 2;
            }
            Some("#:return") => {
                m.ret = Some(next()?);
                i += 2;
            }
            Some("#:with-indices" | "#:with-indx") => {
                let mut idx = Vec::new();
                i += 1;
                while let Some(x) = items.get(i).filter(|x| x.as_symbol().is_some()) {
                    idx.push(x);
                    i += 1;
                }
                m.indices = Some(idx);
            }
            Some(k) => return Err(syntax(format!("unknown match option {k}"), &it.span)),
            None if it.as_list().is_some() => {
                m.cases.push(it);
                i += 1;
            }
            None => return Err(syntax(format!("expected a case, found {it}"), &it.span)),
        }
    }
    Ok(m)
}

impl Elaborator<'_> {
    /// Compiles `match` to the datatype's eliminator.
    pub fn elab_match(&self, ctx: &Context, s: &SurfaceTerm, expected: Option<&Term>) -> Result<(Term, Term)> {
        let m = parse_match(s)?;
        let (target, target_ty) = match m.in_ty {
            Some(t) => {
                let ty = self.check_type(ctx, t)?;
                (self.check(ctx, m.target, &ty)?, ty)
            }
            None => self.infer(ctx, m.target)?,
        };
        let (dt, params, indices) =
            self.datatype_instance(ctx, &target_ty, None).map_err(|e| e.or_span(&m.target.span))?;

        // Motive: λ i… x. τ_out
        let mut mctx = ctx.clone();
        let mut binders = Vec::new();
        let mut cur = self.normalize(&data::motive_type(&dt, &params))?;
        if let Some(idx) = &m.indices {
            if idx.len() != dt.indices.len() {
                return Err(syntax(
                    format!("{} has {} index(es), #:with-indices names {}", dt.name, dt.indices.len(), idx.len()),
                    &s.span,
                ));
            }
        }
        for k in 0..=dt.indices.len() {
            let TermKind::Pi(x, dom, cod) = cur.kind() else { unreachable!("motive type is a Π chain") };
            let surface = if k < dt.indices.len() { m.indices.as_ref().map(|v| v[k]) } else { m.as_name };
            let name = match surface {
                Some(n) => binder_name(n)?,
                None => Name::fresh("_"),
            };
            mctx.push(&name, dom.clone());
            binders.push((name.clone(), dom.clone()));
            cur = cod.subst(x, &Term::var(&name));
        }
        let ret = match (m.ret, expected) {
            (Some(r), _) => self.check_type(&mctx, r)?,
            (None, Some(e)) => e.clone(),
            (None, None) => {
                return Err(Error::at(
                    ErrorKind::CannotInfer(format!("{s}: match needs #:return or an expected type")),
                    &s.span,
                ))
            }
        };
        let motive = Telescope(binders).lam(ret);

        // Cases, in declaration order.
        let mut by_ctor: Vec<Option<(Vec<SurfaceTerm>, Vec<SurfaceTerm>, &SurfaceTerm)>> = vec![None; dt.ctors.len()];
        let mut wildcard: Option<&SurfaceTerm> = None;
        for case in &m.cases {
            let (pats, body) = split_row(case)?;
            let (pat, ihs) = match pats {
                [p] => (p, Vec::new()),
                [p, kw, ih] if kw.as_keyword() == Some("#:ih") => {
                    let names = ih.as_list().map(|xs| xs.to_vec()).unwrap_or_else(|| vec![ih.clone()]);
                    (p, names)
                }
                _ => return Err(pattern_err("match cases take a single pattern", &case.span)),
            };
            match resolve_pattern(self.env, Some(&dt), pat, false)? {
                Pat::Wild | Pat::Var(_) => {
                    if wildcard.is_none() {
                        wildcard = Some(body);
                    }
                }
                Pat::Ctor { index, binders, .. } => {
                    if by_ctor[index].is_some() {
                        return Err(pattern_err(format!("duplicate case for {}", dt.ctors[index].name), &case.span));
                    }
                    by_ctor[index] = Some((binders, ihs, body));
                }
            }
        }
        let mut methods = Vec::new();
        for (i, c) in dt.ctors.iter().enumerate() {
            let (binders, ihs, body) = match (&by_ctor[i], wildcard) {
                (Some((b, ih, body)), _) => (b.clone(), ih.clone(), *body),
                (None, Some(body)) => (Vec::new(), Vec::new(), body),
                (None, None) => return Err(pattern_err(format!("missing case for {}", c.name), &s.span)),
            };
            methods.push(self.build_method(ctx, &dt, i, &motive, &params, &binders, &ihs, body)?);
        }
        let core = Term::elim(&dt.name, target.clone(), motive.clone(), methods).with_span(&s.span);
        let ty = self.normalize(&Term::apps(motive, indices.into_iter().chain([target])))?;
        if let Some(e) = expected {
            if !self.def_eq(&ty, e)? {
                return Err(self.mismatch(ctx, e, &ty).or_span(&s.span));
            }
        }
        Ok((core, ty))
    }

    /// `λ x… x_rec… body` for constructor `i`.
    #[allow(clippy::too_many_arguments)]
    fn build_method(
        &self,
        ctx: &Context,
        dt: &Datatype,
        i: usize,
        motive: &Term,
        params: &[Term],
        binders: &[SurfaceTerm],
        ihs: &[SurfaceTerm],
        body: &SurfaceTerm,
    ) -> Result<Term> {
        let mut cur = self.normalize(&data::method_type(dt, i, motive, params))?;
        let nargs = dt.ctors[i].args.len();
        let nrec = dt.ctors[i].recursive.len();
        let mut inner = ctx.clone();
        let mut tele = Vec::new();
        for j in 0..nargs + nrec {
            let TermKind::Pi(x, dom, cod) = cur.kind() else { unreachable!("method type is a Π chain") };
            let surface = if j < nargs { binders.get(j) } else { ihs.get(j - nargs) };
            let name = match surface {
                Some(b) => binder_name(b)?,
                None => Name::fresh("_"),
            };
            inner.push(&name, dom.clone());
            tele.push((name.clone(), dom.clone()));
            cur = cod.subst(x, &Term::var(&name));
        }
        let body = self.check(&inner, body, &cur)?;
        Ok(Telescope(tele).lam(body))
    }

    /// `(C_sz arg…)`: the constructor applied, with the result sized one
    /// above the decreasing argument.
    pub fn elab_sized_ctor(&self, ctx: &Context, ctor: &Sym, args: &[SurfaceTerm], s: &SurfaceTerm) -> Result<(Term, Term)> {
        let Some(g) = self.env.global(ctor) else {
            return Err(Error::at(ErrorKind::Unbound(ctor.to_string()), &s.span));
        };
        let GlobalKind::DataCtor { datatype, index } = &g.kind else {
            return Err(Error::at(ErrorKind::Datatype(format!("{ctor} is not a constructor")), &s.span));
        };
        let dt = self.env.datatype(datatype).ok_or_else(|| Error::new(ErrorKind::Unbound(datatype.to_string())))?;
        let np = dt.params.len();
        let dec = dt.decreasing_arg(*index).map(|p| np + p);
        let (mut core, mut ty) = (Term::const_sym(ctor).with_span(&s.span), g.ty.clone());
        let mut dec_size = Size::Inf;
        for (j, arg) in args.iter().enumerate() {
            let (c, t, at) = self.apply(ctx, &core, &ty, arg, Some(j) == dec)?;
            if let Some(at) = at {
                dec_size = get_sz(&at);
            }
            core = c;
            ty = t;
        }
        if args.len() == np + dt.ctors[*index].args.len() {
            let size = match dec {
                Some(_) => inc_sz(&dec_size),
                None => Size::Var(Name::fresh("sz")),
            };
            ty = ty.with_size(Some(size));
        }
        Ok((core, ty))
    }
}

/// Result of one top-level form.
#[derive(Clone, Debug)]
pub enum Output {
    Defined { name: Sym, ty: Term },
    Implicit { name: Sym, target: Sym, omit: usize },
    Assumptions(Vec<(Sym, Term)>),
    Checked { term: Term, ty: Term },
    Imported(String),
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Defined { name, ty } => write!(f, "{name} : {}", show(ty)),
            Output::Implicit { name, target, omit } => write!(f, "{name} = {target} #:omit {omit}"),
            Output::Assumptions(xs) if xs.is_empty() => f.write_str("Axioms used: none"),
            Output::Assumptions(xs) => {
                f.write_str("Axioms used: ")?;
                for (i, (n, t)) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n} : {}", show(t))?;
                }
                Ok(())
            }
            Output::Checked { term, ty } => write!(f, "{} : {}", show(term), show(ty)),
            Output::Imported(p) => write!(f, "imported {p}"),
        }
    }
}

/// Axioms a term depends on, in first-occurrence order. Definitions and
/// recursive functions are followed through their bodies.
pub fn assumptions(env: &Env, t: &Term) -> Vec<(Sym, Term)> {
    let mut out: Vec<(Sym, Term)> = Vec::new();
    let mut visited = BTreeSet::new();
    collect_axioms(env, t, &mut out, &mut visited);
    out
}

fn collect_axioms(env: &Env, t: &Term, out: &mut Vec<(Sym, Term)>, visited: &mut BTreeSet<Sym>) {
    let push = |name: &Sym, out: &mut Vec<(Sym, Term)>| {
        if !out.iter().any(|(n, _)| n == name) {
            let ty = env.global(name).map(|g| g.ty.clone()).unwrap_or_else(Term::universe);
            out.push((name.clone(), ty));
        }
    };
    if let Some(a) = &t.meta().axiom {
        push(a, out);
    }
    if let TermKind::Const(c) = t.kind() {
        match env.global(c).map(|g| &g.kind) {
            Some(GlobalKind::Axiom) => push(c, out),
            Some(GlobalKind::Definition(v)) if visited.insert(c.clone()) => {
                collect_axioms(env, v, out, visited);
            }
            Some(GlobalKind::RecFun { .. } | GlobalKind::SizedRecFun(_)) if visited.insert(c.clone()) => {
                for r in env.rules.rules_for(&RuleHead::Const(c.clone())) {
                    if let Contractum::Template(tm) = &r.contractum {
                        collect_axioms(env, tm, out, visited);
                    }
                }
            }
            _ => {}
        }
    }
    for c in t.children() {
        collect_axioms(env, c, out, visited);
    }
}

/// The bundled prelude.
pub const PRELUDE: &str = include_str!("prelude.cur");

/// Elaborates every form of a source text in order.
pub fn process_source(env: &mut Env, file: &str, text: &str) -> Result<Vec<Output>> {
    let forms = parse(file, text)?;
    let mut out = Vec::new();
    for f in &forms {
        out.extend(process(env, f)?);
    }
    Ok(out)
}

/// Elaborates one top-level form. The environment changes only on success.
pub fn process(env: &mut Env, form: &SurfaceTerm) -> Result<Vec<Output>> {
    env.transaction(|env| process_inner(env, form)).map_err(|e| e.or_span(&form.span))
}

fn process_inner(env: &mut Env, form: &SurfaceTerm) -> Result<Vec<Output>> {
    let head = form.head_symbol().map(canonical);
    let items = form.as_list().unwrap_or(&[]);
    match head {
        Some("define-datatype") => {
            let dt = data::define_datatype(env, form)?;
            let mut out = vec![Output::Defined { name: dt.name.clone(), ty: dt.type_of() }];
            for (i, c) in dt.ctors.iter().enumerate() {
                out.push(Output::Defined { name: c.name.clone(), ty: dt.ctor_type(i) });
            }
            Ok(out)
        }
        Some("define") => define(env, form, items),
        Some("define-axiom") => {
            let [_, name, ty] = items else {
                return Err(syntax("expected (define-axiom name τ)", &form.span));
            };
            let name = fresh_global(env, name)?;
            let ty = Elaborator::new(env).check_type(&Context::new(), ty)?;
            env.add_global(&name, ty.clone(), GlobalKind::Axiom);
            Ok(vec![Output::Defined { name, ty }])
        }
        Some("define-implicit") => {
            let [_, name, eq, target, kw, n] = items else {
                return Err(syntax("expected (define-implicit f′ = f #:omit n)", &form.span));
            };
            if !eq.is_symbol("=") || kw.as_keyword() != Some("#:omit") {
                return Err(syntax("expected (define-implicit f′ = f #:omit n)", &form.span));
            }
            let name = fresh_global(env, name)?;
            let target_text = target.as_symbol().ok_or_else(|| syntax("expected a global name", &target.span))?;
            let Some(g) = env.global(target_text) else {
                return Err(Error::at(ErrorKind::Unbound(target_text.to_string()), &target.span));
            };
            let omit: usize = n
                .as_atom()
                .filter(|a| a.kind == AtomKind::Number)
                .and_then(|a| a.text.parse().ok())
                .ok_or_else(|| syntax("#:omit takes a natural number", &n.span))?;
            let (tele, _) = crate::term::split_pi_n(&g.ty, omit);
            if tele.len() < omit {
                return Err(Error::at(
                    ErrorKind::Datatype(format!("{target_text} has fewer than {omit} arguments")),
                    &n.span,
                ));
            }
            let (target, ty) = (g.name.clone(), g.ty.clone());
            env.add_global(&name, ty, GlobalKind::Implicit { target: target.clone(), omit });
            Ok(vec![Output::Implicit { name, target, omit }])
        }
        Some("print-assumptions") => {
            let [_, e] = items else {
                return Err(syntax("expected (print-assumptions e)", &form.span));
            };
            let (core, _) = Elaborator::new(env).infer(&Context::new(), e)?;
            Ok(vec![Output::Assumptions(assumptions(env, &core))])
        }
        Some("check") => {
            let el = Elaborator::new(env);
            let (core, ty) = match items {
                [_, e] => el.infer(&Context::new(), e)?,
                [_, e, ty] => {
                    let ty = el.check_type(&Context::new(), ty)?;
                    (el.check(&Context::new(), e, &ty)?, ty)
                }
                _ => return Err(syntax("expected (check e τ)", &form.span)),
            };
            Ok(vec![Output::Checked { term: env.normalize(&core)?, ty }])
        }
        Some("import") => {
            let [_, what] = items else {
                return Err(syntax("expected (import prelude) or (import \"path\")", &form.span));
            };
            let (key, text) = match what.as_atom() {
                Some(a) if a.kind == AtomKind::Symbol && &*a.text == "prelude" => ("prelude".to_string(), None),
                Some(a) if a.kind == AtomKind::Str => (a.text.to_string(), Some(())),
                _ => return Err(syntax("expected (import prelude) or (import \"path\")", &what.span)),
            };
            if env.imported.contains(&key) {
                return Ok(Vec::new());
            }
            let source = match text {
                None => PRELUDE.to_string(),
                Some(()) => {
                    let Some(loader) = env.loader.clone() else {
                        return Err(Error::at(ErrorKind::Lookup(format!("cannot import {key}: no loader")), &what.span));
                    };
                    loader(&key).map_err(|e| Error::at(ErrorKind::Lookup(format!("cannot import {key}: {e}")), &what.span))?
                }
            };
            env.imported.push(key.clone());
            process_source(env, &key, &source)?;
            Ok(vec![Output::Imported(key)])
        }
        Some("lift-datatype") => {
            let [_, t] = items else {
                return Err(syntax("expected (lift-datatype T)", &form.span));
            };
            lift_datatype(env, t)
        }
        Some("define/rec/match") => {
            let def = parse_rec(form, false)?;
            define_rec(env, &def)
        }
        Some("define/rec/match-sz") => {
            let def = parse_rec(form, true)?;
            define_rec(env, &def)
        }
        _ => {
            let (core, ty) = Elaborator::new(env).infer(&Context::new(), form)?;
            Ok(vec![Output::Checked { term: env.normalize(&core)?, ty }])
        }
    }
}

fn fresh_global(env: &Env, name: &SurfaceTerm) -> Result<Sym> {
    let Some(text) = name.as_symbol() else {
        return Err(syntax(format!("expected a name, found {name}"), &name.span));
    };
    if env.contains(text) {
        return Err(Error::at(ErrorKind::Duplicate(text.to_string()), &name.span));
    }
    Ok(text.into())
}

fn mentions_symbol(s: &SurfaceTerm, name: &str) -> bool {
    match &s.kind {
        SurfaceKind::Atom(a) => a.kind == AtomKind::Symbol && &*a.text == name,
        SurfaceKind::List(_, xs) => xs.iter().any(|x| mentions_symbol(x, name)),
    }
}

/// `(define f e)`, `(define f : τ e)` or `(define f [x : τ]… [: τ₂] e)`.
fn define(env: &mut Env, form: &SurfaceTerm, items: &[SurfaceTerm]) -> Result<Vec<Output>> {
    let Some(name_s) = items.get(1) else {
        return Err(syntax("expected (define f [x : τ]… : τ e)", &form.span));
    };
    let name = fresh_global(env, name_s)?;
    let (binders, rest) = split_binders(&items[2..]);
    let (ret, body) = match rest {
        [b] => (None, b),
        [colon, ty, b] if colon.is_symbol(":") => (Some(ty), b),
        _ => return Err(syntax("expected (define f [x : τ]… : τ e)", &form.span)),
    };
    if mentions_symbol(body, &name) {
        let Some(ret) = ret else {
            return Err(syntax(format!("recursive definition {name} needs a return type"), &form.span));
        };
        let wild = SurfaceTerm::symbol("_", body.span.clone());
        let mut row = vec![wild; binders.len().max(1)];
        row.push(body.clone());
        let def = RecDef {
            name: name_s.clone(),
            params: binders.into_iter().map(|(x, t)| (x, t, None)).collect(),
            out: ret.clone(),
            out_size: None,
            rows: vec![SurfaceTerm::square(row, body.span.clone())],
            sized: false,
            span: form.span.clone(),
        };
        return define_rec(env, &def);
    }
    let el = Elaborator::new(env);
    let (ctx, tele) = el.check_telescope(&Context::new(), &binders, &Term::universe())?;
    let (core, ty) = match ret {
        Some(r) => {
            let ty = el.check_type(&ctx, r)?;
            (el.check(&ctx, body, &ty)?, ty)
        }
        None => el.infer(&ctx, body)?,
    };
    let value = tele.lam(core.clone());
    let fty = env.normalize(&tele.pi(ty))?;
    let matcher = tele.names().into_iter().map(Pattern::Var).collect();
    env.rules.register(&name, RuleHead::Const(name.clone()), matcher, Contractum::Template(core))?;
    env.add_global(&name, fty.clone(), GlobalKind::Definition(value));
    Ok(vec![Output::Defined { name, ty: fty }])
}

/// Wrappers `C_sz` for each constructor, with size-decrementing patterns.
fn lift_datatype(env: &mut Env, t: &SurfaceTerm) -> Result<Vec<Output>> {
    let name = t.as_symbol().ok_or_else(|| syntax("expected a datatype name", &t.span))?;
    let dt = env
        .datatype(name)
        .ok_or_else(|| Error::at(ErrorKind::Datatype(format!("{name} is not a registered datatype")), &t.span))?;
    let mut out = Vec::new();
    for (i, c) in dt.ctors.iter().enumerate() {
        let wrapper: Sym = format!("{}_sz", c.name).into();
        if env.contains(&wrapper) {
            return Err(Error::at(ErrorKind::Duplicate(wrapper.to_string()), &t.span));
        }
        let ty = dt.ctor_type(i);
        env.add_global(&wrapper, ty.clone(), GlobalKind::SizedCtor { ctor: c.name.clone(), datatype: dt.name.clone() });
        env.methods.register(&wrapper, PAT_TO_CTXT, Generic::PatToCtxt(data::sized_pat_to_ctxt()));
        out.push(Output::Defined { name: wrapper, ty });
    }
    Ok(out)
}

struct RecDef {
    name: SurfaceTerm,
    params: Vec<(SurfaceTerm, SurfaceTerm, Option<SurfaceTerm>)>,
    out: SurfaceTerm,
    out_size: Option<SurfaceTerm>,
    rows: Vec<SurfaceTerm>,
    sized: bool,
    span: Span,
}

fn parse_rec(form: &SurfaceTerm, sized: bool) -> Result<RecDef> {
    let items = form.as_list().unwrap_or(&[]);
    let usage = if sized {
        "expected (define/rec/match-sz f [x : τ #:sz i]… : τ [#:sz j] [pat… body]…)"
    } else {
        "expected (define/rec/match f [x : τ]… : τ [pat… body]…)"
    };
    let Some(name) = items.get(1).filter(|n| n.as_symbol().is_some()) else {
        return Err(syntax(usage, &form.span));
    };
    let mut params = Vec::new();
    let mut i = 2;
    while let Some(b) = items.get(i).and_then(|b| b.as_list()) {
        match b {
            [x, colon, ty] if colon.is_symbol(":") && x.as_symbol().is_some() => params.push((x.clone(), ty.clone(), None)),
            [x, colon, ty, kw, sz] if colon.is_symbol(":") && kw.as_keyword() == Some("#:sz") && x.as_symbol().is_some() => {
                if !sized {
                    return Err(syntax("#:sz annotations need define/rec/match-sz", &kw.span));
                }
                params.push((x.clone(), ty.clone(), Some(sz.clone())))
            }
            _ => break,
        }
        i += 1;
    }
    if !items.get(i).is_some_and(|c| c.is_symbol(":")) {
        return Err(syntax(usage, &form.span));
    }
    let out = items.get(i + 1).ok_or_else(|| syntax(usage, &form.span))?.clone();
    i += 2;
    let mut out_size = None;
    if items.get(i).and_then(|k| k.as_keyword()) == Some("#:sz") {
        out_size = Some(items.get(i + 1).ok_or_else(|| syntax(usage, &form.span))?.clone());
        i += 2;
    }
    Ok(RecDef { name: name.clone(), params, out, out_size, rows: items[i..].to_vec(), sized, span: form.span.clone() })
}

/// A row after wildcard expansion, one pattern per parameter.
struct Row<'s> {
    pats: Vec<Pat>,
    body: &'s SurfaceTerm,
}

fn ctor_witness(dt: &Datatype, i: usize) -> String {
    let c = &dt.ctors[i];
    if c.args.is_empty() {
        c.name.to_string()
    } else {
        let mut s = format!("({}", c.name);
        for _ in 0..c.args.len() {
            s.push_str(" _");
        }
        s.push(')');
        s
    }
}

/// A pattern vector not covered by `rows`, if any.
fn missing(rows: &[Vec<Option<usize>>], cols: &[Option<Arc<Datatype>>]) -> Option<Vec<String>> {
    let Some((col, rest_cols)) = cols.split_first() else {
        return if rows.is_empty() { Some(Vec::new()) } else { None };
    };
    let used: BTreeSet<usize> = rows.iter().filter_map(|r| r[0]).collect();
    let strip = |keep: &dyn Fn(Option<usize>) -> bool| -> Vec<Vec<Option<usize>>> {
        rows.iter().filter(|r| keep(r[0])).map(|r| r[1..].to_vec()).collect()
    };
    match col {
        Some(dt) if used.len() == dt.ctors.len() => {
            for i in 0..dt.ctors.len() {
                let spec = strip(&|p| p.is_none() || p == Some(i));
                if let Some(mut w) = missing(&spec, rest_cols) {
                    w.insert(0, ctor_witness(dt, i));
                    return Some(w);
                }
            }
            None
        }
        _ => {
            let default = strip(&|p| p.is_none());
            let mut w = missing(&default, rest_cols)?;
            let head = match col {
                Some(dt) => (0..dt.ctors.len()).find(|i| !used.contains(i)).map(|i| ctor_witness(dt, i)),
                None => None,
            };
            w.insert(0, head.unwrap_or_else(|| "_".to_string()));
            Some(w)
        }
    }
}

/// `define/rec/match` and its sized variant.
fn define_rec(env: &mut Env, def: &RecDef) -> Result<Vec<Output>> {
    let fname = fresh_global(env, &def.name)?;
    let el = Elaborator::new(env);
    let mut size_names: BTreeMap<String, Name> = BTreeMap::new();
    let mut size_of = |s: &SurfaceTerm| -> Result<Name> {
        let text = s.as_symbol().ok_or_else(|| syntax("a size is a name", &s.span))?;
        Ok(size_names.entry(text.to_string()).or_insert_with(|| Name::fresh(text)).clone())
    };

    // Parameters, with the sized one tagged in the context.
    let mut ctx = Context::new();
    let mut tele = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    let mut sized_param: Option<(usize, Name)> = None;
    for (k, (x, ty, sz)) in def.params.iter().enumerate() {
        let text = x.as_symbol().unwrap_or("_");
        if text != "_" && seen.contains(&text) {
            return Err(Error::at(ErrorKind::Duplicate(text.to_string()), &x.span));
        }
        seen.push(text);
        let t = el.check_type(&ctx, ty)?;
        let name = binder_name(x)?;
        let in_ctx = match sz {
            Some(s) => {
                let i = size_of(s)?;
                if sized_param.is_none() {
                    sized_param = Some((k, i.clone()));
                }
                t.with_size(Some(Size::Var(i)))
            }
            None => t.clone(),
        };
        ctx.push(&name, in_ctx);
        tele.push((name, t));
    }
    if tele.is_empty() {
        return Err(syntax(format!("{fname} needs an argument to recurse on"), &def.span));
    }
    let out = el.check_type(&ctx, &def.out)?;
    let columns: Vec<Option<Arc<Datatype>>> =
        tele.iter().map(|(_, t)| el.datatype_instance(&ctx, t, None).ok().map(|(d, _, _)| d)).collect();
    let out_fv = out.free_vars();
    if tele.iter().zip(&columns).any(|((x, _), d)| d.is_some() && out_fv.contains(x)) {
        return Err(pattern_err(
            format!("{fname}: return types depending on a datatype argument are not supported"),
            &def.out.span,
        ));
    }
    let (k, sizes) = if def.sized {
        let Some((k, i)) = sized_param.clone() else {
            return Err(syntax(format!("{fname}: one argument needs a #:sz annotation"), &def.span));
        };
        let j = def.out_size.as_ref().map(&mut size_of).transpose()?;
        (k, Some((i, j)))
    } else {
        let matched = |c: usize| {
            def.rows.iter().any(|row| {
                split_row(row).is_ok_and(|(pats, _)| {
                    pats.len() == tele.len()
                        && matches!(resolve_pattern(env, columns[c].as_deref(), &pats[c], true), Ok(Pat::Ctor { .. }))
                })
            })
        };
        let first = (0..tele.len()).find(|&c| columns[c].is_some() && matched(c));
        match first.or_else(|| columns.iter().position(Option::is_some)) {
            Some(k) => (k, None),
            None => {
                return Err(pattern_err(
                    format!("{fname}: no argument has a datatype type to recurse on"),
                    &def.span,
                ))
            }
        }
    };
    let dt = columns[k].clone().ok_or_else(|| {
        pattern_err(format!("{fname}: argument {} is not of a datatype", tele[k].0.hint), &def.params[k].0.span)
    })?;

    // The function's own type, and the local one seen by the bodies.
    let fty = Telescope(tele.clone()).pi(out.clone());
    let (local_tele, _) = Telescope(tele.clone()).freshen();
    let mut local_tele = local_tele;
    let (expected, mode) = match &sizes {
        Some((i, j)) => {
            local_tele.0[k].1 = local_tele.0[k].1.with_size(Some(Size::lt(Size::Var(i.clone()))));
            let local_out = match j {
                Some(j) => out.with_size(Some(Size::lt(Size::Var(j.clone())))),
                None => out.clone(),
            };
            let fl = local_tele.pi(local_out);
            (out.with_size(j.clone().map(Size::Var)), (EqMode::SizedCheck, fl))
        }
        None => {
            local_tele.0[k].1 = local_tele.0[k].1.map_meta(|m| m.rec_arg = true);
            (out.clone(), (EqMode::RecCheck, local_tele.pi(out.clone())))
        }
    };
    let (mode, local_ty) = mode;
    let f_local = Name::fresh(&fname);

    // Rows, with wildcards in the structural column expanded.
    let n = tele.len();
    let mut rows: Vec<Row> = Vec::new();
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for row in &def.rows {
        let (pats, body) = split_row(row)?;
        let pats: Vec<SurfaceTerm> = if pats.len() == n {
            pats.to_vec()
        } else if pats.len() == 1 {
            let mut v = vec![SurfaceTerm::symbol("_", pats[0].span.clone()); n];
            v[k] = pats[0].clone();
            v
        } else {
            return Err(syntax(format!("{fname} takes {n} argument(s), the case has {} pattern(s)", pats.len()), &row.span));
        };
        let mut resolved = Vec::new();
        for (c, p) in pats.iter().enumerate() {
            resolved.push(resolve_pattern(env, columns[c].as_deref(), p, true)?);
        }
        let rest_irrefutable = resolved.iter().enumerate().all(|(c, p)| c == k || p.is_irrefutable());
        match resolved[k].clone() {
            Pat::Ctor { index, .. } => {
                if rest_irrefutable {
                    covered.insert(index);
                }
                rows.push(Row { pats: resolved, body });
            }
            irrefutable => {
                let alias = match irrefutable {
                    Pat::Var(y) => Some(y),
                    _ => None,
                };
                for i in 0..dt.ctors.len() {
                    if covered.contains(&i) {
                        continue;
                    }
                    let mut p = resolved.clone();
                    let cname = &dt.ctors[i].name;
                    let sized_owner: Sym = format!("{cname}_sz").into();
                    let owner = if def.sized && env.methods.lookup(&sized_owner, PAT_TO_CTXT).is_ok() {
                        sized_owner
                    } else {
                        cname.clone()
                    };
                    let binders =
                        (0..dt.ctors[i].args.len()).map(|_| SurfaceTerm::generated_symbol("_", row.span.clone())).collect();
                    p[k] = Pat::Ctor { index: i, owner, binders, alias: alias.clone() };
                    rows.push(Row { pats: p, body });
                }
                if rest_irrefutable {
                    covered.extend(0..dt.ctors.len());
                }
            }
        }
    }
    let matrix: Vec<Vec<Option<usize>>> = rows
        .iter()
        .map(|r| {
            r.pats
                .iter()
                .map(|p| match p {
                    Pat::Ctor { index, .. } => Some(*index),
                    _ => None,
                })
                .collect()
        })
        .collect();
    if let Some(w) = missing(&matrix, &columns) {
        return Err(pattern_err(format!("{fname}: missing case {}", w.join(" ")), &def.span));
    }

    // Bodies.
    let checker = el.with_mode(mode);
    let mut rules = Vec::new();
    for row in &rows {
        let mut rctx = ctx.clone();
        let mut matcher = Vec::new();
        let mut expected = expected.clone();
        for (c, p) in row.pats.iter().enumerate() {
            let pname = &tele[c].0;
            let scrut = rctx.lookup(pname).map(|e| e.ty.clone()).unwrap_or_else(|| tele[c].1.clone());
            let sub = match p {
                Pat::Wild => Pattern::Wild,
                Pat::Var(y) => {
                    let y = binder_name(y)?;
                    rctx.push(&y, scrut.clone());
                    expected = expected.subst(pname, &Term::var(&y));
                    Pattern::Var(y)
                }
                Pat::Ctor { index, owner, binders, alias } => {
                    let cdt = columns[c].as_ref().expect("constructor patterns only on datatype columns");
                    let names: Vec<Name> = binders.iter().map(binder_name).collect::<Result<_>>()?;
                    let lifted: Sym = format!("{owner}_sz").into();
                    let owner = if def.sized && c == k && env.methods.lookup(&lifted, PAT_TO_CTXT).is_ok() {
                        &lifted
                    } else {
                        owner
                    };
                    let pat_fn = env.methods.pat_to_ctxt(owner);
                    let bound = pat_fn(cdt, *index, &names, &scrut);
                    for (x, t) in bound {
                        let t = if c == k && !def.sized { t.map_meta(|m| m.rec_ok = true) } else { t };
                        rctx.push(&x, t);
                    }
                    let mut args: Vec<Pattern> = (0..cdt.params.len()).map(|_| Pattern::Wild).collect();
                    args.extend(names.iter().cloned().map(Pattern::Var));
                    let ctor = Pattern::Ctor(cdt.ctors[*index].name.clone(), args);
                    match alias {
                        Some(y) => {
                            let y = binder_name(y)?;
                            rctx.push(&y, scrut.clone());
                            Pattern::As(y, alloc::boxed::Box::new(ctor))
                        }
                        None => ctor,
                    }
                }
            };
            matcher.push(Pattern::As(pname.clone(), alloc::boxed::Box::new(sub)));
        }
        rctx.push(&f_local, local_ty.clone());
        let body = checker.check(&rctx, row.body, &expected)?;
        let template = body.subst(&f_local, &Term::const_sym(&fname));
        rules.push((matcher, template));
    }

    let kind = match sizes {
        Some((i, j)) => GlobalKind::SizedRecFun(SizedSig { in_size: i, out_size: j, arity: n, rec_index: k }),
        None => GlobalKind::RecFun { rec_index: k },
    };
    env.add_global(&fname, fty.clone(), kind);
    for (r, (matcher, template)) in rules.into_iter().enumerate() {
        env.rules
            .register(&format!("{fname}/{r}"), RuleHead::Const(fname.clone()), matcher, Contractum::Template(template))
            .map_err(|e| pattern_err(format!("{fname}: {}", e.kind), &def.span))?;
    }
    Ok(vec![Output::Defined { name: fname, ty: fty }])
}

/// Shows a term under an empty context; used in diagnostics.
pub fn show_closed(t: &Term) -> String {
    show_in(&Context::new(), t)
}
