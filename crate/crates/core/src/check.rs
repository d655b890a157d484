//! Bidirectional elaboration of surface terms into core terms.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::data;
use crate::env::{Env, GlobalKind};
use crate::error::{Error, ErrorKind, Result};
use crate::print::show_in;
use crate::reader::{AtomKind, Span, SurfaceKind, SurfaceTerm};
use crate::sized::{get_sz, sz_ok, Size};
use crate::term::{alpha_eq_erased, Context, Name, Sym, Telescope, Term, TermKind};

/// Which extension predicate runs after the baseline equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EqMode {
    #[default]
    Default,
    /// Arguments expected at a `rec-arg` type must be `rec-ok`.
    RecCheck,
    /// The actual size must be within the expected size.
    SizedCheck,
}

/// ASCII spellings accepted for the binding forms.
pub fn canonical(sym: &str) -> &str {
    match sym {
        "lambda" => "λ",
        "Pi" => "Π",
        "forall" => "∀",
        "->" => "→",
        "==" => "=",
        other => other,
    }
}

pub(crate) fn syntax(msg: impl Into<String>, span: &Span) -> Error {
    Error::at(ErrorKind::Syntax(msg.into()), span)
}

/// `[x : τ]` or `(x : τ)`.
pub fn as_binder(s: &SurfaceTerm) -> Option<(&SurfaceTerm, &SurfaceTerm)> {
    match s.as_list() {
        Some([x, colon, ty]) if colon.is_symbol(":") && x.as_symbol().is_some() => Some((x, ty)),
        _ => None,
    }
}

/// A binder name from a symbol atom; `_` and generated atoms are anonymous.
pub fn binder_name(s: &SurfaceTerm) -> Result<Name> {
    match s.as_atom() {
        Some(a) if a.kind == AtomKind::Symbol => {
            if a.generated || &*a.text == "_" {
                Ok(Name::fresh("_"))
            } else {
                Ok(Name::fresh(&a.text))
            }
        }
        _ => Err(syntax(format!("expected a binder name, found {s}"), &s.span)),
    }
}

pub(crate) fn is_special(head: &str) -> bool {
    matches!(canonical(head), "λ" | "Π" | "∀" | "→" | "the" | "match" | "ntac" | "elim") || head.starts_with("elim-")
}

/// The elaborator for one judgment. The equality mode is fixed per instance.
#[derive(Clone, Copy)]
pub struct Elaborator<'e> {
    pub env: &'e Env,
    pub mode: EqMode,
}

impl<'e> Elaborator<'e> {
    pub fn new(env: &'e Env) -> Elaborator<'e> {
        Elaborator { env, mode: EqMode::Default }
    }

    pub fn with_mode(&self, mode: EqMode) -> Elaborator<'e> {
        Elaborator { env: self.env, mode }
    }

    pub fn normalize(&self, t: &Term) -> Result<Term> {
        self.env.normalize(t)
    }

    pub fn whnf(&self, t: &Term) -> Result<Term> {
        self.env.whnf(t)
    }

    /// Definitional equality: normal forms compared up to α, then the
    /// mode's extension predicate.
    pub fn def_eq(&self, actual: &Term, expected: &Term) -> Result<bool> {
        let a = self.normalize(actual)?;
        let b = self.normalize(expected)?;
        if !alpha_eq_erased(&a, &b) {
            return Ok(false);
        }
        match self.mode {
            EqMode::Default => Ok(true),
            EqMode::RecCheck => {
                let wants = expected.meta().rec_arg || b.meta().rec_arg;
                let has = actual.meta().rec_ok || a.meta().rec_ok;
                if wants && !has {
                    return Err(Error::new(ErrorKind::Nonterminate(format!(
                        "recursive call on an argument of type {} that is not structurally smaller",
                        show_in(&Context::new(), &a)
                    ))));
                }
                Ok(true)
            }
            EqMode::SizedCheck => {
                let sa = actual.size_tag().or(a.size_tag()).cloned().unwrap_or(Size::Inf);
                let sb = expected.size_tag().or(b.size_tag()).cloned().unwrap_or(Size::Inf);
                if !sz_ok(&sa, &sb) {
                    return Err(Error::new(ErrorKind::SizeViolation {
                        actual: crate::print::show_size(&sa),
                        expected: crate::print::show_size(&sb),
                    }));
                }
                Ok(true)
            }
        }
    }

    pub(crate) fn mismatch(&self, ctx: &Context, expected: &Term, actual: &Term) -> Error {
        let e = self.normalize(expected).unwrap_or_else(|_| expected.clone());
        let a = self.normalize(actual).unwrap_or_else(|_| actual.clone());
        Error::new(ErrorKind::Mismatch { expected: show_in(ctx, &e), actual: show_in(ctx, &a) })
    }

    /// Infers the type of `s`, returning the core term and its normal type.
    pub fn infer(&self, ctx: &Context, s: &SurfaceTerm) -> Result<(Term, Term)> {
        self.infer_inner(ctx, s).map_err(|e| e.or_span(&s.span))
    }

    /// Checks `s` against `expected`.
    pub fn check(&self, ctx: &Context, s: &SurfaceTerm, expected: &Term) -> Result<Term> {
        self.check_inner(ctx, s, expected).map_err(|e| e.or_span(&s.span))
    }

    /// Checks a type and returns its normal form.
    pub fn check_type(&self, ctx: &Context, s: &SurfaceTerm) -> Result<Term> {
        let t = self.with_mode(EqMode::Default).check(ctx, s, &Term::universe())?;
        self.normalize(&t)
    }

    /// Folds over binders left to right, each type checked against `sort`
    /// under the bindings before it.
    pub fn check_telescope(
        &self,
        ctx: &Context,
        bindings: &[(SurfaceTerm, SurfaceTerm)],
        sort: &Term,
    ) -> Result<(Context, Telescope)> {
        let mut ctx = ctx.clone();
        let mut tele = Vec::new();
        let mut seen: Vec<&str> = Vec::new();
        for (x, ty) in bindings {
            let text = x.as_symbol().unwrap_or("_");
            if text != "_" && seen.contains(&text) {
                return Err(Error::at(ErrorKind::Duplicate(text.to_string()), &x.span));
            }
            seen.push(text);
            let core = self.check(&ctx, ty, sort)?;
            let core = self.normalize(&core)?;
            let name = binder_name(x)?;
            ctx.push(&name, core.clone());
            tele.push((name, core));
        }
        Ok((ctx, Telescope(tele)))
    }

    fn infer_inner(&self, ctx: &Context, s: &SurfaceTerm) -> Result<(Term, Term)> {
        match &s.kind {
            SurfaceKind::Atom(a) => match a.kind {
                AtomKind::Number => {
                    let lifted = crate::elab::lift_literal(s)?;
                    self.infer(ctx, &lifted)
                }
                AtomKind::Symbol => self.infer_symbol(ctx, &a.text, s),
                AtomKind::Keyword | AtomKind::Str => Err(syntax(format!("unexpected {s}"), &s.span)),
            },
            SurfaceKind::List(_, items) => {
                let Some(head) = items.first() else {
                    return Err(syntax("empty form", &s.span));
                };
                let local = head.as_symbol().is_some_and(|h| ctx.lookup_text(h).is_some());
                if let (Some(h), false) = (head.as_symbol(), local) {
                    match canonical(h) {
                        "λ" => return self.infer_lambda(ctx, s, items),
                        "Π" | "∀" => return self.infer_pi(ctx, s, items),
                        "→" => return self.infer_arrow(ctx, s, items),
                        "the" => {
                            let [_, ty, e] = items.as_slice() else {
                                return Err(syntax("expected (the τ e)", &s.span));
                            };
                            let ty = self.check_type(ctx, ty)?;
                            let core = self.check(ctx, e, &ty)?;
                            return Ok((core, ty));
                        }
                        "match" => return self.elab_match(ctx, s, None),
                        "ntac" => return self.elab_ntac(ctx, s),
                        "elim" => return self.elab_elim(ctx, None, &items[1..], s),
                        name if name.starts_with("elim-") && self.env.datatype(&name[5..]).is_some() => {
                            let dt: Sym = name[5..].into();
                            return self.elab_elim(ctx, Some(dt), &items[1..], s);
                        }
                        name => match self.env.global(name).map(|g| &g.kind) {
                            Some(GlobalKind::Implicit { .. }) => {
                                return self.elab_implicit_app(ctx, name, &items[1..], None, s)
                            }
                            Some(GlobalKind::SizedCtor { ctor, .. }) => {
                                let ctor = ctor.clone();
                                return self.elab_sized_ctor(ctx, &ctor, &items[1..], s);
                            }
                            _ => {}
                        },
                    }
                }
                if items.len() == 1 {
                    // `(f)` is `f`.
                    return self.infer(ctx, head);
                }
                let (mut core, mut ty) = self.infer(ctx, head)?;
                let sized = match head.as_symbol().filter(|_| !local).and_then(|h| self.env.global(h)) {
                    Some(g) => match &g.kind {
                        GlobalKind::SizedRecFun(sig) if items.len() - 1 == sig.arity => Some(sig.clone()),
                        _ => None,
                    },
                    None => None,
                };
                let mut rec_size = None;
                for (i, arg) in items[1..].iter().enumerate() {
                    let want = sized.as_ref().is_some_and(|sig| sig.rec_index == i);
                    let (c, t, arg_ty) = self.apply(ctx, &core, &ty, arg, want)?;
                    if let Some(arg_ty) = arg_ty {
                        rec_size = Some(get_sz(&arg_ty));
                    }
                    core = c.with_span(&s.span);
                    ty = t;
                }
                if let Some(sig) = sized {
                    let out = match &sig.out_size {
                        Some(j) if *j == sig.in_size => rec_size,
                        Some(j) => Some(Size::Var(j.clone())),
                        None => None,
                    };
                    ty = ty.with_size(out);
                }
                Ok((core, ty))
            }
        }
    }

    /// Applies a function of type `fty` to one surface argument. With
    /// `want_arg_type`, the argument's own inferred type is returned too.
    pub(crate) fn apply(
        &self,
        ctx: &Context,
        f: &Term,
        fty: &Term,
        arg: &SurfaceTerm,
        want_arg_type: bool,
    ) -> Result<(Term, Term, Option<Term>)> {
        let w = self.whnf(fty)?;
        let TermKind::Pi(x, dom, cod) = w.kind() else {
            return Err(Error::at(
                ErrorKind::NotAFunction { term: show_in(ctx, f), ty: show_in(ctx, &w) },
                &arg.span,
            ));
        };
        let (a, arg_ty) = if want_arg_type {
            let (a, t) = self.infer(ctx, arg)?;
            if !self.def_eq(&t, dom).map_err(|e| e.or_span(&arg.span))? {
                return Err(self.mismatch(ctx, dom, &t).or_span(&arg.span));
            }
            (a, Some(t))
        } else {
            (self.check(ctx, arg, dom)?, None)
        };
        let out = self.normalize(&cod.subst(x, &a))?;
        Ok((Term::app(f.clone(), a), out, arg_ty))
    }

    fn infer_symbol(&self, ctx: &Context, text: &str, s: &SurfaceTerm) -> Result<(Term, Term)> {
        if text == "Type" {
            return Ok((Term::universe(), Term::universe()));
        }
        if let Some(e) = ctx.lookup_text(text) {
            return Ok((Term::var(&e.name), e.ty.clone()));
        }
        let text = canonical(text);
        let Some(g) = self.env.global(text) else {
            return Err(Error::at(ErrorKind::Unbound(text.to_string()), &s.span));
        };
        match &g.kind {
            GlobalKind::Implicit { .. } => self.elab_implicit_app(ctx, text, &[], None, s),
            GlobalKind::SizedCtor { ctor, .. } => {
                let ctor = ctor.clone();
                self.elab_sized_ctor(ctx, &ctor, &[], s)
            }
            GlobalKind::Axiom => {
                let c = Term::const_sym(&g.name).map_meta(|m| {
                    m.axiom = Some(g.name.clone());
                    m.span = Some(s.span.clone());
                });
                Ok((c, g.ty.clone()))
            }
            _ => Ok((Term::const_sym(&g.name).with_span(&s.span), g.ty.clone())),
        }
    }

    fn infer_lambda(&self, ctx: &Context, s: &SurfaceTerm, items: &[SurfaceTerm]) -> Result<(Term, Term)> {
        if items.len() < 3 {
            return Err(syntax("λ needs a binder and a body", &s.span));
        }
        if items.len() > 3 {
            return self.infer(ctx, &crate::elab::desugar_step(s));
        }
        let Some((x, ty)) = as_binder(&items[1]) else {
            return Err(Error::at(ErrorKind::CannotInfer(format!("{s}: λ binder needs a type annotation")), &s.span));
        };
        let dom = self.check_type(ctx, ty)?;
        let name = binder_name(x)?;
        let inner = ctx.extend(&name, dom.clone());
        let (body, body_ty) = self.infer(&inner, &items[2])?;
        Ok((Term::lam(&name, Some(dom.clone()), body), Term::pi(&name, dom, body_ty)))
    }

    fn infer_pi(&self, ctx: &Context, s: &SurfaceTerm, items: &[SurfaceTerm]) -> Result<(Term, Term)> {
        if items.len() < 3 {
            return Err(syntax("Π needs a binder and a body", &s.span));
        }
        if items.len() > 3 {
            return self.infer(ctx, &crate::elab::desugar_step(s));
        }
        let Some((x, ty)) = as_binder(&items[1]) else {
            return Err(syntax(format!("expected a binder [x : τ], found {}", items[1]), &items[1].span));
        };
        let dom = self.check_type(ctx, ty)?;
        let name = binder_name(x)?;
        let inner = ctx.extend(&name, dom.clone());
        let cod = self.check_type(&inner, &items[2])?;
        Ok((Term::pi(&name, dom, cod), Term::universe()))
    }

    fn infer_arrow(&self, ctx: &Context, s: &SurfaceTerm, items: &[SurfaceTerm]) -> Result<(Term, Term)> {
        if items.len() < 3 {
            return Err(syntax("→ needs a domain and a codomain", &s.span));
        }
        self.infer(ctx, &crate::elab::desugar_step(s))
    }

    fn check_inner(&self, ctx: &Context, s: &SurfaceTerm, expected: &Term) -> Result<Term> {
        let tagged = expected.meta().rec_arg || expected.meta().size.is_some();
        if self.mode == EqMode::Default || !tagged {
            if let Some(a) = s.as_atom() {
                if a.kind == AtomKind::Number {
                    let lifted = crate::elab::lift_literal(s)?;
                    return self.check(ctx, &lifted, expected);
                }
                if a.kind == AtomKind::Symbol && ctx.lookup_text(&a.text).is_none() {
                    if let Some(GlobalKind::Implicit { .. }) = self.env.global(&a.text).map(|g| &g.kind) {
                        return Ok(self.elab_implicit_app(ctx, &a.text, &[], Some(expected), s)?.0);
                    }
                }
            }
            if let Some(items) = s.as_list() {
                let head = items.first().and_then(|h| h.as_symbol());
                let local = head.is_some_and(|h| ctx.lookup_text(h).is_some());
                match head.filter(|_| !local).map(canonical) {
                    Some("λ") => return self.check_lambda(ctx, s, items, expected),
                    Some("match") => return Ok(self.elab_match(ctx, s, Some(expected))?.0),
                    Some(h) => {
                        if let Some(GlobalKind::Implicit { .. }) = self.env.global(h).map(|g| &g.kind) {
                            return Ok(self.elab_implicit_app(ctx, h, &items[1..], Some(expected), s)?.0);
                        }
                    }
                    None => {}
                }
            }
        }
        let (core, actual) = self.infer(ctx, s)?;
        if self.def_eq(&actual, expected)? {
            Ok(core)
        } else {
            Err(self.mismatch(ctx, expected, &actual))
        }
    }

    fn check_lambda(&self, ctx: &Context, s: &SurfaceTerm, items: &[SurfaceTerm], expected: &Term) -> Result<Term> {
        if items.len() < 3 {
            return Err(syntax("λ needs a binder and a body", &s.span));
        }
        if items.len() > 3 {
            return self.check(ctx, &crate::elab::desugar_step(s), expected);
        }
        let w = self.whnf(expected)?;
        let TermKind::Pi(y, dom, cod) = w.kind() else {
            return Err(Error::new(ErrorKind::Mismatch { expected: show_in(ctx, &w), actual: format!("a function {s}") }));
        };
        let (x, ann) = match as_binder(&items[1]) {
            Some((x, ty)) => {
                let ann = self.check_type(ctx, ty)?;
                if !self.with_mode(EqMode::Default).def_eq(&ann, dom)? {
                    return Err(self.mismatch(ctx, dom, &ann).or_span(&items[1].span));
                }
                (x, Some(ann))
            }
            None => (&items[1], None),
        };
        let name = binder_name(x)?;
        let inner = ctx.extend(&name, ann.clone().unwrap_or_else(|| dom.clone()));
        let body = self.check(&inner, &items[2], &cod.subst(y, &Term::var(&name)))?;
        Ok(Term::lam(&name, ann, body))
    }

    /// `(elim-T target motive method…)`, with any further arguments applied
    /// to the result.
    pub(crate) fn elab_elim(
        &self,
        ctx: &Context,
        datatype: Option<Sym>,
        items: &[SurfaceTerm],
        s: &SurfaceTerm,
    ) -> Result<(Term, Term)> {
        if items.len() < 2 {
            return Err(syntax("an eliminator needs a target and a motive", &s.span));
        }
        let (target, target_ty) = self.infer(ctx, &items[0])?;
        let (dt, params, indices) = self.datatype_instance(ctx, &target_ty, datatype.as_deref()).map_err(|e| e.or_span(&items[0].span))?;
        let motive_ty = data::motive_type(&dt, &params);
        let motive = self.with_mode(EqMode::Default).check(ctx, &items[1], &motive_ty)?;
        let n = dt.ctors.len();
        if items.len() < 2 + n {
            return Err(Error::at(
                ErrorKind::Datatype(format!("elim-{} expects {} method(s), got {}", dt.name, n, items.len() - 2)),
                &s.span,
            ));
        }
        let mut methods = Vec::new();
        for (i, m) in items[2..2 + n].iter().enumerate() {
            let mt = self.normalize(&data::method_type(&dt, i, &motive, &params))?;
            methods.push(self.check(ctx, m, &mt)?);
        }
        let core = Term::elim(&dt.name, target.clone(), motive.clone(), methods).with_span(&s.span);
        let mut ty = self.normalize(&Term::apps(motive, indices.into_iter().chain([target])))?;
        let mut core = core;
        for arg in &items[2 + n..] {
            let (c, t, _) = self.apply(ctx, &core, &ty, arg, false)?;
            core = c;
            ty = t;
        }
        Ok((core, ty))
    }

    /// Splits a type `T params indices` of a registered datatype.
    pub(crate) fn datatype_instance(
        &self,
        ctx: &Context,
        ty: &Term,
        expect: Option<&str>,
    ) -> Result<(alloc::sync::Arc<data::Datatype>, Vec<Term>, Vec<Term>)> {
        let w = self.whnf(ty)?;
        let (head, args) = w.spine();
        let dt = head.as_const().and_then(|c| self.env.datatype(c));
        let Some(dt) = dt.filter(|d| expect.is_none_or(|e| *d.name == *e)) else {
            let what = match expect {
                Some(e) => format!("expected a value of datatype {e}, got one of type {}", show_in(ctx, &w)),
                None => format!("{} is not a datatype", show_in(ctx, &w)),
            };
            return Err(Error::new(ErrorKind::Datatype(what)));
        };
        let np = dt.params.len();
        if args.len() != np + dt.indices.len() {
            return Err(Error::new(ErrorKind::Datatype(format!(
                "{} is not a fully applied instance of {}",
                show_in(ctx, &w),
                dt.name
            ))));
        }
        let args: Vec<Term> = args.into_iter().cloned().collect();
        Ok((dt, args[..np].to_vec(), args[np..].to_vec()))
    }

    /// Type of a core term.
    pub fn infer_term(&self, ctx: &Context, t: &Term) -> Result<Term> {
        match t.kind() {
            TermKind::Var(x) => match ctx.lookup(x) {
                Some(e) => Ok(e.ty.clone()),
                None => Err(Error::new(ErrorKind::Unbound(x.hint.to_string()))),
            },
            TermKind::Const(c) => match self.env.global(c) {
                Some(g) => Ok(g.ty.clone()),
                None => Err(Error::new(ErrorKind::Unbound(c.to_string()))),
            },
            TermKind::Universe => Ok(Term::universe()),
            TermKind::Pi(x, a, b) => {
                self.check_term(ctx, a, &Term::universe())?;
                let a = self.normalize(a)?;
                self.check_term(&ctx.extend(x, a), b, &Term::universe())?;
                Ok(Term::universe())
            }
            TermKind::Lam(x, Some(a), b) => {
                self.check_term(ctx, a, &Term::universe())?;
                let a = self.normalize(a)?;
                let bt = self.infer_term(&ctx.extend(x, a.clone()), b)?;
                Ok(Term::pi(x, a, bt))
            }
            TermKind::Lam(_, None, _) => Err(Error::new(ErrorKind::CannotInfer(show_in(ctx, t).to_string()))),
            TermKind::App(f, a) => {
                let ft = self.whnf(&self.infer_term(ctx, f)?)?;
                let TermKind::Pi(x, dom, cod) = ft.kind() else {
                    return Err(Error::new(ErrorKind::NotAFunction { term: show_in(ctx, f), ty: show_in(ctx, &ft) }));
                };
                self.check_term(ctx, a, dom)?;
                self.normalize(&cod.subst(x, a))
            }
            TermKind::Elim { datatype, target, motive, methods } => {
                let tt = self.infer_term(ctx, target)?;
                let (dt, params, indices) = self.datatype_instance(ctx, &tt, Some(datatype))?;
                self.check_term(ctx, motive, &data::motive_type(&dt, &params))?;
                if methods.len() != dt.ctors.len() {
                    return Err(Error::new(ErrorKind::Datatype(format!(
                        "elim-{} expects {} method(s), got {}",
                        dt.name,
                        dt.ctors.len(),
                        methods.len()
                    ))));
                }
                for (i, m) in methods.iter().enumerate() {
                    let mt = self.normalize(&data::method_type(&dt, i, motive, &params))?;
                    self.check_term(ctx, m, &mt)?;
                }
                self.normalize(&Term::apps(motive.clone(), indices.into_iter().chain([target.clone()])))
            }
            TermKind::Hole(h) => Err(Error::new(ErrorKind::CannotInfer(format!("hole {}", h.hint)))),
        }
    }

    /// Checks a core term against a type.
    pub fn check_term(&self, ctx: &Context, t: &Term, ty: &Term) -> Result<()> {
        if let TermKind::Lam(x, ann, b) = t.kind() {
            let w = self.whnf(ty)?;
            if let TermKind::Pi(y, dom, cod) = w.kind() {
                let dom = match ann {
                    Some(a) => {
                        self.check_term(ctx, a, &Term::universe())?;
                        if !self.def_eq(a, dom)? {
                            return Err(self.mismatch(ctx, dom, a));
                        }
                        self.normalize(a)?
                    }
                    None => dom.clone(),
                };
                return self.check_term(&ctx.extend(x, dom), b, &cod.subst(y, &Term::var(x)));
            }
        }
        let actual = self.infer_term(ctx, t)?;
        if self.def_eq(&actual, ty)? {
            Ok(())
        } else {
            Err(self.mismatch(ctx, ty, &actual))
        }
    }
}

/// Checks the rows of a surface term list against a context, one binder per
/// row; used by forms whose binders are written as `[x : τ]…`.
pub(crate) fn split_binders(items: &[SurfaceTerm]) -> (Vec<(SurfaceTerm, SurfaceTerm)>, &[SurfaceTerm]) {
    let mut out = Vec::new();
    let mut i = 0;
    while let Some((x, ty)) = items.get(i).and_then(as_binder) {
        out.push((x.clone(), ty.clone()));
        i += 1;
    }
    (out, &items[i..])
}
