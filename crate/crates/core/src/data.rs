//! Inductive families: declaration checking, eliminator types, ι-rules and
//! the generic method table.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::check::{as_binder, split_binders, syntax, Elaborator};
use crate::env::{Env, GlobalKind, Positivity};
use crate::error::{Error, ErrorKind, Result};
use crate::print::show;
use crate::reader::SurfaceTerm;
use crate::reduce::{Contractum, Pattern, RuleHead};
use crate::sized::{dec_sz, get_sz, Size};
use crate::term::{alpha_eq, split_pi, Context, Name, Sym, Telescope, Term};

pub const GET_DATATYPE_DEF: &str = "get-datatype-def";
pub const PAT_TO_CTXT: &str = "pat->ctxt";

/// A recursive constructor argument and the indices of its type.
#[derive(Clone, Debug)]
pub struct RecArg {
    pub position: usize,
    pub indices: Vec<Term>,
}

#[derive(Clone, Debug)]
pub struct Ctor {
    pub name: Sym,
    /// Scoped over the datatype's parameters.
    pub args: Telescope,
    /// Scoped over parameters and arguments.
    pub result_indices: Vec<Term>,
    pub recursive: Vec<RecArg>,
}

#[derive(Clone, Debug)]
pub struct Datatype {
    pub name: Sym,
    pub params: Telescope,
    /// Scoped over the parameters.
    pub indices: Telescope,
    pub ctors: Vec<Ctor>,
}

impl Datatype {
    pub fn ctor_index(&self, name: &str) -> Option<usize> {
        self.ctors.iter().position(|c| &*c.name == name)
    }

    pub fn param_vars(&self) -> Vec<Term> {
        self.params.vars()
    }

    /// `T A… i…`.
    pub fn applied(&self, params: &[Term], indices: &[Term]) -> Term {
        Term::apps(Term::const_sym(&self.name), params.iter().chain(indices).cloned())
    }

    /// Type of the type constructor.
    pub fn type_of(&self) -> Term {
        self.params.pi(self.indices.pi(Term::universe()))
    }

    /// Type of constructor `i`.
    pub fn ctor_type(&self, i: usize) -> Term {
        let c = &self.ctors[i];
        let result = self.applied(&self.param_vars(), &c.result_indices);
        self.params.pi(c.args.pi(result))
    }

    /// Argument telescope of constructor `i` with the parameters
    /// instantiated and fresh binders.
    pub fn ctor_args(&self, i: usize, params: &[Term]) -> (Telescope, BTreeMap<Name, Term>) {
        let c = &self.ctors[i];
        let mut map: BTreeMap<Name, Term> = self.params.names().into_iter().zip(params.iter().cloned()).collect();
        let mut out = Vec::new();
        for (x, ty) in &c.args.0 {
            let x2 = x.refresh();
            out.push((x2.clone(), ty.substitute(&map)));
            map.insert(x.clone(), Term::var(&x2));
        }
        (Telescope(out), map)
    }

    /// The decreasing argument chosen for sized views: the last recursive one.
    pub fn decreasing_arg(&self, i: usize) -> Option<usize> {
        self.ctors[i].recursive.last().map(|r| r.position)
    }
}

/// `Π i… (v : T A… i…) Type` for the given parameter instantiation.
pub fn motive_type(dt: &Datatype, params: &[Term]) -> Term {
    let (idx, _) = dt.indices.instantiate(&[]);
    let pmap: BTreeMap<Name, Term> = dt.params.names().into_iter().zip(params.iter().cloned()).collect();
    let idx = Telescope(idx.0.into_iter().map(|(x, t)| (x, t.substitute(&pmap))).collect());
    let (idx, _) = idx.freshen();
    let v = Name::fresh("_");
    let target = dt.applied(params, &idx.vars());
    idx.pi(Term::pi(&v, target, Term::universe()))
}

/// Type of the method for constructor `i` under motive `p`.
pub fn method_type(dt: &Datatype, i: usize, p: &Term, params: &[Term]) -> Term {
    let c = &dt.ctors[i];
    let (args, map) = dt.ctor_args(i, params);
    let arg_vars = args.vars();
    let mut hyps = Vec::new();
    for r in &c.recursive {
        let idx: Vec<Term> = r.indices.iter().map(|t| t.substitute(&map)).collect();
        let ih = Term::apps(p.clone(), idx.into_iter().chain([arg_vars[r.position].clone()]));
        hyps.push((Name::fresh("_"), ih));
    }
    let value = Term::apps(Term::const_sym(&c.name), params.iter().cloned().chain(arg_vars.iter().cloned()));
    let result_idx = c.result_indices.iter().map(|t| t.substitute(&map));
    let result = Term::apps(p.clone(), result_idx.chain([value]));
    args.pi(Telescope(hyps).pi(result))
}

/// Closed type of `elim-T`: parameters, indices, target, motive, methods.
pub fn eliminator_type(dt: &Datatype) -> Term {
    let params = dt.param_vars();
    let v = Name::fresh("v");
    let p = Name::fresh("P");
    let idx_vars = dt.indices.vars();
    let mut methods = Vec::new();
    for (i, c) in dt.ctors.iter().enumerate() {
        methods.push((Name::fresh(&format!("m-{}", c.name)), method_type(dt, i, &Term::var(&p), &params)));
    }
    let result = Term::apps(Term::var(&p), idx_vars.iter().cloned().chain([Term::var(&v)]));
    let body = Term::pi(
        &v,
        dt.applied(&params, &idx_vars),
        Term::pi(&p, motive_type(dt, &params), Telescope(methods).pi(result)),
    );
    dt.params.pi(dt.indices.pi(body))
}

/// Pattern variables and template of the ι-rule for constructor `i`.
pub fn iota_rule(dt: &Datatype) -> Vec<(String, Vec<Pattern>, Term)> {
    let mut out = Vec::new();
    for (i, c) in dt.ctors.iter().enumerate() {
        let ps: Vec<Name> = dt.params.names().iter().map(Name::refresh).collect();
        let xs: Vec<Name> = c.args.names().iter().map(Name::refresh).collect();
        let p = Name::fresh("P");
        let ms: Vec<Name> = dt.ctors.iter().map(|_| Name::fresh("m")).collect();
        let mut matcher = vec![Pattern::Ctor(c.name.clone(), ps.iter().chain(&xs).cloned().map(Pattern::Var).collect())];
        matcher.push(Pattern::Var(p.clone()));
        matcher.extend(ms.iter().cloned().map(Pattern::Var));
        let m_vars: Vec<Term> = ms.iter().map(Term::var).collect();
        let recs = c.recursive.iter().map(|r| Term::elim(&dt.name, Term::var(&xs[r.position]), Term::var(&p), m_vars.clone()));
        let template = Term::apps(Term::var(&ms[i]), xs.iter().map(Term::var).chain(recs));
        out.push((format!("elim-{}/{}", dt.name, c.name), matcher, template));
    }
    out
}

/// Binder types for a constructor pattern against a scrutinee type.
pub type PatToCtxtFn = Arc<dyn Fn(&Datatype, usize, &[Name], &Term) -> Vec<(Name, Term)> + Send + Sync>;

#[derive(Clone)]
pub enum Generic {
    DatatypeDef(Arc<Datatype>),
    PatToCtxt(PatToCtxtFn),
}

impl fmt::Debug for Generic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generic::DatatypeDef(d) => write!(f, "DatatypeDef({})", d.name),
            Generic::PatToCtxt(_) => f.write_str("PatToCtxt"),
        }
    }
}

/// Generic methods keyed by owner (a datatype or sized constructor) and
/// method name.
#[derive(Clone, Debug, Default)]
pub struct MethodTable {
    entries: BTreeMap<(Sym, Sym), Generic>,
}

impl MethodTable {
    pub fn new() -> MethodTable {
        MethodTable::default()
    }

    pub fn register(&mut self, owner: &str, method: &str, g: Generic) {
        self.entries.insert((owner.into(), method.into()), g);
    }

    pub fn lookup(&self, owner: &str, method: &str) -> Result<&Generic> {
        self.entries
            .get(&(Sym::from(owner), Sym::from(method)))
            .ok_or_else(|| Error::new(ErrorKind::Lookup(format!("no method {method} for {owner}"))))
    }

    pub fn get_datatype_def(&self, owner: &str) -> Option<Arc<Datatype>> {
        match self.lookup(owner, GET_DATATYPE_DEF) {
            Ok(Generic::DatatypeDef(d)) => Some(d.clone()),
            _ => None,
        }
    }

    /// Pattern context function for `owner`, falling back to the plain one.
    pub fn pat_to_ctxt(&self, owner: &str) -> PatToCtxtFn {
        match self.lookup(owner, PAT_TO_CTXT) {
            Ok(Generic::PatToCtxt(f)) => f.clone(),
            _ => default_pat_to_ctxt(),
        }
    }
}

fn scrutinee_params(dt: &Datatype, ty: &Term) -> Vec<Term> {
    let (_, args) = ty.spine();
    args.into_iter().take(dt.params.len()).cloned().collect()
}

/// Binds the constructor's arguments at the scrutinee's parameters.
pub fn default_pat_to_ctxt() -> PatToCtxtFn {
    Arc::new(|dt: &Datatype, i: usize, names: &[Name], ty: &Term| {
        let params = scrutinee_params(dt, ty);
        let (args, _) = dt.ctor_args(i, &params);
        let mut map = BTreeMap::new();
        let mut out = Vec::new();
        for ((x, t), n) in args.0.iter().zip(names) {
            out.push((n.clone(), t.substitute(&map)));
            map.insert(x.clone(), Term::var(n));
        }
        out
    })
}

/// Like the default, with every recursive argument one size below the
/// scrutinee.
pub fn sized_pat_to_ctxt() -> PatToCtxtFn {
    Arc::new(|dt: &Datatype, i: usize, names: &[Name], ty: &Term| {
        let mut out = default_pat_to_ctxt()(dt, i, names, ty);
        let s = get_sz(ty);
        if s != Size::Inf {
            for r in &dt.ctors[i].recursive {
                out[r.position].1 = out[r.position].1.with_size(Some(dec_sz(&s)));
            }
        }
        out
    })
}

fn data_err(msg: impl Into<String>, span: &crate::reader::Span) -> Error {
    Error::at(ErrorKind::Datatype(msg.into()), span)
}

/// Elaborates `(define-datatype T [A : τ]… : τ_result [C [x : τ]… : τ_C]…)`
/// and registers everything it introduces.
pub fn define_datatype(env: &mut Env, form: &SurfaceTerm) -> Result<Arc<Datatype>> {
    let items = form.as_list().unwrap_or(&[]);
    let Some(name) = items.get(1).and_then(|s| s.as_symbol()) else {
        return Err(syntax("expected (define-datatype T [A : τ]… : τ [C …]…)", &form.span));
    };
    let name: Sym = name.into();
    if env.contains(&name) {
        return Err(Error::at(ErrorKind::Duplicate(name.to_string()), &items[1].span));
    }
    let (param_binders, rest) = split_binders(&items[2..]);
    let (result_sort, ctor_forms) = match rest {
        [colon, sort, ctors @ ..] if colon.is_symbol(":") => (sort, ctors),
        _ => return Err(syntax("expected `: τ_result` after the parameters", &form.span)),
    };
    env.transaction(|env| {
        let el = Elaborator::new(env);
        let (pctx, params) = el.check_telescope(&Context::new(), &param_binders, &Term::universe())?;
        let sort = el.check_type(&pctx, result_sort)?;
        let (indices, end) = split_pi(&sort);
        if !end.is_universe() {
            return Err(data_err(format!("{name} must end in Type, got {}", show(&end)), &result_sort.span));
        }
        let mut dt = Datatype { name: name.clone(), params, indices, ctors: Vec::new() };
        env.add_global(&name, dt.type_of(), GlobalKind::TypeCtor);

        let mut ctors = Vec::new();
        for cf in ctor_forms {
            let ctor = elaborate_ctor(env, &dt, &pctx, cf)?;
            if ctors.iter().any(|c: &Ctor| c.name == ctor.name) || env.contains(&ctor.name) || ctor.name == name {
                return Err(Error::at(ErrorKind::Duplicate(ctor.name.to_string()), &cf.span));
            }
            ctors.push(ctor);
        }
        dt.ctors = ctors;
        let dt = Arc::new(dt);
        for (i, c) in dt.ctors.iter().enumerate() {
            env.add_global(&c.name, dt.ctor_type(i), GlobalKind::DataCtor { datatype: name.clone(), index: i });
        }
        for (rule_name, matcher, template) in iota_rule(&dt) {
            env.rules.register(&rule_name, RuleHead::Elim(name.clone()), matcher, Contractum::Template(template))?;
        }
        env.methods.register(&name, GET_DATATYPE_DEF, Generic::DatatypeDef(dt.clone()));
        Ok(dt)
    })
}

fn elaborate_ctor(env: &mut Env, dt: &Datatype, pctx: &Context, form: &SurfaceTerm) -> Result<Ctor> {
    let (cname, rest): (&str, &[SurfaceTerm]) = match (form.as_symbol(), form.as_list()) {
        (Some(c), _) => (c, &[]),
        (None, Some([head, rest @ ..])) if head.as_symbol().is_some() => (head.as_symbol().unwrap(), rest),
        _ => return Err(syntax("expected a constructor [C [x : τ]… : τ_C]", &form.span)),
    };
    let (binders, rest) = split_binders(rest);
    let result_form = match rest {
        [] => None,
        [colon, ty] if colon.is_symbol(":") => Some(ty),
        _ => return Err(syntax(format!("constructor {cname}: expected `: τ` after the arguments"), &form.span)),
    };
    let el = Elaborator::new(env);
    let (actx, args) = el.check_telescope(pctx, &binders, &Term::universe())?;
    let result = match result_form {
        Some(r) => el.check_type(&actx, r)?,
        None if dt.indices.is_empty() => dt.applied(&dt.param_vars(), &[]),
        None => return Err(data_err(format!("constructor {cname} needs a result type with indices"), &form.span)),
    };
    let span = result_form.map(|r| &r.span).unwrap_or(&form.span);
    let (head, rargs) = result.spine();
    if head.as_const() != Some(&dt.name) {
        return Err(data_err(format!("constructor {cname} must produce {}, got {}", dt.name, show(&result)), span));
    }
    let np = dt.params.len();
    if rargs.len() != np + dt.indices.len() {
        return Err(data_err(format!("constructor {cname}: {} is not fully applied", show(&result)), span));
    }
    for (p, a) in dt.params.vars().iter().zip(&rargs) {
        if !alpha_eq(p, a) {
            return Err(data_err(
                format!("constructor {cname}: parameter {} must be passed unchanged, got {}", show(p), show(a)),
                span,
            ));
        }
    }
    let result_indices: Vec<Term> = rargs[np..].iter().map(|t| (*t).clone()).collect();
    let mut recursive = Vec::new();
    for (k, (x, ty)) in args.0.iter().enumerate() {
        let (h, targs) = ty.spine();
        if h.as_const() == Some(&dt.name) {
            let uniform = targs.len() == np + dt.indices.len()
                && dt.params.vars().iter().zip(&targs).all(|(p, a)| alpha_eq(p, a));
            if !uniform {
                return Err(data_err(
                    format!("constructor {cname}: argument {} must use the parameters unchanged", x.hint),
                    &form.span,
                ));
            }
            recursive.push(RecArg { position: k, indices: targs[np..].iter().map(|t| (*t).clone()).collect() });
        } else if ty.mentions_const(&dt.name) {
            let msg = format!(
                "{} occurs in a non-strictly-positive or nested position in argument {} of {cname}",
                dt.name, x.hint
            );
            match env.config.positivity {
                Positivity::Off => {}
                Positivity::Warn => env.warnings.push(format!("{}: warning: {msg}", form.span)),
                Positivity::Error => return Err(Error::at(ErrorKind::Positivity(msg), &form.span)),
            }
        }
    }
    Ok(Ctor { name: cname.into(), args, result_indices, recursive })
}

/// Whether `s` is written as a binder; exported for forms sharing the syntax.
pub fn is_binder(s: &SurfaceTerm) -> bool {
    as_binder(s).is_some()
}
