//! Rule-based reduction: a registry of rewrite rules keyed by head, weak-head
//! and full normalization under a step budget, and an audit trace that can be
//! replayed.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, ErrorKind, Result};
use crate::print::show;
use crate::reader::Span;
use crate::term::{rebuild, Name, Sym, Term, TermKind};

pub const DEFAULT_FUEL: u64 = 100_000;

/// What a rule is attached to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleHead {
    /// Application of a `λ`.
    Beta,
    Const(Sym),
    /// Eliminator of the named datatype.
    Elim(Sym),
}

impl fmt::Display for RuleHead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleHead::Beta => f.write_str("β"),
            RuleHead::Const(c) => f.write_str(c),
            RuleHead::Elim(d) => write!(f, "elim-{d}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    Var(Name),
    Wild,
    /// Constructor applied to exactly these argument patterns.
    Ctor(Sym, Vec<Pattern>),
    As(Name, alloc::boxed::Box<Pattern>),
}

impl Pattern {
    pub fn vars(&self, out: &mut Vec<Name>) {
        match self {
            Pattern::Var(x) => out.push(x.clone()),
            Pattern::Wild => {}
            Pattern::Ctor(_, ps) => ps.iter().for_each(|p| p.vars(out)),
            Pattern::As(x, p) => {
                out.push(x.clone());
                p.vars(out);
            }
        }
    }

    fn shape(&self) -> Shape {
        match self {
            Pattern::Var(_) | Pattern::Wild => Shape::Any,
            Pattern::Ctor(c, ps) => Shape::Ctor(c.clone(), ps.iter().map(Pattern::shape).collect()),
            Pattern::As(_, p) => p.shape(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Shape {
    Any,
    Ctor(Sym, Vec<Shape>),
}

pub type Bindings = BTreeMap<Name, Term>;

/// Builds the contractum from the rule's head term and the matched bindings.
pub type BuildFn = Arc<dyn Fn(&Term, &Bindings) -> Term + Send + Sync>;

#[derive(Clone)]
pub enum Contractum {
    /// Instantiated by substituting the bindings.
    Template(Term),
    Builder(BuildFn),
}

impl fmt::Debug for Contractum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Contractum::Template(t) => write!(f, "Template({t})"),
            Contractum::Builder(_) => f.write_str("Builder"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub id: usize,
    pub name: String,
    pub head: RuleHead,
    pub matcher: Vec<Pattern>,
    pub contractum: Contractum,
}

impl Rule {
    pub fn arity(&self) -> usize {
        self.matcher.len()
    }
}

#[derive(Clone, Debug, Default)]
pub struct RuleRegistry {
    rules: Vec<Arc<Rule>>,
    by_head: BTreeMap<RuleHead, Vec<usize>>,
}

impl RuleRegistry {
    pub fn new() -> RuleRegistry {
        RuleRegistry::default()
    }

    /// Registry holding only β.
    pub fn with_beta() -> RuleRegistry {
        let mut reg = RuleRegistry::new();
        reg.register("β", RuleHead::Beta, vec![Pattern::Var(Name::fresh("e"))], beta_contractum())
            .expect("empty registry accepts β");
        reg
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Rule> {
        self.rules.get(id).map(|r| &**r)
    }

    pub fn rules_for(&self, head: &RuleHead) -> impl Iterator<Item = &Rule> {
        self.by_head.get(head).into_iter().flatten().map(move |&i| &*self.rules[i])
    }

    pub fn has_head(&self, head: &RuleHead) -> bool {
        self.by_head.contains_key(head)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().map(|r| &**r)
    }

    /// Adds a rule, returning its id.
    pub fn register(
        &mut self,
        name: &str,
        head: RuleHead,
        matcher: Vec<Pattern>,
        contractum: Contractum,
    ) -> Result<usize> {
        let mut vars = Vec::new();
        for p in &matcher {
            p.vars(&mut vars);
        }
        for (i, x) in vars.iter().enumerate() {
            if vars[..i].contains(x) {
                return Err(Error::new(ErrorKind::Rule(format!("{name}: pattern variable {} bound twice", x.hint))));
            }
        }
        if let Contractum::Template(t) = &contractum {
            if let Some(x) = t.free_vars().into_iter().find(|x| !vars.contains(x)) {
                return Err(Error::new(ErrorKind::Rule(format!(
                    "{name}: contractum mentions {} which the pattern does not bind",
                    x.hint
                ))));
            }
        }
        let shape: Vec<Shape> = matcher.iter().map(Pattern::shape).collect();
        for r in self.rules_for(&head) {
            if r.matcher.iter().map(Pattern::shape).collect::<Vec<_>>() == shape {
                return Err(Error::new(ErrorKind::Rule(format!("duplicate rule for {head}: {name} overlaps {}", r.name))));
            }
        }
        let id = self.rules.len();
        self.rules.push(Arc::new(Rule { id, name: name.to_string(), head: head.clone(), matcher, contractum }));
        self.by_head.entry(head).or_default().push(id);
        Ok(id)
    }
}

fn beta_contractum() -> Contractum {
    Contractum::Builder(Arc::new(|head: &Term, b: &Bindings| {
        let arg = b.values().next().cloned().expect("β binds its argument");
        match head.kind() {
            TermKind::Lam(x, _, body) => body.subst(x, &arg),
            _ => Term::app(head.clone(), arg),
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub index: usize,
    pub head: String,
    pub rule_id: usize,
    /// Location of the redex inside the term being reduced.
    pub path: Vec<usize>,
    pub span: Option<Span>,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.span {
            Some(s) => write!(f, "{} {} {}", self.head, s, self.index),
            None => write!(f, "{} - {}", self.head, self.index),
        }
    }
}

/// A normalizer over a fixed registry with a shared step budget.
pub struct Reducer<'a> {
    pub registry: &'a RuleRegistry,
    fuel: u64,
    last_rule: Option<String>,
    trace: Option<Vec<TraceStep>>,
}

fn apply_rule(rule: &Rule, head: &Term, b: &Bindings) -> Term {
    match &rule.contractum {
        Contractum::Template(t) => t.substitute(b),
        Contractum::Builder(f) => f(head, b),
    }
}

/// Where a redex's matched inputs live.
enum Inputs {
    /// Leading spine arguments.
    Args,
    /// Fields of an eliminator node: target, motive, methods.
    ElimFields,
}

impl<'a> Reducer<'a> {
    pub fn new(registry: &'a RuleRegistry, fuel: u64) -> Reducer<'a> {
        Reducer { registry, fuel, last_rule: None, trace: None }
    }

    /// Records every rewrite.
    pub fn audited(registry: &'a RuleRegistry, fuel: u64) -> Reducer<'a> {
        Reducer { registry, fuel, last_rule: None, trace: Some(Vec::new()) }
    }

    pub fn trace(&self) -> Option<&[TraceStep]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Vec<TraceStep> {
        self.trace.take().unwrap_or_default()
    }

    pub fn remaining_fuel(&self) -> u64 {
        self.fuel
    }

    pub fn whnf(&mut self, t: &Term) -> Result<Term> {
        self.whnf_at(t, &mut Vec::new())
    }

    pub fn normalize(&mut self, t: &Term) -> Result<Term> {
        self.normalize_at(t, &mut Vec::new())
    }

    fn spend(&mut self, rule: &Rule, redex: &Term, path: &[usize]) -> Result<()> {
        if self.fuel == 0 {
            return Err(Error::new(ErrorKind::Diverged {
                rule: self.last_rule.clone().unwrap_or_else(|| rule.name.clone()),
                subterm: show(redex),
            }));
        }
        self.fuel -= 1;
        self.last_rule = Some(rule.name.clone());
        if let Some(tr) = &mut self.trace {
            let index = tr.len();
            tr.push(TraceStep {
                index,
                head: rule.head.to_string(),
                rule_id: rule.id,
                path: path.to_vec(),
                span: redex.meta().span.clone(),
            });
        }
        Ok(())
    }

    fn whnf_at(&mut self, t: &Term, path: &mut Vec<usize>) -> Result<Term> {
        let mut cur = t.clone();
        'outer: loop {
            let (head, args) = cur.spine();
            let head = head.clone();
            let mut args: Vec<Term> = args.into_iter().cloned().collect();
            let (rule_head, inputs) = match head.kind() {
                TermKind::Lam(..) if !args.is_empty() => (RuleHead::Beta, Inputs::Args),
                TermKind::Const(c) => (RuleHead::Const(c.clone()), Inputs::Args),
                TermKind::Elim { datatype, .. } => (RuleHead::Elim(datatype.clone()), Inputs::ElimFields),
                _ => return Ok(cur),
            };
            if !self.registry.has_head(&rule_head) {
                return Ok(cur);
            }
            let n = args.len();
            let rules: Vec<&Rule> = self.registry.rules_for(&rule_head).collect();
            let mut head = head;
            for rule in rules {
                let arity = rule.arity();
                let mut bindings = Bindings::new();
                let matched = match inputs {
                    Inputs::Args => {
                        if n < arity {
                            continue;
                        }
                        let mut ok = true;
                        for i in 0..arity {
                            // Path of argument i within the spine rooted at `path`.
                            let depth = path.len();
                            path.extend(core::iter::repeat_n(0, n - 1 - i));
                            path.push(1);
                            let r = self.match_pat(&rule.matcher[i], &mut args[i], &mut bindings, path);
                            path.truncate(depth);
                            if !r? {
                                ok = false;
                                break;
                            }
                        }
                        ok
                    }
                    Inputs::ElimFields => {
                        let TermKind::Elim { datatype, target, motive, methods } = head.kind() else {
                            unreachable!()
                        };
                        let mut fields = vec![target.clone(), motive.clone()];
                        fields.extend(methods.iter().cloned());
                        if fields.len() != arity {
                            continue;
                        }
                        let mut ok = true;
                        for i in 0..arity {
                            let depth = path.len();
                            path.extend(core::iter::repeat_n(0, n));
                            path.push(i);
                            let r = self.match_pat(&rule.matcher[i], &mut fields[i], &mut bindings, path);
                            path.truncate(depth);
                            if !r? {
                                ok = false;
                                break;
                            }
                        }
                        let methods2 = fields.split_off(2);
                        let motive2 = fields.pop().unwrap();
                        let target2 = fields.pop().unwrap();
                        head = Term::with_meta(
                            TermKind::Elim { datatype: datatype.clone(), target: target2, motive: motive2, methods: methods2 },
                            head.meta().clone(),
                        );
                        ok
                    }
                };
                if !matched {
                    continue;
                }
                let consumed = match inputs {
                    Inputs::Args => arity,
                    Inputs::ElimFields => 0,
                };
                let redex = Term::apps(head.clone(), args[..consumed].iter().cloned());
                let depth = path.len();
                path.extend(core::iter::repeat_n(0, n - consumed));
                self.spend(rule, &redex, path)?;
                path.truncate(depth);
                let mut out = apply_rule(rule, &head, &bindings);
                if !redex.meta().is_empty() {
                    out = out.set_meta(redex.meta().merged(out.meta()));
                }
                cur = Term::apps(out, args.drain(consumed..));
                continue 'outer;
            }
            // No rule fired; keep whatever argument reduction happened.
            return Ok(Term::apps(head, args).set_meta(cur.meta().clone()));
        }
    }

    /// Matches `p` against `t`, reducing `t` to weak-head form in place
    /// when a constructor is demanded.
    fn match_pat(&mut self, p: &Pattern, t: &mut Term, b: &mut Bindings, path: &mut Vec<usize>) -> Result<bool> {
        match p {
            Pattern::Wild => Ok(true),
            Pattern::Var(x) => {
                b.insert(x.clone(), t.clone());
                Ok(true)
            }
            Pattern::As(x, inner) => {
                let ok = self.match_pat(inner, t, b, path)?;
                b.insert(x.clone(), t.clone());
                Ok(ok)
            }
            Pattern::Ctor(c, ps) => {
                *t = self.whnf_at(t, path)?;
                let (head, args) = t.spine();
                if head.as_const() != Some(c) || args.len() != ps.len() {
                    return Ok(false);
                }
                let n = args.len();
                let mut args: Vec<Term> = args.into_iter().cloned().collect();
                let head = head.clone();
                let mut ok = true;
                for (i, sub) in ps.iter().enumerate() {
                    let depth = path.len();
                    path.extend(core::iter::repeat_n(0, n - 1 - i));
                    path.push(1);
                    let r = self.match_pat(sub, &mut args[i], b, path);
                    path.truncate(depth);
                    if !r? {
                        ok = false;
                        break;
                    }
                }
                *t = rebuild_spine(t, head, args);
                Ok(ok)
            }
        }
    }

    fn normalize_at(&mut self, t: &Term, path: &mut Vec<usize>) -> Result<Term> {
        let w = self.whnf_at(t, path)?;
        let mut i = 0usize;
        let mut err = None;
        let out = match w.kind() {
            TermKind::Lam(x, None, body) => {
                path.push(1);
                let r = self.normalize_at(body, path);
                path.pop();
                let body2 = r?;
                if body2.ptr_eq(body) {
                    w.clone()
                } else {
                    Term::with_meta(TermKind::Lam(x.clone(), None, body2), w.meta().clone())
                }
            }
            TermKind::Lam(..) => {
                let mut idx = [0usize, 1].into_iter();
                rebuild(&w, |c| {
                    let k = idx.next().unwrap_or(1);
                    if err.is_some() {
                        return c.clone();
                    }
                    path.push(k);
                    let r = self.normalize_at(c, path);
                    path.pop();
                    r.unwrap_or_else(|e| {
                        err = Some(e);
                        c.clone()
                    })
                })
            }
            _ => rebuild(&w, |c| {
                let k = i;
                i += 1;
                if err.is_some() {
                    return c.clone();
                }
                path.push(k);
                let r = self.normalize_at(c, path);
                path.pop();
                r.unwrap_or_else(|e| {
                    err = Some(e);
                    c.clone()
                })
            }),
        };
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

fn rebuild_spine(orig: &Term, head: Term, args: Vec<Term>) -> Term {
    let out = Term::apps(head, args);
    if orig.meta().is_empty() {
        out
    } else {
        out.set_meta(orig.meta().clone())
    }
}

/// Pure matching used by replay: no reduction of the inputs.
fn match_pure(p: &Pattern, t: &Term, b: &mut Bindings) -> bool {
    match p {
        Pattern::Wild => true,
        Pattern::Var(x) => {
            b.insert(x.clone(), t.clone());
            true
        }
        Pattern::As(x, inner) => {
            b.insert(x.clone(), t.clone());
            match_pure(inner, t, b)
        }
        Pattern::Ctor(c, ps) => {
            let (head, args) = t.spine();
            head.as_const() == Some(c) && args.len() == ps.len() && ps.iter().zip(args).all(|(p, a)| match_pure(p, a, b))
        }
    }
}

/// Applies one recorded step to `t`.
pub fn replay_step(reg: &RuleRegistry, t: &Term, step: &TraceStep) -> Result<Term> {
    let fail = |why: &str| Error::new(ErrorKind::Rule(format!("replay step {}: {why}", step.index)));
    let rule = reg.get(step.rule_id).ok_or_else(|| fail("unknown rule"))?;
    let redex = t.at_path(&step.path).ok_or_else(|| fail("path leaves the term"))?;
    let mut b = Bindings::new();
    let out = match (&rule.head, redex.kind()) {
        (RuleHead::Elim(d), TermKind::Elim { datatype, target, motive, methods }) if d == datatype => {
            let mut fields = vec![target, motive];
            fields.extend(methods.iter());
            if fields.len() != rule.arity() || !rule.matcher.iter().zip(fields).all(|(p, f)| match_pure(p, f, &mut b)) {
                return Err(fail("pattern does not match"));
            }
            apply_rule(rule, redex, &b)
        }
        (RuleHead::Elim(_), _) => return Err(fail("not an eliminator")),
        _ => {
            let (head, args) = redex.spine();
            if args.len() != rule.arity() {
                return Err(fail("arity"));
            }
            let head_ok = match (&rule.head, head.kind()) {
                (RuleHead::Beta, TermKind::Lam(..)) => true,
                (RuleHead::Const(c), TermKind::Const(d)) => c == d,
                _ => false,
            };
            if !head_ok || !rule.matcher.iter().zip(args).all(|(p, a)| match_pure(p, a, &mut b)) {
                return Err(fail("pattern does not match"));
            }
            apply_rule(rule, head, &b)
        }
    };
    let out = if redex.meta().is_empty() { out } else { out.set_meta(redex.meta().merged(out.meta())) };
    t.replace_at(&step.path, out).ok_or_else(|| fail("path leaves the term"))
}

/// Re-applies a trace from `t`.
pub fn replay(reg: &RuleRegistry, t: &Term, trace: &[TraceStep]) -> Result<Term> {
    trace.iter().try_fold(t.clone(), |acc, s| replay_step(reg, &acc, s))
}

pub fn whnf(reg: &RuleRegistry, t: &Term, fuel: u64) -> Result<Term> {
    Reducer::new(reg, fuel).whnf(t)
}

pub fn normalize(reg: &RuleRegistry, t: &Term, fuel: u64) -> Result<Term> {
    Reducer::new(reg, fuel).normalize(t)
}
