//! Core syntax: names, terms, telescopes and contexts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};
use core::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use crate::reader::Span;
use crate::sized::Size;

/// Global (top-level) name.
pub type Sym = Arc<str>;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// A bound or free variable. Identity is the numeric id alone.
#[derive(Clone)]
pub struct Name {
    pub id: u64,
    pub hint: Arc<str>,
}

impl Name {
    pub fn fresh(hint: &str) -> Name {
        Name { id: NEXT_ID.fetch_add(1, AtomicOrdering::Relaxed), hint: Arc::from(hint) }
    }

    /// A fresh name sharing this one's hint.
    pub fn refresh(&self) -> Name {
        Name { id: NEXT_ID.fetch_add(1, AtomicOrdering::Relaxed), hint: self.hint.clone() }
    }

    /// Anonymous names are never found by textual lookup.
    pub fn is_anonymous(&self) -> bool {
        self.hint.is_empty() || &*self.hint == "_"
    }
}

pub fn fresh(hint: &str) -> Name {
    Name::fresh(hint)
}

impl PartialEq for Name {
    fn eq(&self, other: &Name) -> bool {
        self.id == other.id
    }
}
impl Eq for Name {}
impl PartialOrd for Name {
    fn partial_cmp(&self, other: &Name) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Name {
    fn cmp(&self, other: &Name) -> Ordering {
        self.id.cmp(&other.id)
    }
}
impl Hash for Name {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}
impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.hint, self.id)
    }
}

/// Per-node metadata. Ignored by equality and α-equivalence.
#[derive(Clone, Debug, Default)]
pub struct Meta {
    pub axiom: Option<Sym>,
    pub size: Option<Size>,
    pub rec_arg: bool,
    pub rec_ok: bool,
    pub span: Option<Span>,
}

impl Meta {
    pub fn is_empty(&self) -> bool {
        self.axiom.is_none() && self.size.is_none() && !self.rec_arg && !self.rec_ok && self.span.is_none()
    }

    /// Fields set in `other` win.
    pub fn merged(&self, other: &Meta) -> Meta {
        Meta {
            axiom: other.axiom.clone().or_else(|| self.axiom.clone()),
            size: other.size.clone().or_else(|| self.size.clone()),
            rec_arg: self.rec_arg || other.rec_arg,
            rec_ok: self.rec_ok || other.rec_ok,
            span: other.span.clone().or_else(|| self.span.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    Var(Name),
    Const(Sym),
    Universe,
    Pi(Name, Term, Term),
    Lam(Name, Option<Term>, Term),
    App(Term, Term),
    /// The method count is validated against the datatype by the elaborator.
    Elim { datatype: Sym, target: Term, motive: Term, methods: Vec<Term> },
    Hole(Name),
}

#[derive(Debug)]
struct Node {
    kind: TermKind,
    meta: Meta,
}

/// Immutable, cheaply cloned term.
#[derive(Clone)]
pub struct Term(Arc<Node>);

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.kind == other.0.kind
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::print::show(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::print::show(self))
    }
}

impl Term {
    pub fn new(kind: TermKind) -> Term {
        Term(Arc::new(Node { kind, meta: Meta::default() }))
    }

    pub fn with_meta(kind: TermKind, meta: Meta) -> Term {
        Term(Arc::new(Node { kind, meta }))
    }

    pub fn var(name: &Name) -> Term {
        Term::new(TermKind::Var(name.clone()))
    }
    pub fn constant(name: &str) -> Term {
        Term::new(TermKind::Const(Arc::from(name)))
    }
    pub fn const_sym(name: &Sym) -> Term {
        Term::new(TermKind::Const(name.clone()))
    }
    pub fn universe() -> Term {
        Term::new(TermKind::Universe)
    }
    pub fn pi(x: &Name, dom: Term, cod: Term) -> Term {
        Term::new(TermKind::Pi(x.clone(), dom, cod))
    }
    /// Non-dependent arrow with an anonymous binder.
    pub fn arrow(dom: Term, cod: Term) -> Term {
        Term::pi(&Name::fresh("_"), dom, cod)
    }
    pub fn lam(x: &Name, ann: Option<Term>, body: Term) -> Term {
        Term::new(TermKind::Lam(x.clone(), ann, body))
    }
    pub fn app(f: Term, a: Term) -> Term {
        Term::new(TermKind::App(f, a))
    }
    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }
    pub fn elim(datatype: &Sym, target: Term, motive: Term, methods: Vec<Term>) -> Term {
        Term::new(TermKind::Elim { datatype: datatype.clone(), target, motive, methods })
    }
    pub fn hole(name: &Name) -> Term {
        Term::new(TermKind::Hole(name.clone()))
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn meta(&self) -> &Meta {
        &self.0.meta
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Same node with replaced metadata.
    pub fn set_meta(&self, meta: Meta) -> Term {
        Term::with_meta(self.0.kind.clone(), meta)
    }

    pub fn map_meta(&self, f: impl FnOnce(&mut Meta)) -> Term {
        let mut meta = self.0.meta.clone();
        f(&mut meta);
        self.set_meta(meta)
    }

    pub fn with_size(&self, size: Option<Size>) -> Term {
        self.map_meta(|m| m.size = size)
    }

    pub fn with_span(&self, span: &Span) -> Term {
        self.map_meta(|m| m.span = Some(span.clone()))
    }

    pub fn size_tag(&self) -> Option<&Size> {
        self.0.meta.size.as_ref()
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self.kind() {
            TermKind::Var(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_const(&self) -> Option<&Sym> {
        match self.kind() {
            TermKind::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_universe(&self) -> bool {
        matches!(self.kind(), TermKind::Universe)
    }

    /// Head and arguments of an application spine.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut head = self;
        let mut args = Vec::new();
        while let TermKind::App(f, a) = head.kind() {
            args.push(a);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    /// Constant at the head of an application spine.
    pub fn head_const(&self) -> Option<&Sym> {
        self.spine().0.as_const()
    }

    /// Immediate children in path order.
    pub fn children(&self) -> Vec<&Term> {
        match self.kind() {
            TermKind::Var(_) | TermKind::Const(_) | TermKind::Universe | TermKind::Hole(_) => Vec::new(),
            TermKind::Pi(_, a, b) => vec![a, b],
            TermKind::Lam(_, ann, b) => match ann {
                Some(a) => vec![a, b],
                None => vec![b],
            },
            TermKind::App(f, a) => vec![f, a],
            TermKind::Elim { target, motive, methods, .. } => {
                let mut out = vec![target, motive];
                out.extend(methods.iter());
                out
            }
        }
    }

    /// Subterm at `path`. Child indices: Pi 0 domain / 1 codomain, Lam 0
    /// annotation / 1 body, App 0 function / 1 argument, Elim 0 target /
    /// 1 motive / 2.. methods.
    pub fn at_path(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = child(cur, i)?;
        }
        Some(cur)
    }

    /// Replaces the subterm at `path`, keeping the metadata of every node on
    /// the way down.
    pub fn replace_at(&self, path: &[usize], new: Term) -> Option<Term> {
        let Some((&i, rest)) = path.split_first() else {
            return Some(new);
        };
        let sub = child(self, i)?.replace_at(rest, new)?;
        let kind = match (self.kind().clone(), i) {
            (TermKind::Pi(x, _, b), 0) => TermKind::Pi(x, sub, b),
            (TermKind::Pi(x, a, _), 1) => TermKind::Pi(x, a, sub),
            (TermKind::Lam(x, Some(_), b), 0) => TermKind::Lam(x, Some(sub), b),
            (TermKind::Lam(x, a, _), 1) => TermKind::Lam(x, a, sub),
            (TermKind::App(_, a), 0) => TermKind::App(sub, a),
            (TermKind::App(f, _), 1) => TermKind::App(f, sub),
            (TermKind::Elim { datatype, motive, methods, .. }, 0) => {
                TermKind::Elim { datatype, target: sub, motive, methods }
            }
            (TermKind::Elim { datatype, target, methods, .. }, 1) => {
                TermKind::Elim { datatype, target, motive: sub, methods }
            }
            (TermKind::Elim { datatype, target, motive, mut methods }, k) => {
                methods[k - 2] = sub;
                TermKind::Elim { datatype, target, motive, methods }
            }
            _ => return None,
        };
        Some(Term::with_meta(kind, self.meta().clone()))
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    /// Whether `x` occurs free.
    pub fn occurs(&self, x: &Name) -> bool {
        match self.kind() {
            TermKind::Var(y) => x == y,
            TermKind::Const(_) | TermKind::Universe | TermKind::Hole(_) => false,
            TermKind::Pi(y, a, b) => a.occurs(x) || (y != x && b.occurs(x)),
            TermKind::Lam(y, a, b) => a.as_ref().is_some_and(|a| a.occurs(x)) || (y != x && b.occurs(x)),
            TermKind::App(f, a) => f.occurs(x) || a.occurs(x),
            TermKind::Elim { target, motive, methods, .. } => {
                target.occurs(x) || motive.occurs(x) || methods.iter().any(|m| m.occurs(x))
            }
        }
    }

    /// Hole names in left-to-right order.
    pub fn holes(&self) -> Vec<Name> {
        let mut out = Vec::new();
        fn go(t: &Term, out: &mut Vec<Name>) {
            if let TermKind::Hole(h) = t.kind() {
                out.push(h.clone());
            }
            for c in t.children() {
                go(c, out);
            }
        }
        go(self, &mut out);
        out
    }

    /// Whether any constant in `names` occurs.
    pub fn mentions_const(&self, name: &str) -> bool {
        match self.kind() {
            TermKind::Const(c) => &**c == name,
            TermKind::Elim { datatype, .. } if &**datatype == name => true,
            _ => self.children().iter().any(|c| c.mentions_const(name)),
        }
    }

    /// Capture-avoiding replacement of `x` by `v`.
    pub fn subst(&self, x: &Name, v: &Term) -> Term {
        let mut map = BTreeMap::new();
        map.insert(x.clone(), v.clone());
        self.substitute(&map)
    }

    /// Simultaneous capture-avoiding substitution.
    pub fn substitute(&self, map: &BTreeMap<Name, Term>) -> Term {
        if map.is_empty() {
            return self.clone();
        }
        let mut avoid = BTreeSet::new();
        for v in map.values() {
            avoid.extend(v.free_vars());
        }
        subst_go(self, map, &avoid)
    }

    /// Replaces hole `h` by `v`. Holes are not binders, so no renaming.
    pub fn fill_hole(&self, h: &Name, v: &Term) -> Term {
        match self.kind() {
            TermKind::Hole(g) if g == h => v.clone(),
            _ => rebuild(self, |c| c.fill_hole(h, v)),
        }
    }

    /// Strips every metadata tag recursively.
    pub fn erase_meta(&self) -> Term {
        let t = rebuild(self, |c| c.erase_meta());
        if t.meta().is_empty() {
            t
        } else {
            t.set_meta(Meta::default())
        }
    }

    /// Strips size tags recursively.
    pub fn erase_sizes(&self) -> Term {
        let t = rebuild(self, |c| c.erase_sizes());
        if t.meta().size.is_none() {
            t
        } else {
            t.map_meta(|m| m.size = None)
        }
    }

    /// Replaces every constant `from` by `to`.
    pub fn replace_const(&self, from: &str, to: &Term) -> Term {
        match self.kind() {
            TermKind::Const(c) if &**c == from => to.clone(),
            _ => rebuild(self, |c| c.replace_const(from, to)),
        }
    }
}

fn child(t: &Term, i: usize) -> Option<&Term> {
    match (t.kind(), i) {
        (TermKind::Pi(_, a, _), 0) => Some(a),
        (TermKind::Pi(_, _, b), 1) => Some(b),
        (TermKind::Lam(_, a, _), 0) => a.as_ref(),
        (TermKind::Lam(_, _, b), 1) => Some(b),
        (TermKind::App(f, _), 0) => Some(f),
        (TermKind::App(_, a), 1) => Some(a),
        (TermKind::Elim { target, .. }, 0) => Some(target),
        (TermKind::Elim { motive, .. }, 1) => Some(motive),
        (TermKind::Elim { methods, .. }, k) => methods.get(k - 2),
        _ => None,
    }
}

/// Applies `f` to every child, reusing `t` when nothing changed.
pub fn rebuild(t: &Term, mut f: impl FnMut(&Term) -> Term) -> Term {
    let kind = match t.kind() {
        TermKind::Var(_) | TermKind::Const(_) | TermKind::Universe | TermKind::Hole(_) => return t.clone(),
        TermKind::Pi(x, a, b) => {
            let (a2, b2) = (f(a), f(b));
            if a2.ptr_eq(a) && b2.ptr_eq(b) {
                return t.clone();
            }
            TermKind::Pi(x.clone(), a2, b2)
        }
        TermKind::Lam(x, a, b) => {
            let a2 = a.as_ref().map(&mut f);
            let b2 = f(b);
            let same_a = match (a, &a2) {
                (Some(a), Some(a2)) => a.ptr_eq(a2),
                _ => true,
            };
            if same_a && b2.ptr_eq(b) {
                return t.clone();
            }
            TermKind::Lam(x.clone(), a2, b2)
        }
        TermKind::App(g, a) => {
            let (g2, a2) = (f(g), f(a));
            if g2.ptr_eq(g) && a2.ptr_eq(a) {
                return t.clone();
            }
            TermKind::App(g2, a2)
        }
        TermKind::Elim { datatype, target, motive, methods } => {
            let t2 = f(target);
            let m2 = f(motive);
            let ms2: Vec<Term> = methods.iter().map(&mut f).collect();
            if t2.ptr_eq(target) && m2.ptr_eq(motive) && ms2.iter().zip(methods).all(|(a, b)| a.ptr_eq(b)) {
                return t.clone();
            }
            TermKind::Elim { datatype: datatype.clone(), target: t2, motive: m2, methods: ms2 }
        }
    };
    Term::with_meta(kind, t.meta().clone())
}

fn collect_free(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match t.kind() {
        TermKind::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        TermKind::Const(_) | TermKind::Universe | TermKind::Hole(_) => {}
        TermKind::Pi(x, a, b) | TermKind::Lam(x, Some(a), b) => {
            collect_free(a, bound, out);
            bound.push(x.clone());
            collect_free(b, bound, out);
            bound.pop();
        }
        TermKind::Lam(x, None, b) => {
            bound.push(x.clone());
            collect_free(b, bound, out);
            bound.pop();
        }
        TermKind::App(f, a) => {
            collect_free(f, bound, out);
            collect_free(a, bound, out);
        }
        TermKind::Elim { target, motive, methods, .. } => {
            collect_free(target, bound, out);
            collect_free(motive, bound, out);
            for m in methods {
                collect_free(m, bound, out);
            }
        }
    }
}

fn subst_binder(
    x: &Name,
    body: &Term,
    map: &BTreeMap<Name, Term>,
    avoid: &BTreeSet<Name>,
) -> (Name, Term) {
    if avoid.contains(x) {
        let x2 = x.refresh();
        let mut inner = map.clone();
        inner.insert(x.clone(), Term::var(&x2));
        let mut avoid2 = avoid.clone();
        avoid2.insert(x2.clone());
        (x2, subst_go(body, &inner, &avoid2))
    } else if map.contains_key(x) {
        let mut inner = map.clone();
        inner.remove(x);
        (x.clone(), if inner.is_empty() { body.clone() } else { subst_go(body, &inner, avoid) })
    } else {
        (x.clone(), subst_go(body, map, avoid))
    }
}

fn subst_go(t: &Term, map: &BTreeMap<Name, Term>, avoid: &BTreeSet<Name>) -> Term {
    match t.kind() {
        TermKind::Var(x) => match map.get(x) {
            Some(v) => {
                // Tags on the replaced occurrence survive on the value.
                if t.meta().is_empty() {
                    v.clone()
                } else {
                    v.set_meta(v.meta().merged(t.meta()))
                }
            }
            None => t.clone(),
        },
        TermKind::Const(_) | TermKind::Universe | TermKind::Hole(_) => t.clone(),
        TermKind::Pi(x, a, b) => {
            let a2 = subst_go(a, map, avoid);
            let (x2, b2) = subst_binder(x, b, map, avoid);
            if a2.ptr_eq(a) && b2.ptr_eq(b) && x2 == *x {
                return t.clone();
            }
            Term::with_meta(TermKind::Pi(x2, a2, b2), t.meta().clone())
        }
        TermKind::Lam(x, a, b) => {
            let a2 = a.as_ref().map(|a| subst_go(a, map, avoid));
            let (x2, b2) = subst_binder(x, b, map, avoid);
            let same_a = match (a, &a2) {
                (Some(a), Some(a2)) => a.ptr_eq(a2),
                _ => true,
            };
            if same_a && b2.ptr_eq(b) && x2 == *x {
                return t.clone();
            }
            Term::with_meta(TermKind::Lam(x2, a2, b2), t.meta().clone())
        }
        _ => rebuild(t, |c| subst_go(c, map, avoid)),
    }
}

/// α-equivalence. Lambda annotations are compared when both are present;
/// with `strict`, an annotation on only one side also counts as a difference.
fn alpha_go(a: &Term, b: &Term, env: &mut Vec<(Name, Name)>, strict: bool) -> bool {
    if a.ptr_eq(b) && env.is_empty() {
        return true;
    }
    match (a.kind(), b.kind()) {
        (TermKind::Var(x), TermKind::Var(y)) => {
            for (l, r) in env.iter().rev() {
                if l == x || r == y {
                    return l == x && r == y;
                }
            }
            x == y
        }
        (TermKind::Const(x), TermKind::Const(y)) => x == y,
        (TermKind::Universe, TermKind::Universe) => true,
        (TermKind::Hole(x), TermKind::Hole(y)) => x == y,
        (TermKind::Pi(x, a1, b1), TermKind::Pi(y, a2, b2)) => {
            if !alpha_go(a1, a2, env, strict) {
                return false;
            }
            env.push((x.clone(), y.clone()));
            let ok = alpha_go(b1, b2, env, strict);
            env.pop();
            ok
        }
        (TermKind::Lam(x, a1, b1), TermKind::Lam(y, a2, b2)) => {
            let ann_ok = match (a1, a2) {
                (Some(a1), Some(a2)) => alpha_go(a1, a2, env, strict),
                (None, None) => true,
                _ => !strict,
            };
            if !ann_ok {
                return false;
            }
            env.push((x.clone(), y.clone()));
            let ok = alpha_go(b1, b2, env, strict);
            env.pop();
            ok
        }
        (TermKind::App(f1, x1), TermKind::App(f2, x2)) => alpha_go(f1, f2, env, strict) && alpha_go(x1, x2, env, strict),
        (
            TermKind::Elim { datatype: d1, target: t1, motive: p1, methods: m1 },
            TermKind::Elim { datatype: d2, target: t2, motive: p2, methods: m2 },
        ) => {
            d1 == d2
                && m1.len() == m2.len()
                && alpha_go(t1, t2, env, strict)
                && alpha_go(p1, p2, env, strict)
                && m1.iter().zip(m2).all(|(x, y)| alpha_go(x, y, env, strict))
        }
        _ => false,
    }
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    alpha_go(a, b, &mut Vec::new(), true)
}

/// α-equivalence of the terms with every lambda annotation erased.
pub fn alpha_eq_erased(a: &Term, b: &Term) -> bool {
    alpha_go(&erase_annotations(a), &erase_annotations(b), &mut Vec::new(), true)
}

pub fn erase_annotations(t: &Term) -> Term {
    match t.kind() {
        TermKind::Lam(x, Some(_), b) => {
            Term::with_meta(TermKind::Lam(x.clone(), None, erase_annotations(b)), t.meta().clone())
        }
        _ => rebuild(t, erase_annotations),
    }
}

/// Ordered bindings, each scoped over the later ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Telescope(pub Vec<(Name, Term)>);

impl Telescope {
    pub fn new() -> Telescope {
        Telescope(Vec::new())
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn names(&self) -> Vec<Name> {
        self.0.iter().map(|(n, _)| n.clone()).collect()
    }
    pub fn vars(&self) -> Vec<Term> {
        self.0.iter().map(|(n, _)| Term::var(n)).collect()
    }

    /// `Π` over the bindings, innermost `body`.
    pub fn pi(&self, body: Term) -> Term {
        self.0.iter().rev().fold(body, |acc, (x, ty)| Term::pi(x, ty.clone(), acc))
    }

    /// Annotated `λ` over the bindings.
    pub fn lam(&self, body: Term) -> Term {
        self.0.iter().rev().fold(body, |acc, (x, ty)| Term::lam(x, Some(ty.clone()), acc))
    }

    /// Copy with every binder renamed fresh, as are references to them.
    pub fn freshen(&self) -> (Telescope, BTreeMap<Name, Term>) {
        let mut map = BTreeMap::new();
        let mut out = Vec::new();
        for (x, ty) in &self.0 {
            let ty2 = ty.substitute(&map);
            let x2 = x.refresh();
            map.insert(x.clone(), Term::var(&x2));
            out.push((x2, ty2));
        }
        (Telescope(out), map)
    }

    /// Substitutes `args` for the leading binders; returns the remaining
    /// bindings instantiated and the substitution used.
    pub fn instantiate(&self, args: &[Term]) -> (Telescope, BTreeMap<Name, Term>) {
        let mut map = BTreeMap::new();
        let mut rest = Vec::new();
        for (i, (x, ty)) in self.0.iter().enumerate() {
            if let Some(a) = args.get(i) {
                map.insert(x.clone(), a.clone());
            } else {
                rest.push((x.clone(), ty.substitute(&map)));
            }
        }
        (Telescope(rest), map)
    }
}

/// Splits a `Π` chain into its telescope and final codomain.
pub fn split_pi(t: &Term) -> (Telescope, Term) {
    let mut out = Vec::new();
    let mut cur = t.clone();
    while let TermKind::Pi(x, a, b) = cur.kind() {
        out.push((x.clone(), a.clone()));
        let next = b.clone();
        cur = next;
    }
    (Telescope(out), cur)
}

/// Splits at most `n` leading `Π` binders.
pub fn split_pi_n(t: &Term, n: usize) -> (Telescope, Term) {
    let mut out = Vec::new();
    let mut cur = t.clone();
    while out.len() < n {
        let next = match cur.kind() {
            TermKind::Pi(x, a, b) => {
                out.push((x.clone(), a.clone()));
                b.clone()
            }
            _ => break,
        };
        cur = next;
    }
    (Telescope(out), cur)
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: Name,
    pub ty: Term,
    pub def: Option<Term>,
}

/// Local typing context, innermost entry last.
#[derive(Clone, Debug, Default)]
pub struct Context {
    entries: Vec<Entry>,
}

impl Context {
    pub fn new() -> Context {
        Context { entries: Vec::new() }
    }

    pub fn extend(&self, name: &Name, ty: Term) -> Context {
        let mut c = self.clone();
        c.push(name, ty);
        c
    }

    pub fn push(&mut self, name: &Name, ty: Term) {
        self.entries.push(Entry { name: name.clone(), ty, def: None });
    }

    pub fn pop(&mut self) -> Option<Entry> {
        self.entries.pop()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn contains(&self, name: &Name) -> bool {
        self.entries.iter().any(|e| &e.name == name)
    }

    pub fn lookup(&self, name: &Name) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| &e.name == name)
    }

    /// Innermost entry whose hint is `text`.
    pub fn lookup_text(&self, text: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| !e.name.is_anonymous() && &*e.name.hint == text)
    }

    pub fn names(&self) -> Vec<Name> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    /// Replaces the type of an entry.
    pub fn retype(&mut self, name: &Name, ty: Term) {
        if let Some(e) = self.entries.iter_mut().rev().find(|e| &e.name == name) {
            e.ty = ty;
        }
    }
}
