//! Tactic engine: proof trees with embedded holes, a zipper focusing the
//! current subgoal, the built-in tactics and proof extraction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::check::{binder_name, Elaborator};
use crate::data::{self, Datatype};
use crate::env::Env;
use crate::error::{Error, ErrorKind, Result};
use crate::print::{show_goal, show_in};
use crate::reader::{parse, SurfaceTerm};
use crate::term::{split_pi, Context, Name, Sym, Telescope, Term, TermKind};

#[derive(Clone, Debug)]
pub struct Goal {
    pub ctx: Context,
    /// Normalized.
    pub ty: Term,
}

#[derive(Clone, Debug)]
pub enum ProofTree {
    Open(Goal),
    Exact(Goal, Term),
    /// `term` mentions each child's hole exactly once.
    Branch { goal: Goal, term: Term, children: Vec<(Name, ProofTree)> },
}

impl ProofTree {
    pub fn goal(&self) -> &Goal {
        match self {
            ProofTree::Open(g) | ProofTree::Exact(g, _) | ProofTree::Branch { goal: g, .. } => g,
        }
    }

    /// Open goals in depth-first order.
    pub fn open_goals(&self) -> Vec<&Goal> {
        let mut out = Vec::new();
        self.collect_open(&mut out);
        out
    }

    fn collect_open<'a>(&'a self, out: &mut Vec<&'a Goal>) {
        match self {
            ProofTree::Open(g) => out.push(g),
            ProofTree::Exact(..) => {}
            ProofTree::Branch { children, .. } => children.iter().for_each(|(_, c)| c.collect_open(out)),
        }
    }

    /// The proof term, if no goal is open.
    pub fn extract(&self) -> Result<Term> {
        match self {
            ProofTree::Open(_) => Err(Error::new(ErrorKind::OpenGoals(self.open_goals().len()))),
            ProofTree::Exact(_, t) => Ok(t.clone()),
            ProofTree::Branch { term, children, .. } => {
                let open = self.open_goals().len();
                if open > 0 {
                    return Err(Error::new(ErrorKind::OpenGoals(open)));
                }
                let mut t = term.clone();
                for (h, c) in children {
                    t = t.fill_hole(h, &c.extract()?);
                }
                Ok(t)
            }
        }
    }

    /// Structural equality of shapes and terms; contexts are compared by name.
    pub fn same(&self, other: &ProofTree) -> bool {
        let goal_eq = |a: &Goal, b: &Goal| a.ty == b.ty && a.ctx.names() == b.ctx.names();
        match (self, other) {
            (ProofTree::Open(a), ProofTree::Open(b)) => goal_eq(a, b),
            (ProofTree::Exact(a, s), ProofTree::Exact(b, t)) => goal_eq(a, b) && s == t,
            (
                ProofTree::Branch { goal: a, term: s, children: xs },
                ProofTree::Branch { goal: b, term: t, children: ys },
            ) => {
                goal_eq(a, b)
                    && s == t
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|((h, x), (k, y))| h == k && x.same(y))
            }
            _ => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Frame {
    pub goal: Goal,
    pub term: Term,
    pub left: Vec<(Name, ProofTree)>,
    pub hole: Name,
    pub right: Vec<(Name, ProofTree)>,
}

#[derive(Clone, Debug)]
pub struct Zipper {
    pub focus: ProofTree,
    pub path: Vec<Frame>,
    pub steps: usize,
}

impl Zipper {
    pub fn new(tree: ProofTree) -> Zipper {
        Zipper { focus: tree, path: Vec::new(), steps: 0 }
    }

    /// Focus on the `i`-th child of the current node.
    pub fn down(mut self, i: usize) -> core::result::Result<Zipper, Zipper> {
        match self.focus {
            ProofTree::Branch { goal, term, mut children } if i < children.len() => {
                let right = children.split_off(i + 1);
                let (hole, focus) = children.pop().expect("index checked");
                self.path.push(Frame { goal, term, left: children, hole, right });
                Ok(Zipper { focus, path: self.path, steps: self.steps })
            }
            focus => Err(Zipper { focus, path: self.path, steps: self.steps }),
        }
    }

    pub fn up(mut self) -> core::result::Result<Zipper, Zipper> {
        match self.path.pop() {
            Some(Frame { goal, term, mut left, hole, right }) => {
                left.push((hole, self.focus));
                left.extend(right);
                Ok(Zipper { focus: ProofTree::Branch { goal, term, children: left }, path: self.path, steps: self.steps })
            }
            None => Err(self),
        }
    }

    pub fn to_tree(self) -> ProofTree {
        let mut z = self;
        loop {
            match z.up() {
                Ok(p) => z = p,
                Err(root) => return root.focus,
            }
        }
    }

    /// Focus on the first open goal in depth-first order, or on the root when
    /// the proof is complete.
    pub fn refocus(self) -> Zipper {
        let steps = self.steps;
        let tree = self.to_tree();
        let mut path = Vec::new();
        if !first_open(&tree, &mut path) {
            path.clear();
        }
        let mut z = Zipper { focus: tree, path: Vec::new(), steps };
        for i in path {
            z = z.down(i).unwrap_or_else(|z| z);
        }
        z
    }

    /// Index of the focus among the open goals.
    pub fn focused_index(&self) -> usize {
        self.path.iter().map(|f| f.left.iter().map(|(_, c)| c.open_goals().len()).sum::<usize>()).sum()
    }

    pub fn open_goals(&self) -> usize {
        self.clone().to_tree().open_goals().len()
    }

    pub fn is_complete(&self) -> bool {
        self.open_goals() == 0
    }

    /// The focused goal, if it is open.
    pub fn current_goal(&self) -> Option<&Goal> {
        match &self.focus {
            ProofTree::Open(g) => Some(g),
            _ => None,
        }
    }
}

fn first_open(t: &ProofTree, path: &mut Vec<usize>) -> bool {
    match t {
        ProofTree::Open(_) => true,
        ProofTree::Exact(..) => false,
        ProofTree::Branch { children, .. } => {
            for (i, (_, c)) in children.iter().enumerate() {
                path.push(i);
                if first_open(c, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
    }
}

fn tactic_err(msg: impl Into<String>) -> Error {
    Error::new(ErrorKind::Tactic(msg.into()))
}

/// A tactic rewrites the zipper; `args` are the surface arguments of the
/// invocation.
pub type TacticFn = Arc<dyn Fn(&Env, &TacticTable, Zipper, &[SurfaceTerm]) -> Result<Zipper> + Send + Sync>;

#[derive(Clone)]
pub struct TacticTable {
    table: BTreeMap<String, TacticFn>,
    aliases: BTreeMap<String, String>,
}

impl Default for TacticTable {
    fn default() -> TacticTable {
        TacticTable::builtin()
    }
}

impl TacticTable {
    pub fn empty() -> TacticTable {
        TacticTable { table: BTreeMap::new(), aliases: BTreeMap::new() }
    }

    pub fn builtin() -> TacticTable {
        let mut t = TacticTable::empty();
        t.register_goal("intro", intro);
        t.register_goal("intros", intros);
        t.register_goal("assumption", |env, g, _| assumption(env, g));
        t.register_goal("exact", exact);
        t.register_goal("induction", induction);
        t.register_goal("inversion", inversion);
        t.register("seq", Arc::new(seq));
        t.register(
            "try",
            Arc::new(|env, tt, z: Zipper, args| Ok(seq(env, tt, z.clone(), args).unwrap_or(z))),
        );
        for name in ["intro", "intros", "assumption"] {
            t.aliases.insert(format!("by-{name}"), name.to_string());
        }
        t
    }

    pub fn register(&mut self, name: &str, f: TacticFn) {
        self.table.insert(name.to_string(), f);
    }

    /// Registers a tactic acting on the focused open goal.
    pub fn register_goal(
        &mut self,
        name: &str,
        f: impl Fn(&Env, &Goal, &[SurfaceTerm]) -> Result<ProofTree> + Send + Sync + 'static,
    ) {
        let f = Arc::new(f);
        self.register(
            name,
            Arc::new(move |env, _, mut z: Zipper, args| {
                let Some(goal) = z.current_goal() else {
                    return Err(tactic_err("no open goal"));
                };
                z.focus = f(env, goal, args)?;
                Ok(z.refocus())
            }),
        );
    }

    /// Canonical name of a tactic.
    pub fn resolve<'a>(&'a self, name: &'a str) -> &'a str {
        self.aliases.get(name).map(|s| s.as_str()).unwrap_or(name)
    }

    pub fn get(&self, name: &str) -> Option<&TacticFn> {
        self.table.get(self.resolve(name))
    }

    pub fn names(&self) -> Vec<&str> {
        self.table.keys().map(|s| s.as_str()).collect()
    }

    /// Runs one tactic invocation without touching the step counter.
    pub fn run(&self, env: &Env, z: Zipper, tac: &SurfaceTerm) -> Result<Zipper> {
        let (name, args) = match tac.as_list() {
            Some([h, rest @ ..]) => (h.as_symbol(), rest),
            Some([]) => (None, &[][..]),
            None => (tac.as_symbol(), &[][..]),
        };
        let name = name.ok_or_else(|| Error::at(ErrorKind::UnknownTactic(tac.to_string()), &tac.span))?;
        let f = self.get(name).ok_or_else(|| Error::at(ErrorKind::UnknownTactic(name.to_string()), &tac.span))?;
        f(env, self, z, args)
    }
}

fn seq(env: &Env, table: &TacticTable, z: Zipper, tacs: &[SurfaceTerm]) -> Result<Zipper> {
    tacs.iter().try_fold(z, |z, t| table.run(env, z, t))
}

/// Applies one tactic, counting it as a step when it changed the proof. On
/// failure the input zipper is returned untouched by construction.
pub fn apply_tactic(env: &Env, table: &TacticTable, z: &Zipper, tac: &SurfaceTerm) -> Result<Zipper> {
    let mut out = table.run(env, z.clone(), tac)?;
    let changed = !out.clone().to_tree().same(&z.clone().to_tree());
    out.steps = z.steps + usize::from(changed);
    Ok(out)
}

/// Parses and applies a tactic given as text.
pub fn apply_tactic_text(env: &Env, table: &TacticTable, z: &Zipper, text: &str) -> Result<Zipper> {
    let forms = parse("<tactic>", text)?;
    let [tac] = forms.as_slice() else {
        return Err(Error::new(ErrorKind::Syntax(format!("expected one tactic, found {}", forms.len()))));
    };
    apply_tactic(env, table, z, tac)
}

/// A zipper on a single open goal.
pub fn start_proof(env: &Env, goal: &SurfaceTerm) -> Result<Zipper> {
    start_proof_in(env, &Context::new(), goal)
}

pub fn start_proof_in(env: &Env, ctx: &Context, goal: &SurfaceTerm) -> Result<Zipper> {
    let ty = Elaborator::new(env).check_type(ctx, goal)?;
    Ok(Zipper::new(ProofTree::Open(Goal { ctx: ctx.clone(), ty })))
}

/// The completed proof term, checked against the root goal.
pub fn extract_proof(env: &Env, z: &Zipper) -> Result<Term> {
    let tree = z.clone().to_tree();
    let t = tree.extract()?;
    let g = tree.goal();
    Elaborator::new(env).check_term(&g.ctx, &t, &g.ty)?;
    Ok(t)
}

/// Display record of a proof state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateRecord {
    pub goals_total: usize,
    pub focused_index: usize,
    pub hypotheses: Vec<(String, String)>,
    pub goal: Option<String>,
    pub steps: usize,
    pub complete: bool,
}

pub fn render_state(z: &Zipper) -> StateRecord {
    let goals_total = z.open_goals();
    let (hypotheses, goal) = match z.current_goal() {
        Some(g) => {
            let mut hyps = Vec::new();
            let mut seen = Context::new();
            for e in g.ctx.entries() {
                if !e.name.is_anonymous() {
                    hyps.push((e.name.hint.to_string(), show_goal(&seen, &e.ty)));
                }
                seen.push(&e.name, e.ty.clone());
            }
            (hyps, Some(show_goal(&g.ctx, &g.ty)))
        }
        None => (Vec::new(), None),
    };
    StateRecord { goals_total, focused_index: z.focused_index(), hypotheses, goal, steps: z.steps, complete: goals_total == 0 }
}

impl StateRecord {
    /// The interactive transcript layout.
    pub fn to_text(&self) -> String {
        if self.complete {
            return format!("Proof complete ({} steps)", self.steps);
        }
        let goal = self.goal.as_deref().unwrap_or("");
        if self.steps == 0 {
            return format!("goal {} of {}: {}", self.focused_index + 1, self.goals_total, goal);
        }
        let mut ctx = String::from("      ctx: ");
        for (n, t) in &self.hypotheses {
            ctx.push_str(&format!(" {n} : {t} "));
        }
        ctx.push_str(&format!(" (step #{})", self.steps));
        if self.goals_total > 1 {
            ctx.push_str(&format!(" [goal {} of {}]", self.focused_index + 1, self.goals_total));
        }
        format!("{ctx}\n            ---------------\ncurr goal:  {goal}")
    }
}

impl Elaborator<'_> {
    /// `(ntac goal tactic…)`: runs the script and returns the proof term.
    pub fn elab_ntac(&self, ctx: &Context, s: &SurfaceTerm) -> Result<(Term, Term)> {
        let items = s.as_list().unwrap_or(&[]);
        let Some(goal) = items.get(1) else {
            return Err(Error::at(ErrorKind::Syntax("expected (ntac goal tactic…)".into()), &s.span));
        };
        let table = TacticTable::builtin();
        let mut z = start_proof_in(self.env, ctx, goal)?;
        for t in &items[2..] {
            z = apply_tactic(self.env, &table, &z, t)?;
        }
        let tree = z.to_tree();
        let ty = tree.goal().ty.clone();
        let proof = tree.extract().map_err(|e| e.or_span(&s.span))?;
        Elaborator::new(self.env).check_term(ctx, &proof, &ty)?;
        Ok((proof, ty))
    }
}

fn hole() -> (Name, Term) {
    let h = Name::fresh("?");
    let t = Term::hole(&h);
    (h, t)
}

fn intro_named(env: &Env, goal: &Goal, name: Option<&SurfaceTerm>) -> Result<ProofTree> {
    let w = env.whnf(&goal.ty)?;
    let TermKind::Pi(x, dom, cod) = w.kind() else {
        return Err(tactic_err(format!("goal is not a Π: {}", show_goal(&goal.ctx, &goal.ty))));
    };
    let y = match name {
        Some(n) => binder_name(n)?,
        None => x.refresh(),
    };
    let (h, ht) = hole();
    let child = Goal { ctx: goal.ctx.extend(&y, dom.clone()), ty: env.normalize(&cod.subst(x, &Term::var(&y)))? };
    let term = Term::lam(&y, Some(dom.clone()), ht);
    Ok(ProofTree::Branch { goal: goal.clone(), term, children: vec![(h, ProofTree::Open(child))] })
}

/// Introduces one binder per name, or every leading binder if none are
/// given.
fn intro_many(env: &Env, goal: &Goal, names: &[Option<&SurfaceTerm>], all: bool) -> Result<ProofTree> {
    let (first, rest) = match names.split_first() {
        Some((n, rest)) => (*n, rest),
        None if all && matches!(env.whnf(&goal.ty)?.kind(), TermKind::Pi(..)) => (None, &[][..]),
        None => return Ok(ProofTree::Open(goal.clone())),
    };
    let ProofTree::Branch { goal: g, term, mut children } = intro_named(env, goal, first)? else {
        unreachable!("intro builds a branch")
    };
    let (h, ProofTree::Open(child)) = children.pop().expect("intro has one child") else {
        unreachable!("intro's child is open")
    };
    let sub = intro_many(env, &child, rest, all && names.is_empty())?;
    Ok(ProofTree::Branch { goal: g, term, children: vec![(h, sub)] })
}

fn intro(env: &Env, goal: &Goal, args: &[SurfaceTerm]) -> Result<ProofTree> {
    match args {
        [] => intro_named(env, goal, None),
        [n] => intro_named(env, goal, Some(n)),
        _ => intros(env, goal, args),
    }
}

fn intros(env: &Env, goal: &Goal, args: &[SurfaceTerm]) -> Result<ProofTree> {
    if args.is_empty() {
        intro_named(env, goal, None)?;
        return intro_many(env, goal, &[], true);
    }
    let names: Vec<Option<&SurfaceTerm>> = args.iter().map(Some).collect();
    intro_many(env, goal, &names, false)
}

fn assumption(env: &Env, goal: &Goal) -> Result<ProofTree> {
    let el = Elaborator::new(env);
    for e in goal.ctx.entries().iter().rev() {
        if el.def_eq(&e.ty, &goal.ty).unwrap_or(false) {
            return Ok(ProofTree::Exact(goal.clone(), Term::var(&e.name)));
        }
    }
    Err(tactic_err(format!("no assumption {}", show_goal(&goal.ctx, &goal.ty))))
}

fn exact(env: &Env, goal: &Goal, args: &[SurfaceTerm]) -> Result<ProofTree> {
    let [e] = args else {
        return Err(tactic_err("exact takes one term"));
    };
    let t = Elaborator::new(env).check(&goal.ctx, e, &goal.ty)?;
    Ok(ProofTree::Exact(goal.clone(), t))
}

/// The context variable named by `s` and its datatype instance.
fn hypothesis(
    env: &Env,
    goal: &Goal,
    s: Option<&SurfaceTerm>,
) -> Result<(Name, Arc<Datatype>, Vec<Term>, Vec<Term>)> {
    let text = s.and_then(|s| s.as_symbol()).ok_or_else(|| tactic_err("expected a hypothesis name"))?;
    let e = goal.ctx.lookup_text(text).ok_or_else(|| tactic_err(format!("no hypothesis named {text}")))?;
    let (dt, params, indices) = Elaborator::new(env)
        .datatype_instance(&goal.ctx, &e.ty, None)
        .map_err(|_| tactic_err(format!("{text} : {} is not of a datatype", show_in(&goal.ctx, &e.ty))))?;
    Ok((e.name.clone(), dt, params, indices))
}

/// Binders of the motive type of `dt` at `params`: the index binders, then
/// the target binder.
fn motive_binders(env: &Env, dt: &Datatype, params: &[Term]) -> Result<Telescope> {
    let (tele, _) = split_pi(&env.normalize(&data::motive_type(dt, params))?);
    Ok(tele.freshen().0)
}

fn induction(env: &Env, goal: &Goal, args: &[SurfaceTerm]) -> Result<ProofTree> {
    let (h, dt, params, indices) = hypothesis(env, goal, args.first())?;
    let el = Elaborator::new(env);
    let tele = motive_binders(env, &dt, &params)?;
    let mut map = BTreeMap::new();
    map.insert(h.clone(), Term::var(&tele.0[dt.indices.len()].0));
    for (i, idx) in indices.iter().enumerate() {
        if let Some(v) = idx.as_var() {
            map.entry(v.clone()).or_insert_with(|| Term::var(&tele.0[i].0));
        }
    }
    let body = goal.ty.substitute(&map);
    let motive = tele.lam(body);
    el.check_term(&goal.ctx, &motive, &data::motive_type(&dt, &params))
        .map_err(|e| tactic_err(format!("cannot build motive: {}", e.kind)))?;

    // Per-constructor names and scripts.
    let mut names: Vec<Vec<SurfaceTerm>> = vec![Vec::new(); dt.ctors.len()];
    let mut subgoals: Vec<Option<(&SurfaceTerm, &[SurfaceTerm])>> = vec![None; dt.ctors.len()];
    let mut rest = &args[1..];
    while let Some((first, tail)) = rest.split_first() {
        if first.as_keyword() == Some("#:as") {
            let groups = tail.first().and_then(|g| g.as_list()).ok_or_else(|| tactic_err("#:as takes ((x…)…)"))?;
            if groups.len() > dt.ctors.len() {
                return Err(tactic_err(format!("{} has {} constructor(s)", dt.name, dt.ctors.len())));
            }
            for (i, g) in groups.iter().enumerate() {
                names[i] = match g.as_list() {
                    Some(xs) => xs.to_vec(),
                    None => vec![g.clone()],
                };
            }
            rest = &tail[1..];
            continue;
        }
        let clause = first.as_list().ok_or_else(|| tactic_err(format!("bad induction clause {first}")))?;
        let [pat, kw, subg, tacs @ ..] = clause else {
            return Err(tactic_err(format!("expected [(C x…) #:subgoal-is goal tactic…], found {first}")));
        };
        if kw.as_keyword() != Some("#:subgoal-is") {
            return Err(tactic_err(format!("expected #:subgoal-is in {first}")));
        }
        let (c, xs) = match pat.as_list() {
            Some([c, xs @ ..]) => (c, xs.to_vec()),
            _ => (pat, Vec::new()),
        };
        let cname = c.as_symbol().unwrap_or("");
        let i = dt.ctor_index(cname).ok_or_else(|| tactic_err(format!("{cname} is not a constructor of {}", dt.name)))?;
        names[i] = xs;
        subgoals[i] = Some((subg, tacs));
        rest = tail;
    }

    let mut methods = Vec::new();
    let mut children = Vec::new();
    let table = TacticTable::builtin();
    for i in 0..dt.ctors.len() {
        let ty = env.normalize(&data::method_type(&dt, i, &motive, &params))?;
        let (hn, ht) = hole();
        let g = Goal { ctx: goal.ctx.clone(), ty };
        let ns: Vec<Option<&SurfaceTerm>> = names[i].iter().map(Some).collect();
        let mut sub = intro_many(env, &g, &ns, false)?;
        if let Some((subg, tacs)) = subgoals[i] {
            let mut z = Zipper::new(sub).refocus();
            let cur = z.current_goal().ok_or_else(|| tactic_err("no goal left for #:subgoal-is"))?.clone();
            let stated = el.check_type(&cur.ctx, subg)?;
            if !el.def_eq(&stated, &cur.ty)? {
                return Err(tactic_err(format!(
                    "subgoal for {} is {}, not {}",
                    dt.ctors[i].name,
                    show_goal(&cur.ctx, &cur.ty),
                    show_goal(&cur.ctx, &stated)
                )));
            }
            z = seq(env, &table, z, tacs)?;
            sub = z.to_tree();
        }
        methods.push(ht);
        children.push((hn, sub));
    }
    let term = Term::elim(&dt.name, Term::var(&h), motive, methods);
    Ok(ProofTree::Branch { goal: goal.clone(), term, children })
}

/// Names used by the equality machinery; all live in the prelude.
const EQ: &str = "=";
const FALSE: &str = "False";

fn eq_type(ty: &Term, l: &Term, r: &Term) -> Term {
    Term::apps(Term::constant(EQ), [ty.clone(), l.clone(), r.clone()])
}

fn refl(ty: &Term, a: &Term) -> Term {
    Term::apps(Term::constant("refl"), [ty.clone(), a.clone()])
}

/// `p : P l` transported along `e : (= ty l r)` to `P r`.
fn transport(ty: &Term, l: &Term, p_fam: &Term, p: Term, e: Term) -> Term {
    let b = Name::fresh("b");
    let motive = Term::lam(
        &b,
        Some(ty.clone()),
        Term::lam(&Name::fresh("_"), Some(eq_type(ty, l, &Term::var(&b))), Term::app(p_fam.clone(), Term::var(&b))),
    );
    Term::elim(&Sym::from(EQ), e, motive, vec![p])
}

/// `elim-T t (λ _. out) m…` where method `i` ignores its arguments and
/// returns `value(i, args)`.
fn case_split(
    env: &Env,
    dt: &Datatype,
    params: &[Term],
    on: &Term,
    out: &Term,
    value: impl Fn(usize, &[Term]) -> Term,
) -> Result<Term> {
    let tele = motive_binders(env, dt, params)?;
    let motive = tele.lam(out.clone());
    let mut methods = Vec::new();
    for i in 0..dt.ctors.len() {
        let (mt, _) = split_pi(&env.normalize(&data::method_type(dt, i, &motive, params))?);
        let (mt, _) = mt.freshen();
        let args: Vec<Term> = mt.vars().into_iter().take(dt.ctors[i].args.len()).collect();
        methods.push(mt.lam(value(i, &args)));
    }
    Ok(Term::elim(&dt.name, on.clone(), motive, methods))
}

struct Inverter<'a> {
    env: &'a Env,
    goal_ty: Term,
    names: Vec<SurfaceTerm>,
    used: usize,
}

enum Outcome {
    /// A proof of the goal from the equations.
    Closed(Term),
    /// Equations to keep as hypotheses.
    Residual(Vec<(Term, Term)>),
}

impl Inverter<'_> {
    fn ctor_head(&self, t: &Term) -> Result<Option<(Arc<Datatype>, usize, Vec<Term>)>> {
        let w = self.env.whnf(t)?;
        let (h, args) = w.spine();
        let Some(c) = h.as_const() else { return Ok(None) };
        let Some(crate::env::GlobalKind::DataCtor { datatype, index }) = self.env.global(c).map(|g| &g.kind) else {
            return Ok(None);
        };
        let dt = self.env.datatype(datatype).expect("constructors belong to registered datatypes");
        Ok(Some((dt, *index, args.into_iter().cloned().collect())))
    }

    /// Works through `e : (= ty l r)`, where `l` comes from a constructor's
    /// result index and `r` from the inverted hypothesis.
    fn equation(&mut self, ctx: &Context, ty: &Term, l: &Term, r: &Term, e: Term) -> Result<Outcome> {
        let el = Elaborator::new(self.env);
        if el.def_eq(l, r)? {
            return Ok(Outcome::Residual(Vec::new()));
        }
        let (lh, rh) = (self.ctor_head(l)?, self.ctor_head(r)?);
        match (lh, rh) {
            (Some((dt, i, largs)), Some((_, j, rargs))) => {
                let np = dt.params.len();
                if !dt.indices.is_empty() {
                    return Err(tactic_err(format!("cannot invert equations between indexed values of {}", dt.name)));
                }
                let params = &largs[..np];
                if i != j {
                    let truth = {
                        let a = Name::fresh("A");
                        Term::pi(&a, Term::universe(), Term::arrow(Term::var(&a), Term::var(&a)))
                    };
                    let trivial = {
                        let (a, x) = (Name::fresh("A"), Name::fresh("a"));
                        Term::lam(&a, Some(Term::universe()), Term::lam(&x, Some(Term::var(&a)), Term::var(&x)))
                    };
                    let t = Name::fresh("t");
                    let disc = Term::lam(
                        &t,
                        Some(ty.clone()),
                        case_split(self.env, &dt, params, &Term::var(&t), &Term::universe(), |k, _| {
                            if k == i { truth.clone() } else { Term::constant(FALSE) }
                        })?,
                    );
                    let absurd = transport(ty, l, &disc, trivial, e);
                    let g = Name::fresh("_");
                    let proof = Term::elim(
                        &Sym::from(FALSE),
                        absurd,
                        Term::lam(&g, Some(Term::constant(FALSE)), self.goal_ty.clone()),
                        Vec::new(),
                    );
                    return Ok(Outcome::Closed(proof));
                }
                let (args_tele, _) = dt.ctor_args(i, params);
                let mut residual = Vec::new();
                for (p, (x, sigma)) in args_tele.0.iter().enumerate() {
                    if args_tele.0[..p].iter().any(|(y, _)| sigma.occurs(y)) {
                        return Err(tactic_err(format!("cannot invert: argument {} of {} is dependent", x.hint, dt.ctors[i].name)));
                    }
                    let (lp, rp) = (&largs[np + p], &rargs[np + p]);
                    let t = Name::fresh("t");
                    let proj = Term::lam(
                        &t,
                        Some(ty.clone()),
                        case_split(self.env, &dt, params, &Term::var(&t), sigma, |k, xs| {
                            if k == i { xs[p].clone() } else { lp.clone() }
                        })?,
                    );
                    let w = Name::fresh("w");
                    let fam = Term::lam(&w, Some(ty.clone()), eq_type(sigma, lp, &Term::app(proj, Term::var(&w))));
                    let e2 = transport(ty, l, &fam, refl(sigma, lp), e.clone());
                    match self.equation(ctx, sigma, lp, rp, e2)? {
                        Outcome::Closed(t) => return Ok(Outcome::Closed(t)),
                        Outcome::Residual(xs) => residual.extend(xs),
                    }
                }
                Ok(Outcome::Residual(residual))
            }
            (Some(_), None) if self.env.whnf(r)?.as_var().is_some() => Err(tactic_err(format!(
                "cannot invert: {} is a variable",
                show_in(ctx, r)
            ))),
            _ => Ok(Outcome::Residual(vec![(eq_type(ty, l, r), e)])),
        }
    }

    fn next_name(&mut self) -> Result<Name> {
        let n = match self.names.get(self.used) {
            Some(s) => binder_name(s)?,
            None => Name::fresh(&format!("H{}", self.used)),
        };
        self.used += 1;
        Ok(n)
    }
}

fn inversion(env: &Env, goal: &Goal, args: &[SurfaceTerm]) -> Result<ProofTree> {
    let (h, dt, params, indices) = hypothesis(env, goal, args.first())?;
    if !env.contains(EQ) || !env.contains(FALSE) {
        return Err(tactic_err("inversion needs = and False from the prelude"));
    }
    if dt.indices.is_empty() {
        return Err(tactic_err(format!("cannot invert: {} has no indices", dt.name)));
    }
    let names = match args.get(1..) {
        Some([kw, rest @ ..]) if kw.as_keyword() == Some("#:with-names") => match rest {
            [l] if l.as_list().is_some() => l.as_list().unwrap().to_vec(),
            _ => rest.to_vec(),
        },
        Some([]) | None => Vec::new(),
        Some(other) => return Err(tactic_err(format!("unexpected inversion argument {}", other[0]))),
    };
    if goal.ty.occurs(&h) {
        return Err(tactic_err("cannot invert: the goal mentions the hypothesis"));
    }

    // Motive λ i′… h′. Π (e_j : (= τ_j i′_j i_j))… G
    let tele = motive_binders(env, &dt, &params)?;
    let ni = dt.indices.len();
    let index_tys: Vec<Term> = tele.0[..ni].iter().map(|(_, t)| t.clone()).collect();
    let eqs: Vec<(Name, Term)> = (0..ni)
        .map(|j| (Name::fresh("_"), eq_type(&index_tys[j], &Term::var(&tele.0[j].0), &indices[j])))
        .collect();
    let motive = tele.lam(Telescope(eqs).pi(goal.ty.clone()));

    let mut inv = Inverter { env, goal_ty: goal.ty.clone(), names, used: 0 };
    let mut methods = Vec::new();
    let mut children = Vec::new();
    for i in 0..dt.ctors.len() {
        let mt = env.normalize(&data::method_type(&dt, i, &motive, &params))?;
        let (binders, _) = split_pi(&mt);
        let nargs = dt.ctors[i].args.len() + dt.ctors[i].recursive.len();
        let arg_tele = Telescope(
            binders.0[..nargs]
                .iter()
                .enumerate()
                .map(|(k, (x, t))| {
                    let keep = k < dt.ctors[i].args.len();
                    (if keep { x.refresh() } else { Name::fresh("_") }, t.clone())
                })
                .collect(),
        )
        .rename_from(&binders.0[..nargs]);
        let mut ctx = goal.ctx.clone();
        for (x, t) in &arg_tele.0 {
            ctx.push(x, t.clone());
        }
        let rest = arg_tele.instantiate_body(&binders, nargs, &mt);
        let (eq_tele, _) = split_pi(&rest);
        let mut eq_names = Vec::new();
        for (x, t) in &eq_tele.0 {
            let t = t.substitute(&eq_names.iter().cloned().collect());
            let y = Name::fresh("_");
            ctx.push(&y, env.normalize(&t)?);
            eq_names.push((x.clone(), Term::var(&y)));
        }
        let eq_vars: Vec<(Name, Term)> = ctx.entries()[ctx.len() - eq_tele.len()..]
            .iter()
            .map(|e| (e.name.clone(), e.ty.clone()))
            .collect();

        let mut residual = Vec::new();
        let mut closed = None;
        for (y, t) in &eq_vars {
            let w = env.whnf(t)?;
            let (_, a) = w.spine();
            let [ty, l, r] = a.as_slice() else { unreachable!("equations are (= τ l r)") };
            match inv.equation(&ctx, ty, l, r, Term::var(y))? {
                Outcome::Closed(p) => {
                    closed = Some(p);
                    break;
                }
                Outcome::Residual(xs) => residual.extend(xs),
            }
        }
        let body = match closed {
            Some(p) => p,
            None => {
                let mut lets = Vec::new();
                let mut cctx = ctx.clone();
                for (t, proof) in residual {
                    let n = inv.next_name()?;
                    let t = env.normalize(&t)?;
                    cctx.push(&n, t.clone());
                    lets.push((n, t, proof));
                }
                let (hn, ht) = hole();
                children.push((hn, ProofTree::Open(Goal { ctx: cctx, ty: goal.ty.clone() })));
                lets.into_iter().rev().fold(ht, |acc, (n, t, p)| Term::app(Term::lam(&n, Some(t), acc), p))
            }
        };
        let all: Vec<(Name, Term)> = arg_tele.0.iter().cloned().chain(eq_vars).collect();
        methods.push(Telescope(all).lam(body));
    }
    let elim = Term::elim(&dt.name, Term::var(&h), motive, methods);
    let term = Term::apps(elim, (0..ni).map(|j| refl(&index_tys[j].substitute(&index_subst(&tele, &indices)), &indices[j])));
    Ok(ProofTree::Branch { goal: goal.clone(), term, children })
}

fn index_subst(tele: &Telescope, indices: &[Term]) -> BTreeMap<Name, Term> {
    tele.0.iter().zip(indices).map(|((x, _), t)| (x.clone(), t.clone())).collect()
}

trait TeleExt {
    fn rename_from(self, original: &[(Name, Term)]) -> Telescope;
    fn instantiate_body(&self, binders: &Telescope, n: usize, ty: &Term) -> Term;
}

impl TeleExt for Telescope {
    /// Rewrites later binder types to refer to the renamed earlier binders.
    fn rename_from(self, original: &[(Name, Term)]) -> Telescope {
        let mut map = BTreeMap::new();
        let mut out = Vec::new();
        for ((x, t), (old, _)) in self.0.into_iter().zip(original) {
            out.push((x.clone(), t.substitute(&map)));
            map.insert(old.clone(), Term::var(&x));
        }
        Telescope(out)
    }

    /// The type `ty` under its first `n` binders, with those renamed.
    fn instantiate_body(&self, binders: &Telescope, n: usize, ty: &Term) -> Term {
        let map: BTreeMap<Name, Term> = binders.0[..n].iter().zip(&self.0).map(|((old, _), (x, _))| (old.clone(), Term::var(x))).collect();
        let mut cur = ty.clone();
        for _ in 0..n {
            let next = match cur.kind() {
                TermKind::Pi(_, _, b) => b.clone(),
                _ => break,
            };
            cur = next;
        }
        cur.substitute(&map)
    }
}
