//! Canonical printer. Output re-reads through the reader and elaborator.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::sized::Size;
use crate::term::{Context, Name, Term, TermKind};

const RESERVED: &[&str] = &[
    "λ", "lambda", "Π", "Pi", "∀", "forall", "→", "->", "Type", "_", "match", "elim", "the", "ntac", "=>", ":",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    /// `(Π [x : A] B)` with one binder per node.
    Canonical,
    /// Named `Π` chains collapse to `(∀ (x : A) (y : B) C)`.
    Goal,
}

/// Assigns display strings to names so that printed terms never capture.
#[derive(Clone, Debug)]
pub struct Printer {
    style: Style,
    names: BTreeMap<Name, String>,
    taken: BTreeSet<String>,
}

impl Printer {
    pub fn new(style: Style) -> Printer {
        Printer { style, names: BTreeMap::new(), taken: BTreeSet::new() }
    }

    /// Fixes display names for every context entry, in order.
    pub fn seed(&mut self, ctx: &Context) {
        for e in ctx.entries() {
            self.bind(&e.name);
        }
    }

    /// Display string previously assigned to `x`, if any.
    pub fn name_of(&self, x: &Name) -> Option<&str> {
        self.names.get(x).map(String::as_str)
    }

    fn base(x: &Name) -> &str {
        if x.is_anonymous() {
            "x"
        } else {
            &x.hint
        }
    }

    fn pick(&self, base: &str) -> String {
        if !self.taken.contains(base) && !RESERVED.contains(&base) {
            return base.to_string();
        }
        let mut i = 1usize;
        loop {
            let cand = format!("{base}{i}");
            if !self.taken.contains(&cand) {
                return cand;
            }
            i += 1;
        }
    }

    /// Assigns `x` a display name that is not currently in use.
    pub fn bind(&mut self, x: &Name) -> String {
        if let Some(s) = self.names.get(x) {
            return s.clone();
        }
        let s = self.pick(Self::base(x));
        self.taken.insert(s.clone());
        self.names.insert(x.clone(), s.clone());
        s
    }

    fn reserve_free(&mut self, t: &Term) {
        let mut consts = BTreeSet::new();
        collect_consts(t, &mut consts);
        for c in consts {
            self.taken.insert(c);
        }
        for x in t.free_vars() {
            if !self.names.contains_key(&x) {
                self.bind(&x);
            }
        }
    }

    pub fn print(&mut self, t: &Term) -> String {
        let saved = (self.names.clone(), self.taken.clone());
        self.reserve_free(t);
        let mut out = String::new();
        self.go(t, &mut out);
        self.names = saved.0;
        self.taken = saved.1;
        out
    }

    fn go(&mut self, t: &Term, out: &mut String) {
        match t.kind() {
            TermKind::Var(x) => match self.names.get(x) {
                Some(s) => out.push_str(s),
                None => out.push_str(Self::base(x)),
            },
            TermKind::Const(c) => out.push_str(c),
            TermKind::Universe => out.push_str("Type"),
            TermKind::Hole(h) => {
                out.push_str(&format!("?{}{}", if h.is_anonymous() { "h" } else { &h.hint }, h.id))
            }
            TermKind::Pi(x, a, b) => {
                if x.is_anonymous() && !b.occurs(x) {
                    out.push_str("(→ ");
                    self.go(a, out);
                    out.push(' ');
                    self.go(b, out);
                    out.push(')');
                } else if self.style == Style::Goal {
                    out.push_str("(∀");
                    let mut cur = t.clone();
                    let mut bound = Vec::new();
                    loop {
                        let next = match cur.kind() {
                            TermKind::Pi(x, a, b) if !(x.is_anonymous() && !b.occurs(x)) => {
                                out.push_str(" (");
                                let mut dom = String::new();
                                self.go(a, &mut dom);
                                let (s, old) = self.bind_scoped(x);
                                out.push_str(&s);
                                out.push_str(" : ");
                                out.push_str(&dom);
                                out.push(')');
                                bound.push((x.clone(), s, old));
                                b.clone()
                            }
                            _ => break,
                        };
                        cur = next;
                    }
                    out.push(' ');
                    self.go(&cur, out);
                    out.push(')');
                    for (x, s, old) in bound.into_iter().rev() {
                        self.leave(&x, &s, old);
                    }
                } else {
                    out.push_str("(Π [");
                    let mut dom = String::new();
                    self.go(a, &mut dom);
                    let (s, old) = self.bind_scoped(x);
                    out.push_str(&s);
                    out.push_str(" : ");
                    out.push_str(&dom);
                    out.push_str("] ");
                    self.go(b, out);
                    out.push(')');
                    self.leave(x, &s, old);
                }
            }
            TermKind::Lam(x, ann, b) => {
                let mut dom = String::new();
                if let Some(a) = ann {
                    self.go(a, &mut dom);
                }
                let (s, old) =
                    if x.is_anonymous() && !b.occurs(x) { ("_".to_string(), None) } else { self.bind_scoped(x) };
                if ann.is_some() {
                    out.push_str(&format!("(λ [{s} : {dom}] "));
                } else {
                    out.push_str(&format!("(λ {s} "));
                }
                self.go(b, out);
                out.push(')');
                if s != "_" {
                    self.leave(x, &s, old);
                }
            }
            TermKind::App(..) => {
                let (head, args) = t.spine();
                out.push('(');
                self.go(head, out);
                for a in args {
                    out.push(' ');
                    self.go(a, out);
                }
                out.push(')');
            }
            TermKind::Elim { datatype, target, motive, methods } => {
                out.push_str("(elim-");
                out.push_str(datatype);
                out.push(' ');
                self.go(target, out);
                out.push(' ');
                self.go(motive, out);
                for m in methods {
                    out.push(' ');
                    self.go(m, out);
                }
                out.push(')');
            }
        }
    }

    fn bind_scoped(&mut self, x: &Name) -> (String, Option<String>) {
        let old = self.names.remove(x);
        let s = self.pick(Self::base(x));
        self.taken.insert(s.clone());
        self.names.insert(x.clone(), s.clone());
        (s, old)
    }

    fn leave(&mut self, x: &Name, s: &str, old: Option<String>) {
        self.taken.remove(s);
        match old {
            Some(o) => {
                self.names.insert(x.clone(), o);
            }
            None => {
                self.names.remove(x);
            }
        }
    }

}

fn collect_consts(t: &Term, out: &mut BTreeSet<String>) {
    match t.kind() {
        TermKind::Const(c) => {
            out.insert(c.to_string());
        }
        _ => {
            for c in t.children() {
                collect_consts(c, out);
            }
        }
    }
}

/// Canonical rendering.
pub fn show(t: &Term) -> String {
    Printer::new(Style::Canonical).print(t)
}

/// Canonical rendering with context names fixed first.
pub fn show_in(ctx: &Context, t: &Term) -> String {
    let mut p = Printer::new(Style::Canonical);
    p.seed(ctx);
    p.print(t)
}

/// Goal-style rendering under a context.
pub fn show_goal(ctx: &Context, t: &Term) -> String {
    let mut p = Printer::new(Style::Goal);
    p.seed(ctx);
    p.print(t)
}

pub fn show_size(s: &Size) -> String {
    match s {
        Size::Var(x) => x.hint.to_string(),
        Size::Lt(inner) => format!("(< {})", show_size(inner)),
        Size::Inf => "INF".to_string(),
    }
}
