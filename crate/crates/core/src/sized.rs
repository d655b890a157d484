//! Sizes for the sized-types termination analysis.

use alloc::boxed::Box;

use crate::term::{Name, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Size {
    Var(Name),
    Lt(Box<Size>),
    Inf,
}

impl Size {
    pub fn lt(s: Size) -> Size {
        Size::Lt(Box::new(s))
    }

    pub fn depth(&self) -> usize {
        match self {
            Size::Lt(s) => 1 + s.depth(),
            _ => 0,
        }
    }

    /// The variable at the root of a `Lt` chain.
    pub fn root(&self) -> Option<&Name> {
        match self {
            Size::Var(x) => Some(x),
            Size::Lt(s) => s.root(),
            Size::Inf => None,
        }
    }
}

/// `s1 <= s2` in the size order.
pub fn sz_ok(s1: &Size, s2: &Size) -> bool {
    if *s2 == Size::Inf {
        return true;
    }
    match (s1, s2) {
        (Size::Var(x), Size::Var(y)) => x == y,
        (Size::Lt(x), Size::Lt(y)) => sz_ok(x, y) || sz_ok(x, s2),
        (Size::Lt(x), _) => sz_ok(x, s2),
        _ => false,
    }
}

/// Size of a constructor result built from an argument of size `s`.
pub fn inc_sz(s: &Size) -> Size {
    match s {
        Size::Lt(inner) => (**inner).clone(),
        _ => Size::Var(Name::fresh("sz")),
    }
}

pub fn dec_sz(s: &Size) -> Size {
    Size::lt(s.clone())
}

/// Size tag of a type, `INF` when absent.
pub fn get_sz(ty: &Term) -> Size {
    ty.size_tag().cloned().unwrap_or(Size::Inf)
}

pub fn add_sz(ty: &Term, s: Size) -> Term {
    ty.with_size(Some(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn var(x: &Name) -> Size {
        Size::Var(x.clone())
    }

    #[test]
    fn examples() {
        let i = Name::fresh("i");
        assert!(sz_ok(&var(&i), &Size::Inf));
        assert!(sz_ok(&Size::lt(var(&i)), &var(&i)));
        assert!(!sz_ok(&var(&i), &Size::lt(var(&i))));
        assert!(!sz_ok(&Size::Inf, &var(&i)));
    }

    fn all_sizes(vars: &[Name], depth: usize) -> Vec<Size> {
        let mut base: Vec<Size> = vars.iter().map(var).collect();
        base.push(Size::Inf);
        let mut out = base.clone();
        let mut layer = base;
        for _ in 0..depth {
            layer = layer.into_iter().map(Size::lt).collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    #[test]
    fn reflexive_and_transitive_to_depth_five() {
        let vars = vec![Name::fresh("i"), Name::fresh("j")];
        let sizes = all_sizes(&vars, 5);
        for a in &sizes {
            assert!(sz_ok(a, a), "{a:?}");
            for b in &sizes {
                for c in &sizes {
                    if sz_ok(a, b) && sz_ok(b, c) {
                        assert!(sz_ok(a, c), "{a:?} {b:?} {c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn strictly_smaller_to_depth_five() {
        let vars = vec![Name::fresh("i")];
        for s in all_sizes(&vars, 5) {
            if s == Size::Inf {
                continue;
            }
            assert!(sz_ok(&Size::lt(s.clone()), &s));
            if s.root().is_some() {
                assert!(!sz_ok(&s, &Size::lt(s.clone())));
            }
        }
    }

    #[test]
    fn inc_strips_or_mints() {
        let i = Name::fresh("i");
        assert_eq!(inc_sz(&Size::lt(var(&i))), var(&i));
        let (a, b) = (inc_sz(&var(&i)), inc_sz(&var(&i)));
        assert_ne!(a, b);
    }
}
