//! A small dependently typed proof kernel.
//!
//! Surface programs are read by [`reader`], elaborated against an [`env::Env`]
//! by [`check`] and [`elab`], and reduced with the rule engine in [`reduce`].
//! Inductive families live in [`data`], implicit arguments in [`unify`],
//! sized types in [`sized`] and the tactic engine in [`ntac`].

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod check;
pub mod data;
pub mod elab;
pub mod env;
pub mod error;
pub mod ntac;
pub mod prelude;
pub mod print;
pub mod reader;
pub mod reduce;
pub mod sized;
pub mod term;
pub mod unify;

pub use error::{Error, ErrorKind, Result};
pub use term::{fresh, Context, Name, Sym, Telescope, Term, TermKind};
