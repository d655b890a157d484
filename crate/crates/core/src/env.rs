//! Global environment: definitions, datatypes, rules and generic methods.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{Datatype, MethodTable, GET_DATATYPE_DEF};
use crate::error::Result;
use crate::reduce::{Reducer, RuleRegistry, DEFAULT_FUEL};
use crate::term::{Name, Sym, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Positivity {
    Off,
    #[default]
    Warn,
    Error,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub fuel: u64,
    pub positivity: Positivity,
}

impl Default for Config {
    fn default() -> Config {
        Config { fuel: DEFAULT_FUEL, positivity: Positivity::Warn }
    }
}

/// Size variables of a sized recursive function's input and output.
#[derive(Clone, Debug)]
pub struct SizedSig {
    pub in_size: Name,
    /// `None` when the result is unsized.
    pub out_size: Option<Name>,
    pub arity: usize,
    /// Position of the sized argument.
    pub rec_index: usize,
}

#[derive(Clone, Debug)]
pub enum GlobalKind {
    Definition(Term),
    Axiom,
    TypeCtor,
    DataCtor { datatype: Sym, index: usize },
    RecFun { rec_index: usize },
    SizedRecFun(SizedSig),
    /// Abbreviation of `target` with its first `omit` arguments inferred.
    Implicit { target: Sym, omit: usize },
    /// Size-propagating wrapper around a constructor.
    SizedCtor { ctor: Sym, datatype: Sym },
}

#[derive(Clone, Debug)]
pub struct Global {
    pub name: Sym,
    pub ty: Term,
    pub kind: GlobalKind,
}

/// Reads the text of an imported file.
pub type Loader = Arc<dyn Fn(&str) -> core::result::Result<String, String> + Send + Sync>;

#[derive(Clone)]
pub struct Env {
    pub globals: BTreeMap<Sym, Global>,
    pub order: Vec<Sym>,
    pub rules: RuleRegistry,
    pub methods: MethodTable,
    pub config: Config,
    pub warnings: Vec<String>,
    pub loader: Option<Loader>,
    /// Files already imported, to make imports idempotent.
    pub imported: Vec<String>,
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Env").field("globals", &self.order).field("rules", &self.rules.len()).finish()
    }
}

impl Default for Env {
    fn default() -> Env {
        Env::new()
    }
}

impl Env {
    pub fn new() -> Env {
        Env::with_config(Config::default())
    }

    pub fn with_config(config: Config) -> Env {
        Env {
            globals: BTreeMap::new(),
            order: Vec::new(),
            rules: RuleRegistry::with_beta(),
            methods: MethodTable::new(),
            config,
            warnings: Vec::new(),
            loader: None,
            imported: Vec::new(),
        }
    }

    pub fn global(&self, name: &str) -> Option<&Global> {
        self.globals.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.globals.contains_key(name)
    }

    pub fn add_global(&mut self, name: &Sym, ty: Term, kind: GlobalKind) {
        if !self.globals.contains_key(name) {
            self.order.push(name.clone());
        }
        self.globals.insert(name.clone(), Global { name: name.clone(), ty, kind });
    }

    /// Declaration of a registered datatype.
    pub fn datatype(&self, name: &str) -> Option<Arc<Datatype>> {
        self.methods.get_datatype_def(name)
    }

    pub fn datatypes(&self) -> Vec<Arc<Datatype>> {
        self.order.iter().filter_map(|n| self.methods.lookup(n, GET_DATATYPE_DEF).ok().and(self.datatype(n))).collect()
    }

    pub fn reducer(&self) -> Reducer<'_> {
        Reducer::new(&self.rules, self.config.fuel)
    }

    pub fn normalize(&self, t: &Term) -> Result<Term> {
        self.reducer().normalize(t)
    }

    pub fn whnf(&self, t: &Term) -> Result<Term> {
        self.reducer().whnf(t)
    }

    /// Runs `f` on a copy and commits it only on success.
    pub fn transaction<T>(&mut self, f: impl FnOnce(&mut Env) -> Result<T>) -> Result<T> {
        let mut copy = self.clone();
        let out = f(&mut copy)?;
        *self = copy;
        Ok(out)
    }
}
