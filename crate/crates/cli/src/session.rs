//! One proof session: an environment, the active proof and its history.
//! Shared by the terminal prover and the server.

use cur_kernel::elab::process_source;
use cur_kernel::env::Env;
use cur_kernel::ntac::{apply_tactic, extract_proof, render_state, start_proof, StateRecord, TacticTable, Zipper};
use cur_kernel::print::show;
use cur_kernel::reader::{parse, parse_one, SurfaceTerm};
use cur_kernel::Error;

pub struct Session {
    pub id: String,
    pub env: Env,
    pub zipper: Option<Zipper>,
    /// Zippers before each successful step.
    pub undo: Vec<Zipper>,
    /// Tactics applied so far, in canonical form.
    pub log: Vec<String>,
    table: TacticTable,
}

impl Session {
    pub fn new(id: impl Into<String>, env: Env) -> Session {
        Session { id: id.into(), env, zipper: None, undo: Vec::new(), log: Vec::new(), table: TacticTable::builtin() }
    }

    /// Elaborates a source text into the session environment; returns one
    /// line per definition.
    pub fn load(&mut self, file: &str, source: &str) -> Result<Vec<String>, Error> {
        let mut env = self.env.clone();
        let out = process_source(&mut env, file, source)?;
        self.env = env;
        Ok(out.iter().map(|o| o.to_string()).collect())
    }

    pub fn start_proof(&mut self, goal: &str) -> Result<StateRecord, Error> {
        let goal = parse_one("<goal>", goal)?;
        let z = start_proof(&self.env, &goal)?;
        self.zipper = Some(z);
        self.undo.clear();
        self.log.clear();
        Ok(self.state().expect("proof just started"))
    }

    pub fn state(&self) -> Option<StateRecord> {
        self.zipper.as_ref().map(render_state)
    }

    /// Applies one tactic. On failure the state is unchanged.
    pub fn apply(&mut self, text: &str) -> Result<StateRecord, Error> {
        let Some(z) = &self.zipper else {
            return Err(Error::new(cur_kernel::ErrorKind::Tactic("no active proof".into())));
        };
        let forms = parse("<tactic>", text)?;
        let [tac] = forms.as_slice() else {
            return Err(Error::new(cur_kernel::ErrorKind::Syntax(format!(
                "expected one tactic, found {}",
                forms.len()
            ))));
        };
        let next = apply_tactic(&self.env, &self.table, z, tac)?;
        if next.steps > z.steps {
            self.undo.push(z.clone());
            self.log.push(self.canonical(tac));
        }
        self.zipper = Some(next);
        Ok(self.state().expect("proof active"))
    }

    fn canonical(&self, tac: &SurfaceTerm) -> String {
        match tac.as_list() {
            Some([h, rest @ ..]) => {
                let name = h.as_symbol().map(|n| self.table.resolve(n)).unwrap_or("");
                let mut s = format!("({name}");
                for r in rest {
                    s.push(' ');
                    s.push_str(&r.to_string());
                }
                s.push(')');
                s
            }
            _ => tac.as_symbol().map(|n| self.table.resolve(n).to_string()).unwrap_or_else(|| tac.to_string()),
        }
    }

    pub fn undo(&mut self) -> Option<StateRecord> {
        let prev = self.undo.pop()?;
        self.log.pop();
        self.zipper = Some(prev);
        self.state()
    }

    /// The checked proof term, printed.
    pub fn extract(&self) -> Result<String, Error> {
        let Some(z) = &self.zipper else {
            return Err(Error::new(cur_kernel::ErrorKind::Tactic("no active proof".into())));
        };
        extract_proof(&self.env, z).map(|t| show(&t))
    }

    pub fn script(&self) -> String {
        self.log.join(" ")
    }
}
