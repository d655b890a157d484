//! The bundled standard library: `Nat`, `Bool`, `False`, `=`, `Vec` and a
//! few functions over them.

use crate::elab::{process_source, PRELUDE};
use crate::env::Env;
use crate::error::Result;

/// `env` with the prelude loaded.
pub fn load(mut env: Env) -> Result<Env> {
    if !env.imported.iter().any(|i| i == "prelude") {
        env.imported.push("prelude".into());
        process_source(&mut env, "prelude", PRELUDE)?;
    }
    Ok(env)
}
