//! Command-line front end for the kernel: batch checking, an interactive
//! prover and a line-delimited JSON proof server.

pub mod repl;
pub mod server;
pub mod session;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use cur_kernel::env::{Config, Env};

/// An environment whose `(import "path")` reads files relative to `base`.
pub fn env_for(config: Config, base: Option<&Path>) -> Env {
    let mut env = Env::with_config(config);
    let base: PathBuf = base.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    env.loader = Some(Arc::new(move |p: &str| std::fs::read_to_string(base.join(p)).map_err(|e| e.to_string())));
    env
}
