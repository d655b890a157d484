//! The terminal prover: reads tactic forms, prints the proof state after
//! each step and the accumulated script on `(quit)`.

use std::io::{BufRead, Write};

use crate::session::Session;

/// Runs the loop over `input` until `(quit)` or end of input. Returns the
/// final script.
pub fn run(session: &mut Session, input: impl BufRead, mut out: impl Write) -> std::io::Result<String> {
    if let Some(st) = session.state() {
        writeln!(out, "{}", st.to_text())?;
    }
    write!(out, "> ")?;
    out.flush()?;
    for line in input.lines() {
        let line = line?;
        let cmd = line.trim();
        if cmd.is_empty() {
            write!(out, "> ")?;
            out.flush()?;
            continue;
        }
        if cmd == "(quit)" || cmd == "quit" {
            break;
        }
        if cmd == "(undo)" || cmd == "undo" {
            match session.undo() {
                Some(st) => writeln!(out, "{}", st.to_text())?,
                None => writeln!(out, "error: nothing to undo")?,
            }
        } else {
            match session.apply(cmd) {
                Ok(st) => writeln!(out, "{}", st.to_text())?,
                Err(e) => writeln!(out, "error: {}", e.kind)?,
            }
        }
        write!(out, "> ")?;
        out.flush()?;
    }
    let script = session.script();
    writeln!(out)?;
    writeln!(out, "script: {script}")?;
    Ok(script)
}
