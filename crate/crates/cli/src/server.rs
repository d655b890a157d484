//! Line-delimited JSON protocol over TCP. Each request is one object per
//! line and gets exactly one response line carrying the same `id`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use cur_kernel::env::Config;
use cur_kernel::ntac::StateRecord;
use cur_kernel::ErrorKind;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::session::Session;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Command {
    LoadFile { path: Option<String>, source: Option<String> },
    StartProof { goal: String },
    ApplyTactic { text: String },
    Undo,
    Extract,
    Script,
}

#[derive(Debug, Deserialize)]
pub struct Request {
    #[serde(default)]
    pub id: Value,
    pub session: Option<String>,
    #[serde(flatten)]
    pub command: Command,
}

pub fn state_json(s: &StateRecord) -> Value {
    json!({
        "goals_total": s.goals_total,
        "focused_index": s.focused_index,
        "hypotheses": s.hypotheses.iter().map(|(n, t)| json!({"name": n, "type": t})).collect::<Vec<_>>(),
        "goal": s.goal,
        "steps": s.steps,
        "complete": s.complete,
    })
}

/// Sessions by id, shared by all connections.
#[derive(Clone)]
pub struct Server {
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Session>>>>>,
    config: Config,
    next: Arc<AtomicU64>,
}

impl Server {
    pub fn new(config: Config) -> Server {
        Server { sessions: Arc::default(), config, next: Arc::new(AtomicU64::new(1)) }
    }

    /// A session id unique to this server.
    pub fn fresh_session_id(&self) -> String {
        format!("conn-{}", self.next.fetch_add(1, Ordering::Relaxed))
    }

    fn session(&self, id: &str) -> Arc<Mutex<Session>> {
        let mut map = self.sessions.lock().expect("session map poisoned");
        map.entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(Session::new(id, crate::env_for(self.config.clone(), None)))))
            .clone()
    }

    /// Handles one request line. `default_session` is used when the request
    /// names none.
    pub fn handle_line(&self, line: &str, default_session: &str) -> Value {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                let id = serde_json::from_str::<Value>(line).ok().and_then(|v| v.get("id").cloned()).unwrap_or(Value::Null);
                return json!({"id": id, "ok": false, "error": format!("bad request: {e}")});
            }
        };
        let sid = req.session.clone().unwrap_or_else(|| default_session.to_string());
        let session = self.session(&sid);
        let mut s = session.lock().expect("session poisoned");
        let mut out = handle(&mut s, req.command);
        out["id"] = req.id;
        out
    }

    /// Serves one connection until it closes.
    pub fn serve_connection(&self, stream: TcpStream) -> std::io::Result<()> {
        let sid = self.fresh_session_id();
        let mut writer = stream.try_clone()?;
        for line in BufReader::new(stream).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let resp = self.handle_line(&line, &sid);
            writeln!(writer, "{resp}")?;
            writer.flush()?;
        }
        Ok(())
    }

    /// Accepts connections forever, one thread each.
    pub fn run(&self, listener: TcpListener) -> std::io::Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            let me = self.clone();
            std::thread::spawn(move || {
                let _ = me.serve_connection(stream);
            });
        }
        Ok(())
    }
}

fn no_proof() -> Value {
    json!({"ok": false, "error": "no active proof"})
}

fn handle(s: &mut Session, cmd: Command) -> Value {
    match cmd {
        Command::LoadFile { path, source } => {
            let (file, text) = match (path, source) {
                (_, Some(src)) => ("<source>".to_string(), src),
                (Some(p), None) => match std::fs::read_to_string(&p) {
                    Ok(t) => {
                        let dir = Path::new(&p).parent().map(Path::to_path_buf);
                        s.env.loader = crate::env_for(s.env.config.clone(), dir.as_deref()).loader;
                        (p, t)
                    }
                    Err(e) => return json!({"ok": false, "error": format!("cannot read {p}: {e}")}),
                },
                (None, None) => return json!({"ok": false, "error": "bad request: load_file needs path or source"}),
            };
            match s.load(&file, &text) {
                Ok(defs) => json!({"ok": true, "definitions": defs}),
                Err(e) => json!({"ok": false, "error": e.to_string()}),
            }
        }
        Command::StartProof { goal } => match s.start_proof(&goal) {
            Ok(st) => json!({"ok": true, "state": state_json(&st)}),
            Err(e) => json!({"ok": false, "error": e.to_string()}),
        },
        Command::ApplyTactic { text } => match s.apply(&text) {
            Ok(st) => json!({"ok": true, "state": state_json(&st)}),
            Err(e) => match s.state() {
                Some(st) => {
                    let msg = e.kind.to_string();
                    json!({"ok": false, "error": msg, "message": msg, "state": state_json(&st)})
                }
                None => no_proof(),
            },
        },
        Command::Undo => match s.undo() {
            Some(st) => json!({"ok": true, "state": state_json(&st)}),
            None => match s.state() {
                Some(st) => json!({"ok": false, "error": "nothing to undo", "state": state_json(&st)}),
                None => no_proof(),
            },
        },
        Command::Extract => match s.extract() {
            Ok(t) => json!({"ok": true, "term": t}),
            Err(e) => match e.kind {
                ErrorKind::OpenGoals(n) => json!({"ok": false, "error": e.kind.to_string(), "open_goals": n}),
                _ => json!({"ok": false, "error": e.to_string()}),
            },
        },
        Command::Script => json!({"ok": true, "steps": s.log}),
    }
}
