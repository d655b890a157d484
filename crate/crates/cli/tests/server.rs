use std::path::PathBuf;

use cur::server::Server;
use cur_kernel::env::Config;
use serde_json::{json, Value};

const ID_GOAL: &str = "(∀ (A : Type) (a : A) A)";

fn ask(server: &Server, session: &str, req: Value) -> Value {
    server.handle_line(&req.to_string(), session)
}

fn sessions_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/sessions")
}

fn recordings() -> Vec<(String, Vec<(Value, Value)>)> {
    let mut files: Vec<_> = std::fs::read_dir(sessions_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
            let pairs = v.as_array().unwrap().iter().map(|e| (e["request"].clone(), e["response"].clone())).collect();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), pairs)
        })
        .collect()
}

#[test]
fn start_proof_reports_goal() {
    let s = Server::new(Config::default());
    let r = ask(&s, "a", json!({"id": 7, "kind": "start_proof", "goal": ID_GOAL}));
    assert_eq!(r["id"], 7);
    assert_eq!(r["ok"], true);
    assert_eq!(r["state"]["goal"], ID_GOAL);
    assert_eq!(r["state"]["goals_total"], 1);
    assert_eq!(r["state"]["steps"], 0);
}

#[test]
fn failed_tactic_keeps_state() {
    let s = Server::new(Config::default());
    let start = ask(&s, "a", json!({"id": 1, "kind": "start_proof", "goal": ID_GOAL}));
    let r = ask(&s, "a", json!({"id": 2, "kind": "apply_tactic", "text": "assumption"}));
    assert_eq!(r["ok"], false);
    assert!(r["error"].as_str().unwrap().starts_with("no assumption"));
    assert_eq!(r["message"], r["error"]);
    assert_eq!(r["state"], start["state"]);
}

#[test]
fn undo_restores_previous_state() {
    let s = Server::new(Config::default());
    let start = ask(&s, "a", json!({"id": 1, "kind": "start_proof", "goal": ID_GOAL}));
    let r = ask(&s, "a", json!({"id": 2, "kind": "apply_tactic", "text": "(intro A)"}));
    assert_eq!(r["state"]["steps"], 1);
    let r = ask(&s, "a", json!({"id": 3, "kind": "undo"}));
    assert_eq!(r["state"], start["state"]);
    let r = ask(&s, "a", json!({"id": 4, "kind": "undo"}));
    assert_eq!((r["ok"].clone(), r["error"].clone()), (json!(false), json!("nothing to undo")));
}

#[test]
fn sessions_are_isolated() {
    let s = Server::new(Config::default());
    ask(&s, "a", json!({"id": 1, "kind": "start_proof", "goal": ID_GOAL}));
    ask(&s, "b", json!({"id": 1, "kind": "start_proof", "goal": "Type"}));
    let ra = ask(&s, "a", json!({"id": 2, "kind": "apply_tactic", "text": "intros"}));
    assert_eq!(ra["state"]["goal"], "A");
    let rb = ask(&s, "b", json!({"id": 2, "kind": "script"}));
    assert_eq!(rb["steps"], json!([]));
    let named = ask(&s, "ignored", json!({"id": 3, "session": "b", "kind": "apply_tactic", "text": "(exact Type)"}));
    assert_eq!(named["state"]["complete"], true);
    let ra = ask(&s, "a", json!({"id": 4, "kind": "script"}));
    assert_eq!(ra["steps"], json!(["intros"]));
    assert_ne!(s.fresh_session_id(), s.fresh_session_id());
}

#[test]
fn definitions_are_per_session() {
    let s = Server::new(Config::default());
    let r = ask(&s, "a", json!({"id": 1, "kind": "load_file", "source": "(import prelude)\n(define two : Nat 2)"}));
    assert_eq!(r["ok"], true, "{r}");
    assert!(r["definitions"].as_array().unwrap().iter().any(|d| d == "two : Nat"), "{r}");
    assert_eq!(ask(&s, "a", json!({"id": 2, "kind": "start_proof", "goal": "(= Nat two 2)"}))["ok"], true);
    let other = ask(&s, "b", json!({"id": 1, "kind": "start_proof", "goal": "(= Nat two 2)"}));
    assert_eq!(other["ok"], false);
}

#[test]
fn load_file_by_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("lib.cur"), "(import prelude)\n(define three : Nat 3)\n").unwrap();
    std::fs::write(dir.path().join("main.cur"), "(import \"lib.cur\")\n(define four : Nat (S three))\n").unwrap();
    let s = Server::new(Config::default());
    let path = dir.path().join("main.cur");
    let r = ask(&s, "a", json!({"id": 1, "kind": "load_file", "path": path}));
    assert_eq!(r["ok"], true, "{r}");
    let r = ask(&s, "a", json!({"id": 2, "kind": "load_file", "path": dir.path().join("missing.cur")}));
    assert!(r["error"].as_str().unwrap().starts_with("cannot read"));
}

#[test]
fn malformed_requests_are_rejected() {
    let s = Server::new(Config::default());
    let r = s.handle_line("{not json", "a");
    assert!(r["error"].as_str().unwrap().starts_with("bad request"));
    let r = s.handle_line(r#"{"id": 5, "kind": "launch_rockets"}"#, "a");
    assert_eq!(r["id"], 5);
    assert!(r["error"].as_str().unwrap().starts_with("bad request"));
    let r = s.handle_line(r#"{"id": 6, "kind": "apply_tactic", "text": "intro"}"#, "a");
    assert_eq!(r["error"], "no active proof");
}

#[test]
fn extract_reports_open_goals() {
    let s = Server::new(Config::default());
    ask(&s, "a", json!({"id": 1, "kind": "start_proof", "goal": ID_GOAL}));
    ask(&s, "a", json!({"id": 2, "kind": "apply_tactic", "text": "intro"}));
    let r = ask(&s, "a", json!({"id": 3, "kind": "extract"}));
    assert_eq!((r["ok"].clone(), r["open_goals"].clone()), (json!(false), json!(1)));
}

#[test]
fn recorded_sessions_replay_identically() {
    let recs = recordings();
    assert!(recs.len() >= 5);
    for (name, pairs) in recs {
        let s = Server::new(Config::default());
        for (req, expected) in pairs {
            assert_eq!(ask(&s, &name, req.clone()), expected, "{name}: {req}");
        }
    }
}

#[test]
fn scripts_reproduce_final_state() {
    for (name, pairs) in recordings() {
        let s = Server::new(Config::default());
        let mut last_state = Value::Null;
        let mut setup = Vec::new();
        for (req, resp) in &pairs {
            ask(&s, "orig", req.clone());
            if matches!(req["kind"].as_str(), Some("load_file" | "start_proof")) {
                setup.push(req.clone());
            }
            if !resp["state"].is_null() {
                last_state = resp["state"].clone();
            }
        }
        let script = ask(&s, "orig", json!({"id": 0, "kind": "script"}))["steps"].clone();
        for req in setup {
            ask(&s, "replay", req);
        }
        let mut state = Value::Null;
        for t in script.as_array().unwrap() {
            let r = ask(&s, "replay", json!({"id": 0, "kind": "apply_tactic", "text": t}));
            assert_eq!(r["ok"], true, "{name}: {t}");
            state = r["state"].clone();
        }
        assert_eq!(state, last_state, "{name}");
    }
}
