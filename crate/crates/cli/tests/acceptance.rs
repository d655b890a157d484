#[path = "../../core/tests/gen/mod.rs"]
mod gen;
mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use cur::server::Server;
use cur_kernel::check::Elaborator;
use cur_kernel::elab::process_source;
use cur_kernel::env::{Config, Env};
use cur_kernel::ntac::{apply_tactic_text, extract_proof, render_state, start_proof, TacticTable, Zipper};
use cur_kernel::reader::parse_one;
use cur_kernel::term::{alpha_eq, alpha_eq_erased};
use cur_kernel::unify::{unify, Constraint, MetaSubst};
use cur_kernel::{prelude, Context, ErrorKind, Name, Term};
use proptest::test_runner::{Config as RunnerConfig, TestCaseError, TestRunner};
use serde_json::{json, Value};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Outcome {
    let took = start.elapsed();
    ensure(took <= limit, format!("took {took:?}, limit {limit:?}"))
}

fn env() -> Env {
    prelude::load(Env::new()).unwrap()
}

fn unary(n: usize) -> Term {
    (0..n).fold(Term::constant("Z"), |t, _| Term::app(Term::constant("S"), t))
}

fn run_src(env: &mut Env, src: &str) -> Result<Vec<String>, String> {
    process_source(env, "<acceptance>", src).map(|v| v.iter().map(ToString::to_string).collect()).map_err(|e| e.to_string())
}

fn peano_norm() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let file = dir.path().join("peano.cur");
    std::fs::write(
        &file,
        "(define-datatype Nat : Type [Z : Nat] [S [n : Nat] : Nat])
         (define plus [m : Nat] [n : Nat] : Nat (elim-Nat m (λ [_ : Nat] Nat) n (λ [k : Nat] [r : Nat] (S r))))",
    )
    .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_cur"))
        .args(["norm", file.to_str().unwrap(), "-e", "(plus 2 3)"])
        .output()
        .map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(1))?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value = stdout.trim().split(" : ").next().unwrap_or("");
    ensure(out.status.success() && value == "(S (S (S (S (S Z)))))", format!("got {stdout:?}"))
}

fn iota_schema() -> Outcome {
    let start = Instant::now();
    let env = env();
    let names: BTreeSet<String> = env.datatypes().iter().map(|d| d.name.to_string()).collect();
    for want in ["Nat", "Bool", "False", "=", "Vec"] {
        ensure(names.contains(want), format!("missing datatype {want}"))?;
    }
    for dt in env.datatypes() {
        let motive = Name::fresh("P");
        let methods: Vec<Name> = dt.ctors.iter().map(|_| Name::fresh("m")).collect();
        let elim = |t: Term| Term::elim(&dt.name, t, Term::var(&motive), methods.iter().map(Term::var).collect());
        let params: Vec<Term> = dt.params.0.iter().map(|_| Term::var(&Name::fresh("p"))).collect();
        for (i, c) in dt.ctors.iter().enumerate() {
            let args: Vec<Term> = c.args.0.iter().map(|_| Term::var(&Name::fresh("x"))).collect();
            let target = Term::apps(Term::constant(&c.name), params.iter().chain(&args).cloned());
            let hyps = c.recursive.iter().map(|r| elim(args[r.position].clone()));
            let expected = Term::apps(Term::var(&methods[i]), args.iter().cloned().chain(hyps));
            let got = env.whnf(&elim(target)).map_err(|e| e.to_string())?;
            ensure(alpha_eq(&got, &expected), format!("{}: {}", c.name, cur_kernel::print::show(&got)))?;
        }
    }
    within(start, Duration::from_secs(1))
}

fn implicit_cons() -> Outcome {
    let mut env = env();
    run_src(&mut env, "(define-implicit nil′ = nil #:omit 1) (define-implicit cons′ = cons #:omit 2)")?;
    let el = Elaborator::new(&env);
    let s = |t: &str| parse_one("<acceptance>", t).unwrap();
    let ty = el.check_type(&Context::new(), &s("(Vec Nat 2)")).map_err(|e| e.to_string())?;
    let core = el.check(&Context::new(), &s("(cons′ Z (cons′ Z (nil′)))"), &ty).map_err(|e| e.to_string())?;
    let cons = |k: usize, tail: Term| Term::apps(Term::constant("cons"), [Term::constant("Nat"), unary(k), Term::constant("Z"), tail]);
    let expected = cons(1, cons(0, Term::app(Term::constant("nil"), Term::constant("Nat"))));
    ensure(alpha_eq(&core, &expected), cur_kernel::print::show(&core))
}

fn div_oracle(n: usize, m: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 + div_oracle((n - 1).saturating_sub(m), m)
    }
}

fn termination_triad() -> Outcome {
    let mut env = env();
    let looped = process_source(&mut env, "<a>", "(define/rec/match loop [n : Nat] : Nat [_ => (loop n)])");
    ensure(matches!(looped, Err(e) if matches!(e.kind, ErrorKind::Nonterminate(_))), "loop accepted")?;
    run_src(&mut env, "(define/rec/match minus [n : Nat] [m : Nat] : Nat [Z _ => n] [_ Z => n] [(S n-1) (S m-1) => (minus n-1 m-1)])")?;
    let div = run_src(&mut env, "(define/rec/match div [n : Nat] [m : Nat] : Nat [Z _ => Z] [(S n-1) m => (S (div (minus n-1 m) m))])");
    ensure(matches!(&div, Err(e) if e.contains("nonterminate")), format!("div: {div:?}"))?;
    run_src(
        &mut env,
        "(lift-datatype Nat)
         (define/rec/match-sz minus_sz [n : Nat #:sz i] [m : Nat] : Nat #:sz i
           [Z_sz _ => n] [_ Z_sz => n] [(S_sz n-1) (S_sz m-1) => (minus_sz n-1 m-1)])
         (define/rec/match-sz div_sz [n : Nat #:sz i] [m : Nat] : Nat #:sz i
           [Z_sz _ => n] [(S_sz n-1) m => (S_sz (div_sz (minus_sz n-1 m) m))])",
    )?;
    let (v, _) = Elaborator::new(&env).infer(&Context::new(), &parse_one("<a>", "(div_sz 6 2)").unwrap()).map_err(|e| e.to_string())?;
    let v = env.normalize(&v).map_err(|e| e.to_string())?;
    ensure(alpha_eq(&v, &unary(div_oracle(6, 2))), cur_kernel::print::show(&v))
}

fn unify_oracle() -> Outcome {
    let start = Instant::now();
    let env = env();
    let pool = gen::Pool::shared();
    let mut runner = TestRunner::new_with_rng(
        RunnerConfig { cases: 500, failure_persistence: None, ..RunnerConfig::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner
        .run(&(gen::normal(pool, 4, true), gen::substitution(pool, 3)), |(t, sigma)| {
            let solvables: BTreeSet<Name> = sigma.keys().cloned().collect();
            let target = t.substitute(&sigma);
            let sol = unify(&env, vec![Constraint::new(t.clone(), target)], &solvables, MetaSubst::new())
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            for x in t.free_vars().intersection(&solvables) {
                if !sol.get(x).is_some_and(|s| alpha_eq_erased(s, &sigma[x])) {
                    return Err(TestCaseError::fail(format!("disagrees on {}", x.hint)));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(5))
}

fn tactic(env: &Env, z: &Zipper, t: &str) -> Result<Zipper, String> {
    apply_tactic_text(env, &TacticTable::builtin(), z, t).map_err(|e| e.to_string())
}

fn tactic_transcript() -> Outcome {
    let env = env();
    let goal = "(∀ (A : Type) (a : A) A)";
    let z0 = start_proof(&env, &parse_one("<goal>", goal).unwrap()).map_err(|e| e.to_string())?;
    ensure(render_state(&z0).to_text() == "goal 1 of 1: (∀ (A : Type) (a : A) A)", render_state(&z0).to_text())?;
    let z1 = tactic(&env, &z0, "(by-intros A a)")?;
    let text = render_state(&z1).to_text();
    ensure(text.lines().any(|l| l == "curr goal:  A"), text.clone())?;
    let z2 = tactic(&env, &z1, "by-assumption")?;
    ensure(z2.steps == 2 && render_state(&z2).to_text() == "Proof complete (2 steps)", render_state(&z2).to_text())?;
    let proof = extract_proof(&env, &z2).map_err(|e| e.to_string())?;
    let (a, x) = (Name::fresh("A"), Name::fresh("a"));
    let id = Term::lam(&a, Some(Term::universe()), Term::lam(&x, Some(Term::var(&a)), Term::var(&x)));
    ensure(alpha_eq_erased(&proof, &id), cur_kernel::print::show(&proof))?;
    let el = Elaborator::new(&env);
    let ty = el.check_type(&Context::new(), &parse_one("<goal>", goal).unwrap()).map_err(|e| e.to_string())?;
    el.check_term(&Context::new(), &proof, &ty).map(|_| ()).map_err(|e| e.to_string())
}

fn try_backtracks() -> Outcome {
    let env = env();
    let z = start_proof(&env, &parse_one("<goal>", "(∀ (A : Type) (a : A) A)").unwrap()).map_err(|e| e.to_string())?;
    let before = render_state(&z).to_text();
    let after = tactic(&env, &z, "(try assumption)")?;
    ensure(render_state(&after).to_text() == before, render_state(&after).to_text())
}

fn axiom_tracking() -> Outcome {
    let mut env = env();
    run_src(
        &mut env,
        "(define-axiom false=true (= Bool false true))
         (define-implicit sym′ = sym #:omit 3)
         (define not-fixed : (∀ (x : Bool) (= Bool (not x) x))
           (λ [x : Bool] (elim-Bool x (λ [y : Bool] (= Bool (not y) y)) false=true (sym′ false=true))))
         (define id [A : Type] [a : A] : A a)",
    )?;
    let bad = run_src(&mut env, "(print-assumptions not-fixed)")?;
    ensure(bad == ["Axioms used: false=true : (= Bool false true)"], format!("{bad:?}"))?;
    let good = run_src(&mut env, "(print-assumptions id)")?;
    ensure(good == ["Axioms used: none"], format!("{good:?}"))
}

fn checker_invariants() -> Outcome {
    let start = Instant::now();
    let programs = common::accepted();
    ensure(programs.len() >= 30, format!("only {} programs", programs.len()))?;
    let prelude = common::load_text(std::path::Path::new("prelude.cur"), "(import prelude)").map_err(|e| e.to_string())?;
    let mut failures = common::checker_failures(&prelude.env, &common::terms(&prelude));
    for p in programs {
        let l = common::load(&p).map_err(|e| format!("{}: {e}", p.display()))?;
        failures.extend(common::checker_failures(&l.env, &common::terms(&l)).into_iter().map(|f| format!("{}: {f}", p.display())));
    }
    ensure(failures.is_empty(), format!("{failures:?}"))?;
    within(start, Duration::from_secs(30))
}

fn protocol_replay() -> Outcome {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/sessions");
    let mut files: Vec<_> = std::fs::read_dir(dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    files.sort();
    ensure(!files.is_empty(), "no recorded sessions")?;
    for f in files {
        let rec: Value = serde_json::from_str(&std::fs::read_to_string(&f).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let entries = rec.as_array().ok_or("not an array")?;
        let server = Server::new(Config::default());
        let mut final_state = Value::Null;
        for e in entries {
            server.handle_line(&e["request"].to_string(), "recorded");
            if !e["response"]["state"].is_null() {
                final_state = e["response"]["state"].clone();
            }
        }
        let script = server.handle_line(&json!({"kind": "script"}).to_string(), "recorded")["steps"].clone();
        for e in entries.iter().filter(|e| matches!(e["request"]["kind"].as_str(), Some("load_file" | "start_proof"))) {
            server.handle_line(&e["request"].to_string(), "fresh");
        }
        let mut state = Value::Null;
        for t in script.as_array().ok_or("no script")? {
            let r = server.handle_line(&json!({"kind": "apply_tactic", "text": t}).to_string(), "fresh");
            ensure(r["ok"] == true, format!("{}: {r}", f.display()))?;
            state = r["state"].clone();
        }
        ensure(state == final_state, format!("{}: {state} vs {final_state}", f.display()))?;
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("peano arithmetic end-to-end (≤ 1 s)", peano_norm),
        ("eliminator ι schema for every prelude constructor (≤ 1 s)", iota_schema),
        ("implicit arguments solve k to 1 then 0", implicit_cons),
        ("termination: loop and div rejected, div_sz accepted", termination_triad),
        ("unification oracle, 500 trials (≤ 5 s)", unify_oracle),
        ("tactic transcript and extraction", tactic_transcript),
        ("try leaves the state byte-identical", try_backtracks),
        ("axiom tracking", axiom_tracking),
        ("checker invariants over prelude and corpus (≤ 30 s)", checker_invariants),
        ("protocol replay of recorded sessions", protocol_replay),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("{} of {} criteria failed", failed.len(), criteria.len());
        std::process::exit(1);
    }
}
