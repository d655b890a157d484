#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use cur_kernel::check::Elaborator;
use cur_kernel::elab::{process, Output};
use cur_kernel::env::{Config, Env, GlobalKind};
use cur_kernel::print::show;
use cur_kernel::reader::{parse, parse_one, SurfaceTerm};
use cur_kernel::term::alpha_eq_erased;
use cur_kernel::{Context, Error, Term};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

fn cur_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cur"))
        .collect();
    v.sort();
    v
}

/// Programs that must check.
pub fn accepted() -> Vec<PathBuf> {
    cur_files(&corpus_dir())
}

/// Programs that must fail, with the text their error has to contain.
pub fn rejected() -> Vec<(PathBuf, String)> {
    cur_files(&corpus_dir().join("reject"))
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let expect = text.lines().next().and_then(|l| l.strip_prefix("; expect: ")).expect("expect line").to_string();
            (p, expect)
        })
        .collect()
}

pub struct Loaded {
    pub env: Env,
    pub forms: Vec<SurfaceTerm>,
    pub outputs: Vec<Output>,
}

pub fn load_text(path: &Path, text: &str) -> Result<Loaded, Error> {
    let mut env = cur::env_for(Config::default(), path.parent());
    let forms = parse(&path.display().to_string(), text).map_err(Error::from)?;
    let mut outputs = Vec::new();
    for f in &forms {
        outputs.extend(process(&mut env, f)?);
    }
    Ok(Loaded { env, forms, outputs })
}

pub fn load(path: &Path) -> Result<Loaded, Error> {
    load_text(path, &std::fs::read_to_string(path).unwrap())
}

/// Closed terms drawn from a loaded program: every global, every definition
/// body and every checked expression.
pub fn terms(l: &Loaded) -> Vec<Term> {
    let mut out = Vec::new();
    for name in &l.env.order {
        match &l.env.globals[name].kind {
            GlobalKind::Implicit { .. } => {}
            GlobalKind::Definition(body) => {
                out.push(Term::const_sym(name));
                out.push(body.clone());
            }
            _ => out.push(Term::const_sym(name)),
        }
    }
    for o in &l.outputs {
        if let Output::Checked { term, .. } = o {
            out.push(term.clone());
        }
    }
    out
}

/// Infer/check roundtrip and normalize-preserves-type for each term.
pub fn checker_failures(env: &Env, terms: &[Term]) -> Vec<String> {
    let el = Elaborator::new(env);
    let ctx = Context::new();
    let mut failures = Vec::new();
    for t in terms {
        let text = show(t);
        let s = match parse_one("<term>", &text) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("reparse {text}: {e}"));
                continue;
            }
        };
        let (core, ty) = match el.infer(&ctx, &s) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("infer {text}: {e}"));
                continue;
            }
        };
        match el.check(&ctx, &s, &ty) {
            Ok(c) if alpha_eq_erased(&c, &core) => {}
            Ok(c) => failures.push(format!("check {text} gave {}", show(&c))),
            Err(e) => failures.push(format!("check {text}: {e}")),
        }
        let nf = match env.normalize(&core) {
            Ok(nf) => nf,
            Err(e) => {
                failures.push(format!("normalize {text}: {e}"));
                continue;
            }
        };
        match parse_one("<nf>", &show(&nf)) {
            Ok(s2) => {
                if let Err(e) = el.check(&ctx, &s2, &ty) {
                    failures.push(format!("normal form of {text}: {e}"));
                }
            }
            Err(e) => failures.push(format!("reparse normal form of {text}: {e}")),
        }
    }
    failures
}

/// The program with every `define/rec/match` turned into its sized
/// counterpart over lifted datatypes.
pub fn lift_program(l: &Loaded) -> String {
    let mut lifted: BTreeSet<String> = BTreeSet::new();
    let mut out = String::new();
    for f in &l.forms {
        let items = f.as_list().unwrap_or(&[]);
        if f.head_symbol() != Some("define/rec/match") {
            out.push_str(&format!("{f}\n"));
            continue;
        }
        let name = items[1].as_symbol().unwrap();
        let Some(GlobalKind::RecFun { rec_index }) = l.env.global(name).map(|g| &g.kind) else {
            panic!("{name} is not a recursive function")
        };
        let params: Vec<&SurfaceTerm> = items[2..].iter().take_while(|p| !p.is_symbol(":")).collect();
        let param = params[*rec_index].as_list().unwrap();
        let ty = &param[2];
        let dt = ty.head_symbol().or_else(|| ty.as_symbol()).unwrap().to_string();
        if lifted.insert(dt.clone()) {
            out.push_str(&format!("(lift-datatype {dt})\n"));
        }
        let mut text = String::from("(define/rec/match-sz");
        for (i, it) in items[1..].iter().enumerate() {
            if i == rec_index + 1 {
                let parts: Vec<String> = param.iter().map(|p| p.to_string()).collect();
                text.push_str(&format!(" [{} #:sz size]", parts.join(" ")));
            } else {
                text.push_str(&format!(" {it}"));
            }
        }
        text.push_str(")\n");
        out.push_str(&text);
    }
    out
}

pub fn checked_lines(l: &Loaded) -> Vec<String> {
    l.outputs.iter().filter(|o| matches!(o, Output::Checked { .. })).map(|o| o.to_string()).collect()
}
