use cur_kernel::check::{as_binder, Elaborator};
use cur_kernel::data::{eliminator_type, method_type, motive_type, Generic, PAT_TO_CTXT};
use cur_kernel::elab::{assumptions, desugar, lift_literal, process_source};
use cur_kernel::env::{Env, GlobalKind};
use cur_kernel::print::show;
use cur_kernel::reader::{parse_one, SurfaceTerm};
use cur_kernel::sized::{get_sz, Size};
use cur_kernel::term::{alpha_eq, alpha_eq_erased};
use cur_kernel::{prelude, Context, ErrorKind, Name, Term, TermKind};

fn env() -> Env {
    prelude::load(Env::new()).unwrap()
}

fn s(text: &str) -> SurfaceTerm {
    parse_one("<test>", text).unwrap()
}

fn ty(env: &Env, text: &str) -> Term {
    Elaborator::new(env).check_type(&Context::new(), &s(text)).unwrap()
}

fn infer(env: &Env, text: &str) -> (Term, Term) {
    Elaborator::new(env).infer(&Context::new(), &s(text)).unwrap()
}

fn infer_err(env: &Env, text: &str) -> ErrorKind {
    Elaborator::new(env).infer(&Context::new(), &s(text)).unwrap_err().kind
}

fn run(env: &mut Env, src: &str) -> Result<Vec<String>, cur_kernel::Error> {
    Ok(process_source(env, "<test>", src)?.iter().map(ToString::to_string).collect())
}

fn unary(n: usize) -> Term {
    (0..n).fold(Term::constant("Z"), |t, _| Term::app(Term::constant("S"), t))
}

#[test]
fn infer_lambda_and_universe() {
    let env = env();
    let (core, t) = infer(&env, "(λ [x : Nat] x)");
    assert!(alpha_eq(&t, &ty(&env, "(Π [x : Nat] Nat)")));
    assert!(matches!(core.kind(), TermKind::Lam(..)));
    let (core, t) = infer(&env, "Type");
    assert!(core.is_universe() && t.is_universe());
}

#[test]
fn dependent_application_substitutes_output() {
    let env = env();
    let (_, t) = infer(&env, "((λ [A : Type] (λ [a : A] a)) Nat)");
    assert!(alpha_eq(&t, &ty(&env, "(Π [a : Nat] Nat)")));
}

#[test]
fn check_against_pi_and_literals() {
    let env = env();
    let el = Elaborator::new(&env);
    let ctx = Context::new();
    let lam = el.check(&ctx, &s("(λ x x)"), &ty(&env, "(Π [x : Nat] Nat)")).unwrap();
    let x = Name::fresh("x");
    assert!(alpha_eq_erased(&lam, &Term::lam(&x, None, Term::var(&x))));
    let five = el.check(&ctx, &s("5"), &Term::constant("Nat")).unwrap();
    assert!(alpha_eq(&five, &unary(5)));
    let err = el.check(&ctx, &s("Z"), &Term::constant("Bool")).unwrap_err();
    assert!(err.to_string().contains("ty mismatch"), "{err}");
    assert!(err.to_string().contains("Nat") && err.to_string().contains("Bool"));
}

fn bindings(texts: &[&str]) -> Vec<(SurfaceTerm, SurfaceTerm)> {
    texts
        .iter()
        .map(|t| {
            let b = s(t);
            let (x, ty) = as_binder(&b).unwrap();
            (x.clone(), ty.clone())
        })
        .collect()
}

#[test]
fn telescope_scoping() {
    let env = env();
    let el = Elaborator::new(&env);
    let (ctx, tele) =
        el.check_telescope(&Context::new(), &bindings(&["[n : Nat]", "[v : (Vec Nat n)]"]), &Term::universe()).unwrap();
    assert_eq!(ctx.len(), 2);
    assert!(tele.0[1].1.occurs(&tele.0[0].0));
    let (ctx, tele) = el.check_telescope(&Context::new(), &[], &Term::universe()).unwrap();
    assert!(ctx.is_empty() && tele.is_empty());
    let err = el.check_telescope(&Context::new(), &bindings(&["[x : (Vec Nat x)]"]), &Term::universe()).unwrap_err();
    assert!(matches!(err.kind, ErrorKind::Unbound(ref n) if n == "x"), "{err}");
}

#[test]
fn definitional_equality_examples() {
    let env = env();
    let el = Elaborator::new(&env);
    let (beta, _) = infer(&env, "((λ [x : Nat] x) Z)");
    assert!(el.def_eq(&beta, &Term::constant("Z")).unwrap());
    assert!(el.def_eq(&ty(&env, "(Vec Nat (plus 1 1))"), &ty(&env, "(Vec Nat 2)")).unwrap());
    assert!(!el.def_eq(&Term::constant("Nat"), &Term::constant("Bool")).unwrap());
}

#[test]
fn plus_normalizes_by_iota() {
    let env = env();
    let (core, _) = infer(&env, "(plus 2 3)");
    assert!(alpha_eq(&env.normalize(&core).unwrap(), &unary(5)));
}

#[test]
fn vec_constructor_type() {
    let env = env();
    let cons = &env.global("cons").unwrap().ty;
    let expected = ty(&env, "(Π [A : Type] (Π [k : Nat] (Π [x : A] (Π [xs : (Vec A k)] (Vec A (S k))))))");
    assert!(alpha_eq(cons, &expected), "{}", show(cons));
}

#[test]
fn nat_eliminator_signature() {
    let env = env();
    let dt = env.datatype("Nat").unwrap();
    let expected = ty(
        &env,
        "(Π [n : Nat] (Π [P : (→ Nat Type)] (Π [mz : (P Z)] (Π [ms : (Π [k : Nat] (→ (P k) (P (S k))))] (P n)))))",
    );
    assert!(alpha_eq(&eliminator_type(&dt), &expected), "{}", show(&eliminator_type(&dt)));
    assert!(alpha_eq(&motive_type(&dt, &[]), &ty(&env, "(→ Nat Type)")));
    let p = Name::fresh("P");
    let ms = method_type(&dt, 1, &Term::var(&p), &[]);
    let k = Name::fresh("k");
    let pk = Term::app(Term::var(&p), Term::var(&k));
    let psk = Term::app(Term::var(&p), Term::app(Term::constant("S"), Term::var(&k)));
    assert!(alpha_eq(&ms, &Term::pi(&k, Term::constant("Nat"), Term::arrow(pk, psk))));
}

#[test]
fn vec_nil_method_and_false_eliminator() {
    let env = env();
    let vec = env.datatype("Vec").unwrap();
    let (a, p) = (Name::fresh("A"), Name::fresh("P"));
    let m = method_type(&vec, 0, &Term::var(&p), &[Term::var(&a)]);
    let nil = Term::app(Term::constant("nil"), Term::var(&a));
    assert!(alpha_eq(&m, &Term::apps(Term::var(&p), [Term::constant("Z"), nil])));
    let f = env.datatype("False").unwrap();
    assert!(alpha_eq(&eliminator_type(&f), &ty(&env, "(Π [v : False] (Π [P : (→ False Type)] (P v)))")));
}

#[test]
fn eliminator_types_typecheck() {
    let env = env();
    for dt in env.datatypes() {
        let text = show(&eliminator_type(&dt));
        let t = ty(&env, &text);
        assert!(matches!(t.kind(), TermKind::Pi(..)), "{text}");
    }
}

#[test]
fn constructor_with_foreign_parameter_is_rejected() {
    let mut env = env();
    let err = run(
        &mut env,
        "(define-datatype V2 [A : Type] : (→ [i : Nat] Type) [n2 : (V2 A Z)] [c2 [B : Type] [k : Nat] : (V2 B k)])",
    )
    .unwrap_err();
    assert!(matches!(err.kind, ErrorKind::Datatype(_)), "{err}");
}

#[test]
fn iota_rules_take_their_contractum_shape() {
    let env = env();
    let (p, mz, ms, k) = (Name::fresh("P"), Name::fresh("mz"), Name::fresh("ms"), Name::fresh("k"));
    let elim = |t: Term| Term::elim(&"Nat".into(), t, Term::var(&p), vec![Term::var(&mz), Term::var(&ms)]);
    assert!(alpha_eq(&env.whnf(&elim(Term::constant("Z"))).unwrap(), &Term::var(&mz)));
    let sk = Term::app(Term::constant("S"), Term::var(&k));
    let expected = Term::apps(Term::var(&ms), [Term::var(&k), elim(Term::var(&k))]);
    assert!(alpha_eq(&env.whnf(&elim(sk)).unwrap(), &expected));

    let (a, n, x, xs, mn, mc) =
        (Name::fresh("A"), Name::fresh("n"), Name::fresh("x"), Name::fresh("xs"), Name::fresh("mn"), Name::fresh("mc"));
    let velim = |t: Term| Term::elim(&"Vec".into(), t, Term::var(&p), vec![Term::var(&mn), Term::var(&mc)]);
    let cons = Term::apps(Term::constant("cons"), [Term::var(&a), Term::var(&n), Term::var(&x), Term::var(&xs)]);
    let expected = Term::apps(Term::var(&mc), [Term::var(&n), Term::var(&x), Term::var(&xs), velim(Term::var(&xs))]);
    assert!(alpha_eq(&env.whnf(&velim(cons)).unwrap(), &expected));
}

#[test]
fn generic_lookup() {
    let mut env = env();
    assert!(matches!(env.methods.lookup("Vec", "get-datatype-def"), Ok(Generic::DatatypeDef(d)) if &*d.name == "Vec"));
    assert!(matches!(env.methods.lookup("Vec", "no-such-method").unwrap_err().kind, ErrorKind::Lookup(_)));
    run(&mut env, "(lift-datatype Nat)").unwrap();
    assert!(matches!(env.methods.lookup("S_sz", PAT_TO_CTXT), Ok(Generic::PatToCtxt(_))));
}

#[test]
fn implicit_arguments() {
    let mut env = env();
    run(&mut env, "(define-implicit nil′ = nil #:omit 1) (define-implicit cons′ = cons #:omit 2)").unwrap();
    let (core, t) = infer(&env, "(cons′ Z (cons Nat 1 Z (cons Nat 0 Z (nil Nat))))");
    assert!(alpha_eq(&t, &ty(&env, "(Vec Nat 3)")));
    assert!(alpha_eq(&core, &infer(&env, "(cons Nat 2 Z (cons Nat 1 Z (cons Nat 0 Z (nil Nat))))").0));
    let el = Elaborator::new(&env);
    let nil = el.check(&Context::new(), &s("(nil′)"), &ty(&env, "(Vec Bool 0)")).unwrap();
    assert!(alpha_eq(&nil, &Term::app(Term::constant("nil"), Term::constant("Bool"))));
    assert!(matches!(infer_err(&env, "(nil′)"), ErrorKind::UnsolvedImplicit(_)));
}

#[test]
fn desugar_examples() {
    assert_eq!(desugar(&s("(λ [x : A] [y : B] e)")).to_string(), "(λ [x : A] (λ [y : B] e))");
    assert_eq!(desugar(&s("(f a b c)")).to_string(), "(((f a) b) c)");
    let arrow = desugar(&s("(→ Nat Nat)"));
    let items = arrow.as_list().unwrap();
    assert_eq!(items[0].as_symbol(), Some("Π"));
    let (x, dom) = as_binder(&items[1]).unwrap();
    assert_eq!(dom.as_symbol(), Some("Nat"));
    assert_eq!(items[2].as_symbol(), Some("Nat"));
    assert!(x.as_symbol().is_some());
}

#[test]
fn literal_lifting() {
    assert_eq!(lift_literal(&s("0")).unwrap().to_string(), "Z");
    assert_eq!(lift_literal(&s("2")).unwrap().to_string(), "(S (S Z))");
    assert!(matches!(lift_literal(&s("-1")).unwrap_err().kind, ErrorKind::UnsupportedLiteral(_)));
}

#[test]
fn match_elaborates_to_eliminator() {
    let env = env();
    let (core, _) = infer(&env, "(λ [n : Nat] (match n #:return Nat [Z Z] [(S m) m]))");
    let (by_hand, _) = infer(&env, "(λ [n : Nat] (elim-Nat n (λ [_ : Nat] Nat) Z (λ [m : Nat] [ih : Nat] m)))");
    assert!(alpha_eq_erased(&core, &by_hand), "{}", show(&core));
    let (three, _) = infer(&env, "(match 3 #:return Nat [Z Z] [(S m) m])");
    assert!(alpha_eq(&env.normalize(&three).unwrap(), &unary(2)));
    let err = infer_err(&env, "(λ [n : Nat] (match n #:return Nat [Z Z]))");
    assert!(matches!(&err, ErrorKind::Pattern(m) if m.contains('S')), "{err}");
}

#[test]
fn vec_cons_case_binds_arguments_and_one_hypothesis() {
    let env = env();
    let (core, _) = infer(
        &env,
        "(λ [v : (Vec Nat 2)] (match v #:in (Vec Nat 2) #:return Nat [nil Z] [(cons k x xs) #:ih (r) (S r)]))",
    );
    let TermKind::Lam(_, _, body) = core.kind() else { panic!() };
    let TermKind::Elim { methods, .. } = body.kind() else { panic!("{}", show(body)) };
    let mut binders = 0;
    let mut t = &methods[1];
    while let TermKind::Lam(_, _, b) = t.kind() {
        binders += 1;
        t = b;
    }
    assert_eq!(binders, 4);
}

#[test]
fn termination_checking() {
    let mut env = env();
    let err = run(&mut env, "(define/rec/match loop [n : Nat] : Nat [_ => (loop n)])").unwrap_err();
    assert!(matches!(err.kind, ErrorKind::Nonterminate(_)));
    run(
        &mut env,
        "(define/rec/match minus [n : Nat] [m : Nat] : Nat [Z _ => n] [_ Z => n] [(S n-1) (S m-1) => (minus n-1 m-1)])",
    )
    .unwrap();
    let (v, _) = infer(&env, "(minus 3 1)");
    assert!(alpha_eq(&env.normalize(&v).unwrap(), &unary(2)));
    let err = run(&mut env, "(define/rec/match div [n : Nat] [m : Nat] : Nat [Z _ => Z] [(S n-1) m => (S (div (minus n-1 m) m))])")
        .unwrap_err();
    assert!(err.to_string().contains("nonterminate"), "{err}");
    assert!(env.global("div").is_none());
}

#[test]
fn generated_rules_are_constructor_guarded() {
    let mut env = env();
    run(&mut env, "(define/rec/match double [n : Nat] : Nat [Z => Z] [(S k) => (S (S (double k)))])").unwrap();
    let GlobalKind::RecFun { rec_index } = env.global("double").unwrap().kind else { panic!() };
    for rule in env.rules.rules_for(&cur_kernel::reduce::RuleHead::Const("double".into())) {
        let mut p = &rule.matcher[rec_index];
        while let cur_kernel::reduce::Pattern::As(_, inner) = p {
            p = inner;
        }
        assert!(matches!(p, cur_kernel::reduce::Pattern::Ctor(..)), "{}", rule.name);
    }
}

const BADDEPPROG: &str = "
(define-axiom false=true (= Bool false true))
(define-implicit sym′ = sym #:omit 3)
(define not-fixed : (∀ (x : Bool) (= Bool (not x) x))
  (λ [x : Bool] (elim-Bool x (λ [y : Bool] (= Bool (not y) y)) false=true (sym′ false=true))))
";

#[test]
fn axiom_tracking() {
    let mut env = env();
    run(&mut env, BADDEPPROG).unwrap();
    assert_eq!(run(&mut env, "(print-assumptions not-fixed)").unwrap(), ["Axioms used: false=true : (= Bool false true)"]);
    assert_eq!(run(&mut env, "(print-assumptions (λ [A : Type] [a : A] a))").unwrap(), ["Axioms used: none"]);
    let (twice, _) = infer(&env, "(λ [b : Bool] (the (= Bool false true) false=true))");
    let (pair, _) = infer(&env, "((λ [x : (= Bool false true)] [y : (= Bool false true)] x) false=true false=true)");
    assert_eq!(assumptions(&env, &pair).len(), 1);
    assert_eq!(assumptions(&env, &twice).len(), 1);
}

const SIZED: &str = "
(lift-datatype Nat)
(define/rec/match-sz minus_sz [n : Nat #:sz i] [m : Nat] : Nat #:sz i
  [Z_sz _ => n]
  [_ Z_sz => n]
  [(S_sz n-1) (S_sz m-1) => (minus_sz n-1 m-1)])
";

#[test]
fn sized_constructor_and_patterns() {
    let mut env = env();
    run(&mut env, SIZED).unwrap();
    let el = Elaborator::new(&env);
    let (n, i) = (Name::fresh("n"), Name::fresh("i"));
    let sized = |sz: Size| Context::new().extend(&n, Term::constant("Nat").with_size(Some(sz)));
    let (_, t) = el.infer(&sized(Size::lt(Size::Var(i.clone()))), &s("(S_sz n)")).unwrap();
    assert_eq!(get_sz(&t), Size::Var(i.clone()));
    let (_, t) = el.infer(&sized(Size::Var(i.clone())), &s("(S_sz n)")).unwrap();
    assert!(matches!(get_sz(&t), Size::Var(j) if j != i));
    let (_, plain) = infer(&env, "(S Z)");
    assert_eq!(get_sz(&plain), Size::Inf);
    let pat = env.methods.pat_to_ctxt("S_sz");
    let dt = env.datatype("Nat").unwrap();
    let bound = pat(&dt, 1, &[Name::fresh("n-1")], &Term::constant("Nat").with_size(Some(Size::Var(i.clone()))));
    assert_eq!(get_sz(&bound[0].1), Size::lt(Size::Var(i)));
}

#[test]
fn sized_termination() {
    let mut env = env();
    run(&mut env, SIZED).unwrap();
    run(
        &mut env,
        "(define/rec/match-sz div_sz [n : Nat #:sz i] [m : Nat] : Nat #:sz i
           [Z_sz _ => n]
           [(S_sz n-1) m => (S_sz (div_sz (minus_sz n-1 m) m))])",
    )
    .unwrap();
    let (v, _) = infer(&env, "(div_sz 6 2)");
    assert!(alpha_eq(&env.normalize(&v).unwrap(), &unary(2)));

    let mut env2 = self::env();
    run(
        &mut env2,
        "(lift-datatype Nat)
         (define/rec/match-sz minus_fresh [n : Nat #:sz i] [m : Nat] : Nat
           [Z_sz _ => n]
           [_ Z_sz => n]
           [(S_sz n-1) (S_sz m-1) => (minus_fresh n-1 m-1)])",
    )
    .unwrap();
    let err = run(
        &mut env2,
        "(define/rec/match-sz div_sz [n : Nat #:sz i] [m : Nat] : Nat #:sz i
           [Z_sz _ => n]
           [(S_sz n-1) m => (S_sz (div_sz (minus_fresh n-1 m) m))])",
    )
    .unwrap_err();
    assert!(err.to_string().contains("non-terminating"), "{err}");
}
