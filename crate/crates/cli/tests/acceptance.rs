//! Acceptance criteria, one line each. Runs without the test harness so the
//! lines show up in a plain `cargo test`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyqtt::compile::{compile_named, extract_bound, kernel_output, run_and_verify, verify_sweep, CompiledProgram, Observable};
use polyqtt::frontend::{expected_label, load, LoadOptions, Loaded};
use polyqtt::kernel::nbe::Nbe;
use polyqtt::kernel::{check_decl, Fragment};
use polyqtt::machine::{eval, nat_value, Env, EvalOutcome, MachineExpr as M, MachineValue};
use polyqtt::potentials::{ExtNat, MonoidKind, Polynomial, Potential};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load_at(rel: &str) -> Loaded {
    let path = root().join(rel);
    let src = std::fs::read_to_string(&path).unwrap();
    load(&src, LoadOptions::default()).unwrap_or_else(|d| panic!("{}", d.render(&src, rel)))
}

fn program(l: &Loaded, name: &str) -> CompiledProgram {
    compile_named(l, name).unwrap_or_else(|e| panic!("{}: {}", name, e))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn steps(e: &M, env: &Env) -> u64 {
    match eval(e, env, 10_000) {
        EvalOutcome::Done { steps, .. } => steps,
        o => panic!("{:?}", o),
    }
}

fn c1_machine_costs() -> Outcome {
    let env = Env::from_values([MachineValue::True, MachineValue::pair(MachineValue::False, MachineValue::Unit)]);
    let atoms = [M::lam(M::Unit), M::Unit, M::MkPair(0, 1), M::True, M::False, M::Var(1)];
    for a in &atoms {
        ensure(steps(a, &env) == 1, || format!("{} took {} steps", a, steps(a, &env)))?;
    }
    let a = M::seq(M::True, M::MkPair(0, 1));
    let b = M::seq(M::Unit, M::Var(0));
    let s = M::seq(a.clone(), b.clone());
    ensure(steps(&s, &env) == steps(&a, &env) + 1 + steps(&b, &env), || "Seq".into())?;
    let lp = M::let_pair(0, a.clone());
    ensure(steps(&lp, &env) == 1 + steps(&a, &env.push(MachineValue::False).push(MachineValue::Unit)), || "LetPair".into())?;
    let iff = M::if_(1, a.clone(), M::Unit);
    ensure(steps(&iff, &env) == 1 + steps(&a, &env), || "If".into())?;
    // closure whose body costs 3 (Seq + True + MkPair) applied once
    let app = M::seq(M::lam(a.clone()), M::App(0, 2));
    ensure(steps(&app, &env) == 1 + 1 + (1 + 3), || format!("App took {}", steps(&app, &env)))?;
    Ok("every rule costs 1 plus its premises".into())
}

fn rand_pot(rng: &mut ChaCha8Rng, kind: MonoidKind, max_deg: usize, max_coeff: u64) -> Potential {
    let size = rng.random_range(0..40);
    if kind == MonoidKind::Nat {
        return Potential::size(size);
    }
    let deg = rng.random_range(0..=max_deg);
    Potential::new(size, Polynomial::new((0..=deg).map(|_| rng.random_range(0..=max_coeff)).collect()))
}

const KINDS: [MonoidKind; 3] = [MonoidKind::Nat, MonoidKind::MaxPoly, MonoidKind::PlusPoly];

fn c2_monoid_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cases = 1000;
    for kind in KINDS {
        for _ in 0..cases {
            let (a, b, c) = (rand_pot(&mut rng, kind, 4, 16), rand_pot(&mut rng, kind, 4, 16), rand_pot(&mut rng, kind, 4, 16));
            let k = rng.random_range(0..1000);
            ensure(kind.diff(&a, &a) == ExtNat::Fin(0), || format!("{:?} identity at {}", kind, a))?;
            ensure(kind.diff(&a, &b) + kind.diff(&b, &c) <= kind.diff(&a, &c), || format!("{:?} triangle {} {} {}", kind, a, b, c))?;
            ensure(kind.diff(&a, &b) <= kind.diff(&kind.plus(&a, &c), &kind.plus(&b, &c)), || format!("{:?} compat {} {} {}", kind, a, b, c))?;
            ensure(kind.diff(&a, &Potential::empty()) >= ExtNat::Fin(0), || format!("{:?} diff to empty {}", kind, a))?;
            ensure(ExtNat::Fin(k as u128) <= kind.diff(&kind.acct(k), &Potential::empty()), || format!("{:?} acct {}", kind, k))?;
        }
    }
    Ok(format!("5 laws x {} cases x 3 monoids", cases))
}

fn c3_iteration_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = 0;
    for kind in [MonoidKind::MaxPoly, MonoidKind::PlusPoly] {
        for _ in 0..1000 {
            let a = rand_pot(&mut rng, kind, 4, 16);
            let a0 = Potential::new(0, a.poly.clone());
            let n = rng.random_range(0..=32);
            ensure(a0.raise().in_submonoid(), || format!("raise leaves the sub-monoid at {}", a0))?;
            let lhs = kind.plus(&a.raise(), &Potential::size(n));
            let rhs = kind.plus(&a.scale(n), &Potential::size(n));
            ensure(kind.diff(&lhs, &rhs) >= ExtNat::Fin(0), || format!("raise does not cover scale({}, {})", n, a))?;
            let split = kind.plus(&a0, &a0.scale(n));
            ensure(kind.diff(&a0.scale(1 + n), &split) >= ExtNat::Fin(0), || format!("scale does not decompose at {} {}", n, a0))?;
            cases += 1;
        }
    }
    Ok(format!("3 properties x {} cases", cases))
}

fn sweep(l: &Loaded, name: &str, max_n: u64) -> Result<(), String> {
    let p = program(l, name);
    let rep = verify_sweep(&p, max_n, 0).map_err(|e| format!("{}: {}", name, e))?;
    let bad: Vec<_> = rep.rows.iter().filter(|r| !r.ok).map(|r| (r.n, r.steps, r.bound)).collect();
    ensure(rep.ok, || format!("{} exceeds its bound at {:?}", name, bad))
}

fn c4_consfree_sweep() -> Outcome {
    let l = load_at("corpus/consfree.qtt");
    let names = ["iter1", "iter2", "iter3", "count3", "twice", "both"];
    for name in names {
        sweep(&l, name, 50)?;
    }
    let p = program(&l, "iter2");
    for n in 2..=20u64 {
        let r = run_and_verify(&p, &Observable::pair(Observable::Nat(n), Observable::Bool(true)), None).map_err(|e| e.to_string())?;
        ensure(r.steps >= n * n, || format!("iter2 at {} took only {} steps", n, r.steps))?;
    }
    Ok(format!("{} programs within bound for n <= 50; iter2 steps >= n^2 on [2, 20]", names.len()))
}

fn ilist(xs: &[u64]) -> Observable {
    let cells = Observable::tuple(xs.iter().map(|&x| Observable::Nat(x)).chain([Observable::Unit]).collect());
    Observable::pair(Observable::Nat(xs.len() as u64), cells)
}

fn c5_lfpl_sweep() -> Outcome {
    let l = load_at("corpus/lfpl.qtt");
    for name in ["flip", "flip2"] {
        sweep(&l, name, 50)?;
    }
    let s = load_at("corpus/insertion_sort.qtt");
    let p = program(&s, "sort");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0f64;
    for len in 0..=20usize {
        for _ in 0..3 {
            let xs: Vec<u64> = (0..len).map(|_| rng.random_range(0..=20)).collect();
            let r = run_and_verify(&p, &ilist(&xs), None).map_err(|e| e.to_string())?;
            let mut want = xs.clone();
            want.sort_unstable();
            ensure(r.output == ilist(&want), || format!("sort {:?} gave {}", xs, r.output))?;
            ensure(r.ok, || format!("sort {:?}: {} steps over bound {}", xs, r.steps, r.bound))?;
            worst = worst.max(r.steps as f64 / r.bound as f64);
        }
    }
    Ok(format!("flip, flip2 within bound for n <= 50; sort correct on 63 lists, steps/bound <= {:.4}", worst))
}

fn c6_rejections() -> Outcome {
    let dir = root().join("fixtures");
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let mut n = 0;
    for f in files {
        let src = std::fs::read_to_string(&f).unwrap();
        let Some(want) = expected_label(&src) else { continue };
        if want == "bound-violation" {
            continue;
        }
        let name = f.file_name().unwrap().to_string_lossy().to_string();
        match load(&src, LoadOptions::default()) {
            Ok(_) => return Err(format!("{} was accepted", name)),
            Err(d) => ensure(d.label == want, || format!("{}: got [{}], expected [{}]", name, d.label, want))?,
        }
        n += 1;
    }
    ensure(n >= 10, || format!("only {} rejection fixtures", n))?;
    Ok(format!("{} fixtures rejected with their expected labels", n))
}

const CORPUS: [&str; 3] = ["corpus/consfree.qtt", "corpus/lfpl.qtt", "corpus/insertion_sort.qtt"];

fn c7_zeroing() -> Outcome {
    let mut n = 0;
    for file in CORPUS {
        let l = load_at(file);
        for d in l.decls.iter().filter(|d| d.sigma == Fragment::One) {
            check_decl(l.regime, Fragment::Zero, &d.ty, &d.term).map_err(|e| format!("{} in {}: {}", d.name, file, e))?;
            n += 1;
        }
    }
    Ok(format!("{} σ=1 declarations re-check at σ=0", n))
}

fn c8_agreement() -> Outcome {
    let mut runs = 0;
    let mut progs = 0;
    for file in CORPUS {
        let l = load_at(file);
        for d in l.decls.iter().filter(|d| d.sigma == Fragment::One) {
            let p = program(&l, &d.name);
            let nbe = Nbe::new(p.regime);
            let top = if p.input_arity == 0 { 0 } else { 30 };
            for n in 0..=top {
                let input = p.sample(&nbe, n, 8).map_err(|e| format!("{}: {}", d.name, e))?;
                let m = run_and_verify(&p, &input, None).map_err(|e| format!("{}: {}", d.name, e))?.output;
                let k = kernel_output(&p, &input).map_err(|e| format!("{}: {}", d.name, e))?;
                ensure(m == k, || format!("{} on {}: machine {} vs kernel {}", d.name, input, m, k))?;
                runs += 1;
            }
            progs += 1;
        }
    }
    Ok(format!("{} programs, {} inputs, no mismatches", progs, runs))
}

fn c9_dup_cost() -> Outcome {
    let l = load_at("corpus/consfree.qtt");
    let p = program(&l, "twice");
    for n in 0..20 {
        let r = run_and_verify(&p, &Observable::Nat(n), None).map_err(|e| e.to_string())?;
        ensure(r.steps == 1, || format!("dup took {} steps at {}", r.steps, n))?;
        ensure(r.output == Observable::pair(Observable::Nat(n), Observable::Nat(n)), || "dup output".into())?;
    }
    let direct = steps(&p.code, &Env::from_values([nat_value(5)]));
    ensure(direct == 1, || format!("{} steps", direct))?;
    Ok("dup compiles to one pair and runs in 1 step".into())
}

fn c10_degrees() -> Outcome {
    let l = load_at("corpus/consfree.qtt");
    let mut seen = vec![];
    for (name, want) in [("iter1", 1), ("iter2", 2), ("iter3", 3)] {
        let b = extract_bound(&program(&l, name));
        ensure(b.degree == want, || format!("{} has degree {} ({})", name, b.degree, b.poly))?;
        seen.push(format!("{}: {}", name, b.poly));
    }
    Ok(seen.join("; "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("machine rule costs", Duration::from_secs(1), c1_machine_costs),
        ("resource monoid laws", Duration::from_secs(10), c2_monoid_laws),
        ("iteration monoid laws", Duration::from_secs(10), c3_iteration_laws),
        ("cons-free soundness sweep", Duration::from_secs(60), c4_consfree_sweep),
        ("lfpl soundness sweep and sort", Duration::from_secs(120), c5_lfpl_sweep),
        ("rejection suite", Duration::from_secs(5), c6_rejections),
        ("zeroing admissibility", Duration::from_secs(60), c7_zeroing),
        ("compiler/kernel agreement", Duration::from_secs(120), c8_agreement),
        ("dup costs one step", Duration::from_secs(5), c9_dup_cost),
        ("degree growth", Duration::from_secs(5), c10_degrees),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let res = polyqtt::with_big_stack(f);
        let took = t.elapsed();
        let res = match res {
            Ok(m) if took > limit => Err(format!("{} (took {:.2?}, limit {:?})", m, took, limit)),
            other => other,
        };
        match res {
            Ok(m) => println!("criterion {:>2} PASS  {} [{:.2?}] {}", i + 1, name, took, m),
            Err(m) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {} [{:.2?}] {}", i + 1, name, took, m)
            }
        }
    }
    if failed > 0 {
        println!("{} criteria failed", failed);
        std::process::exit(1);
    }
}
