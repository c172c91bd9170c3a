use polyqtt::{load, LoadOptions};

fn load_file(name: &str) -> polyqtt::Loaded {
    let path = format!("{}/../../corpus/{}", env!("CARGO_MANIFEST_DIR"), name);
    let src = std::fs::read_to_string(&path).unwrap();
    load(&src, LoadOptions::default()).unwrap_or_else(|d| panic!("{}", d.render(&src, &path)))
}

#[test]
fn consfree_corpus_checks() {
    let l = load_file("consfree.qtt");
    assert!(l.get("iter3").is_some());
}

#[test]
fn lfpl_corpus_checks() {
    let l = load_file("lfpl.qtt");
    assert!(l.get("flip2").is_some());
}

#[test]
fn sort_corpus_checks() {
    let l = load_file("insertion_sort.qtt");
    assert!(l.get("sort").is_some());
}

mod runs {
    use super::load_file;
    use polyqtt::compile::{agree_with_kernel, compile_named, extract_bound, run_and_verify, verify_sweep};
    use polyqtt::Observable;

    fn nb(n: u64, s: bool) -> Observable {
        Observable::pair(Observable::Nat(n), Observable::Bool(s))
    }

    #[test]
    fn iterator_degrees_grow_with_nesting() {
        let l = load_file("consfree.qtt");
        for (name, deg) in [("iter1", 1), ("iter2", 2), ("iter3", 3)] {
            let p = compile_named(&l, name).unwrap();
            assert_eq!(extract_bound(&p).degree, deg, "{}", name);
        }
    }

    #[test]
    fn iterators_compute_parity() {
        let l = load_file("consfree.qtt");
        for (name, k) in [("iter1", 1u32), ("iter2", 2), ("iter3", 3)] {
            let p = compile_named(&l, name).unwrap();
            for n in 0..8u64 {
                for s in [false, true] {
                    let r = run_and_verify(&p, &nb(n, s), None).unwrap();
                    assert_eq!(r.output, Observable::Bool(s ^ (n.pow(k) % 2 == 1)), "{} {}", name, n);
                    assert!(r.ok, "{} n={} steps={} bound={}", name, n, r.steps, r.bound);
                }
            }
        }
    }

    #[test]
    fn flips_rebuild_their_input() {
        let l = load_file("lfpl.qtt");
        let f = compile_named(&l, "flip").unwrap();
        let f2 = compile_named(&l, "flip2").unwrap();
        assert_eq!(extract_bound(&f).degree, 1);
        assert_eq!(extract_bound(&f2).degree, 2);
        for n in 0..10u64 {
            let r = run_and_verify(&f, &nb(n, true), None).unwrap();
            assert_eq!(r.output, nb(n, n % 2 == 0));
            let r2 = run_and_verify(&f2, &nb(n, false), None).unwrap();
            assert_eq!(r2.output, nb(n, (n * n.saturating_sub(1) / 2) % 2 == 1));
            assert!(r.ok && r2.ok);
        }
    }

    #[test]
    fn sweeps_stay_within_bound() {
        for (file, names) in [
            ("consfree.qtt", &["not", "id", "konst", "twice", "iter1", "iter2", "iter3"][..]),
            ("lfpl.qtt", &["not", "id", "flip", "flip2"][..]),
            ("insertion_sort.qtt", &["nilI", "consI", "unsucc", "leq", "insert", "sort"][..]),
        ] {
            let l = load_file(file);
            for name in names {
                let p = compile_named(&l, name).unwrap();
                let max_n = if *name == "iter3" { 12 } else { 20 };
                let rep = verify_sweep(&p, max_n, 42).unwrap_or_else(|e| panic!("{}: {}", name, e));
                assert!(rep.ok, "{}: {:?}", name, rep);
            }
        }
    }

    #[test]
    fn machine_agrees_with_kernel() {
        polyqtt::with_big_stack(agreement)
    }

    fn agreement() {
        for (file, names) in [
            ("consfree.qtt", &["iter1", "iter2", "twice"][..]),
            ("lfpl.qtt", &["flip", "flip2"][..]),
            ("insertion_sort.qtt", &["sort", "leq"][..]),
        ] {
            let l = load_file(file);
            for name in names {
                let p = compile_named(&l, name).unwrap();
                let nbe = polyqtt::kernel::nbe::Nbe::new(p.regime);
                for n in 0..=30u64 {
                    let input = p.sample(&nbe, n, 9).unwrap();
                    assert!(agree_with_kernel(&p, &input).unwrap(), "{} on {}", name, input);
                }
            }
        }
    }

    fn ilist(xs: &[u64]) -> Observable {
        let cells = Observable::tuple(xs.iter().map(|&x| Observable::Nat(x)).chain([Observable::Unit]).collect());
        Observable::pair(Observable::Nat(xs.len() as u64), cells)
    }

    #[test]
    fn insertion_sort_sorts() {
        use rand::{Rng, SeedableRng};
        let l = load_file("insertion_sort.qtt");
        let p = compile_named(&l, "sort").unwrap();
        // outer loop, insert's walk, leq's loop, and unsucc inside it
        assert_eq!(extract_bound(&p).degree, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for len in 0..12 {
            let xs: Vec<u64> = (0..len).map(|_| rng.random_range(0..10)).collect();
            let r = run_and_verify(&p, &ilist(&xs), None).unwrap();
            let mut want = xs.clone();
            want.sort();
            assert_eq!(r.output, ilist(&want), "{:?}", xs);
            assert!(r.ok);
        }
    }
}
