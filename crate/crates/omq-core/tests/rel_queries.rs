//! Direct UCQ evaluation checked against an independent assignment
//! enumerator, plus the monotonicity and homomorphism-preservation laws.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{all_instances, answer_set, inst, random_instance, schema};
use omq_core::rel::{eval_ucq, Atom, Cq, Fact, Instance, Term, UcqQuery};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cq(answer_vars: &[&str], atoms: Vec<Atom>) -> Cq {
    Cq { answer_vars: answer_vars.iter().map(|v| v.to_string()).collect(), atoms }
}

fn ucq(disjuncts: Vec<Cq>) -> UcqQuery {
    UcqQuery::new(disjuncts).expect("well-formed query")
}

fn v(n: &str) -> Term {
    Term::var(n)
}

/// Reference evaluator: all assignments of every variable to the active
/// domain, one disjunct at a time.
fn naive_eval(q: &UcqQuery, d: &Instance) -> BTreeSet<Vec<String>> {
    let adom: Vec<String> = d.adom().into_iter().collect();
    let mut out = BTreeSet::new();
    for cq in &q.disjuncts {
        let mut vars: Vec<String> = Vec::new();
        let mut see = |t: &Term| {
            if let Term::Var(x) = t {
                if !vars.contains(x) {
                    vars.push(x.clone());
                }
            }
        };
        for a in &cq.atoms {
            match a {
                Atom::Rel { args, .. } => args.iter().for_each(&mut see),
                Atom::Eq(l, r) => {
                    see(l);
                    see(r);
                }
            }
        }
        for av in &cq.answer_vars {
            if !vars.contains(av) {
                vars.push(av.clone());
            }
        }
        let mut idx = vec![0usize; vars.len()];
        'assign: loop {
            if !vars.is_empty() && adom.is_empty() {
                break;
            }
            let asg: BTreeMap<&str, &str> = vars
                .iter()
                .zip(idx.iter())
                .map(|(x, &i)| (x.as_str(), adom[i].as_str()))
                .collect();
            let val = |t: &Term| -> String {
                match t {
                    Term::Var(x) => asg[x.as_str()].to_string(),
                    Term::Const(c) => c.clone(),
                }
            };
            let holds = cq.atoms.iter().all(|a| match a {
                Atom::Rel { rel, args } => {
                    let ground: Vec<String> = args.iter().map(&val).collect();
                    let ground_refs: Vec<&str> = ground.iter().map(String::as_str).collect();
                    d.contains(&Fact::new(rel, &ground_refs))
                }
                Atom::Eq(l, r) => val(l) == val(r),
            });
            if holds {
                out.insert(cq.answer_vars.iter().map(|x| val(&Term::var(x))).collect());
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break 'assign;
                }
                idx[k] += 1;
                if idx[k] < adom.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    out
}

#[test]
fn disjunction_of_two_unary_atoms() {
    let s = schema(&[("LymeDisease", 1), ("Listeriosis", 1), ("parent", 2)]);
    let d = inst(
        &s,
        &[
            ("Listeriosis", &["may7diag2"]),
            ("parent", &["may7diag2", "other"]),
        ],
    );
    let q = ucq(vec![
        cq(&["x"], vec![Atom::rel("LymeDisease", &[v("x")])]),
        cq(&["x"], vec![Atom::rel("Listeriosis", &[v("x")])]),
    ]);
    assert_eq!(eval_ucq(&q, &d).unwrap(), answer_set(&[&["may7diag2"]]));
}

#[test]
fn unary_atom_on_empty_instance() {
    let s = schema(&[("A", 1)]);
    let q = ucq(vec![cq(&["x"], vec![Atom::rel("A", &[v("x")])])]);
    assert!(eval_ucq(&q, &Instance::empty(s)).unwrap().is_empty());
}

#[test]
fn two_cycle_query_matches_both_endpoints() {
    let s = schema(&[("R", 2)]);
    let d = inst(&s, &[("R", &["a", "b"]), ("R", &["b", "a"])]);
    let q = ucq(vec![cq(
        &["x"],
        vec![Atom::rel("R", &[v("x"), v("y")]), Atom::rel("R", &[v("y"), v("x")])],
    )]);
    assert_eq!(eval_ucq(&q, &d).unwrap(), answer_set(&[&["a"], &["b"]]));
}

#[test]
fn equality_atoms_compare_constants_literally() {
    let s = schema(&[("A", 1)]);
    let d = inst(&s, &[("A", &["a"]), ("A", &["b"])]);
    let q = ucq(vec![cq(
        &["x"],
        vec![Atom::rel("A", &[v("x")]), Atom::Eq(v("x"), Term::cons("a"))],
    )]);
    assert_eq!(eval_ucq(&q, &d).unwrap(), answer_set(&[&["a"]]));
}

fn sample_queries() -> Vec<UcqQuery> {
    vec![
        ucq(vec![cq(&["x"], vec![Atom::rel("A", &[v("x")])])]),
        ucq(vec![
            cq(&["x"], vec![Atom::rel("A", &[v("x")])]),
            cq(&["x"], vec![Atom::rel("R", &[v("x"), v("y")])]),
        ]),
        ucq(vec![cq(
            &["x"],
            vec![Atom::rel("R", &[v("x"), v("y")]), Atom::rel("A", &[v("y")])],
        )]),
        ucq(vec![cq(
            &["x", "y"],
            vec![Atom::rel("R", &[v("x"), v("y")]), Atom::rel("R", &[v("y"), v("x")])],
        )]),
        ucq(vec![cq(&[], vec![Atom::rel("R", &[v("x"), v("x")])])]),
        ucq(vec![cq(
            &["x"],
            vec![Atom::rel("R", &[v("x"), v("y")]), Atom::Eq(v("x"), v("y"))],
        )]),
    ]
}

#[test]
fn agrees_with_assignment_enumeration_exhaustively() {
    let s = schema(&[("A", 1), ("R", 2)]);
    for d in all_instances(&s, &["a", "b", "c"]) {
        for q in sample_queries() {
            assert_eq!(eval_ucq(&q, &d).unwrap(), naive_eval(&q, &d), "query {q:?} on {d:?}");
        }
    }
}

#[test]
fn monotone_under_fact_addition_for_equality_free_queries() {
    let s = schema(&[("A", 1), ("R", 2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let equality_free: Vec<UcqQuery> = sample_queries()
        .into_iter()
        .filter(|q| {
            q.disjuncts
                .iter()
                .all(|c| c.atoms.iter().all(|a| matches!(a, Atom::Rel { .. })))
        })
        .collect();
    for _ in 0..100 {
        let small = random_instance(&mut rng, &s, &["a", "b", "c"], 0.3);
        let mut big = random_instance(&mut rng, &s, &["a", "b", "c", "d"], 0.3);
        for f in &small.facts {
            big.insert(f.clone()).unwrap();
        }
        for q in &equality_free {
            let lo = eval_ucq(q, &small).unwrap();
            let hi = eval_ucq(q, &big).unwrap();
            assert!(lo.is_subset(&hi), "query {q:?}: {lo:?} not within {hi:?}");
        }
    }
}

#[test]
fn preserved_by_homomorphisms_for_equality_free_queries() {
    let s = schema(&[("A", 1), ("R", 2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let targets = ["p", "q", "r"];
    let equality_free: Vec<UcqQuery> = sample_queries()
        .into_iter()
        .filter(|q| {
            q.disjuncts
                .iter()
                .all(|c| c.atoms.iter().all(|a| matches!(a, Atom::Rel { .. })))
        })
        .collect();
    for _ in 0..100 {
        let d1 = random_instance(&mut rng, &s, &["a", "b", "c", "d"], 0.35);
        let h: BTreeMap<String, String> = d1
            .adom()
            .into_iter()
            .map(|e| (e, targets.choose(&mut rng).unwrap().to_string()))
            .collect();
        let mut image = Vec::new();
        for f in &d1.facts {
            let args: Vec<&str> = f.args.iter().map(|a| h[a].as_str()).collect();
            image.push(Fact::new(&f.rel, &args));
        }
        let mut d2 = Instance::new(s.clone(), image).unwrap();
        // extra facts only help
        if rng.gen_bool(0.5) {
            for f in random_instance(&mut rng, &s, &targets, 0.2).facts {
                d2.insert(f).unwrap();
            }
        }
        for q in &equality_free {
            let a1 = eval_ucq(q, &d1).unwrap();
            let a2 = eval_ucq(q, &d2).unwrap();
            for t in a1 {
                let mapped: Vec<String> = t.iter().map(|e| h[e].clone()).collect();
                assert!(a2.contains(&mapped), "query {q:?}: image of {t:?} missing");
            }
        }
    }
}
