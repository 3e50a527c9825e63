//! Shared builders for the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use omq_core::rel::{Fact, Instance, Schema};
use rand::Rng;

pub fn schema(rels: &[(&str, usize)]) -> Schema {
    Schema::from_relations(rels).expect("distinct relation names")
}

pub fn inst(s: &Schema, facts: &[(&str, &[&str])]) -> Instance {
    Instance::new(s.clone(), facts.iter().map(|(r, args)| Fact::new(r, args)))
        .expect("facts fit the schema")
}

/// Every possible fact over the schema with arguments drawn from `consts`.
pub fn all_facts(s: &Schema, consts: &[&str]) -> Vec<Fact> {
    let mut out = Vec::new();
    for (rel, ar) in s.relations() {
        if *ar > 0 && consts.is_empty() {
            continue;
        }
        let mut idx = vec![0usize; *ar];
        loop {
            let args: Vec<&str> = idx.iter().map(|&i| consts[i]).collect();
            out.push(Fact::new(rel, &args));
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < consts.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    out
}

/// All instances whose facts are subsets of the possible facts over `consts`.
/// Panics if there are more than 20 possible facts.
pub fn all_instances(s: &Schema, consts: &[&str]) -> Vec<Instance> {
    let facts = all_facts(s, consts);
    assert!(facts.len() <= 20, "instance space too large for exhaustion");
    let mut out = Vec::new();
    for mask in 0u32..(1 << facts.len()) {
        let chosen = facts
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, f)| f.clone());
        out.push(Instance::new(s.clone(), chosen).expect("facts fit the schema"));
    }
    out
}

/// A random instance: each possible fact over `consts` kept with probability
/// `density`.
pub fn random_instance<R: Rng>(rng: &mut R, s: &Schema, consts: &[&str], density: f64) -> Instance {
    let chosen = all_facts(s, consts)
        .into_iter()
        .filter(|_| rng.gen_bool(density));
    Instance::new(s.clone(), chosen).expect("facts fit the schema")
}

pub fn tuple(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|p| p.to_string()).collect()
}

pub fn answer_set(tuples: &[&[&str]]) -> BTreeSet<Vec<String>> {
    tuples.iter().map(|t| tuple(t)).collect()
}
