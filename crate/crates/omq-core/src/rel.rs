//! Schemas, instances, relational structures, and direct UCQ evaluation.
//!
//! Standard name assumption throughout: constants are interpreted as
//! themselves and are pairwise distinct. Answer sets are `BTreeSet`s of
//! tuples, so iteration order is lexicographic.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A finite list of relation names with arities. Names are unique.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    relations: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaError {
    DuplicateRelation(String),
    ArityConflict { relation: String, seen: usize, new: usize },
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaError::DuplicateRelation(name) => write!(f, "duplicate relation `{name}`"),
            SchemaError::ArityConflict { relation, seen, new } => {
                write!(f, "relation `{relation}` used with arity {new} but declared with {seen}")
            }
        }
    }
}

impl Schema {
    pub fn new() -> Self {
        Schema { relations: Vec::new() }
    }

    pub fn from_relations(rels: &[(&str, usize)]) -> Result<Self, SchemaError> {
        let mut s = Schema::new();
        for (name, arity) in rels {
            s.add(name, *arity)?;
        }
        Ok(s)
    }

    pub fn add(&mut self, name: &str, arity: usize) -> Result<(), SchemaError> {
        if self.relations.iter().any(|(n, _)| n == name) {
            return Err(SchemaError::DuplicateRelation(String::from(name)));
        }
        self.relations.push((String::from(name), arity));
        Ok(())
    }

    /// Adds the relation if absent; errors only on an arity conflict.
    pub fn ensure(&mut self, name: &str, arity: usize) -> Result<(), SchemaError> {
        match self.arity(name) {
            None => self.add(name, arity),
            Some(a) if a == arity => Ok(()),
            Some(a) => Err(SchemaError::ArityConflict {
                relation: String::from(name),
                seen: a,
                new: arity,
            }),
        }
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.iter().find(|(n, _)| n == name).map(|(_, a)| *a)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arity(name).is_some()
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn unary_relations(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().filter(|(_, a)| *a == 1).map(|(n, _)| n.as_str())
    }

    pub fn binary_relations(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().filter(|(_, a)| *a == 2).map(|(n, _)| n.as_str())
    }
}

/// A ground fact `rel(args...)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fact {
    pub rel: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new(rel: &str, args: &[&str]) -> Self {
        Fact { rel: String::from(rel), args: args.iter().map(|a| String::from(*a)).collect() }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// A finite set of facts over a schema. The active domain is exactly the
/// constants occurring in facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub schema: Schema,
    pub facts: BTreeSet<Fact>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceError {
    UnknownRelation(String),
    ArityMismatch { relation: String, expected: usize, got: usize },
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::UnknownRelation(r) => write!(f, "fact over unknown relation `{r}`"),
            InstanceError::ArityMismatch { relation, expected, got } => {
                write!(f, "relation `{relation}` has arity {expected}, fact has {got} arguments")
            }
        }
    }
}

impl Instance {
    pub fn empty(schema: Schema) -> Self {
        Instance { schema, facts: BTreeSet::new() }
    }

    pub fn new(schema: Schema, facts: impl IntoIterator<Item = Fact>) -> Result<Self, InstanceError> {
        let mut inst = Instance::empty(schema);
        for fact in facts {
            inst.insert(fact)?;
        }
        Ok(inst)
    }

    pub fn insert(&mut self, fact: Fact) -> Result<(), InstanceError> {
        match self.schema.arity(&fact.rel) {
            None => return Err(InstanceError::UnknownRelation(fact.rel.clone())),
            Some(a) if a != fact.args.len() => {
                return Err(InstanceError::ArityMismatch {
                    relation: fact.rel.clone(),
                    expected: a,
                    got: fact.args.len(),
                })
            }
            Some(_) => {}
        }
        self.facts.insert(fact);
        Ok(())
    }

    pub fn adom(&self) -> BTreeSet<String> {
        let mut dom = BTreeSet::new();
        for fact in &self.facts {
            for a in &fact.args {
                dom.insert(a.clone());
            }
        }
        dom
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }
}

/// A pair (domain, facts): like an instance but the domain may strictly
/// contain the active domain of the facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelStructure {
    pub schema: Schema,
    pub domain: BTreeSet<String>,
    pub facts: BTreeSet<Fact>,
}

impl RelStructure {
    /// Invariant checked: adom(facts) is contained in the domain.
    pub fn new(
        schema: Schema,
        domain: impl IntoIterator<Item = String>,
        facts: impl IntoIterator<Item = Fact>,
    ) -> Result<Self, InstanceError> {
        let domain: BTreeSet<String> = domain.into_iter().collect();
        let mut checked = Instance::empty(schema);
        for fact in facts {
            for a in &fact.args {
                if !domain.contains(a) {
                    return Err(InstanceError::UnknownRelation(a.clone()));
                }
            }
            checked.insert(fact)?;
        }
        Ok(RelStructure { schema: checked.schema, domain, facts: checked.facts })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        RelStructure { schema: inst.schema.clone(), domain: inst.adom(), facts: inst.facts.clone() }
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    /// Induced substructure on `keep`; isolated elements of `keep` survive.
    pub fn induced(&self, keep: &BTreeSet<String>) -> RelStructure {
        let facts = self
            .facts
            .iter()
            .filter(|f| f.args.iter().all(|a| keep.contains(a)))
            .cloned()
            .collect();
        RelStructure { schema: self.schema.clone(), domain: keep.clone(), facts }
    }
}

/// A query term: variable or constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(String::from(name))
    }
    pub fn cons(name: &str) -> Self {
        Term::Const(String::from(name))
    }
}

/// A UCQ atom: relational or equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    Rel { rel: String, args: Vec<Term> },
    Eq(Term, Term),
}

impl Atom {
    pub fn rel(rel: &str, args: &[Term]) -> Self {
        Atom::Rel { rel: String::from(rel), args: args.to_vec() }
    }
}

/// One conjunctive query of a UCQ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cq {
    pub answer_vars: Vec<String>,
    pub atoms: Vec<Atom>,
}

/// A union of conjunctive queries with equality atoms allowed.
///
/// All disjuncts share the answer arity; every answer variable of a disjunct
/// occurs in one of its atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UcqQuery {
    pub disjuncts: Vec<Cq>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryError {
    MixedArity,
    UnboundAnswerVar(String),
    ArityMismatch { relation: String, expected: usize, got: usize },
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryError::MixedArity => write!(f, "disjuncts disagree on answer arity"),
            QueryError::UnboundAnswerVar(v) => write!(f, "answer variable `{v}` occurs in no atom"),
            QueryError::ArityMismatch { relation, expected, got } => {
                write!(f, "query atom over `{relation}` has {got} arguments, schema says {expected}")
            }
        }
    }
}

fn cq_mentions(cq: &Cq, var: &str) -> bool {
    cq.atoms.iter().any(|atom| match atom {
        Atom::Rel { args, .. } => args.iter().any(|t| matches!(t, Term::Var(v) if v == var)),
        Atom::Eq(a, b) => {
            matches!(a, Term::Var(v) if v == var) || matches!(b, Term::Var(v) if v == var)
        }
    })
}

impl UcqQuery {
    pub fn new(disjuncts: Vec<Cq>) -> Result<Self, QueryError> {
        let mut arity = None;
        for cq in &disjuncts {
            match arity {
                None => arity = Some(cq.answer_vars.len()),
                Some(a) if a != cq.answer_vars.len() => return Err(QueryError::MixedArity),
                _ => {}
            }
            for v in &cq.answer_vars {
                if !cq_mentions(cq, v) {
                    return Err(QueryError::UnboundAnswerVar(v.clone()));
                }
            }
        }
        Ok(UcqQuery { disjuncts })
    }

    pub fn arity(&self) -> usize {
        self.disjuncts.first().map_or(0, |cq| cq.answer_vars.len())
    }
}

fn check_query_arities(q: &UcqQuery, schema: &Schema) -> Result<(), QueryError> {
    for cq in &q.disjuncts {
        for atom in &cq.atoms {
            if let Atom::Rel { rel, args } = atom {
                if let Some(a) = schema.arity(rel) {
                    if a != args.len() {
                        return Err(QueryError::ArityMismatch {
                            relation: rel.clone(),
                            expected: a,
                            got: args.len(),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn match_cq(
    cq: &Cq,
    inst: &Instance,
    adom: &[String],
    binding: &mut BTreeMap<String, String>,
    atom_idx: usize,
    out: &mut BTreeSet<Vec<String>>,
) {
    if atom_idx == cq.atoms.len() {
        // All atoms matched; unbound answer variables cannot occur (checked
        // at construction), so the tuple is total.
        let tuple: Vec<String> =
            cq.answer_vars.iter().map(|v| binding.get(v).expect("bound").clone()).collect();
        out.insert(tuple);
        return;
    }
    let resolve = |t: &Term, b: &BTreeMap<String, String>| -> Option<String> {
        match t {
            Term::Const(c) => Some(c.clone()),
            Term::Var(v) => b.get(v).cloned(),
        }
    };
    match &cq.atoms[atom_idx] {
        Atom::Eq(l, r) => match (resolve(l, binding), resolve(r, binding)) {
            (Some(a), Some(b)) => {
                if a == b {
                    match_cq(cq, inst, adom, binding, atom_idx + 1, out);
                }
            }
            (Some(a), None) => {
                if let Term::Var(v) = r {
                    binding.insert(v.clone(), a);
                    match_cq(cq, inst, adom, binding, atom_idx + 1, out);
                    binding.remove(v);
                }
            }
            (None, Some(b)) => {
                if let Term::Var(v) = l {
                    binding.insert(v.clone(), b);
                    match_cq(cq, inst, adom, binding, atom_idx + 1, out);
                    binding.remove(v);
                }
            }
            (None, None) => {
                // Both sides unbound variables: range the left one over adom.
                if let (Term::Var(vl), Term::Var(vr)) = (l, r) {
                    for d in adom {
                        binding.insert(vl.clone(), d.clone());
                        binding.insert(vr.clone(), d.clone());
                        match_cq(cq, inst, adom, binding, atom_idx + 1, out);
                        binding.remove(vr);
                        binding.remove(vl);
                    }
                }
            }
        },
        Atom::Rel { rel, args } => {
            for fact in inst.facts.iter().filter(|f| &f.rel == rel) {
                if fact.args.len() != args.len() {
                    continue;
                }
                let mut added: Vec<String> = Vec::new();
                let mut ok = true;
                for (t, c) in args.iter().zip(fact.args.iter()) {
                    match t {
                        Term::Const(k) => {
                            if k != c {
                                ok = false;
                                break;
                            }
                        }
                        Term::Var(v) => match binding.get(v) {
                            Some(bound) => {
                                if bound != c {
                                    ok = false;
                                    break;
                                }
                            }
                            None => {
                                binding.insert(v.clone(), c.clone());
                                added.push(v.clone());
                            }
                        },
                    }
                }
                if ok {
                    match_cq(cq, inst, adom, binding, atom_idx + 1, out);
                }
                for v in added {
                    binding.remove(&v);
                }
            }
        }
    }
}

/// Evaluates a UCQ over an instance.
///
/// Returns exactly the tuples over adom(D) matched by some disjunct; missing
/// relations are treated as empty; a Boolean query yields `{()}` or the empty
/// set. Equality atoms require literal constant equality.
pub fn eval_ucq(q: &UcqQuery, inst: &Instance) -> Result<BTreeSet<Vec<String>>, QueryError> {
    check_query_arities(q, &inst.schema)?;
    let adom: Vec<String> = inst.adom().into_iter().collect();
    let mut out = BTreeSet::new();
    for cq in &q.disjuncts {
        let mut binding = BTreeMap::new();
        match_cq(cq, inst, &adom, &mut binding, 0, &mut out);
    }
    Ok(out)
}

/// Checks that `map` is a homomorphism from `src` to `tgt`: totality on the
/// source domain and fact preservation.
pub fn is_homomorphism(
    map: &BTreeMap<String, String>,
    src: &RelStructure,
    tgt: &RelStructure,
) -> bool {
    if !src.domain.iter().all(|d| map.contains_key(d)) {
        return false;
    }
    if !map.values().all(|v| tgt.domain.contains(v)) {
        return false;
    }
    src.facts.iter().all(|f| {
        let image = Fact {
            rel: f.rel.clone(),
            args: f.args.iter().map(|a| map.get(a).expect("total").clone()).collect(),
        };
        tgt.contains(&image)
    })
}

/// Applies a map to every constant of a tuple.
pub fn map_tuple(map: &BTreeMap<String, String>, tuple: &[String]) -> Vec<String> {
    tuple.iter().map(|c| map.get(c).cloned().unwrap_or_else(|| c.clone())).collect()
}
