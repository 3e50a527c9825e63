//! Description-logic concepts, ontologies, model checking, and the type
//! elimination machinery behind the datalog and template compilers.
//!
//! Universal quantification is normalized away before any closure is built:
//! `forall R.C` becomes `not exists R.(not C)`. Types are bitsets over the
//! normalized closure, whose order is the post-order of first occurrence.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rel::{Fact, RelStructure, Schema, UcqQuery};

/// A role: a named binary relation or the universal role.
///
/// The universal role is a logical symbol interpreted as dom x dom; it is
/// distinct from every schema role name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Name(String),
    Univ,
}

impl Role {
    pub fn name(n: &str) -> Self {
        Role::Name(String::from(n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Concept {
    Top,
    Bot,
    Name(String),
    Not(Box<Concept>),
    And(Box<Concept>, Box<Concept>),
    Or(Box<Concept>, Box<Concept>),
    Exists(Role, Box<Concept>),
    Forall(Role, Box<Concept>),
}

impl Concept {
    pub fn name(n: &str) -> Self {
        Concept::Name(String::from(n))
    }
    pub fn not(c: Concept) -> Self {
        Concept::Not(Box::new(c))
    }
    pub fn and(a: Concept, b: Concept) -> Self {
        Concept::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Concept, b: Concept) -> Self {
        Concept::Or(Box::new(a), Box::new(b))
    }
    pub fn exists(r: Role, c: Concept) -> Self {
        Concept::Exists(r, Box::new(c))
    }
    pub fn forall(r: Role, c: Concept) -> Self {
        Concept::Forall(r, Box::new(c))
    }

    /// Rewrites every `forall R.C` into `not exists R.(not C)`.
    pub fn normalize(&self) -> Concept {
        match self {
            Concept::Top | Concept::Bot | Concept::Name(_) => self.clone(),
            Concept::Not(c) => Concept::not(c.normalize()),
            Concept::And(a, b) => Concept::and(a.normalize(), b.normalize()),
            Concept::Or(a, b) => Concept::or(a.normalize(), b.normalize()),
            Concept::Exists(r, c) => Concept::exists(r.clone(), c.normalize()),
            Concept::Forall(r, c) => {
                Concept::not(Concept::exists(r.clone(), Concept::not(c.normalize())))
            }
        }
    }

    pub fn uses_univ(&self) -> bool {
        match self {
            Concept::Top | Concept::Bot | Concept::Name(_) => false,
            Concept::Not(c) => c.uses_univ(),
            Concept::And(a, b) | Concept::Or(a, b) => a.uses_univ() || b.uses_univ(),
            Concept::Exists(r, c) | Concept::Forall(r, c) => {
                matches!(r, Role::Univ) || c.uses_univ()
            }
        }
    }

    fn collect_names(&self, concepts: &mut BTreeSet<String>, roles: &mut BTreeSet<String>) {
        match self {
            Concept::Top | Concept::Bot => {}
            Concept::Name(n) => {
                concepts.insert(n.clone());
            }
            Concept::Not(c) => c.collect_names(concepts, roles),
            Concept::And(a, b) | Concept::Or(a, b) => {
                a.collect_names(concepts, roles);
                b.collect_names(concepts, roles);
            }
            Concept::Exists(r, c) | Concept::Forall(r, c) => {
                if let Role::Name(n) = r {
                    roles.insert(n.clone());
                }
                c.collect_names(concepts, roles);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Alc,
    Alcu,
}

/// A finite set of concept inclusions plus the dialect flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    pub dialect: Dialect,
    pub inclusions: Vec<(Concept, Concept)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DlError {
    UnivInAlc,
    ClosureTooLarge(usize),
}

impl fmt::Display for DlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DlError::UnivInAlc => write!(f, "universal role used but dialect is ALC"),
            DlError::ClosureTooLarge(n) => {
                write!(f, "closure has {n} concepts, the type bitset caps at 256")
            }
        }
    }
}

impl Ontology {
    pub fn new(dialect: Dialect, inclusions: Vec<(Concept, Concept)>) -> Result<Self, DlError> {
        if dialect == Dialect::Alc
            && inclusions.iter().any(|(l, r)| l.uses_univ() || r.uses_univ())
        {
            return Err(DlError::UnivInAlc);
        }
        Ok(Ontology { dialect, inclusions })
    }

    /// Concept and role names occurring in the inclusions.
    pub fn signature(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        let mut concepts = BTreeSet::new();
        let mut roles = BTreeSet::new();
        for (l, r) in &self.inclusions {
            l.collect_names(&mut concepts, &mut roles);
            r.collect_names(&mut concepts, &mut roles);
        }
        (concepts, roles)
    }
}

/// The query of an ontology-mediated query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryKind {
    /// Atomic query `A(x)`.
    Aq(String),
    /// Boolean atomic query `exists x. A(x)`.
    Baq(String),
    /// Concept query `C(x)`.
    ConQ(Concept),
    /// Union of conjunctive queries.
    Ucq(UcqQuery),
}

/// An ontology-mediated query: data schema, ontology, and query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmqQuery {
    pub data_schema: Schema,
    pub ontology: Ontology,
    pub query: QueryKind,
}

/// The normalized closure: a deduplicated, stably ordered list of concepts
/// closed under subexpressions. Order is post-order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub concepts: Vec<Concept>,
}

impl Closure {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn index_of(&self, c: &Concept) -> Option<usize> {
        self.concepts.iter().position(|d| d == c)
    }
}

fn post_order(c: &Concept, out: &mut Vec<Concept>) {
    match c {
        Concept::Top | Concept::Bot | Concept::Name(_) => {}
        Concept::Not(d) => post_order(d, out),
        Concept::And(a, b) | Concept::Or(a, b) => {
            post_order(a, out);
            post_order(b, out);
        }
        Concept::Exists(_, d) => post_order(d, out),
        Concept::Forall(..) => unreachable!("closure is built from normalized concepts"),
    }
    if !out.contains(c) {
        out.push(c.clone());
    }
}

/// Builds the normalized closure of an ontology plus extra concepts (callers
/// add the query concept here so membership tests are always defined).
pub fn normalize_closure(onto: &Ontology, extra: &[Concept]) -> Closure {
    let mut out = Vec::new();
    for (l, r) in &onto.inclusions {
        post_order(&l.normalize(), &mut out);
        post_order(&r.normalize(), &mut out);
    }
    for c in extra {
        post_order(&c.normalize(), &mut out);
    }
    Closure { concepts: out }
}

/// A type: the set of closure concepts true at one element, as a bitset over
/// the closure order. Capped at 256 concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct TypeBits(pub [u64; 4]);

impl TypeBits {
    pub const EMPTY: TypeBits = TypeBits([0; 4]);

    pub fn get(&self, idx: usize) -> bool {
        self.0[idx / 64] & (1u64 << (idx % 64)) != 0
    }

    pub fn with(mut self, idx: usize) -> TypeBits {
        self.0[idx / 64] |= 1u64 << (idx % 64);
        self
    }
}

pub fn type_has(t: TypeBits, idx: usize) -> bool {
    t.get(idx)
}

/// The normalized closure together with the surviving types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSet {
    pub closure: Closure,
    pub types: Vec<TypeBits>,
}

/// Enumerates all propositionally coherent types over the closure that
/// respect every (normalized) inclusion. Compound memberships are forced by
/// subexpression memberships; only names and existentials branch.
pub fn coherent_types(closure: &Closure, onto: &Ontology) -> Result<Vec<TypeBits>, DlError> {
    let n = closure.len();
    if n > 256 {
        return Err(DlError::ClosureTooLarge(n));
    }
    let inclusions: Vec<(usize, usize)> = onto
        .inclusions
        .iter()
        .map(|(l, r)| {
            let li = closure.index_of(&l.normalize()).expect("lhs in closure");
            let ri = closure.index_of(&r.normalize()).expect("rhs in closure");
            (li, ri)
        })
        .collect();
    // Inclusions become checkable once both sides are decided; bucket them
    // by the later of the two indices so the search prunes early.
    let mut checks_at: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new(); n];
    for &(l, r) in &inclusions {
        if n > 0 {
            checks_at[l.max(r)].push((l, r));
        }
    }

    let mut out = Vec::new();
    let mut stack: Vec<(usize, TypeBits)> = Vec::new();
    stack.push((0, TypeBits::EMPTY));
    while let Some((idx, bits)) = stack.pop() {
        if idx == n {
            out.push(bits);
            continue;
        }
        let push = |bits: TypeBits, stack: &mut Vec<(usize, TypeBits)>| {
            if checks_at[idx].iter().all(|&(l, r)| !bits.get(l) || bits.get(r)) {
                stack.push((idx + 1, bits));
            }
        };
        match &closure.concepts[idx] {
            Concept::Top => push(bits.with(idx), &mut stack),
            Concept::Bot => push(bits, &mut stack),
            Concept::Not(d) => {
                let di = closure.index_of(d).expect("subexpression in closure");
                push(if bits.get(di) { bits } else { bits.with(idx) }, &mut stack);
            }
            Concept::And(a, b) => {
                let ai = closure.index_of(a).expect("subexpression");
                let bi = closure.index_of(b).expect("subexpression");
                let forced = bits.get(ai) && bits.get(bi);
                push(if forced { bits.with(idx) } else { bits }, &mut stack);
            }
            Concept::Or(a, b) => {
                let ai = closure.index_of(a).expect("subexpression");
                let bi = closure.index_of(b).expect("subexpression");
                let forced = bits.get(ai) || bits.get(bi);
                push(if forced { bits.with(idx) } else { bits }, &mut stack);
            }
            Concept::Name(_) | Concept::Exists(..) => {
                push(bits.with(idx), &mut stack);
                push(bits, &mut stack);
            }
            Concept::Forall(..) => unreachable!("normalized closure"),
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// True iff every `exists R.C` of the closure with `C` in `t2` is already
/// recorded in `t1`. This is the admissibility condition for an R-edge from
/// an element of type `t1` to one of type `t2`.
pub fn r_coherent(t1: TypeBits, t2: TypeBits, role: &Role, closure: &Closure) -> bool {
    for (i, c) in closure.concepts.iter().enumerate() {
        if let Concept::Exists(r, d) = c {
            if r == role {
                let di = closure.index_of(d).expect("subexpression");
                if type_has(t2, di) && !type_has(t1, i) {
                    return false;
                }
            }
        }
    }
    true
}

/// Removes types whose named-role existentials lack a witness inside the
/// candidate set; runs to the greatest fixpoint.
fn eliminate_within(closure: &Closure, mut types: Vec<TypeBits>) -> Vec<TypeBits> {
    let exists: Vec<(usize, Role, usize)> = closure
        .concepts
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            Concept::Exists(r @ Role::Name(_), d) => {
                Some((i, r.clone(), closure.index_of(d).expect("subexpression")))
            }
            _ => None,
        })
        .collect();
    loop {
        let before = types.len();
        let survivors: Vec<TypeBits> = types
            .iter()
            .copied()
            .filter(|&t| {
                exists.iter().all(|(i, role, di)| {
                    !type_has(t, *i)
                        || types
                            .iter()
                            .any(|&w| type_has(w, *di) && r_coherent(t, w, role, closure))
                })
            })
            .collect();
        if survivors.len() == before {
            return survivors;
        }
        types = survivors;
    }
}

/// Witness elimination over an explicit candidate set: removes types whose
/// named-role existentials lack an R-coherent witness among the candidates,
/// to the greatest fixpoint. Callers pre-filter the candidates (for instance
/// by a universal-role profile) before eliminating.
pub fn eliminate_candidates(closure: &Closure, types: Vec<TypeBits>) -> Vec<TypeBits> {
    eliminate_within(closure, types)
}

/// Type elimination for ALC: the greatest set of coherent, inclusion
/// respecting types in which every named existential has an R-coherent
/// witness. An empty result means no type is realizable at all.
pub fn eliminate_types(onto: &Ontology) -> Result<TypeSet, DlError> {
    eliminate_types_with(onto, &[])
}

/// Same as [`eliminate_types`] but with extra concepts injected into the
/// closure (used to add the query concept).
pub fn eliminate_types_with(onto: &Ontology, extra: &[Concept]) -> Result<TypeSet, DlError> {
    let closure = normalize_closure(onto, extra);
    let base = coherent_types(&closure, onto)?;
    let types = eliminate_within(&closure, base);
    Ok(TypeSet { closure, types })
}

fn concept_holds(b: &RelStructure, elem: &str, c: &Concept) -> bool {
    match c {
        Concept::Top => true,
        Concept::Bot => false,
        Concept::Name(a) => b.contains(&Fact::new(a, &[elem])),
        Concept::Not(d) => !concept_holds(b, elem, d),
        Concept::And(x, y) => concept_holds(b, elem, x) && concept_holds(b, elem, y),
        Concept::Or(x, y) => concept_holds(b, elem, x) || concept_holds(b, elem, y),
        Concept::Exists(Role::Univ, d) => b.domain.iter().any(|e| concept_holds(b, e, d)),
        Concept::Exists(Role::Name(r), d) => b
            .facts
            .iter()
            .any(|f| f.rel == *r && f.args.len() == 2 && f.args[0] == elem && concept_holds(b, &f.args[1], d)),
        Concept::Forall(Role::Univ, d) => b.domain.iter().all(|e| concept_holds(b, e, d)),
        Concept::Forall(Role::Name(r), d) => b
            .facts
            .iter()
            .filter(|f| f.rel == *r && f.args.len() == 2 && f.args[0] == elem)
            .all(|f| concept_holds(b, &f.args[1], d)),
    }
}

/// True iff the structure satisfies every inclusion of the ontology, with the
/// universal role read as dom x dom. Missing relations are empty.
pub fn check_model(b: &RelStructure, onto: &Ontology) -> bool {
    onto.inclusions.iter().all(|(l, r)| {
        b.domain.iter().all(|e| !concept_holds(b, e, l) || concept_holds(b, e, r))
    })
}

/// The type realized by an element: the closure concepts true at it.
pub fn type_of_element(b: &RelStructure, elem: &str, closure: &Closure) -> TypeBits {
    let mut bits = TypeBits::EMPTY;
    for (i, c) in closure.concepts.iter().enumerate() {
        if concept_holds(b, elem, c) {
            bits = bits.with(i);
        }
    }
    bits
}

/// Outcome of [`countermodel_type_sets`]: the closure, the query-concept
/// index, and the maximal realizable type sets that contain a query-free type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountermodelSets {
    pub closure: Closure,
    pub query_idx: usize,
    pub sets: Vec<Vec<TypeBits>>,
}

/// Computes the maximal sets of types realizable in a countermodel to the
/// atomic query `A(x)`: sets T such that some model of the ontology realizes
/// exactly the types of T and some type of T omits A.
///
/// For ALC this is the single set of all realizable types (when an A-free one
/// exists). For ALCU, membership of each `exists univ.D` concept is uniform
/// across a model, so the candidates are enumerated per profile of those
/// concepts and validated for self-consistency.
pub fn countermodel_type_sets(onto: &Ontology, a: &str) -> Result<CountermodelSets, DlError> {
    realizable_sets(onto, a, false)
}

/// Like [`countermodel_type_sets`] but for the Boolean query `exists x.A(x)`:
/// the countermodel must contain no A element at all, so A-containing types
/// are discarded before elimination.
pub fn countermodel_type_sets_baq(onto: &Ontology, a: &str) -> Result<CountermodelSets, DlError> {
    realizable_sets(onto, a, true)
}

fn realizable_sets(
    onto: &Ontology,
    a: &str,
    forbid_query: bool,
) -> Result<CountermodelSets, DlError> {
    let query = Concept::name(a);
    let closure = normalize_closure(onto, &[query.clone()]);
    let query_idx = closure.index_of(&query).expect("query concept injected");
    let mut base = coherent_types(&closure, onto)?;
    if forbid_query {
        base.retain(|t| !type_has(*t, query_idx));
    }

    let univ: Vec<(usize, usize)> = closure
        .concepts
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            Concept::Exists(Role::Univ, d) => {
                Some((i, closure.index_of(d).expect("subexpression")))
            }
            _ => None,
        })
        .collect();

    let qualifies = |types: &[TypeBits]| {
        if forbid_query {
            !types.is_empty()
        } else {
            types.iter().any(|&t| !type_has(t, query_idx))
        }
    };
    let mut sets: Vec<Vec<TypeBits>> = Vec::new();
    if univ.is_empty() {
        let types = eliminate_within(&closure, base);
        if qualifies(&types) {
            sets.push(types);
        }
    } else {
        for profile in 0..(1u64 << univ.len()) {
            let candidates: Vec<TypeBits> = base
                .iter()
                .copied()
                .filter(|&t| {
                    univ.iter().enumerate().all(|(k, (i, di))| {
                        let held = profile & (1 << k) != 0;
                        // The global flag must match the type's bit, and a
                        // false flag forbids realizing the witness concept.
                        type_has(t, *i) == held && (held || !type_has(t, *di))
                    })
                })
                .collect();
            let survivors = eliminate_within(&closure, candidates);
            let valid = univ.iter().enumerate().all(|(k, (_, di))| {
                let held = profile & (1 << k) != 0;
                held == survivors.iter().any(|&t| type_has(t, *di))
            });
            if !valid || survivors.is_empty() {
                continue;
            }
            if qualifies(&survivors) {
                sets.push(survivors);
            }
        }
        // Keep only subset-maximal sets, deduplicated.
        let mut maximal: Vec<Vec<TypeBits>> = Vec::new();
        for s in &sets {
            let is_sub = |a: &Vec<TypeBits>, b: &Vec<TypeBits>| a.iter().all(|x| b.contains(x));
            if sets.iter().any(|t| t != s && is_sub(s, t) && !is_sub(t, s)) {
                continue;
            }
            if !maximal.contains(s) {
                maximal.push(s.clone());
            }
        }
        sets = maximal;
    }
    Ok(CountermodelSets { closure, query_idx, sets })
}

/// Picks an identifier not present in `taken`, starting from `base`.
pub fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return String::from(base);
    }
    let mut i = 1usize;
    loop {
        let cand = format!("{base}{i}");
        if !taken.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Reduces a concept query `C(x)` to an atomic query: a concept name passes
/// through unchanged, anything else gets a fresh name `A_q` and the axiom
/// `C sub A_q`.
pub fn conq_to_aq(q: &OmqQuery) -> OmqQuery {
    let concept = match &q.query {
        QueryKind::ConQ(c) => c.clone(),
        _ => return q.clone(),
    };
    if let Concept::Name(n) = &concept {
        let mut out = q.clone();
        out.query = QueryKind::Aq(n.clone());
        return out;
    }
    let (mut taken, roles) = q.ontology.signature();
    taken.extend(roles);
    for (n, _) in q.data_schema.relations() {
        taken.insert(n.clone());
    }
    let aq = fresh_name("A_q", &taken);
    let mut onto = q.ontology.clone();
    onto.inclusions.push((concept, Concept::name(&aq)));
    OmqQuery { data_schema: q.data_schema.clone(), ontology: onto, query: QueryKind::Aq(aq) }
}
