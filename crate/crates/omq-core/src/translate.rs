//! Cross-formalism compilers: ontology-mediated atomic queries to and from
//! monadic disjunctive datalog, datalog to UCQ-mediated queries over a
//! complemented signature, datalog to and from the MSNP dialects, and the
//! GMSNP / MMSNP2 rewritings.
//!
//! All outputs are deterministic: fresh names are derived from stable indices
//! and the input's own ordering, so compiling twice yields identical syntax.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::ddlog::{adom_rules, classify, DAtom, Program, ProgramError, Rule, ADOM, GOAL};
use crate::dl::{
    coherent_types, countermodel_type_sets_baq, eliminate_candidates, fresh_name,
    normalize_closure, r_coherent, type_has, Closure, Concept, Dialect, DlError, OmqQuery,
    Ontology, QueryKind, Role, TypeBits,
};
use crate::msnp::{
    normalize_msnp, unify_equalities, Implication, MAtom, MsnpDialect, MsnpError, MsnpFormula,
    SoKind,
};
use crate::rel::{eval_ucq, Atom, Cq, Fact, Instance, QueryError, Schema, Term, UcqQuery};

/// A configuration of type predicates and data atoms whose joint
/// non-realizability produces a falsum rule in the compiled program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagram {
    /// Two type predicates at the same element.
    TwoTypes(TypeBits, TypeBits),
    /// A type predicate plus a unary data atom at the same element.
    TypeAndName(TypeBits, String),
    /// Two type predicates across a role edge.
    TypesAcrossEdge(TypeBits, String, TypeBits),
}

impl Diagram {
    /// Whether the configuration can occur in a model assembled from types.
    pub fn realizable(&self, closure: &Closure) -> bool {
        match self {
            Diagram::TwoTypes(t1, t2) => t1 == t2,
            // A unary data fact forces the concept into the element's type;
            // names absent from the closure are unconstrained.
            Diagram::TypeAndName(t, name) => closure
                .index_of(&Concept::name(name))
                .map_or(true, |i| type_has(*t, i)),
            Diagram::TypesAcrossEdge(t1, role, t2) => {
                r_coherent(*t1, *t2, &Role::name(role), closure)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranslateError {
    UnsupportedQueryKind,
    VariantMismatch(&'static str),
    DialectMismatch(&'static str),
    NonMonadicIdb(String),
    NotFrontierGuarded,
    ConstantInRule,
    ConstantInMatrix,
    UnsupportedArity { relation: String, arity: usize },
    ProfileSpaceTooLarge(usize),
    NotComplementOntology(String),
    CompletionBoundExceeded(u64),
    UnknownRelation(String),
    NoInputGuard(String),
    ImplicationBoundExceeded(usize),
    NotSentence,
    Dl(DlError),
    Program(ProgramError),
    Msnp(MsnpError),
    Query(QueryError),
}

impl fmt::Display for TranslateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslateError::UnsupportedQueryKind => {
                write!(f, "query must be atomic (unary or Boolean)")
            }
            TranslateError::VariantMismatch(m) => {
                write!(f, "program does not match the claimed variant: {m}")
            }
            TranslateError::DialectMismatch(d) => {
                write!(f, "formula dialect must be {d}")
            }
            TranslateError::NonMonadicIdb(p) => {
                write!(f, "IDB predicate `{p}` is not unary")
            }
            TranslateError::NotFrontierGuarded => {
                write!(f, "a head atom has no covering body atom")
            }
            TranslateError::ConstantInRule => {
                write!(f, "rules with constants cannot be rewritten into concepts")
            }
            TranslateError::ConstantInMatrix => {
                write!(f, "matrices with constants are not supported by this rewriting")
            }
            TranslateError::UnsupportedArity { relation, arity } => {
                write!(f, "relation `{relation}` has arity {arity}; concepts express arity 1 and 2 only")
            }
            TranslateError::ProfileSpaceTooLarge(n) => {
                write!(f, "{n} universal-role concepts; the profile enumeration caps at 20")
            }
            TranslateError::NotComplementOntology(m) => {
                write!(f, "ontology is not a set of complement axioms: {m}")
            }
            TranslateError::CompletionBoundExceeded(b) => {
                write!(f, "completion space exceeds the bound of {b}")
            }
            TranslateError::UnknownRelation(r) => {
                write!(f, "fact atom over `{r}` which is not in the schema")
            }
            TranslateError::NoInputGuard(d) => {
                write!(f, "head atom `{d}` admits no input-relation guard")
            }
            TranslateError::ImplicationBoundExceeded(n) => {
                write!(f, "rewriting exceeds the implication bound of {n}")
            }
            TranslateError::NotSentence => {
                write!(f, "rewriting is defined for sentences; formula has free variables")
            }
            TranslateError::Dl(e) => write!(f, "{e}"),
            TranslateError::Program(e) => write!(f, "{e}"),
            TranslateError::Msnp(e) => write!(f, "{e}"),
            TranslateError::Query(e) => write!(f, "{e}"),
        }
    }
}

impl From<DlError> for TranslateError {
    fn from(e: DlError) -> Self {
        TranslateError::Dl(e)
    }
}
impl From<ProgramError> for TranslateError {
    fn from(e: ProgramError) -> Self {
        TranslateError::Program(e)
    }
}
impl From<MsnpError> for TranslateError {
    fn from(e: MsnpError) -> Self {
        TranslateError::Msnp(e)
    }
}
impl From<QueryError> for TranslateError {
    fn from(e: QueryError) -> Self {
        TranslateError::Query(e)
    }
}

/// Compiles an OMQ with an atomic query into a monadic simple disjunctive
/// datalog program over the same data schema.
///
/// The program guesses one realizable type per active-domain element and
/// derives falsum from every non-realizable [`Diagram`]; goal rules fire on
/// the types containing the query concept (for a Boolean query, on the types
/// that cannot occur in a query-free model). With a universal role, realizable
/// types are computed per profile of the `exists univ` closure concepts, and
/// type pairs from distinct profiles exclude each other globally.
pub fn aq_omq_to_mddlog(q: &OmqQuery) -> Result<Program, TranslateError> {
    let (a, boolean) = match &q.query {
        QueryKind::Aq(a) => (a.clone(), false),
        QueryKind::Baq(a) => (a.clone(), true),
        _ => return Err(TranslateError::UnsupportedQueryKind),
    };
    let query = Concept::name(&a);
    let closure = normalize_closure(&q.ontology, &[query.clone()]);
    let query_idx = closure.index_of(&query).expect("query concept injected");
    let base = coherent_types(&closure, &q.ontology)?;
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
    let types: Vec<TypeBits> = if univ.is_empty() {
        eliminate_candidates(&closure, base)
    } else {
        if univ.len() > 20 {
            return Err(TranslateError::ProfileSpaceTooLarge(univ.len()));
        }
        let mut all: BTreeSet<TypeBits> = BTreeSet::new();
        for profile in 0..(1u64 << univ.len()) {
            let candidates: Vec<TypeBits> = base
                .iter()
                .copied()
                .filter(|&t| {
                    univ.iter().enumerate().all(|(k, (i, di))| {
                        let held = profile & (1 << k) != 0;
                        type_has(t, *i) == held && (held || !type_has(t, *di))
                    })
                })
                .collect();
            let survivors = eliminate_candidates(&closure, candidates);
            let valid = univ.iter().enumerate().all(|(k, (_, di))| {
                (profile & (1 << k) != 0) == survivors.iter().any(|&t| type_has(t, *di))
            });
            if valid {
                all.extend(survivors);
            }
        }
        all.into_iter().collect()
    };

    let mut taken: BTreeSet<String> =
        q.data_schema.relations().iter().map(|(n, _)| n.clone()).collect();
    taken.insert(String::from(GOAL));
    taken.insert(String::from(ADOM));
    let names: Vec<String> = (0..types.len())
        .map(|i| {
            let n = fresh_name(&format!("P_t{i}"), &taken);
            taken.insert(n.clone());
            n
        })
        .collect();

    let x = Term::var("X");
    let y = Term::var("Y");
    let mut rules = adom_rules(&q.data_schema);
    // one type per element (empty head when nothing is realizable)
    rules.push(Rule::new(
        names.iter().map(|n| DAtom::new(n, &[x.clone()])).collect(),
        vec![DAtom::new(ADOM, &[x.clone()])],
    ));
    for i in 0..types.len() {
        for j in (i + 1)..types.len() {
            if !Diagram::TwoTypes(types[i], types[j]).realizable(&closure) {
                rules.push(Rule::new(
                    vec![],
                    vec![
                        DAtom::new(ADOM, &[x.clone()]),
                        DAtom::new(&names[i], &[x.clone()]),
                        DAtom::new(&names[j], &[x.clone()]),
                    ],
                ));
            }
        }
    }
    let unary: Vec<String> = q.data_schema.unary_relations().map(String::from).collect();
    for b in &unary {
        for (ti, t) in types.iter().enumerate() {
            if !Diagram::TypeAndName(*t, b.clone()).realizable(&closure) {
                rules.push(Rule::new(
                    vec![],
                    vec![DAtom::new(b, &[x.clone()]), DAtom::new(&names[ti], &[x.clone()])],
                ));
            }
        }
    }
    let binary: Vec<String> = q.data_schema.binary_relations().map(String::from).collect();
    for s in &binary {
        for (i, t1) in types.iter().enumerate() {
            for (j, t2) in types.iter().enumerate() {
                if !Diagram::TypesAcrossEdge(*t1, s.clone(), *t2).realizable(&closure) {
                    rules.push(Rule::new(
                        vec![],
                        vec![
                            DAtom::new(s, &[x.clone(), y.clone()]),
                            DAtom::new(&names[i], &[x.clone()]),
                            DAtom::new(&names[j], &[y.clone()]),
                        ],
                    ));
                }
            }
        }
    }
    if !univ.is_empty() {
        // types from distinct profiles can never share a model
        let x1 = Term::var("X1");
        let x2 = Term::var("X2");
        for i in 0..types.len() {
            for j in (i + 1)..types.len() {
                let differ = univ.iter().any(|(u, _)| types[i].get(*u) != types[j].get(*u));
                if differ {
                    rules.push(Rule::new(
                        vec![],
                        vec![
                            DAtom::new(ADOM, &[x1.clone()]),
                            DAtom::new(ADOM, &[x2.clone()]),
                            DAtom::new(&names[i], &[x1.clone()]),
                            DAtom::new(&names[j], &[x2.clone()]),
                        ],
                    ));
                }
            }
        }
    }
    // An AQ goal fires on the types containing the query concept. A Boolean
    // goal must also fire on types whose every extension realizes the query
    // concept somewhere, so it fires on the types outside every query-free
    // countermodel (the closures coincide: same inputs, same construction).
    let goal_fires: Vec<bool> = if boolean {
        let afree: BTreeSet<TypeBits> = countermodel_type_sets_baq(&q.ontology, &a)?
            .sets
            .into_iter()
            .flatten()
            .collect();
        types.iter().map(|t| !afree.contains(t)).collect()
    } else {
        types.iter().map(|t| type_has(*t, query_idx)).collect()
    };
    for (ti, fires) in goal_fires.iter().enumerate() {
        if *fires {
            let head = if boolean {
                DAtom::new(GOAL, &[])
            } else {
                DAtom::new(GOAL, &[x.clone()])
            };
            rules.push(Rule::new(
                vec![head],
                vec![DAtom::new(ADOM, &[x.clone()]), DAtom::new(&names[ti], &[x.clone()])],
            ));
        }
    }
    let mut prog = Program::new(rules, q.data_schema.clone())?;
    // the arity is fixed by the query even when no goal rule fires
    prog.goal_arity = if boolean { 0 } else { 1 };
    Ok(prog)
}

/// The four program shapes [`mddlog_to_aq_omq`] rewrites back into OMQs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MddlogVariant {
    UnaryConnectedSimple,
    UnarySimple,
    BooleanConnectedSimple,
    BooleanSimple,
}

fn conj(parts: Vec<Concept>) -> Concept {
    let mut parts: Vec<Concept> = parts.into_iter().filter(|c| *c != Concept::Top).collect();
    match parts.len() {
        0 => Concept::Top,
        1 => parts.pop().expect("one element"),
        _ => {
            let mut it = parts.into_iter();
            let first = it.next().expect("non-empty");
            it.fold(first, Concept::and)
        }
    }
}

/// Rewrites a monadic simple program rule-by-rule into concept inclusions
/// with `goal` read as a concept name.
///
/// Each rule's single data atom supplies the existential structure; one head
/// atom rooted at a forward-reachable variable becomes the right-hand side
/// and the remaining head atoms turn into negated conjuncts (falling back to
/// a falsum right-hand side when no head atom can serve as the root). Body
/// components disconnected from the root are wrapped in an existential over
/// the universal role; `adom` atoms are read as truth.
pub fn mddlog_to_aq_omq(
    prog: &Program,
    variant: MddlogVariant,
) -> Result<OmqQuery, TranslateError> {
    let flags = classify(prog);
    let unary_goal = matches!(
        variant,
        MddlogVariant::UnaryConnectedSimple | MddlogVariant::UnarySimple
    );
    let connected = matches!(
        variant,
        MddlogVariant::UnaryConnectedSimple | MddlogVariant::BooleanConnectedSimple
    );
    if !flags.monadic {
        return Err(TranslateError::VariantMismatch("an IDB predicate is not unary"));
    }
    if !flags.simple {
        return Err(TranslateError::VariantMismatch(
            "a rule has two data atoms or a repeated variable in one",
        ));
    }
    if connected && !flags.connected {
        return Err(TranslateError::VariantMismatch("a rule body is disconnected"));
    }
    if unary_goal && prog.goal_arity != 1 {
        return Err(TranslateError::VariantMismatch("goal is not unary"));
    }
    if !unary_goal && prog.goal_arity != 0 {
        return Err(TranslateError::VariantMismatch("goal is not Boolean"));
    }

    let var_of = |t: &Term| -> Result<String, TranslateError> {
        match t {
            Term::Var(v) => Ok(v.clone()),
            Term::Const(_) => Err(TranslateError::ConstantInRule),
        }
    };

    let mut inclusions: Vec<(Concept, Concept)> = Vec::new();
    for rule in &prog.rules {
        // `adom` among the head disjuncts makes the inclusion trivially true
        if rule.head.iter().any(|h| h.rel == ADOM) {
            continue;
        }
        let mut vars: Vec<String> = Vec::new();
        for atom in rule.body.iter().chain(rule.head.iter()) {
            for t in &atom.args {
                let v = var_of(t)?;
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        let mut lits: BTreeMap<String, Vec<Concept>> =
            vars.iter().map(|v| (v.clone(), Vec::new())).collect();
        let mut edge: Option<(String, String, String)> = None;
        for atom in &rule.body {
            if atom.rel == ADOM {
                continue;
            }
            if prog.edb.contains(&atom.rel) && atom.args.len() == 2 {
                let u = var_of(&atom.args[0])?;
                let w = var_of(&atom.args[1])?;
                edge = Some((atom.rel.clone(), u, w));
            } else if atom.args.len() == 1 {
                let v = var_of(&atom.args[0])?;
                lits.get_mut(&v).expect("registered").push(Concept::name(&atom.rel));
            } else {
                return Err(TranslateError::UnsupportedArity {
                    relation: atom.rel.clone(),
                    arity: atom.args.len(),
                });
            }
        }
        // a variable roots its component unless it is the target of the edge
        let root_ok = |v: &str| edge.as_ref().map_or(true, |(_, _, w)| v != w);

        let boolean_goal = rule.head.iter().any(|h| h.rel == GOAL && h.args.is_empty());
        let (rhs, root_var, negated): (Concept, Option<String>, Vec<&DAtom>) = if boolean_goal {
            let negated: Vec<&DAtom> = rule.head.iter().filter(|h| h.rel != GOAL).collect();
            (Concept::name(GOAL), None, negated)
        } else {
            let mut chosen: Option<usize> = None;
            for (i, h) in rule.head.iter().enumerate() {
                if root_ok(&var_of(&h.args[0])?) {
                    chosen = Some(i);
                    break;
                }
            }
            match chosen {
                Some(i) => {
                    let h = &rule.head[i];
                    let negated: Vec<&DAtom> = rule
                        .head
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, h2)| h2)
                        .collect();
                    (Concept::name(&h.rel), Some(var_of(&h.args[0])?), negated)
                }
                None => (Concept::Bot, None, rule.head.iter().collect()),
            }
        };
        for h in &negated {
            let v = var_of(&h.args[0])?;
            lits.get_mut(&v)
                .expect("head vars occur in the body")
                .push(Concept::not(Concept::name(&h.rel)));
        }

        // components: the edge pair plus singletons, in first-occurrence order
        let in_edge = |v: &str| edge.as_ref().map_or(false, |(_, u, w)| v == u || v == w);
        let mut comps: Vec<Vec<String>> = Vec::new();
        let mut edge_done = false;
        for v in &vars {
            if in_edge(v) {
                if !edge_done {
                    let (_, u, w) = edge.clone().expect("edge present");
                    comps.push(vec![u, w]);
                    edge_done = true;
                }
            } else {
                comps.push(vec![v.clone()]);
            }
        }
        let comp_concept = |comp: &[String]| -> Concept {
            if comp.len() == 2 {
                let (r, u, w) = edge.clone().expect("edge component");
                let inner = conj(lits[&w].clone());
                let mut parts = lits[&u].clone();
                parts.push(Concept::exists(Role::name(&r), inner));
                conj(parts)
            } else {
                conj(lits[&comp[0]].clone())
            }
        };
        let root_idx = match &root_var {
            Some(v) => comps.iter().position(|c| c.contains(v)).expect("root registered"),
            None => 0,
        };
        let mut lhs_parts = vec![comp_concept(&comps[root_idx])];
        for (i, c) in comps.iter().enumerate() {
            if i == root_idx {
                continue;
            }
            let cc = comp_concept(c);
            if cc == Concept::Top {
                continue;
            }
            lhs_parts.push(Concept::exists(Role::Univ, cc));
        }
        inclusions.push((conj(lhs_parts), rhs));
    }
    let dialect = if connected { Dialect::Alc } else { Dialect::Alcu };
    let ontology = Ontology::new(dialect, inclusions)?;
    let query = if unary_goal {
        QueryKind::Aq(GOAL.to_string())
    } else {
        QueryKind::Baq(GOAL.to_string())
    };
    Ok(OmqQuery { data_schema: prog.edb.clone(), ontology, query })
}

/// Rewrites a monadic program into an OMQ whose ontology forces a complement
/// predicate for every unary IDB and whose UCQ detects forced goal facts.
///
/// The UCQ has one disjunct per goal rule (its body, answered at the goal
/// arguments) and one per remaining rule (its body plus the complements of
/// its head atoms, with the answer tuple left unconstrained).
pub fn mddlog_to_ucq_omq(prog: &Program) -> Result<OmqQuery, TranslateError> {
    for (p, &ar) in &prog.idb {
        if ar != 1 {
            return Err(TranslateError::NonMonadicIdb(p.clone()));
        }
    }
    let mut taken: BTreeSet<String> =
        prog.edb.relations().iter().map(|(n, _)| n.clone()).collect();
    taken.extend(prog.idb.keys().cloned());
    taken.insert(String::from(GOAL));
    taken.insert(String::from(ADOM));
    let mut bars: BTreeMap<String, String> = BTreeMap::new();
    for p in prog.idb.keys() {
        let b = fresh_name(&format!("Abar_{p}"), &taken);
        taken.insert(b.clone());
        bars.insert(p.clone(), b);
    }
    let mut inclusions = Vec::new();
    for (p, b) in &bars {
        let pc = Concept::name(p);
        let bc = Concept::name(b);
        inclusions.push((
            Concept::Top,
            Concept::and(
                Concept::or(pc.clone(), bc.clone()),
                Concept::not(Concept::and(pc, bc)),
            ),
        ));
    }

    let k = prog.goal_arity;
    let mut var_taken: BTreeSet<String> = BTreeSet::new();
    for rule in &prog.rules {
        for atom in rule.body.iter().chain(rule.head.iter()) {
            for v in atom.vars() {
                var_taken.insert(String::from(v));
            }
        }
    }
    let yvars: Vec<String> = (1..=k)
        .map(|i| {
            let n = fresh_name(&format!("y{i}"), &var_taken);
            var_taken.insert(n.clone());
            n
        })
        .collect();

    let to_atom = |a: &DAtom| Atom::Rel { rel: a.rel.clone(), args: a.args.clone() };
    let mut disjuncts: Vec<Cq> = Vec::new();
    for rule in &prog.rules {
        let goal_atoms: Vec<&DAtom> = rule.head.iter().filter(|h| h.rel == GOAL).collect();
        let mut atoms: Vec<Atom> = rule.body.iter().map(to_atom).collect();
        for h in &rule.head {
            if h.rel != GOAL {
                atoms.push(Atom::Rel { rel: bars[&h.rel].clone(), args: h.args.clone() });
            }
        }
        let answer_vars: Vec<String>;
        if goal_atoms.is_empty() {
            // any tuple follows once the body matches in a completion
            for yv in &yvars {
                atoms.push(Atom::Eq(Term::var(yv), Term::var(yv)));
            }
            answer_vars = yvars.clone();
        } else {
            let direct = goal_atoms.len() == 1
                && goal_atoms[0].args.iter().all(|t| matches!(t, Term::Var(_)))
                && {
                    let vs: Vec<&str> = goal_atoms[0].vars().collect();
                    let set: BTreeSet<&str> = vs.iter().copied().collect();
                    vs.len() == set.len()
                };
            if direct {
                answer_vars = goal_atoms[0]
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => v.clone(),
                        Term::Const(_) => unreachable!("checked"),
                    })
                    .collect();
            } else {
                // several goal atoms, repeats, or constants: pin each goal
                // argument to the shared answer variables by equalities
                for g in &goal_atoms {
                    for (i, t) in g.args.iter().enumerate() {
                        atoms.push(Atom::Eq(Term::var(&yvars[i]), t.clone()));
                    }
                }
                answer_vars = yvars.clone();
            }
        }
        disjuncts.push(Cq { answer_vars, atoms });
    }
    let ucq = UcqQuery::new(disjuncts)?;
    Ok(OmqQuery {
        data_schema: prog.edb.clone(),
        ontology: Ontology::new(Dialect::Alc, inclusions)?,
        query: QueryKind::Ucq(ucq),
    })
}

/// Evaluates the output of [`mddlog_to_ucq_omq`] without a datalog engine:
/// a tuple is an answer iff the UCQ matches it under every completion that
/// assigns each active-domain element exactly one side of each complemented
/// pair. Models with extra elements or facts only gain matches, so the
/// adversary's optimum is a completion over the active domain.
pub fn adversarial_complement_eval(
    q: &OmqQuery,
    inst: &Instance,
    bound: u64,
) -> Result<BTreeSet<Vec<String>>, TranslateError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (l, r) in &q.ontology.inclusions {
        let bad = |m: &str| TranslateError::NotComplementOntology(String::from(m));
        if *l != Concept::Top {
            return Err(bad("left-hand side is not truth"));
        }
        match r {
            Concept::And(or_part, not_part) => match (&**or_part, &**not_part) {
                (Concept::Or(p1, b1), Concept::Not(inner)) => match &**inner {
                    Concept::And(p2, b2) if p1 == p2 && b1 == b2 => {
                        match (&**p1, &**b1) {
                            (Concept::Name(p), Concept::Name(b)) => {
                                pairs.push((p.clone(), b.clone()))
                            }
                            _ => return Err(bad("pair members are not names")),
                        }
                    }
                    _ => return Err(bad("exclusion does not mirror the covering")),
                },
                _ => return Err(bad("axiom is not covering-plus-exclusion")),
            },
            _ => return Err(bad("axiom is not covering-plus-exclusion")),
        }
    }
    let ucq = match &q.query {
        QueryKind::Ucq(u) => u,
        _ => return Err(TranslateError::UnsupportedQueryKind),
    };
    let adom: Vec<String> = inst.adom().into_iter().collect();
    let cells = pairs.len() * adom.len();
    if cells >= 63 || (1u64 << cells) > bound {
        return Err(TranslateError::CompletionBoundExceeded(bound));
    }
    let mut schema = inst.schema.clone();
    for (p, b) in &pairs {
        schema
            .ensure(p, 1)
            .and_then(|_| schema.ensure(b, 1))
            .map_err(|e| TranslateError::NotComplementOntology(format!("{e}")))?;
    }
    let mut answers: Option<BTreeSet<Vec<String>>> = None;
    for mask in 0..(1u64 << cells) {
        let mut facts: Vec<Fact> = inst.facts.iter().cloned().collect();
        for (pi, (p, b)) in pairs.iter().enumerate() {
            for (ei, e) in adom.iter().enumerate() {
                let one = mask & (1u64 << (pi * adom.len() + ei)) != 0;
                facts.push(Fact::new(if one { p } else { b }, &[e]));
            }
        }
        let d2 = Instance::new(schema.clone(), facts).expect("facts fit the extended schema");
        let ans = eval_ucq(ucq, &d2)?;
        answers = Some(match answers {
            None => ans,
            Some(acc) => acc.intersection(&ans).cloned().collect(),
        });
        if answers.as_ref().map_or(false, |a| a.is_empty()) {
            break;
        }
    }
    Ok(answers.unwrap_or_default())
}

/// Shared core of the program-to-formula directions: IDB predicates become
/// SO variables, non-goal rules become implications, and each goal rule
/// becomes an implication whose head keeps the non-goal disjuncts, with the
/// goal arguments renamed into the free variables (adding equalities for
/// repeats and constants).
fn program_to_msnp(prog: &Program, dialect: MsnpDialect) -> Result<MsnpFormula, TranslateError> {
    let mut so_vars: Vec<(String, SoKind)> = prog
        .idb
        .iter()
        .map(|(p, &a)| (p.clone(), if a == 1 { SoKind::Monadic } else { SoKind::Rel(a) }))
        .collect();
    // Predicates occurring only in bodies (including a rule-less `adom`) are
    // unconstrained, so an existential set variable is a faithful reading.
    for rule in &prog.rules {
        for atom in rule.body.iter().chain(rule.head.iter()) {
            if atom.rel == GOAL
                || prog.edb.contains(&atom.rel)
                || so_vars.iter().any(|(n, _)| *n == atom.rel)
            {
                continue;
            }
            let kind =
                if atom.args.len() == 1 { SoKind::Monadic } else { SoKind::Rel(atom.args.len()) };
            so_vars.push((atom.rel.clone(), kind));
        }
    }

    let mut var_taken: BTreeSet<String> = BTreeSet::new();
    for rule in &prog.rules {
        for atom in rule.body.iter().chain(rule.head.iter()) {
            for v in atom.vars() {
                var_taken.insert(String::from(v));
            }
        }
    }
    let yvars: Vec<String> = (1..=prog.goal_arity)
        .map(|i| {
            let n = fresh_name(&format!("y{i}"), &var_taken);
            var_taken.insert(n.clone());
            n
        })
        .collect();

    let to_matom = |a: &DAtom, subst: &BTreeMap<String, String>| -> MAtom {
        let args: Vec<Term> = a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::var(subst.get(v).map(String::as_str).unwrap_or(v)),
                c => c.clone(),
            })
            .collect();
        if prog.edb.contains(&a.rel) {
            MAtom::Rel { rel: a.rel.clone(), args }
        } else {
            MAtom::So { var: a.rel.clone(), args }
        }
    };

    let mut matrix: Vec<Implication> = Vec::new();
    for rule in &prog.rules {
        let goal_atoms: Vec<&DAtom> = rule.head.iter().filter(|h| h.rel == GOAL).collect();
        if goal_atoms.is_empty() {
            let id = BTreeMap::new();
            matrix.push(Implication {
                body: rule.body.iter().map(|a| to_matom(a, &id)).collect(),
                head: rule.head.iter().map(|a| to_matom(a, &id)).collect(),
            });
            continue;
        }
        let mut subst: BTreeMap<String, String> = BTreeMap::new();
        let mut eqs: Vec<MAtom> = Vec::new();
        for g in &goal_atoms {
            for (i, t) in g.args.iter().enumerate() {
                let yi = &yvars[i];
                match t {
                    Term::Const(c) => eqs.push(MAtom::Eq(Term::var(yi), Term::cons(c))),
                    Term::Var(v) => match subst.get(v) {
                        None => {
                            subst.insert(v.clone(), yi.clone());
                        }
                        Some(first) if first != yi => {
                            eqs.push(MAtom::Eq(Term::var(yi), Term::var(first)))
                        }
                        _ => {}
                    },
                }
            }
        }
        let mut body: Vec<MAtom> = rule.body.iter().map(|a| to_matom(a, &subst)).collect();
        body.extend(eqs);
        let head: Vec<MAtom> = rule
            .head
            .iter()
            .filter(|h| h.rel != GOAL)
            .map(|a| to_matom(a, &subst))
            .collect();
        matrix.push(Implication { body, head });
    }
    let out = MsnpFormula { dialect, so_vars, free_vars: yvars, matrix };
    out.validate()?;
    Ok(out)
}

/// Monadic program to the complement formula: the formula is satisfiable on
/// (D, ā) iff ā is not a certain answer of the program on D.
pub fn mddlog_to_commsnp(prog: &Program) -> Result<MsnpFormula, TranslateError> {
    for (p, &a) in &prog.idb {
        if a != 1 {
            return Err(TranslateError::NonMonadicIdb(p.clone()));
        }
    }
    program_to_msnp(prog, MsnpDialect::Mmsnp)
}

/// Frontier-guarded program to the complement formula with higher-arity SO
/// variables.
pub fn fgddlog_to_gmsnp(prog: &Program) -> Result<MsnpFormula, TranslateError> {
    if !classify(prog).frontier_guarded {
        return Err(TranslateError::NotFrontierGuarded);
    }
    program_to_msnp(prog, MsnpDialect::Gmsnp)
}

fn resolve_rep(rep: &BTreeMap<String, Term>, t: &Term) -> Term {
    let mut cur = t.clone();
    while let Term::Var(v) = &cur {
        match rep.get(v) {
            Some(next) => cur = next.clone(),
            None => break,
        }
    }
    cur
}

/// Shared core of the formula-to-program directions: normalization, then
/// implications with heads become rules, falsum implications become goal
/// rules over the free variables, and `adom` atoms are added wherever a
/// variable is not bound by a data atom.
fn msnp_to_program(f: &MsnpFormula, schema: &Schema) -> Result<Program, TranslateError> {
    f.validate()?;
    for imp in &f.matrix {
        if imp.head.is_empty() {
            continue;
        }
        for a in imp.body.iter().chain(imp.head.iter()) {
            for v in a.vars() {
                if f.free_vars.iter().any(|y| y == v) {
                    return Err(MsnpError::FreeVarInPositiveImplication(String::from(v)).into());
                }
            }
        }
    }
    let norm = normalize_msnp(f, schema);

    let mut taken: BTreeSet<String> =
        schema.relations().iter().map(|(n, _)| n.clone()).collect();
    taken.insert(String::from(GOAL));
    taken.insert(String::from(ADOM));
    let mut idb_name: BTreeMap<String, String> = BTreeMap::new();
    for (v, _) in &norm.so_vars {
        let n = fresh_name(v, &taken);
        taken.insert(n.clone());
        idb_name.insert(v.clone(), n);
    }

    let mut rules: Vec<Rule> = Vec::new();
    for imp in &norm.matrix {
        let mut eqs: Vec<(Term, Term)> = Vec::new();
        let mut atoms: Vec<&MAtom> = Vec::new();
        for a in &imp.body {
            match a {
                MAtom::Eq(l, r) => eqs.push((l.clone(), r.clone())),
                _ => atoms.push(a),
            }
        }
        // remaining equalities involve free variables or constants only
        let mut rep: BTreeMap<String, Term> = BTreeMap::new();
        let mut satisfiable = true;
        for (l, r) in &eqs {
            let l = resolve_rep(&rep, l);
            let r = resolve_rep(&rep, r);
            if l == r {
                continue;
            }
            match (l, r) {
                (Term::Var(a), t) | (t, Term::Var(a)) => {
                    rep.insert(a, t);
                }
                _ => {
                    satisfiable = false;
                    break;
                }
            }
        }
        if !satisfiable {
            continue;
        }
        let conv = |a: &MAtom| -> Result<DAtom, TranslateError> {
            let (rel, args) = match a {
                MAtom::Rel { rel, args } => (rel.clone(), args),
                MAtom::So { var, args } => (idb_name[var].clone(), args),
                MAtom::SoFact { var, .. } => {
                    return Err(MsnpError::FactAtomOutsideMmsnp2(var.clone()).into())
                }
                MAtom::Eq(..) => unreachable!("equalities filtered out"),
            };
            Ok(DAtom { rel, args: args.iter().map(|t| resolve_rep(&rep, t)).collect() })
        };
        let mut body: Vec<DAtom> = Vec::new();
        for a in &atoms {
            body.push(conv(a)?);
        }
        if imp.head.is_empty() {
            let head_args: Vec<Term> =
                f.free_vars.iter().map(|y| resolve_rep(&rep, &Term::var(y))).collect();
            for t in &head_args {
                if let Term::Var(v) = t {
                    let guard = DAtom::new(ADOM, &[Term::var(v)]);
                    if !body.contains(&guard) {
                        body.push(guard);
                    }
                }
            }
            add_adom_guards(&mut body, schema);
            rules.push(Rule::new(
                vec![DAtom { rel: String::from(GOAL), args: head_args }],
                body,
            ));
        } else {
            let mut head: Vec<DAtom> = Vec::new();
            for a in &imp.head {
                head.push(conv(a)?);
            }
            add_adom_guards(&mut body, schema);
            rules.push(Rule::new(head, body));
        }
    }
    rules.extend(adom_rules(schema));
    let mut prog = Program::new(rules, schema.clone())?;
    // the arity is fixed by the free variables even without falsum implications
    prog.goal_arity = f.free_vars.len();
    Ok(prog)
}

/// Binds every body variable not occurring in a data atom by an `adom` atom.
fn add_adom_guards(body: &mut Vec<DAtom>, schema: &Schema) {
    let bound: BTreeSet<String> = body
        .iter()
        .filter(|a| schema.contains(&a.rel) || a.rel == ADOM)
        .flat_map(|a| a.vars().map(String::from).collect::<Vec<_>>())
        .collect();
    let mut need: Vec<String> = Vec::new();
    for a in body.iter() {
        for v in a.vars() {
            if !bound.contains(v) && !need.iter().any(|n| n == v) {
                need.push(String::from(v));
            }
        }
    }
    for v in need {
        body.push(DAtom::new(ADOM, &[Term::var(&v)]));
    }
}

/// Complement formula to a monadic program computing the same co-query.
pub fn commsnp_to_mddlog(f: &MsnpFormula, schema: &Schema) -> Result<Program, TranslateError> {
    if f.dialect != MsnpDialect::Mmsnp {
        return Err(TranslateError::DialectMismatch("MMSNP"));
    }
    msnp_to_program(f, schema)
}

/// Guarded complement formula to a frontier-guarded program.
pub fn gmsnp_to_fgddlog(f: &MsnpFormula, schema: &Schema) -> Result<Program, TranslateError> {
    if f.dialect != MsnpDialect::Gmsnp {
        return Err(TranslateError::DialectMismatch("GMSNP"));
    }
    msnp_to_program(f, schema)
}

fn is_monadic_kind(kind: &SoKind) -> bool {
    matches!(kind, SoKind::Monadic | SoKind::Rel(1))
}

/// Splits every fact-set variable into an element-set part plus one
/// tuple-set variable per schema relation, turning fact atoms into ordinary
/// SO atoms. Head variables left unbound by the split are guarded by the
/// usual normalization, which also restores the guardedness invariant.
pub fn mmsnp2_to_gmsnp(f: &MsnpFormula, schema: &Schema) -> Result<MsnpFormula, TranslateError> {
    if f.dialect != MsnpDialect::Mmsnp2 {
        return Err(TranslateError::DialectMismatch("MMSNP2"));
    }
    f.validate()?;
    let mut taken: BTreeSet<String> = f.so_vars.iter().map(|(n, _)| n.clone()).collect();
    let mut elem_name: BTreeMap<String, String> = BTreeMap::new();
    let mut rel_name: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut so_vars: Vec<(String, SoKind)> = Vec::new();
    for (v, kind) in &f.so_vars {
        match kind {
            SoKind::FactSet => {
                let en = fresh_name(&format!("{v}_e"), &taken);
                taken.insert(en.clone());
                elem_name.insert(v.clone(), en.clone());
                so_vars.push((en, SoKind::Monadic));
                for (r, ar) in schema.relations() {
                    let rn = fresh_name(&format!("{v}_{r}"), &taken);
                    taken.insert(rn.clone());
                    rel_name.insert((v.clone(), r.clone()), rn.clone());
                    so_vars.push((rn, SoKind::Rel(*ar)));
                }
            }
            other => so_vars.push((v.clone(), other.clone())),
        }
    }
    let mut matrix: Vec<Implication> = Vec::new();
    for imp in &f.matrix {
        let map_atom = |a: &MAtom| -> Result<MAtom, TranslateError> {
            match a {
                MAtom::So { var, args } if elem_name.contains_key(var) => {
                    Ok(MAtom::So { var: elem_name[var].clone(), args: args.clone() })
                }
                MAtom::SoFact { var, rel, args } => {
                    let rn = rel_name
                        .get(&(var.clone(), rel.clone()))
                        .ok_or_else(|| TranslateError::UnknownRelation(rel.clone()))?;
                    Ok(MAtom::So { var: rn.clone(), args: args.clone() })
                }
                other => Ok(other.clone()),
            }
        };
        let mut body = Vec::new();
        for a in &imp.body {
            body.push(map_atom(a)?);
        }
        let mut head = Vec::new();
        for a in &imp.head {
            head.push(map_atom(a)?);
        }
        matrix.push(Implication { body, head });
    }
    let converted =
        MsnpFormula { dialect: MsnpDialect::Gmsnp, so_vars, free_vars: f.free_vars.clone(), matrix };
    let out = normalize_msnp(&converted, schema);
    out.validate()?;
    Ok(out)
}

/// Default cap on the implication count produced by [`gmsnp_to_mmsnp2`].
pub const DEFAULT_IMPLICATION_BOUND: usize = 4096;

fn atom_var_list(a: &MAtom) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in a.vars() {
        if !out.iter().any(|w| w == v) {
            out.push(String::from(v));
        }
    }
    out
}

/// Enumerates restricted growth strings, i.e. the partitions of {0..n-1}.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(cur: &mut Vec<usize>, i: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            cur[i] = b;
            rec(cur, i + 1, max.max(b), out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
    } else {
        rec(&mut cur, 1, 0, &mut out);
    }
    out
}

fn substitute_vars(imp: &Implication, sub: &BTreeMap<String, String>) -> Implication {
    let map_term = |t: &Term| match t {
        Term::Var(v) => Term::var(sub.get(v).map(String::as_str).unwrap_or(v)),
        c => c.clone(),
    };
    let map_atom = |a: &MAtom| match a {
        MAtom::Rel { rel, args } => {
            MAtom::Rel { rel: rel.clone(), args: args.iter().map(map_term).collect() }
        }
        MAtom::So { var, args } => {
            MAtom::So { var: var.clone(), args: args.iter().map(map_term).collect() }
        }
        MAtom::SoFact { var, rel, args } => MAtom::SoFact {
            var: var.clone(),
            rel: rel.clone(),
            args: args.iter().map(map_term).collect(),
        },
        MAtom::Eq(l, r) => MAtom::Eq(map_term(l), map_term(r)),
    };
    Implication {
        body: imp.body.iter().map(map_atom).collect(),
        head: imp.head.iter().map(map_atom).collect(),
    }
}

fn implication_vars(imp: &Implication) -> Vec<String> {
    let mut vars: Vec<String> = Vec::new();
    for a in imp.body.iter().chain(imp.head.iter()) {
        for v in a.vars() {
            if !vars.iter().any(|w| w == v) {
                vars.push(String::from(v));
            }
        }
    }
    vars
}

fn dedup_atoms(atoms: &[MAtom]) -> Vec<MAtom> {
    let mut out: Vec<MAtom> = Vec::new();
    for a in atoms {
        if !out.contains(a) {
            out.push(a.clone());
        }
    }
    out
}

/// Rewrites a guarded sentence into one over fact-set variables.
///
/// Preparation follows four steps: equalities are unified away, every
/// non-monadic head atom gets an input-relation guard in its body (expanding
/// over all possible guards), the matrix is closed under identification of
/// variables, and implications get disjoint variable names. Each prepared
/// non-monadic head atom then receives a dedicated fact-set variable over its
/// guard; body occurrences of the original variables expand over every head
/// atom whose argument tuple matches theirs up to a variable bijection.
pub fn gmsnp_to_mmsnp2(
    f: &MsnpFormula,
    schema: &Schema,
    max_implications: usize,
) -> Result<MsnpFormula, TranslateError> {
    if f.dialect != MsnpDialect::Gmsnp {
        return Err(TranslateError::DialectMismatch("GMSNP"));
    }
    f.validate()?;
    if !f.free_vars.is_empty() {
        return Err(TranslateError::NotSentence);
    }
    for imp in &f.matrix {
        for a in imp.body.iter().chain(imp.head.iter()) {
            let has_const = match a {
                MAtom::Rel { args, .. } | MAtom::So { args, .. } | MAtom::SoFact { args, .. } => {
                    args.iter().any(|t| matches!(t, Term::Const(_)))
                }
                MAtom::Eq(l, r) => {
                    matches!(l, Term::Const(_)) || matches!(r, Term::Const(_))
                }
            };
            if has_const {
                return Err(TranslateError::ConstantInMatrix);
            }
        }
    }
    let kind_of: BTreeMap<&str, &SoKind> =
        f.so_vars.iter().map(|(n, k)| (n.as_str(), k)).collect();
    let nonmonadic = |v: &str| kind_of.get(v).map_or(false, |k| !is_monadic_kind(k));

    // step 1: unify equalities away
    let matrix1: Vec<Implication> =
        f.matrix.iter().map(|imp| unify_equalities(imp, &[])).collect();

    // step 2: input-relation guards for non-monadic head atoms
    let mut all_vars: BTreeSet<String> = BTreeSet::new();
    for imp in &matrix1 {
        for v in implication_vars(imp) {
            all_vars.insert(v);
        }
    }
    let mut fresh_counter = 0usize;
    let mut fresh_var = |all_vars: &mut BTreeSet<String>| -> String {
        loop {
            fresh_counter += 1;
            let cand = format!("g{fresh_counter}");
            if all_vars.insert(cand.clone()) {
                return cand;
            }
        }
    };
    let has_input_guard = |imp: &Implication, h: &MAtom| -> bool {
        let hv: BTreeSet<&str> = h.vars().into_iter().collect();
        imp.body.iter().any(|b| {
            matches!(b, MAtom::Rel { .. }) && {
                let bv: BTreeSet<&str> = b.vars().into_iter().collect();
                hv.iter().all(|v| bv.contains(v))
            }
        })
    };
    let mut matrix2: Vec<Implication> = Vec::new();
    for imp in matrix1 {
        let mut work = vec![imp];
        while let Some(cur) = work.pop() {
            let unguarded = cur
                .head
                .iter()
                .find(|h| {
                    matches!(h, MAtom::So { var, .. } if nonmonadic(var))
                        && !has_input_guard(&cur, h)
                })
                .cloned();
            match unguarded {
                None => matrix2.push(cur),
                Some(h) => {
                    let hv = atom_var_list(&h);
                    let mut any = false;
                    for (rel, ar) in schema.relations() {
                        if *ar < hv.len() {
                            continue;
                        }
                        // every placement of the head variables into the
                        // guard's positions, fresh variables elsewhere
                        let mut slots = vec![0usize; *ar];
                        loop {
                            let covered =
                                (0..hv.len()).all(|vi| slots.iter().any(|&s| s == vi + 1));
                            if covered {
                                let mut c2 = cur.clone();
                                let args: Vec<Term> = slots
                                    .iter()
                                    .map(|&s| {
                                        if s == 0 {
                                            Term::var(&fresh_var(&mut all_vars))
                                        } else {
                                            Term::var(&hv[s - 1])
                                        }
                                    })
                                    .collect();
                                c2.body.push(MAtom::Rel { rel: rel.clone(), args });
                                work.push(c2);
                                any = true;
                            }
                            // odometer over {fresh, v1..vm} per position
                            let mut k = 0;
                            loop {
                                if k == slots.len() {
                                    break;
                                }
                                slots[k] += 1;
                                if slots[k] <= hv.len() {
                                    break;
                                }
                                slots[k] = 0;
                                k += 1;
                            }
                            if k == slots.len() {
                                break;
                            }
                        }
                    }
                    if !any {
                        return Err(TranslateError::NoInputGuard(format!("{:?}", h)));
                    }
                }
            }
            if matrix2.len() + work.len() > max_implications {
                return Err(TranslateError::ImplicationBoundExceeded(max_implications));
            }
        }
    }

    // step 3: close under identification of variables, canonically renamed
    let mut matrix3: Vec<Implication> = Vec::new();
    for imp in &matrix2 {
        let vars = implication_vars(imp);
        for part in partitions(vars.len()) {
            let mut sub: BTreeMap<String, String> = BTreeMap::new();
            for (i, v) in vars.iter().enumerate() {
                let rep = part.iter().position(|&b| b == part[i]).expect("block present");
                sub.insert(v.clone(), vars[rep].clone());
            }
            let merged = substitute_vars(imp, &sub);
            // canonical names make duplicates syntactic
            let mvars = implication_vars(&merged);
            let canon_sub: BTreeMap<String, String> = mvars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), format!("c{i}")))
                .collect();
            let canon = substitute_vars(&merged, &canon_sub);
            let canon = Implication {
                body: dedup_atoms(&canon.body),
                head: dedup_atoms(&canon.head),
            };
            if !matrix3.contains(&canon) {
                matrix3.push(canon);
            }
            if matrix3.len() > max_implications {
                return Err(TranslateError::ImplicationBoundExceeded(max_implications));
            }
        }
    }

    // step 4: disjoint variables per implication
    let matrix4: Vec<Implication> = matrix3
        .iter()
        .enumerate()
        .map(|(i, imp)| {
            let sub: BTreeMap<String, String> = implication_vars(imp)
                .into_iter()
                .enumerate()
                .map(|(j, v)| (v, format!("v{i}_{j}")))
                .collect();
            substitute_vars(imp, &sub)
        })
        .collect();

    // one fact-set variable per non-monadic head atom, guarded in its body
    struct HeadOcc {
        so_var: String,
        args: Vec<String>,
        fact_var: String,
        guard_rel: String,
        guard_args: Vec<String>,
    }
    let mut taken: BTreeSet<String> = f.so_vars.iter().map(|(n, _)| n.clone()).collect();
    let mut occs: Vec<HeadOcc> = Vec::new();
    let mut occ_at: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, imp) in matrix4.iter().enumerate() {
        for (j, h) in imp.head.iter().enumerate() {
            if let MAtom::So { var, args } = h {
                if !nonmonadic(var) {
                    continue;
                }
                let guard = imp
                    .body
                    .iter()
                    .find_map(|b| match b {
                        MAtom::Rel { rel, args: gargs } => {
                            let bv: BTreeSet<&str> = b.vars().into_iter().collect();
                            if h.vars().iter().all(|v| bv.contains(v)) {
                                Some((rel.clone(), gargs.clone()))
                            } else {
                                None
                            }
                        }
                        _ => None,
                    })
                    .expect("guarded in step 2");
                let fact_var = fresh_name(&format!("X_{i}_{j}"), &taken);
                taken.insert(fact_var.clone());
                occ_at.insert((i, j), occs.len());
                occs.push(HeadOcc {
                    so_var: var.clone(),
                    args: args
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => v.clone(),
                            Term::Const(_) => unreachable!("constants rejected"),
                        })
                        .collect(),
                    fact_var,
                    guard_rel: guard.0,
                    guard_args: guard
                        .1
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => v.clone(),
                            Term::Const(_) => unreachable!("constants rejected"),
                        })
                        .collect(),
                });
            }
        }
    }
    let so_vars_out: Vec<(String, SoKind)> = f
        .so_vars
        .iter()
        .filter(|(_, k)| is_monadic_kind(k))
        .cloned()
        .chain(occs.iter().map(|o| (o.fact_var.clone(), SoKind::FactSet)))
        .collect();

    // the componentwise map from a body atom's arguments onto a head atom's,
    // when it is a bijection between the variable sets
    let bijection = |from: &[String], to: &[String]| -> Option<BTreeMap<String, String>> {
        if from.len() != to.len() {
            return None;
        }
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (a, b) in from.iter().zip(to.iter()) {
            match map.get(a) {
                None => {
                    map.insert(a.clone(), b.clone());
                }
                Some(prev) if prev != b => return None,
                _ => {}
            }
        }
        let image: BTreeSet<&String> = map.values().collect();
        if image.len() != map.len() {
            return None;
        }
        Some(map)
    };

    let mut all_out_vars: BTreeSet<String> = BTreeSet::new();
    for imp in &matrix4 {
        for v in implication_vars(imp) {
            all_out_vars.insert(v);
        }
    }
    let mut out_fresh = 0usize;
    let mut fresh_out = |vars: &mut BTreeSet<String>| -> String {
        loop {
            out_fresh += 1;
            let cand = format!("w{out_fresh}");
            if vars.insert(cand.clone()) {
                return cand;
            }
        }
    };

    let mut out_matrix: Vec<Implication> = Vec::new();
    for (i, imp) in matrix4.iter().enumerate() {
        let mut base_body: Vec<MAtom> = Vec::new();
        let mut so_body: Vec<(String, Vec<String>)> = Vec::new();
        for a in &imp.body {
            match a {
                MAtom::So { var, args } if nonmonadic(var) => so_body.push((
                    var.clone(),
                    args.iter()
                        .map(|t| match t {
                            Term::Var(v) => v.clone(),
                            Term::Const(_) => unreachable!("constants rejected"),
                        })
                        .collect(),
                )),
                other => base_body.push(other.clone()),
            }
        }
        let mut out_head: Vec<MAtom> = Vec::new();
        for (j, h) in imp.head.iter().enumerate() {
            match h {
                MAtom::So { var, .. } if nonmonadic(var) => {
                    let o = &occs[occ_at[&(i, j)]];
                    out_head.push(MAtom::SoFact {
                        var: o.fact_var.clone(),
                        rel: o.guard_rel.clone(),
                        args: o.guard_args.iter().map(|v| Term::var(v)).collect(),
                    });
                }
                other => out_head.push(other.clone()),
            }
        }
        // per body occurrence, all head atoms it may have been produced by
        let mut per_atom: Vec<Vec<MAtom>> = Vec::new();
        for (xl, xargs) in &so_body {
            let mut choices: Vec<MAtom> = Vec::new();
            for o in &occs {
                if o.so_var != *xl {
                    continue;
                }
                if let Some(rho) = bijection(xargs, &o.args) {
                    let inv: BTreeMap<&String, &String> =
                        rho.iter().map(|(a, b)| (b, a)).collect();
                    let gargs: Vec<Term> = o
                        .guard_args
                        .iter()
                        .map(|z| match inv.get(z) {
                            Some(x) => Term::var(x),
                            None => Term::var(&fresh_out(&mut all_out_vars)),
                        })
                        .collect();
                    choices.push(MAtom::SoFact {
                        var: o.fact_var.clone(),
                        rel: o.guard_rel.clone(),
                        args: gargs,
                    });
                }
            }
            per_atom.push(choices);
        }
        if per_atom.iter().any(|c| c.is_empty()) {
            // some occurrence can never be produced: the body is unsatisfiable
            continue;
        }
        let mut combos: Vec<Vec<MAtom>> = vec![Vec::new()];
        for choices in &per_atom {
            let mut next = Vec::new();
            for combo in &combos {
                for c in choices {
                    let mut cc = combo.clone();
                    cc.push(c.clone());
                    next.push(cc);
                }
            }
            combos = next;
            if combos.len() + out_matrix.len() > max_implications {
                return Err(TranslateError::ImplicationBoundExceeded(max_implications));
            }
        }
        for combo in combos {
            let mut body = base_body.clone();
            body.extend(combo);
            out_matrix.push(Implication { body, head: out_head.clone() });
            if out_matrix.len() > max_implications {
                return Err(TranslateError::ImplicationBoundExceeded(max_implications));
            }
        }
    }
    let out = MsnpFormula {
        dialect: MsnpDialect::Mmsnp2,
        so_vars: so_vars_out,
        free_vars: Vec::new(),
        matrix: out_matrix,
    };
    out.validate()?;
    Ok(out)
}
