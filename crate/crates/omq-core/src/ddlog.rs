//! Disjunctive datalog: program model, syntactic classification, and exact
//! brute-force certain-answer evaluation.
//!
//! Certain answers are computed over models whose IDB facts range over the
//! active domain of the input instance. The restriction loses nothing: the
//! substructure of any model induced on adom(D) is again a model containing
//! D, so the intersection of goal facts is unchanged. "Safe" programs bind
//! every body variable by some body atom; safety is checked at construction
//! time and evaluation refuses unsafe programs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::rel::{Fact, Instance, Schema, Term};
use crate::sat::{Clause, Search, SearchOutcome};

pub const GOAL: &str = "goal";
pub const ADOM: &str = "adom";

/// A rule atom: relation applied to terms (variables or constants).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DAtom {
    pub rel: String,
    pub args: Vec<Term>,
}

impl DAtom {
    pub fn new(rel: &str, args: &[Term]) -> Self {
        DAtom { rel: String::from(rel), args: args.to_vec() }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

/// A disjunctive rule. An empty head is the constraint `bot`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rule {
    pub head: Vec<DAtom>,
    pub body: Vec<DAtom>,
}

impl Rule {
    pub fn new(head: Vec<DAtom>, body: Vec<DAtom>) -> Self {
        Rule { head, body }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProgramError {
    EmptyBody,
    HeadVarNotInBody(String),
    GoalInBody,
    GoalArityMixed { seen: usize, new: usize },
    IdbArityMixed { relation: String, seen: usize, new: usize },
    EdbIdbOverlap(String),
}

impl fmt::Display for ProgramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramError::EmptyBody => write!(f, "rule with empty body"),
            ProgramError::HeadVarNotInBody(v) => {
                write!(f, "head variable `{v}` does not occur in the body")
            }
            ProgramError::GoalInBody => write!(f, "`goal` may not occur in rule bodies"),
            ProgramError::GoalArityMixed { seen, new } => {
                write!(f, "`goal` used with arity {new} after arity {seen}")
            }
            ProgramError::IdbArityMixed { relation, seen, new } => {
                write!(f, "IDB `{relation}` used with arity {new} after arity {seen}")
            }
            ProgramError::EdbIdbOverlap(r) => {
                write!(f, "relation `{r}` occurs both as EDB and in a rule head")
            }
        }
    }
}

/// A disjunctive datalog program with a distinguished `goal` predicate.
///
/// IDB = relations occurring in rule heads plus `goal`; everything else in
/// `edb` is input data. `safe` records whether every body variable is bound
/// by an EDB or `adom` atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub goal_arity: usize,
    pub idb: BTreeMap<String, usize>,
    pub edb: Schema,
    pub safe: bool,
}

impl Program {
    /// Validates rule shape and infers the IDB set. `goal_arity` defaults to
    /// 0 when no goal rule exists.
    pub fn new(rules: Vec<Rule>, edb: Schema) -> Result<Self, ProgramError> {
        let mut idb: BTreeMap<String, usize> = BTreeMap::new();
        let mut goal_arity: Option<usize> = None;
        for rule in &rules {
            if rule.body.is_empty() {
                return Err(ProgramError::EmptyBody);
            }
            for atom in &rule.body {
                if atom.rel == GOAL {
                    return Err(ProgramError::GoalInBody);
                }
            }
            let body_vars: BTreeSet<&str> = rule.body.iter().flat_map(|a| a.vars()).collect();
            for atom in &rule.head {
                for v in atom.vars() {
                    if !body_vars.contains(v) {
                        return Err(ProgramError::HeadVarNotInBody(String::from(v)));
                    }
                }
                if atom.rel == GOAL {
                    match goal_arity {
                        None => goal_arity = Some(atom.args.len()),
                        Some(a) if a != atom.args.len() => {
                            return Err(ProgramError::GoalArityMixed { seen: a, new: atom.args.len() })
                        }
                        _ => {}
                    }
                } else {
                    match idb.get(&atom.rel) {
                        None => {
                            idb.insert(atom.rel.clone(), atom.args.len());
                        }
                        Some(&a) if a != atom.args.len() => {
                            return Err(ProgramError::IdbArityMixed {
                                relation: atom.rel.clone(),
                                seen: a,
                                new: atom.args.len(),
                            })
                        }
                        _ => {}
                    }
                }
            }
        }
        for (name, _) in edb.relations() {
            if idb.contains_key(name) || name == GOAL {
                return Err(ProgramError::EdbIdbOverlap(name.clone()));
            }
        }
        let goal_arity = goal_arity.unwrap_or(0);
        // Every body variable must be bound by some atom: an EDB or `adom`
        // atom, or an IDB atom (whose facts range over the active domain in
        // the restricted models the evaluator enumerates; the restriction is
        // harmless because the substructure of any model induced on adom(D)
        // is again a model containing D).
        let is_bound =
            |rel: &str| rel == ADOM || edb.contains(rel) || idb.contains_key(rel);
        let safe = rules.iter().all(|rule| {
            let bound: BTreeSet<&str> = rule
                .body
                .iter()
                .filter(|a| is_bound(&a.rel))
                .flat_map(|a| a.vars())
                .collect();
            rule.body.iter().flat_map(|a| a.vars()).all(|v| bound.contains(v))
        });
        Ok(Program { rules, goal_arity, idb, edb, safe })
    }

    pub fn is_goal_rule(rule: &Rule) -> bool {
        rule.head.iter().any(|a| a.rel == GOAL)
    }
}

/// The rules `adom(x) <- R(..., x, ...)` for every EDB relation and position.
pub fn adom_rules(edb: &Schema) -> Vec<Rule> {
    let mut rules = Vec::new();
    for (rel, arity) in edb.relations() {
        for pos in 0..*arity {
            let args: Vec<Term> =
                (0..*arity).map(|i| Term::var(&format!("X{i}"))).collect();
            let head = vec![DAtom::new(ADOM, &[args[pos].clone()])];
            let body = vec![DAtom::new(rel, &args)];
            rules.push(Rule::new(head, body));
        }
    }
    rules
}

/// Syntactic classification flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    /// All IDB predicates except `goal` are unary.
    pub monadic: bool,
    /// Each rule has at most one EDB atom, and its variables are distinct.
    pub simple: bool,
    /// Each rule body's variable co-occurrence graph is connected.
    pub connected: bool,
    /// Each head atom's variables are covered by a single body atom.
    pub frontier_guarded: bool,
    /// Some body atom of each rule contains all the rule's body variables.
    pub guarded: bool,
}

pub fn classify(prog: &Program) -> Flags {
    let monadic = prog.idb.iter().all(|(_, &a)| a == 1);
    let mut simple = true;
    let mut connected = true;
    let mut frontier_guarded = true;
    let mut guarded = true;
    for rule in &prog.rules {
        let edb_atoms: Vec<&DAtom> =
            rule.body.iter().filter(|a| prog.edb.contains(&a.rel)).collect();
        if edb_atoms.len() > 1 {
            simple = false;
        }
        for a in &edb_atoms {
            let vars: Vec<&str> = a.vars().collect();
            let distinct: BTreeSet<&str> = vars.iter().copied().collect();
            if vars.len() != distinct.len() {
                simple = false;
            }
        }
        let body_vars: Vec<&str> = {
            let set: BTreeSet<&str> = rule.body.iter().flat_map(|a| a.vars()).collect();
            set.into_iter().collect()
        };
        // Connectivity of the co-occurrence graph, by union-find over vars.
        if body_vars.len() > 1 {
            let mut comp: Vec<usize> = (0..body_vars.len()).collect();
            fn find(comp: &mut Vec<usize>, i: usize) -> usize {
                if comp[i] != i {
                    let r = find(comp, comp[i]);
                    comp[i] = r;
                }
                comp[i]
            }
            for atom in &rule.body {
                let idxs: Vec<usize> = atom
                    .vars()
                    .map(|v| body_vars.iter().position(|w| *w == v).expect("present"))
                    .collect();
                for w in idxs.windows(2) {
                    let a = find(&mut comp, w[0]);
                    let b = find(&mut comp, w[1]);
                    comp[a] = b;
                }
            }
            let root = find(&mut comp, 0);
            if (1..body_vars.len()).any(|i| find(&mut comp, i) != root) {
                connected = false;
            }
        }
        for hatom in &rule.head {
            let hv: BTreeSet<&str> = hatom.vars().collect();
            if !rule.body.iter().any(|b| {
                let bv: BTreeSet<&str> = b.vars().collect();
                hv.iter().all(|v| bv.contains(v))
            }) {
                frontier_guarded = false;
            }
        }
        let all: BTreeSet<&str> = rule.body.iter().flat_map(|a| a.vars()).collect();
        if !rule.body.iter().any(|b| {
            let bv: BTreeSet<&str> = b.vars().collect();
            all.iter().all(|v| bv.contains(v))
        }) {
            guarded = false;
        }
    }
    Flags { monadic, simple, connected, frontier_guarded, guarded }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    Unsafe,
    SearchBoundExceeded(u64),
    BadInstance(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unsafe => write!(
                f,
                "program is not safe: a body variable is bound by no EDB or adom atom"
            ),
            EvalError::SearchBoundExceeded(b) => {
                write!(f, "model search exceeded the bound of {b} candidate assignments")
            }
            EvalError::BadInstance(m) => write!(f, "instance does not fit the program: {m}"),
        }
    }
}

/// Default bound on candidate IDB assignments explored per search.
pub const DEFAULT_MODEL_BOUND: u64 = 1 << 22;

fn cartesian(adom: &[String], arity: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..arity {
        let mut next = Vec::new();
        for tup in &out {
            for d in adom {
                let mut t = tup.clone();
                t.push(d.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn ground_atom(
    atom: &DAtom,
    binding: &BTreeMap<String, String>,
) -> Option<Fact> {
    let mut args = Vec::with_capacity(atom.args.len());
    for t in &atom.args {
        match t {
            Term::Const(c) => args.push(c.clone()),
            Term::Var(v) => args.push(binding.get(v)?.clone()),
        }
    }
    Some(Fact { rel: atom.rel.clone(), args })
}

/// Exact certain-answer evaluation by model enumeration.
///
/// A tuple over adom(D) is an answer iff `goal` holds of it in every model of
/// the rules whose EDB part equals D and whose IDB facts range over adom(D).
/// Since `goal` never occurs in bodies, that is equivalent to: no satisfying
/// IDB assignment avoids deriving the tuple. The search is a pruned
/// depth-first enumeration of IDB assignments, capped at `bound` visited
/// candidates per tuple.
pub fn eval_bruteforce(
    prog: &Program,
    inst: &Instance,
    bound: u64,
) -> Result<BTreeSet<Vec<String>>, EvalError> {
    if !prog.safe {
        return Err(EvalError::Unsafe);
    }
    let adom: Vec<String> = inst.adom().into_iter().collect();
    let mut answers = BTreeSet::new();
    if adom.is_empty() {
        if prog.goal_arity == 0 {
            // Only ground rules can fire on the empty instance.
            let ground: Vec<&Rule> = prog
                .rules
                .iter()
                .filter(|r| {
                    r.body.iter().all(|a| a.vars().next().is_none())
                        && r.head.iter().all(|a| a.vars().next().is_none())
                })
                .collect();
            let mut forced = false;
            for r in &ground {
                let body_holds = r.body.iter().all(|a| {
                    let f = ground_atom(a, &BTreeMap::new()).expect("ground");
                    inst.contains(&f)
                });
                if body_holds && r.head.iter().any(|h| h.rel == GOAL) {
                    forced = true;
                }
            }
            if forced {
                answers.insert(Vec::new());
            }
        }
        return Ok(answers);
    }

    // IDB fact table: every IDB fact over adom. Element-major order keeps
    // all facts about one element adjacent, so the search settles each
    // element before moving on and conflicts surface early.
    let mut facts: Vec<Fact> = Vec::new();
    for (rel, &arity) in &prog.idb {
        for args in cartesian(&adom, arity) {
            facts.push(Fact { rel: rel.clone(), args });
        }
    }
    facts.sort_by(|a, b| (&a.args, &a.rel).cmp(&(&b.args, &b.rel)));
    let fact_index: BTreeMap<Fact, usize> =
        facts.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();

    // Ground every rule over adom; drop instantiations made irrelevant by
    // the EDB part of the body (an absent EDB fact satisfies the rule).
    let mut ground_rules: Vec<Clause> = Vec::new();
    let mut inconsistent = false; // a bot rule with satisfied EDB-only body
    for rule in &prog.rules {
        let vars: Vec<String> = {
            let mut seen = BTreeSet::new();
            let mut ordered = Vec::new();
            for a in rule.body.iter().chain(rule.head.iter()) {
                for v in a.vars() {
                    if seen.insert(String::from(v)) {
                        ordered.push(String::from(v));
                    }
                }
            }
            ordered
        };
        'inst: for tuple in cartesian(&adom, vars.len()) {
            let binding: BTreeMap<String, String> =
                vars.iter().cloned().zip(tuple.into_iter()).collect();
            let mut body = Vec::new();
            for atom in &rule.body {
                let f = ground_atom(atom, &binding).expect("body vars bound");
                if prog.idb.contains_key(&f.rel) {
                    body.push(fact_index[&f]);
                } else if f.rel == GOAL {
                    unreachable!("goal not in bodies");
                } else if !inst.contains(&f) {
                    continue 'inst; // EDB literal false: rule satisfied
                }
            }
            let mut head = Vec::new();
            let mut head_goals: Vec<Fact> = Vec::new();
            for atom in &rule.head {
                let f = ground_atom(atom, &binding).expect("head vars bound");
                if f.rel == GOAL {
                    head_goals.push(f);
                } else {
                    head.push(fact_index[&f]);
                }
            }
            if !head_goals.is_empty() {
                // Goal disjuncts are handled per candidate tuple below; the
                // grounded rule is stored with a marker per goal fact.
                ground_rules.push(Clause {
                    body,
                    head: head
                        .into_iter()
                        .chain(head_goals.iter().map(|f| {
                            // goal facts live past the IDB table
                            facts.len() + goal_slot(&adom, f)
                        }))
                        .collect(),
                });
            } else if head.is_empty() && body.is_empty() {
                inconsistent = true;
            } else {
                ground_rules.push(Clause { body, head });
            }
        }
    }

    let goal_tuples = cartesian(&adom, prog.goal_arity);
    if inconsistent {
        // No model extends D at all, so every tuple is certain.
        return Ok(goal_tuples.into_iter().collect());
    }

    let n_idb = facts.len();
    let n_goal = goal_tuples.len();
    for (gi, tuple) in goal_tuples.iter().enumerate() {
        // Countermodel search: goal is maximal except at the candidate
        // tuple, which is legitimate because goal never occurs in bodies.
        let fixed: Vec<(usize, bool)> =
            (0..n_goal).map(|j| (n_idb + j, j != gi)).collect();
        let mut search = Search::new(&ground_rules, n_idb + n_goal, &fixed, bound);
        match search.run() {
            SearchOutcome::Sat => {}
            SearchOutcome::Unsat => {
                answers.insert(tuple.clone());
            }
            SearchOutcome::BoundExceeded => {
                return Err(EvalError::SearchBoundExceeded(bound))
            }
        }
    }
    Ok(answers)
}

fn goal_slot(adom: &[String], fact: &Fact) -> usize {
    let mut slot = 0usize;
    for a in &fact.args {
        let i = adom.iter().position(|d| d == a).expect("goal arg in adom");
        slot = slot * adom.len() + i;
    }
    slot
}
