//! MMSNP, GMSNP, and MMSNP2: formula model, brute-force second-order
//! evaluation, normalization, and a forbidden-patterns membership checker.
//!
//! Free FO variables are treated as distinguished constants during matrix
//! checking: they are instantiated by the candidate answer tuple.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::csp::{find_hom, Template};
use crate::rel::{Fact, Instance, RelStructure, Schema, Term};
use crate::sat::{Clause, Search, SearchOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsnpDialect {
    Mmsnp,
    Gmsnp,
    Mmsnp2,
}

/// What a second-order variable ranges over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SoKind {
    /// Sets of domain elements.
    Monadic,
    /// Sets of k-tuples of domain elements.
    Rel(usize),
    /// Sets of domain elements and facts.
    FactSet,
}

/// An atom of the implication matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum MAtom {
    /// Input-relation atom R(t...).
    Rel { rel: String, args: Vec<Term> },
    /// Second-order atom X(t...).
    So { var: String, args: Vec<Term> },
    /// Fact atom X(R(t...)), MMSNP2 only.
    SoFact { var: String, rel: String, args: Vec<Term> },
    /// Equality t = t.
    Eq(Term, Term),
}

impl MAtom {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            MAtom::Rel { args, .. } | MAtom::So { args, .. } | MAtom::SoFact { args, .. } => {
                let mut out = Vec::new();
                for t in args {
                    if let Term::Var(v) = t {
                        out.push(v.as_str());
                    }
                }
                out
            }
            MAtom::Eq(a, b) => {
                let mut out = Vec::new();
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        out.push(v.as_str());
                    }
                }
                out
            }
        }
    }
}

/// One implication of the matrix; an empty head is falsum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Implication {
    pub body: Vec<MAtom>,
    pub head: Vec<MAtom>,
}

/// A second-order prenex formula with implication matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsnpFormula {
    pub dialect: MsnpDialect,
    pub so_vars: Vec<(String, SoKind)>,
    pub free_vars: Vec<String>,
    pub matrix: Vec<Implication>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MsnpError {
    UnknownSoVar(String),
    HeadInputRelation(String),
    EqualityInHead,
    NonMonadicSoVar(String),
    UnguardedHead(String),
    FactAtomOutsideMmsnp2(String),
    SoArityMismatch { var: String, expected: usize, got: usize },
    SearchBoundExceeded(u64),
    FreeVarInPositiveImplication(String),
}

impl fmt::Display for MsnpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MsnpError::UnknownSoVar(v) => write!(f, "undeclared SO variable `{v}`"),
            MsnpError::HeadInputRelation(r) => {
                write!(f, "head atom over input relation `{r}`; heads admit SO atoms only")
            }
            MsnpError::EqualityInHead => write!(f, "equality atom in a head"),
            MsnpError::NonMonadicSoVar(v) => {
                write!(f, "SO variable `{v}` is not monadic; the MMSNP dialect requires it")
            }
            MsnpError::UnguardedHead(d) => write!(f, "head atom `{d}` has no covering body atom"),
            MsnpError::FactAtomOutsideMmsnp2(v) => {
                write!(f, "fact atom over `{v}` outside the MMSNP2 dialect")
            }
            MsnpError::SoArityMismatch { var, expected, got } => {
                write!(f, "SO variable `{var}` has arity {expected}, atom has {got} arguments")
            }
            MsnpError::SearchBoundExceeded(b) => {
                write!(f, "second-order search exceeded the bound of {b} assignments")
            }
            MsnpError::FreeVarInPositiveImplication(v) => {
                write!(f, "free variable `{v}` occurs in an implication with non-empty head; only falsum implications may mention free variables when compiling to datalog")
            }
        }
    }
}

fn atom_display(a: &MAtom) -> String {
    match a {
        MAtom::Rel { rel, .. } => format!("{rel}(..)"),
        MAtom::So { var, .. } => format!("{var}(..)"),
        MAtom::SoFact { var, rel, .. } => format!("{var}({rel}(..))"),
        MAtom::Eq(..) => String::from("=(..)"),
    }
}

fn covered(head: &MAtom, body: &[MAtom]) -> bool {
    let hv: BTreeSet<&str> = head.vars().into_iter().collect();
    body.iter().any(|b| {
        let bv: BTreeSet<&str> = b.vars().into_iter().collect();
        hv.iter().all(|v| bv.contains(v))
    })
}

impl MsnpFormula {
    /// Validates the dialect invariants: heads carry SO atoms only; MMSNP
    /// requires monadic SO variables; GMSNP requires every head atom to be
    /// covered by one body atom; MMSNP2 requires each head fact atom's
    /// guard to occur in the body.
    pub fn validate(&self) -> Result<(), MsnpError> {
        let kind_of = |v: &str| self.so_vars.iter().find(|(n, _)| n == v).map(|(_, k)| k);
        let check_so = |var: &String, args: &Vec<Term>| -> Result<(), MsnpError> {
            match kind_of(var) {
                None => Err(MsnpError::UnknownSoVar(var.clone())),
                Some(SoKind::Monadic) | Some(SoKind::FactSet) => {
                    if args.len() != 1 {
                        Err(MsnpError::SoArityMismatch {
                            var: var.clone(),
                            expected: 1,
                            got: args.len(),
                        })
                    } else {
                        Ok(())
                    }
                }
                Some(SoKind::Rel(k)) => {
                    if args.len() != *k {
                        Err(MsnpError::SoArityMismatch {
                            var: var.clone(),
                            expected: *k,
                            got: args.len(),
                        })
                    } else {
                        Ok(())
                    }
                }
            }
        };
        for imp in &self.matrix {
            for a in imp.body.iter().chain(imp.head.iter()) {
                match a {
                    MAtom::So { var, args } => check_so(var, args)?,
                    MAtom::SoFact { var, .. } => {
                        if self.dialect != MsnpDialect::Mmsnp2 {
                            return Err(MsnpError::FactAtomOutsideMmsnp2(var.clone()));
                        }
                        if kind_of(var).is_none() {
                            return Err(MsnpError::UnknownSoVar(var.clone()));
                        }
                    }
                    _ => {}
                }
            }
            for h in &imp.head {
                match h {
                    MAtom::Rel { rel, .. } => {
                        return Err(MsnpError::HeadInputRelation(rel.clone()))
                    }
                    MAtom::Eq(..) => return Err(MsnpError::EqualityInHead),
                    MAtom::So { var, .. } => {
                        if self.dialect == MsnpDialect::Mmsnp {
                            if !matches!(kind_of(var), Some(SoKind::Monadic)) {
                                return Err(MsnpError::NonMonadicSoVar(var.clone()));
                            }
                        }
                        if self.dialect == MsnpDialect::Gmsnp && !covered(h, &imp.body) {
                            return Err(MsnpError::UnguardedHead(atom_display(h)));
                        }
                    }
                    MAtom::SoFact { var, rel, args } => {
                        let guard = MAtom::Rel { rel: rel.clone(), args: args.clone() };
                        if !imp.body.contains(&guard) {
                            return Err(MsnpError::UnguardedHead(format!("{var}({rel}(..))")));
                        }
                    }
                }
            }
            if self.dialect == MsnpDialect::Mmsnp {
                for a in imp.body.iter() {
                    if let MAtom::So { var, .. } = a {
                        if !matches!(kind_of(var), Some(SoKind::Monadic)) {
                            return Err(MsnpError::NonMonadicSoVar(var.clone()));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// True iff every head atom's variables are covered by a single body atom.
pub fn check_guarded(formula: &MsnpFormula) -> bool {
    formula
        .matrix
        .iter()
        .all(|imp| imp.head.iter().all(|h| covered(h, &imp.body)))
}

fn substitute_term(t: &Term, from: &str, to: &Term) -> Term {
    match t {
        Term::Var(v) if v == from => to.clone(),
        _ => t.clone(),
    }
}

fn substitute_atom(a: &MAtom, from: &str, to: &Term) -> MAtom {
    let sub = |args: &[Term]| args.iter().map(|t| substitute_term(t, from, to)).collect();
    match a {
        MAtom::Rel { rel, args } => MAtom::Rel { rel: rel.clone(), args: sub(args) },
        MAtom::So { var, args } => MAtom::So { var: var.clone(), args: sub(args) },
        MAtom::SoFact { var, rel, args } => {
            MAtom::SoFact { var: var.clone(), rel: rel.clone(), args: sub(args) }
        }
        MAtom::Eq(l, r) => MAtom::Eq(substitute_term(l, from, to), substitute_term(r, from, to)),
    }
}

fn substitute_implication(imp: &Implication, from: &str, to: &Term) -> Implication {
    Implication {
        body: imp.body.iter().map(|a| substitute_atom(a, from, to)).collect(),
        head: imp.head.iter().map(|a| substitute_atom(a, from, to)).collect(),
    }
}

/// Eliminates body equalities by unification. Free variables survive
/// unification; an equality between two free variables (or distinct
/// constants) is left in place since it constrains the answer tuple.
pub fn unify_equalities(imp: &Implication, free_vars: &[String]) -> Implication {
    let is_free = |v: &str| free_vars.iter().any(|f| f == v);
    let mut imp = imp.clone();
    loop {
        let mut action: Option<(String, Term)> = None;
        for a in &imp.body {
            if let MAtom::Eq(l, r) = a {
                match (l, r) {
                    (Term::Var(x), t @ Term::Const(_)) => {
                        action = Some((x.clone(), t.clone()));
                    }
                    (t @ Term::Const(_), Term::Var(x)) => {
                        action = Some((x.clone(), t.clone()));
                    }
                    (Term::Var(x), Term::Var(y)) if x == y => {
                        action = Some((x.clone(), Term::Var(x.clone())));
                    }
                    (Term::Var(x), Term::Var(y)) => match (is_free(x), is_free(y)) {
                        (true, true) => continue,
                        (true, false) => action = Some((y.clone(), Term::Var(x.clone()))),
                        _ => action = Some((x.clone(), Term::Var(y.clone()))),
                    },
                    _ => continue,
                }
                if action.is_some() {
                    break;
                }
            }
        }
        match action {
            None => return imp,
            Some((from, to)) => {
                imp.body.retain(|a| {
                    !matches!(a, MAtom::Eq(l, r)
                        if (l == &Term::Var(from.clone()) && r == &to)
                        || (r == &Term::Var(from.clone()) && l == &to)
                        || (l == r))
                });
                imp = substitute_implication(&imp, &from, &to);
            }
        }
    }
}

/// Brings an MMSNP formula into the shape the datalog compiler expects:
/// non-empty bodies and every head variable bound in the body. Violating
/// implications are replaced by the family obtained by adding, per unguarded
/// variable, each possible input-relation atom containing it (fresh
/// variables elsewhere); body equalities are unified away.
pub fn normalize_msnp(formula: &MsnpFormula, schema: &Schema) -> MsnpFormula {
    let mut fresh_counter = 0usize;
    let mut all_vars: BTreeSet<String> = formula.free_vars.iter().cloned().collect();
    for imp in &formula.matrix {
        for a in imp.body.iter().chain(imp.head.iter()) {
            for v in a.vars() {
                all_vars.insert(String::from(v));
            }
        }
    }
    let mut fresh = |all_vars: &mut BTreeSet<String>| -> String {
        loop {
            fresh_counter += 1;
            let cand = format!("u{fresh_counter}");
            if all_vars.insert(cand.clone()) {
                return cand;
            }
        }
    };

    let mut out: Vec<Implication> = Vec::new();
    for imp in &formula.matrix {
        let imp = unify_equalities(imp, &formula.free_vars);
        let body_vars: BTreeSet<String> = imp
            .body
            .iter()
            .flat_map(|a| a.vars().into_iter().map(String::from))
            .collect();
        let mut unguarded: Vec<String> = Vec::new();
        for h in &imp.head {
            for v in h.vars() {
                if !body_vars.contains(v) && !unguarded.iter().any(|u| u == v) {
                    unguarded.push(String::from(v));
                }
            }
        }
        let needs_body = imp.body.is_empty() && unguarded.is_empty();
        if unguarded.is_empty() && !needs_body {
            if !out.contains(&imp) {
                out.push(imp);
            }
            continue;
        }
        // Per unguarded variable (or once, for a ground empty body), a guard
        // atom is chosen from every relation/position; the replacement set is
        // the cross product of the choices.
        let mut variants: Vec<Implication> = vec![imp.clone()];
        let slots: Vec<Option<String>> = if needs_body {
            vec![None]
        } else {
            unguarded.into_iter().map(Some).collect()
        };
        for slot in slots {
            let mut next = Vec::new();
            for variant in &variants {
                for (rel, arity) in schema.relations() {
                    if *arity == 0 {
                        continue;
                    }
                    let positions: Vec<usize> = match &slot {
                        Some(_) => (0..*arity).collect(),
                        None => vec![0], // ground case: one guard per relation
                    };
                    for pos in &positions {
                        let mut args = Vec::with_capacity(*arity);
                        for i in 0..*arity {
                            if let (Some(v), true) = (&slot, i == *pos) {
                                args.push(Term::Var(v.clone()));
                            } else {
                                args.push(Term::Var(fresh(&mut all_vars)));
                            }
                        }
                        let mut v = variant.clone();
                        v.body.push(MAtom::Rel { rel: rel.clone(), args });
                        next.push(v);
                    }
                }
            }
            variants = next;
        }
        for v in variants {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    MsnpFormula {
        dialect: formula.dialect,
        so_vars: formula.so_vars.clone(),
        free_vars: formula.free_vars.clone(),
        matrix: out,
    }
}

/// Default bound on second-order assignments tried per candidate tuple.
pub const DEFAULT_SO_BOUND: u64 = 1 << 22;

fn resolve(t: &Term, binding: &BTreeMap<String, String>) -> Option<String> {
    match t {
        Term::Const(c) => Some(c.clone()),
        Term::Var(v) => binding.get(v).cloned(),
    }
}

fn tuples_over(adom: &[String], k: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for t in &out {
            for d in adom {
                let mut u = t.clone();
                u.push(d.clone());
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// Identifies one boolean of a second-order assignment: either "tuple t is in
/// X" or, for fact-set variables, "element e is in X" / "fact f is in X".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum BitKey {
    Tuple(Vec<String>),
    Elem(String),
    Fct(Fact),
}

fn so_bit_table(
    formula: &MsnpFormula,
    adom: &[String],
    inst: &Instance,
) -> BTreeMap<(String, BitKey), usize> {
    let mut table = BTreeMap::new();
    let mut next = 0usize;
    for (name, kind) in &formula.so_vars {
        match kind {
            SoKind::Monadic | SoKind::Rel(_) => {
                let k = match kind {
                    SoKind::Rel(k) => *k,
                    _ => 1,
                };
                for t in tuples_over(adom, k) {
                    table.insert((name.clone(), BitKey::Tuple(t)), next);
                    next += 1;
                }
            }
            SoKind::FactSet => {
                for e in adom {
                    table.insert((name.clone(), BitKey::Elem(e.clone())), next);
                    next += 1;
                }
                for f in &inst.facts {
                    table.insert((name.clone(), BitKey::Fct(f.clone())), next);
                    next += 1;
                }
            }
        }
    }
    table
}

enum AtomVal {
    True,
    False,
    Bit(usize),
}

fn atom_bit(
    atom: &MAtom,
    formula: &MsnpFormula,
    inst: &Instance,
    bits: &BTreeMap<(String, BitKey), usize>,
    binding: &BTreeMap<String, String>,
) -> AtomVal {
    let args_of = |args: &[Term]| -> Vec<String> {
        args.iter()
            .map(|t| resolve(t, binding).expect("all variables bound"))
            .collect()
    };
    match atom {
        MAtom::Rel { rel, args } => {
            if inst.contains(&Fact { rel: rel.clone(), args: args_of(args) }) {
                AtomVal::True
            } else {
                AtomVal::False
            }
        }
        MAtom::Eq(l, r) => {
            let (a, b) = (
                resolve(l, binding).expect("bound"),
                resolve(r, binding).expect("bound"),
            );
            if a == b {
                AtomVal::True
            } else {
                AtomVal::False
            }
        }
        MAtom::So { var, args } => {
            let kind = formula
                .so_vars
                .iter()
                .find(|(n, _)| n == var)
                .map(|(_, k)| k)
                .expect("validated");
            let key = match kind {
                SoKind::FactSet => BitKey::Elem(args_of(args).remove(0)),
                _ => BitKey::Tuple(args_of(args)),
            };
            // A constant outside the active domain can never be in an SO set.
            match bits.get(&(var.clone(), key)) {
                Some(&i) => AtomVal::Bit(i),
                None => AtomVal::False,
            }
        }
        MAtom::SoFact { var, rel, args } => {
            let f = Fact { rel: rel.clone(), args: args_of(args) };
            // Fact-set variables hold facts of the instance only.
            if !inst.contains(&f) {
                return AtomVal::False;
            }
            match bits.get(&(var.clone(), BitKey::Fct(f))) {
                Some(&i) => AtomVal::Bit(i),
                None => AtomVal::False,
            }
        }
    }
}

/// Grounds the matrix over the active domain into clauses on SO bits.
/// Instantiations whose first-order part already fails are dropped.
fn ground_matrix(
    formula: &MsnpFormula,
    inst: &Instance,
    adom: &[String],
    bits: &BTreeMap<(String, BitKey), usize>,
    tuple_binding: &BTreeMap<String, String>,
) -> Vec<Clause> {
    let mut clauses = Vec::new();
    for imp in &formula.matrix {
        let mut vars: Vec<String> = Vec::new();
        for a in imp.body.iter().chain(imp.head.iter()) {
            for v in a.vars() {
                if !tuple_binding.contains_key(v) && !vars.iter().any(|w| w == v) {
                    vars.push(String::from(v));
                }
            }
        }
        'inst: for tuple in tuples_over(adom, vars.len()) {
            let mut binding = tuple_binding.clone();
            for (v, d) in vars.iter().zip(tuple.into_iter()) {
                binding.insert(v.clone(), d);
            }
            let mut body: Vec<usize> = Vec::new();
            for a in &imp.body {
                match atom_bit(a, formula, inst, bits, &binding) {
                    AtomVal::True => {}
                    AtomVal::False => continue 'inst,
                    AtomVal::Bit(i) => {
                        if !body.contains(&i) {
                            body.push(i);
                        }
                    }
                }
            }
            let mut head: Vec<usize> = Vec::new();
            let mut head_true = false;
            for a in &imp.head {
                match atom_bit(a, formula, inst, bits, &binding) {
                    AtomVal::True => head_true = true,
                    AtomVal::False => {}
                    AtomVal::Bit(i) => {
                        if !head.contains(&i) {
                            head.push(i);
                        }
                    }
                }
            }
            if head_true {
                continue;
            }
            clauses.push(Clause { body, head });
        }
    }
    clauses
}

/// Brute-force co-query evaluation: the tuples over adom(D) for which no
/// second-order assignment satisfies the matrix. The matrix is grounded over
/// the active domain and searched as a clause system over SO membership bits;
/// `bound` caps the visited search nodes. The empty instance yields no
/// answers (a sentence is true on the empty instance by convention).
pub fn eval_msnp(
    formula: &MsnpFormula,
    inst: &Instance,
    bound: u64,
) -> Result<BTreeSet<Vec<String>>, MsnpError> {
    formula.validate()?;
    let adom: Vec<String> = inst.adom().into_iter().collect();
    let mut out = BTreeSet::new();
    if adom.is_empty() {
        return Ok(out);
    }
    let bits = so_bit_table(formula, &adom, inst);
    for tuple in tuples_over(&adom, formula.free_vars.len()) {
        let tuple_binding: BTreeMap<String, String> =
            formula.free_vars.iter().cloned().zip(tuple.iter().cloned()).collect();
        let clauses = ground_matrix(formula, inst, &adom, &bits, &tuple_binding);
        let mut search = Search::new(&clauses, bits.len(), &[], bound);
        match search.run() {
            SearchOutcome::Sat => {}
            SearchOutcome::Unsat => {
                out.insert(tuple);
            }
            SearchOutcome::BoundExceeded => {
                return Err(MsnpError::SearchBoundExceeded(bound))
            }
        }
    }
    Ok(out)
}

/// A structure where every element carries exactly one color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredStructure {
    pub base: RelStructure,
    pub colors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternError {
    UncoloredElement(String),
    UnknownColor { element: String, color: String },
    SizeBoundExceeded(usize),
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternError::UncoloredElement(e) => write!(f, "element `{e}` has no color"),
            PatternError::UnknownColor { element, color } => {
                write!(f, "element `{element}` colored with undeclared color `{color}`")
            }
            PatternError::SizeBoundExceeded(n) => {
                write!(f, "instance has {n} elements, above the coloring bound")
            }
        }
    }
}

impl ColoredStructure {
    pub fn new(
        base: RelStructure,
        colors: BTreeMap<String, String>,
        color_set: &[String],
    ) -> Result<Self, PatternError> {
        for e in &base.domain {
            match colors.get(e) {
                None => return Err(PatternError::UncoloredElement(e.clone())),
                Some(c) if !color_set.iter().any(|x| x == c) => {
                    return Err(PatternError::UnknownColor {
                        element: e.clone(),
                        color: c.clone(),
                    })
                }
                _ => {}
            }
        }
        Ok(ColoredStructure { base, colors })
    }
}

fn with_color_facts(s: &RelStructure, colors: &BTreeMap<String, String>) -> RelStructure {
    let mut schema = s.schema.clone();
    let mut facts = s.facts.clone();
    for (elem, color) in colors {
        let rel = format!("color_{color}");
        schema.ensure(&rel, 1).expect("color relations are fresh or consistent");
        facts.insert(Fact::new(&rel, &[elem]));
    }
    RelStructure { schema, domain: s.domain.clone(), facts }
}

/// Membership test for the forbidden patterns problem: true iff some coloring
/// of the instance admits no color-preserving homomorphism from any pattern.
pub fn forb_membership(
    patterns: &[ColoredStructure],
    colors: &[String],
    inst: &Instance,
    max_elements: usize,
) -> Result<bool, PatternError> {
    let adom: Vec<String> = inst.adom().into_iter().collect();
    if adom.len() > max_elements {
        return Err(PatternError::SizeBoundExceeded(adom.len()));
    }
    if patterns.is_empty() {
        return Ok(true);
    }
    if colors.is_empty() {
        // No coloring exists for a non-empty instance.
        return Ok(adom.is_empty());
    }
    let base = RelStructure::from_instance(inst);
    let colored_patterns: Vec<Template> = patterns
        .iter()
        .map(|p| Template {
            structure: with_color_facts(&p.base, &p.colors),
            constants: Vec::new(),
        })
        .collect();
    let mut assignment = vec![0usize; adom.len()];
    loop {
        let coloring: BTreeMap<String, String> = adom
            .iter()
            .zip(assignment.iter())
            .map(|(e, &c)| (e.clone(), colors[c].clone()))
            .collect();
        let target = Template { structure: with_color_facts(&base, &coloring), constants: Vec::new() };
        if colored_patterns.iter().all(|p| find_hom(p, &target).is_none()) {
            return Ok(true);
        }
        let mut k = 0;
        loop {
            if k == adom.len() {
                return Ok(false);
            }
            assignment[k] += 1;
            if assignment[k] < colors.len() {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
    }
}
