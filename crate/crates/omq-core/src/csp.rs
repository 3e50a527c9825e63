//! CSP templates with constants: homomorphism search, the OMQ/template
//! compilers, generalized coCSP evaluation, containment, constant collapse,
//! and FO-definability.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::dl::{
    self, Concept, CountermodelSets, Dialect, DlError, OmqQuery, Ontology, QueryKind, Role,
    TypeBits,
};
use crate::rel::{Fact, Instance, RelStructure, Schema};

/// A pointed relational structure: the template of a CSP with constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub structure: RelStructure,
    /// Ordered (constant name, element) pairs; elements lie in the domain.
    pub constants: Vec<(String, String)>,
}

/// A finite set of templates over a shared schema and constant-name list.
/// The empty family defines the always-true co-query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateFamily {
    pub schema: Schema,
    pub constant_names: Vec<String>,
    pub templates: Vec<Template>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CspError {
    ConstantNotInDomain { name: String, element: String },
    SchemaMismatch,
    NonBinarySchema(String),
    TooManyConstants(usize),
    ProductTooLarge { size: usize, bound: usize },
    UnsupportedQuery,
    Dl(DlError),
}

impl fmt::Display for CspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CspError::ConstantNotInDomain { name, element } => {
                write!(f, "constant `{name}` bound to `{element}`, which is not in the domain")
            }
            CspError::SchemaMismatch => write!(f, "template families disagree on schema or constants"),
            CspError::NonBinarySchema(r) => {
                write!(f, "relation `{r}` has arity above 2; the DL constructions need a binary schema")
            }
            CspError::TooManyConstants(n) => {
                write!(f, "family has {n} constants; the OMQ construction supports at most 1")
            }
            CspError::ProductTooLarge { size, bound } => {
                write!(f, "product structure has {size} elements, above the bound {bound}")
            }
            CspError::UnsupportedQuery => write!(f, "query must be atomic or Boolean atomic"),
            CspError::Dl(e) => write!(f, "{e}"),
        }
    }
}

impl From<DlError> for CspError {
    fn from(e: DlError) -> Self {
        CspError::Dl(e)
    }
}

impl Template {
    pub fn new(structure: RelStructure, constants: Vec<(String, String)>) -> Result<Self, CspError> {
        for (name, elem) in &constants {
            if !structure.domain.contains(elem) {
                return Err(CspError::ConstantNotInDomain {
                    name: name.clone(),
                    element: elem.clone(),
                });
            }
        }
        Ok(Template { structure, constants })
    }

    /// Views a pointed instance as a template (domain = active domain).
    pub fn from_pointed_instance(
        inst: &Instance,
        constant_names: &[String],
        point: &[String],
    ) -> Result<Self, CspError> {
        let structure = RelStructure::from_instance(inst);
        let constants = constant_names
            .iter()
            .cloned()
            .zip(point.iter().cloned())
            .collect();
        Template::new(structure, constants)
    }
}

/// Complete backtracking search for a constant-respecting homomorphism.
///
/// Elements are assigned in domain order; after each assignment every fact
/// whose arguments are all assigned must map to a target fact.
pub fn find_hom(src: &Template, tgt: &Template) -> Option<BTreeMap<String, String>> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for ((_, se), (_, te)) in src.constants.iter().zip(tgt.constants.iter()) {
        if let Some(prev) = map.get(se) {
            if prev != te {
                return None;
            }
        }
        map.insert(se.clone(), te.clone());
    }
    let order: Vec<String> =
        src.structure.domain.iter().filter(|e| !map.contains_key(*e)).cloned().collect();
    let tgt_elems: Vec<String> = tgt.structure.domain.iter().cloned().collect();

    fn consistent(map: &BTreeMap<String, String>, src: &Template, tgt: &Template) -> bool {
        src.structure.facts.iter().all(|f| {
            let mut args = Vec::with_capacity(f.args.len());
            for a in &f.args {
                match map.get(a) {
                    Some(b) => args.push(b.clone()),
                    None => return true, // not yet fully assigned
                }
            }
            tgt.structure.contains(&Fact { rel: f.rel.clone(), args })
        })
    }

    if !consistent(&map, src, tgt) {
        return None;
    }

    fn go(
        order: &[String],
        idx: usize,
        tgt_elems: &[String],
        map: &mut BTreeMap<String, String>,
        src: &Template,
        tgt: &Template,
    ) -> bool {
        if idx == order.len() {
            return true;
        }
        for cand in tgt_elems {
            map.insert(order[idx].clone(), cand.clone());
            if consistent(map, src, tgt) && go(order, idx + 1, tgt_elems, map, src, tgt) {
                return true;
            }
            map.remove(&order[idx]);
        }
        false
    }

    if go(&order, 0, &tgt_elems, &mut map, src, tgt) {
        Some(map)
    } else {
        None
    }
}

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

/// Generalized coCSP evaluation: the tuples over adom(D) that admit no
/// pointed homomorphism into any template of the family. The empty family
/// makes every tuple an answer; the empty instance yields no answers.
pub fn eval_cocsp(family: &TemplateFamily, inst: &Instance) -> BTreeSet<Vec<String>> {
    let adom: Vec<String> = inst.adom().into_iter().collect();
    let mut out = BTreeSet::new();
    if adom.is_empty() {
        return out;
    }
    let src_structure = RelStructure::from_instance(inst);
    for tuple in cartesian(&adom, family.constant_names.len()) {
        let src = Template {
            structure: src_structure.clone(),
            constants: family
                .constant_names
                .iter()
                .cloned()
                .zip(tuple.iter().cloned())
                .collect(),
        };
        if family.templates.iter().all(|t| find_hom(&src, t).is_none()) {
            out.insert(tuple);
        }
    }
    out
}

fn check_binary(schema: &Schema) -> Result<(), CspError> {
    for (name, arity) in schema.relations() {
        if *arity > 2 {
            return Err(CspError::NonBinarySchema(name.clone()));
        }
    }
    Ok(())
}

/// The canonical structure over a set of types: one element per type, labels
/// from the data-schema concept names in the type (names the ontology never
/// mentions label every element), and an R-edge for every R-coherent pair.
fn canonical_structure(
    schema: &Schema,
    cms: &CountermodelSets,
    types: &[TypeBits],
) -> RelStructure {
    let name_of = |i: usize| format!("t{i}");
    let domain: BTreeSet<String> = (0..types.len()).map(name_of).collect();
    let mut facts = BTreeSet::new();
    for (i, &tau) in types.iter().enumerate() {
        for b in schema.unary_relations() {
            // a name outside the closure is unconstrained by the ontology,
            // so a countermodel may satisfy it everywhere
            let holds = match cms.closure.index_of(&Concept::name(b)) {
                Some(bi) => dl::type_has(tau, bi),
                None => true,
            };
            if holds {
                facts.insert(Fact::new(b, &[&name_of(i)]));
            }
        }
    }
    for r in schema.binary_relations() {
        let role = Role::name(r);
        for (i, &t1) in types.iter().enumerate() {
            for (j, &t2) in types.iter().enumerate() {
                if dl::r_coherent(t1, t2, &role, &cms.closure) {
                    facts.insert(Fact::new(r, &[&name_of(i), &name_of(j)]));
                }
            }
        }
    }
    RelStructure { schema: schema.clone(), domain, facts }
}

/// Compiles an atomic or Boolean atomic OMQ into a template family.
///
/// For `A(x)` the family contains, per maximal countermodel type set T, the
/// canonical structure over T pointed at each A-free type. For
/// `exists x.A(x)` the templates are the unpointed canonical structures over
/// the maximal type sets realizable with no A element; no such set yields the
/// empty family (the trivially true query).
pub fn aq_omq_to_templates(q: &OmqQuery) -> Result<TemplateFamily, CspError> {
    check_binary(&q.data_schema)?;
    match &q.query {
        QueryKind::Aq(a) => {
            let cms = dl::countermodel_type_sets(&q.ontology, a)?;
            let mut templates = Vec::new();
            for types in &cms.sets {
                let b = canonical_structure(&q.data_schema, &cms, types);
                for (i, &tau) in types.iter().enumerate() {
                    if !dl::type_has(tau, cms.query_idx) {
                        templates.push(Template {
                            structure: b.clone(),
                            constants: vec![(String::from("c1"), format!("t{i}"))],
                        });
                    }
                }
            }
            Ok(TemplateFamily {
                schema: q.data_schema.clone(),
                constant_names: vec![String::from("c1")],
                templates,
            })
        }
        QueryKind::Baq(a) => {
            let cms = dl::countermodel_type_sets_baq(&q.ontology, a)?;
            let templates = cms
                .sets
                .iter()
                .map(|types| Template {
                    structure: canonical_structure(&q.data_schema, &cms, types),
                    constants: Vec::new(),
                })
                .collect();
            Ok(TemplateFamily {
                schema: q.data_schema.clone(),
                constant_names: Vec::new(),
                templates,
            })
        }
        _ => Err(CspError::UnsupportedQuery),
    }
}

fn internalize(lhs: Concept, rhs: Concept) -> Concept {
    Concept::or(Concept::not(lhs), rhs)
}

fn big_or(mut items: Vec<Concept>) -> Concept {
    match items.len() {
        0 => Concept::Bot,
        _ => {
            let first = items.remove(0);
            items.into_iter().fold(first, Concept::or)
        }
    }
}

fn big_and(mut items: Vec<Concept>) -> Concept {
    match items.len() {
        0 => Concept::Top,
        _ => {
            let first = items.remove(0);
            items.into_iter().fold(first, Concept::and)
        }
    }
}

/// Compiles a template family with at most one constant back into an OMQ.
///
/// Per template, fresh names `A_<i>_<d>` label the elements; the axioms say
/// the labels partition the domain, forbid edges and labels absent from the
/// template, and (with a constant) derive the query concept off the
/// designated element. The per-template ontologies are internalized into
/// concepts and combined by a universal-role disjunction.
pub fn templates_to_omq(family: &TemplateFamily) -> Result<OmqQuery, CspError> {
    check_binary(&family.schema)?;
    if family.constant_names.len() > 1 {
        return Err(CspError::TooManyConstants(family.constant_names.len()));
    }
    let pointed = family.constant_names.len() == 1;
    let taken: BTreeSet<String> =
        family.schema.relations().iter().map(|(n, _)| n.clone()).collect();
    let query_name = dl::fresh_name("A_q", &taken);
    let query_concept = Concept::name(&query_name);

    let mut disjuncts = Vec::new();
    for (ti, tmpl) in family.templates.iter().enumerate() {
        let elems: Vec<String> = tmpl.structure.domain.iter().cloned().collect();
        let label = |d: &str| Concept::name(&format!("A_{ti}_{d}"));
        let mut axioms: Vec<Concept> = Vec::new();
        for d in &elems {
            for e in &elems {
                if d != e {
                    axioms.push(internalize(label(d), Concept::not(label(e))));
                }
            }
        }
        for r in family.schema.binary_relations() {
            for d in &elems {
                for e in &elems {
                    if !tmpl.structure.contains(&Fact::new(r, &[d, e])) {
                        axioms.push(internalize(
                            Concept::and(label(d), Concept::exists(Role::name(r), label(e))),
                            Concept::Bot,
                        ));
                    }
                }
            }
        }
        for b in family.schema.unary_relations() {
            for d in &elems {
                if !tmpl.structure.contains(&Fact::new(b, &[d])) {
                    axioms.push(internalize(
                        Concept::and(label(d), Concept::name(b)),
                        Concept::Bot,
                    ));
                }
            }
        }
        axioms.push(internalize(
            Concept::Top,
            big_or(elems.iter().map(|d| label(d)).collect()),
        ));
        if pointed {
            let b = &tmpl.constants[0].1;
            axioms.push(internalize(Concept::not(label(b)), query_concept.clone()));
        }
        disjuncts.push(Concept::forall(Role::Univ, big_and(axioms)));
    }

    let ontology = Ontology::new(
        Dialect::Alcu,
        vec![(Concept::Top, big_or(disjuncts))],
    )
    .expect("ALCU admits the universal role");
    Ok(OmqQuery {
        data_schema: family.schema.clone(),
        ontology,
        query: if pointed {
            QueryKind::Aq(query_name)
        } else {
            QueryKind::Baq(query_name)
        },
    })
}

/// Greedily removes templates that map homomorphically into another remaining
/// template; the co-query is unchanged and the result is pairwise
/// incomparable.
pub fn incomparable_reduce(family: &TemplateFamily) -> TemplateFamily {
    let mut kept: Vec<bool> = vec![true; family.templates.len()];
    for i in 0..family.templates.len() {
        let maps_elsewhere = (0..family.templates.len()).any(|j| {
            j != i && kept[j] && find_hom(&family.templates[i], &family.templates[j]).is_some()
        });
        if maps_elsewhere {
            kept[i] = false;
        }
    }
    TemplateFamily {
        schema: family.schema.clone(),
        constant_names: family.constant_names.clone(),
        templates: family
            .templates
            .iter()
            .zip(kept)
            .filter(|(_, k)| *k)
            .map(|(t, _)| t.clone())
            .collect(),
    }
}

/// Replaces each constant by a fresh singleton unary predicate `P_i`; name
/// collisions with the schema are resolved by suffixing. Returns the
/// constant-free structure and the predicate names used.
pub fn collapse_constants(tmpl: &Template) -> (RelStructure, Vec<String>) {
    let mut schema = tmpl.structure.schema.clone();
    let mut facts = tmpl.structure.facts.clone();
    let mut names = Vec::new();
    for (i, (_, elem)) in tmpl.constants.iter().enumerate() {
        let mut taken: BTreeSet<String> =
            schema.relations().iter().map(|(n, _)| n.clone()).collect();
        taken.extend(names.iter().cloned());
        let p = dl::fresh_name(&format!("P_{}", i + 1), &taken);
        schema.ensure(&p, 1).expect("fresh name");
        facts.insert(Fact::new(&p, &[elem]));
        names.push(p);
    }
    (
        RelStructure { schema, domain: tmpl.structure.domain.clone(), facts },
        names,
    )
}

/// Containment outcome: when the containment fails, the witness is the
/// offending template of the right family, viewed as a pointed instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Containment {
    pub contained: bool,
    pub witness: Option<Template>,
}

/// Decides coCSP(F1) subseteq coCSP(F2): true iff every template of F2 maps
/// homomorphically (respecting constants) into some template of F1.
pub fn contains(f1: &TemplateFamily, f2: &TemplateFamily) -> Result<Containment, CspError> {
    if f1.schema != f2.schema || f1.constant_names.len() != f2.constant_names.len() {
        return Err(CspError::SchemaMismatch);
    }
    for t2 in &f2.templates {
        if f1.templates.iter().all(|t1| find_hom(t2, t1).is_none()) {
            return Ok(Containment { contained: false, witness: Some(t2.clone()) });
        }
    }
    Ok(Containment { contained: true, witness: None })
}

fn as_plain_template(s: &RelStructure) -> Template {
    Template { structure: s.clone(), constants: Vec::new() }
}

/// The core: the minimum-size induced substructure that the structure maps
/// into, found by exhaustive search over subsets in increasing size.
pub fn core_of(b: &RelStructure) -> RelStructure {
    let elems: Vec<String> = b.domain.iter().cloned().collect();
    let n = elems.len();
    for size in 1..n {
        // Subsets of the given size, in lexicographic order of element lists.
        let mut best: Option<RelStructure> = None;
        for mask in 0u64..(1 << n) {
            if (mask.count_ones() as usize) != size {
                continue;
            }
            let keep: BTreeSet<String> = elems
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, e)| e.clone())
                .collect();
            let sub = b.induced(&keep);
            if find_hom(&as_plain_template(b), &as_plain_template(&sub)).is_some() {
                best = Some(sub);
                break;
            }
        }
        if let Some(core) = best {
            return core;
        }
    }
    b.clone()
}

fn product_elem(a: &str, b: &str) -> String {
    format!("{a}|{b}")
}

/// The direct product of a structure with itself.
fn square(b: &RelStructure) -> RelStructure {
    let mut domain = BTreeSet::new();
    for x in &b.domain {
        for y in &b.domain {
            domain.insert(product_elem(x, y));
        }
    }
    let mut facts = BTreeSet::new();
    for f in &b.facts {
        for g in &b.facts {
            if f.rel != g.rel {
                continue;
            }
            let args: Vec<String> =
                f.args.iter().zip(g.args.iter()).map(|(x, y)| product_elem(x, y)).collect();
            facts.insert(Fact {
                rel: f.rel.clone(),
                args,
            });
        }
    }
    RelStructure { schema: b.schema.clone(), domain, facts }
}

/// True iff `y` dominates `x` in the substructure induced by `remaining`:
/// for every fact containing `x`, replacing any nonempty subset of the `x`
/// occurrences by `y` again yields a fact.
fn dominated(b: &RelStructure, remaining: &BTreeSet<String>, x: &str, y: &str) -> bool {
    for f in &b.facts {
        if !f.args.iter().all(|a| remaining.contains(a)) {
            continue;
        }
        let occ: Vec<usize> =
            f.args.iter().enumerate().filter(|(_, a)| *a == x).map(|(i, _)| i).collect();
        if occ.is_empty() {
            continue;
        }
        for mask in 1u32..(1 << occ.len()) {
            let mut args = f.args.clone();
            for (k, &pos) in occ.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    args[pos] = String::from(y);
                }
            }
            if !b.contains(&Fact { rel: f.rel.clone(), args }) {
                return false;
            }
        }
    }
    true
}

/// Whether the square of the structure dismantles onto its diagonal by
/// iterated deletion of dominated off-diagonal elements.
fn square_dismantles_to_diagonal(core: &RelStructure) -> bool {
    let sq = square(core);
    let diagonal: BTreeSet<String> =
        core.domain.iter().map(|x| product_elem(x, x)).collect();
    let mut remaining: BTreeSet<String> = sq.domain.clone();
    loop {
        let victim = remaining.iter().find_map(|x| {
            if diagonal.contains(x) {
                return None;
            }
            remaining
                .iter()
                .find(|y| *y != x && dominated(&sq, &remaining, x, y))
                .map(|_| x.clone())
        });
        match victim {
            Some(x) => {
                remaining.remove(&x);
            }
            None => break,
        }
    }
    remaining == diagonal
}

/// Default bound on the number of elements of the dismantling square.
pub const DEFAULT_PRODUCT_BOUND: usize = 4096;

/// FO-definability of a single constant-free template: take the core, form
/// its square, and check dismantlability onto the diagonal.
pub fn fo_definable_core(b: &RelStructure, max_product: usize) -> Result<bool, CspError> {
    let n = b.domain.len();
    if n * n > max_product {
        return Err(CspError::ProductTooLarge { size: n * n, bound: max_product });
    }
    let core = core_of(b);
    Ok(square_dismantles_to_diagonal(&core))
}

/// FO-definability of a template family: reduce to pairwise incomparable
/// templates, collapse constants, and require every member to pass the core
/// dismantlability check. The empty family is FO-definable.
pub fn fo_definable(family: &TemplateFamily, max_product: usize) -> Result<bool, CspError> {
    let reduced = incomparable_reduce(family);
    for tmpl in &reduced.templates {
        let (collapsed, _) = collapse_constants(tmpl);
        if !fo_definable_core(&collapsed, max_product)? {
            return Ok(false);
        }
    }
    Ok(true)
}
