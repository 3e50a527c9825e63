//! Parser and printer checks for every text format: hand-written inputs
//! against expected ASTs, printer/parser round trips, and diagnostics.

use omq_core::ddlog::{eval_bruteforce, DAtom, Program, Rule, DEFAULT_MODEL_BOUND};
use omq_core::dl::{Concept, Dialect, QueryKind, Role};
use omq_core::msnp::{Implication, MAtom, MsnpDialect, SoKind};
use omq_core::rel::{Atom, Fact, Instance, Schema, Term};
use omq_tools::text::{
    detect_format, parse_family, parse_instance, parse_msnp, parse_omq, parse_ontology,
    parse_patterns, parse_program, write_family, write_instance, write_msnp, write_omq,
    write_program, Format,
};

fn var(v: &str) -> Term {
    Term::var(v)
}

#[test]
fn fact_lists_parse_with_set_semantics() {
    let inst = parse_instance("A(a). R(a,b).\nR(a,b).").unwrap();
    assert_eq!(inst.facts.len(), 2);
    assert!(inst.contains(&Fact::new("A", &["a"])));
    assert!(inst.contains(&Fact::new("R", &["a", "b"])));
    let adom: Vec<String> = inst.adom().into_iter().collect();
    assert_eq!(adom, ["a", "b"]);
}

#[test]
fn the_empty_fact_list_is_the_empty_instance() {
    let inst = parse_instance("").unwrap();
    assert!(inst.facts.is_empty());
    assert!(inst.adom().is_empty());

    let commented = parse_instance("# nothing here\n\n# still nothing\n").unwrap();
    assert!(commented.facts.is_empty());
}

#[test]
fn schema_headers_declare_unused_relations() {
    let inst = parse_instance("schema A/1 R/2 Unused/3\nA(a).").unwrap();
    assert_eq!(inst.schema.arity("Unused"), Some(3));
    assert_eq!(inst.schema.arity("R"), Some(2));
}

#[test]
fn fact_arity_conflicts_are_reported_with_their_line() {
    let e = parse_instance("A(a).\nA(a,b).").unwrap_err();
    assert_eq!(e.line, 2);

    let e = parse_instance("schema A/1\nB(a).").unwrap_err();
    assert_eq!(e.line, 2);
}

#[test]
fn instances_round_trip_through_their_text_form() {
    let inst = parse_instance("schema A/1 R/2\nA(a). R(a,b). R(b,a).").unwrap();
    let text = write_instance(&inst);
    assert_eq!(parse_instance(&text).unwrap(), inst);
    // stable under a second pass
    assert_eq!(write_instance(&parse_instance(&text).unwrap()), text);
}

#[test]
fn ontology_axioms_parse_into_the_expected_ast() {
    let onto = parse_ontology("exists parent . HD sub HD").unwrap();
    assert_eq!(onto.dialect, Dialect::Alc);
    assert_eq!(
        onto.inclusions,
        vec![(
            Concept::exists(Role::name("parent"), Concept::name("HD")),
            Concept::name("HD")
        )]
    );

    let onto = parse_ontology("top sub top\n(A or B) sub C").unwrap();
    assert_eq!(onto.inclusions.len(), 2);
    assert_eq!(
        onto.inclusions[1],
        (Concept::or(Concept::name("A"), Concept::name("B")), Concept::name("C"))
    );
}

#[test]
fn the_universal_role_switches_the_dialect() {
    let onto = parse_ontology("A sub exists univ . B").unwrap();
    assert_eq!(onto.dialect, Dialect::Alcu);
}

#[test]
fn nested_concepts_survive_printing_and_reparsing() {
    let text = "schema A/1 r/2\naxiom (A and not (B or forall r . bot)) sub exists r . (top and not A)\nquery conq exists r . A\n";
    let q = parse_omq(text).unwrap();
    let printed = write_omq(&q);
    assert_eq!(parse_omq(&printed).unwrap(), q);
    assert_eq!(printed, write_omq(&parse_omq(&printed).unwrap()));
}

#[test]
fn omq_bundles_carry_schema_axioms_and_query() {
    let q = parse_omq("schema HD/1 parent/2\naxiom exists parent . HD sub HD\nquery aq HD\n")
        .unwrap();
    assert_eq!(q.data_schema.arity("parent"), Some(2));
    assert_eq!(q.ontology.inclusions.len(), 1);
    assert_eq!(q.query, QueryKind::Aq(String::from("HD")));

    let q = parse_omq("schema A/1\nquery baq A\n").unwrap();
    assert_eq!(q.query, QueryKind::Baq(String::from("A")));
}

#[test]
fn ucq_queries_use_bracketed_answer_lists() {
    let q = parse_omq(
        "schema L/1 M/1 R/2\nquery ucq [X] L(X), R(X,Y), X = Y | [Z] M(Z)\n",
    )
    .unwrap();
    let u = match &q.query {
        QueryKind::Ucq(u) => u,
        _ => panic!("expected a ucq"),
    };
    assert_eq!(u.disjuncts.len(), 2);
    assert_eq!(u.disjuncts[0].answer_vars, ["X"]);
    assert_eq!(
        u.disjuncts[0].atoms[2],
        Atom::Eq(var("X"), var("Y"))
    );
    assert_eq!(u.disjuncts[1].atoms, vec![Atom::rel("M", &[var("Z")])]);

    let printed = write_omq(&q);
    let reparsed = parse_omq(&printed).unwrap();
    assert_eq!(printed, write_omq(&reparsed));
}

#[test]
fn lowercase_identifiers_in_queries_are_constants() {
    let q = parse_omq("schema R/2\nquery ucq [X] R(X,abc)\n").unwrap();
    match &q.query {
        QueryKind::Ucq(u) => {
            assert_eq!(u.disjuncts[0].atoms[0], Atom::rel("R", &[var("X"), Term::cons("abc")]));
        }
        _ => panic!("expected a ucq"),
    }
}

#[test]
fn omq_bundles_reject_missing_pieces_and_bad_arities() {
    assert!(parse_omq("query aq A\n").is_err());
    assert!(parse_omq("schema A/1\n").is_err());
    let e = parse_omq("schema A/1\nquery ucq [X] A(X,Y)\n").unwrap_err();
    assert_eq!(e.line, 2);
    let e = parse_omq("schema A/1\nquery ucq [X] B(X)\n").unwrap_err();
    assert_eq!(e.line, 2);
}

#[test]
fn datalog_rules_parse_with_disjunction_and_falsum_heads() {
    let prog = parse_program(
        "P1(X) ; P2(Y) :- R(X,Y).\nbot :- P1(X), P2(X).\ngoal(X) :- P1(X).\n",
    )
    .unwrap();
    assert_eq!(prog.rules.len(), 3);
    assert_eq!(prog.rules[0].head.len(), 2);
    assert!(prog.rules[1].head.is_empty());
    assert_eq!(prog.goal_arity, 1);
    // EDB inferred: R occurs in a body and in no head
    assert_eq!(prog.edb.relations(), [(String::from("R"), 2)]);
}

#[test]
fn the_adom_directive_expands_over_the_declared_schema() {
    let prog = parse_program("schema A/1 R/2\nadom.\ngoal(X) :- adom(X).\n").unwrap();
    // one rule per EDB position plus the goal rule
    assert_eq!(prog.rules.len(), 4);
    let inst = parse_instance("R(a,b).").unwrap();
    let ans = eval_bruteforce(&prog, &inst, DEFAULT_MODEL_BOUND).unwrap();
    assert_eq!(ans.len(), 2);
}

#[test]
fn programs_print_to_a_stable_reparseable_form() {
    let prog = parse_program(
        "schema A/1 R/2\nP(X) ; Q(X) :- A(X).\nbot :- P(X), R(X,Y), Q(Y).\ngoal(X) :- Q(X).\n",
    )
    .unwrap();
    let text = write_program(&prog);
    let reparsed = parse_program(&text).unwrap();
    assert_eq!(write_program(&reparsed), text);
    // same answers on a small instance
    let inst = parse_instance("A(a). A(b). R(a,b).").unwrap();
    assert_eq!(
        eval_bruteforce(&prog, &inst, DEFAULT_MODEL_BOUND).unwrap(),
        eval_bruteforce(&reparsed, &inst, DEFAULT_MODEL_BOUND).unwrap()
    );
}

#[test]
fn datalog_constants_are_lowercase_identifiers() {
    let prog = parse_program("schema A/1\ngoal(X) :- A(X), A(c).\n").unwrap();
    assert_eq!(
        prog.rules[0].body[1],
        DAtom::new("A", &[Term::cons("c")])
    );
}

#[test]
fn msnp_files_parse_all_three_dialects() {
    let (f, schema) = parse_msnp(
        "msnp mmsnp\nsovar C1 monadic\nsovar C2 monadic\nfreevar y\nimp E(x,y), C1(x), C1(y) -> false\nimp adom(x) -> C1(x) ; C2(x)\n",
    )
    .unwrap();
    assert_eq!(f.dialect, MsnpDialect::Mmsnp);
    assert_eq!(f.so_vars.len(), 2);
    assert_eq!(f.free_vars, ["y"]);
    assert!(f.matrix[0].head.is_empty());
    assert_eq!(schema.arity("E"), Some(2));
    assert_eq!(schema.arity("adom"), Some(1));

    let (g, _) = parse_msnp(
        "msnp gmsnp\nsovar X rel/2\nimp E(x,y) -> X(x,y)\n",
    )
    .unwrap();
    assert_eq!(g.so_vars[0], (String::from("X"), SoKind::Rel(2)));

    let (h, _) = parse_msnp(
        "msnp mmsnp2\nsovar F factset\nimp E(x,y) -> F(E(x,y))\nimp F(E(x,y)) -> F(x)\n",
    )
    .unwrap();
    assert_eq!(h.so_vars[0], (String::from("F"), SoKind::FactSet));
    assert_eq!(
        h.matrix[0].head[0],
        MAtom::SoFact { var: String::from("F"), rel: String::from("E"), args: vec![var("x"), var("y")] }
    );
}

#[test]
fn msnp_quoted_terms_are_constants() {
    let (f, _) = parse_msnp("msnp mmsnp\nsovar C monadic\nimp A('c'), x = 'c' -> C(x)\n").unwrap();
    assert_eq!(
        f.matrix[0].body[0],
        MAtom::Rel { rel: String::from("A"), args: vec![Term::cons("c")] }
    );
    assert_eq!(f.matrix[0].body[1], MAtom::Eq(var("x"), Term::cons("c")));
}

#[test]
fn msnp_files_round_trip_exactly() {
    let (f, schema) = parse_msnp(
        "msnp mmsnp2\nschema E/2\nsovar C monadic\nsovar F factset\nimp E(x,y), C(x) -> F(E(x,y)) ; C(y)\nimp C(x), x = y -> false\n",
    )
    .unwrap();
    let text = write_msnp(&f, &schema);
    let (g, schema2) = parse_msnp(&text).unwrap();
    assert_eq!(f, g);
    assert_eq!(schema, schema2);
    assert_eq!(write_msnp(&g, &schema2), text);
}

#[test]
fn msnp_validation_failures_surface_as_diagnostics() {
    // undeclared second-order variable in head position
    assert!(parse_msnp("msnp mmsnp\nimp A(x) -> C(x)\n").is_err());
    // fact atoms outside mmsnp2
    assert!(parse_msnp("msnp mmsnp\nsovar F factset\nimp E(x,y) -> F(E(x,y))\n").is_err());
}

#[test]
fn template_families_parse_blocks_and_constants() {
    let family = parse_family(
        "schema A/1 R/2\nconstants c1\ndomain t0 t1\nconst c1 = t0\nfact A(t1)\nfact R(t0,t1)\n---\ndomain s\nconst c1 = s\nfact R(s,s)\n",
    )
    .unwrap();
    assert_eq!(family.templates.len(), 2);
    assert_eq!(family.constant_names, ["c1"]);
    assert_eq!(family.templates[0].constants, [(String::from("c1"), String::from("t0"))]);
    assert!(family.templates[1].structure.contains(&Fact::new("R", &["s", "s"])));

    let text = write_family(&family);
    let reparsed = parse_family(&text).unwrap();
    assert_eq!(reparsed, family);
    assert_eq!(write_family(&reparsed), text);
}

#[test]
fn template_families_may_be_empty_or_unpointed() {
    let family = parse_family("schema E/2\n").unwrap();
    assert!(family.templates.is_empty());
    assert!(family.constant_names.is_empty());

    let family = parse_family("domain a b\nfact E(a,b)\nfact E(b,a)\n").unwrap();
    assert_eq!(family.templates.len(), 1);
    assert!(family.constant_names.is_empty());
}

#[test]
fn template_families_reject_inconsistent_blocks() {
    // constant bound to an element outside the domain
    assert!(parse_family("domain a\nconst c1 = b\n").is_err());
    // blocks disagreeing on constant names
    let e = parse_family("domain a\nconst c1 = a\n---\ndomain b\nconst c2 = b\n").unwrap_err();
    assert_eq!(e.line, 4);
}

#[test]
fn pattern_files_parse_colors_and_blocks() {
    let (patterns, colors) = parse_patterns(
        "colors red blue\nE(a,b)\ncolor(a)=red\ncolor(b)=red\n---\nE(a,b)\ncolor(a)=blue\ncolor(b)=blue\n",
    )
    .unwrap();
    assert_eq!(colors, ["red", "blue"]);
    assert_eq!(patterns.len(), 2);
    assert_eq!(patterns[0].colors["a"], "red");
    assert!(patterns[1].base.contains(&Fact::new("E", &["a", "b"])));

    // coloring must cover every element with a declared color
    assert!(parse_patterns("colors red\nE(a,b)\ncolor(a)=red\n").is_err());
    assert!(parse_patterns("colors red\nE(a,b)\ncolor(a)=red\ncolor(b)=green\n").is_err());
}

#[test]
fn formats_are_detected_by_their_leading_keywords() {
    assert_eq!(detect_format("A(a). R(a,b)."), Format::Instance);
    assert_eq!(detect_format("schema A/1\nA(a)."), Format::Instance);
    assert_eq!(detect_format("schema A/1\naxiom A sub B\nquery aq A\n"), Format::Omq);
    assert_eq!(detect_format("exists r . A sub B\n"), Format::Ontology);
    assert_eq!(detect_format("schema A/1\ngoal(X) :- A(X).\n"), Format::Datalog);
    assert_eq!(detect_format("msnp mmsnp\n"), Format::Msnp);
    assert_eq!(detect_format("domain a b\nfact E(a,b)\n"), Format::Family);
    assert_eq!(detect_format("# comment first\ncolors red\nE(a,b)\ncolor(a)=red\n"), Format::Patterns);
}

#[test]
fn compiled_artifacts_reparse_to_equivalent_programs() {
    // full pipeline through text: OMQ text -> program -> text -> program
    let q = parse_omq(
        "schema B/1 parent/2\naxiom exists parent . B sub B\nquery aq B\n",
    )
    .unwrap();
    let prog = omq_core::translate::aq_omq_to_mddlog(&q).unwrap();
    let text = write_program(&prog);
    let reparsed = parse_program(&text).unwrap();
    assert_eq!(reparsed.goal_arity, 1);
    for facts in [
        "B(a). parent(b,a).",
        "parent(a,b). parent(b,c).",
        "B(c). parent(b,c). parent(a,b).",
    ] {
        let inst = parse_instance(facts).unwrap();
        let inst = Instance::new(prog.edb.clone(), inst.facts).unwrap();
        assert_eq!(
            eval_bruteforce(&prog, &inst, DEFAULT_MODEL_BOUND).unwrap(),
            eval_bruteforce(&reparsed, &inst, DEFAULT_MODEL_BOUND).unwrap()
        );
    }
}

#[test]
fn writer_variable_renaming_keeps_rules_well_formed() {
    // lowercase variables from the API print as uppercase X0, X1
    let rules = vec![Rule::new(
        vec![DAtom::new("goal", &[Term::var("weird_var")])],
        vec![DAtom::new("A", &[Term::var("weird_var")])],
    )];
    let prog = Program::new(rules, Schema::from_relations(&[("A", 1)]).unwrap()).unwrap();
    let text = write_program(&prog);
    assert!(text.contains("goal(X0) :- A(X0)."));
    let reparsed = parse_program(&text).unwrap();
    assert_eq!(reparsed.goal_arity, 1);
}

#[test]
fn msnp_schema_is_inferred_from_input_atoms() {
    let imp = Implication {
        body: vec![MAtom::Rel { rel: String::from("E"), args: vec![var("x"), var("y")] }],
        head: vec![MAtom::So { var: String::from("C"), args: vec![var("x")] }],
    };
    let f = omq_core::msnp::MsnpFormula {
        dialect: MsnpDialect::Mmsnp,
        so_vars: vec![(String::from("C"), SoKind::Monadic)],
        free_vars: vec![],
        matrix: vec![imp],
    };
    let schema = Schema::from_relations(&[("E", 2)]).unwrap();
    let (g, inferred) = parse_msnp(&write_msnp(&f, &schema)).unwrap();
    assert_eq!(g, f);
    assert_eq!(inferred, schema);
}
