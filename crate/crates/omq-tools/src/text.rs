//! Line-oriented text formats for every object the workbench handles:
//! fact lists, OMQ bundles, ontologies, disjunctive datalog programs,
//! second-order formulas, template families, and forbidden-pattern files.
//!
//! Conventions shared by the relational formats: identifiers match
//! `[A-Za-z][A-Za-z0-9_]*`, `#` starts a comment, and in rule or query
//! positions an identifier starting with an uppercase letter is a variable
//! while a lowercase one is a constant. Second-order formula files instead
//! treat bare identifiers as variables and quote constants as `'c'`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use omq_core::ddlog::{adom_rules, DAtom, Program, Rule, ADOM, GOAL};
use omq_core::dl::{Concept, Dialect, Ontology, OmqQuery, QueryKind, Role};
use omq_core::msnp::{ColoredStructure, Implication, MAtom, MsnpDialect, MsnpFormula, SoKind};
use omq_core::rel::{Atom, Cq, Fact, Instance, RelStructure, Schema, Term, UcqQuery};
use omq_core::csp::{Template, TemplateFamily};

/// A parse or validation diagnostic carrying the 1-based source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, TextError> {
    Err(TextError { line, msg: msg.into() })
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    /// `'c'` quoted constant, formula files only.
    Quoted(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Id(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "`'{s}'`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Tok>, TextError> {
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Id(chars[start..i].iter().collect()));
            continue;
        }
        if c.is_ascii_digit() {
            // digit runs only occur as arities
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Id(chars[start..i].iter().collect()));
            continue;
        }
        if c == '\'' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '\'' {
                j += 1;
            }
            if j == chars.len() || j == start {
                return err(lineno, "malformed quoted constant");
            }
            out.push(Tok::Quoted(chars[start..j].iter().collect()));
            i = j + 1;
            continue;
        }
        let sym = match c {
            '(' => "(",
            ')' => ")",
            ',' => ",",
            '.' => ".",
            ';' => ";",
            '=' => "=",
            '/' => "/",
            '|' => "|",
            '[' => "[",
            ']' => "]",
            ':' if chars.get(i + 1) == Some(&'-') => ":-",
            '-' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'-') => "---",
            '-' if chars.get(i + 1) == Some(&'>') => "->",
            _ => return err(lineno, format!("unexpected character `{c}`")),
        };
        i += sym.len();
        out.push(Tok::Sym(sym));
    }
    Ok(out)
}

/// Token cursor over one line.
struct Cur {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl Cur {
    fn new(toks: Vec<Tok>, line: usize) -> Self {
        Cur { toks, pos: 0, line }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Tok, TextError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => err(self.line, "unexpected end of line"),
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        match self.peek() {
            Some(Tok::Sym(got)) if *got == s => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<(), TextError> {
        match self.next()? {
            Tok::Sym(got) if got == s => Ok(()),
            t => err(self.line, format!("expected `{s}`, found {t}")),
        }
    }

    fn ident(&mut self) -> Result<String, TextError> {
        match self.next()? {
            Tok::Id(s) => Ok(s),
            t => err(self.line, format!("expected an identifier, found {t}")),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_done(&self) -> Result<(), TextError> {
        if self.done() {
            Ok(())
        } else {
            err(self.line, format!("trailing input starting at {}", self.toks[self.pos]))
        }
    }
}

/// Non-empty, non-comment lines with their 1-based numbers.
fn logical_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect()
}

fn first_keyword(line: &str) -> Option<String> {
    let toks = lex(line, 0).ok()?;
    match toks.first() {
        Some(Tok::Id(s)) => Some(s.clone()),
        _ => None,
    }
}

// ------------------------------------------------------------- detection

/// The text formats the front end understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Instance,
    Omq,
    Ontology,
    Datalog,
    Msnp,
    Family,
    Patterns,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Instance => "instance",
            Format::Omq => "omq",
            Format::Ontology => "ontology",
            Format::Datalog => "datalog",
            Format::Msnp => "msnp",
            Format::Family => "template-family",
            Format::Patterns => "patterns",
        }
    }
}

/// Guesses the format from leading keywords and rule punctuation.
pub fn detect_format(text: &str) -> Format {
    let lines = logical_lines(text);
    for (_, l) in &lines {
        match first_keyword(l).as_deref() {
            Some("msnp") => return Format::Msnp,
            Some("domain") | Some("constants") => return Format::Family,
            Some("colors") => return Format::Patterns,
            Some("axiom") | Some("query") => return Format::Omq,
            _ => {}
        }
        if l.contains("---") {
            return Format::Family;
        }
    }
    // `schema` alone is shared by instances, bundles, and programs, so rule
    // arrows and axiom keywords decide next.
    for (_, l) in &lines {
        if l.contains(":-") {
            return Format::Datalog;
        }
    }
    for (ln, l) in &lines {
        if let Ok(toks) = lex(l, *ln) {
            if toks.iter().any(|t| t == &Tok::Id(String::from("sub"))) {
                return Format::Ontology;
            }
        }
    }
    Format::Instance
}

// ------------------------------------------------------- shared pieces

fn parse_rel_term(cur: &mut Cur) -> Result<Term, TextError> {
    let name = cur.ident()?;
    if name.chars().next().map_or(false, |c| c.is_ascii_uppercase()) {
        Ok(Term::var(&name))
    } else {
        Ok(Term::cons(&name))
    }
}

// --------------------------------------------------------- instances

/// Parses a fact list: optional `schema Name/arity ...` header, then
/// `Rel(c1,...,cn).` facts, one or more per line.
pub fn parse_instance(text: &str) -> Result<Instance, TextError> {
    let lines = logical_lines(text);
    let mut schema: Option<Schema> = None;
    let mut pending: Vec<(usize, Fact)> = Vec::new();
    let mut inferred = Schema::new();
    for (idx, (ln, l)) in lines.iter().enumerate() {
        let mut cur = Cur::new(lex(l, *ln)?, *ln);
        // header, not a fact over a relation that happens to be named schema
        if idx == 0
            && cur.peek() == Some(&Tok::Id(String::from("schema")))
            && cur.toks.get(1) != Some(&Tok::Sym("("))
        {
            cur.next()?;
            schema = Some(read_schema_decls(&mut cur)?);
            continue;
        }
        while !cur.done() {
            let rel = cur.ident()?;
            cur.expect_sym("(")?;
            let mut args: Vec<String> = Vec::new();
            loop {
                args.push(cur.ident()?);
                if cur.eat_sym(")") {
                    break;
                }
                cur.expect_sym(",")?;
            }
            cur.expect_sym(".")?;
            inferred
                .ensure(&rel, args.len())
                .map_err(|e| TextError { line: *ln, msg: e.to_string() })?;
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            pending.push((*ln, Fact::new(&rel, &refs)));
        }
    }
    let schema = schema.unwrap_or(inferred);
    let mut inst = Instance::empty(schema);
    for (ln, fact) in pending {
        inst.insert(fact).map_err(|e| TextError { line: ln, msg: e.to_string() })?;
    }
    Ok(inst)
}

fn read_schema_decls(cur: &mut Cur) -> Result<Schema, TextError> {
    let mut schema = Schema::new();
    while !cur.done() {
        let name = cur.ident()?;
        cur.expect_sym("/")?;
        let arity = read_number(cur)?;
        schema
            .add(&name, arity)
            .map_err(|e| TextError { line: cur.line, msg: e.to_string() })?;
    }
    Ok(schema)
}

fn read_number(cur: &mut Cur) -> Result<usize, TextError> {
    // Arities lex as part of the preceding `/`; digits are not identifier
    // heads, so pull them straight off the raw token stream.
    match cur.next()? {
        Tok::Id(s) => s.parse().map_err(|_| TextError {
            line: cur.line,
            msg: format!("expected a number, found `{s}`"),
        }),
        t => err(cur.line, format!("expected a number, found {t}")),
    }
}

/// Renders an instance with its schema header; facts in set order.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    write_schema_header(&mut out, &inst.schema);
    for fact in &inst.facts {
        out.push_str(&fact_text(fact));
        out.push_str(".\n");
    }
    out
}

fn write_schema_header(out: &mut String, schema: &Schema) {
    if schema.relations().is_empty() {
        return;
    }
    out.push_str("schema");
    for (name, arity) in schema.relations() {
        out.push_str(&format!(" {name}/{arity}"));
    }
    out.push('\n');
}

fn fact_text(fact: &Fact) -> String {
    format!("{}({})", fact.rel, fact.args.join(","))
}

// --------------------------------------------------------- ontologies

const CONCEPT_KEYWORDS: &[&str] =
    &["top", "bot", "not", "and", "or", "exists", "forall", "sub", "univ"];

fn parse_concept(cur: &mut Cur) -> Result<Concept, TextError> {
    match cur.next()? {
        Tok::Id(id) => match id.as_str() {
            "top" => Ok(Concept::Top),
            "bot" => Ok(Concept::Bot),
            "not" => Ok(Concept::not(parse_concept(cur)?)),
            "exists" | "forall" => {
                let role_name = cur.ident()?;
                let role = if role_name == "univ" {
                    Role::Univ
                } else {
                    Role::name(&role_name)
                };
                cur.expect_sym(".")?;
                let inner = parse_concept(cur)?;
                Ok(if id == "exists" {
                    Concept::exists(role, inner)
                } else {
                    Concept::forall(role, inner)
                })
            }
            kw if CONCEPT_KEYWORDS.contains(&kw) => {
                err(cur.line, format!("keyword `{kw}` cannot start a concept"))
            }
            name => Ok(Concept::name(name)),
        },
        Tok::Sym("(") => {
            let left = parse_concept(cur)?;
            let op = cur.ident()?;
            let right = parse_concept(cur)?;
            cur.expect_sym(")")?;
            match op.as_str() {
                "and" => Ok(Concept::and(left, right)),
                "or" => Ok(Concept::or(left, right)),
                other => err(cur.line, format!("expected `and` or `or`, found `{other}`")),
            }
        }
        t => err(cur.line, format!("expected a concept, found {t}")),
    }
}

fn parse_inclusion(cur: &mut Cur) -> Result<(Concept, Concept), TextError> {
    let lhs = parse_concept(cur)?;
    match cur.next()? {
        Tok::Id(kw) if kw == "sub" => {}
        t => return err(cur.line, format!("expected `sub`, found {t}")),
    }
    let rhs = parse_concept(cur)?;
    Ok((lhs, rhs))
}

fn inclusion_uses_univ(lhs: &Concept, rhs: &Concept) -> bool {
    lhs.uses_univ() || rhs.uses_univ()
}

/// Parses a bare ontology: one `concept sub concept` axiom per line.
/// The dialect is inferred from whether `univ` occurs.
pub fn parse_ontology(text: &str) -> Result<Ontology, TextError> {
    let mut inclusions = Vec::new();
    let mut univ = false;
    for (ln, l) in logical_lines(text) {
        let mut cur = Cur::new(lex(l, ln)?, ln);
        let (lhs, rhs) = parse_inclusion(&mut cur)?;
        cur.expect_done()?;
        univ = univ || inclusion_uses_univ(&lhs, &rhs);
        inclusions.push((lhs, rhs));
    }
    let dialect = if univ { Dialect::Alcu } else { Dialect::Alc };
    Ontology::new(dialect, inclusions).map_err(|e| TextError { line: 1, msg: e.to_string() })
}

pub fn concept_text(c: &Concept) -> String {
    match c {
        Concept::Top => String::from("top"),
        Concept::Bot => String::from("bot"),
        Concept::Name(n) => n.clone(),
        Concept::Not(inner) => format!("not {}", concept_text(inner)),
        Concept::And(a, b) => format!("({} and {})", concept_text(a), concept_text(b)),
        Concept::Or(a, b) => format!("({} or {})", concept_text(a), concept_text(b)),
        Concept::Exists(r, inner) => format!("exists {} . {}", role_text(r), concept_text(inner)),
        Concept::Forall(r, inner) => format!("forall {} . {}", role_text(r), concept_text(inner)),
    }
}

fn role_text(r: &Role) -> &str {
    match r {
        Role::Univ => "univ",
        Role::Name(n) => n,
    }
}

// --------------------------------------------------------- OMQ bundles

/// Parses an OMQ bundle: a `schema` line, `axiom` lines, and one `query`
/// line of the form `query aq NAME | baq NAME | conq <concept> | ucq <ucq>`.
pub fn parse_omq(text: &str) -> Result<OmqQuery, TextError> {
    let mut schema: Option<Schema> = None;
    let mut inclusions: Vec<(Concept, Concept)> = Vec::new();
    let mut univ = false;
    let mut query: Option<(usize, QueryKind)> = None;
    let mut last_line = 1;
    for (ln, l) in logical_lines(text) {
        last_line = ln;
        let mut cur = Cur::new(lex(l, ln)?, ln);
        let head = cur.ident()?;
        match head.as_str() {
            "schema" => {
                if schema.is_some() {
                    return err(ln, "duplicate schema line");
                }
                schema = Some(read_schema_decls(&mut cur)?);
            }
            "axiom" => {
                let (lhs, rhs) = parse_inclusion(&mut cur)?;
                cur.expect_done()?;
                univ = univ || inclusion_uses_univ(&lhs, &rhs);
                inclusions.push((lhs, rhs));
            }
            "query" => {
                if query.is_some() {
                    return err(ln, "duplicate query line");
                }
                let kind = cur.ident()?;
                let parsed = match kind.as_str() {
                    "aq" => QueryKind::Aq(cur.ident()?),
                    "baq" => QueryKind::Baq(cur.ident()?),
                    "conq" => QueryKind::ConQ(parse_concept(&mut cur)?),
                    "ucq" => QueryKind::Ucq(parse_ucq(&mut cur)?),
                    other => {
                        return err(ln, format!("unknown query kind `{other}`"));
                    }
                };
                cur.expect_done()?;
                query = Some((ln, parsed));
            }
            other => return err(ln, format!("expected `schema`, `axiom`, or `query`, found `{other}`")),
        }
    }
    let schema = match schema {
        Some(s) => s,
        None => return err(last_line, "missing schema line"),
    };
    let (qline, query) = match query {
        Some(q) => q,
        None => return err(last_line, "missing query line"),
    };
    let dialect = if univ { Dialect::Alcu } else { Dialect::Alc };
    let ontology = Ontology::new(dialect, inclusions)
        .map_err(|e| TextError { line: 1, msg: e.to_string() })?;
    if let QueryKind::Ucq(u) = &query {
        for cq in &u.disjuncts {
            for atom in &cq.atoms {
                if let Atom::Rel { rel, args } = atom {
                    match schema.arity(rel) {
                        Some(a) if a == args.len() => {}
                        Some(a) => {
                            return err(
                                qline,
                                format!("atom over `{rel}` has {} arguments, schema says {a}", args.len()),
                            )
                        }
                        None => return err(qline, format!("query relation `{rel}` not in the schema")),
                    }
                }
            }
        }
    }
    Ok(OmqQuery { data_schema: schema, ontology, query })
}

/// UCQ expressions: disjuncts separated by `|`, each of the form
/// `[X, Y] A(X), R(X,Y), X = Y` with a mandatory (possibly empty) answer
/// list. Uppercase identifiers are variables, lowercase ones constants.
fn parse_ucq(cur: &mut Cur) -> Result<UcqQuery, TextError> {
    let mut disjuncts = Vec::new();
    loop {
        cur.expect_sym("[")?;
        let mut answer_vars = Vec::new();
        if !cur.eat_sym("]") {
            loop {
                match parse_rel_term(cur)? {
                    Term::Var(v) => answer_vars.push(v),
                    Term::Const(c) => {
                        return err(cur.line, format!("answer position holds constant `{c}`"))
                    }
                }
                if cur.eat_sym("]") {
                    break;
                }
                cur.expect_sym(",")?;
            }
        }
        let mut atoms = Vec::new();
        loop {
            atoms.push(parse_ucq_atom(cur)?);
            if !cur.eat_sym(",") {
                break;
            }
        }
        disjuncts.push(Cq { answer_vars, atoms });
        if !cur.eat_sym("|") {
            break;
        }
    }
    UcqQuery::new(disjuncts).map_err(|e| TextError { line: cur.line, msg: e.to_string() })
}

fn parse_ucq_atom(cur: &mut Cur) -> Result<Atom, TextError> {
    let first = parse_rel_term(cur)?;
    if cur.eat_sym("=") {
        let second = parse_rel_term(cur)?;
        return Ok(Atom::Eq(first, second));
    }
    let rel = match first {
        Term::Var(v) => v,
        Term::Const(c) => c,
    };
    cur.expect_sym("(")?;
    let mut args = Vec::new();
    loop {
        args.push(parse_rel_term(cur)?);
        if cur.eat_sym(")") {
            break;
        }
        cur.expect_sym(",")?;
    }
    Ok(Atom::Rel { rel, args })
}

/// Renders an OMQ bundle. UCQ variables are renamed per disjunct to
/// `X0, X1, ...` so the uppercase-variable convention always holds.
pub fn write_omq(q: &OmqQuery) -> String {
    let mut out = String::new();
    write_schema_header(&mut out, &q.data_schema);
    for (lhs, rhs) in &q.ontology.inclusions {
        out.push_str(&format!("axiom {} sub {}\n", concept_text(lhs), concept_text(rhs)));
    }
    match &q.query {
        QueryKind::Aq(a) => out.push_str(&format!("query aq {a}\n")),
        QueryKind::Baq(a) => out.push_str(&format!("query baq {a}\n")),
        QueryKind::ConQ(c) => out.push_str(&format!("query conq {}\n", concept_text(c))),
        QueryKind::Ucq(u) => {
            let parts: Vec<String> = u.disjuncts.iter().map(cq_text).collect();
            out.push_str(&format!("query ucq {}\n", parts.join(" | ")));
        }
    }
    out
}

fn cq_text(cq: &Cq) -> String {
    let mut rename: BTreeMap<String, String> = BTreeMap::new();
    let touch = |v: &str, rename: &mut BTreeMap<String, String>| {
        if !rename.contains_key(v) {
            let fresh = format!("X{}", rename.len());
            rename.insert(v.to_string(), fresh);
        }
    };
    for v in &cq.answer_vars {
        touch(v, &mut rename);
    }
    for atom in &cq.atoms {
        match atom {
            Atom::Rel { args, .. } => {
                for t in args {
                    if let Term::Var(v) = t {
                        touch(v, &mut rename);
                    }
                }
            }
            Atom::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        touch(v, &mut rename);
                    }
                }
            }
        }
    }
    let term = |t: &Term| -> String {
        match t {
            Term::Var(v) => rename[v].clone(),
            Term::Const(c) => c.clone(),
        }
    };
    let answers: Vec<String> = cq.answer_vars.iter().map(|v| rename[v].clone()).collect();
    let atoms: Vec<String> = cq
        .atoms
        .iter()
        .map(|atom| match atom {
            Atom::Rel { rel, args } => {
                let parts: Vec<String> = args.iter().map(&term).collect();
                format!("{rel}({})", parts.join(","))
            }
            Atom::Eq(a, b) => format!("{} = {}", term(a), term(b)),
        })
        .collect();
    format!("[{}] {}", answers.join(", "), atoms.join(", "))
}

// ----------------------------------------------------------- datalog

/// Parses a disjunctive datalog program. Rules read
/// `h1(X) ; h2(Y) :- b1(X,Y), b2(Y).` with the empty head spelled `bot`.
/// An optional `schema` header fixes the EDB; otherwise the EDB is every
/// relation that occurs in a body but in no head. A line `adom.` expands
/// to the usual active-domain rules over the EDB.
pub fn parse_program(text: &str) -> Result<Program, TextError> {
    let lines = logical_lines(text);
    let mut schema: Option<Schema> = None;
    let mut rules: Vec<Rule> = Vec::new();
    let mut want_adom = false;
    for (idx, (ln, l)) in lines.iter().enumerate() {
        let mut cur = Cur::new(lex(l, *ln)?, *ln);
        if idx == 0
            && cur.peek() == Some(&Tok::Id(String::from("schema")))
            && cur.toks.get(1) != Some(&Tok::Sym("("))
        {
            cur.next()?;
            schema = Some(read_schema_decls(&mut cur)?);
            continue;
        }
        if cur.peek() == Some(&Tok::Id(String::from("adom"))) && cur.toks.len() <= 2 {
            cur.next()?;
            let _ = cur.eat_sym(".");
            cur.expect_done()?;
            want_adom = true;
            continue;
        }
        rules.push(parse_rule(&mut cur)?);
    }
    let edb = match schema {
        Some(s) => s,
        None => infer_edb(&rules).map_err(|msg| TextError { line: 1, msg })?,
    };
    if want_adom {
        rules.extend(adom_rules(&edb));
    }
    Program::new(rules, edb).map_err(|e| TextError { line: 1, msg: e.to_string() })
}

fn parse_rule(cur: &mut Cur) -> Result<Rule, TextError> {
    let mut head: Vec<DAtom> = Vec::new();
    if cur.peek() == Some(&Tok::Id(String::from("bot"))) {
        cur.next()?;
    } else {
        loop {
            head.push(parse_datom(cur)?);
            if !cur.eat_sym(";") {
                break;
            }
        }
    }
    cur.expect_sym(":-")?;
    let mut body: Vec<DAtom> = Vec::new();
    loop {
        body.push(parse_datom(cur)?);
        if !cur.eat_sym(",") {
            break;
        }
    }
    cur.expect_sym(".")?;
    cur.expect_done()?;
    Ok(Rule::new(head, body))
}

fn parse_datom(cur: &mut Cur) -> Result<DAtom, TextError> {
    let rel = cur.ident()?;
    // a bare name or `()` is a nullary atom, e.g. the Boolean goal
    if !cur.eat_sym("(") {
        return Ok(DAtom::new(&rel, &[]));
    }
    if cur.eat_sym(")") {
        return Ok(DAtom::new(&rel, &[]));
    }
    let mut args = Vec::new();
    loop {
        args.push(parse_rel_term(cur)?);
        if cur.eat_sym(")") {
            break;
        }
        cur.expect_sym(",")?;
    }
    Ok(DAtom::new(&rel, &args))
}

fn infer_edb(rules: &[Rule]) -> Result<Schema, String> {
    let mut heads: BTreeSet<&str> = BTreeSet::new();
    for rule in rules {
        for atom in &rule.head {
            heads.insert(&atom.rel);
        }
    }
    let mut edb = Schema::new();
    for rule in rules {
        for atom in &rule.body {
            if atom.rel == ADOM || atom.rel == GOAL || heads.contains(atom.rel.as_str()) {
                continue;
            }
            edb.ensure(&atom.rel, atom.args.len()).map_err(|e| e.to_string())?;
        }
    }
    Ok(edb)
}

/// Renders a program with its EDB schema header. Rule variables are renamed
/// to `X0, X1, ...` in order of first occurrence.
pub fn write_program(prog: &Program) -> String {
    let mut out = String::new();
    write_schema_header(&mut out, &prog.edb);
    for rule in &prog.rules {
        let mut rename: BTreeMap<String, String> = BTreeMap::new();
        for atom in rule.head.iter().chain(rule.body.iter()) {
            for t in &atom.args {
                if let Term::Var(v) = t {
                    if !rename.contains_key(v) {
                        let fresh = format!("X{}", rename.len());
                        rename.insert(v.clone(), fresh);
                    }
                }
            }
        }
        let datom = |a: &DAtom| -> String {
            if a.args.is_empty() {
                return a.rel.clone();
            }
            let parts: Vec<String> = a
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => rename[v].clone(),
                    Term::Const(c) => c.clone(),
                })
                .collect();
            format!("{}({})", a.rel, parts.join(","))
        };
        let head = if rule.head.is_empty() {
            String::from("bot")
        } else {
            rule.head.iter().map(&datom).collect::<Vec<_>>().join(" ; ")
        };
        let body = rule.body.iter().map(&datom).collect::<Vec<_>>().join(", ");
        out.push_str(&format!("{head} :- {body}.\n"));
    }
    out
}

// ---------------------------------------------------- second-order files

/// Parses a second-order formula file:
/// `msnp mmsnp|gmsnp|mmsnp2`, `sovar X monadic|rel/k|factset`, `freevar y`,
/// then `imp a1, a2 -> b1 ; b2` lines with `-> false` for falsum.
/// Bare identifiers in term position are variables; constants are quoted.
/// An optional `schema` line fixes the input signature, which is otherwise
/// inferred from the input atoms of the matrix.
pub fn parse_msnp(text: &str) -> Result<(MsnpFormula, Schema), TextError> {
    let mut dialect: Option<MsnpDialect> = None;
    let mut so_vars: Vec<(String, SoKind)> = Vec::new();
    let mut free_vars: Vec<String> = Vec::new();
    let mut matrix: Vec<Implication> = Vec::new();
    let mut schema: Option<Schema> = None;
    let mut inferred = Schema::new();
    for (ln, l) in logical_lines(text) {
        let mut cur = Cur::new(lex(l, ln)?, ln);
        let head = cur.ident()?;
        match head.as_str() {
            "msnp" => {
                if dialect.is_some() {
                    return err(ln, "duplicate msnp header");
                }
                dialect = Some(match cur.ident()?.as_str() {
                    "mmsnp" => MsnpDialect::Mmsnp,
                    "gmsnp" => MsnpDialect::Gmsnp,
                    "mmsnp2" => MsnpDialect::Mmsnp2,
                    other => return err(ln, format!("unknown dialect `{other}`")),
                });
            }
            "schema" => schema = Some(read_schema_decls(&mut cur)?),
            "sovar" => {
                let name = cur.ident()?;
                let kind = match cur.ident()?.as_str() {
                    "monadic" => SoKind::Monadic,
                    "factset" => SoKind::FactSet,
                    "rel" => {
                        cur.expect_sym("/")?;
                        SoKind::Rel(read_number(&mut cur)?)
                    }
                    other => return err(ln, format!("unknown variable kind `{other}`")),
                };
                so_vars.push((name, kind));
            }
            "freevar" => free_vars.push(cur.ident()?),
            "imp" => {
                let so_names: BTreeSet<&str> =
                    so_vars.iter().map(|(n, _)| n.as_str()).collect();
                matrix.push(parse_implication(&mut cur, &so_names, &mut inferred)?);
            }
            other => {
                return err(ln, format!("expected `msnp`, `sovar`, `freevar`, or `imp`, found `{other}`"))
            }
        }
        cur.expect_done()?;
    }
    let dialect = match dialect {
        Some(d) => d,
        None => return err(1, "missing `msnp` header"),
    };
    let formula = MsnpFormula { dialect, so_vars, free_vars, matrix };
    formula.validate().map_err(|e| TextError { line: 1, msg: e.to_string() })?;
    Ok((formula, schema.unwrap_or(inferred)))
}

fn parse_implication(
    cur: &mut Cur,
    so_names: &BTreeSet<&str>,
    schema: &mut Schema,
) -> Result<Implication, TextError> {
    let mut body = Vec::new();
    loop {
        body.push(parse_matom(cur, so_names, schema)?);
        if !cur.eat_sym(",") {
            break;
        }
    }
    cur.expect_sym("->")?;
    let mut head = Vec::new();
    if cur.peek() == Some(&Tok::Id(String::from("false"))) {
        cur.next()?;
    } else {
        loop {
            head.push(parse_matom(cur, so_names, schema)?);
            if !cur.eat_sym(";") {
                break;
            }
        }
    }
    Ok(Implication { body, head })
}

fn parse_so_term(cur: &mut Cur) -> Result<Term, TextError> {
    match cur.next()? {
        Tok::Id(v) => Ok(Term::var(&v)),
        Tok::Quoted(c) => Ok(Term::cons(&c)),
        t => err(cur.line, format!("expected a term, found {t}")),
    }
}

fn parse_matom(
    cur: &mut Cur,
    so_names: &BTreeSet<&str>,
    schema: &mut Schema,
) -> Result<MAtom, TextError> {
    let line = cur.line;
    let first = match cur.next()? {
        Tok::Id(s) => s,
        Tok::Quoted(c) => {
            cur.expect_sym("=")?;
            let rhs = parse_so_term(cur)?;
            return Ok(MAtom::Eq(Term::cons(&c), rhs));
        }
        t => return err(line, format!("expected an atom, found {t}")),
    };
    if cur.eat_sym("=") {
        let rhs = parse_so_term(cur)?;
        return Ok(MAtom::Eq(Term::var(&first), rhs));
    }
    cur.expect_sym("(")?;
    // X(R(t...)) is a fact atom when X is a declared SO variable and an
    // input relation name follows another opening parenthesis.
    if so_names.contains(first.as_str()) {
        if matches!(cur.toks.get(cur.pos), Some(Tok::Id(_)))
            && cur.toks.get(cur.pos + 1) == Some(&Tok::Sym("("))
        {
            let rel = cur.ident()?;
            cur.expect_sym("(")?;
            let mut args = Vec::new();
            loop {
                args.push(parse_so_term(cur)?);
                if cur.eat_sym(")") {
                    break;
                }
                cur.expect_sym(",")?;
            }
            cur.expect_sym(")")?;
            schema
                .ensure(&rel, args.len())
                .map_err(|e| TextError { line, msg: e.to_string() })?;
            return Ok(MAtom::SoFact { var: first, rel, args });
        }
    }
    let mut args = Vec::new();
    loop {
        args.push(parse_so_term(cur)?);
        if cur.eat_sym(")") {
            break;
        }
        cur.expect_sym(",")?;
    }
    if so_names.contains(first.as_str()) {
        Ok(MAtom::So { var: first, args })
    } else {
        schema
            .ensure(&first, args.len())
            .map_err(|e| TextError { line, msg: e.to_string() })?;
        Ok(MAtom::Rel { rel: first, args })
    }
}

/// Renders a formula file, including a schema line for the input signature.
pub fn write_msnp(f: &MsnpFormula, schema: &Schema) -> String {
    let mut out = String::new();
    out.push_str(match f.dialect {
        MsnpDialect::Mmsnp => "msnp mmsnp\n",
        MsnpDialect::Gmsnp => "msnp gmsnp\n",
        MsnpDialect::Mmsnp2 => "msnp mmsnp2\n",
    });
    write_schema_header(&mut out, schema);
    for (name, kind) in &f.so_vars {
        match kind {
            SoKind::Monadic => out.push_str(&format!("sovar {name} monadic\n")),
            SoKind::Rel(k) => out.push_str(&format!("sovar {name} rel/{k}\n")),
            SoKind::FactSet => out.push_str(&format!("sovar {name} factset\n")),
        }
    }
    for v in &f.free_vars {
        out.push_str(&format!("freevar {v}\n"));
    }
    let so_term = |t: &Term| -> String {
        match t {
            Term::Var(v) => v.clone(),
            Term::Const(c) => format!("'{c}'"),
        }
    };
    let matom = |a: &MAtom| -> String {
        match a {
            MAtom::Rel { rel, args } | MAtom::So { var: rel, args } => {
                let parts: Vec<String> = args.iter().map(&so_term).collect();
                format!("{rel}({})", parts.join(","))
            }
            MAtom::SoFact { var, rel, args } => {
                let parts: Vec<String> = args.iter().map(&so_term).collect();
                format!("{var}({rel}({}))", parts.join(","))
            }
            MAtom::Eq(a, b) => format!("{} = {}", so_term(a), so_term(b)),
        }
    };
    for imp in &f.matrix {
        let body = imp.body.iter().map(&matom).collect::<Vec<_>>().join(", ");
        let head = if imp.head.is_empty() {
            String::from("false")
        } else {
            imp.head.iter().map(&matom).collect::<Vec<_>>().join(" ; ")
        };
        out.push_str(&format!("imp {body} -> {head}\n"));
    }
    out
}

// ---------------------------------------------------- template families

/// Parses a template family. Optional `schema` and `constants` header lines
/// come first; each template is a block of `domain e1 e2 ...`, `const c = e`,
/// and `fact R(e1,...,en)` lines, blocks separated by `---`.
pub fn parse_family(text: &str) -> Result<TemplateFamily, TextError> {
    let mut schema: Option<Schema> = None;
    let mut constant_names: Option<Vec<String>> = None;
    let mut inferred = Schema::new();

    struct Block {
        line: usize,
        domain: Vec<String>,
        consts: Vec<(String, String)>,
        facts: Vec<Fact>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut open: Option<Block> = None;
    let mut in_header = true;

    for (ln, l) in logical_lines(text) {
        let mut cur = Cur::new(lex(l, ln)?, ln);
        if cur.eat_sym("---") {
            cur.expect_done()?;
            match open.take() {
                Some(b) => blocks.push(b),
                None => return err(ln, "`---` with no preceding template block"),
            }
            in_header = false;
            continue;
        }
        let head = cur.ident()?;
        match head.as_str() {
            "schema" if in_header && open.is_none() => {
                schema = Some(read_schema_decls(&mut cur)?);
                continue;
            }
            "constants" if in_header && open.is_none() => {
                let mut names = Vec::new();
                while !cur.done() {
                    names.push(cur.ident()?);
                }
                constant_names = Some(names);
                continue;
            }
            _ => {}
        }
        let block = open.get_or_insert(Block {
            line: ln,
            domain: Vec::new(),
            consts: Vec::new(),
            facts: Vec::new(),
        });
        match head.as_str() {
            "domain" => {
                while !cur.done() {
                    block.domain.push(cur.ident()?);
                }
            }
            "const" => {
                let name = cur.ident()?;
                cur.expect_sym("=")?;
                let elem = cur.ident()?;
                cur.expect_done()?;
                block.consts.push((name, elem));
            }
            "fact" => {
                let rel = cur.ident()?;
                cur.expect_sym("(")?;
                let mut args = Vec::new();
                loop {
                    args.push(cur.ident()?);
                    if cur.eat_sym(")") {
                        break;
                    }
                    cur.expect_sym(",")?;
                }
                cur.expect_done()?;
                inferred
                    .ensure(&rel, args.len())
                    .map_err(|e| TextError { line: ln, msg: e.to_string() })?;
                let refs: Vec<&str> = args.iter().map(String::as_str).collect();
                block.facts.push(Fact::new(&rel, &refs));
            }
            other => {
                return err(ln, format!("expected `domain`, `const`, or `fact`, found `{other}`"))
            }
        }
    }
    if let Some(b) = open.take() {
        blocks.push(b);
    }

    let schema = schema.unwrap_or(inferred);
    let mut templates = Vec::new();
    let mut names = constant_names;
    for block in blocks {
        let block_names: Vec<String> = block.consts.iter().map(|(n, _)| n.clone()).collect();
        match &names {
            None => names = Some(block_names),
            Some(expected) if *expected != block_names => {
                return err(block.line, "templates disagree on their constant names");
            }
            Some(_) => {}
        }
        let structure =
            RelStructure::new(schema.clone(), block.domain.clone(), block.facts.clone())
                .map_err(|e| TextError { line: block.line, msg: e.to_string() })?;
        let tmpl = Template::new(structure, block.consts)
            .map_err(|e| TextError { line: block.line, msg: e.to_string() })?;
        templates.push(tmpl);
    }
    Ok(TemplateFamily {
        schema,
        constant_names: names.unwrap_or_default(),
        templates,
    })
}

/// Renders a template family with headers, blocks separated by `---`.
pub fn write_family(family: &TemplateFamily) -> String {
    let mut out = String::new();
    write_schema_header(&mut out, &family.schema);
    if !family.constant_names.is_empty() {
        out.push_str(&format!("constants {}\n", family.constant_names.join(" ")));
    }
    for (i, tmpl) in family.templates.iter().enumerate() {
        if i > 0 {
            out.push_str("---\n");
        }
        out.push_str(&template_block(tmpl));
    }
    out
}

pub fn template_block(tmpl: &Template) -> String {
    let mut out = String::new();
    let domain: Vec<&str> = tmpl.structure.domain.iter().map(String::as_str).collect();
    out.push_str(&format!("domain {}\n", domain.join(" ")));
    for (name, elem) in &tmpl.constants {
        out.push_str(&format!("const {name} = {elem}\n"));
    }
    for fact in &tmpl.structure.facts {
        out.push_str(&format!("fact {}\n", fact_text(fact)));
    }
    out
}

// ------------------------------------------------------ pattern files

/// Parses a forbidden-patterns file: a `colors c1 c2 ...` line, then
/// pattern blocks of facts `R(e1,...,en)` and colorings `color(e) = c`,
/// separated by `---`.
pub fn parse_patterns(text: &str) -> Result<(Vec<ColoredStructure>, Vec<String>), TextError> {
    let mut colors: Option<Vec<String>> = None;

    struct Block {
        line: usize,
        facts: Vec<Fact>,
        coloring: BTreeMap<String, String>,
        elems: BTreeSet<String>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut open: Option<Block> = None;

    for (ln, l) in logical_lines(text) {
        let mut cur = Cur::new(lex(l, ln)?, ln);
        if cur.eat_sym("---") {
            cur.expect_done()?;
            match open.take() {
                Some(b) => blocks.push(b),
                None => return err(ln, "`---` with no preceding pattern block"),
            }
            continue;
        }
        let head = cur.ident()?;
        if head == "colors" && colors.is_none() && open.is_none() {
            let mut names = Vec::new();
            while !cur.done() {
                names.push(cur.ident()?);
            }
            colors = Some(names);
            continue;
        }
        let block = open.get_or_insert(Block {
            line: ln,
            facts: Vec::new(),
            coloring: BTreeMap::new(),
            elems: BTreeSet::new(),
        });
        if head == "color" {
            cur.expect_sym("(")?;
            let elem = cur.ident()?;
            cur.expect_sym(")")?;
            cur.expect_sym("=")?;
            let color = cur.ident()?;
            cur.expect_done()?;
            block.elems.insert(elem.clone());
            block.coloring.insert(elem, color);
        } else {
            cur.expect_sym("(")?;
            let mut args = Vec::new();
            loop {
                args.push(cur.ident()?);
                if cur.eat_sym(")") {
                    break;
                }
                cur.expect_sym(",")?;
            }
            let _ = cur.eat_sym(".");
            cur.expect_done()?;
            for a in &args {
                block.elems.insert(a.clone());
            }
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            block.facts.push(Fact::new(&head, &refs));
        }
    }
    if let Some(b) = open.take() {
        blocks.push(b);
    }
    let colors = match colors {
        Some(c) => c,
        None => return err(1, "missing `colors` line"),
    };

    let mut schema = Schema::new();
    for b in &blocks {
        for f in &b.facts {
            schema
                .ensure(&f.rel, f.args.len())
                .map_err(|e| TextError { line: b.line, msg: e.to_string() })?;
        }
    }
    let mut patterns = Vec::new();
    for b in blocks {
        let base = RelStructure::new(schema.clone(), b.elems.clone(), b.facts.clone())
            .map_err(|e| TextError { line: b.line, msg: e.to_string() })?;
        let p = ColoredStructure::new(base, b.coloring, &colors)
            .map_err(|e| TextError { line: b.line, msg: e.to_string() })?;
        patterns.push(p);
    }
    Ok((patterns, colors))
}
