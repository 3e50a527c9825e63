//! Batch command-line front end. Every pipeline of the core library is
//! reachable through one subcommand; outputs are byte-stable for identical
//! inputs. Exit codes: 0 success (including a negative decision), 2 for
//! parse or validation errors, 3 for unsupported requests or exceeded size
//! bounds, 4 for I/O failures.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use omq_core::csp::{self, CspError, TemplateFamily};
use omq_core::ddlog::{eval_bruteforce, EvalError, Program, DEFAULT_MODEL_BOUND};
use omq_core::dl::{conq_to_aq, OmqQuery, Ontology, QueryKind};
use omq_core::msnp::{eval_msnp, ColoredStructure, MsnpDialect, MsnpError, MsnpFormula};
use omq_core::rel::{Instance, Schema};
use omq_core::translate::{
    aq_omq_to_mddlog, commsnp_to_mddlog, fgddlog_to_gmsnp, gmsnp_to_fgddlog, gmsnp_to_mmsnp2,
    mddlog_to_aq_omq, mddlog_to_commsnp, mmsnp2_to_gmsnp, MddlogVariant, TranslateError,
    DEFAULT_IMPLICATION_BOUND,
};

use crate::text::{self, Format};

#[derive(Parser)]
#[command(
    name = "omq",
    version,
    about = "Compile, translate, and evaluate ontology-mediated queries"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a file, auto-detecting its format
    Check {
        file: PathBuf,
        /// Override format auto-detection
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Translate a query between formalisms
    Compile {
        #[arg(long, value_enum)]
        from: Formalism,
        #[arg(long, value_enum)]
        to: Formalism,
        input: PathBuf,
        output: Option<PathBuf>,
    },
    /// Compile an atomic query to its template family (or back with --invert)
    Template {
        /// Read a template family and emit the query it defines
        #[arg(long)]
        invert: bool,
        input: PathBuf,
        output: Option<PathBuf>,
    },
    /// Print the certain answers of a query on a data instance
    Eval {
        #[arg(long, value_enum)]
        engine: Engine,
        /// Budget for the model searches of the ddlog and msnp engines
        #[arg(long, default_value_t = DEFAULT_MODEL_BOUND)]
        max_models: u64,
        query: PathBuf,
        data: PathBuf,
    },
    /// Decide whether the first query is contained in the second
    Contain { q1: PathBuf, q2: PathBuf },
    /// Decide whether a query is rewritable into first-order logic
    Fodef {
        /// Bound on the product structure built during the decision
        #[arg(long, default_value_t = csp::DEFAULT_PRODUCT_BOUND)]
        max_product: usize,
        query: PathBuf,
    },
    /// Decide datalog-rewritability (not implemented)
    Datalogdef { query: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Instance,
    Omq,
    Ontology,
    Datalog,
    Msnp,
    Family,
    Patterns,
}

impl FormatArg {
    fn to_format(self) -> Format {
        match self {
            FormatArg::Instance => Format::Instance,
            FormatArg::Omq => Format::Omq,
            FormatArg::Ontology => Format::Ontology,
            FormatArg::Datalog => Format::Datalog,
            FormatArg::Msnp => Format::Msnp,
            FormatArg::Family => Format::Family,
            FormatArg::Patterns => Format::Patterns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Formalism {
    AlcAq,
    AlcBaq,
    AlcConq,
    Mddlog,
    Commsnp,
    Gmsnp,
    Mmsnp2,
    Fgddlog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Template,
    Ddlog,
    Msnp,
}

enum Failure {
    /// Malformed or invalid input: exit 2.
    Parse(String),
    /// Unsupported request or exceeded size bound: exit 3.
    Unsupported(String),
    /// Filesystem trouble: exit 4.
    Io(String),
    /// Message already printed.
    ExitOnly(i32),
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(Failure::Parse(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Unsupported(m)) => {
            eprintln!("unsupported: {m}");
            3
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            4
        }
        Err(Failure::ExitOnly(code)) => code,
    }
}

fn parse_fail(e: impl Display) -> Failure {
    Failure::Parse(e.to_string())
}

fn translate_fail(e: TranslateError) -> Failure {
    match e {
        TranslateError::ProfileSpaceTooLarge(_)
        | TranslateError::CompletionBoundExceeded(_)
        | TranslateError::ImplicationBoundExceeded(_) => Failure::Unsupported(e.to_string()),
        _ => Failure::Parse(e.to_string()),
    }
}

fn eval_fail(e: EvalError) -> Failure {
    match e {
        EvalError::SearchBoundExceeded(_) => Failure::Unsupported(e.to_string()),
        _ => Failure::Parse(e.to_string()),
    }
}

fn msnp_fail(e: MsnpError) -> Failure {
    match e {
        MsnpError::SearchBoundExceeded(_) => Failure::Unsupported(e.to_string()),
        _ => Failure::Parse(e.to_string()),
    }
}

fn csp_fail(e: CspError) -> Failure {
    match e {
        CspError::ProductTooLarge { .. } | CspError::TooManyConstants(_) => {
            Failure::Unsupported(e.to_string())
        }
        _ => Failure::Parse(e.to_string()),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            fs::write(p, content).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Any parsed document, for the subcommands that auto-detect their input.
/// `check` only cares that parsing succeeded, so some payloads go unread.
#[allow(dead_code)]
enum Doc {
    Inst(Instance),
    Omq(OmqQuery),
    Ontology(Ontology),
    Prog(Program),
    Msnp(MsnpFormula, Schema),
    Family(TemplateFamily),
    Patterns(Vec<ColoredStructure>, Vec<String>),
}

fn load_doc(path: &Path, forced: Option<Format>) -> Result<(Doc, Format), Failure> {
    let body = read_file(path)?;
    let format = forced.unwrap_or_else(|| text::detect_format(&body));
    let doc = match format {
        Format::Instance => Doc::Inst(text::parse_instance(&body).map_err(parse_fail)?),
        Format::Omq => Doc::Omq(text::parse_omq(&body).map_err(parse_fail)?),
        Format::Ontology => Doc::Ontology(text::parse_ontology(&body).map_err(parse_fail)?),
        Format::Datalog => Doc::Prog(text::parse_program(&body).map_err(parse_fail)?),
        Format::Msnp => {
            let (f, s) = text::parse_msnp(&body).map_err(parse_fail)?;
            Doc::Msnp(f, s)
        }
        Format::Family => Doc::Family(text::parse_family(&body).map_err(parse_fail)?),
        Format::Patterns => {
            let (p, c) = text::parse_patterns(&body).map_err(parse_fail)?;
            Doc::Patterns(p, c)
        }
    };
    Ok((doc, format))
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Check { file, format } => {
            let (_, format) = load_doc(&file, format.map(FormatArg::to_format))?;
            println!("ok: {}", format.name());
            Ok(())
        }
        Cmd::Compile { from, to, input, output } => {
            compile(from, to, &input, output.as_deref())
        }
        Cmd::Template { invert, input, output } => template(invert, &input, output.as_deref()),
        Cmd::Eval { engine, max_models, query, data } => eval(engine, max_models, &query, &data),
        Cmd::Contain { q1, q2 } => contain(&q1, &q2),
        Cmd::Fodef { max_product, query } => fodef(max_product, &query),
        Cmd::Datalogdef { query: _ } => {
            println!("unsupported");
            Err(Failure::ExitOnly(3))
        }
    }
}

// ---------------------------------------------------------------- compile

fn load_atomic_omq(path: &Path, from: Formalism) -> Result<OmqQuery, Failure> {
    let body = read_file(path)?;
    let q = text::parse_omq(&body).map_err(parse_fail)?;
    let ok = match (&q.query, from) {
        (QueryKind::Aq(_), Formalism::AlcAq) => true,
        (QueryKind::Baq(_), Formalism::AlcBaq) => true,
        (QueryKind::ConQ(_), Formalism::AlcConq) => true,
        _ => false,
    };
    if !ok {
        return Err(Failure::Parse(format!(
            "query kind in {} does not match the requested source formalism",
            path.display()
        )));
    }
    Ok(match &q.query {
        QueryKind::ConQ(_) => conq_to_aq(&q),
        _ => q,
    })
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let body = read_file(path)?;
    text::parse_program(&body).map_err(parse_fail)
}

fn load_msnp(path: &Path, dialect: MsnpDialect) -> Result<(MsnpFormula, Schema), Failure> {
    let body = read_file(path)?;
    let (f, schema) = text::parse_msnp(&body).map_err(parse_fail)?;
    if f.dialect != dialect {
        return Err(Failure::Parse(format!(
            "formula in {} has the wrong dialect for the requested formalism",
            path.display()
        )));
    }
    Ok((f, schema))
}

/// The inclusion-rewriting needs to know whether all rule bodies are
/// connected and whether the goal is unary or Boolean.
fn pick_variant(prog: &Program) -> MddlogVariant {
    let connected = omq_core::ddlog::classify(prog).connected;
    match (prog.goal_arity, connected) {
        (1, true) => MddlogVariant::UnaryConnectedSimple,
        (1, false) => MddlogVariant::UnarySimple,
        (_, true) => MddlogVariant::BooleanConnectedSimple,
        (_, false) => MddlogVariant::BooleanSimple,
    }
}

fn with_header(name: &str, body: String) -> String {
    format!("# construction: {name}\n{body}")
}

fn compile(
    from: Formalism,
    to: Formalism,
    input: &Path,
    output: Option<&Path>,
) -> Result<(), Failure> {
    use Formalism::*;
    let rendered = match (from, to) {
        (AlcAq | AlcBaq | AlcConq, Mddlog) => {
            let q = load_atomic_omq(input, from)?;
            let prog = aq_omq_to_mddlog(&q).map_err(translate_fail)?;
            with_header("type-guess-program", text::write_program(&prog))
        }
        (Mddlog, AlcAq | AlcBaq) => {
            let prog = load_program(input)?;
            let unary = matches!(to, AlcAq);
            if unary != (prog.goal_arity == 1) {
                return Err(Failure::Parse(String::from(
                    "goal arity does not match the requested target formalism",
                )));
            }
            let q = mddlog_to_aq_omq(&prog, pick_variant(&prog)).map_err(translate_fail)?;
            with_header("inclusion-rewriting", text::write_omq(&q))
        }
        (Mddlog, Commsnp) => {
            let prog = load_program(input)?;
            let f = mddlog_to_commsnp(&prog).map_err(translate_fail)?;
            with_header("complement-formula", text::write_msnp(&f, &prog.edb))
        }
        (Commsnp, Mddlog) => {
            let (f, schema) = load_msnp(input, MsnpDialect::Mmsnp)?;
            let prog = commsnp_to_mddlog(&f, &schema).map_err(translate_fail)?;
            with_header("co-query-program", text::write_program(&prog))
        }
        (Fgddlog, Gmsnp) => {
            let prog = load_program(input)?;
            let f = fgddlog_to_gmsnp(&prog).map_err(translate_fail)?;
            with_header("guarded-complement-formula", text::write_msnp(&f, &prog.edb))
        }
        (Gmsnp, Fgddlog) => {
            let (f, schema) = load_msnp(input, MsnpDialect::Gmsnp)?;
            let prog = gmsnp_to_fgddlog(&f, &schema).map_err(translate_fail)?;
            with_header("guarded-program", text::write_program(&prog))
        }
        (Mmsnp2, Gmsnp) => {
            let (f, schema) = load_msnp(input, MsnpDialect::Mmsnp2)?;
            let g = mmsnp2_to_gmsnp(&f, &schema).map_err(translate_fail)?;
            with_header("fact-variable-elimination", text::write_msnp(&g, &schema))
        }
        (Gmsnp, Mmsnp2) => {
            let (f, schema) = load_msnp(input, MsnpDialect::Gmsnp)?;
            let g = gmsnp_to_mmsnp2(&f, &schema, DEFAULT_IMPLICATION_BOUND)
                .map_err(translate_fail)?;
            with_header("fact-variable-introduction", text::write_msnp(&g, &schema))
        }
        _ => {
            return Err(Failure::Unsupported(String::from(
                "no translation between the requested formalisms",
            )))
        }
    };
    write_output(output, &rendered)
}

// --------------------------------------------------------------- template

fn atomic_form(q: &OmqQuery) -> Result<OmqQuery, Failure> {
    match &q.query {
        QueryKind::Aq(_) | QueryKind::Baq(_) => Ok(q.clone()),
        QueryKind::ConQ(_) => Ok(conq_to_aq(q)),
        QueryKind::Ucq(_) => Err(Failure::Unsupported(String::from(
            "template constructions require an atomic or concept query",
        ))),
    }
}

fn template(invert: bool, input: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let rendered = if invert {
        let body = read_file(input)?;
        let family = text::parse_family(&body).map_err(parse_fail)?;
        let q = csp::templates_to_omq(&family).map_err(csp_fail)?;
        with_header("template-internalization", text::write_omq(&q))
    } else {
        let body = read_file(input)?;
        let q = text::parse_omq(&body).map_err(parse_fail)?;
        let q = atomic_form(&q)?;
        let family = csp::aq_omq_to_templates(&q).map_err(csp_fail)?;
        with_header("countermodel-templates", text::write_family(&family))
    };
    write_output(output, &rendered)
}

// ------------------------------------------------------------------- eval

/// Re-checks the data against the query's own schema so every engine sees
/// the same instance and stray relations are rejected up front.
fn fit_instance(inst: Instance, schema: &Schema) -> Result<Instance, Failure> {
    Instance::new(schema.clone(), inst.facts).map_err(parse_fail)
}

fn eval(engine: Engine, max_models: u64, query: &Path, data: &Path) -> Result<(), Failure> {
    let (qdoc, _) = load_doc(query, None)?;
    let data_body = read_file(data)?;
    let inst = text::parse_instance(&data_body).map_err(parse_fail)?;
    let answers: BTreeSet<Vec<String>> = match (engine, qdoc) {
        (Engine::Template, Doc::Omq(q)) => {
            let q = atomic_form(&q)?;
            let family = csp::aq_omq_to_templates(&q).map_err(csp_fail)?;
            let inst = fit_instance(inst, &family.schema)?;
            csp::eval_cocsp(&family, &inst)
        }
        (Engine::Template, Doc::Family(family)) => {
            let inst = fit_instance(inst, &family.schema)?;
            csp::eval_cocsp(&family, &inst)
        }
        (Engine::Ddlog, Doc::Omq(q)) => {
            let q = atomic_form(&q)?;
            let prog = aq_omq_to_mddlog(&q).map_err(translate_fail)?;
            let inst = fit_instance(inst, &prog.edb)?;
            eval_bruteforce(&prog, &inst, max_models).map_err(eval_fail)?
        }
        (Engine::Ddlog, Doc::Prog(prog)) => {
            let inst = fit_instance(inst, &prog.edb)?;
            eval_bruteforce(&prog, &inst, max_models).map_err(eval_fail)?
        }
        (Engine::Msnp, Doc::Omq(q)) => {
            let q = atomic_form(&q)?;
            let prog = aq_omq_to_mddlog(&q).map_err(translate_fail)?;
            let f = mddlog_to_commsnp(&prog).map_err(translate_fail)?;
            let inst = fit_instance(inst, &prog.edb)?;
            eval_msnp(&f, &inst, max_models).map_err(msnp_fail)?
        }
        (Engine::Msnp, Doc::Prog(prog)) => {
            let f = mddlog_to_commsnp(&prog).map_err(translate_fail)?;
            let inst = fit_instance(inst, &prog.edb)?;
            eval_msnp(&f, &inst, max_models).map_err(msnp_fail)?
        }
        (Engine::Msnp, Doc::Msnp(f, schema)) => {
            let inst = fit_instance(inst, &schema)?;
            eval_msnp(&f, &inst, max_models).map_err(msnp_fail)?
        }
        _ => {
            return Err(Failure::Unsupported(String::from(
                "the chosen engine cannot evaluate this query format",
            )))
        }
    };
    for tuple in answers {
        if tuple.is_empty() {
            println!("()");
        } else {
            println!("{}", tuple.join(","));
        }
    }
    Ok(())
}

// ---------------------------------------------------- contain and fodef

fn load_family(path: &Path) -> Result<TemplateFamily, Failure> {
    let (doc, _) = load_doc(path, None)?;
    match doc {
        Doc::Family(f) => Ok(f),
        Doc::Omq(q) => {
            let q = atomic_form(&q)?;
            csp::aq_omq_to_templates(&q).map_err(csp_fail)
        }
        _ => Err(Failure::Unsupported(String::from(
            "containment and rewritability work on queries or template families",
        ))),
    }
}

fn contain(q1: &Path, q2: &Path) -> Result<(), Failure> {
    let f1 = load_family(q1)?;
    let f2 = load_family(q2)?;
    let outcome = csp::contains(&f1, &f2).map_err(csp_fail)?;
    if outcome.contained {
        println!("contained");
    } else {
        println!("not-contained");
        if let Some(witness) = outcome.witness {
            println!("# witness");
            print!("{}", text::template_block(&witness));
        }
    }
    Ok(())
}

fn fodef(max_product: usize, query: &Path) -> Result<(), Failure> {
    let family = load_family(query)?;
    let definable = csp::fo_definable(&family, max_product).map_err(csp_fail)?;
    if definable {
        println!("fo-rewritable");
    } else {
        println!("not-fo-rewritable");
    }
    Ok(())
}
