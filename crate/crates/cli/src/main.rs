//! `beth`: verify the weak Beth counterexample, evaluate formulas and query
//! definability over finite structures.
//!
//! Exit status: 0 when the checks pass or the query is answered positively,
//! 1 for a failed verification or a negative definability answer, 2 for
//! usage and input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beth_core::automorphism::automorphisms;
use beth_core::construction::{
    build_model_with, verify_theorem_with, ConstructionOptions, FamilyMode, Mutation, VerifyOptions,
};
use beth_core::structure::{load_relation, read_structure, write_structure};
use beth_core::{close, evaluate, parse, CylindricSpace, Error, NAryRelation};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "beth", version, about = "n-variable definability workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay the counterexample for n variables and print the report.
    Verify {
        #[arg(long)]
        n: usize,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Predicted atom family recorded in the report.
        #[arg(long, value_enum, default_value_t = Mode::DiagonalRefined)]
        mode: Mode,
        /// Run against a deliberately broken construction.
        #[arg(long, value_enum)]
        mutate: Option<MutationArg>,
        /// Drop S and state |U0| = 3 with four variables (n ≥ 4).
        #[arg(long)]
        without_s: bool,
    },
    /// Print the number of n-tuples satisfying a formula.
    Eval {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        formula: String,
        /// Also list the satisfying tuples in cell order.
        #[arg(long)]
        tuples: bool,
    },
    /// Compute the atoms of the algebra of definable n-ary relations.
    #[command(alias = "atoms")]
    Closure {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        n: usize,
        /// Where to write the atom report; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether a relation is definable; relations of lower arity are
    /// extended by full trailing coordinates.
    Definable {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        n: usize,
        /// JSON document `{"arity": k, "tuples": [[...], ...]}`.
        #[arg(long)]
        relation: PathBuf,
    },
    /// List automorphisms. By default the search is restricted to the
    /// classes of elements that n-variable formulas cannot separate.
    Automorphisms {
        #[arg(long)]
        structure: PathBuf,
        /// Dimension used to derive the sorts; defaults to the largest arity.
        #[arg(long)]
        n: Option<usize>,
        /// Search all m! permutations instead.
        #[arg(long)]
        full: bool,
    },
    /// Write the counterexample model for n variables as a structure document.
    Model {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        without_s: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    AsWritten,
    DiagonalRefined,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    /// Reinterpret R as its rectangular hull.
    RelationIsHull,
    /// Remove |D| = 1 from the implicit definition.
    DropSigmaCardinality,
}

/// Largest n the CLI accepts.
const MAX_N: usize = 5;

enum Failure {
    Usage(String),
    Input(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify {
            n,
            json,
            mode,
            mutate,
            without_s,
        } => verify(n, json.as_deref(), mode, mutate, without_s),
        Command::Eval {
            structure,
            n,
            formula,
            tuples,
        } => eval(&structure, n, &formula, tuples),
        Command::Closure { structure, n, out } => closure(&structure, n, out.as_deref()),
        Command::Definable { structure, n, relation } => definable(&structure, n, &relation),
        Command::Automorphisms { structure, n, full } => list_automorphisms(&structure, n, full),
        Command::Model { n, out, without_s } => model(n, &out, without_s),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn check_construction_n(n: usize) -> Result<(), Failure> {
    if n < 3 {
        return Err(Failure::Usage(format!(
            "--n {n}: the construction needs at least 3 variables"
        )));
    }
    if n > MAX_N {
        return Err(Failure::Usage(format!(
            "--n {n}: refused; M^n has {} cells, beyond the validated range n ≤ {MAX_N}",
            (2 * n + 1).pow(n as u32)
        )));
    }
    Ok(())
}

fn check_dimension(n: usize) -> Result<(), Failure> {
    if n == 0 || n > MAX_N {
        return Err(Failure::Usage(format!(
            "--n {n}: dimension must be between 1 and {MAX_N}"
        )));
    }
    Ok(())
}

fn construction(without_s: bool) -> ConstructionOptions {
    ConstructionOptions { include_s: !without_s }
}

fn verify(n: usize, json: Option<&Path>, mode: Mode, mutate: Option<MutationArg>, without_s: bool) -> Outcome {
    check_construction_n(n)?;
    let options = VerifyOptions {
        mode: match mode {
            Mode::AsWritten => FamilyMode::AsWritten,
            Mode::DiagonalRefined => FamilyMode::DiagonalRefined,
        },
        construction: construction(without_s),
        mutation: mutate.map(|m| match m {
            MutationArg::RelationIsHull => Mutation::RelationIsHull,
            MutationArg::DropSigmaCardinality => Mutation::DropSigmaCardinality,
        }),
    };
    let report = verify_theorem_with(n, options)?;
    print!("{}", report.to_text());
    if let Some(path) = json {
        fs::write(path, report.to_json() + "\n").map_err(Error::from)?;
    }
    Ok(if report.overall {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn eval(path: &Path, n: usize, text: &str, tuples: bool) -> Outcome {
    check_dimension(n)?;
    let structure = read_structure(path)?;
    let formula = parse(text, structure.signature())?;
    let space = CylindricSpace::new(n, structure.universe_size());
    let meaning = evaluate(&structure, &formula, &space)?;
    println!("{}", meaning.count());
    if tuples {
        for t in meaning.tuples() {
            println!("{}", format_tuple(&t));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn format_tuple(t: &[usize]) -> String {
    let parts: Vec<String> = t.iter().map(|a| a.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn closure(path: &Path, n: usize, out: Option<&Path>) -> Outcome {
    check_dimension(n)?;
    let structure = read_structure(path)?;
    let space = CylindricSpace::new(n, structure.universe_size());
    let closure = close(&structure, &space)?;
    let report = serde_json::to_string_pretty(&closure.report()).expect("atom reports always serialize") + "\n";
    match out {
        Some(path) => {
            fs::write(path, report).map_err(Error::from)?;
            let restricted = closure.atoms().iter().filter(|a| a.witness.is_restricted()).count();
            println!(
                "{} atoms over {} cells; {} of {} witnesses are restricted",
                closure.atom_count(),
                space.cells(),
                restricted,
                closure.atom_count()
            );
        }
        None => print!("{report}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn definable(path: &Path, n: usize, relation: &Path) -> Outcome {
    check_dimension(n)?;
    let structure = read_structure(path)?;
    let text = fs::read_to_string(relation).map_err(Error::from)?;
    let rel = load_relation(&text, structure.universe_size())?;
    if rel.arity() > n {
        return Err(Failure::Usage(format!(
            "relation has arity {} but --n is {n}",
            rel.arity()
        )));
    }
    let target = rel.cylinder(n)?;
    let closure = close(&structure, &CylindricSpace::new(n, structure.universe_size()))?;
    match closure.is_definable(&target)? {
        (true, Some(witness)) => {
            println!("definable");
            println!("{witness}");
            Ok(ExitCode::SUCCESS)
        }
        _ => {
            println!("not definable");
            Ok(ExitCode::from(1))
        }
    }
}

fn list_automorphisms(path: &Path, n: Option<usize>, full: bool) -> Outcome {
    let structure = read_structure(path)?;
    let m = structure.universe_size();
    let sorts = if full {
        vec![NAryRelation::full(1, m)]
    } else {
        let n = n.unwrap_or_else(|| structure.signature().max_arity().max(1));
        check_dimension(n)?;
        close(&structure, &CylindricSpace::new(n, m))?.unary_classes()
    };
    let found = automorphisms(&structure, &sorts)?;
    println!("{} automorphisms", found.len());
    if !full {
        let shown: Vec<String> = sorts
            .iter()
            .map(|s| format_tuple(&s.iter_cells().collect::<Vec<_>>()))
            .collect();
        println!("sorts: {}", shown.join(" "));
    }
    for perm in &found {
        println!("{}", format_tuple(perm));
    }
    Ok(ExitCode::SUCCESS)
}

fn model(n: usize, out: &Path, without_s: bool) -> Outcome {
    check_construction_n(n)?;
    let model = build_model_with(n, construction(without_s))?;
    write_structure(out, &model.structure)?;
    let labels: Vec<String> = model.labels.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("{} elements: {}", model.universe_size(), labels.join(" "));
    Ok(ExitCode::SUCCESS)
}
