//! `dpl`: model checking, frame validity, classification, correspondence
//! experiments and proof checking from the command line.
//!
//! Exit codes: 0 success, 1 a verdict or property failed, 2 bad input,
//! 3 a resource cap was hit.

use clap::{Args, Parser, Subcommand};
use dpl::definability::{run_experiment, DefError, ExperimentConfig, Mode, PropertyId};
use dpl::formula::{parse, print, Formula};
use dpl::process::{self, DynamicMarkovProcess, Valuation};
use dpl::proofs;
use dpl::semantics::{EvalError, Evaluator, Variant, Verdict, DEFAULT_MODEL_CAP};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dpl", version, about = "Dynamic probability logic over finite Markov processes")]
struct Cli {
    /// Machine-readable JSON output
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a process with a valuation
    Check {
        model: PathBuf,
        #[arg(short, long)]
        formula: String,
        /// Report satisfaction at this world; exit 1 if it fails there
        #[arg(short, long)]
        world: Option<usize>,
    },
    /// Decide validity of a formula on a frame over all valuations
    FrameValid {
        process: PathBuf,
        #[arg(short, long)]
        formula: String,
        /// Largest number of valuations to enumerate
        #[arg(long, default_value_t = DEFAULT_MODEL_CAP)]
        cap: u128,
        /// Write a counterexample as a model file that `check` can replay
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Structural class and stochastic properties of a process
    Classify { process: PathBuf },
    /// Compare frame validity of a defining formula with its direct oracle
    Correspond(CorrespondArgs),
    /// Check a proof file
    Prove { proofs: PathBuf },
    /// Parse a formula and dump its syntax tree
    Parse {
        #[arg(short, long)]
        formula: String,
    },
}

#[derive(Args)]
struct CorrespondArgs {
    /// One of: measure-preserving, ergodic, mixing, stationary, irreducible,
    /// recurrent, purely-probabilistic, harsanyi
    property: PropertyId,
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    exhaustive: bool,
    #[arg(long)]
    random: bool,
    /// State count (exhaustive) or largest state count (random)
    #[arg(short = 'n', long, default_value_t = 3)]
    states: usize,
    /// Denominator bound for generated probabilities
    #[arg(long, default_value_t = 4)]
    denom: u32,
    /// Number of random samples
    #[arg(short = 'N', long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate the defining formula exactly as first written down
    #[arg(long)]
    as_printed: bool,
}

enum Failure {
    Input(String),
    Resource(String),
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::ResourceCap { .. } => Failure::Resource(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<DefError> for Failure {
    fn from(e: DefError) -> Self {
        match e {
            DefError::Resource(_) => Failure::Resource(e.to_string()),
            DefError::Eval(inner) => inner.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Run = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { model, formula, world } => check(cli.json, model, formula, *world),
        Command::FrameValid { process, formula, cap, witness_out } => {
            frame_valid(cli.json, process, formula, *cap, witness_out.as_deref())
        }
        Command::Classify { process } => classify(cli.json, process),
        Command::Correspond(args) => correspond(cli.json, args),
        Command::Prove { proofs } => prove(cli.json, proofs),
        Command::Parse { formula } => parse_cmd(cli.json, formula),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            report_error(cli.json, "input", &msg);
            ExitCode::from(2)
        }
        Err(Failure::Resource(msg)) => {
            report_error(cli.json, "resource", &msg);
            ExitCode::from(3)
        }
    }
}

fn report_error(as_json: bool, kind: &str, msg: &str) {
    if as_json {
        println!("{}", json!({ "error": kind, "message": msg }));
    } else {
        eprintln!("error: {}", msg);
    }
}

fn emit(as_json: bool, value: Value, human: impl FnOnce() -> String) {
    let text = if as_json { serde_json::to_string_pretty(&value).expect("serializable") } else { human() };
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout(), "{}", text);
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {}", path.display(), e)))
}

fn load_process(path: &Path) -> Result<(DynamicMarkovProcess, Option<Valuation>), Failure> {
    process::from_json(&read(path)?).map_err(|e| Failure::Input(format!("{}: {}", path.display(), e)))
}

fn formula(text: &str) -> Result<Formula, Failure> {
    parse(text).map_err(|e| Failure::Input(format!("formula: {}", e)))
}

fn states(set: process::StateSet) -> Vec<usize> {
    set.states().collect()
}

fn valuation_json(v: &Valuation) -> BTreeMap<String, Vec<usize>> {
    v.iter().map(|(k, s)| (k.clone(), states(*s))).collect()
}

fn check(as_json: bool, path: &Path, text: &str, world: Option<usize>) -> Run {
    let (p, val) = load_process(path)?;
    let val = val.ok_or_else(|| Failure::Input(format!("{}: no valuation", path.display())))?;
    let f = formula(text)?;
    if let Some(w) = world.filter(|&w| w >= p.n_states) {
        return Err(Failure::Input(format!("world {} outside a {}-state process", w, p.n_states)));
    }
    let ext = Evaluator::new(&p).extension(&f, &val)?;
    let holds = world.map(|w| ext.contains(w));
    emit(
        as_json,
        json!({ "formula": print(&f), "extension": states(ext), "bits": ext.0, "world": world, "holds": holds }),
        || {
            let mut s = format!("extension {:?}", states(ext));
            if let (Some(w), Some(h)) = (world, holds) {
                s.push_str(&format!("\nworld {}: {}", w, if h { "true" } else { "false" }));
            }
            s
        },
    );
    Ok(holds.unwrap_or(true))
}

fn frame_valid(as_json: bool, path: &Path, text: &str, cap: u128, out: Option<&Path>) -> Run {
    let (p, _) = load_process(path)?;
    let f = formula(text)?;
    match Evaluator::new(&p).frame_valid(&f, cap)? {
        Verdict::Valid => {
            emit(as_json, json!({ "valid": true }), || "valid".into());
            Ok(true)
        }
        Verdict::Counterexample { valuation, world, formula } => {
            if let Some(out) = out {
                std::fs::write(out, process::to_json(&p, Some(&valuation)))
                    .map_err(|e| Failure::Input(format!("{}: {}", out.display(), e)))?;
            }
            let v = valuation_json(&valuation);
            emit(
                as_json,
                json!({ "valid": false, "world": world, "valuation": v, "formula": print(&formula) }),
                || {
                    let parts: Vec<String> = v.iter().map(|(k, s)| format!("{}={:?}", k, s)).collect();
                    format!("counterexample at world {} with {}", world, parts.join(" "))
                },
            );
            Ok(false)
        }
    }
}

fn classify(as_json: bool, path: &Path) -> Run {
    let (p, _) = load_process(path)?;
    let class = p.classify();
    let mut value = serde_json::to_value(class).expect("serializable");
    let mut lines = vec![
        format!("measure_preserving {}", class.measure_preserving),
        format!("purely_probabilistic {}", class.purely_probabilistic),
        format!("dps {}", class.dynamic_probability_space),
        format!("ads {}", class.abstract_dynamical_system),
        format!("harsanyi {}", class.harsanyi),
    ];
    let flags = [
        ("stationary", PropertyId::Stationary),
        ("ergodic", PropertyId::Ergodic),
        ("mixing", PropertyId::Mixing),
        ("irreducible", PropertyId::Irreducible),
        ("recurrent", PropertyId::Recurrent),
    ];
    for (key, id) in flags {
        let flag = match id.admissible(&p) {
            Ok(()) => Some(id.oracle(&p)?),
            Err(_) => None,
        };
        value[key] = json!(flag);
        lines.push(format!("{} {}", key, flag.map_or("n/a".to_string(), |b| b.to_string())));
    }
    emit(as_json, value, || lines.join("\n"));
    Ok(true)
}

fn correspond(as_json: bool, a: &CorrespondArgs) -> Run {
    if a.states == 0 || a.denom == 0 {
        return Err(Failure::Input("state count and denominator bound must be positive".into()));
    }
    let config = ExperimentConfig {
        mode: if a.random { Mode::Random } else { Mode::Exhaustive },
        n_states: a.states,
        denom_bound: a.denom,
        samples: a.samples,
        seed: a.seed,
        variant: if a.as_printed { Variant::AsPrinted } else { Variant::Repaired },
    };
    let (_, summary) = run_experiment(a.property, &config)?;
    emit(as_json, serde_json::to_value(&summary).expect("serializable"), || {
        let mut s = format!(
            "{} {:?}: {} frames, {} agree, {} disagree",
            summary.property, summary.mode, summary.total, summary.agree, summary.disagree
        );
        for w in &summary.witnesses {
            s.push_str(&format!(
                "\n  {}: frame {} oracle {}",
                w.label,
                if w.frame_verdict { "valid" } else { "invalid" },
                w.oracle_verdict
            ));
        }
        s
    });
    Ok(summary.disagree == 0)
}

fn prove(as_json: bool, path: &Path) -> Run {
    let file = proofs::load(&read(path)?).map_err(|e| Failure::Input(format!("{}: {}", path.display(), e)))?;
    let (outcomes, _) = proofs::check_file(&file);
    let ok = outcomes.iter().all(|o| o.ok());
    emit(as_json, json!({ "ok": ok, "lemmas": outcomes }), || {
        outcomes
            .iter()
            .map(|o| match &o.error {
                None => format!("ok   {} ({}): {}", o.name, o.system, o.conclusion.as_deref().unwrap_or("")),
                Some(e) => format!("FAIL {}", e),
            })
            .collect::<Vec<_>>()
            .join("\n")
    });
    Ok(ok)
}

fn parse_cmd(as_json: bool, text: &str) -> Run {
    let f = formula(text)?;
    emit(as_json, json!({ "printed": print(&f), "ast": format!("{:?}", f) }), || format!("{:#?}", f));
    Ok(true)
}
