//! Command-line front end.
//!
//! Exit status: 0 on success, 2 when an input fails validation, 3 when an
//! enumeration budget is exceeded, 1 for anything else (including usage).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::error::Error;
use crate::io::{
    objective_name, parse_game, parse_valuation_str, safety_result, strategy_entries, to_pretty_json, turn_based_to_file,
    value_entries, Bounds, Game, IoError, LoadedGame, Metadata, ResultFile, TraceWriter, DEFAULT_DIGITS,
    FORMAT_VERSION,
};
use crate::matrix::DEFAULT_ENUM_BUDGET;
use crate::model::{Objective, ObjectiveKind, Player, StateSet, TurnBasedGame, Valuation};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::reach::{
    anytime_solve, binary_transform, reach_vi_step, tb_reach_strategy_improvement, termination_bound, Precision,
};
use crate::reduction::tb_reduce;
use crate::safety::{solve_safety, SafetyOptions, UpperBoundSource};

/// Overrides the enumeration budget of the reductions and support enumerations.
pub const BUDGET_ENV: &str = "CSG_ENUM_BUDGET";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "csg", version, about = "Exact solver for stochastic games with safety and reachability objectives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Fractional digits of the decimal rendering.
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    digits: usize,
    /// Write the NDJSON iteration trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a game file.
    Validate { file: PathBuf },
    /// Strategy improvement for a safety objective.
    SolveSafety {
        file: PathBuf,
        /// Also run upper-bound value iteration and stop once the gap is at most this.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long = "max-iters", default_value_t = 10_000)]
        max_iters: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Reachability: strategy improvement on turn-based games, value iteration on concurrent ones.
    SolveReach {
        file: PathBuf,
        /// Concurrent games: stop once successive iterates differ by at most this.
        #[arg(long)]
        epsilon: Option<String>,
        /// Concurrent games: maximum value-iteration rounds.
        #[arg(long, default_value_t = 10_000)]
        rounds: usize,
        /// Concurrent games: iterate in exact arithmetic instead of 64-bit dyadic rounding.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Interleaved lower and upper bounds for a safety objective.
    Anytime {
        file: PathBuf,
        #[arg(long)]
        epsilon: String,
        #[arg(long = "max-iters", default_value_t = 10_000)]
        max_iters: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Rewrite a turn-based game so every random state is a fair coin.
    ToBinary {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Termination bounds of turn-based reachability strategy improvement.
    Bounds {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Emit the turn-based reduction of a concurrent safety game at a valuation.
    Reduce {
        file: PathBuf,
        #[arg(long)]
        valuation: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Io(#[from] IoError),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(IoError::Invalid(_)) | CliError::Core(Error::Invalid(_)) => EXIT_INVALID,
            CliError::Core(Error::Budget { .. }) => EXIT_BUDGET,
            _ => EXIT_FAILURE,
        }
    }
}

fn usage_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn budget() -> Result<u128, CliError> {
    match std::env::var(BUDGET_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{BUDGET_ENV} must be a non-negative integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_ENUM_BUDGET),
    }
}

fn positive_rational(s: &str, flag: &str) -> Result<Rational, CliError> {
    let r = parse_rational(s).map_err(|e| CliError::Usage(format!("{flag}: {:?}: {}", e.input, e.reason)))?;
    if r <= Rational::from_integer(0.into()) {
        return usage_err(format!("{flag} must be positive"));
    }
    Ok(r)
}

fn need(loaded: &LoadedGame, kind: ObjectiveKind, cmd: &str) -> Result<StateSet, CliError> {
    if loaded.objective.kind != kind {
        let want = match kind {
            ObjectiveKind::Safety => "safety",
            ObjectiveKind::Reachability => "reachability",
        };
        return usage_err(format!("{cmd} needs a {want} objective"));
    }
    Ok(loaded.objective.states.clone())
}

fn turn_based<'a>(loaded: &'a LoadedGame, cmd: &str) -> Result<&'a TurnBasedGame, CliError> {
    match &loaded.game {
        Game::TurnBased(g) => Ok(g),
        Game::Concurrent(_) => usage_err(format!("{cmd} needs a turn-based game")),
    }
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(IoError::from)?,
        None => stdout.write_all(text.as_bytes()).map_err(IoError::from)?,
    }
    Ok(())
}

fn emit_trace(trace: &TraceWriter, path: Option<&Path>) -> Result<(), CliError> {
    if let Some(p) = path {
        std::fs::write(p, trace.contents()).map_err(IoError::from)?;
    }
    Ok(())
}

fn big_json(n: &BigUint) -> Value {
    match n.to_u64() {
        Some(x) => json!(x),
        None => json!(n.to_string()),
    }
}

fn cmd_validate(file: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let loaded = parse_game(file)?;
    let kind = match loaded.game {
        Game::Concurrent(_) => "concurrent",
        Game::TurnBased(_) => "turn-based",
    };
    writeln!(
        stdout,
        "ok: {kind} game, {} states, {} objective on {} states",
        loaded.game.num_states(),
        objective_name(&loaded.objective),
        loaded.objective.states.len()
    )
    .map_err(IoError::from)?;
    Ok(())
}

fn cmd_solve_safety(
    file: &Path,
    epsilon: Option<&str>,
    max_iters: usize,
    out: &Output,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let loaded = parse_game(file)?;
    let safe = need(&loaded, ObjectiveKind::Safety, "solve-safety")?;
    let cg = loaded.game.concurrent();
    let mut options = SafetyOptions {
        max_iterations: max_iters,
        enum_budget: budget()?,
        ..SafetyOptions::default()
    };
    if let Some(e) = epsilon {
        options.epsilon_gap = Some(positive_rational(e, "--epsilon")?);
        options.upper_bound_source = UpperBoundSource::ValueIteration;
    }
    let report = solve_safety(&cg, &safe, &options)?;
    let trace = TraceWriter::from_safety(cg.states(), &report.records, &report.upper)?;
    let result = safety_result(&cg, &loaded.objective, &report, "solve-safety", out.digits);
    emit_trace(&trace, out.trace.as_deref())?;
    emit(&to_pretty_json(&result), out.output.as_deref(), stdout)
}

fn cmd_anytime(
    file: &Path,
    epsilon: &str,
    max_iters: usize,
    out: &Output,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let loaded = parse_game(file)?;
    let safe = need(&loaded, ObjectiveKind::Safety, "anytime")?;
    let eps = positive_rational(epsilon, "--epsilon")?;
    let cg = loaded.game.concurrent();
    let options = SafetyOptions {
        max_iterations: max_iters,
        enum_budget: budget()?,
        ..SafetyOptions::default()
    };
    let rep = anytime_solve(&cg, &safe, &eps, &options)?;
    let ids = cg.states();
    let trace = TraceWriter::from_safety(ids, &rep.report.records, &rep.upper)?;
    let result = ResultFile {
        format_version: FORMAT_VERSION,
        objective: objective_name(&loaded.objective).into(),
        values: value_entries(rep.final_lower(), ids, Some(out.digits)),
        strategy: strategy_entries(&cg, &rep.report.final_selector),
        metadata: Metadata {
            command: "anytime".into(),
            iterations: rep.report.records.len(),
            stop_reason: rep.stop_reason.to_string(),
            terminated: rep.report.terminated,
            gap: Some(format_rational(&rep.gap)),
            bounds: Some(Bounds {
                lower: value_entries(rep.final_lower(), ids, Some(out.digits)),
                upper: value_entries(rep.final_upper(), ids, Some(out.digits)),
            }),
        },
    };
    emit_trace(&trace, out.trace.as_deref())?;
    emit(&to_pretty_json(&result), out.output.as_deref(), stdout)
}

fn max_change(a: &Valuation, b: &Valuation) -> Rational {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| if x > y { x - y } else { y - x })
        .max()
        .unwrap_or_default()
}

fn cmd_solve_reach(
    file: &Path,
    epsilon: Option<&str>,
    rounds: usize,
    exact: bool,
    out: &Output,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let loaded = parse_game(file)?;
    let target = need(&loaded, ObjectiveKind::Reachability, "solve-reach")?;
    let cg = loaded.game.concurrent();
    let ids = cg.states().to_vec();
    let mut trace = TraceWriter::new(&ids);
    let (values, strategy, metadata) = match &loaded.game {
        Game::TurnBased(tb) => {
            let rep = tb_reach_strategy_improvement(tb, &target)?;
            for (i, v) in rep.history.iter().enumerate() {
                trace.other(i, "Evaluation", v)?;
            }
            let sel = tb.selector_from(Player::One, &rep.strategy);
            let meta = Metadata {
                command: "solve-reach".into(),
                iterations: rep.iterations,
                stop_reason: "ExactTermination".into(),
                terminated: true,
                gap: Some("0".into()),
                bounds: None,
            };
            (rep.values, strategy_entries(&cg, &sel), meta)
        }
        Game::Concurrent(_) => {
            let eps = epsilon.map(|e| positive_rational(e, "--epsilon")).transpose()?;
            let precision = if exact { Precision::Exact } else { Precision::Dyadic(64) };
            let mut u = Valuation::indicator(&target);
            trace.other(0, "ReachVI", &u)?;
            let mut stop = "RoundCap";
            let mut done = 0;
            for k in 1..=rounds {
                let next = reach_vi_step(&cg, &target, Player::One, &u);
                if next == u.values() {
                    stop = "Fixpoint";
                    break;
                }
                let next = crate::reach::round_all(next, precision, false);
                done = k;
                let delta = max_change(&u, &next);
                trace.other(k, "ReachVI", &next)?;
                u = next;
                if eps.as_ref().is_some_and(|e| &delta <= e) {
                    stop = "DeltaBelowEpsilon";
                    break;
                }
            }
            let meta = Metadata {
                command: "solve-reach".into(),
                iterations: done,
                stop_reason: stop.into(),
                terminated: stop == "Fixpoint",
                gap: None,
                bounds: None,
            };
            (u, Vec::new(), meta)
        }
    };
    let result = ResultFile {
        format_version: FORMAT_VERSION,
        objective: objective_name(&loaded.objective).into(),
        values: value_entries(&values, &ids, Some(out.digits)),
        strategy,
        metadata,
    };
    emit_trace(&trace, out.trace.as_deref())?;
    emit(&to_pretty_json(&result), out.output.as_deref(), stdout)
}

fn cmd_to_binary(file: &Path, output: &Path) -> Result<(), CliError> {
    let loaded = parse_game(file)?;
    let tb = turn_based(&loaded, "to-binary")?;
    let bin = binary_transform(tb);
    let objective = Objective {
        kind: loaded.objective.kind,
        states: bin.lift_set(&loaded.objective.states),
    };
    let text = to_pretty_json(&turn_based_to_file(&bin.game, &objective));
    std::fs::write(output, text).map_err(IoError::from)?;
    Ok(())
}

fn cmd_bounds(file: &Path, output: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let loaded = parse_game(file)?;
    let tb = turn_based(&loaded, "bounds")?;
    let b = termination_bound(tb);
    let doc = json!({
        "states": b.states,
        "randomStates": b.random_states,
        "transformed": b.transformed,
        "stepBound": big_json(&b.step_bound),
        "strategyBound": big_json(&b.strategy_bound),
        "bound": big_json(&b.min()),
    });
    emit(&to_pretty_json(&doc), output, stdout)
}

fn cmd_reduce(file: &Path, valuation: &Path, output: &Path) -> Result<(), CliError> {
    let loaded = parse_game(file)?;
    let safe = need(&loaded, ObjectiveKind::Safety, "reduce")?;
    let cg = loaded.game.concurrent();
    let text = std::fs::read_to_string(valuation).map_err(IoError::from)?;
    let v = parse_valuation_str(&text, cg.states())?;
    let reduced = tb_reduce(&cg, &v, &safe, budget()?)?;
    let file = turn_based_to_file(&reduced.game, &Objective::safety(reduced.safe_set.clone()));
    std::fs::write(output, to_pretty_json(&file)).map_err(IoError::from)?;
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { file } => cmd_validate(&file, stdout),
        Command::SolveSafety {
            file,
            epsilon,
            max_iters,
            out,
        } => cmd_solve_safety(&file, epsilon.as_deref(), max_iters, &out, stdout),
        Command::SolveReach {
            file,
            epsilon,
            rounds,
            exact,
            out,
        } => cmd_solve_reach(&file, epsilon.as_deref(), rounds, exact, &out, stdout),
        Command::Anytime {
            file,
            epsilon,
            max_iters,
            out,
        } => cmd_anytime(&file, &epsilon, max_iters, &out, stdout),
        Command::ToBinary { file, output } => cmd_to_binary(&file, &output),
        Command::Bounds { file, output } => cmd_bounds(&file, output.as_deref(), stdout),
        Command::Reduce {
            file,
            valuation,
            output,
        } => cmd_reduce(&file, &valuation, &output),
    }
}

/// Runs one command line and returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_FAILURE;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
