//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails (the report
//! is still written), 2 on usage or configuration errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::engine::{maximally_mixed, DensityState};
use crate::error::{Error, Result};
use crate::game::{certify, search_min_guessing, Check, Scenario};
use crate::linalg::{ComplexMatrix, DEFAULT_TOL};
use crate::observables::{MagicSquare, MagicStar, TablesDocument};
use crate::report::{
    report_text, tables_text, verification_text, ReportDocument, SimulationSection,
    VerificationDocument, SCHEMA_VERSION,
};
use crate::simulator::{compare_with_exact, estimate, run_trials, write_csv, SimulationConfig};
use crate::verify::{verify, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "kscert", version, about = "Contextuality-certified randomness: magic square and magic star")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the observable tables.
    Tables(OutputArgs),
    /// Run the magic-square invariant suite.
    VerifySquare(VerifyArgs),
    /// Run the magic-star invariant suite.
    VerifyStar(VerifyArgs),
    /// Certify a state: inequality value, guessing probability, min-entropy.
    Certify(CertifyArgs),
    /// Simulate rounds of the game and estimate everything from samples.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Square,
    Star,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Square => Scenario::Square,
            ScenarioArg::Star => Scenario::Star,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit the timestamp so identical invocations give identical bytes.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Number of random states to test.
    #[arg(long, default_value_t = 100)]
    pub states: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tolerance: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub scenario: ScenarioArg,
    /// maximally-mixed | common-eigenstate | mixture:EPS | random:SEED
    #[arg(long, default_value = "maximally-mixed", conflicts_with = "state_file")]
    pub state: String,
    /// JSON density matrix: {"dim": d, "entries": [[re, im], ...]} row-major.
    #[arg(long)]
    pub state_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tolerance: f64,
    /// Also run a random-restart search for the smallest guessing
    /// probability (reported as evidence, not a check).
    #[arg(long, default_value_t = 0)]
    pub search_restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 100_000)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tolerance: f64,
    /// Write the per-round bit records as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Named states accepted by `--state`.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    MaximallyMixed,
    /// Joint +1 eigenstate of A1, B1, C1 (square) or of X1, X2, X3 (star).
    CommonEigenstate,
    /// `(1 − ε)·maximally-mixed + ε·common-eigenstate`.
    Mixture(f64),
    /// Seeded random mixed state of random rank.
    Random(u64),
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown state {s:?}"));
        match s.split_once(':') {
            None => match s {
                "maximally-mixed" => Ok(StateSpec::MaximallyMixed),
                "common-eigenstate" => Ok(StateSpec::CommonEigenstate),
                _ => Err(bad()),
            },
            Some(("mixture", eps)) => {
                let eps: f64 = eps.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&eps) {
                    return Err(Error::Config(format!("mixture weight {eps} outside [0,1]")));
                }
                Ok(StateSpec::Mixture(eps))
            }
            Some(("random", seed)) => Ok(StateSpec::Random(seed.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl StateSpec {
    pub fn build(&self, scenario: Scenario) -> Result<DensityState> {
        let n = scenario.n_qubits();
        let eigen = || -> Result<DensityState> {
            match scenario {
                Scenario::Square => {
                    let sq = MagicSquare::new();
                    DensityState::common_eigenstate(&[(sq.a(1), 0), (sq.b(1), 0), (sq.c(1), 0)])
                }
                Scenario::Star => {
                    let star = MagicStar::new();
                    let members: Vec<_> = star.edge(2).members().iter().map(|o| (o, 0)).collect();
                    DensityState::common_eigenstate(&members)
                }
            }
        };
        match self {
            StateSpec::MaximallyMixed => maximally_mixed(n),
            StateSpec::CommonEigenstate => eigen(),
            StateSpec::Mixture(eps) => maximally_mixed(n)?.mix(&eigen()?, *eps),
            StateSpec::Random(seed) => {
                let dim = 1 << n;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let rank = 1 + (*seed as usize % dim);
                Ok(DensityState::random(dim, rank, &mut rng))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StateFile {
    Object { dim: usize, entries: Vec<[f64; 2]> },
    Flat(Vec<[f64; 2]>),
}

/// Reads a density matrix from JSON and validates it.
pub fn load_state_file(path: &Path, tol: f64) -> Result<DensityState> {
    let text = fs::read_to_string(path)?;
    let parsed: StateFile = serde_json::from_str(&text)?;
    let (dim, entries) = match parsed {
        StateFile::Object { dim, entries } => (dim, entries),
        StateFile::Flat(entries) => {
            let dim = (entries.len() as f64).sqrt().round() as usize;
            (dim, entries)
        }
    };
    let entries = entries.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
    DensityState::new(ComplexMatrix::new(dim, entries)?, tol)
}

fn resolve_state(args: &StateArgs, tol: f64) -> Result<(Scenario, DensityState, String)> {
    let scenario: Scenario = args.scenario.into();
    let (state, descriptor) = match &args.state_file {
        Some(path) => (load_state_file(path, tol)?, format!("file:{}", path.display())),
        None => (args.state.parse::<StateSpec>()?.build(scenario)?, args.state.clone()),
    };
    let dim = 1usize << scenario.n_qubits();
    if state.dim() != dim {
        return Err(Error::Config(format!(
            "{scenario} scenario needs a {dim}x{dim} state, got {0}x{0}",
            state.dim()
        )));
    }
    Ok((scenario, state, descriptor))
}

fn check_tolerance(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Config(format!("tolerance {tol} must be a nonnegative number")));
    }
    Ok(())
}

fn timestamp(out: &OutputArgs) -> Option<u64> {
    if out.deterministic {
        return None;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Execution {
    pub body: String,
    pub csv: Option<(PathBuf, String)>,
    pub out: Option<PathBuf>,
    pub all_pass: bool,
}

impl Execution {
    pub fn exit_code(&self) -> i32 {
        if self.all_pass {
            0
        } else {
            1
        }
    }
}

fn render<T: serde::Serialize>(format: Format, doc: &T, text: impl FnOnce() -> String) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc)?;
            s.push('\n');
            s
        }
        Format::Text => text(),
    })
}

/// Runs a parsed command without touching the filesystem for output.
pub fn execute(cli: &Cli) -> Result<Execution> {
    match &cli.command {
        Command::Tables(out) => {
            let (sq, star) = (MagicSquare::new(), MagicStar::new());
            let doc = TablesDocument::build(&sq, &star);
            Ok(Execution {
                body: render(out.format, &doc, || tables_text(&sq, &star))?,
                csv: None,
                out: out.out.clone(),
                all_pass: true,
            })
        }
        Command::VerifySquare(args) | Command::VerifyStar(args) => {
            check_tolerance(args.tolerance)?;
            let scenario = match cli.command {
                Command::VerifySquare(_) => Scenario::Square,
                _ => Scenario::Star,
            };
            if args.states == 0 {
                return Err(Error::Config("--states must be at least 1".into()));
            }
            let opts = VerifyOptions {
                states: args.states,
                seed: args.seed,
                tol: args.tolerance,
            };
            let checks = verify(scenario, &opts)?;
            let doc = VerificationDocument {
                schema_version: SCHEMA_VERSION.to_string(),
                scenario,
                random_states: args.states,
                seed: args.seed,
                tolerance: args.tolerance,
                all_pass: checks.iter().all(|c| c.pass),
                checks,
                generated_at: timestamp(&args.output),
            };
            Ok(Execution {
                body: render(args.output.format, &doc, || verification_text(&doc))?,
                csv: None,
                out: args.output.out.clone(),
                all_pass: doc.all_pass,
            })
        }
        Command::Certify(args) => {
            check_tolerance(args.tolerance)?;
            let (scenario, state, descriptor) = resolve_state(&args.state, args.tolerance)?;
            let rep = certify(scenario, &state, &descriptor, args.tolerance)?;
            let mut doc = ReportDocument::from_certification(&rep, args.tolerance);
            if args.search_restarts > 0 {
                let search = search_min_guessing(scenario, args.search_restarts, 50, args.seed)?;
                // evidence only: a search can never beat the exact lower bound
                let floor = 1.0 / f64::from(1u32 << scenario.n_qubits());
                doc.checks.push(Check::new(
                    format!(
                        "search_min_guessing_at_least_{}",
                        if scenario == Scenario::Square { "1_over_4" } else { "1_over_8" }
                    ),
                    search.best_guessing_probability >= floor - args.tolerance,
                    args.tolerance,
                ));
            }
            doc.generated_at = timestamp(&args.output);
            Ok(Execution {
                body: render(args.output.format, &doc, || report_text(&doc))?,
                csv: None,
                out: args.output.out.clone(),
                all_pass: doc.all_pass(),
            })
        }
        Command::Simulate(args) => {
            check_tolerance(args.tolerance)?;
            let (scenario, state, descriptor) = resolve_state(&args.state, args.tolerance)?;
            let mut cfg = SimulationConfig::new(scenario, state.clone(), &descriptor, args.rounds, args.seed);
            cfg.tol = args.tolerance;
            cfg.validate()?;
            let records = run_trials(&cfg)?;
            let empirical = estimate(&records)?;
            let fidelity = compare_with_exact(&empirical, &state, args.tolerance)?;

            let rep = certify(scenario, &state, &descriptor, args.tolerance)?;
            let mut doc = ReportDocument::from_certification(&rep, args.tolerance);
            doc.checks.push(Check::new(
                "no_impossible_outcomes_sampled",
                fidelity.exact_mismatches == 0,
                args.tolerance,
            ));
            doc.checks.push(Check::new(
                "frequencies_within_5_standard_errors",
                fidelity.max_z <= 5.0,
                5.0,
            ));
            doc.simulation = Some(SimulationSection {
                rounds: args.rounds,
                seed: args.seed,
                empirical,
            });
            doc.generated_at = timestamp(&args.output);

            let csv = match &args.csv {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_csv(&records, &mut buf)?;
                    let text = String::from_utf8(buf).expect("csv output is ASCII");
                    Some((path.clone(), text))
                }
                None => None,
            };
            Ok(Execution {
                body: render(args.output.format, &doc, || report_text(&doc))?,
                csv,
                out: args.output.out.clone(),
                all_pass: doc.all_pass(),
            })
        }
    }
}

/// Parses `args`, executes, writes outputs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let exec = match execute(&cli) {
        Ok(exec) => exec,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Err(e) = write_outputs(&exec) {
        eprintln!("error: {e}");
        return 2;
    }
    exec.exit_code()
}

fn write_outputs(exec: &Execution) -> Result<()> {
    if let Some((path, text)) = &exec.csv {
        fs::write(path, text)?;
    }
    match &exec.out {
        Some(path) => fs::write(path, &exec.body)?,
        None => print!("{}", exec.body),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("kscert").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn state_spec_parsing() {
        assert_eq!("maximally-mixed".parse::<StateSpec>().unwrap(), StateSpec::MaximallyMixed);
        assert_eq!("mixture:0.5".parse::<StateSpec>().unwrap(), StateSpec::Mixture(0.5));
        assert_eq!("random:7".parse::<StateSpec>().unwrap(), StateSpec::Random(7));
        assert!("mixture:2".parse::<StateSpec>().is_err());
        assert!("pure".parse::<StateSpec>().is_err());
    }

    #[test]
    fn star_common_eigenstate_is_plus_plus_plus() {
        let rho = StateSpec::CommonEigenstate.build(Scenario::Star).unwrap();
        assert!(rho
            .matrix()
            .approx_eq(&ComplexMatrix::from_fn(8, |_, _| Complex64::new(0.125, 0.0)), 1e-12)
            .unwrap());
    }

    #[test]
    fn unknown_flag_rejected() {
        let err = Cli::try_parse_from(["kscert", "certify", "--bogus"]).unwrap_err();
        assert!(err.use_stderr());
    }

    #[test]
    fn certify_square_json() {
        let exec = execute(&parse(&["certify", "--scenario", "square", "--state", "maximally-mixed", "--deterministic"])).unwrap();
        assert!(exec.all_pass);
        let v: serde_json::Value = serde_json::from_str(&exec.body).unwrap();
        assert_eq!(v["inequality"]["quantum_value"], 6.0);
        assert_eq!(v["guessing_probability"], 0.25);
        assert_eq!(v["min_entropy_bits"], 2.0);
    }

    #[test]
    fn certify_with_search() {
        let exec = execute(&parse(&["certify", "--search-restarts", "2", "--deterministic"])).unwrap();
        assert!(exec.all_pass);
        assert!(exec.body.contains("search_min_guessing_at_least_1_over_4"));
    }

    #[test]
    fn scenario_state_mismatch_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.json");
        let entries: Vec<[f64; 2]> = (0..16)
            .map(|k| if k % 5 == 0 { [0.25, 0.0] } else { [0.0, 0.0] })
            .collect();
        fs::write(&path, serde_json::json!({"dim": 4, "entries": entries}).to_string()).unwrap();
        let state = load_state_file(&path, 1e-9).unwrap();
        assert_eq!(state.dim(), 4);
        let p = path.to_str().unwrap();
        let err = execute(&parse(&["certify", "--scenario", "star", "--state-file", p])).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert_eq!(run(["kscert", "certify", "--scenario", "star", "--state-file", p]), 2);
    }

    #[test]
    fn invalid_state_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        // trace 2
        fs::write(&path, "[[1,0],[0,0],[0,0],[1,0]]").unwrap();
        assert!(matches!(load_state_file(&path, 1e-9), Err(Error::InvalidTrace(_))));
    }

    #[test]
    fn text_tables() {
        let exec = execute(&parse(&["tables", "--format", "text"])).unwrap();
        assert!(exec.body.contains("C1 = YZ"));
        assert!(exec.body.contains("E1 = {XXX, XYY, YXY, YYX}"));
    }

    #[test]
    fn noisy_state_fails_nothing_but_reports() {
        // Δ = 6 holds for every state; mixtures lower the randomness only
        let exec = execute(&parse(&["certify", "--state", "mixture:0.5", "--deterministic"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&exec.body).unwrap();
        let g = v["guessing_probability"].as_f64().unwrap();
        assert!(g > 0.25 && g < 1.0);
    }
}
