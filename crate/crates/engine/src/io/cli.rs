//! Command-line surface.
//!
//! Exit codes: 0 success, 1 input error, 2 infeasible, 3 solver failure.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use lp_core::{check_kkt, solve as lp_solve};

use crate::clearing::{build_hourly_lp, clear_with_options, ClearingError, ClearingInput};
use crate::io::emit::{
    emit_results, emit_sweep, read_solution_dump, write_solution_dump, SavedHour,
};
use crate::io::schema::{load_bids, load_inputs, load_network, write_input_files, RunConfig};
use crate::model::DEFAULT_HORIZON;
use crate::scenarios::{
    case1_sweep, case2_sweep, case3_sweep, ieee13_fixture, run_sweep, FixtureConfig,
    ScenarioError, SweepParameter, SweepSpec, CASE1_DEFAULT_SCALES, CASE2_DEFAULT_MUS,
    CASE3_DEFAULT_SCALES,
};
use crate::settlement::{settle, SettlementBasis};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser)]
#[command(
    name = "dmo",
    version,
    about = "Distribution market clearing, D-LMP pricing, and settlement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BasisArg {
    Actual,
    Assigned,
}

impl From<BasisArg> for SettlementBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Actual => SettlementBasis::Actual,
            BasisArg::Assigned => SettlementBasis::Assigned,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ParamArg {
    Scale,
    Mu,
}

#[derive(Args, Clone, Debug)]
struct InputArgs {
    /// Network file (TOML). Omit to use the bundled 13-bus fixture.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Customer bids file (TOML).
    #[arg(long)]
    bids: Option<PathBuf>,
    /// Fixed load time series (CSV: hour,bus,mw).
    #[arg(long)]
    fixed: Option<PathBuf>,
    /// T-LMP time series (CSV: hour,price).
    #[arg(long)]
    tlmp: Option<PathBuf>,
    /// Assigned power series (CSV: hour,mw). Defaults to the
    /// grid-following import profile when omitted.
    #[arg(long)]
    assigned: Option<PathBuf>,
    /// Clearing horizon in hours.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
    /// Accept negative assigned-power entries.
    #[arg(long)]
    allow_negative_assigned: bool,
    /// Fixture overrides (TOML), used when --network is omitted.
    #[arg(long)]
    fixture_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network (and optionally bids) without solving.
    Validate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        bids: Option<PathBuf>,
    },
    /// Clear one horizon and settle it; writes CSV results and a
    /// solution dump for later `kkt` verification.
    Solve {
        #[command(flatten)]
        inputs: InputArgs,
        /// Deviation penalty mu ($/MWh).
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// T-LMP scaling factor.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Drop the import-cost term from the objective.
        #[arg(long)]
        no_lambda: bool,
        #[arg(long, value_enum, default_value_t = BasisArg::Actual)]
        basis: BasisArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Run a parameter sweep (a canned case or an explicit parameter).
    Sweep {
        /// Case number: 1 (mu=0, scale swept), 2 (no lambda, mu swept),
        /// 3 (mu fixed, scale 0.1-0.9).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: Option<u8>,
        /// Explicit sweep parameter (alternative to --case).
        #[arg(long, value_enum, conflicts_with = "case")]
        param: Option<ParamArg>,
        /// Comma-separated ascending sweep values, e.g. "0.1,0.5,1.0".
        #[arg(long, requires = "param")]
        values: Option<String>,
        /// Penalty held fixed during a scale sweep (case 3).
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Emit the bundled IEEE 13-bus input files.
    Fixture {
        #[arg(long, default_value = "fixture")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-verify a saved solution dump against the KKT conditions.
    Kkt {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

fn verbose() -> bool {
    std::env::var("DMO_VERBOSE").map_or(false, |v| v != "0" && !v.is_empty())
}

fn load_or_fixture(args: &InputArgs, mu: f64, scale: f64, lambda: bool) -> Result<ClearingInput, CliError> {
    match &args.network {
        Some(network) => {
            let tlmp = args.tlmp.clone().ok_or_else(|| {
                CliError::Input("--tlmp is required when --network is given".into())
            })?;
            let config = RunConfig {
                network: network.clone(),
                bids: args.bids.clone(),
                fixed: args.fixed.clone(),
                tlmp,
                assigned: args.assigned.clone(),
                mu,
                tlmp_scale: scale,
                lambda_enabled: lambda,
                basis: SettlementBasis::Actual,
                out_dir: PathBuf::new(),
                horizon: args.horizon,
                allow_negative_assigned: args.allow_negative_assigned,
                max_iterations: None,
            };
            Ok(load_inputs(&config)?)
        }
        None => {
            let cfg = match &args.fixture_config {
                Some(p) => Some(FixtureConfig::load(p)?),
                None => None,
            };
            let mut input = ieee13_fixture(cfg.as_ref())?;
            input.mu = mu;
            input.tlmp_scale = scale;
            input.lambda_enabled = lambda;
            Ok(input)
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] crate::io::schema::IoError),
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Clearing(e) => clearing_exit(e),
            CliError::Scenario(ScenarioError::Clearing(e)) => clearing_exit(e),
            CliError::Scenario(_) => EXIT_INPUT,
        }
    }
}

fn clearing_exit(e: &ClearingError) -> i32 {
    match e {
        ClearingError::InvalidInput(_) => EXIT_INPUT,
        ClearingError::Infeasible { .. } | ClearingError::ScheduleUnreachable { .. } => {
            EXIT_INFEASIBLE
        }
        ClearingError::Unbounded { .. } | ClearingError::Solver { .. } => EXIT_SOLVER,
    }
}

/// Parses and runs one invocation; returns the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            eprint!("{e}");
            return EXIT_INPUT;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Validate { network, bids } => {
            let net = load_network(&network);
            match net {
                Ok(net) => {
                    let report = net.validate();
                    for w in &report.warnings {
                        println!("warning: {w}");
                    }
                    if let Some(bids_path) = bids {
                        load_bids(&bids_path)?;
                    }
                    println!(
                        "ok: {} buses, {} lines",
                        net.buses.len(),
                        net.lines.len()
                    );
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(EXIT_INPUT)
                }
            }
        }
        Command::Solve {
            inputs,
            mu,
            scale,
            no_lambda,
            basis,
            out,
            max_iterations,
        } => {
            let input = load_or_fixture(&inputs, mu, scale, !no_lambda)?;
            let mut opts = lp_core::SolverOptions::default();
            if let Some(n) = max_iterations {
                opts.max_iterations = n;
            }
            let result = clear_with_options(&input, &opts)?;
            if verbose() {
                for d in &result.diagnostics {
                    eprintln!(
                        "hour {}: {} simplex iterations, lp objective {:.6}",
                        d.hour, d.iterations, d.lp_objective
                    );
                }
            }
            let effective = crate::model::TlmpSeries::new(
                (0..input.horizon()).map(|t| input.effective_tlmp(t)).collect(),
            )
            .expect("effective tlmp finite");
            let report = settle(&result, &effective, basis.into());
            let written = emit_results(&result, &report, &out)?;

            // Re-derive each hour's LP so the dump is self-contained.
            let mut saved = Vec::with_capacity(input.horizon());
            for hour in 0..input.horizon() {
                let (problem, _) = build_hourly_lp(&input, hour);
                let solution = lp_solve(&problem, &opts).map_err(|e| {
                    CliError::Clearing(ClearingError::Solver {
                        hour,
                        detail: e.to_string(),
                    })
                })?;
                saved.push(SavedHour {
                    hour,
                    problem,
                    solution,
                });
            }
            let dump = out.join("solution.json");
            write_solution_dump(&saved, &dump)?;

            for p in &written {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", dump.display());
            println!(
                "welfare {:.6}, C_c {:.6}, C_u {:.6}, C_delta {:.6}",
                result.total_objective,
                report.customer_total,
                report.utility_payment,
                report.surplus
            );
            Ok(EXIT_OK)
        }
        Command::Sweep {
            case,
            param,
            values,
            mu,
            inputs,
            out,
        } => {
            let sweep = match (case, param) {
                (Some(1), _) => {
                    let input = load_or_fixture(&inputs, 0.0, 1.0, true)?;
                    case1_sweep(&input, &CASE1_DEFAULT_SCALES)?
                }
                (Some(2), _) => {
                    let input = load_or_fixture(&inputs, 0.0, 1.0, true)?;
                    case2_sweep(&input, &CASE2_DEFAULT_MUS)?
                }
                (Some(3), _) => {
                    let input = load_or_fixture(&inputs, mu, 1.0, true)?;
                    case3_sweep(&input, &CASE3_DEFAULT_SCALES, mu)?
                }
                (None, Some(p)) => {
                    let list = values.ok_or_else(|| {
                        CliError::Input("--values is required with --param".into())
                    })?;
                    let parsed: Result<Vec<f64>, _> =
                        list.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    let parsed = parsed.map_err(|e| {
                        CliError::Input(format!("cannot parse --values \"{list}\": {e}"))
                    })?;
                    let base = load_or_fixture(&inputs, mu, 1.0, true)?;
                    let spec = SweepSpec {
                        parameter: match p {
                            ParamArg::Scale => SweepParameter::TlmpScale,
                            ParamArg::Mu => SweepParameter::Mu,
                        },
                        values: parsed,
                        lambda_enabled: base.lambda_enabled,
                        base,
                    };
                    run_sweep(&spec)?
                }
                (None, None) => {
                    return Err(CliError::Input(
                        "sweep needs either --case or --param".into(),
                    ))
                }
                _ => unreachable!("clap enforces case in 1..=3 and conflicts_with"),
            };
            let written = emit_sweep(&sweep, &out)?;
            for p in &written {
                println!("wrote {}", p.display());
            }
            Ok(EXIT_OK)
        }
        Command::Fixture { out, config } => {
            let cfg = match config {
                Some(p) => Some(FixtureConfig::load(&p)?),
                None => None,
            };
            let input = ieee13_fixture(cfg.as_ref())?;
            let written = write_input_files(&input, &out)?;
            for p in &written {
                println!("wrote {}", p.display());
            }
            Ok(EXIT_OK)
        }
        Command::Kkt { solution, tol } => {
            let saved = read_solution_dump(&solution)?;
            let mut worst: f64 = 0.0;
            let mut failed = false;
            for s in &saved {
                if s.solution.status != lp_core::LpStatus::Optimal {
                    println!("hour {}: status {:?}, skipping", s.hour, s.solution.status);
                    failed = true;
                    continue;
                }
                let report = check_kkt(&s.problem, &s.solution, tol);
                let ok = report.passes(tol);
                println!(
                    "hour {}: {} (primal {:.2e}, dual {:.2e}, compl {:.2e}, gap {:.2e})",
                    s.hour,
                    if ok { "pass" } else { "FAIL" },
                    report.max_primal_violation,
                    report.max_dual_violation,
                    report.max_complementarity_violation,
                    report.duality_gap
                );
                worst = worst.max(report.worst());
                failed |= !ok;
            }
            println!("worst violation {worst:.2e} over {} hours", saved.len());
            Ok(if failed { EXIT_SOLVER } else { EXIT_OK })
        }
    }
}
