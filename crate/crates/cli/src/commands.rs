use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::process::ExitCode;

use adastop::io::{load_state, match_batch, read_batch, render_decision_table, save_state, StateLock};
use adastop::sim::{estimate_fwe_and_power, load_scenario, power_table, MonteCarloReport, PowerCell, Scenario};
use adastop::{AdaStop, Comparison, TestConfig};

use crate::report;
use crate::{CompareArgs, SimulateArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] adastop::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Open { path: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, CliError>;

const CONTINUE: u8 = 0;
const STOPPED: u8 = 1;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::Open {
        path: path.display().to_string(),
        source,
    })
}

fn parse_comparisons(spec: &str, agents: &[String]) -> Result<Vec<Comparison>> {
    spec.split(',')
        .map(|pair| {
            let (a, b) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("comparison `{pair}` is not of the form A:B")))?;
            let find = |label: &str| {
                agents
                    .iter()
                    .position(|x| x == label)
                    .ok_or_else(|| CliError::Core(adastop::Error::UnknownAgent(label.to_string())))
            };
            Ok(Comparison::new(find(a.trim())?, find(b.trim())?))
        })
        .collect()
}

fn new_config(args: &CompareArgs) -> Result<TestConfig> {
    let n = args
        .size_group
        .ok_or_else(|| CliError::Usage("--size-group is required on the first call".into()))?;
    let k = args
        .n_groups
        .ok_or_else(|| CliError::Usage("--n-groups is required on the first call".into()))?;
    let mut config = TestConfig::new(n, k);
    if let Some(a) = args.alpha {
        config = config.with_alpha(a);
    }
    if let Some(b) = args.beta {
        config = config.with_beta(b);
    }
    if let Some(m) = args.permutations {
        config = config.with_permutations(m);
    }
    if let Some(s) = args.seed {
        config = config.with_seed(s);
    }
    config.validate()?;
    Ok(config)
}

/// Flags repeated on later calls must agree with the stored test.
fn check_flags(args: &CompareArgs, config: &TestConfig) -> Result<()> {
    let clash = |name: &str, given: String, stored: String| {
        Err(CliError::Usage(format!(
            "--{name} {given} differs from the stored test ({stored}); run `adastop reset` to start over"
        )))
    };
    if let Some(n) = args.size_group.filter(|&n| n != config.group_size) {
        return clash("size-group", n.to_string(), config.group_size.to_string());
    }
    if let Some(k) = args.n_groups.filter(|&k| k != config.interims) {
        return clash("n-groups", k.to_string(), config.interims.to_string());
    }
    if let Some(a) = args.alpha.filter(|&a| a != config.alpha) {
        return clash("alpha", a.to_string(), config.alpha.to_string());
    }
    if let Some(b) = args.beta.filter(|&b| b != config.beta) {
        return clash("beta", b.to_string(), config.beta.to_string());
    }
    if let Some(m) = args.permutations.filter(|&m| m != config.permutations) {
        return clash("permutations", m.to_string(), config.permutations.to_string());
    }
    if let Some(s) = args.seed.filter(|&s| s != config.seed) {
        return clash("seed", s.to_string(), config.seed.to_string());
    }
    if args.comparisons.is_some() {
        return Err(CliError::Usage("--comparisons can only be given on the first call".into()));
    }
    Ok(())
}

pub fn compare(state: &Path, args: &CompareArgs) -> Result<ExitCode> {
    let _lock = StateLock::acquire(state)?;
    let (mut test, table) = if state.exists() {
        let test = AdaStop::from_state(&load_state(state)?)?;
        check_flags(args, test.config())?;
        if test.is_stopped() {
            return Err(adastop::Error::AlreadyStopped(test.interim()).into());
        }
        let table = read_batch(open(&args.batch)?, test.config().group_size)?;
        (test, table)
    } else {
        let config = new_config(args)?;
        let table = read_batch(open(&args.batch)?, config.group_size)?;
        let agents = table.labels.clone();
        let test = match &args.comparisons {
            Some(spec) => {
                let comparisons = parse_comparisons(spec, &agents)?;
                AdaStop::with_comparisons(config, agents, comparisons)?
            }
            None => AdaStop::new(config, agents)?,
        };
        if test.config().has_zero_power() {
            eprintln!(
                "warning: N={} K={} leaves no rejection budget at any interim; nothing can be rejected",
                test.config().group_size,
                test.config().interims
            );
        }
        (test, table)
    };
    let batch = match_batch(table, test.store().agents(), &test.needed_agents())?;
    let interim = test.interim_step(batch)?;
    save_state(state, &test.to_state())?;

    let mut out = std::io::stdout().lock();
    write!(out, "{}", report::interim(&test, &interim))?;
    if test.is_stopped() {
        writeln!(out)?;
        write!(out, "{}", render_decision_table(test.graph(), test.store()))?;
        Ok(ExitCode::from(STOPPED))
    } else {
        let needed: Vec<&str> = test
            .store()
            .agents()
            .iter()
            .zip(test.needed_agents())
            .filter(|(_, n)| *n)
            .map(|(a, _)| a.as_str())
            .collect();
        writeln!(
            out,
            "next: {} more evaluations of {}",
            test.config().group_size,
            needed.join(", ")
        )?;
        Ok(ExitCode::from(CONTINUE))
    }
}

pub fn reset(state: &Path) -> Result<ExitCode> {
    let _lock = StateLock::acquire(state)?;
    if state.exists() {
        std::fs::remove_file(state)?;
        println!("removed {}", state.display());
    } else {
        println!("no state at {}, nothing to reset", state.display());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn status(state: &Path) -> Result<ExitCode> {
    if !state.exists() {
        println!("interim 0");
        println!("no state at {}", state.display());
        return Ok(ExitCode::SUCCESS);
    }
    let test = AdaStop::from_state(&load_state(state)?)?;
    print!("{}", report::status(&test));
    Ok(ExitCode::SUCCESS)
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    match load_scenario(&args.scenario)? {
        Scenario::Sweep(points) => {
            let sweep = points.iter().any(|p| p.delta.is_some());
            if sweep {
                writeln!(out, "delta,{}", MonteCarloReport::csv_header())?;
            } else {
                writeln!(out, "{}", MonteCarloReport::csv_header())?;
            }
            for mut point in points {
                if let Some(m) = args.replications {
                    point.config.replications = m;
                }
                if let Some(s) = args.seed {
                    point.config.test.seed = s;
                }
                let report = estimate_fwe_and_power(&point.config)?;
                for row in report.csv_rows() {
                    match point.delta {
                        Some(d) => writeln!(out, "{d},{row}")?,
                        None => writeln!(out, "{row}")?,
                    }
                }
                out.flush()?;
            }
        }
        Scenario::PowerTable(mut config) => {
            if let Some(m) = args.replications {
                config.replications = m;
            }
            if let Some(s) = args.seed {
                config.seed = s;
            }
            writeln!(out, "{}", PowerCell::csv_header())?;
            for cell in power_table(&config)? {
                writeln!(out, "{}", cell.csv_row())?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
