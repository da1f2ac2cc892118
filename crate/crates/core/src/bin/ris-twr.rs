use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ris_twr::sim::{self, output, Algorithm, ExperimentSpec, Scenario, Sweep, SweepVar};

#[derive(Parser)]
#[command(name = "ris-twr", version, about = "Monte-Carlo simulator for RIS-assisted two-way relaying")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the relay power budget (dBm).
    SweepPower(Common),
    /// Sweep the number of vertical RIS elements (N_h fixed).
    SweepElements(Common),
    /// Sweep the number of relay antennas.
    SweepAntennas(Common),
    /// Min-SNR samples at one operating point plus their empirical CDF.
    Cdf(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// `single` or `multi`.
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated algorithm tags, e.g. `sum,gsm,no_ris`.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ps_dbm: Option<f64>,
    /// Relay budget; for `sweep-power` a comma-separated list of values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pb_dbm: Option<Vec<f64>>,
    #[arg(long)]
    nh: Option<usize>,
    /// For `sweep-elements` a comma-separated list of values.
    #[arg(long, value_delimiter = ',')]
    nv: Option<Vec<usize>>,
    /// For `sweep-antennas` a comma-separated list of values.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Samples CSV; summary (and CDF) files are written next to it.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// JSON experiment spec; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use 1000 trials unless --trials is given.
    #[arg(long)]
    full_scale: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

const DEFAULT_PB: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
const DEFAULT_NV: [usize; 5] = [4, 7, 10, 13, 16];
const DEFAULT_M: [usize; 4] = [1, 2, 4, 8];

fn single_value<T: Copy>(flag: &str, v: &[T]) -> anyhow::Result<T> {
    match v {
        [x] => Ok(*x),
        _ => bail!("--{flag} takes a single value here"),
    }
}

fn build_spec(sweep_var: Option<SweepVar>, o: &Common) -> anyhow::Result<ExperimentSpec> {
    let scenario = o.scenario.as_deref().map(str::parse::<Scenario>).transpose()?;
    let mut spec = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut spec: ExperimentSpec =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(s) = scenario {
                spec.scenario = s;
            }
            spec
        }
        None => {
            let default = if sweep_var == Some(SweepVar::M) { Scenario::MultiAntenna } else { Scenario::SingleAntenna };
            ExperimentSpec::new(scenario.unwrap_or(default))
        }
    };
    if let Some(a) = &o.algorithms {
        spec.algorithms = a.iter().map(|s| s.trim().parse::<Algorithm>()).collect::<Result<_, _>>()?;
    }
    if o.full_scale {
        spec.trials = sim::FULL_SCALE_TRIALS;
    }
    if let Some(t) = o.trials {
        spec.trials = t;
    }
    if let Some(s) = o.seed {
        spec.base_seed = s;
    }
    if let Some(p) = o.ps_dbm {
        spec.ps_dbm = p;
    }
    if let Some(n) = o.nh {
        spec.model.array.n_h = n;
    }
    if sweep_var != Some(SweepVar::PbDbm) {
        if let Some(p) = &o.pb_dbm {
            spec.pb_dbm = single_value("pb-dbm", p)?;
        }
    }
    if sweep_var != Some(SweepVar::Nv) {
        if let Some(n) = &o.nv {
            spec.model.array.n_v = single_value("nv", n)?;
        }
    }
    if sweep_var != Some(SweepVar::M) {
        if let Some(m) = &o.m {
            let m = single_value("m", m)?;
            if spec.scenario == Scenario::SingleAntenna && m != 1 {
                bail!("the single-antenna scenario needs --m 1, got {m}");
            }
            spec.model.array.m = m;
        }
    }
    spec.sweep = match sweep_var {
        Some(SweepVar::PbDbm) => Some(match &o.pb_dbm {
            Some(v) => Sweep::power(v),
            None => spec.sweep.filter(|s| s.var == SweepVar::PbDbm).unwrap_or_else(|| Sweep::power(&DEFAULT_PB)),
        }),
        Some(SweepVar::Nv) => Some(match &o.nv {
            Some(v) => Sweep::elements(v),
            None => spec.sweep.filter(|s| s.var == SweepVar::Nv).unwrap_or_else(|| Sweep::elements(&DEFAULT_NV)),
        }),
        Some(SweepVar::M) => Some(match &o.m {
            Some(v) => Sweep::antennas(v),
            None => spec.sweep.filter(|s| s.var == SweepVar::M).unwrap_or_else(|| Sweep::antennas(&DEFAULT_M)),
        }),
        None => None,
    };
    spec.validate()?;
    Ok(spec)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let (var, opts, with_cdf) = match &cli.command {
        Command::SweepPower(o) => (Some(SweepVar::PbDbm), o, false),
        Command::SweepElements(o) => (Some(SweepVar::Nv), o, false),
        Command::SweepAntennas(o) => (Some(SweepVar::M), o, false),
        Command::Cdf(o) => (None, o, true),
    };
    let spec = build_spec(var, opts)?;
    let result = match opts.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(t) => sim::run_with_threads(&spec, t)?,
        None => sim::run(&spec)?,
    };
    let written = output::write_all(&result, &opts.out, with_cdf)?;
    for f in &result.failures {
        eprintln!(
            "{}",
            serde_json::json!({
                "warning": "trial failed",
                "sweep_value": f.sweep_value,
                "algorithm": f.algorithm.tag(),
                "trial": f.trial,
                "message": f.message,
            })
        );
    }
    println!(
        "{}",
        serde_json::json!({
            "samples": written.samples,
            "summary": written.summary,
            "cdf": written.cdf,
            "trials": spec.trials,
            "failures": result.failures.len(),
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.kind().to_string(), "detail": e.to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}
