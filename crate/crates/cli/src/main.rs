use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use steerfilter::filter::{FilterEnsemble, WaveplateAngles};
use steerfilter::quantum::{DensityMatrix, StateParams};
use steerfilter::scenarios::{run, Scenario, ScenarioInput, StateSource};
use steerfilter::Error;

const EXIT_SOLVER: u8 = 2;
const EXIT_INPUT: u8 = 3;

const SCENARIOS: [&str; 11] = [
    "classify",
    "filter-apply",
    "find-filters",
    "reverse",
    "distill",
    "amplify",
    "hidden-search",
    "map",
    "tomo-state",
    "tomo-process",
    "prep-check",
];

/// Local-filter manipulation of two-qubit EPR steering.
///
/// Writes a JSON summary to --out (or stdout). Exit status: 0 on success,
/// 2 on solver failure, 3 on invalid input.
#[derive(Parser, Debug)]
#[command(name = "steerfilter", version)]
struct Cli {
    /// Scenario to run.
    #[arg(value_parser = SCENARIOS)]
    scenario: String,

    /// Schmidt angle θ of the family state, radians in [0, π/2].
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,

    /// Mixing weight η of the family state, in [0, 1].
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,

    /// JSON state file: {"theta":..,"eta":..} or a 4x4 density matrix
    /// {"dims":[4,4],"re":[..],"im":[..]}.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["theta", "eta"])]
    state: Option<PathBuf>,

    /// Filter amplitudes a1,a2,b1,b2, or a JSON ensemble file.
    #[arg(long, value_name = "a1,a2,b1,b2", conflicts_with = "waveplates", allow_negative_numbers = true)]
    filters: Option<String>,

    /// Waveplate angles h1,h2,h3,h4 in degrees.
    #[arg(long, value_name = "d1,d2,d3,d4", allow_negative_numbers = true)]
    waveplates: Option<String>,

    /// Sample count: random ensembles (hidden-search, find-filters, reverse,
    /// distill) or counts per setting (tomo-state, tomo-process).
    #[arg(long, value_name = "N")]
    samples: Option<usize>,

    /// Seed for every random draw.
    #[arg(long, value_name = "S", default_value_t = 42)]
    seed: u64,

    /// Feasibility threshold of the steering-radius solver.
    #[arg(long, value_name = "E")]
    err: Option<f64>,

    /// Output path for the JSON summary; CSV detail goes next to it with a
    /// .csv extension.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Also emit per-sample CSV detail (hidden-search, tomo-state,
    /// tomo-process). map always emits its CSV.
    #[arg(long)]
    full: bool,

    /// Worker threads for data-parallel stages.
    #[arg(long, value_name = "K")]
    threads: Option<usize>,
}

fn parse_list<const N: usize>(s: &str, what: &str) -> Result<[f64; N], Error> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{what}: cannot parse {x:?}"))))
        .collect::<Result<_, _>>()?;
    vals.try_into().map_err(|v: Vec<f64>| Error::Parse(format!("{what}: expected {N} values, got {}", v.len())))
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn state_from_file(path: &Path) -> Result<StateSource, Error> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if let (Some(t), Some(e)) = (value.get("theta"), value.get("eta")) {
        let (t, e) = (t.as_f64(), e.as_f64());
        let (Some(t), Some(e)) = (t, e) else {
            return Err(Error::Parse("theta and eta must be numbers".into()));
        };
        return Ok(StateSource::Params(StateParams::new(t, e)?));
    }
    let rho: DensityMatrix = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: "4x4".into(), got: format!("{0}x{0}", rho.dim()) });
    }
    Ok(StateSource::Matrix(rho))
}

fn build_input(cli: &Cli) -> Result<ScenarioInput, Error> {
    let state = match (&cli.state, cli.theta, cli.eta) {
        (Some(p), _, _) => Some(state_from_file(p)?),
        (None, Some(t), Some(e)) => Some(StateSource::Params(StateParams::new(t, e)?)),
        (None, None, None) => None,
        _ => return Err(Error::Parse("--theta and --eta must be given together".into())),
    };
    let filters = match (&cli.filters, &cli.waveplates) {
        (Some(f), _) if Path::new(f).is_file() => {
            Some(serde_json::from_str::<FilterEnsemble>(&read(Path::new(f))?).map_err(|e| Error::Parse(e.to_string()))?)
        }
        (Some(f), _) => {
            let [a1, a2, b1, b2] = parse_list::<4>(f, "--filters")?;
            Some(FilterEnsemble::from_diagonals(a1, a2, b1, b2)?)
        }
        (None, Some(w)) => Some(FilterEnsemble::from_waveplates(WaveplateAngles::from_degrees(parse_list::<4>(w, "--waveplates")?)?)?),
        (None, None) => None,
    };
    if let Some(e) = cli.err {
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::OutOfRange { name: "err", value: e, lo: 0.0, hi: f64::INFINITY });
        }
    }
    if cli.samples == Some(0) {
        return Err(Error::OutOfRange { name: "samples", value: 0.0, lo: 1.0, hi: f64::INFINITY });
    }
    Ok(ScenarioInput { state, filters, samples: cli.samples, seed: cli.seed, err: cli.err, full: cli.full })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BracketFailure { .. } | Error::NonConvergence { .. } | Error::PoorFit(_) => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let input = build_input(cli)?;
    let scenario: Scenario = cli.scenario.parse()?;
    let out = run(scenario, &input)?;
    let json = serde_json::to_string_pretty(&out.json).map_err(|e| Error::Parse(e.to_string()))? + "\n";
    let csv = out.csv.filter(|_| cli.full || scenario == Scenario::Map);
    match &cli.out {
        Some(path) => {
            write(path, &json)?;
            if let Some(csv) = csv {
                write(&path.with_extension("csv"), &csv)?;
            }
        }
        None => {
            print!("{json}");
            if let Some(csv) = csv {
                print!("\n{csv}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 || rayon::ThreadPoolBuilder::new().num_threads(k).build_global().is_err() {
            eprintln!("error: invalid --threads {k}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
