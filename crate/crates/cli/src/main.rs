use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use efsc::entanglement::state_entropy;
use efsc::protocol::{project_atoms, run_protocol};
use efsc::sweep::{entropy_sweep, rows_to_csv, SweepSpec};
use efsc::validate::{run_suite, Fault, SuiteLevel};
use efsc::wigner::{field_sidecar, reduced_dyads, reduced_wigner, to_csv, to_ppm, CONVENTION};
use efsc::{Error, MeasurementOutcome, PhaseSpaceGrid, ProtocolConfig};

/// Entropy at or below this marks a product state in manifests.
const PRODUCT_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "efsc", version, about = "Entangled two-cavity cat states: protocol, entropy and Wigner tools")]
struct Cli {
    /// Directory for all output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved; no command currently draws random numbers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the circuit and write the conditional field state for each outcome.
    Run(RunArgs),
    /// Entanglement entropy over one or two parameter axes.
    EntropySweep(SweepArgs),
    /// Reduced Wigner function of a conditional state on a grid.
    Wigner(WignerArgs),
    /// Cross-check the protocol, entropy and Wigner paths against their oracles.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Protocol config JSON.
    config: PathBuf,
    /// Outcome label (g1g2g3), table index (1-8) or "all".
    #[arg(long, default_value = "all")]
    outcome: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep spec JSON.
    spec: PathBuf,
    /// Output file name inside the output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct WignerArgs {
    /// Protocol config JSON.
    config: PathBuf,
    #[arg(long)]
    outcome: String,
    /// Which cavity to keep (the other is traced out).
    #[arg(long, default_value_t = 1)]
    mode: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Half-width of the full grid; default √2|α| + 5.
    #[arg(long)]
    range: Option<f64>,
    /// Also write the central ±1.5 region.
    #[arg(long)]
    zoom: bool,
    /// Comma-separated θ values (θ₁ = θ₂), e.g. "90deg,60deg,0.5deg";
    /// overrides the config angles.
    #[arg(long, value_delimiter = ',')]
    theta: Vec<String>,
    /// Also write a PPM heatmap per field.
    #[arg(long)]
    ppm: bool,
    /// File name stem; default wigner_<outcome>_mode<m>.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Fast,
    Full,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Level::Fast)]
    level: Level,
    /// Corrupt the reference states to confirm the suite fails.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Serialize)]
struct OutcomeEntry {
    outcome: String,
    probability: f64,
    /// None for zero-probability outcomes.
    file: Option<String>,
    product: Option<bool>,
    entropy: Option<f64>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    config: &'a ProtocolConfig,
    outcome: String,
    outputs: Vec<String>,
    outcomes: Vec<OutcomeEntry>,
    tool_version: &'static str,
    convention: serde_json::Value,
    seed: Option<u64>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Validation(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.into())
    }
}

fn convention() -> serde_json::Value {
    serde_json::to_value(CONVENTION).expect("convention serializes")
}

fn parse_outcomes(sel: &str) -> anyhow::Result<Vec<MeasurementOutcome>> {
    let s = sel.trim();
    if s == "all" {
        return Ok(MeasurementOutcome::all().to_vec());
    }
    if let Ok(j) = s.parse::<usize>() {
        return Ok(vec![MeasurementOutcome::from_index(j)?]);
    }
    Ok(vec![s.parse()?])
}

fn read_config(path: &Path) -> anyhow::Result<ProtocolConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ProtocolConfig::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes into the output directory and remembers relative paths.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<String> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(name.to_string())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<String> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Manifest goes last so it only exists when everything it lists does.
    fn manifest(&self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<(), Failure> {
    let cfg = read_config(&args.config)?;
    let outcomes = parse_outcomes(&args.outcome)?;
    let state = run_protocol(&cfg)?;
    let mut out = Outputs::new(&cli.out_dir)?;
    let mut entries = Vec::new();
    for o in outcomes {
        let entry = match project_atoms(&state, o) {
            Ok(c) => {
                let e = state_entropy(&c.state)?.entropy;
                let file = out.write_json(&format!("state_{}.json", o.label()), &c.to_json())?;
                println!("{}  p = {:.12}  E = {:.10}", o.label(), c.probability, e);
                OutcomeEntry {
                    outcome: o.label(),
                    probability: c.probability,
                    file: Some(file),
                    product: Some(e <= PRODUCT_TOL),
                    entropy: Some(e),
                }
            }
            Err(Error::DegenerateState { .. }) => {
                println!("{}  p = 0 (not realizable)", o.label());
                OutcomeEntry {
                    outcome: o.label(),
                    probability: 0.0,
                    file: None,
                    product: None,
                    entropy: None,
                }
            }
            Err(e) => return Err(e.into()),
        };
        entries.push(entry);
    }
    let manifest = RunManifest {
        command: "run",
        config: &cfg,
        outcome: args.outcome.clone(),
        outputs: out.written.clone(),
        outcomes: entries,
        tool_version: env!("CARGO_PKG_VERSION"),
        convention: convention(),
        seed: cli.seed,
    };
    out.manifest("run.manifest.json", &manifest)?;
    Ok(())
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let spec = SweepSpec::from_json_str(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    let rows = entropy_sweep(&spec)?;
    let mut out = Outputs::new(&cli.out_dir)?;
    let name = match (&args.out, cli.format) {
        (Some(n), _) => n.clone(),
        (None, Format::Csv) => "entropy_sweep.csv".into(),
        (None, Format::Json) => "entropy_sweep.json".into(),
    };
    match cli.format {
        Format::Csv => out.write(&name, rows_to_csv(&rows).as_bytes())?,
        Format::Json => out.write_json(&name, &rows)?,
    };
    println!("{} rows -> {}", rows.len(), name);
    out.manifest(
        "entropy-sweep.manifest.json",
        &json!({
            "command": "entropy-sweep",
            "spec": spec,
            "outputs": out.written,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "seed": cli.seed,
        }),
    )?;
    Ok(())
}

fn angle_tag(theta: f64) -> String {
    // 0.5deg -> 0p5deg, stable for file names
    let deg = theta.to_degrees();
    let rounded = (deg * 1e6).round() / 1e6;
    format!("{rounded}deg").replace('.', "p").replace('-', "m")
}

fn cmd_wigner(cli: &Cli, args: &WignerArgs) -> Result<(), Failure> {
    let base = read_config(&args.config)?;
    let outcomes = parse_outcomes(&args.outcome)?;
    if outcomes.len() != 1 {
        return Err(anyhow!("wigner takes a single outcome, not {:?}", args.outcome).into());
    }
    let o = outcomes[0];
    if args.mode != 1 && args.mode != 2 {
        return Err(anyhow!("--mode must be 1 or 2").into());
    }
    let thetas: Vec<Option<f64>> = if args.theta.is_empty() {
        vec![None]
    } else {
        args.theta
            .iter()
            .map(|t| efsc::angle::parse(t).map(Some))
            .collect::<efsc::Result<_>>()?
    };
    let amp = if args.mode == 1 { base.alpha1 } else { base.alpha2 }.norm();
    let half = args.range.unwrap_or(std::f64::consts::SQRT_2 * amp + 5.0);
    let mut grids = vec![("full", PhaseSpaceGrid::square(half, args.grid)?)];
    if args.zoom {
        grids.push(("zoom", PhaseSpaceGrid::square(1.5, args.grid)?));
    }
    let stem = args
        .out
        .clone()
        .unwrap_or_else(|| format!("wigner_{}_mode{}", o.label(), args.mode));
    let mut out = Outputs::new(&cli.out_dir)?;
    let mut fields = Vec::new();
    for theta in &thetas {
        let mut cfg = base;
        if let Some(t) = theta {
            cfg.theta1 = *t;
            cfg.theta2 = *t;
        }
        let state = project_atoms(&run_protocol(&cfg)?, o)
            .with_context(|| format!("outcome {o} at θ₁={}, θ₂={}", cfg.theta1, cfg.theta2))?
            .state;
        let (labels, _) = reduced_dyads(&state, args.mode)?;
        for (kind, grid) in &grids {
            let field = reduced_wigner(&state, args.mode, grid)?;
            let mut name = stem.clone();
            if theta.is_some() {
                name.push('_');
                name.push_str(&angle_tag(cfg.theta1));
            }
            if *kind == "zoom" {
                name.push_str("_zoom");
            }
            let data = match cli.format {
                Format::Csv => out.write(&format!("{name}.csv"), to_csv(&field).as_bytes())?,
                Format::Json => out.write_json(
                    &format!("{name}.json"),
                    &json!({"grid": field.grid, "convention": field.convention, "values": field.values}),
                )?,
            };
            let mut sidecar = field_sidecar(&field, Some(labels.len()));
            sidecar["outcome"] = json!(o.label());
            sidecar["mode"] = json!(args.mode);
            sidecar["config"] = serde_json::to_value(cfg).map_err(anyhow::Error::from)?;
            sidecar["data"] = json!(data);
            let side = out.write_json(&format!("{name}.meta.json"), &sidecar)?;
            if args.ppm {
                out.write(&format!("{name}.ppm"), &to_ppm(&field))?;
            }
            println!(
                "{data}: min {:.6e}, negativity volume {:.6e} (see {side})",
                field.min(),
                field.negativity_volume()
            );
            fields.push(json!({
                "theta": cfg.theta1,
                "grid": kind,
                "min": field.min(),
                "negativity_volume": field.negativity_volume(),
            }));
        }
    }
    out.manifest(
        "wigner.manifest.json",
        &json!({
            "command": "wigner",
            "config": base,
            "outcome": o.label(),
            "mode": args.mode,
            "fields": fields,
            "outputs": out.written,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "convention": convention(),
            "seed": cli.seed,
        }),
    )?;
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let level = match args.level {
        Level::Fast => SuiteLevel::Fast,
        Level::Full => SuiteLevel::Full,
    };
    let fault = if args.inject_fault { Fault::FlipBlockSign } else { Fault::None };
    let results = run_suite(level, fault);
    let mut first_failure = None;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        if !r.passed && first_failure.is_none() {
            first_failure = Some(format!(
                "{}: deviation {:.3e} exceeds tolerance {:.1e}",
                r.name, r.max_deviation, r.tolerance
            ));
        }
    }
    match first_failure {
        Some(msg) => Err(Failure::Validation(msg)),
        None => Ok(()),
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow!("--threads must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    match &cli.command {
        Command::Run(a) => cmd_run(cli, a),
        Command::EntropySweep(a) => cmd_sweep(cli, a),
        Command::Wigner(a) => cmd_wigner(cli, a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
