#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dragkit::Error;

use commands::Payload;
use config::RunConfig;

/// Recursive DRAG pulse synthesis, simulation and calibration.
///
/// Frequencies are ordinary (not angular) GHz or MHz; times are in ns and
/// coherence times in μs. Settings come from `--config FILE` (flat
/// `key = value` lines) and are overridden by flags of the same name.
#[derive(Parser)]
#[command(name = "dragkit", version)]
struct Cli {
    /// Worker threads for parallel sweeps (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the drive samples t, Ω_x, Ω_y, δ as CSV.
    Pulse(Flags),
    /// Simulate one gate and report fidelity and leakage as JSON.
    Simulate(Flags),
    /// First-order predictions of α, β and δc as JSON.
    Predict(Flags),
    /// Nelder–Mead calibration of the family's prefactors as JSON.
    Calibrate(Flags),
    /// Infidelity over a grid of gate times as CSV.
    Sweep(Flags),
    /// Shortest gate time reaching the target for each Fourier ansatz.
    AnsatzScan(Flags),
    /// Minimum gate time of a recursive family.
    Tmin(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Pulse(_) => "pulse",
            Self::Simulate(_) => "simulate",
            Self::Predict(_) => "predict",
            Self::Calibrate(_) => "calibrate",
            Self::Sweep(_) => "sweep",
            Self::AnsatzScan(_) => "ansatz-scan",
            Self::Tmin(_) => "tmin",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Self::Pulse(f)
            | Self::Simulate(f)
            | Self::Predict(f)
            | Self::Calibrate(f)
            | Self::Sweep(f)
            | Self::AnsatzScan(f)
            | Self::Tmin(f) => f,
        }
    }
}

/// Values are parsed after merging with the config file, so every flag is
/// taken as text here.
#[derive(Args, Default)]
struct Flags {
    /// Flat `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    delta2_ghz: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta2_rad_ns: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta3_ghz: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    /// hann | drag | r1d | r2d
    #[arg(long)]
    family: Option<String>,
    /// hann | sinN | fourier_bl | ansatz_nN_jJ
    #[arg(long)]
    base: Option<String>,
    /// Gate time in ns.
    #[arg(long = "T")]
    t: Option<String>,
    #[arg(long)]
    theta_pi: Option<String>,
    /// analytic | predicted | optimized
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha02: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha13: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta_c_mhz: Option<String>,
    /// integral | closed
    #[arg(long)]
    delta_c_method: Option<String>,
    /// linearized | cubic
    #[arg(long)]
    beta_method: Option<String>,
    /// Score with the six-state Lindblad average (needs --t1-us, --t2-us).
    #[arg(long)]
    dissipation: bool,
    #[arg(long)]
    t1_us: Option<String>,
    #[arg(long)]
    t2_us: Option<String>,
    /// start:stop:step or a comma list, in ns.
    #[arg(long)]
    grid: Option<String>,
    /// Sin power of the trial pulse.
    #[arg(long)]
    n: Option<String>,
    /// n:j,n:j,...
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output path (default stdout).
    #[arg(long)]
    out: Option<String>,
}

impl Flags {
    fn entries(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("delta2_ghz", &self.delta2_ghz),
            ("delta2_rad_ns", &self.delta2_rad_ns),
            ("delta3_ghz", &self.delta3_ghz),
            ("levels", &self.levels),
            ("family", &self.family),
            ("base", &self.base),
            ("T", &self.t),
            ("theta_pi", &self.theta_pi),
            ("mode", &self.mode),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("alpha02", &self.alpha02),
            ("alpha13", &self.alpha13),
            ("delta_c_mhz", &self.delta_c_mhz),
            ("delta_c_method", &self.delta_c_method),
            ("beta_method", &self.beta_method),
            ("t1_us", &self.t1_us),
            ("t2_us", &self.t2_us),
            ("grid", &self.grid),
            ("n", &self.n),
            ("pairs", &self.pairs),
            ("target", &self.target),
            ("t_max", &self.t_max),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        let mut m: BTreeMap<String, String> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.trim().to_string())))
            .collect();
        if self.dissipation {
            m.insert("dissipation".into(), "true".into());
        }
        m
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::SingularParameter(_) => 1,
        Error::InfeasibleGateTime { .. } => 2,
        Error::Numerical(_) | Error::Bracketing(_) | Error::Calibration(_) => 3,
    }
}

fn render(cfg: &RunConfig, command: &str, payload: Payload) -> String {
    match payload {
        Payload::Csv(body) => format!("{}{body}", cfg.comment_header(command)),
        Payload::Json(result) => {
            let doc = serde_json::json!({
                "command": command,
                "config": cfg.entries.iter().filter(|(k, _)| k.as_str() != "out").collect::<BTreeMap<_, _>>(),
                "config_sha256": cfg.hash(command),
                "result": result,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("JSON values serialize"))
        }
    }
}

fn run(cli: &Cli) -> dragkit::Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("jobs: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Config(format!("jobs: {e}")))?;
    }
    let flags = cli.command.flags();
    let file = match &flags.config {
        Some(p) => config::load_file(p)?,
        None => BTreeMap::new(),
    };
    let cfg = RunConfig::resolve(file, flags.entries())?;
    let payload = match &cli.command {
        Command::Pulse(_) => commands::pulse(&cfg)?,
        Command::Simulate(_) => commands::simulate_cmd(&cfg)?,
        Command::Predict(_) => commands::predict(&cfg)?,
        Command::Calibrate(_) => commands::calibrate(&cfg)?,
        Command::Sweep(_) => commands::sweep(&cfg)?,
        Command::AnsatzScan(_) => commands::ansatz(&cfg)?,
        Command::Tmin(_) => commands::tmin(&cfg)?,
    };
    let text = render(&cfg, cli.command.name(), payload);
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("out: cannot write {path}: {e}"))),
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth an error code
            let _ = stdout.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
