//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cost::{self, CalibrationInput, CostError, CostParams};
use crate::emit;
use crate::model::{parse_platform, parse_rqms, PlatformModel, RqmSpec};
use crate::sim::{self, EventTrace, SimError, SimOptions};
use crate::synth::{build_topology, diff_naive, MonitoringTopology};

/// Environment variable naming the default calibration file.
pub const CALIB_ENV: &str = "MONFORGE_CALIB";
pub const DEFAULT_CALIB: &str = "calib/table1.json";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SYNTHESIS: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "monforge", version, about = "Synthesize, cost, simulate and emit hardware monitoring layers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Platform description (JSON).
    #[arg(long)]
    pub platform: Option<PathBuf>,
    /// Monitoring requirements (JSON).
    #[arg(long)]
    pub rqms: Option<PathBuf>,
    /// Pre-synthesized topology, instead of --platform/--rqms.
    #[arg(long, conflicts_with_all = ["platform", "rqms"])]
    pub topology: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the artifact here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate input files.
    Check {
        #[command(flatten)]
        inputs: Inputs,
        /// Calibration file to validate as well.
        #[arg(long)]
        calib: Option<PathBuf>,
        /// Trace file to validate as well (syntax only).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build the monitoring topology.
    Synth {
        #[arg(long)]
        platform: PathBuf,
        #[arg(long)]
        rqms: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Predict the overhead of a topology.
    Estimate {
        #[command(flatten)]
        inputs: Inputs,
        /// Cost parameters; defaults to $MONFORGE_CALIB, then calib/table1.json.
        #[arg(long)]
        calib: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Replay an event trace through a topology.
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        /// Event trace, CSV `cycle,trigger,payload`.
        #[arg(long)]
        trace: PathBuf,
        /// Last observed cycle (default: the last trace cycle).
        #[arg(long)]
        horizon: Option<u64>,
        /// Runtime settings: event masks and filter overrides (JSON).
        #[arg(long)]
        options: Option<PathBuf>,
        /// Also write the interrupt log as CSV.
        #[arg(long)]
        interrupts: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Write the structural netlist of the monitored platform.
    Emit {
        #[command(flatten)]
        inputs: Inputs,
        /// Write the netlist here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit cost parameters to measured inventories.
    Calibrate {
        /// Baseline and observations (JSON).
        #[arg(long)]
        observations: PathBuf,
        /// Write the calibration here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A diagnostic and the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn fail<T>(code: i32, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure {
        code,
        message: message.into(),
    })
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn load_platform(path: &Path) -> Result<PlatformModel, Failure> {
    parse_platform(&read(path)?).or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn load_rqms(path: &Path, platform: &PlatformModel) -> Result<Vec<RqmSpec>, Failure> {
    parse_rqms(&read(path)?, platform).or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn load_topology(path: &Path) -> Result<MonitoringTopology, Failure> {
    MonitoringTopology::from_json(&read(path)?).or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn synthesize(platform: &Path, rqms: &Path) -> Result<(MonitoringTopology, Vec<RqmSpec>), Failure> {
    let p = load_platform(platform)?;
    let r = load_rqms(rqms, &p)?;
    match build_topology(&p, &r) {
        Ok(t) => Ok((t, r)),
        Err(e) => fail(EXIT_SYNTHESIS, format!("{}: {e}", rqms.display())),
    }
}

fn resolve_topology(inputs: &Inputs) -> Result<MonitoringTopology, Failure> {
    match (&inputs.topology, &inputs.platform, &inputs.rqms) {
        (Some(t), _, _) => load_topology(t),
        (None, Some(p), Some(r)) => synthesize(p, r).map(|(t, _)| t),
        _ => fail(EXIT_VALIDATION, "either --topology or both --platform and --rqms are required"),
    }
}

/// `--calib`, then `$MONFORGE_CALIB`, then `calib/table1.json` if present,
/// then the built-in reference calibration.
fn load_calibration(explicit: Option<&Path>) -> Result<CostParams, Failure> {
    let from_env = std::env::var_os(CALIB_ENV).map(PathBuf::from);
    let path = match explicit.map(Path::to_path_buf).or(from_env) {
        Some(p) => p,
        None if Path::new(DEFAULT_CALIB).is_file() => PathBuf::from(DEFAULT_CALIB),
        None => return Ok(cost::default_params()),
    };
    CostParams::from_json(&read(&path)?).or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn write_artifact(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .or_else(|e| fail(EXIT_VALIDATION, format!("standard output: {e}"))),
    }
}

fn topology_text(t: &MonitoringTopology, rqms: &[RqmSpec]) -> String {
    let sharing = diff_naive(t, rqms);
    let mut out = String::new();
    writeln!(out, "platform: {}", t.platform.name).unwrap();
    writeln!(
        out,
        "monitors: {} ({} without sharing)",
        sharing.monitors_with_sharing, sharing.monitors_without_sharing
    )
    .unwrap();
    for m in &t.monitors {
        let key = cost::BlockKey::of(m).to_string();
        let rqms: Vec<&str> = m.serving_rqms.iter().map(String::as_str).collect();
        writeln!(out, "  {:<32} {:<10} {:<12} {}", m.id, key, m.location, rqms.join(",")).unwrap();
    }
    writeln!(out, "adapters: {}", t.adapters.len()).unwrap();
    writeln!(out, "nuclei: {}", t.nuclei.len()).unwrap();
    for n in &t.nuclei {
        writeln!(out, "  {:<32} {}", n.id, n.monitors.join(",")).unwrap();
    }
    writeln!(out, "gmi: {}", if t.gmi.present { "present" } else { "absent" }).unwrap();
    writeln!(out, "gm rules: {}", t.gm.rules.len()).unwrap();
    for r in &t.gm.rules {
        writeln!(out, "  {:<10} {:<18} {}", r.rqm, format!("{:?}", r.kind), r.monitors.join(",")).unwrap();
    }
    writeln!(out, "irq: {}", if t.irq.present { "present" } else { "absent" }).unwrap();
    out
}

fn sim_failure(e: SimError) -> Failure {
    let code = match e {
        SimError::Csv(_) => EXIT_VALIDATION,
        _ => EXIT_SIMULATION,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Check { inputs, calib, trace } => {
            if inputs.platform.is_none() && inputs.topology.is_none() && calib.is_none() && trace.is_none() {
                return fail(EXIT_VALIDATION, "nothing to check: pass --platform, --topology, --calib or --trace");
            }
            if let Some(p) = &inputs.platform {
                let platform = load_platform(p)?;
                if let Some(r) = &inputs.rqms {
                    load_rqms(r, &platform)?;
                }
            } else if inputs.rqms.is_some() {
                return fail(EXIT_VALIDATION, "--rqms needs --platform");
            }
            if let Some(t) = &inputs.topology {
                load_topology(t)?;
            }
            if let Some(c) = &calib {
                load_calibration(Some(c))?;
            }
            if let Some(t) = &trace {
                EventTrace::parse_csv(&read(t)?)
                    .or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", t.display())))?;
            }
            writeln!(stdout, "ok").ok();
            Ok(())
        }
        Command::Synth { platform, rqms, output } => {
            let (t, specs) = synthesize(&platform, &rqms)?;
            let text = match output.format {
                Format::Json => t.to_json(),
                Format::Text => topology_text(&t, &specs),
            };
            write_artifact(output.out.as_deref(), &text, stdout)
        }
        Command::Estimate { inputs, calib, output } => {
            let t = resolve_topology(&inputs)?;
            let params = load_calibration(calib.as_deref())?;
            let report = cost::estimate(&t, &params).or_else(|e: CostError| fail(EXIT_SYNTHESIS, e.to_string()))?;
            let text = match output.format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            write_artifact(output.out.as_deref(), &text, stdout)
        }
        Command::Simulate {
            inputs,
            trace,
            horizon,
            options,
            interrupts,
            output,
        } => {
            let t = resolve_topology(&inputs)?;
            let records = EventTrace::parse_csv(&read(&trace)?)
                .map_err(sim_failure)
                .map_err(|f| Failure {
                    message: format!("{}: {}", trace.display(), f.message),
                    ..f
                })?;
            let mut opts = match &options {
                Some(path) => serde_json::from_str::<SimOptions>(&read(path)?)
                    .or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display())))?,
                None => SimOptions::default(),
            };
            if horizon.is_some() {
                opts.horizon = horizon;
            }
            let report = sim::run(&t, &records, &opts).map_err(|e| {
                let f = sim_failure(e);
                Failure {
                    message: format!("{}: {}", trace.display(), f.message),
                    ..f
                }
            })?;
            if let Some(path) = &interrupts {
                write_artifact(Some(path), &report.interrupts_csv(), stdout)?;
            }
            let text = match output.format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            write_artifact(output.out.as_deref(), &text, stdout)
        }
        Command::Emit { inputs, out } => {
            let t = resolve_topology(&inputs)?;
            write_artifact(out.as_deref(), &emit::emit_netlist(&t), stdout)
        }
        Command::Calibrate { observations, out } => {
            let input = CalibrationInput::from_json(&read(&observations)?)
                .or_else(|e| fail(EXIT_VALIDATION, format!("{}: {e}", observations.display())))?;
            let params = input.run().or_else(|e| {
                let code = match e {
                    CostError::InfeasibleCalibration { .. } => EXIT_SYNTHESIS,
                    _ => EXIT_VALIDATION,
                };
                fail(code, format!("{}: {e}", observations.display()))
            })?;
            write_artifact(out.as_deref(), &params.to_json(), stdout)
        }
    }
}

/// Runs the tool on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                stderr.write_all(text.as_bytes()).ok();
            } else {
                stdout.write_all(text.as_bytes()).ok();
            }
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            writeln!(stderr, "error: {}", f.message).ok();
            f.code
        }
    }
}
