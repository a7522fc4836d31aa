//! `fovrelay` — scenario runner and analysis tool for planar bearing-only
//! relay guidance under a field-of-view constraint.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use fovrelay::controller::{conservative_gain_bound, critical_gain};
use fovrelay::geometry::finite_above;
use fovrelay::qgamma;
use fovrelay::simulator::{run, SimError};

use fovrelay_cli::config::{parse_config, ConfigError, ScenarioConfig};
use fovrelay_cli::exit;
use fovrelay_cli::svg::render_svg;
use fovrelay_cli::trace::write_trace;
use fovrelay_cli::verify::{print_battery, run_battery};

#[derive(Parser)]
#[command(
    name = "fovrelay",
    version,
    about = "Deterministic planar simulation of a relay vehicle keeping a moving group \
             inside a limited field-of-view sensor, using bearing-only switching guidance."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario config and write the CSV trace (optionally an SVG).
    Run {
        /// Scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output trace file (CSV with event footer).
        #[arg(long)]
        out: PathBuf,
        /// Optional trajectory rendering.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Print the critical gains and capacity minimum for a cone setup.
    Gains {
        /// Cone half-angle in degrees, in (0, 90].
        #[arg(long)]
        gamma: f64,
        /// Agent speed limit in m/s.
        #[arg(long)]
        vmax: f64,
        /// Number of tracked agents.
        #[arg(long)]
        n: usize,
    },
    /// Tabulate the capacity profile q(phi) over [0, gamma].
    Qgamma {
        /// Cone half-angle in degrees, in (0, 90].
        #[arg(long)]
        gamma: f64,
        /// Number of rows (>= 2).
        #[arg(long)]
        samples: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run one scenario under several gain multipliers and summarize.
    Sweep {
        /// Scenario config (JSON); its kr fields are overridden per run.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated gain multipliers.
        #[arg(long, value_delimiter = ',', required = true)]
        multipliers: Vec<f64>,
    },
    /// Run the release-check battery and report pass/fail per criterion.
    Verify,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        fail(exit::INVALID, e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(exit::IO, format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| fail(exit::IO, format!("cannot write {}: {e}", path.display())))
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::InvalidScenario(_) => fail(exit::INVALID, e.to_string()),
        other => fail(exit::SIMULATION, other.to_string()),
    }
}

fn cmd_run(config: &Path, out: &Path, svg: Option<&Path>) -> Result<(), Failure> {
    let scenario = parse_config(&read_file(config)?)?;
    let trace = run(&scenario).map_err(sim_failure)?;
    write_file(out, &write_trace(&trace))?;
    if let Some(svg_path) = svg {
        write_file(svg_path, &render_svg(&trace, &scenario))?;
    }
    let ev = &trace.events;
    println!(
        "{} steps, {} branch switches, {} violations, min distance {:.4} m, min margin {:+.6} rad",
        trace.records.len() - 1,
        ev.chi_switches.len(),
        ev.fov_violations.len(),
        ev.min_distance,
        ev.min_margin,
    );
    Ok(())
}

fn cmd_gains(gamma_deg: f64, vmax: f64, n: usize) -> Result<(), Failure> {
    let gamma = gamma_deg.to_radians();
    if !(gamma > 0.0 && gamma <= std::f64::consts::FRAC_PI_2) {
        return Err(fail(
            exit::INVALID,
            format!("gamma = {gamma_deg} deg outside (0, 90]"),
        ));
    }
    if !finite_above(vmax, 0.0) {
        return Err(fail(
            exit::INVALID,
            format!("vmax = {vmax} must be positive and finite"),
        ));
    }
    if n == 0 {
        return Err(fail(exit::INVALID, "n must be at least 1"));
    }
    let r = qgamma::phi_star(gamma).expect("gamma validated");
    println!("half-angle gamma       : {gamma_deg} deg = {gamma:.10} rad");
    println!("speed limit v_max      : {vmax} m/s");
    println!("tracked agents n       : {n}");
    println!(
        "single-agent gain K*   : {:.10}  (= v_max / sin gamma)",
        critical_gain(vmax, gamma, 1)
    );
    println!(
        "group gain K_q         : {:.10}  (= v_max / q*)",
        vmax / r.q_star
    );
    println!(
        "conservative bound     : {:.10}  (= v_max / sin^3 gamma)",
        conservative_gain_bound(vmax, gamma)
    );
    println!(
        "capacity minimum q*    : {:.10} at phi* = {:.10} rad = {:.6} deg",
        r.q_star,
        r.phi_star,
        r.phi_star.to_degrees()
    );
    println!(
        "selected gain for n    : {:.10}",
        critical_gain(vmax, gamma, n)
    );
    Ok(())
}

fn cmd_qgamma(gamma_deg: f64, samples: usize, out: &Path) -> Result<(), Failure> {
    let gamma = gamma_deg.to_radians();
    if !(gamma > 0.0 && gamma <= std::f64::consts::FRAC_PI_2) {
        return Err(fail(
            exit::INVALID,
            format!("gamma = {gamma_deg} deg outside (0, 90]"),
        ));
    }
    if samples < 2 {
        return Err(fail(exit::INVALID, "samples must be at least 2"));
    }
    let mut text = String::from("phi,q\n");
    for i in 0..samples {
        // Scale a fraction in [0, 1] so the last row lands on gamma exactly
        // (gamma * i / (samples-1) can round one ulp past the domain edge).
        let phi = gamma * (i as f64 / (samples - 1) as f64);
        let q = qgamma::q_gamma(gamma, phi).map_err(|e| fail(exit::INVALID, e.to_string()))?;
        text.push_str(&format!("{phi:.14e},{q:.14e}\n"));
    }
    let r = qgamma::phi_star(gamma).expect("gamma validated");
    text.push_str(&format!(
        "# minimum: phi_star={:.14e} q_star={:.14e}\n",
        r.phi_star, r.q_star
    ));
    write_file(out, &text)?;
    println!(
        "{samples} rows over [0, {gamma:.6}] rad; minimum q* = {:.6} at phi* = {:.6} rad",
        r.q_star, r.phi_star
    );
    Ok(())
}

fn cmd_sweep(config: &Path, multipliers: &[f64]) -> Result<(), Failure> {
    if multipliers.is_empty() {
        return Err(fail(exit::INVALID, "at least one multiplier is required"));
    }
    let text = read_file(config)?;
    let base: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| Failure::from(ConfigError::Parse(e)))?;

    type RowResult = Result<(usize, f64, bool, f64, usize, f64), Failure>;
    let rows: Vec<RowResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = multipliers
            .iter()
            .map(|m| {
                let mut cfg = base.clone();
                cfg.kr_multiplier = Some(*m);
                cfg.kr_absolute = None;
                scope.spawn(move || -> RowResult {
                    let sc = cfg.to_scenario()?;
                    let trace = run(&sc).map_err(sim_failure)?;
                    let ev = &trace.events;
                    Ok((
                        ev.chi_switches.len(),
                        ev.min_margin,
                        !ev.fov_violations.is_empty(),
                        ev.min_distance,
                        ev.fov_violations.len(),
                        sc.gains.k_r,
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    println!("multiplier,gain,min_margin_rad,violation,min_distance_m,switches");
    let mut first_err: Option<Failure> = None;
    for (m, row) in multipliers.iter().zip(rows) {
        match row {
            Ok((switches, min_margin, violated, min_distance, _count, k_r)) => {
                println!("{m},{k_r:.6},{min_margin:.6e},{violated},{min_distance:.6},{switches}");
            }
            Err(e) => {
                println!("{m},error,error,error,error,error");
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_verify() -> Result<(), Failure> {
    let results = run_battery();
    if print_battery(&results) {
        Ok(())
    } else {
        Err(fail(exit::INVALID, "release checks failed"))
    }
}

/// Restore the default SIGPIPE disposition so that piping output into a
/// pager or `head` terminates the process quietly instead of panicking on
/// the first write to the closed pipe.
#[cfg(unix)]
fn restore_sigpipe() {
    // SAFETY: installing SIG_DFL for SIGPIPE before any other thread exists.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn restore_sigpipe() {}

fn main() -> ExitCode {
    restore_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::INVALID,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.cmd {
        Cmd::Run { config, out, svg } => cmd_run(config, out, svg.as_deref()),
        Cmd::Gains { gamma, vmax, n } => cmd_gains(*gamma, *vmax, *n),
        Cmd::Qgamma {
            gamma,
            samples,
            out,
        } => cmd_qgamma(*gamma, *samples, out),
        Cmd::Sweep {
            config,
            multipliers,
        } => cmd_sweep(config, multipliers),
        Cmd::Verify => cmd_verify(),
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
