//! `dcbus`: design, analyse and simulate DC-bus voltage loops.
//!
//! Exit status: 0 on success, 2 for usage errors, 3 when a solver or a
//! simulation fails. `DCBUS_PRECISION` overrides the number of significant
//! digits written to CSV files (default 9).

mod output;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dcbus::design::{build_gdp, build_gvl, build_open_loop, design, Scheme, SchemeKind, VscParams};
use dcbus::format::{sig, DEFAULT_DIGITS};
use dcbus::harmonics::{analyze_harmonics, compare_prediction, write_report_csv};
use dcbus::lti::{bode_sweep, write_bode_csv};
use dcbus::performance::{
    itae, max_voltage_fluctuation, robustness_sweep, third_harmonic_percent, write_metrics_csv, write_robustness_csv,
    DesignReport, TRANSIENT_HORIZON,
};
use dcbus::scenario::{load_plant, DesignSpec, Scenario};
use dcbus::sim::{event_transient, simulate, simulate_linear, Column};

use output::Run;

const PRECISION_VAR: &str = "DCBUS_PRECISION";

#[derive(Parser)]
#[command(name = "dcbus", version, about = "DC-bus voltage loop design and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune a controller and report its predicted performance.
    Design(DesignArgs),
    /// Run a scenario file through the converter model.
    Simulate(SimulateArgs),
    /// Sweep a metric over bandwidth or line-voltage scale.
    Sweep(SweepArgs),
    /// Frequency response of a designed loop.
    Bode(BodeArgs),
}

#[derive(Args)]
struct SchemeArgs {
    #[arg(long, value_parser = parse_scheme)]
    scheme: SchemeKind,
    /// Phase margin in degrees.
    #[arg(long)]
    phase_margin: Option<f64>,
    /// T_i / T_f ratio (improved scheme).
    #[arg(long)]
    beta: Option<f64>,
    /// Damping ratio (conventional scheme).
    #[arg(long)]
    xi: Option<f64>,
    /// Plant file; the built-in reference converter when absent.
    #[arg(long)]
    plant: Option<PathBuf>,
}

#[derive(Args)]
struct BandwidthArgs {
    /// Third-harmonic target, percent of fundamental.
    #[arg(long)]
    target_i3: Option<f64>,
    /// Closed-loop natural frequency, Hz.
    #[arg(long)]
    bandwidth_hz: Option<f64>,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    bandwidth: BandwidthArgs,
    /// Bus power step for the transient metrics, W.
    #[arg(long, default_value_t = 1000.0)]
    p_step: f64,
    /// Output directory; the report goes to stdout only when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use the linearized bus model.
    #[arg(long)]
    linear: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Curve {
    I3,
    Dvmax,
    Itae,
    Robustness,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    curve: Curve,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Nominal design for the robustness curve.
    #[command(flatten)]
    bandwidth: BandwidthArgs,
    #[arg(long, default_value_t = 1.0)]
    f_min_hz: f64,
    #[arg(long, default_value_t = 20.0)]
    f_max_hz: f64,
    #[arg(long, default_value_t = 0.7)]
    v_min: f64,
    #[arg(long, default_value_t = 1.3)]
    v_max: f64,
    #[arg(long, default_value_t = 96)]
    points: usize,
    #[arg(long, default_value_t = 1000.0)]
    p_step: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoopKind {
    Open,
    Gvl,
    Gdp,
}

#[derive(Args)]
struct BodeArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    bandwidth: BandwidthArgs,
    #[arg(long = "loop", value_enum, default_value = "open")]
    loop_kind: LoopKind,
    #[arg(long, default_value_t = 0.01)]
    f_min_hz: f64,
    #[arg(long, default_value_t = 1000.0)]
    f_max_hz: f64,
    #[arg(long, default_value_t = 50)]
    points_per_decade: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Bad flags or flag combinations.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeKind, String> {
    s.parse().map_err(|e: dcbus::Error| e.to_string())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<dcbus::Error>() {
        Some(dcbus::Error::Config(_) | dcbus::Error::InvalidArgument(_)) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn precision() -> Result<usize> {
    match std::env::var(PRECISION_VAR) {
        Err(_) => Ok(DEFAULT_DIGITS),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(d) if (1..=17).contains(&d) => Ok(d),
            _ => Err(usage(format!(
                "{PRECISION_VAR} must be an integer in 1..=17, got '{v}'"
            ))),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().collect();
    let result = precision().and_then(|digits| match cli.command {
        Command::Design(a) => cmd_design(a, args, digits),
        Command::Simulate(a) => cmd_simulate(a, args, digits),
        Command::Sweep(a) => cmd_sweep(a, args, digits),
        Command::Bode(a) => cmd_bode(a, args, digits),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Loads the plant, folding the file into the run digest when there is one.
fn plant(path: Option<&Path>, run: Option<&mut Run>) -> Result<VscParams> {
    match path {
        None => Ok(VscParams::reference()),
        Some(p) => {
            if let Some(run) = run {
                run.add_input(&std::fs::read(p).with_context(|| format!("reading {}", p.display()))?);
            }
            Ok(load_plant(p)?)
        }
    }
}

fn spec(s: &SchemeArgs, b: &BandwidthArgs) -> DesignSpec {
    DesignSpec {
        scheme: s.scheme,
        phase_margin_deg: s.phase_margin,
        beta: s.beta,
        xi: s.xi,
        bandwidth_hz: b.bandwidth_hz,
        target_i3_pct: b.target_i3,
    }
}

fn cmd_design(a: DesignArgs, args: Vec<String>, digits: usize) -> Result<()> {
    let mut run = a.out.as_deref().map(|d| Run::new(d, args)).transpose()?;
    let plant = plant(a.scheme.plant.as_deref(), run.as_mut())?;
    let dp = spec(&a.scheme, &a.bandwidth).resolve(&plant)?;
    let report = DesignReport::new(&dp, &plant, a.p_step)?;
    let text = report.to_string();
    print!("{text}");
    if let Some(mut run) = run {
        run.write("design.txt", text.as_bytes())?;
        let mut csv = Vec::new();
        write_metrics_csv(&mut csv, &[(dp.scheme.name().to_string(), report.performance)], digits)?;
        run.write("metrics.csv", &csv)?;
        run.finish()?;
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, args: Vec<String>, digits: usize) -> Result<()> {
    let mut run = Run::new(&a.out, args)?;
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    run.add_input(text.as_bytes());
    let sc = Scenario::from_toml_str(&text).with_context(|| a.config.display().to_string())?;
    let trace = if a.linear {
        simulate_linear(&sc.config)?
    } else {
        simulate(&sc.config)?
    };
    let mut csv = Vec::new();
    trace.write_csv(&mut csv, digits)?;
    run.write("trace.csv", &csv)?;
    println!("scenario {}: {} samples", sc.name, trace.len());

    let an = sc.analysis;
    if let Some(start) = an.harmonic_start {
        let f0 = sc.config.plant.grid_freq_hz();
        let report = analyze_harmonics(&trace, Column::Is, start, an.harmonic_cycles.unwrap_or(20), f0)?;
        print!("I3 = {} %, THD = {} %", sig(report.i3(), 4), sig(report.thd_percent, 4));
        if let Some(dp) = &sc.design {
            let predicted = third_harmonic_percent(&build_gvl(dp), sc.config.plant.omega_s)?;
            print!(
                " (predicted {} %, error {} pp)",
                sig(predicted, 4),
                sig(compare_prediction(&report, predicted), 3)
            );
        }
        println!();
        let mut csv = Vec::new();
        write_report_csv(&mut csv, &[(sc.name.clone(), report)], digits)?;
        run.write("harmonics.csv", &csv)?;
    }
    if let (Some(t0), Some(t1)) = (an.transient_start, an.transient_end) {
        let t = event_transient(&trace, sc.config.plant.v_o_ref, t0, t1)?;
        println!(
            "peak deviation {} V, settling {} s",
            sig(t.peak_deviation, 4),
            sig(t.settling_time, 4)
        );
        let csv = format!(
            "scenario,peak_dev_v,settle_s\n{},{},{}\n",
            sc.name,
            sig(t.peak_deviation, digits),
            sig(t.settling_time, digits)
        );
        run.write("transient.csv", csv.as_bytes())?;
    }
    run.finish()?;
    Ok(())
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(lo > 0.0 && hi >= lo) {
        bail!(usage(format!(
            "sweep range needs 0 < min <= max and points >= 1 (got {lo}..{hi}, {points})"
        )));
    }
    Ok((0..points)
        .map(|k| {
            if points == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (points - 1) as f64
            }
        })
        .collect())
}

fn cmd_sweep(a: SweepArgs, args: Vec<String>, digits: usize) -> Result<()> {
    let mut run = Run::new(&a.out, args)?;
    let plant = plant(a.scheme.plant.as_deref(), Some(&mut run))?;
    let nominal_given = a.bandwidth.bandwidth_hz.is_some() || a.bandwidth.target_i3.is_some();
    let (name, body) = match a.curve {
        Curve::Robustness => {
            let dp = spec(&a.scheme, &a.bandwidth).resolve(&plant)?;
            let sweep = robustness_sweep(&dp, &plant, (a.v_min, a.v_max), a.points)?;
            let mut csv = Vec::new();
            write_robustness_csv(&mut csv, &sweep, digits)?;
            ("robustness.csv", csv)
        }
        curve => {
            if nominal_given {
                bail!(usage(
                    "--bandwidth-hz and --target-i3 only apply to the robustness curve"
                ));
            }
            let scheme: Scheme = spec(&a.scheme, &a.bandwidth).resolve_scheme()?;
            let freqs = grid(a.f_min_hz, a.f_max_hz, a.points)?;
            let rows: Vec<String> = freqs
                .par_iter()
                .map(|&f| -> dcbus::Result<String> {
                    let dp = design(&plant, scheme, 2.0 * PI * f)?;
                    let values = match curve {
                        Curve::I3 => vec![third_harmonic_percent(&build_gvl(&dp), plant.omega_s)?],
                        Curve::Dvmax => {
                            let fl = max_voltage_fluctuation(&build_gdp(&dp, &plant), a.p_step)?;
                            vec![fl.delta_v_max, fl.settling_time]
                        }
                        Curve::Itae => vec![itae(&build_gdp(&dp, &plant), a.p_step, TRANSIENT_HORIZON)?],
                        Curve::Robustness => unreachable!(),
                    };
                    let mut row = sig(f, digits);
                    for v in values {
                        row.push(',');
                        row.push_str(&sig(v, digits));
                    }
                    Ok(row)
                })
                .collect::<dcbus::Result<_>>()?;
            let (name, header) = match curve {
                Curve::I3 => ("i3.csv", "f_n_hz,i3_pct"),
                Curve::Dvmax => ("dvmax.csv", "f_n_hz,dvmax_v,settle_s"),
                _ => ("itae.csv", "f_n_hz,itae_vs2"),
            };
            let mut csv = format!("{header}\n");
            for r in rows {
                csv.push_str(&r);
                csv.push('\n');
            }
            (name, csv.into_bytes())
        }
    };
    run.write(name, &body)?;
    run.finish()?;
    println!("wrote {}", a.out.join(name).display());
    Ok(())
}

fn cmd_bode(a: BodeArgs, args: Vec<String>, digits: usize) -> Result<()> {
    let mut run = Run::new(&a.out, args)?;
    let plant = plant(a.scheme.plant.as_deref(), Some(&mut run))?;
    let dp = spec(&a.scheme, &a.bandwidth).resolve(&plant)?;
    let tf = match a.loop_kind {
        LoopKind::Open => build_open_loop(&dp, &plant),
        LoopKind::Gvl => build_gvl(&dp),
        LoopKind::Gdp => build_gdp(&dp, &plant),
    };
    let sweep = bode_sweep(&tf, 2.0 * PI * a.f_min_hz, 2.0 * PI * a.f_max_hz, a.points_per_decade)?;
    let mut csv = Vec::new();
    write_bode_csv(&mut csv, &sweep, digits)?;
    run.write("bode.csv", &csv)?;
    run.finish()?;
    println!("wrote {}", a.out.join("bode.csv").display());
    Ok(())
}
