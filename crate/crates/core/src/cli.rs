//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 solver
//! non-convergence, 3 ruggedness failure under `--strict`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::bias::{temperature_sweep, write_temp_csv};
use crate::config::{parse_config_with, ProtectionMode, ToolkitConfig};
use crate::design::watts_to_dbm;
use crate::error::{Error, Result};
use crate::mismatch::{ruggedness_verdict, sweep_vswr, LoadCondition, RuggednessReport, VswrSweep};
use crate::power_control::{power_step_table, simulate_vramps, simulated_pout_vs_vramp, write_vramp_csv};
use crate::protection::run_protection_loop;
use crate::report::{csv_writer, fmt_f64, write_file};
use crate::stage::Stage;

pub const OUT_ENV: &str = "CLASSE_FORGE_OUT";
const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(name = "classe-forge", version, about = "Class-E PA synthesis and simulation")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (falls back to $CLASSE_FORGE_OUT, then output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; 0 picks the core count.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Override a config key, e.g. `--set design.q_factor=6`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Exit with status 3 when a ruggedness sweep fails.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the synthesized component values.
    Synth,
    /// Steady state at the design supply into the synthesized load.
    Sim,
    /// Ramp levels in fixed dB steps, with simulated power.
    PowerTable,
    /// Output power across temperature through the bias network.
    TempSweep,
    /// Output power and PAE versus ramp voltage.
    VrampSweep,
    /// Drain peaks over reflection phase, with and without protection.
    VswrSweep,
    /// Protection loop trace for one mismatched load.
    ProtectSim,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Sim => "sim",
            Command::PowerTable => "power-table",
            Command::TempSweep => "temp-sweep",
            Command::VrampSweep => "vramp-sweep",
            Command::VswrSweep => "vswr-sweep",
            Command::ProtectSim => "protect-sim",
        }
    }
}

/// Runs the CLI with process stdout/stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI writing human-readable output to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Unstable { .. } | Error::Divergent(_) | Error::Inconsistent(_) => 2,
        _ => 1,
    }
}

fn load_config(cli: &Cli) -> Result<ToolkitConfig> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config {
            path: p.display().to_string(),
            message: e.to_string(),
        })?,
        None => String::new(),
    };
    parse_config_with(&text, &cli.set)
}

fn output_dir(cli: &Cli, cfg: &ToolkitConfig) -> PathBuf {
    if let Some(p) = &cli.out {
        return p.clone();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    PathBuf::from(cfg.output.dir.as_deref().unwrap_or(DEFAULT_OUT))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    jobs: usize,
    exit_code: i32,
    generated_unix_s: u64,
    files: Vec<String>,
    config: &'a ToolkitConfig,
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(cli)?;
    let dir = output_dir(cli, &cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
    let mut files = Vec::new();
    let mut text = Vec::new();
    let code = pool.install(|| dispatch(cli, &cfg, &dir, &mut text, &mut files));
    out.write_all(&text)?;
    let code = code?;
    if !matches!(cli.command, Command::Synth) || !files.is_empty() {
        let manifest = Manifest {
            tool: "classe-forge",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: cli.command.name(),
            jobs: pool.current_num_threads(),
            exit_code: code,
            generated_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            files,
            config: &cfg,
        };
        write_file(&dir, "run_manifest.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    Ok(code)
}

fn record(files: &mut Vec<String>, path: &Path) {
    files.push(
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    );
}

fn dispatch(
    cli: &Cli,
    cfg: &ToolkitConfig,
    dir: &Path,
    out: &mut dyn Write,
    files: &mut Vec<String>,
) -> Result<i32> {
    let stage = Stage::build(&cfg.stage_settings())?;
    let reg = cfg.regulator();
    match cli.command {
        Command::Synth => {
            print_stage(&stage, out)?;
            Ok(0)
        }
        Command::Sim => {
            let model = stage.matched(cfg.design.vdc, 1.0)?;
            let (ss, m) = stage.simulate(&model)?;
            let p = write_file(dir, "waveform.csv", |w| ss.waveform.write_csv(&model, w))?;
            record(files, &p);
            let pout = stage.reported(m.p_out_fund);
            let rows: [(&str, f64); 11] = [
                ("p_out_fund_W", m.p_out_fund),
                ("p_out_reported_W", pout),
                ("p_out_reported_dBm", watts_to_dbm(pout)),
                ("p_dc_W", m.p_dc),
                ("drain_efficiency", m.drain_efficiency),
                ("pae", m.pae),
                ("v_drain_peak_V", m.v_drain_peak),
                ("zvs_residual_V", m.zvs_residual),
                ("p_switch_W", m.p_switch),
                ("p_harmonic_W", m.p_harmonic()),
                ("cycles_used", m.cycles_used as f64),
            ];
            let p = write_file(dir, "metrics.csv", |w| {
                let mut c = csv_writer(w);
                c.write_record(["metric", "value"])?;
                for (k, v) in rows {
                    c.write_record([k.to_string(), fmt_f64(v)])?;
                }
                c.write_record(["converged", if m.converged { "true" } else { "false" }])?;
                c.flush()?;
                Ok(())
            })?;
            record(files, &p);
            for (k, v) in rows {
                writeln!(out, "{k:<20} {}", fmt_f64(v))?;
            }
            writeln!(out, "{:<20} {}", "converged", m.converged)?;
            Ok(if m.converged { 0 } else { 2 })
        }
        Command::PowerTable => {
            // The reported scope sees both halves in parallel when differential.
            let rload = stage.components.r_load / stage.scope.report_factor();
            let table = power_step_table(
                cfg.design_spec().pout_target,
                cfg.sweep.step_db,
                cfg.sweep.n_steps,
                &reg,
                rload,
            )?;
            let sim = simulate_vramps(&table.vramps(), &reg, &stage)?;
            let p = write_file(dir, "power_table.csv", |w| table.write_csv(w, Some(&sim)))?;
            record(files, &p);
            for (r, s) in table.rows.iter().zip(&sim) {
                writeln!(
                    out,
                    "level {:>2}  vramp {:.4} V  model {:7.3} dBm  sim {:7.3} dBm",
                    r.level, r.vramp, r.pout_dbm, s.pout_dbm
                )?;
            }
            Ok(if sim.iter().all(|s| s.converged) { 0 } else { 2 })
        }
        Command::TempSweep => {
            let chain = cfg.bias_chain()?;
            let pts = temperature_sweep(&stage, &reg, &chain, cfg.sweep.temp_vramp, &cfg.temperatures())?;
            let p = write_file(dir, "temp_sweep.csv", |w| write_temp_csv(&pts, w))?;
            record(files, &p);
            writeln!(
                out,
                "r5 = {} ohm, spread {} dB over {} points",
                fmt_f64(chain.bias.r5),
                fmt_f64(crate::bias::pout_spread_db(&pts)),
                pts.len()
            )?;
            Ok(if pts.iter().all(|p| p.converged) { 0 } else { 2 })
        }
        Command::VrampSweep => {
            let pts = simulated_pout_vs_vramp(&cfg.vramp_grid(), &reg, &stage)?;
            let p = write_file(dir, "vramp_sweep.csv", |w| write_vramp_csv(&pts, w))?;
            record(files, &p);
            writeln!(out, "{} points written", pts.len())?;
            Ok(if pts.iter().all(|p| p.converged) { 0 } else { 2 })
        }
        Command::VswrSweep => {
            let phases = cfg.phases();
            let settings = cfg.protection_settings();
            let modes: &[bool] = match cfg.sweep.protection {
                ProtectionMode::Off => &[false],
                ProtectionMode::On => &[true],
                ProtectionMode::Both => &[false, true],
            };
            let mut report = RuggednessReport {
                breakdown: cfg.sweep.breakdown_v,
                rows: Vec::new(),
            };
            for &supply in &cfg.sweep.supplies {
                let sweep = VswrSweep {
                    supply,
                    vswr: cfg.sweep.vswr,
                    z0: cfg.sweep.z0,
                    phases: &phases,
                    breakdown: cfg.sweep.breakdown_v,
                };
                for &on in modes {
                    report.extend(sweep_vswr(&stage, &sweep, on.then_some(&settings))?);
                }
            }
            let p = write_file(dir, "vswr_sweep.csv", |w| report.write_csv(w))?;
            record(files, &p);
            let v = ruggedness_verdict(&report)?;
            for r in report.rows.iter().filter(|r| r.failure.is_some()) {
                writeln!(
                    out,
                    "row failed: phase {} supply {}: {}",
                    r.phase_deg,
                    r.supply,
                    r.failure.as_deref().unwrap_or("")
                )?;
            }
            writeln!(
                out,
                "{}: {} of {} rows fail; worst {} V at {} deg ({} V supply, protection {}), margin {} V",
                if v.pass { "PASS" } else { "FAIL" },
                v.failures,
                v.rows,
                fmt_f64(v.worst_peak),
                fmt_f64(v.worst_phase_deg),
                fmt_f64(v.worst_supply),
                if v.worst_protection { "on" } else { "off" },
                fmt_f64(v.margin),
            )?;
            if cli.strict && !v.pass {
                return Ok(3);
            }
            Ok(if report.rows.iter().all(|r| r.converged) { 0 } else { 2 })
        }
        Command::ProtectSim => {
            let supply = cfg.sweep.supplies[0];
            let z0 = cfg.sweep.z0.unwrap_or(stage.components.r_load);
            let load = LoadCondition::new(cfg.sweep.vswr, cfg.sweep.protect_phase_deg, z0)?;
            let settings = cfg.protection_settings();
            let params = settings.for_supply(supply)?;
            let res = run_protection_loop(
                |g| stage.model(load.z_load, supply, params.drive_depth(g)),
                &settings.rect,
                &params,
                &stage.steady,
                stage.p_in,
            )?;
            let p = write_file(dir, "loop_trace.csv", |w| res.trace.write_csv(w))?;
            record(files, &p);
            writeln!(
                out,
                "{:?} after {} simulations: gain {}, drain peak {} V (threshold {} V)",
                res.status,
                res.simulations,
                fmt_f64(res.final_gain),
                fmt_f64(res.metrics.v_drain_peak),
                fmt_f64(params.v_ref_threshold),
            )?;
            Ok(if res.converged { 0 } else { 2 })
        }
    }
}

fn print_stage(stage: &Stage, out: &mut dyn Write) -> Result<()> {
    let c = &stage.components;
    writeln!(out, "r_load_ohm = {}", fmt_f64(c.r_load))?;
    writeln!(out, "c3_F = {}", fmt_f64(c.c3))?;
    writeln!(out, "l7_H = {}", fmt_f64(c.l7))?;
    writeln!(out, "cs_F = {}", fmt_f64(c.cs))?;
    writeln!(out, "l6_H = {}", fmt_f64(c.l6))?;
    writeln!(out, "r_on_ohm = {}", fmt_f64(c.r_on))?;
    writeln!(out, "duty = {}", fmt_f64(stage.duty))?;
    if let Some(t) = stage.trim {
        writeln!(out, "zvs_residual_ratio = {}", fmt_f64(t.zvs_ratio))?;
    }
    Ok(())
}
