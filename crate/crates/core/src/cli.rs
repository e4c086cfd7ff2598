//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation error (bad arguments, config or a
//! failed invariant), 2 runtime blow-up, 3 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::diagnostics::{energy_check, format_g17, smallness_condition, sobolev_norm, vorticity_residual};
use crate::error::{Error, Result};
use crate::export::{export_series, export_sweep};
use crate::field::{to_physical_many, State4};
use crate::grid::Grid;
use crate::init::{make_well_prepared_data, well_prepared_parts};
use crate::invariants::{format_table, structure_suite, truncation_suite};
use crate::pe::{default_dt, pe_run};
use crate::qg::qg_run;
use crate::structure::{decompose, omega};
use crate::sweep::run_convergence_sweep;

#[derive(Parser, Debug)]
#[command(name = "qglab", version, about = "Rotating stratified flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the primitive equations from the configured initial data.
    RunPe(Common),
    /// Integrate the quasi-geostrophic system from the QG part of the data.
    RunQg(Common),
    /// Epsilon sweep with rate fits.
    Sweep(Common),
    /// Split the initial data into QG and oscillating parts.
    Decompose(Common),
    /// Randomized structure and truncation property suites.
    CheckInvariants(Invariants),
    /// Evaluate the smallness conditions on the initial data.
    CheckConditions(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `key=value`, applied after the config file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug)]
struct Invariants {
    #[command(flatten)]
    common: Common,
    /// Random fields per suite.
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } | Error::EnergyIncrease { .. } => 2,
        Error::Io { .. } => 3,
        _ => 1,
    }
}

fn load(c: &Common, required: bool) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None if required => return Err(Error::Config("--config <path> is required".into())),
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&c.overrides)?;
    Ok(cfg)
}

fn out_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn list_written(out: &mut dyn Write, paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        writeln!(out, "wrote {}", p.display()).map_err(out_err(p))?;
    }
    Ok(())
}

fn write_fields_csv(path: &Path, u: &State4) -> Result<()> {
    let g = u.grid();
    let n = g.n();
    let c = u.components();
    let phys = to_physical_many(&[&c[0], &c[1], &c[2], &c[3]]);
    let mut s = String::from("x1,x2,x3,v1,v2,v3,theta\n");
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                let p = g.index(i1, i2, i3);
                let cells = [
                    g.position(i1),
                    g.position(i2),
                    g.position(i3),
                    phys[0][p],
                    phys[1][p],
                    phys[2][p],
                    phys[3][p],
                ];
                let row: Vec<String> = cells.iter().map(|&x| format_g17(x)).collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
        }
    }
    std::fs::write(path, s).map_err(out_err(path))
}

fn run_pe_cmd(c: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = load(c, true)?;
    let u0 = make_well_prepared_data(&cfg)?;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&u0, cfg.t_end));
    let rec = pe_run(&u0, &cfg.params, cfg.t_end, dt, &cfg.diag)?;
    let mut written = export_series(&rec.series, &c.out, "pe_series")?;
    if rec.snapshots.len() >= 3 {
        let res = vorticity_residual(&rec, &cfg.params)?;
        written.extend(export_series(&res, &c.out, "vorticity_residual")?);
    }
    let e = energy_check(&rec.series, cfg.params.min_viscosity())?;
    let io = out_err(&c.out);
    writeln!(out, "steps {}  dt {}", rec.steps, format_g17(rec.dt)).map_err(&io)?;
    writeln!(
        out,
        "energy inequality {}  worst excess {:.3e}",
        if e.pass { "holds" } else { "VIOLATED" },
        e.worst_excess
    )
    .map_err(&io)?;
    list_written(out, &written)
}

fn run_qg_cmd(c: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = load(c, true)?;
    let parts = well_prepared_parts(&cfg)?;
    let w0 = omega(&parts.qg, cfg.params.froude);
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&parts.qg, cfg.t_end));
    let rec = qg_run(&w0, &cfg.params, cfg.t_end, dt, &cfg.diag)?;
    let written = export_series(&rec.series, &c.out, "qg_series")?;
    let e = energy_check(&rec.series, cfg.params.min_viscosity())?;
    let io = out_err(&c.out);
    writeln!(out, "steps {}  dt {}", rec.steps, format_g17(rec.dt)).map_err(&io)?;
    writeln!(
        out,
        "vorticity energy inequality {}  worst excess {:.3e}",
        if e.pass { "holds" } else { "VIOLATED" },
        e.worst_excess
    )
    .map_err(&io)?;
    list_written(out, &written)
}

fn sweep_cmd(c: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = load(c, true)?;
    let res = run_convergence_sweep(&cfg)?;
    let written = export_sweep(&res, &c.out)?;
    let io = out_err(&c.out);
    writeln!(out, "dt {}  t_end {}", format_g17(res.dt), format_g17(res.t_end)).map_err(&io)?;
    for (name, vals) in res.metrics() {
        let cells: Vec<String> = vals.iter().map(|v| format!("{v:.4e}")).collect();
        writeln!(out, "{name:<18} {}", cells.join("  ")).map_err(&io)?;
    }
    for (name, fit) in &res.slopes {
        if fit.is_present() {
            writeln!(out, "slope {name:<18} {:+.3}  (rms {:.2e})", fit.slope, fit.residual)
                .map_err(&io)?;
        } else {
            writeln!(out, "slope {name:<18} absent").map_err(&io)?;
        }
    }
    list_written(out, &written)
}

fn decompose_cmd(c: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = load(c, true)?;
    let u0 = make_well_prepared_data(&cfg)?;
    let parts = decompose(&u0, cfg.params.froude);
    std::fs::create_dir_all(&c.out).map_err(out_err(&c.out))?;
    let mut written = Vec::new();
    for (name, field) in [("decompose_qg.csv", &parts.qg), ("decompose_osc.csv", &parts.osc)] {
        let p = c.out.join(name);
        write_fields_csv(&p, field)?;
        written.push(p);
    }
    let mut norms = String::from("s,Hs(U),Hs(U_qg),Hs(U_osc)\n");
    let io = out_err(&c.out);
    for s in cfg.diag.exponents() {
        let row = [s, sobolev_norm(&u0, s), sobolev_norm(&parts.qg, s), sobolev_norm(&parts.osc, s)];
        writeln!(
            out,
            "s = {:<5} U {:.6e}  U_qg {:.6e}  U_osc {:.6e}",
            s, row[1], row[2], row[3]
        )
        .map_err(&io)?;
        let cells: Vec<String> = row.iter().map(|&x| format_g17(x)).collect();
        norms.push_str(&cells.join(","));
        norms.push('\n');
    }
    let p = c.out.join("decompose_norms.csv");
    std::fs::write(&p, norms).map_err(out_err(&p))?;
    written.push(p);
    list_written(out, &written)
}

fn invariants_cmd(a: &Invariants, out: &mut dyn Write) -> Result<bool> {
    let cfg = load(&a.common, false)?;
    let grid = Grid::new(cfg.n, cfg.box_length)?;
    let mut outcomes = structure_suite(&grid, &cfg.params, a.count, a.seed)?;
    outcomes.extend(truncation_suite(&grid, a.count, a.seed));
    let io = out_err(&a.common.out);
    write!(out, "{}", format_table(&outcomes)).map_err(&io)?;
    let all = outcomes.iter().all(|o| o.pass);
    writeln!(out, "{}", if all { "all checks passed" } else { "some checks FAILED" }).map_err(&io)?;
    Ok(all)
}

fn conditions_cmd(c: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = load(c, true)?;
    let u0 = make_well_prepared_data(&cfg)?;
    let r = smallness_condition(&u0, &cfg.params, cfg.smallness_c);
    let io = out_err(&c.out);
    writeln!(out, "constant            {}", format_g17(r.big_c)).map_err(&io)?;
    writeln!(
        out,
        "oscillating part    measured {:.6e}  threshold {:.6e}  margin {:+.6e}",
        r.measured_osc, r.threshold_osc, r.margin_osc
    )
    .map_err(&io)?;
    writeln!(
        out,
        "epsilon             measured {:.6e}  threshold {:.6e}  margin {:+.6e}",
        r.measured_eps, r.threshold_eps, r.margin_eps
    )
    .map_err(&io)?;
    std::fs::create_dir_all(&c.out).map_err(out_err(&c.out))?;
    let p = c.out.join("conditions.csv");
    let vals = [
        r.big_c,
        r.threshold_osc,
        r.measured_osc,
        r.margin_osc,
        r.threshold_eps,
        r.measured_eps,
        r.margin_eps,
    ];
    let cells: Vec<String> = vals.iter().map(|&x| format_g17(x)).collect();
    let text = format!(
        "constant,threshold_osc,measured_osc,margin_osc,threshold_eps,measured_eps,margin_eps\n{}\n",
        cells.join(",")
    );
    std::fs::write(&p, text).map_err(out_err(&p))?;
    list_written(out, &[p])
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::RunPe(c) => run_pe_cmd(c, out),
        Command::RunQg(c) => run_qg_cmd(c, out),
        Command::Sweep(c) => sweep_cmd(c, out),
        Command::Decompose(c) => decompose_cmd(c, out),
        Command::CheckConditions(c) => conditions_cmd(c, out),
        Command::CheckInvariants(a) => match invariants_cmd(a, out) {
            Ok(true) => Ok(()),
            Ok(false) => return 1,
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
