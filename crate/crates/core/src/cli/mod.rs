//! Command-line front end. Exit codes: 0 success, 1 validation failure,
//! 2 I/O, parse or config error.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bounds::{audit_ensemble, EnsembleAudit, CALIBRATION};
use crate::constructions::{build_bloch, build_neel};
use crate::energy::{total_energy, EnergyBreakdown};
use crate::error::{Result, WallError};
use crate::fieldio::{read_field, write_field};
use crate::minimize::relax;
use crate::sweep::{find_crossover_with, run_sweep, CrossoverResult};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "wallscale", version, about = "Specific energy of 180-degree walls in soft films")]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WallKind {
    Bloch,
    Neel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the energy of a field file.
    Energy {
        field: PathBuf,
        /// Append-free CSV with one header and one data row.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build a wall construction on the grid chosen by the grid policy.
    Build {
        #[arg(long, value_enum)]
        kind: WallKind,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Relax a field file; writes the relaxed field and the energy trace.
    Relax {
        field: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the (Q, t/d) sweep.
    Sweep {
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Audit the lemma ratios over the seeded ensemble at two grid levels.
    VerifyBounds {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Locate the Bloch/Neel cross-over thickness for each configured Q.
    Crossover {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Ok,
    ValidationFailed(String),
}

pub fn exit_code(err: &WallError) -> i32 {
    match err {
        WallError::Io { .. } | WallError::Parse { .. } | WallError::Config(_) => 2,
        _ => 1,
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::ValidationFailed(msg)) => {
            eprintln!("validation failed: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn comment_block(cfg: &RunConfig, extra: &[String]) -> Vec<String> {
    let mut lines = cfg.header_lines();
    lines.extend(extra.iter().cloned());
    lines
}

fn commented(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| WallError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| WallError::io(path, e))
}

fn print_energy(e: &EnergyBreakdown) {
    println!("exchange   {:.10e}", e.exchange);
    println!("anisotropy {:.10e}", e.anisotropy);
    println!("stray      {:.10e}", e.stray);
    println!("total      {:.10e}", e.total);
    if let Some(d) = &e.diagnostics {
        println!(
            "diagnostics: wrap_residual {:.3e} zero_mode_mass {:.3e} reciprocity_defect {:.3e}",
            d.wrap_residual, d.zero_mode_mass, d.reciprocity_defect
        );
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Energy { field, csv } => cmd_energy(&cfg, field, csv.as_deref()),
        Command::Build { kind, out } => cmd_build(&cfg, *kind, out.as_deref()),
        Command::Relax { field, out, trace } => cmd_relax(&cfg, field, out.as_deref(), trace.as_deref()),
        Command::Sweep { out, svg } => cmd_sweep(&cfg, out.as_deref(), svg.as_deref()),
        Command::VerifyBounds { out } => cmd_verify_bounds(&cfg, out.as_deref()),
        Command::Crossover { out } => cmd_crossover(&cfg, out.as_deref()),
    }
}

fn cmd_energy(cfg: &RunConfig, path: &Path, csv: Option<&Path>) -> Result<Outcome> {
    let field = read_field(path)?;
    let params = cfg.material()?;
    let e = total_energy(&field, &params)?;
    print_energy(&e);
    let adm = field.validate_admissible();
    println!("{adm}");
    if let Some(out) = csv {
        let d = e.diagnostics.unwrap_or_default();
        let mut text = commented(&comment_block(cfg, &[format!("field {}", path.display())]));
        text.push_str("exchange,anisotropy,stray,total,wrap_residual,zero_mode_mass,reciprocity_defect\n");
        text.push_str(&format!(
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.3e},{:.3e},{:.3e}\n",
            e.exchange, e.anisotropy, e.stray, e.total, d.wrap_residual, d.zero_mode_mass, d.reciprocity_defect
        ));
        write_text(out, &text)?;
    }
    Ok(Outcome::Ok)
}

fn cmd_build(cfg: &RunConfig, kind: WallKind, out: Option<&Path>) -> Result<Outcome> {
    let params = cfg.material()?;
    let (built, name) = match kind {
        WallKind::Bloch => {
            let grid = cfg.grid.bloch_grid(&params, cfg.construction.delta)?;
            (build_bloch(&grid, &params, &cfg.construction)?, "bloch.field")
        }
        WallKind::Neel => {
            let grid = cfg.grid.neel_grid(&params)?;
            (build_neel(&grid, &params)?, "neel.field")
        }
    };
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    let field = built.value;
    let g = field.grid();
    println!("grid n1={} n3={} L={:e} t={:e}", g.n1(), g.n3(), g.half_width(), g.thickness());
    let e = total_energy(&field, &params)?;
    print_energy(&e);
    println!("stray fraction {:.4e}", e.stray_fraction());
    if kind == WallKind::Neel {
        println!("m1(0) = {:.12}", field.at((g.n1() - 1) / 2, 0)[0]);
    }
    let adm = field.validate_admissible();
    println!("{adm}");
    let path = cfg.output_path(out, name);
    let mut extra = vec![format!("kind {kind:?}")];
    extra.extend(built.warnings.iter().map(|w| format!("warning: {w}")));
    write_field(&path, &field, &comment_block(cfg, &extra))?;
    println!("wrote {}", path.display());
    Ok(if adm.passed {
        Outcome::Ok
    } else {
        Outcome::ValidationFailed(adm.to_string())
    })
}

fn cmd_relax(cfg: &RunConfig, path: &Path, out: Option<&Path>, trace: Option<&Path>) -> Result<Outcome> {
    let field = read_field(path)?;
    let params = cfg.material()?;
    let (relaxed, report) = relax(&field, &params, &cfg.relax)?;
    println!(
        "iterations {} termination {} final grad norm {:.3e} (grad_tol {:.1e})",
        report.iterations, report.termination, report.final_grad_norm, cfg.relax.grad_tol
    );
    println!("initial total {:.10e}", report.initial_energy.total);
    print_energy(&report.final_energy);
    if let Some(p) = &report.probe {
        println!("descent probe seed {} passed {}", p.seed, p.passed);
    }
    let extra = vec![
        format!("relaxed from {}", path.display()),
        format!("termination {}", report.termination),
    ];
    let out_path = cfg.output_path(out, "relaxed.field");
    write_field(&out_path, &relaxed, &comment_block(cfg, &extra))?;
    let trace_path = cfg.output_path(trace, "trace.csv");
    let mut text = commented(&comment_block(cfg, &extra)).into_bytes();
    report
        .write_trace_csv(&mut text)
        .map_err(|e| WallError::io(&trace_path, e))?;
    write_text(&trace_path, std::str::from_utf8(&text).expect("utf8"))?;
    println!("wrote {} and {}", out_path.display(), trace_path.display());
    Ok(if report.is_monotone() {
        Outcome::Ok
    } else {
        Outcome::ValidationFailed("energy trace is not monotone".into())
    })
}

fn cmd_sweep(cfg: &RunConfig, out: Option<&Path>, svg_out: Option<&Path>) -> Result<Outcome> {
    let table = run_sweep(&cfg.sweep_config());
    for p in &table.points {
        println!(
            "Q={:e} t/d={} status={} winner={} E_min={:.6e}",
            p.q,
            p.t_over_d,
            p.status,
            p.winner.map(|w| w.to_string()).unwrap_or_default(),
            p.e_min
        );
    }
    let header = comment_block(cfg, &[]);
    let mut text = commented(&header).into_bytes();
    table.write_csv(&mut text).expect("write to memory");
    let path = cfg.output_path(out, "sweep.csv");
    write_text(&path, std::str::from_utf8(&text).expect("utf8"))?;
    println!("wrote {}", path.display());
    if svg_out.is_some() || cfg.output.svg {
        let svg_path = cfg.output_path(svg_out, "sweep.svg");
        write_text(&svg_path, &svg::render(&table, &header))?;
        println!("wrote {}", svg_path.display());
    }
    Ok(Outcome::Ok)
}

/// Calibration, theorem-violation (10x) and grid-doubling (2x) checks.
pub fn audit_verdict(coarse: &EnsembleAudit, fine: &EnsembleAudit) -> Vec<(String, bool)> {
    let cal = [CALIBRATION.l2, CALIBRATION.l1, CALIBRATION.poincare];
    let a = [coarse.max.l2, coarse.max.l1, coarse.max.poincare];
    let b = [fine.max.l2, fine.max.l1, fine.max.poincare];
    let names = ["l2", "l1", "poincare"];
    let mut out = Vec::new();
    for k in 0..3 {
        let worst = a[k].max(b[k]);
        out.push((
            format!("{} max {:.4e} / {:.4e} <= calibrated {:.3}", names[k], a[k], b[k], cal[k]),
            worst <= cal[k],
        ));
        out.push((format!("{} max below 10x calibration", names[k]), worst < 10.0 * cal[k]));
        let change = if a[k].min(b[k]) > 0.0 { a[k].max(b[k]) / a[k].min(b[k]) } else { f64::INFINITY };
        out.push((format!("{} change under doubling x{:.3} < 2", names[k], change), change < 2.0));
    }
    out
}

fn cmd_verify_bounds(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome> {
    let acfg = cfg.audit_config();
    let coarse = audit_ensemble(&acfg, 0)?;
    let fine = audit_ensemble(&acfg, 1)?;
    let verdict = audit_verdict(&coarse, &fine);
    let mut failed = Vec::new();
    for (msg, ok) in &verdict {
        println!("{} {msg}", if *ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(msg.clone());
        }
    }
    let path = cfg.output_path(out, "bounds.csv");
    let mut text = commented(&comment_block(cfg, &[]));
    text.push_str("level,lemma,provenance,lhs,rhs,ratio\n");
    for (level, audit) in [(0, &coarse), (1, &fine)] {
        for r in &audit.reports {
            text.push_str(&format!(
                "{level},{},{},{:.10e},{:.10e},{:.10e}\n",
                r.lemma, r.provenance, r.lhs, r.rhs, r.ratio
            ));
        }
    }
    write_text(&path, &text)?;
    println!("wrote {}", path.display());
    Ok(if failed.is_empty() {
        Outcome::Ok
    } else {
        Outcome::ValidationFailed(failed.join("; "))
    })
}

fn cmd_crossover(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome> {
    let scfg = cfg.sweep_config();
    let [a, b] = cfg.crossover.bracket;
    let mut results: Vec<CrossoverResult> = Vec::new();
    for &q in &cfg.crossover.q_values {
        let r = find_crossover_with(q, (a, b), &scfg, cfg.crossover.rel_width)?;
        println!(
            "Q={q:e} t*/d={:.4} sqrt(ln 1/Q)={:.4} ratio={:.4}",
            r.t_star_over_d, r.predicted, r.ratio
        );
        results.push(r);
    }
    let path = cfg.output_path(out, "crossover.csv");
    let mut text = commented(&comment_block(cfg, &[])).into_bytes();
    writeln!(text, "Q,t_star_over_d,predicted,ratio,bracket_lo,bracket_hi,probes").expect("memory");
    for r in &results {
        writeln!(
            text,
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{}",
            r.q,
            r.t_star_over_d,
            r.predicted,
            r.ratio,
            r.bracket.0,
            r.bracket.1,
            r.probes.len()
        )
        .expect("memory");
    }
    write_text(&path, std::str::from_utf8(&text).expect("utf8"))?;
    println!("wrote {}", path.display());
    Ok(Outcome::Ok)
}
