//! Command bodies and the CSV/JSON writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pfasst_lfa::analysis::{run_and_compare, Blocks, ErrorTrace, Experiment, ModeAnalysis, Report};
use pfasst_lfa::verify::run_verify;
use serde::Serialize;
use serde_json::json;

use crate::{classify, resolve_config, AnalyzeArgs, CliError, VerifyArgs};

/// Above this space-time dimension the full-matrix route gets slow.
pub const FULL_WARN_DIM: usize = 1024;

/// 17 significant digits, scientific, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn trace_csv(trace: &ErrorTrace) -> String {
    let mut s = String::from("iteration,actual_inf,actual_2");
    for p in &trace.predictions {
        s.push(',');
        s.push_str(&p.column());
    }
    s.push('\n');
    for k in 0..trace.actual_2.len() {
        s.push_str(&k.to_string());
        s.push(',');
        s.push_str(&fmt_f64(trace.actual_inf[k]));
        s.push(',');
        s.push_str(&fmt_f64(trace.actual_2[k]));
        for p in &trace.predictions {
            s.push(',');
            s.push_str(&fmt_f64(p.values[k]));
        }
        s.push('\n');
    }
    s
}

pub fn spectrum_csv(mode: &ModeAnalysis) -> String {
    let label = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut s = String::from("block_k,block_j,eig_re,eig_im\n");
    for (k, j, z) in &mode.spectrum {
        s.push_str(&format!("{},{},{},{}\n", label(*k), label(*j), fmt_f64(z.re), fmt_f64(z.im)));
    }
    s
}

/// File name of the spectrum of the `i`-th requested block mode.
pub fn spectrum_file(i: usize, blocks: Blocks) -> String {
    if i == 0 {
        "spectrum.csv".into()
    } else {
        format!("spectrum_{}.csv", blocks.tag())
    }
}

#[derive(Debug, Serialize)]
struct Stage {
    stage: &'static str,
    seconds: f64,
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    files.push(path);
    Ok(())
}

pub fn report_json(
    exp: &Experiment,
    report: &Report,
    stages: &[(&'static str, f64)],
    files: &[PathBuf],
) -> serde_json::Value {
    let cfg = &exp.cfg;
    json!({
        "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": cfg,
        "derived": {
            "dx": cfg.dx(),
            "cfl": cfg.cfl(),
            "diffusion_number": cfg.diffusion_number(),
            "dim": cfg.dim(),
        },
        "aggregates": report.summaries(),
        "phases": report.phases,
        "invariants": report.invariants,
        "initial_error": { "inf": report.trace.actual_inf[0], "two": report.trace.actual_2[0] },
        "timings": stages.iter().map(|&(stage, seconds)| Stage { stage, seconds }).collect::<Vec<_>>(),
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_config(args)?;
    if args.dump_config {
        writeln!(out, "{}", serde_json::to_string_pretty(&cfg).expect("config serializes"))?;
        return Ok(());
    }
    if args.blocks.0.contains(&Blocks::Full) && cfg.dim() > FULL_WARN_DIM {
        writeln!(err, "warning: full mode on a {}-dimensional system is slow", cfg.dim())?;
    }
    let mut stages = Vec::new();
    let t = Instant::now();
    let exp = Experiment::build(&cfg).map_err(classify)?;
    stages.push(("build", t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let report = run_and_compare(&exp, &args.strategies.0, &args.blocks.0).map_err(CliError::Numerical)?;
    stages.push(("run_and_compare", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    fs::create_dir_all(&args.out)?;
    let mut files = Vec::new();
    write_file(&args.out, "trace.csv", &trace_csv(&report.trace), &mut files)?;
    for (i, mode) in report.modes.iter().enumerate() {
        write_file(&args.out, &spectrum_file(i, mode.blocks), &spectrum_csv(mode), &mut files)?;
    }
    let report_path = args.out.join("report.json");
    files.push(report_path.clone());
    stages.push(("write", t.elapsed().as_secs_f64()));
    let mut text = serde_json::to_string_pretty(&report_json(&exp, &report, &stages, &files)).expect("report serializes");
    text.push('\n');
    fs::write(&report_path, text)?;

    for m in &report.modes {
        writeln!(out, "{:<4} rho {} norm {}", m.blocks.tag(), fmt_f64(m.rho), fmt_f64(m.norm))?;
    }
    for inv in &report.invariants {
        writeln!(out, "{:<4} {} ({:.3e})", if inv.passed { "ok" } else { "FAIL" }, inv.name, inv.residual)?;
    }
    writeln!(out, "wrote {}", args.out.display())?;
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let checks = run_verify(args.scale, args.inject_fault).map_err(CliError::Numerical)?;
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.passed).map(|c| format!("{} (residual {:.3e})", c.name, c.residual)).collect();
    if failed.is_empty() {
        writeln!(out, "all {} checks passed", checks.len())?;
        Ok(())
    } else {
        Err(CliError::Verify(failed.join("; ")))
    }
}
