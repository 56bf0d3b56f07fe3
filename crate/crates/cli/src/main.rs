mod args;
mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::Parser;
use pricelab::simulator::Check;
use serde::Serialize;
use serde_json::json;

use args::{Cli, Command, GlobalArgs, ReplayArgs};
use commands::{run_command, Ctx};
use output::{
    digests, read_manifest, ExperimentManifest, Invocation, Output, Report, MANIFEST_FILE,
    MANIFEST_VERSION,
};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match drive(cli.global, cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn drive(global: GlobalArgs, command: Command) -> Result<bool> {
    let global = global.merged()?;
    if let Some(n) = global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(execute(global, command)?.passed)
}

fn print_checks(report: &Report) {
    for c in &report.checks {
        println!("{c}");
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    println!(
        "{}: {passed}/{} checks passed",
        report.subcommand,
        report.checks.len()
    );
}

#[allow(clippy::too_many_arguments)]
fn write_manifest(
    dir: &Path,
    global: &GlobalArgs,
    command: Command,
    ctx_seeds: Vec<u64>,
    inputs: Vec<output::FileDigest>,
    files: &[String],
    report: &Report,
    start: Instant,
) -> Result<ExperimentManifest> {
    let mut invocation_global = global.clone();
    invocation_global.out = None;
    let manifest = ExperimentManifest {
        manifest_version: MANIFEST_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: command.name().to_string(),
        invocation: Invocation {
            global: invocation_global,
            command,
        },
        resolved: report.params.clone(),
        seeds: ctx_seeds,
        inputs,
        outputs: digests(dir, files)?,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        passed: report.passed,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(manifest)
}

/// Runs one subcommand and writes its report and manifest.
fn execute(global: GlobalArgs, command: Command) -> Result<ExperimentManifest> {
    if let Command::Replay(r) = &command {
        return replay(global, r);
    }
    let start = Instant::now();
    let dir = global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(command.name()));
    let format = global.format.unwrap_or_default();
    let mut ctx = Ctx {
        global: global.clone(),
        out: Output::new(dir, format)?,
        seeds: Vec::new(),
        inputs: Vec::new(),
    };
    let report = run_command(&mut ctx, &command)?;
    ctx.out.json("report.json", &report)?;
    print_checks(&report);
    let dir = ctx.out.dir().to_path_buf();
    let manifest = write_manifest(
        &dir,
        &global,
        command,
        ctx.seeds,
        ctx.inputs,
        ctx.out.files(),
        &report,
        start,
    )?;
    println!("wrote {}", dir.join(MANIFEST_FILE).display());
    Ok(manifest)
}

#[derive(Serialize)]
struct ReplayRow {
    path: String,
    expected: String,
    observed: String,
    matches: bool,
}

/// Re-runs a manifest's invocation into `<out>/rerun` and compares checksums.
fn replay(global: GlobalArgs, r: &ReplayArgs) -> Result<ExperimentManifest> {
    let start = Instant::now();
    let original = read_manifest(&r.manifest)?;
    let base = global
        .out
        .clone()
        .unwrap_or_else(|| r.manifest.parent().unwrap_or(Path::new(".")).join("replay"));
    let mut rerun_global = original.invocation.global.clone();
    rerun_global.out = Some(base.join("rerun"));
    let rerun = execute(rerun_global, original.invocation.command.clone())?;

    let mut rows = Vec::new();
    for o in &original.outputs {
        let observed = rerun
            .outputs
            .iter()
            .find(|x| x.path == o.path)
            .map_or(String::from("missing"), |x| x.sha256.clone());
        rows.push(ReplayRow {
            path: o.path.clone(),
            matches: observed == o.sha256,
            expected: o.sha256.clone(),
            observed,
        });
    }
    for x in &rerun.outputs {
        if !original.outputs.iter().any(|o| o.path == x.path) {
            rows.push(ReplayRow {
                path: x.path.clone(),
                expected: String::from("missing"),
                observed: x.sha256.clone(),
                matches: false,
            });
        }
    }
    let mut checks: Vec<Check> = rows
        .iter()
        .map(|row| Check::holds(format!("{}: checksum reproduced", row.path), row.matches))
        .collect();
    checks.push(Check::holds(
        format!(
            "rerun wrote {} outputs, manifest lists {}",
            rerun.outputs.len(),
            original.outputs.len()
        ),
        rerun.outputs.len() == original.outputs.len(),
    ));

    let format = global.format.unwrap_or_default();
    let mut out = Output::new(base, format)?;
    out.table("replay", &rows)?;
    let params = json!({
        "manifest": r.manifest.display().to_string(),
        "replayed_subcommand": original.subcommand,
    });
    let report = Report::new("replay", params, &rows, checks)?;
    out.json("report.json", &report)?;
    print_checks(&report);
    let dir = out.dir().to_path_buf();
    let manifest = write_manifest(
        &dir,
        &global,
        Command::Replay(r.clone()),
        original.seeds.clone(),
        vec![{
            let (sha256, bytes) = output::digest(&r.manifest)?;
            output::FileDigest {
                path: r.manifest.display().to_string(),
                sha256,
                bytes,
            }
        }],
        out.files(),
        &report,
        start,
    )?;
    println!("wrote {}", dir.join(MANIFEST_FILE).display());
    Ok(manifest)
}
