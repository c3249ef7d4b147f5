use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cornerfem::study::{
    ladder_mesh, paper_preset, parse_config_file, run_experiment_with, ExperimentConfig,
    ExperimentReport, Method,
};
use cornerfem::{Error, Result};

/// Poisson problems with rough Dirichlet data near a reentrant corner.
#[derive(Parser)]
#[command(name = "cornerfem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one convergence ladder and write `unknowns,error,eoc` as CSV.
    Solve(SolveArgs),
    /// Export the finest mesh of a ladder.
    Mesh(MeshArgs),
    /// Run the full experiment matrix.
    Tables(TablesArgs),
}

/// Settings shared by `solve` and `mesh`; every flag overrides the config file.
#[derive(Args)]
struct Common {
    /// key = value file with defaults for the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    /// interior angle at the corner in degrees
    #[arg(long)]
    omega: Option<f64>,
    /// grading parameter in (0, 1]; implies the graded ladder for `mesh`
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    method: Option<String>,
    /// l2proj or carstensen
    #[arg(long)]
    regularization: Option<String>,
    /// a in the datum r^-a sin(-a theta)
    #[arg(long)]
    datum_exponent: Option<f64>,
    /// rough (the corner datum) or smooth (sin(pi x) sin(pi y))
    #[arg(long)]
    problem: Option<String>,
    /// tolerance of the conjugate gradient solves
    #[arg(long)]
    tol: Option<f64>,
    /// cholesky (default) or cg
    #[arg(long)]
    solver: Option<String>,
    /// corner splitting depth of the volume quadrature
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct MeshArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TablesArgs {
    #[arg(long, default_value = "paper")]
    preset: String,
    #[arg(long, default_value_t = 7)]
    levels: usize,
    /// directory receiving one CSV per experiment
    #[arg(long, default_value = "tables")]
    out_dir: PathBuf,
}

fn load_config(common: &Common, extra: &[(&str, Option<String>)]) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)?;
        for (k, v) in parse_config_file(&text)? {
            config.apply(&k, &v)?;
        }
    }
    let flags = [
        ("omega", common.omega.map(|v| v.to_string())),
        ("mu", common.mu.map(|v| v.to_string())),
        ("levels", common.levels.map(|v| v.to_string())),
        ("out", common.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in flags.iter().chain(extra) {
        if let Some(v) = v {
            config.apply(k, v)?;
        }
    }
    Ok(config)
}

fn print_report(report: &ExperimentReport) {
    let c = &report.config;
    let mu = c.mu.map(|m| format!(" mu {m}")).unwrap_or_default();
    println!(
        "# omega {} method {}{} ({:.1} s)",
        c.omega_degrees, c.method, mu, report.wall_time
    );
    println!("{:>10} {:>12} {:>8}", "unknowns", "error", "eoc");
    for r in &report.rows {
        let eoc = r.eoc.map(|e| format!("{e:.3}")).unwrap_or_default();
        println!("{:>10} {:>12.4e} {:>8}", r.unknowns, r.error, eoc);
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let config = load_config(
        &args.common,
        &[
            ("method", args.method),
            ("regularization", args.regularization),
            ("problem", args.problem),
            ("datum-exponent", args.datum_exponent.map(|v| v.to_string())),
            ("tol", args.tol.map(|v| v.to_string())),
            ("depth", args.depth.map(|v| v.to_string())),
            ("solver", args.solver),
        ],
    )?;
    if config.output.is_none() {
        return Err(Error::Invalid(
            "missing --out (or out = ... in the config file)".into(),
        ));
    }
    let report = run_experiment_with(&config, |row| {
        eprintln!(
            "  {} unknowns: error {:.4e} ({:.1} s)",
            row.unknowns, row.error, row.seconds
        );
    })?;
    print_report(&report);
    Ok(())
}

fn export_mesh(args: MeshArgs) -> Result<()> {
    let mut config = load_config(&args.common, &[])?;
    if config.mu.is_some() {
        config.method = Method::Graded;
    }
    config.validate()?;
    let out = config
        .output
        .clone()
        .ok_or_else(|| Error::Invalid("missing --out (or out = ... in the config file)".into()))?;
    let mesh = ladder_mesh(&config, config.levels - 1)?;
    mesh.write_text(BufWriter::new(File::create(&out)?))?;
    println!(
        "wrote {} ({} vertices, {} triangles)",
        out.display(),
        mesh.num_vertices(),
        mesh.num_triangles()
    );
    Ok(())
}

fn tables(args: TablesArgs) -> Result<()> {
    if args.preset != "paper" {
        return Err(Error::Invalid(format!(
            "unknown preset {:?} (paper)",
            args.preset
        )));
    }
    std::fs::create_dir_all(&args.out_dir)?;
    for config in paper_preset(args.levels, Path::new(&args.out_dir)) {
        let report = run_experiment_with(&config, |_| {})?;
        print_report(&report);
        println!();
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Solve(a) => solve(a),
        Command::Mesh(a) => export_mesh(a),
        Command::Tables(a) => tables(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
