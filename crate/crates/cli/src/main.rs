//! `refinable`: regularity reports, support sets, tiles, masks and subdivision samples
//! from JSON problem files.

mod output;
mod problem;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use refinable::attractor::{omega, tile_points};
use refinable::lattice::{rational_invariant_check, spectral_moduli_with_tolerance, CLUSTER_TOLERANCE};
use refinable::maskdesign::{brute_force_minimality, design_minimal_mask, verify_lower_bound};
use refinable::subdivision::sample_refinable;
use refinable::transition::{
    coordinate_subspace_faces, regularity_with_faces, sum_rules_order, Analysis, FaceSpec, Mask, RegularityOptions,
    RegularityReport,
};
use refinable::trigpoly::DEFAULT_NULLITY_TOLERANCE;
use refinable::Error;

use output::{csv_float, render_json};
use problem::{face_specs, FacesInput, ProblemFile};

/// Malformed or inconsistent problem data.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "refinable", version, about = "Regularity of refinable functions with integer dilation matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Problem file (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Directory for the result file; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Batch over B-spline orders 0..=N.
    #[arg(long, global = true)]
    max_order: Option<usize>,
    /// Nullity tolerance (analyze) or eigenvalue clustering tolerance (spectra).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Expansion depth for tile and subdivide.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Hölder exponent in L2 and the per-order table.
    Analyze,
    /// Support set Ω of the transition operator.
    Omega,
    /// Point cloud of the attractor.
    Tile,
    /// Tile B-spline mask.
    Bspline,
    /// Subdivision samples of the refinable function.
    Subdivide,
    /// Minimal-support mask with prescribed sum rules.
    Design,
    /// Eigenvalue moduli and the rational invariant-subspace verdict.
    Spectra,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Omega => "omega",
            Command::Tile => "tile",
            Command::Bspline => "bspline",
            Command::Subdivide => "subdivide",
            Command::Design => "design",
            Command::Spectra => "spectra",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::Tile | Command::Subdivide => Format::Csv,
            _ => Format::Json,
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Invalid>().is_some() || e.downcast_ref::<serde_json::Error>().is_some() {
        return 3;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::NotInvariant { .. }) => 2,
        Some(
            Error::NotSquare { .. }
            | Error::EmptyMatrix
            | Error::SingularMatrix
            | Error::NotExpanding { .. }
            | Error::InvalidDigits(_)
            | Error::DimensionMismatch { .. }
            | Error::IrrationalConstraint(_)
            | Error::InvalidConstraint(_)
            | Error::InvalidMask(_)
            | Error::ParityDegenerate
            | Error::BoxTooLarge { .. }
            | Error::Precondition(_),
        ) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let path = cli.input.as_ref().ok_or_else(|| Invalid("--input is required".into()))?;
    let problem = ProblemFile::load(path)?;
    let format = cli.format.unwrap_or_else(|| cli.command.default_format());
    let text = match cli.command {
        Command::Analyze => cmd_analyze(cli, &problem, format)?,
        Command::Omega => cmd_omega(&problem, format)?,
        Command::Tile => cmd_tile(cli, &problem, format)?,
        Command::Bspline => cmd_bspline(&problem, format)?,
        Command::Subdivide => cmd_subdivide(cli, &problem, format)?,
        Command::Design => cmd_design(&problem, format)?,
        Command::Spectra => cmd_spectra(cli, &problem, format)?,
    };
    match &cli.output {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let ext = if format == Format::Json { "json" } else { "csv" };
            let file = dir.join(format!("{}.{ext}", cli.command.name()));
            std::fs::write(&file, text).with_context(|| format!("writing {}", file.display()))?;
            log::info!("wrote {}", file.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn options(cli: &Cli, p: &ProblemFile) -> anyhow::Result<RegularityOptions> {
    let tol = cli.tolerance.or(p.tolerance).unwrap_or(DEFAULT_NULLITY_TOLERANCE);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Invalid(format!("tolerance must be positive, got {tol}")).into());
    }
    Ok(RegularityOptions {
        max_k: p.max_k,
        nullity_tolerance: tol,
        positivity_grid: p.positivity_grid,
    })
}

/// Per-subspace analysis with coordinate faces; a face whose zero sets are not
/// invariant is reduced to the origin constraint and the analysis repeated.
fn auto_faces(m: &refinable::lattice::DilationMatrix, mask: &Mask, opts: &RegularityOptions) -> anyhow::Result<RegularityReport> {
    let Some(mut faces) = coordinate_subspace_faces(m) else {
        let mut report = Analysis::new(m, mask)?.generic(opts)?;
        report.notes.push("no coordinate faces for this matrix; generic analysis only".into());
        return Ok(report);
    };
    let mut notes = Vec::new();
    loop {
        match regularity_with_faces(m, mask, &faces, opts) {
            Err(Error::NotInvariant { label: Some(label), residual }) => {
                let face: &mut FaceSpec = faces
                    .iter_mut()
                    .find(|f| f.label == label && !f.zero_sets.is_empty())
                    .ok_or(Error::NotInvariant {
                        label: Some(label.clone()),
                        residual,
                    })?;
                face.zero_sets.clear();
                notes.push(format!(
                    "face {label}: zero sets not invariant (residual {residual:.3e}); origin constraint only"
                ));
            }
            Err(e) => return Err(e.into()),
            Ok(mut report) => {
                report.notes.extend(notes);
                return Ok(report);
            }
        }
    }
}

fn analyze_one(p: &ProblemFile, m: &refinable::lattice::DilationMatrix, order: usize, opts: &RegularityOptions) -> anyhow::Result<RegularityReport> {
    let mask = p.mask_for(m, order)?;
    match &p.faces {
        None => Ok(Analysis::new(m, &mask)?.generic(opts)?),
        Some(FacesInput::Explicit(f)) => {
            let faces = face_specs(f, m.dim())?;
            if faces.is_empty() {
                return Err(Invalid("faces list is empty".into()).into());
            }
            Ok(regularity_with_faces(m, &mask, &faces, opts)?)
        }
        Some(FacesInput::Auto(s)) if s == "auto" => auto_faces(m, &mask, opts),
        Some(FacesInput::Auto(s)) => Err(Invalid(format!("faces must be a list or \"auto\", got \"{s}\"")).into()),
    }
}

fn cmd_analyze(cli: &Cli, p: &ProblemFile, format: Format) -> anyhow::Result<String> {
    let m = p.dilation()?;
    let opts = options(cli, p)?;
    if let Some(top) = cli.max_order.or(p.max_order) {
        if p.mask.is_some() {
            return Err(Invalid("batch mode builds B-spline masks and needs digits, not a mask".into()).into());
        }
        let mut rows = Vec::new();
        for order in 0..=top {
            log::info!("order {order}");
            rows.push((order, analyze_one(p, &m, order, &opts)?));
        }
        return Ok(match format {
            Format::Json => render_json(json!({
                "rows": rows.iter().map(|(order, r)| json!({"order": order, "report": r})).collect::<Vec<_>>()
            })),
            Format::Csv => {
                let mut s = String::from("order,alpha,k_max\n");
                for (order, r) in &rows {
                    let _ = writeln!(s, "{order},{},{}", csv_float(r.alpha.unwrap_or(f64::NAN)), r.k_max);
                }
                s
            }
        });
    }
    let report = analyze_one(p, &m, p.order.unwrap_or(0), &opts)?;
    Ok(match format {
        Format::Json => render_json(serde_json::to_value(&report)?),
        Format::Csv => {
            let mut s = String::from("k,dim,rho,alpha_candidate\n");
            for row in &report.table {
                let _ = writeln!(s, "{},{},{},{}", row.k, row.dim, csv_float(row.rho), csv_float(row.alpha_candidate));
            }
            s
        }
    })
}

fn cmd_omega(p: &ProblemFile, format: Format) -> anyhow::Result<String> {
    let m = p.dilation()?;
    let mask = p.mask_for(&m, p.order.unwrap_or(0))?;
    let set = omega(&m, &mask.support())?;
    Ok(match format {
        Format::Json => render_json(json!({"size": set.len(), "points": set.points()})),
        Format::Csv => {
            let header: Vec<String> = (1..=m.dim()).map(|i| format!("k_{i}")).collect();
            let mut s = header.join(",") + "\n";
            for pt in set.points() {
                let cells: Vec<String> = pt.iter().map(i64::to_string).collect();
                let _ = writeln!(s, "{}", cells.join(","));
            }
            s
        }
    })
}

fn cmd_tile(cli: &Cli, p: &ProblemFile, format: Format) -> anyhow::Result<String> {
    let m = p.dilation()?;
    let digits = p.digit_set(&m)?;
    let depth = cli.depth.or(p.depth).unwrap_or(8);
    let cloud = tile_points(&m, &digits, depth, p.sample, cli.seed.or(p.seed).unwrap_or(0))?;
    Ok(match format {
        Format::Csv => cloud.to_csv(),
        Format::Json => render_json(serde_json::to_value(&cloud)?),
    })
}

fn mask_csv(mask: &Mask) -> String {
    let header: Vec<String> = (1..=mask.dim()).map(|i| format!("k_{i}")).collect();
    let mut s = header.join(",") + ",value\n";
    for (k, c) in mask.iter() {
        let cells: Vec<String> = k.iter().map(i64::to_string).collect();
        let _ = writeln!(s, "{},{}", cells.join(","), c);
    }
    s
}

fn cmd_bspline(p: &ProblemFile, format: Format) -> anyhow::Result<String> {
    let m = p.dilation()?;
    p.digit_set(&m)?;
    let order = p.order.unwrap_or(0);
    let mask = p.mask_for(&m, order)?;
    Ok(match format {
        Format::Json => render_json(json!({
            "order": order,
            "sum_rules_order": sum_rules_order(&mask, &m),
            "mask": mask,
        })),
        Format::Csv => mask_csv(&mask),
    })
}

fn cmd_subdivide(cli: &Cli, p: &ProblemFile, format: Format) -> anyhow::Result<String> {
    let m = p.dilation()?;
    let mask = p.mask_for(&m, p.order.unwrap_or(0))?;
    let depth = cli.depth.or(p.depth).unwrap_or(6);
    let grid = sample_refinable(&mask, &m, depth)?;
    Ok(match format {
        Format::Csv => grid.to_csv(),
        Format::Json => {
            let points: Vec<Value> = grid
                .values
                .iter()
                .map(|(k, v)| json!({"k": k, "x": grid.coordinates(k), "value": v}))
                .collect();
            render_json(json!({"level": grid.level, "points": points}))
        }
    })
}

fn cmd_design(p: &ProblemFile, format: Format) -> anyhow::Result<String> {
    let m = p.dilation()?;
    let order = p.order.ok_or_else(|| Invalid("design needs an order".into()))?;
    let mask = design_minimal_mask(&m, order, p.nodes.as_deref())?;
    let minimal = match &p.brute_force {
        Some(b) => Some(brute_force_minimality(&m, order, &b.lo, &b.hi)?),
        None => None,
    };
    Ok(match format {
        Format::Json => render_json(json!({
            "order": order,
            "support_size": mask.len(),
            "sum_rules_order": sum_rules_order(&mask, &m),
            "lower_bound_holds": verify_lower_bound(&mask, &m, order)?,
            "brute_force_minimal": minimal,
            "mask": mask,
        })),
        Format::Csv => mask_csv(&mask),
    })
}

fn cmd_spectra(cli: &Cli, p: &ProblemFile, format: Format) -> anyhow::Result<String> {
    let m = p.dilation()?;
    let s = spectral_moduli_with_tolerance(&m, cli.tolerance.unwrap_or(CLUSTER_TOLERANCE))?;
    Ok(match format {
        Format::Json => render_json(json!({
            "moduli": s.moduli,
            "multiplicities": s.multiplicities,
            "clustering_tolerance": s.clustering_tolerance,
            "invariant": rational_invariant_check(&m),
        })),
        Format::Csv => {
            let mut out = String::from("modulus,multiplicity\n");
            for (r, k) in s.moduli.iter().zip(&s.multiplicities) {
                let _ = writeln!(out, "{},{k}", csv_float(*r));
            }
            out
        }
    })
}
