//! `steering`: critical radius bounds, boundary sections and the POVM gap report from the
//! command line. Results go to stdout as JSON; bulk data goes to CSV files.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use serde_json::{json, Value};
use steering_core::boundary::{
    cross_section, symmetric_section, theta_scan, write_section, BisectOptions, SectionSpec,
};
use steering_core::canonical::canonicalize;
use steering_core::lp::{build_lp, export_lp_text, LpOptions};
use steering_core::polytope::{by_name, enumerate_facet_normals, SpherePolytope};
use steering_core::povm::{povm_report, write_report, AnnealSchedule};
use steering_core::qstate::{swap_parties, StateFamily, StateSpec};
use steering_core::radius::{tstate_analytic, tstate_gradient, Direction, RadiusSolver, Verdict};
use steering_core::{DensityMatrix, Error, Result};

const UNDECIDED_EXIT: u8 = 2;

#[derive(Parser)]
#[command(name = "steering", version, about = "Two-qubit steering: critical radius bounds and boundary sections")]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certified bounds R_in ≤ R ≤ R_out for one state.
    Radius(RadiusArgs),
    /// Classified random two-dimensional section through state space.
    Section(SectionArgs),
    /// Boundary curves in the (x·a, y·s) plane of a canonical state.
    SymmetricSection(SymmetricArgs),
    /// Steering thresholds along the θ-state family.
    ThetaScan(ThetaArgs),
    /// Analytic T-state radius and its gradient.
    Tstate(TstateArgs),
    /// Annealed four-outcome radius against the exact two-outcome radius.
    PovmTest(PovmArgs),
    /// Writes the inner linear program of a state in LP format.
    LpExport(LpExportArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct StateInput {
    /// Family shorthand: singlet, werner:w, tstate:s1,s2,s3, theta:θ,α, random:seed,rank.
    #[arg(long)]
    family: Option<String>,
    /// Bloch data as JSON: {"a": [..], "b": [..], "T": ..}.
    #[arg(long)]
    bloch: Option<String>,
    /// JSON state file with one of "density", "bloch" or "family".
    #[arg(long)]
    state: Option<PathBuf>,
}

impl StateInput {
    fn load(&self, allow_improper: bool) -> Result<DensityMatrix> {
        let spec = match (&self.family, &self.bloch, &self.state) {
            (Some(f), _, _) => StateSpec::Family(f.parse::<StateFamily>()?),
            (_, Some(b), _) => {
                let body: Value = serde_json::from_str(b)?;
                StateSpec::from_value(&json!({ "bloch": body }))?
            }
            (_, _, Some(path)) => {
                if !path.exists() {
                    return Err(Error::Validation(format!("state file {} does not exist", path.display())));
                }
                StateSpec::from_file(path)?
            }
            _ => unreachable!("clap enforces one input"),
        };
        let rho = spec.build()?;
        if rho.is_improper() && !allow_improper {
            return Err(Error::Validation("state is not positive semidefinite; pass --allow-improper".into()));
        }
        Ok(rho)
    }
}

#[derive(Args)]
struct RadiusArgs {
    #[command(flatten)]
    input: StateInput,
    #[arg(long, default_value = "icosa-92")]
    polytope: String,
    /// ab, ba or both.
    #[arg(long, default_value = "ab")]
    direction: String,
    #[arg(long)]
    allow_improper: bool,
    /// Also write the JSON result here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SectionArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    rays: usize,
    #[arg(long, default_value = "icosa-92")]
    polytope: String,
    /// Classified grid points per ray.
    #[arg(long, default_value_t = 4)]
    grid: usize,
    #[arg(long, default_value_t = BisectOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = BisectOptions::default().max_iterations)]
    max_iterations: usize,
    #[arg(long)]
    allow_improper: bool,
    /// CSV path; the sidecar JSON is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SymmetricArgs {
    /// Alice's Bloch vector a of the canonical state, as x,y,z.
    #[arg(long, value_parser = parse_vec3)]
    a: Vector3<f64>,
    /// Correlation diagonal s, as s1,s2,s3.
    #[arg(long, value_parser = parse_vec3)]
    s: Vector3<f64>,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value = "icosa-92")]
    polytope: String,
    #[arg(long)]
    allow_improper: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ThetaArgs {
    /// Comma-separated θ values in (0, π/4]; default π/16, π/8, π/4.
    #[arg(long, value_delimiter = ',')]
    thetas: Vec<f64>,
    #[arg(long, default_value = "axial-25-52")]
    polytope: String,
    #[arg(long, default_value_t = BisectOptions::default().tol)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TstateArgs {
    /// Correlation diagonal s, as s1,s2,s3.
    #[arg(long, value_parser = parse_vec3)]
    s: Vector3<f64>,
}

#[derive(Args)]
struct PovmArgs {
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    #[arg(long, default_value = "icosa-42")]
    polytope: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = AnnealSchedule::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = AnnealSchedule::default().steps_per_temperature)]
    steps: usize,
    #[arg(long, default_value_t = AnnealSchedule::default().temperatures)]
    temperatures: usize,
    #[arg(long, default_value = "povm_gap.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct LpExportArgs {
    #[command(flatten)]
    input: StateInput,
    #[arg(long, default_value = "icosa-12")]
    polytope: String,
    #[arg(long, default_value = "ab")]
    direction: String,
    #[arg(long)]
    lp_out: PathBuf,
}

fn parse_vec3(s: &str) -> std::result::Result<Vector3<f64>, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"))).collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("expected three comma-separated numbers, got {}", v.len())),
    }
}

fn directions(s: &str) -> Result<Vec<Direction>> {
    if s.eq_ignore_ascii_case("both") {
        Ok(vec![Direction::AtoB, Direction::BtoA])
    } else {
        Ok(vec![s.parse()?])
    }
}

/// Version, polytope hash and tolerance settings attached to every JSON output.
fn stamp(polytope: Option<&SpherePolytope>) -> Value {
    let lp = LpOptions::default();
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "polytope": polytope.map(|p| json!({ "name": p.name(), "sha256": p.content_hash(), "r_in": p.r_in() })),
        "tolerances": { "lp_violation_tol": lp.violation_tol, "bisect_tol": BisectOptions::default().tol },
    })
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    // A closed pipe (e.g. `| head`) is not an error.
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    if let Some(path) = out {
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn cmd_radius(args: &RadiusArgs) -> Result<u8> {
    let rho = args.input.load(args.allow_improper)?;
    let solver = RadiusSolver::by_name(&args.polytope)?;
    let mut results = Vec::new();
    let mut undecided = false;
    for d in directions(&args.direction)? {
        let b = solver.bounds(&rho, d)?;
        undecided |= b.verdict == Verdict::Undecided;
        eprintln!("{d}: R_in = {}, R_out = {}, {:?}", b.r_in, b.r_out, b.verdict);
        results.push(b);
    }
    emit(&json!({ "results": results, "meta": stamp(Some(solver.polytope())) }), args.out.as_deref())?;
    Ok(if undecided { UNDECIDED_EXIT } else { 0 })
}

fn cmd_section(args: &SectionArgs) -> Result<u8> {
    let spec = SectionSpec {
        seed: args.seed,
        rays: args.rays,
        polytope: args.polytope.clone(),
        grid: args.grid,
        bisect: BisectOptions { tol: args.tol, max_iterations: args.max_iterations },
        allow_improper: args.allow_improper,
    };
    let section = cross_section(&spec)?;
    write_section(&section, &args.out)?;
    let uncertain = section.boundary_ab.iter().chain(&section.boundary_ba).filter(|b| b.uncertain).count();
    emit(
        &json!({
            "csv": args.out,
            "sidecar": args.out.with_extension("json"),
            "points": section.points.len(),
            "uncertain_boundary_rays": uncertain,
            "meta": stamp(Some(&by_name(&args.polytope)?)),
        }),
        None,
    )?;
    Ok(0)
}

fn cmd_symmetric(args: &SymmetricArgs) -> Result<u8> {
    let solver = RadiusSolver::by_name(&args.polytope)?;
    let sec = symmetric_section(&solver, args.a, args.s, args.samples, args.allow_improper)?;
    std::fs::write(&args.out, sec.to_csv()?)?;
    emit(&json!({ "csv": args.out, "ab": sec.ab.len(), "ba": sec.ba.len(), "meta": stamp(Some(solver.polytope())) }), None)?;
    Ok(0)
}

fn cmd_theta(args: &ThetaArgs) -> Result<u8> {
    let thetas = if args.thetas.is_empty() { vec![PI / 16.0, PI / 8.0, PI / 4.0] } else { args.thetas.clone() };
    let solver = RadiusSolver::by_name(&args.polytope)?;
    let opts = BisectOptions { tol: args.tol, ..BisectOptions::default() };
    let rows = theta_scan(&solver, &thetas, &opts)?;
    emit(&json!({ "rows": rows, "meta": stamp(Some(solver.polytope())) }), args.out.as_deref())?;
    Ok(0)
}

fn cmd_tstate(args: &TstateArgs) -> Result<u8> {
    let r = tstate_analytic(&args.s)?;
    let f = tstate_gradient(&args.s)?;
    emit(&json!({ "s": args.s.as_slice(), "R": r, "F": f.as_slice(), "meta": stamp(None) }), None)?;
    Ok(0)
}

fn cmd_povm(args: &PovmArgs) -> Result<u8> {
    let p = by_name(&args.polytope)?;
    let normals = enumerate_facet_normals(&p);
    let schedule = AnnealSchedule {
        restarts: args.restarts,
        steps_per_temperature: args.steps,
        temperatures: args.temperatures,
        seed: args.seed,
        ..AnnealSchedule::default()
    };
    let rows = povm_report(&p, &normals, args.pairs, args.seed, &schedule)?;
    write_report(&rows, &args.out)?;
    let mut gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap.abs()).collect();
    gaps.sort_by(f64::total_cmp);
    let median = match gaps.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => gaps[n / 2],
        n => 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]),
    };
    emit(&json!({ "csv": args.out, "pairs": rows.len(), "median_rel_gap": median, "schedule": schedule, "meta": stamp(Some(&p)) }), None)?;
    Ok(0)
}

fn cmd_lp_export(args: &LpExportArgs) -> Result<u8> {
    let mut rho = args.input.load(false)?;
    match directions(&args.direction)?[..] {
        [Direction::AtoB] => {}
        [Direction::BtoA] => rho = swap_parties(&rho),
        _ => return Err(Error::Validation("lp-export takes a single direction".into())),
    }
    let c = canonicalize(&rho)?;
    let p = by_name(&args.polytope)?;
    let normals = enumerate_facet_normals(&p);
    let lp = build_lp(&c, &p, &normals)?;
    std::fs::write(&args.lp_out, export_lp_text(&lp))?;
    emit(
        &json!({
            "lp": args.lp_out,
            "variables": lp.variable_count(),
            "inequalities": lp.inequality_count(),
            "equalities": lp.equality_count(),
            "meta": stamp(Some(&p)),
        }),
        None,
    )?;
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("cannot set up {n} threads: {e}")))?;
    }
    match &cli.command {
        Command::Radius(a) => cmd_radius(a),
        Command::Section(a) => cmd_section(a),
        Command::SymmetricSection(a) => cmd_symmetric(a),
        Command::ThetaScan(a) => cmd_theta(a),
        Command::Tstate(a) => cmd_tstate(a),
        Command::PovmTest(a) => cmd_povm(a),
        Command::LpExport(a) => cmd_lp_export(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with status 0; usage errors exit 1, since 2 means undecided.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
