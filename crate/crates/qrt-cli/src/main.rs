//! Command-line front end for the closed-form QRT orbit pipeline.
//!
//! `qrt solve problem.json` parses a problem file, runs the full pipeline,
//! writes a parameter report and the orbit table, prints a verification
//! summary on stdout, and exits 0 only when every gate passes (2 when the
//! fixed curve is rejected as singular, 1 for any other failure, with the
//! failing stage named on stderr).  `qrt paths problem.json` writes the
//! integration paths and branch points as CSV for external plotting.
//!
//! All artifacts are deterministic: the same problem file and seed produce
//! byte-identical output.  Numbers in the machine-readable artifacts use
//! shortest round-trip formatting; the human-readable report rounds to six
//! significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qrt_elliptic::pencil;
use qrt_elliptic::proj::ProjCoord;
use qrt_elliptic::qrt::QrtMap;
use qrt_elliptic::solver::{self, SolutionParams, SolverConfig, VerificationReport};
use qrt_elliptic::{C64, ProjPoint};

#[derive(Parser)]
#[command(
    name = "qrt",
    about = "Closed-form orbits of QRT maps on smooth invariant biquadratic curves",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a problem file, write the parameter report and orbit table,
    /// and verify the closed form against direct iteration.
    Solve(RunArgs),
    /// Solve a problem file and write only the integration-path dump.
    Paths(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Problem file (JSON: matrices `a`, `b`, initial point `x0`/`y0`,
    /// optional config overrides).
    problem: PathBuf,
    /// Orbit length for the forward comparison (overrides the file).
    #[arg(long)]
    steps: Option<usize>,
    /// Chordal tolerance for orbit agreement (overrides the file).
    #[arg(long)]
    tol_orbit: Option<f64>,
    /// Tolerance for intermediate consistency residuals (overrides the file).
    #[arg(long)]
    tol_intermediate: Option<f64>,
    /// Seed for the deterministic point choices (overrides the file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Previously written orbit table; the maximum chordal distance between
    /// the closed-form columns of that table and this run is reported and
    /// gated against the orbit tolerance.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Also write the integration-path dump (implied by the `paths`
    /// subcommand).
    #[arg(long)]
    paths: bool,
    /// Parameter-report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    report: ReportFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

// ---------------------------------------------------------------------------
// Problem file.

/// On-disk problem description.  Complex numbers are `[re, im]` pairs,
/// matrices are 3x3 nested arrays; the optional keys override the solver
/// defaults and are themselves overridden by command-line flags.
#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    a: [[[f64; 2]; 3]; 3],
    b: [[[f64; 2]; 3]; 3],
    x0: [f64; 2],
    y0: [f64; 2],
    seed: Option<u64>,
    n_max: Option<usize>,
    tol_orbit: Option<f64>,
    tol_intermediate: Option<f64>,
    /// Integration base point on the normalized curve, `[[re,im],[re,im]]`.
    base_point: Option<[[f64; 2]; 2]>,
}

fn to_c(p: [f64; 2]) -> C64 {
    Complex64::new(p[0], p[1])
}

fn to_matrix(m: &[[[f64; 2]; 3]; 3]) -> [[C64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| to_c(m[i][j])))
}

struct Problem {
    map: QrtMap,
    p0: ProjPoint,
    config: SolverConfig,
}

fn load_problem(args: &RunArgs) -> Result<Problem, String> {
    let text = fs::read_to_string(&args.problem)
        .map_err(|e| format!("cannot read {}: {e}", args.problem.display()))?;
    let file: ProblemFile = serde_json::from_str(&text).map_err(|e| {
        format!(
            "{}:{}:{}: {e}",
            args.problem.display(),
            e.line(),
            e.column()
        )
    })?;
    let defaults = SolverConfig::default();
    let config = SolverConfig {
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        tol_orbit: args
            .tol_orbit
            .or(file.tol_orbit)
            .unwrap_or(defaults.tol_orbit),
        tol_intermediate: args
            .tol_intermediate
            .or(file.tol_intermediate)
            .unwrap_or(defaults.tol_intermediate),
        n_max: args.steps.or(file.n_max).unwrap_or(defaults.n_max),
        base_point: file.base_point.map(|bp| (to_c(bp[0]), to_c(bp[1]))),
    };
    Ok(Problem {
        map: QrtMap {
            a: to_matrix(&file.a),
            b: to_matrix(&file.b),
        },
        p0: ProjPoint::finite(to_c(file.x0), to_c(file.y0)),
        config,
    })
}

// ---------------------------------------------------------------------------
// Formatting.

/// Six significant digits, plain decimal in a readable range, scientific
/// outside it, trailing zeros trimmed.
fn g6(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v }; // normalize -0
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    let mut s = if (1e-4..1e7).contains(&a) {
        let digits = a.log10().floor() as i32;
        let dec = (5 - digits).max(0) as usize;
        format!("{v:.dec$}")
    } else {
        format!("{v:.5e}")
    };
    if let Some(dot) = s.find('.') {
        let mantissa_end = s[dot..].find('e').map_or(s.len(), |k| dot + k);
        let mut keep = mantissa_end;
        while keep > dot + 1 && s.as_bytes()[keep - 1] == b'0' {
            keep -= 1;
        }
        if keep == dot + 1 {
            keep = dot;
        }
        s.replace_range(keep..mantissa_end, "");
    }
    s
}

/// Human complex format: `a+bi` with an explicit sign on the imaginary part.
fn c6(z: C64) -> String {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    let sign = if im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", g6(z.re), sign, g6(im.abs()))
}

/// CSV cell pair for one projective coordinate; infinity becomes `inf,0`.
fn csv_coord(c: &ProjCoord) -> String {
    match c.value() {
        Some(v) => format!("{},{}", v.re, v.im),
        None => "inf,0".into(),
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

// ---------------------------------------------------------------------------
// Machine-readable report.

#[derive(serde::Serialize)]
struct LatticeReport {
    w1: [f64; 2],
    w2: [f64; 2],
    tau: [f64; 2],
    eta1: [f64; 2],
    eta2: [f64; 2],
    generators_exchanged: bool,
}

#[derive(serde::Serialize)]
struct EmbeddingReport {
    e1: [f64; 2],
    e2: [f64; 2],
    hx: [f64; 2],
    hy: [f64; 2],
    c1: [f64; 2],
    c2: [f64; 2],
}

#[derive(serde::Serialize)]
struct ResidualReport {
    c1_cross_check: f64,
    c2_cross_check: f64,
    chain: f64,
    invariants: f64,
}

#[derive(serde::Serialize)]
struct PathSummaryReport {
    label: String,
    waypoints: usize,
    sheet_fixed: bool,
}

#[derive(serde::Serialize)]
struct ConfigReport {
    seed: u64,
    steps: usize,
    tol_orbit: f64,
    tol_intermediate: f64,
}

#[derive(serde::Serialize)]
struct ParamsReport {
    problem: String,
    config: ConfigReport,
    k0: [f64; 2],
    pencil_forms_exchanged: bool,
    curve_discriminant_abs: f64,
    branch_points: Vec<[f64; 2]>,
    lattice: LatticeReport,
    base_point: [[f64; 2]; 2],
    embedding: EmbeddingReport,
    u0: [f64; 2],
    step: [f64; 2],
    step_negated: bool,
    residuals: ResidualReport,
    paths: Vec<PathSummaryReport>,
}

#[derive(serde::Serialize, Clone, Copy)]
struct VerificationSummary {
    forward_rows: usize,
    backward_rows: usize,
    max_chordal: f64,
    n0_chordal: f64,
    k_residual: f64,
    cross_orbit: Option<f64>,
    tol_orbit: f64,
    passed: bool,
}

#[derive(serde::Serialize)]
struct FullReport {
    params: ParamsReport,
    verification: VerificationSummary,
}

fn params_report(problem: &Path, params: &SolutionParams) -> ParamsReport {
    let delta_abs = pencil::smoothness_gate(&params.curve)
        .map(|g| g.delta_abs)
        .unwrap_or(f64::NAN);
    let lat = params.lattice();
    ParamsReport {
        problem: problem.display().to_string(),
        config: ConfigReport {
            seed: params.config.seed,
            steps: params.config.n_max,
            tol_orbit: params.config.tol_orbit,
            tol_intermediate: params.config.tol_intermediate,
        },
        k0: pair(params.k0),
        pencil_forms_exchanged: params.swapped_pencil,
        curve_discriminant_abs: delta_abs,
        branch_points: params.branch_points.iter().map(|q| pair(*q)).collect(),
        lattice: LatticeReport {
            w1: pair(lat.w1),
            w2: pair(lat.w2),
            tau: pair(lat.tau),
            eta1: pair(lat.eta1),
            eta2: pair(lat.eta2),
            generators_exchanged: lat.swapped,
        },
        base_point: [pair(params.base_point.0), pair(params.base_point.1)],
        embedding: EmbeddingReport {
            e1: pair(params.embedding.e1),
            e2: pair(params.embedding.e2),
            hx: pair(params.embedding.hx),
            hy: pair(params.embedding.hy),
            c1: pair(params.embedding.c1),
            c2: pair(params.embedding.c2),
        },
        u0: pair(params.u0),
        step: pair(params.step),
        step_negated: params.step_negated,
        residuals: ResidualReport {
            c1_cross_check: params.c1_residual,
            c2_cross_check: params.c2_residual,
            chain: params.chain_residual,
            invariants: params.invariant_residual,
        },
        paths: params
            .paths
            .iter()
            .map(|p| PathSummaryReport {
                label: p.label.clone(),
                waypoints: p.waypoints.len(),
                sheet_fixed: p.sheet_fixed,
            })
            .collect(),
    }
}

fn params_text(problem: &Path, params: &SolutionParams) -> String {
    let r = params_report(problem, params);
    let lat = params.lattice();
    let mut s = String::new();
    let _ = writeln!(s, "problem: {}", r.problem);
    let _ = writeln!(
        s,
        "config: seed {}, steps {}, tol-orbit {}, tol-intermediate {}",
        r.config.seed,
        r.config.steps,
        g6(r.config.tol_orbit),
        g6(r.config.tol_intermediate)
    );
    let _ = writeln!(s, "invariant K0 = {}", c6(params.k0));
    let _ = writeln!(s, "pencil forms exchanged: {}", yn(params.swapped_pencil));
    let _ = writeln!(s, "curve |Delta| = {}", g6(r.curve_discriminant_abs));
    let _ = writeln!(s, "branch points:");
    for (i, q) in params.branch_points.iter().enumerate() {
        let _ = writeln!(s, "  q{} = {}", i + 1, c6(*q));
    }
    let _ = writeln!(
        s,
        "periods: w1 = {}, w2 = {}, tau = {}, generators exchanged: {}",
        c6(lat.w1),
        c6(lat.w2),
        c6(lat.tau),
        yn(lat.swapped)
    );
    let _ = writeln!(
        s,
        "quasi-period constants: eta1 = {}, eta2 = {}",
        c6(lat.eta1),
        c6(lat.eta2)
    );
    let _ = writeln!(
        s,
        "base point: x = {}, y = {}",
        c6(params.base_point.0),
        c6(params.base_point.1)
    );
    let e = &params.embedding;
    let _ = writeln!(
        s,
        "torus positions: e2 = {}, e1 = {}, hx = {}, hy = {}",
        c6(e.e2),
        c6(e.e1),
        c6(e.hx),
        c6(e.hy)
    );
    let _ = writeln!(s, "coefficients: c1 = {}, c2 = {}", c6(e.c1), c6(e.c2));
    let _ = writeln!(
        s,
        "initial position u0 = {}, step = {}, step negated by direction check: {}",
        c6(params.u0),
        c6(params.step),
        yn(params.step_negated)
    );
    let _ = writeln!(
        s,
        "residuals: c1 cross-check {}, c2 cross-check {}, chain {}, invariants {}",
        g6(params.c1_residual),
        g6(params.c2_residual),
        g6(params.chain_residual),
        g6(params.invariant_residual)
    );
    let fixes = params.paths.iter().filter(|p| p.sheet_fixed).count();
    let _ = writeln!(
        s,
        "integration paths: {} recorded, {} with a sheet-correcting loop",
        params.paths.len(),
        fixes
    );
    s
}

fn yn(b: bool) -> &'static str {
    if b { "yes" } else { "no" }
}

// ---------------------------------------------------------------------------
// Artifacts.

fn orbit_csv(report: &VerificationReport) -> String {
    let mut s = String::from(
        "n,x_closed_re,x_closed_im,y_closed_re,y_closed_im,\
         x_iter_re,x_iter_im,y_iter_re,y_iter_im,chordal\n",
    );
    let rows = report
        .backward
        .iter()
        .rev()
        .chain(report.rows.iter());
    for row in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            row.n,
            csv_coord(&row.closed.x),
            csv_coord(&row.closed.y),
            csv_coord(&row.iterated.x),
            csv_coord(&row.iterated.y),
            row.chordal
        );
    }
    s
}

/// The eight canonical integration paths: two period loops and the six
/// marked-point integrals (the initial-point integral is reported in the
/// params file but is not part of the plot dump).
fn dump_paths(out: &Path, params: &SolutionParams) -> Result<(), String> {
    let dir = out.join("paths");
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let mut written = 0;
    for record in &params.paths {
        if record.label == "abel-initial" {
            continue;
        }
        let name: String = record
            .label
            .chars()
            .map(|ch| match ch {
                '(' | ')' => '\0',
                ',' => '-',
                other => other,
            })
            .filter(|ch| *ch != '\0')
            .collect();
        let mut s = String::from("segment_index,x_re,x_im\n");
        for (i, w) in record.waypoints.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{}", w.re, w.im);
        }
        let file = dir.join(format!("{name}.csv"));
        fs::write(&file, s).map_err(|e| format!("cannot write {}: {e}", file.display()))?;
        written += 1;
    }
    let mut s = String::from("index,x_re,x_im\n");
    for (i, q) in params.branch_points.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{}", q.re, q.im);
    }
    let file = dir.join("branch-points.csv");
    fs::write(&file, s).map_err(|e| format!("cannot write {}: {e}", file.display()))?;
    println!(
        "wrote {written} path files and branch-points.csv to {}",
        dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Orbit comparison across runs.

/// Parse the closed-form columns of a previously written orbit table into
/// `(n, point)` pairs.
fn read_orbit(path: &Path) -> Result<Vec<(i64, ProjPoint)>, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(format!(
                "{}:{}: expected 10 fields, found {}",
                path.display(),
                lineno + 1,
                fields.len()
            ));
        }
        let num = |k: usize| -> Result<f64, String> {
            fields[k]
                .parse::<f64>()
                .map_err(|e| format!("{}:{}: field {}: {e}", path.display(), lineno + 1, k + 1))
        };
        let n = fields[0]
            .parse::<i64>()
            .map_err(|e| format!("{}:{}: field 1: {e}", path.display(), lineno + 1))?;
        let coord = |re: f64, im: f64| {
            if re.is_infinite() {
                ProjCoord::infinity()
            } else {
                ProjCoord::finite(Complex64::new(re, im))
            }
        };
        let x = coord(num(1)?, num(2)?);
        let y = coord(num(3)?, num(4)?);
        rows.push((n, ProjPoint::new(x, y)));
    }
    Ok(rows)
}

fn cross_orbit_distance(
    report: &VerificationReport,
    other: &[(i64, ProjPoint)],
) -> Result<f64, String> {
    let mut worst = 0.0f64;
    let mut matched = 0;
    for row in report.backward.iter().chain(report.rows.iter()) {
        if let Some((_, p)) = other.iter().find(|(n, _)| *n == row.n) {
            worst = worst.max(row.closed.chordal(p));
            matched += 1;
        }
    }
    if matched == 0 {
        return Err("compare table shares no n values with this run".into());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------

fn run(cmd: &Cmd) -> ExitCode {
    let (args, paths_only) = match cmd {
        Cmd::Solve(a) => (a, false),
        Cmd::Paths(a) => (a, true),
    };
    match try_run(args, paths_only) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn try_run(args: &RunArgs, paths_only: bool) -> Result<ExitCode, String> {
    let problem = load_problem(args)?;
    let params = match solver::solve(&problem.map, &problem.p0, &problem.config) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_curve_not_smooth() { 2 } else { 1 };
            return Ok(ExitCode::from(code));
        }
    };
    fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;

    if paths_only {
        dump_paths(&args.out, &params)?;
        return Ok(ExitCode::SUCCESS);
    }
    if args.paths {
        dump_paths(&args.out, &params)?;
    }

    // Verification against direct iteration.
    let report = solver::verify(&params, &params.map, &problem.p0, params.config.n_max);

    // Cross-orbit comparison, when requested.
    let cross = match &args.compare {
        Some(path) => Some(cross_orbit_distance(&report, &read_orbit(path)?)?),
        None => None,
    };

    // Artifacts.
    let orbit_path = args.out.join("orbit.csv");
    fs::write(&orbit_path, orbit_csv(&report))
        .map_err(|e| format!("cannot write {}: {e}", orbit_path.display()))?;
    let summary = VerificationSummary {
        forward_rows: report.rows.len(),
        backward_rows: report.backward.len(),
        max_chordal: report.max_chordal,
        n0_chordal: report.n0_chordal,
        k_residual: report.k_residual,
        cross_orbit: cross,
        tol_orbit: report.tol_orbit,
        passed: report.passed && cross.is_none_or(|d| d < report.tol_orbit),
    };
    match args.report {
        ReportFormat::Text => {
            let path = args.out.join("params.txt");
            fs::write(&path, params_text(&args.problem, &params))
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
        ReportFormat::Json => {
            let full = FullReport {
                params: params_report(&args.problem, &params),
                verification: summary,
            };
            let path = args.out.join("params.json");
            let mut text = serde_json::to_string_pretty(&full)
                .map_err(|e| format!("cannot serialize report: {e}"))?;
            text.push('\n');
            fs::write(&path, text)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
    }

    // Human summary on stdout.
    print_summary(&params, &report, &summary, args);

    if let Some(err) = &report.iteration_error {
        eprintln!("direct iteration failed: {err}");
    }
    if summary.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed (see summary above)");
        Ok(ExitCode::from(1))
    }
}

fn print_summary(
    params: &SolutionParams,
    report: &VerificationReport,
    summary: &VerificationSummary,
    args: &RunArgs,
) {
    let lat = params.lattice();
    println!("invariant K0 = {}", c6(params.k0));
    println!(
        "lattice: w1 = {}, w2 = {}, tau = {}",
        c6(lat.w1),
        c6(lat.w2),
        c6(lat.tau)
    );
    println!(
        "translation: u0 = {}, step = {}",
        c6(params.u0),
        c6(params.step)
    );
    let back_worst = report
        .backward
        .iter()
        .map(|r| r.chordal)
        .fold(0.0f64, f64::max);
    println!(
        "orbit: {} forward rows (max chordal {}), {} backward rows (max chordal {}), tolerance {}",
        summary.forward_rows,
        g6(summary.max_chordal),
        summary.backward_rows,
        g6(back_worst),
        g6(summary.tol_orbit)
    );
    println!(
        "reproduction at n = 0: {}; invariant drift over 100 steps: {}",
        g6(summary.n0_chordal),
        g6(summary.k_residual)
    );
    println!(
        "consistency residuals: c1 {}, c2 {}, chain {}, invariants {}",
        g6(report.c1_residual),
        g6(report.c2_residual),
        g6(report.chain_residual),
        g6(report.invariant_residual)
    );
    if let (Some(d), Some(file)) = (summary.cross_orbit, &args.compare) {
        println!(
            "cross-orbit distance vs {}: {} (tolerance {})",
            file.display(),
            g6(d),
            g6(summary.tol_orbit)
        );
    }
    println!(
        "verdict: {}",
        if summary.passed { "PASS" } else { "FAIL" }
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    run(&cli.cmd)
}
