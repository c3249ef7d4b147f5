//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 2 5`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use cornerfem::dscm::{build_complement, compute_beta, dscm_run, DscmSettings};
use cornerfem::fem::{assemble_mass, assemble_stiffness, solve_poisson_dirichlet};
use cornerfem::geometry::{degrees, polar_of, Point};
use cornerfem::mesh::{refine_to_graded, GradingParams};
use cornerfem::quadrature::{LineQuadrature, VolumeQuadrature};
use cornerfem::singular::{boundary_singular_pairing, dual_hat_moments, BoundaryPairingRule};
use cornerfem::study::{
    l2_error, run_experiment, Approximation, ExperimentConfig, ExperimentReport, Method, Problem,
};
use cornerfem::trace::{boundary_mass, carstensen_trace, l2_project_trace};
use cornerfem::{Mesh, NodalField, SingularExponent, TraceField};

// Tolerances and ladder sizes.
const SANITY_EOC: (f64, f64) = (2.0, 0.1);
const SANITY_SECONDS: f64 = 30.0;
const SANITY_LEVELS: usize = 8;

const UNIFORM_LEVELS: usize = 9;
const STANDARD_270: (f64, f64) = (1.0 / 6.0, 0.03);
const DSCM_EOC: (f64, f64) = (0.5, 0.03);
const STANDARD_355_MAX: f64 = 0.03;

const GRADED_LEVELS: usize = 7;
const GRADED_TOL: f64 = 0.05;
const MU_0666_AVERAGE: (f64, f64) = (0.25, 0.06);

const EXTREME_MU: f64 = 0.014085;
const EXTREME_LEVELS: usize = 7;

const CAUCHY_LEVELS: usize = 6;
const CAUCHY_SLACK: f64 = 0.15;

const PLAUSIBLE_UNKNOWNS: f64 = 6273.0;
const PLAUSIBLE_ERROR: f64 = 0.216;
const PLAUSIBLE_FACTOR: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(value: f64, (target, tol): (f64, f64)) -> bool {
    (value - target).abs() <= tol
}

fn rough(p: Point) -> f64 {
    let (r, th) = polar_of(p);
    r.powf(-0.4999) * (-0.4999 * th).sin()
}

fn last_eoc(r: &ExperimentReport) -> f64 {
    r.rows.last().and_then(|row| row.eoc).unwrap_or(f64::NAN)
}

fn eoc_list(r: &ExperimentReport) -> String {
    let v: Vec<String> = r
        .rows
        .iter()
        .filter_map(|row| row.eoc)
        .map(|e| format!("{e:.3}"))
        .collect();
    v.join(" ")
}

fn run(config: ExperimentConfig) -> Result<ExperimentReport, String> {
    run_experiment(&config).map_err(|e| e.to_string())
}

fn sanity() -> Result<Outcome, String> {
    let start = Instant::now();
    let mut c = ExperimentConfig::new(90.0, Method::Standard, SANITY_LEVELS);
    c.problem = Problem::Smooth;
    let r = run(c)?;
    let secs = start.elapsed().as_secs_f64();
    let eoc = last_eoc(&r);
    Ok(outcome(
        within(eoc, SANITY_EOC) && secs < SANITY_SECONDS,
        format!("omega 90, smooth solution: final EOC {eoc:.3} (target 2.0 +- 0.1), {secs:.1} s"),
    ))
}

fn uniform_270() -> Result<Outcome, String> {
    let std = run(ExperimentConfig::new(
        270.0,
        Method::Standard,
        UNIFORM_LEVELS,
    ))?;
    let dscm = run(ExperimentConfig::new(270.0, Method::Dscm, UNIFORM_LEVELS))?;
    let (es, ed) = (last_eoc(&std), last_eoc(&dscm));
    let n = std.rows.last().map_or(0, |r| r.unknowns);
    Ok(outcome(
        within(es, STANDARD_270) && within(ed, DSCM_EOC),
        format!("omega 270 at {n} unknowns: standard EOC {es:.3} (0.167 +- 0.03), DSCM EOC {ed:.3} (0.5 +- 0.03)"),
    ))
}

fn graded_270() -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut pass = true;
    for (mu, target) in [(0.333, 0.5), (0.5, 1.0 / 3.0)] {
        let r = run(ExperimentConfig::graded(270.0, mu, GRADED_LEVELS))?;
        let e = last_eoc(&r);
        pass &= within(e, (target, GRADED_TOL));
        parts.push(format!("mu {mu}: EOC {e:.3} (target {target:.3})"));
    }
    let r = run(ExperimentConfig::graded(270.0, 0.666, GRADED_LEVELS))?;
    let e: Vec<f64> = r.rows.iter().filter_map(|row| row.eoc).collect();
    let avg = 0.5 * (e[e.len() - 1] + e[e.len() - 2]);
    pass &= within(avg, MU_0666_AVERAGE);
    parts.push(format!(
        "mu 0.666: two-level average {avg:.3} (0.25 +- 0.06; EOCs {})",
        eoc_list(&r)
    ));
    Ok(outcome(
        pass,
        format!("omega 270 graded: {}", parts.join("; ")),
    ))
}

fn uniform_355() -> Result<Outcome, String> {
    let std = run(ExperimentConfig::new(
        355.0,
        Method::Standard,
        UNIFORM_LEVELS,
    ))?;
    let dscm = run(ExperimentConfig::new(355.0, Method::Dscm, UNIFORM_LEVELS))?;
    let (es, ed) = (last_eoc(&std), last_eoc(&dscm));
    let n = std.rows.last().map_or(0, |r| r.unknowns);
    Ok(outcome(
        es <= STANDARD_355_MAX && within(ed, DSCM_EOC),
        format!("omega 355 at {n} unknowns: standard EOC {es:.3} (<= 0.03), DSCM EOC {ed:.3} (0.5 +- 0.03)"),
    ))
}

fn graded_355() -> Result<Outcome, String> {
    let start = Instant::now();
    let r = run(ExperimentConfig::graded(355.0, EXTREME_MU, EXTREME_LEVELS))?;
    let e: Vec<f64> = r.rows.iter().filter_map(|row| row.eoc).collect();
    let finest = &e[e.len() - 3..];
    let pass = finest.iter().all(|&v| within(v, (0.5, GRADED_TOL)));
    let n = r.rows.last().map_or(0, |r| r.unknowns);
    Ok(outcome(
        pass,
        format!(
            "omega 355 graded mu {EXTREME_MU}: finest EOCs {:.3} {:.3} {:.3} (0.5 +- 0.05), up to {n} unknowns, {:.0} s",
            finest[0],
            finest[1],
            finest[2],
            start.elapsed().as_secs_f64()
        ),
    ))
}

/// Slopes in `h` (two bisection rounds halve `h`) of the Cauchy differences
/// of `p_s^h` in `L^2` and of `beta_h`. The difference `p_s^h - p_s^{h/2}`
/// only involves the discrete parts, since the singular function cancels.
fn cauchy() -> Result<Outcome, String> {
    let omega = 1.5 * PI;
    let s = SingularExponent::new(omega).map_err(|e| e.to_string())?;
    let settings = DscmSettings::default();
    let base = Mesh::initial(omega)
        .map_err(|e| e.to_string())?
        .refine_uniform(2);
    let mut meshes = vec![base];
    for _ in 1..CAUCHY_LEVELS {
        let next = meshes.last().unwrap().refine_uniform(2);
        meshes.push(next);
    }
    let mut p = Vec::new();
    let mut beta = Vec::new();
    for m in &meshes {
        let c = build_complement(m, &s, &settings).map_err(|e| e.to_string())?;
        beta.push(compute_beta(&c));
        p.push(c.p_tilde.values().to_vec());
    }
    let mut dp = Vec::new();
    let mut db = Vec::new();
    for k in 0..CAUCHY_LEVELS - 1 {
        let fine = &meshes[k + 1];
        let coarse_on_fine = fine
            .prolongate(&meshes[k], &p[k])
            .map_err(|e| e.to_string())?;
        let d: Vec<f64> = coarse_on_fine
            .iter()
            .zip(&p[k + 1])
            .map(|(a, b)| a - b)
            .collect();
        let mass = assemble_mass(fine).map_err(|e| e.to_string())?;
        dp.push(mass.bilinear(&d, &d).sqrt());
        db.push((beta[k] - beta[k + 1]).abs());
    }
    let slope = |v: &[f64]| (v[v.len() - 2] / v[v.len() - 1]).log2();
    let (sp, sb) = (slope(&dp), slope(&db));
    let (tp, tb) = (2.0 * s.lambda - CAUCHY_SLACK, 1.0 - CAUCHY_SLACK);
    Ok(outcome(
        sp >= tp && sb >= tb,
        format!("omega 270: |p_s^h - p_s^h/2| slope {sp:.3} (>= {tp:.3}), |beta_h - beta_h/2| slope {sb:.3} (>= {tb:.2})"),
    ))
}

fn properties() -> Result<Outcome, String> {
    let err = |e: cornerfem::Error| e.to_string();
    let mut checks: Vec<(String, bool)> = Vec::new();
    let omega = degrees(355.0);
    let s = SingularExponent::new(omega).map_err(err)?;
    let uniform = Mesh::initial(omega).map_err(err)?.refine_uniform(6);
    let graded = refine_to_graded(
        &Mesh::initial(1.5 * PI).map_err(err)?,
        &GradingParams::new(0.333, 0.05),
    )
    .map_err(err)?;

    let mut row_sum: f64 = 0.0;
    let mut mass_dev: f64 = 0.0;
    for m in [&uniform, &graded] {
        let a = assemble_stiffness(m).map_err(err)?;
        for i in 0..a.dim() {
            row_sum = row_sum.max(a.row(i).map(|(_, v)| v).sum::<f64>().abs());
        }
        let area = m.total_area();
        mass_dev = mass_dev.max((assemble_mass(m).map_err(err)?.sum_all() - area).abs() / area);
    }
    checks.push((
        format!("stiffness row sums {row_sum:.1e} <= 1e-12"),
        row_sum <= 1e-12,
    ));
    checks.push((
        format!("mass sum vs area {mass_dev:.1e} <= 1e-12"),
        mass_dev <= 1e-12,
    ));

    let q = LineQuadrature::default();
    let n = uniform.boundary_vertices().len();
    let t0 = TraceField::from_values(
        (0..n)
            .map(|i| (0.37 * i as f64).sin() + 0.1 * i as f64)
            .collect(),
    );
    let eval = |p: Point| t0.eval(&uniform, p).unwrap_or(f64::NAN);
    let t1 = l2_project_trace(&eval, &uniform, &q).map_err(err)?;
    let idem = t1
        .values()
        .iter()
        .zip(t0.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push((
        format!("projection idempotence {idem:.1e} <= 1e-8"),
        idem <= 1e-8,
    ));
    // orthogonality: (u - Pi u, lambda_x) = 0 for every boundary hat, with
    // the moments of the rough datum computed by the same graded rule
    let pu = l2_project_trace(&rough, &uniform, &q).map_err(err)?;
    let (moments, _) = cornerfem::trace::boundary_moments(&uniform, &rough, &q);
    let mp = boundary_mass(&uniform).mul_vec(pu.values());
    let scale = moments.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let orth = moments
        .iter()
        .zip(&mp)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;
    checks.push((
        format!("projection orthogonality {orth:.1e} <= 1e-8"),
        orth <= 1e-8,
    ));

    // a 0/1 datum: quasi-interpolated values must stay in [0, 1]
    let step = |p: Point| if p[0] + 0.3 * p[1] > 0.2 { 1.0 } else { 0.0 };
    let c = carstensen_trace(&step, &uniform, &q);
    let in_range = c.values().iter().all(|&v| (0.0..=1.0).contains(&v));
    checks.push((
        "quasi-interpolant range preservation (exact)".into(),
        in_range,
    ));

    let rule = BoundaryPairingRule {
        radius: 0.1,
        mu: s.recommended_boundary_grading(),
        h: 1e-4,
    };
    let flux = boundary_singular_pairing(&|_| 1.0, &s, &rule).map_err(err)?;
    checks.push((
        format!("flux of r^lambda sin: {flux:.1e} within 1e-6"),
        flux.abs() <= 1e-6,
    ));

    let quad = VolumeQuadrature::default();
    let a = dual_hat_moments(&uniform, &s, &quad).map_err(err)?;
    let b = dual_hat_moments(&uniform, &s, &VolumeQuadrature::with_depth(2 * quad.depth))
        .map_err(err)?;
    let total: f64 = a.iter().map(|v| v.abs()).sum();
    let change = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / total;
    checks.push((
        format!("singular moments under doubled depth {change:.1e} <= 1e-6"),
        change <= 1e-6,
    ));

    let m270 = Mesh::initial(1.5 * PI).map_err(err)?.refine_uniform(6);
    let s270 = SingularExponent::new(1.5 * PI).map_err(err)?;
    let run = dscm_run(&m270, &rough, None, &s270, &DscmSettings::default()).map_err(err)?;
    let sol = &run.solution;
    checks.push((
        "delta_h == alpha_h - gamma_h".into(),
        sol.delta == sol.alpha - sol.gamma,
    ));

    let affine = |p: Point| 0.5 - 1.25 * p[0] + 2.0 * p[1];
    let y = solve_poisson_dirichlet(
        &graded,
        None,
        &TraceField::interpolate(&graded, affine),
        1e-12,
    )
    .map_err(err)?;
    let exact = NodalField::interpolate(&graded, affine);
    let nodal = y
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let l2 = l2_error(&graded, Approximation::Fem(&y), &affine, &quad).map_err(err)?;
    checks.push((
        format!("affine reproduction: nodal {nodal:.1e}, L2 {l2:.1e} <= 1e-12"),
        nodal <= 1e-12 && l2 <= 1e-12,
    ));

    let pass = checks.iter().all(|c| c.1);
    let detail: Vec<String> = checks
        .iter()
        .map(|(d, ok)| format!("{}{}", if *ok { "" } else { "FAILED " }, d))
        .collect();
    Ok(outcome(pass, detail.join("; ")))
}

fn plausibility() -> Result<Outcome, String> {
    let r = run(ExperimentConfig::new(270.0, Method::Dscm, 6))?;
    // the level whose unknown count is closest to the reference on a log scale
    let row = r
        .rows
        .iter()
        .min_by(|a, b| {
            let da = (a.unknowns as f64 / PLAUSIBLE_UNKNOWNS).ln().abs();
            let db = (b.unknowns as f64 / PLAUSIBLE_UNKNOWNS).ln().abs();
            da.total_cmp(&db)
        })
        .ok_or("empty report")?;
    let ratio = row.error / PLAUSIBLE_ERROR;
    Ok(outcome(
        ratio <= PLAUSIBLE_FACTOR && ratio >= 1.0 / PLAUSIBLE_FACTOR,
        format!(
            "omega 270 DSCM at {} unknowns: error {:.3} vs 0.216 (ratio {ratio:.2}, within a factor 2)",
            row.unknowns, row.error
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, fn() -> Result<Outcome, String>); 8] = [
        (1, "sanity, smooth convex problem", sanity),
        (2, "omega 270 quasi-uniform rates", uniform_270),
        (3, "omega 270 graded rates", graded_270),
        (4, "omega 355 quasi-uniform rates", uniform_355),
        (5, "omega 355 extreme grading", graded_355),
        (6, "DSCM internal convergence", cauchy),
        (7, "property suites", properties),
        (8, "absolute error plausibility", plausibility),
    ];
    // numeric arguments select criteria; libtest flags passed by cargo are ignored
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
