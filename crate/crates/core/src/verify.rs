//! Acceptance checks. Each check recomputes its quantity from the library or
//! from the artifacts on disk and reports one pass/fail line.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{pohozaev, FluxProfile, PohozaevReport};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fem::{assemble, transplant};
use crate::geometry::{certify, MeridianDomain};
use crate::io::{Manifest, RunDir, MANIFEST};
use crate::mesh::mesh_meridian;
use crate::pipeline::{
    analyze_fields, load_step_fields, radial_seeds, radial_setup, reload_domain, run_solve, AnalysisSummary, RadialSetup,
    RunStatus, ScalingAudit,
};
use crate::radial::barrier::{delta_max, BarrierParams};
use crate::radial::shooting::{flat_hat, flat_hat_profile, ShootOptions};
use crate::radial::ProblemParams;
use crate::solver::{newton_solve, Merit, SolveConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub measured: String,
}

impl CriterionResult {
    fn new(id: u32, name: &str, pass: bool, measured: String) -> Self {
        Self {
            id,
            name: name.to_string(),
            pass,
            measured,
        }
    }

    fn error(id: u32, name: &str, e: &Error) -> Self {
        Self::new(id, name, false, format!("error: {e}"))
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.measured)
    }
}

fn or_fail(id: u32, name: &str, r: Result<CriterionResult>) -> CriterionResult {
    r.unwrap_or_else(|e| CriterionResult::error(id, name, &e))
}

/// `max |½w′² - F(w)|` over the exported profile against `1e-8·F(δ/2)`.
pub fn first_integral(b: &BarrierParams, resolution: usize) -> Result<CriterionResult> {
    let prof = b.profile_w(resolution)?;
    let scale = b.potential(0.5 * b.delta);
    let worst = prof
        .values
        .iter()
        .zip(&prof.derivs)
        .map(|(&w, &d)| (0.5 * d * d - b.potential(w)).abs())
        .fold(0.0, f64::max);
    Ok(CriterionResult::new(
        1,
        "first integral",
        worst <= 1e-8 * scale,
        format!("max |w'^2/2 - F(w)| = {worst:.3e}, bound {:.3e}", 1e-8 * scale),
    ))
}

pub fn endpoints(b: &BarrierParams) -> Result<CriterionResult> {
    let w0 = b.w(0.0)?;
    let wc = b.w(b.edge_constant)?;
    let dc = b.w_prime_of_value(wc);
    let e0 = (w0 - b.delta).abs();
    let ec = wc.abs() + dc.abs();
    Ok(CriterionResult::new(
        2,
        "endpoint exactness",
        e0 <= 1e-10 && ec <= 1e-9,
        format!("|w(0) - delta| = {e0:.3e}, |w(C)| + |w'(C)| = {ec:.3e}"),
    ))
}

/// Max second-difference residual of `w″ = w^α - λ₀w^β` over `0 < r ≤ C/2`
/// at sampling step `k`.
pub fn ode_residual(b: &BarrierParams, k: f64) -> Result<f64> {
    let half = 0.5 * b.edge_constant;
    let mut worst = 0.0f64;
    let mut j = 1;
    let mut prev = b.w(0.0)?;
    let mut cur = b.w(k)?;
    while (j as f64 + 1.0) * k <= half * (1.0 + 1e-12) {
        let next = b.w((j + 1) as f64 * k)?;
        let d2 = (next - 2.0 * cur + prev) / (k * k);
        let res = d2 - (cur.powf(b.alpha) - b.lambda0 * cur.powf(b.beta));
        worst = worst.max(res.abs());
        prev = cur;
        cur = next;
        j += 1;
    }
    Ok(worst)
}

pub fn ode_residual_order(b: &BarrierParams) -> Result<CriterionResult> {
    let ks: Vec<f64> = (0..4).map(|i| b.edge_constant / (64.0 * 2f64.powi(i))).collect();
    let res = ks.iter().map(|&k| ode_residual(b, k)).collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    Ok(CriterionResult::new(
        3,
        "ODE residual order",
        pass,
        format!(
            "residuals [{}], halving ratios [{}]",
            res.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", "),
            ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

pub fn supersolution_sign(b: &BarrierParams) -> Result<CriterionResult> {
    let n = 1000;
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let r = b.l0 + (b.l1 - b.l0) * (i as f64 + 0.5) / n as f64;
        worst = worst.min(b.supersolution_residual(r)?);
    }
    Ok(CriterionResult::new(
        4,
        "supersolution sign",
        worst >= -1e-10,
        format!("min residual over {n} tail radii = {worst:.3e}"),
    ))
}

pub fn one_dimensional_oracle(alpha: f64, beta: f64, lambdas: &[f64]) -> Result<CriterionResult> {
    let mut worst = 0.0f64;
    for &lam in lambdas {
        let p = ProblemParams::new(1, alpha, beta, lam)?;
        let fh = flat_hat(&p, &ShootOptions::default())?;
        worst = worst.max((fh.center_value - delta_max(alpha, beta, lam)).abs());
    }
    Ok(CriterionResult::new(
        5,
        "N=1 shooting oracle",
        worst <= 1e-8,
        format!("max |center - s*| = {worst:.3e} over lambda {lambdas:?}"),
    ))
}

pub fn scaling_law(p: &ProblemParams, lambda_lo: f64) -> Result<CriterionResult> {
    let a = ScalingAudit::run(p, lambda_lo, 5)?;
    Ok(CriterionResult::new(
        6,
        "scaling law",
        a.relative_error <= 5e-3 && a.strictly_decreasing,
        format!(
            "slope {:.6} vs {:.6} (rel {:.2e}), decreasing {}",
            a.fitted_slope, a.expected_slope, a.relative_error, a.strictly_decreasing
        ),
    ))
}

pub fn lambda_star_round_trip(r: &RadialSetup) -> Result<CriterionResult> {
    let fh = flat_hat(&r.params.with_lambda(r.lambda_star), &ShootOptions::default())?;
    let err = (fh.radius - 1.0).abs();
    Ok(CriterionResult::new(
        7,
        "lambda* round trip",
        err <= 0.01,
        format!("lambda* = {:.10}, R = {:.8}", r.lambda_star, fh.radius),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub h: f64,
    pub vertices: usize,
    pub rel_max_error: f64,
    pub l2_error: f64,
}

/// Solves on the unit ball at `λ*(1)` from the transplanted flat hat and
/// compares with that same radial profile.
pub fn fem_oracle_rows(r: &RadialSetup, cfg: &SolveConfig, hs: &[f64]) -> Result<Vec<OracleRow>> {
    let p = r.params.with_lambda(r.lambda_star);
    let (_, prof) = flat_hat_profile(&p, &ShootOptions::default())?;
    let d = MeridianDomain::ball(1.0)?;
    hs.iter()
        .map(|&h| {
            let m = mesh_meridian(&d, h)?;
            let a = assemble(&m, p.dim);
            let exact = transplant(&m, &prof, 0.0);
            let rec = newton_solve(&p, &exact, cfg, &a, "flat")?;
            let diff: Vec<f64> = rec.field.iter().zip(&exact).map(|(u, e)| u - e).collect();
            let emax = diff.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let umax = exact.iter().copied().fold(0.0, f64::max);
            Ok(OracleRow {
                h,
                vertices: m.n_vertices(),
                rel_max_error: emax / umax,
                l2_error: a.l2_norm(&diff),
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// The flat hat at `λ*` is a degenerate solution; the residual merit keeps
/// Newton from sliding off it.
pub fn oracle_solve_config(cfg: &SolveConfig) -> SolveConfig {
    SolveConfig {
        merit: Merit::Residual,
        ..cfg.clone()
    }
}

pub fn fem_radial_oracle(r: &RadialSetup, cfg: &SolveConfig) -> Result<CriterionResult> {
    let rows = fem_oracle_rows(r, &oracle_solve_config(cfg), &[0.04, 0.03, 0.02])?;
    let hs: Vec<f64> = rows.iter().map(|x| x.h).collect();
    let es: Vec<f64> = rows.iter().map(|x| x.l2_error).collect();
    let order = fitted_order(&hs, &es);
    let fine = rows.last().expect("three meshes").rel_max_error;
    let detail: Vec<String> = rows
        .iter()
        .map(|x| format!("h={} relmax={:.3e} L2={:.3e}", x.h, x.rel_max_error, x.l2_error))
        .collect();
    Ok(CriterionResult::new(
        8,
        "FEM vs radial oracle",
        fine <= 0.02 && order >= 1.5,
        format!("{}; L2 order {order:.3}", detail.join(", ")),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub h: f64,
    pub lambda: f64,
    pub report: PohozaevReport,
    pub relative: f64,
}

/// Solves from the radial seeds on `d` at mesh size `h` and evaluates the
/// Pohozaev balance.
pub fn balance_at(d: &MeridianDomain, p: &ProblemParams, h: f64, cfg: &SolveConfig) -> Result<BalanceRow> {
    let m = mesh_meridian(d, h)?;
    let a = assemble(&m, p.dim);
    let mut last = None;
    for (id, g) in radial_seeds(&m, p) {
        match newton_solve(p, &g, cfg, &a, &id) {
            Ok(rec) if rec.is_nonzero(cfg.nonzero_threshold) => {
                let f = FluxProfile::recover(&m, d, &a, p, &rec.field);
                let report = pohozaev(&a, d, p, &rec.field, &f);
                return Ok(BalanceRow {
                    h,
                    lambda: p.lambda,
                    report,
                    relative: report.balance_residual / report.p_value.abs(),
                });
            }
            Ok(_) => last = Some(Error::NoNonzeroSolution(1)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or(Error::NoNonzeroSolution(0)))
}

fn balance_ok(coarse: &BalanceRow, fine: &BalanceRow) -> bool {
    fine.relative <= 0.05
        && fine.relative < coarse.relative
        && coarse.report.boundary_integral > 0.0
        && fine.report.boundary_integral > 0.0
}

fn balance_text(label: &str, rows: [&BalanceRow; 2]) -> String {
    let parts: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "h={} P={:.4e} B={:.4e} rel={:.4}",
                r.h, r.report.p_value, r.report.boundary_integral, r.relative
            )
        })
        .collect();
    format!("{label} lambda={:.6}: {}", rows[0].lambda, parts.join(" -> "))
}

/// Ball at `2λ*` on two meshes and the dumbbell at `λ₀` on `2h` and `h`.
pub fn pohozaev_balance(cfg: &RunConfig, r: &RadialSetup) -> Result<CriterionResult> {
    let scfg = cfg.solve_config();
    let ball = MeridianDomain::ball(1.0)?;
    let pb = r.params.with_lambda(2.0 * r.lambda_star);
    let b0 = balance_at(&ball, &pb, 0.04, &scfg)?;
    let b1 = balance_at(&ball, &pb, 0.02, &scfg)?;
    let dc = &cfg.domain;
    let dumb = MeridianDomain::dumbbell(dc.r_cyl, r.barrier.l1 + dc.l_margin, dc.fillet_length)?;
    let pd = r.params.with_lambda(r.lambda0);
    let d0 = balance_at(&dumb, &pd, 2.0 * cfg.mesh.h, &scfg)?;
    let d1 = balance_at(&dumb, &pd, cfg.mesh.h, &scfg)?;
    Ok(CriterionResult::new(
        9,
        "Pohozaev balance",
        balance_ok(&b0, &b1) && balance_ok(&d0, &d1),
        format!("{}; {}", balance_text("ball", [&b0, &b1]), balance_text("dumbbell", [&d0, &d1])),
    ))
}

fn phenomenon(a: &AnalysisSummary) -> Option<&crate::pipeline::StepAnalysis> {
    a.steps.iter().find(|s| Some(s.step) == a.phenomenon_step)
}

pub fn partial_phenomenon(a: &AnalysisSummary) -> CriterionResult {
    let name = "partial free boundary";
    match phenomenon(a) {
        Some(s) => {
            let arc = s.active_ball_arc.expect("phenomenon has an active arc");
            CriterionResult::new(
                10,
                name,
                true,
                format!(
                    "step {} lambda={:.6} (fraction {:.4}): zero-set fraction {:.3}, tail max|flux| {:.3e} <= {:.3e}, ball arc [{:.3}, {:.3}] min|flux| {:.3e} >= {:.3e}, beyond l1 max {:.3e} <= {:.3e}",
                    s.step,
                    s.lambda,
                    s.lambda_fraction,
                    s.classification.zero_set_arc_fraction,
                    s.tail_max_flux,
                    s.classification.zero_threshold,
                    arc.start,
                    arc.end,
                    arc.min_abs_flux,
                    10.0 * a.tau_abs,
                    s.support.max_beyond,
                    s.support.tolerance
                ),
            )
        }
        None => {
            let verdicts: Vec<String> = a
                .steps
                .iter()
                .map(|s| format!("{}:{}", s.step, s.classification.verdict.as_str()))
                .collect();
            CriterionResult::new(10, name, false, format!("no qualifying step; verdicts {}", verdicts.join(" ")))
        }
    }
}

pub fn comparison(a: &AnalysisSummary) -> CriterionResult {
    let name = "comparison principle";
    let Some(s) = phenomenon(a) else {
        return CriterionResult::new(11, name, false, "no partial free-boundary run to check".into());
    };
    match s.comparison {
        Some(c) => CriterionResult::new(
            11,
            name,
            c.pass && c.tail_vertices > 0,
            format!(
                "step {}: {} tail vertices, max(u - v) = {:.3e} <= {:.3e}, cut-sphere max {:.3e} < delta {:.3e}",
                s.step,
                c.tail_vertices,
                c.max_excess.unwrap_or(f64::NAN),
                c.tolerance,
                c.cut_sphere_max,
                c.delta
            ),
        ),
        None => CriterionResult::new(11, name, false, format!("step {} has lambda above lambda0", s.step)),
    }
}

pub fn certification(cfg: &RunConfig, r: &RadialSetup) -> Result<CriterionResult> {
    let dc = &cfg.domain;
    let d = MeridianDomain::dumbbell(dc.r_cyl, r.barrier.l1 + dc.l_margin, dc.fillet_length)?;
    let c = certify(&d, 10_000, dc.cert_grid_h);
    let inr_ok = (c.inradius - 1.0).abs() <= 2.0 * dc.cert_grid_h;
    Ok(CriterionResult::new(
        12,
        "geometry certification",
        c.min_x_dot_nu > 0.0 && c.max_curvature_jump <= 1e-8 && inr_ok && c.passed,
        format!(
            "min x.nu = {:.4e}, max curvature jump = {:.3e}, inradius = {:.4} (grid {})",
            c.min_x_dot_nu, c.max_curvature_jump, c.inradius, dc.cert_grid_h
        ),
    ))
}

/// Reruns the solve in memory and compares every CSV byte for byte with the
/// files on disk.
pub fn determinism(cfg: &RunConfig, root: &Path) -> Result<CriterionResult> {
    let run = run_solve(cfg)?;
    let mut compared = 0;
    let mut differing = Vec::new();
    for (rel, bytes) in run.artifacts.files.iter().filter(|(k, _)| k.ends_with(".csv")) {
        compared += 1;
        match std::fs::read(root.join(rel)) {
            Ok(disk) if disk == *bytes => {}
            _ => differing.push(rel.clone()),
        }
    }
    Ok(CriterionResult::new(
        13,
        "determinism",
        differing.is_empty(),
        if differing.is_empty() {
            format!("{compared} CSVs byte-identical on rerun")
        } else {
            format!("{} of {compared} CSVs differ: {}", differing.len(), differing.join(", "))
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub criteria: Vec<CriterionResult>,
    /// Files whose digest no longer matches the manifest.
    pub integrity: Vec<(String, String)>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.integrity.is_empty() && self.criteria.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (f, why) in &self.integrity {
            s.push_str(&format!("[FAIL] integrity {f}: {why}\n"));
        }
        for c in &self.criteria {
            s.push_str(&format!("{c}\n"));
        }
        s
    }
}

/// Criteria that need only the configuration.
pub fn library_criteria(cfg: &RunConfig, r: &RadialSetup) -> Vec<CriterionResult> {
    let b = &r.barrier;
    let p = &r.params;
    vec![
        or_fail(1, "first integral", first_integral(b, cfg.barrier.w_resolution)),
        or_fail(2, "endpoint exactness", endpoints(b)),
        or_fail(3, "ODE residual order", ode_residual_order(b)),
        or_fail(4, "supersolution sign", supersolution_sign(b)),
        or_fail(5, "N=1 shooting oracle", one_dimensional_oracle(p.alpha, p.beta, &[r.lambda_star, 1.0, r.lambda0])),
        or_fail(6, "scaling law", scaling_law(p, r.lambda_star)),
        or_fail(7, "lambda* round trip", lambda_star_round_trip(r)),
        or_fail(8, "FEM vs radial oracle", fem_radial_oracle(r, &cfg.solve_config())),
        or_fail(9, "Pohozaev balance", pohozaev_balance(cfg, r)),
    ]
}

/// Runs every check against the run directory `out`.
pub fn run_verify(cfg: &RunConfig, out: &Path) -> Result<VerifyReport> {
    cfg.validate()?;
    if !out.join(MANIFEST).exists() {
        return Err(Error::MissingInput(out.join(MANIFEST)));
    }
    let mut dir = RunDir::open(out, serde_json::to_value(cfg)?)?;
    let manifest = Manifest::load(out)?.expect("checked above");
    let integrity = manifest.check_digests(out);
    let r = radial_setup(cfg)?;
    let d = reload_domain(cfg, &r, &dir)?;
    let asm = assemble(&d.mesh, r.params.dim);
    let fields = load_step_fields(&dir, d.mesh.n_vertices())?;
    let analysis = analyze_fields(cfg, &r, &d, &asm, &fields)?;

    let mut criteria = library_criteria(cfg, &r);
    criteria.push(partial_phenomenon(&analysis));
    criteria.push(comparison(&analysis));
    criteria.push(or_fail(12, "geometry certification", certification(cfg, &r)));
    criteria.push(or_fail(13, "determinism", determinism(cfg, out)));
    let report = VerifyReport { criteria, integrity };
    // the report itself stays out of the digest set it checks
    std::fs::create_dir_all(out.join("verify"))?;
    std::fs::write(out.join("verify/report.txt"), report.to_text())?;
    dir.section("verify", &report)?;
    dir.save()?;
    Ok(report)
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<(RunStatus, VerifyReport)> {
    let report = run_verify(cfg, out)?;
    let status = if report.all_pass() {
        RunStatus::Success
    } else {
        RunStatus::Partial
    };
    Ok((status, report))
}
