//! Orchestration behind the subcommands. Each stage renders its outputs into
//! an in-memory [`Artifacts`] set first; the `cmd_*` entry points then commit
//! them to a locked run directory and record digests in the manifest.

use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify, comparison_check, longest_active_ball_arc, pohozaev, support_check, tail_max_flux, ActiveArc,
    Classification, ComparisonReport, FluxProfile, PohozaevReport, SupportReport, Thresholds, Verdict,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fem::{assemble, transplant, Assembly};
use crate::geometry::{certify, CertificationReport, DomainShape, MeridianDomain, TailRegion};
use crate::io::{num, RunDir};
use crate::mesh::{mesh_meridian, parse_field_csv, Mesh, MeshQuality};
use crate::radial::barrier::{delta_max, BarrierParams};
use crate::radial::shooting::{dirichlet_ball_profile, flat_hat, flat_hat_profile, lambda_star_for_radius, FlatHat, ShootOptions};
use crate::radial::ProblemParams;
use crate::solver::{continuation_sweep, geometric_schedule, SweepStep};

/// Boundary samples in the exported polyline.
const BOUNDARY_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Success,
    Partial,
    Failure,
}

impl RunStatus {
    /// 0 success, 1 partial failure, 3 nothing usable was produced.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::Partial => 1,
            RunStatus::Failure => 3,
        }
    }
}

/// Files and manifest sections produced by a stage, not yet on disk.
#[derive(Debug, Default, Clone)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
    pub sections: BTreeMap<String, serde_json::Value>,
}

impl Artifacts {
    pub fn file(&mut self, rel: &str, bytes: impl Into<Vec<u8>>) {
        self.files.insert(rel.to_string(), bytes.into());
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.file(rel, s);
        Ok(())
    }

    pub fn section<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.sections.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn extend(&mut self, other: Artifacts) {
        self.files.extend(other.files);
        self.sections.extend(other.sections);
    }

    pub fn commit(&self, dir: &mut RunDir) -> Result<()> {
        for (rel, bytes) in &self.files {
            dir.write(rel, bytes)?;
        }
        for (name, v) in &self.sections {
            dir.section(name, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RadialSetup {
    /// Problem parameters at `λ = 1`.
    pub params: ProblemParams,
    /// Flat hat at `λ = 1`, the scaling reference.
    pub reference: FlatHat,
    pub lambda_star: f64,
    pub lambda0: f64,
    pub barrier: BarrierParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub lambda: f64,
    pub center_value: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingAudit {
    pub rows: Vec<ScalingRow>,
    pub fitted_slope: f64,
    pub expected_slope: f64,
    pub relative_error: f64,
    pub strictly_decreasing: bool,
}

impl ScalingAudit {
    /// Shoots flat hats at `points` values spread log-uniformly over
    /// `[lambda_lo, 10·lambda_lo]` and fits `log R` against `log λ`.
    pub fn run(p: &ProblemParams, lambda_lo: f64, points: usize) -> Result<Self> {
        let o = ShootOptions::default();
        let rows = (0..points)
            .map(|k| {
                let lambda = lambda_lo * 10f64.powf(k as f64 / (points - 1) as f64);
                let fh = flat_hat(&p.with_lambda(lambda), &o)?;
                Ok(ScalingRow {
                    lambda,
                    center_value: fh.center_value,
                    radius: fh.radius,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let xs: Vec<f64> = rows.iter().map(|r| r.lambda.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.radius.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let fitted_slope = sxy / sxx;
        let expected_slope = -p.scaling_exponent();
        Ok(Self {
            strictly_decreasing: rows.windows(2).all(|w| w[1].radius < w[0].radius),
            relative_error: ((fitted_slope - expected_slope) / expected_slope).abs(),
            rows,
            fitted_slope,
            expected_slope,
        })
    }

    /// CSV with header `lambda,center_value,support_radius,predicted_radius`;
    /// the prediction scales the first radius by the exact exponent.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,center_value,support_radius,predicted_radius\n");
        let r0 = &self.rows[0];
        for r in &self.rows {
            let pred = r0.radius * (r.lambda / r0.lambda).powf(self.expected_slope);
            s.push_str(&format!("{},{},{},{}\n", num(r.lambda), num(r.center_value), num(r.radius), num(pred)));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSummary {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub reference_lambda: f64,
    pub reference_radius: f64,
    pub reference_center_value: f64,
    pub lambda_star: f64,
    pub lambda0: f64,
    pub s_star: f64,
    pub delta: f64,
    pub edge_constant: f64,
    pub l0: f64,
    pub l1: f64,
    pub admissible: bool,
    pub scaling_slope: f64,
    pub scaling_expected: f64,
}

pub fn radial_setup(cfg: &RunConfig) -> Result<RadialSetup> {
    let params = cfg.problem_params()?;
    let reference = flat_hat(&params, &ShootOptions::default())?;
    let lambda_star = lambda_star_for_radius(1.0, params.lambda, reference.radius, params.alpha, params.beta);
    let lambda0 = cfg.barrier.lambda0_factor * lambda_star;
    let delta = cfg.barrier.delta_factor * delta_max(params.alpha, params.beta, lambda0);
    let barrier = BarrierParams::new(&params, lambda0, delta, cfg.barrier.l0)?;
    Ok(RadialSetup {
        params,
        reference,
        lambda_star,
        lambda0,
        barrier,
    })
}

pub fn radial_artifacts(cfg: &RunConfig, r: &RadialSetup) -> Result<Artifacts> {
    let mut a = Artifacts::default();
    let prof = r.barrier.profile_w(cfg.barrier.w_resolution)?;
    let audit = ScalingAudit::run(&r.params, r.lambda_star, 5)?;
    let b = &r.barrier;
    let summary = RadialSummary {
        dim: r.params.dim,
        alpha: r.params.alpha,
        beta: r.params.beta,
        reference_lambda: r.params.lambda,
        reference_radius: r.reference.radius,
        reference_center_value: r.reference.center_value,
        lambda_star: r.lambda_star,
        lambda0: r.lambda0,
        s_star: delta_max(b.alpha, b.beta, b.lambda0),
        delta: b.delta,
        edge_constant: b.edge_constant,
        l0: b.l0,
        l1: b.l1,
        admissible: r.params.admissible(),
        scaling_slope: audit.fitted_slope,
        scaling_expected: audit.expected_slope,
    };
    a.file("radial/w_profile.csv", prof.to_csv());
    a.file("radial/scaling_audit.csv", audit.to_csv());
    a.json("radial/barrier.json", &summary)?;
    a.section("radial", &summary)?;
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct DomainSetup {
    pub domain: MeridianDomain,
    pub certification: CertificationReport,
    pub mesh: Mesh,
    pub quality: MeshQuality,
    pub tail: TailRegion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSummary {
    pub shape: DomainShape,
    pub total_length: f64,
    pub tail_cut_radius: f64,
    pub tail_nonempty: bool,
    pub certification: CertificationReport,
    pub mesh_h: f64,
    pub mesh: MeshQuality,
}

pub fn domain_setup(cfg: &RunConfig, r: &RadialSetup) -> Result<DomainSetup> {
    let dc = &cfg.domain;
    let domain = if cfg.ball_only {
        MeridianDomain::ball(1.0)?
    } else {
        MeridianDomain::dumbbell(dc.r_cyl, r.barrier.l1 + dc.l_margin, dc.fillet_length)?
    };
    let certification = certify(&domain, dc.cert_samples, dc.cert_grid_h);
    if !certification.passed {
        return Err(Error::Certification(certification.failures.join("; ")));
    }
    let mesh = mesh_meridian(&domain, cfg.mesh.h)?;
    let quality = mesh.quality(&domain);
    info!(
        "mesh: {} vertices, {} triangles, min angle {:.1}°",
        quality.vertices, quality.triangles, quality.min_angle_deg
    );
    Ok(DomainSetup {
        domain,
        certification,
        mesh,
        quality,
        tail: TailRegion {
            cut_radius: r.barrier.l0,
        },
    })
}

pub fn domain_artifacts(cfg: &RunConfig, d: &DomainSetup) -> Result<Artifacts> {
    let mut a = Artifacts::default();
    let summary = DomainSummary {
        shape: d.domain.shape,
        total_length: d.domain.total_length(),
        tail_cut_radius: d.tail.cut_radius,
        tail_nonempty: d.tail.is_nonempty(&d.domain),
        certification: d.certification.clone(),
        mesh_h: cfg.mesh.h,
        mesh: d.quality,
    };
    a.file("domain/boundary.csv", d.domain.boundary_csv(BOUNDARY_SAMPLES));
    a.file("domain/mesh.txt", d.mesh.to_text());
    a.json("domain/domain.json", &summary)?;
    a.section("domain", &summary)?;
    Ok(a)
}

/// Warm-start seeds at `λ`: the radial Dirichlet solution of the unit ball
/// and the flat hat, both centered at the origin.
pub fn radial_seeds(mesh: &Mesh, p: &ProblemParams) -> Vec<(String, Vec<f64>)> {
    let o = ShootOptions::default();
    let mut v = Vec::new();
    if let Ok((_, prof)) = dirichlet_ball_profile(p, 1.0, &o) {
        v.push(("ball".to_string(), transplant(mesh, &prof, 0.0)));
    }
    if let Ok((_, prof)) = flat_hat_profile(p, &o) {
        v.push(("flat".to_string(), transplant(mesh, &prof, 0.0)));
    }
    v
}

pub fn field_path(step: usize) -> String {
    format!("solve/fields/step_{step:02}.csv")
}

pub fn flux_path(step: usize) -> String {
    format!("analysis/flux/step_{step:02}.csv")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub lambda_star: f64,
    pub lambda0: f64,
    pub schedule: Vec<f64>,
    pub seed: u64,
    pub converged_steps: usize,
    pub failed_steps: Vec<usize>,
    pub status: RunStatus,
    pub selection: String,
}

/// Runs the continuation sweep. Returns the steps and their artifacts.
pub fn solve_artifacts(
    cfg: &RunConfig,
    r: &RadialSetup,
    d: &DomainSetup,
    asm: &Assembly,
) -> Result<(Vec<SweepStep>, SolveSummary, Artifacts)> {
    let scfg = cfg.solve_config();
    let schedule = geometric_schedule(r.lambda_star, r.lambda0, cfg.sweep.steps);
    let mesh = &d.mesh;
    let seeds = |lam: f64| radial_seeds(mesh, &r.params.with_lambda(lam));
    let steps = continuation_sweep(&r.params, &schedule, mesh, seeds, &scfg, asm)?;
    let mut a = Artifacts::default();
    let mut failed = Vec::new();
    for (k, s) in steps.iter().enumerate() {
        match &s.selected {
            Some(rec) => a.file(&field_path(k), mesh.field_csv(&rec.field)),
            None => {
                warn!("step {k} (λ = {}) failed: {:?}", s.lambda, s.failure);
                failed.push(k);
            }
        }
    }
    let converged = steps.len() - failed.len();
    let status = if failed.is_empty() {
        RunStatus::Success
    } else if converged > 0 {
        RunStatus::Partial
    } else {
        RunStatus::Failure
    };
    let summary = SolveSummary {
        lambda_star: r.lambda_star,
        lambda0: r.lambda0,
        schedule,
        seed: scfg.prng_seed,
        converged_steps: converged,
        failed_steps: failed,
        status,
        selection: "least-energy-found among converged nonzero candidates; not a certified ground state".into(),
    };
    a.json("solve/sweep.json", &steps)?;
    a.section("solve", &summary)?;
    Ok((steps, summary, a))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepAnalysis {
    pub step: usize,
    pub lambda: f64,
    /// `(λ - λ*) / (λ₀ - λ*)`.
    pub lambda_fraction: f64,
    pub energy: f64,
    pub max_value: f64,
    pub pohozaev: PohozaevReport,
    pub classification: Classification,
    pub tail_max_flux: f64,
    pub active_ball_arc: Option<ActiveArc>,
    /// `tol_factor · h² · max u`.
    pub u_tol: f64,
    pub support: SupportReport,
    /// Only for `λ ≤ λ₀`.
    pub comparison: Option<ComparisonReport>,
    /// Partial verdict, flux-free tail, active ball arc and confined support.
    pub partial_phenomenon: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub tau_abs: f64,
    pub max_flux_suite: f64,
    pub steps: Vec<StepAnalysis>,
    pub failed_steps: Vec<usize>,
    /// Step closest to λ* showing the partial free-boundary phenomenon.
    pub phenomenon_step: Option<usize>,
}

/// One sweep step as read back for analysis.
#[derive(Debug, Clone)]
pub struct StepField {
    pub step: usize,
    pub lambda: f64,
    pub field: Option<Vec<f64>>,
}

pub fn analyze_fields(
    cfg: &RunConfig,
    r: &RadialSetup,
    d: &DomainSetup,
    asm: &Assembly,
    fields: &[StepField],
) -> Result<AnalysisSummary> {
    let ac = &cfg.analysis;
    let flux: Vec<Option<FluxProfile>> = fields
        .iter()
        .map(|s| {
            s.field
                .as_ref()
                .map(|u| FluxProfile::recover(&d.mesh, &d.domain, asm, &r.params.with_lambda(s.lambda), u))
        })
        .collect();
    let max_flux_suite = flux.iter().flatten().fold(0.0, |m, f| f64::max(m, f.max_abs()));
    let th = Thresholds {
        tau_rel: ac.tau_rel,
        tau_abs: ac.tau_abs_factor * max_flux_suite,
        eta: ac.eta,
        min_run_edges: ac.min_run_edges,
    };
    let h = cfg.mesh.h;
    let mut steps = Vec::new();
    let mut failed_steps = Vec::new();
    for (s, f) in fields.iter().zip(&flux) {
        let (Some(u), Some(f)) = (&s.field, f) else {
            failed_steps.push(s.step);
            continue;
        };
        let p = r.params.with_lambda(s.lambda);
        let max_value = u.iter().copied().fold(0.0, f64::max);
        let u_tol = ac.tol_factor * h * h * max_value;
        let classification = classify(f, &th);
        let tail_max = tail_max_flux(f, d.tail.cut_radius);
        let arc = longest_active_ball_arc(f, classification.zero_threshold);
        let support = support_check(&d.mesh, u, r.barrier.l1, u_tol);
        let comparison = if s.lambda <= r.lambda0 * (1.0 + 1e-12) {
            Some(comparison_check(&d.mesh, u, &r.barrier, u_tol)?)
        } else {
            None
        };
        let partial_phenomenon = classification.verdict == Verdict::PartialFreeBoundary
            && tail_max <= classification.zero_threshold
            && arc.is_some_and(|a| a.edges >= th.min_run_edges && a.min_abs_flux >= 10.0 * th.tau_abs)
            && support.pass;
        steps.push(StepAnalysis {
            step: s.step,
            lambda: s.lambda,
            lambda_fraction: (s.lambda - r.lambda_star) / (r.lambda0 - r.lambda_star),
            energy: asm.energy(u, &p),
            max_value,
            pohozaev: pohozaev(asm, &d.domain, &p, u, f),
            classification,
            tail_max_flux: tail_max,
            active_ball_arc: arc,
            u_tol,
            support,
            comparison,
            partial_phenomenon,
        });
    }
    let phenomenon_step = steps.iter().rev().find(|s| s.partial_phenomenon).map(|s| s.step);
    Ok(AnalysisSummary {
        tau_abs: th.tau_abs,
        max_flux_suite,
        steps,
        failed_steps,
        phenomenon_step,
    })
}

/// Summary table plus one flux CSV per analyzed step.
pub fn analysis_artifacts(
    r: &RadialSetup,
    d: &DomainSetup,
    asm: &Assembly,
    fields: &[StepField],
    summary: &AnalysisSummary,
) -> Result<Artifacts> {
    let mut a = Artifacts::default();
    for s in fields {
        if let Some(u) = &s.field {
            let f = FluxProfile::recover(&d.mesh, &d.domain, asm, &r.params.with_lambda(s.lambda), u);
            a.file(&flux_path(s.step), f.to_csv());
        }
    }
    let mut csv = String::from(
        "step,lambda,lambda_fraction,energy,p_value,boundary_integral,balance_residual,verdict,zero_set_fraction,max_abs_flux,tail_max_flux,support_pass,comparison_pass\n",
    );
    let by_step: BTreeMap<usize, &StepAnalysis> = summary.steps.iter().map(|s| (s.step, s)).collect();
    for s in fields {
        let frac = (s.lambda - r.lambda_star) / (r.lambda0 - r.lambda_star);
        match by_step.get(&s.step) {
            Some(x) => csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                s.step,
                num(s.lambda),
                num(frac),
                num(x.energy),
                num(x.pohozaev.p_value),
                num(x.pohozaev.boundary_integral),
                num(x.pohozaev.balance_residual),
                x.classification.verdict.as_str(),
                num(x.classification.zero_set_arc_fraction),
                num(x.classification.max_abs_flux),
                num(x.tail_max_flux),
                x.support.pass,
                x.comparison.map_or("".to_string(), |c| c.pass.to_string()),
            )),
            None => csv.push_str(&format!("{},{},{},,,,,Failed,,,,,\n", s.step, num(s.lambda), num(frac))),
        }
    }
    a.file("analysis/summary.csv", csv);
    a.json("analysis/analysis.json", summary)?;
    a.section("analysis", &AnalysisBrief::from(summary))?;
    Ok(a)
}

/// Manifest block: verdict and Pohozaev triple per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisBrief {
    pub tau_abs: f64,
    pub phenomenon_step: Option<usize>,
    pub steps: Vec<BriefStep>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BriefStep {
    pub step: usize,
    pub lambda: f64,
    pub verdict: Verdict,
    pub zero_set_arc_fraction: f64,
    pub zero_threshold: f64,
    pub p_value: f64,
    pub boundary_integral: f64,
    pub balance_residual: f64,
}

impl From<&AnalysisSummary> for AnalysisBrief {
    fn from(s: &AnalysisSummary) -> Self {
        Self {
            tau_abs: s.tau_abs,
            phenomenon_step: s.phenomenon_step,
            steps: s
                .steps
                .iter()
                .map(|x| BriefStep {
                    step: x.step,
                    lambda: x.lambda,
                    verdict: x.classification.verdict,
                    zero_set_arc_fraction: x.classification.zero_set_arc_fraction,
                    zero_threshold: x.classification.zero_threshold,
                    p_value: x.pohozaev.p_value,
                    boundary_integral: x.pohozaev.boundary_integral,
                    balance_residual: x.pohozaev.balance_residual,
                })
                .collect(),
        }
    }
}

/// Selected fields as stored: values are read back from the rendered CSVs
/// so that analysis run inside `solve` and a later `analyze` see the same
/// numbers.
pub fn step_fields(steps: &[SweepStep], artifacts: &Artifacts) -> Vec<StepField> {
    steps
        .iter()
        .enumerate()
        .map(|(k, s)| StepField {
            step: k,
            lambda: s.lambda,
            field: artifacts
                .files
                .get(&field_path(k))
                .and_then(|b| parse_field_csv(std::str::from_utf8(b).ok()?)),
        })
        .collect()
}

/// Everything `solve` writes, computed in memory.
pub struct SolveRun {
    pub radial: RadialSetup,
    pub domain: DomainSetup,
    pub steps: Vec<SweepStep>,
    pub solve: SolveSummary,
    pub analysis: AnalysisSummary,
    pub artifacts: Artifacts,
}

pub fn run_solve(cfg: &RunConfig) -> Result<SolveRun> {
    cfg.validate()?;
    let radial = radial_setup(cfg)?;
    let domain = domain_setup(cfg, &radial)?;
    let asm = assemble(&domain.mesh, radial.params.dim);
    let mut artifacts = radial_artifacts(cfg, &radial)?;
    artifacts.extend(domain_artifacts(cfg, &domain)?);
    let (steps, solve, a) = solve_artifacts(cfg, &radial, &domain, &asm)?;
    artifacts.extend(a);
    let fields = step_fields(&steps, &artifacts);
    let analysis = analyze_fields(cfg, &radial, &domain, &asm, &fields)?;
    artifacts.extend(analysis_artifacts(&radial, &domain, &asm, &fields, &analysis)?);
    Ok(SolveRun {
        radial,
        domain,
        steps,
        solve,
        analysis,
        artifacts,
    })
}

fn open(cfg: &RunConfig, out: &Path) -> Result<RunDir> {
    RunDir::open(out, serde_json::to_value(cfg)?)
}

pub fn cmd_radial(cfg: &RunConfig, out: &Path) -> Result<RunStatus> {
    cfg.validate()?;
    let mut dir = open(cfg, out)?;
    let r = radial_setup(cfg)?;
    radial_artifacts(cfg, &r)?.commit(&mut dir)?;
    dir.save()?;
    Ok(RunStatus::Success)
}

pub fn cmd_domain(cfg: &RunConfig, out: &Path) -> Result<RunStatus> {
    cfg.validate()?;
    let mut dir = open(cfg, out)?;
    let r = radial_setup(cfg)?;
    let d = domain_setup(cfg, &r)?;
    domain_artifacts(cfg, &d)?.commit(&mut dir)?;
    dir.save()?;
    Ok(RunStatus::Success)
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<RunStatus> {
    cfg.validate()?;
    let mut dir = open(cfg, out)?;
    let run = run_solve(cfg)?;
    dir.clear_prefix("solve/");
    dir.clear_prefix("analysis/");
    run.artifacts.commit(&mut dir)?;
    dir.save()?;
    Ok(run.solve.status)
}

/// Reads the sweep written by `solve` back from `dir`.
pub fn load_step_fields(dir: &RunDir, n_vertices: usize) -> Result<Vec<StepField>> {
    let text = dir.read("solve/sweep.json")?;
    let steps: Vec<SweepStep> = serde_json::from_str(&text).map_err(|e| Error::MalformedInput {
        path: "solve/sweep.json".into(),
        reason: e.to_string(),
    })?;
    steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let field = match &s.selected {
                None => None,
                Some(_) => {
                    let rel = field_path(k);
                    let u = parse_field_csv(&dir.read(&rel)?)
                        .filter(|u| u.len() == n_vertices)
                        .ok_or_else(|| Error::MalformedInput {
                            path: rel,
                            reason: format!("expected {n_vertices} vertex values"),
                        })?;
                    Some(u)
                }
            };
            Ok(StepField {
                step: k,
                lambda: s.lambda,
                field,
            })
        })
        .collect()
}

/// Rebuilds the domain from the config and checks it against the stored mesh.
pub fn reload_domain(cfg: &RunConfig, r: &RadialSetup, dir: &RunDir) -> Result<DomainSetup> {
    let d = domain_setup(cfg, r)?;
    let stored = dir.read("domain/mesh.txt")?;
    if stored != d.mesh.to_text() {
        return Err(Error::MalformedInput {
            path: "domain/mesh.txt".into(),
            reason: "does not match the mesh generated from the config".into(),
        });
    }
    Ok(d)
}

pub fn cmd_analyze(cfg: &RunConfig, out: &Path) -> Result<RunStatus> {
    cfg.validate()?;
    let mut dir = open(cfg, out)?;
    let r = radial_setup(cfg)?;
    let d = reload_domain(cfg, &r, &dir)?;
    let asm = assemble(&d.mesh, r.params.dim);
    let fields = load_step_fields(&dir, d.mesh.n_vertices())?;
    let summary = analyze_fields(cfg, &r, &d, &asm, &fields)?;
    dir.clear_prefix("analysis/");
    analysis_artifacts(&r, &d, &asm, &fields, &summary)?.commit(&mut dir)?;
    dir.save()?;
    Ok(if summary.steps.is_empty() {
        RunStatus::Failure
    } else if summary.failed_steps.is_empty() {
        RunStatus::Success
    } else {
        RunStatus::Partial
    })
}
