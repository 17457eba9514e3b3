//! Regularized damped Newton, multistart, least-energy selection and the
//! continuation sweep toward the extinction threshold.
//!
//! The non-Lipschitz reaction is replaced by its odd regularization
//! `f_ε(u) = λ(|u|+ε)^{β-1}u - (|u|+ε)^{α-1}u`, with `ε` taken relative to
//! the amplitude of the initial guess and driven down stage by stage. The
//! Jacobian `K - M f_ε'(u)` is symmetric but indefinite away from the dead
//! zone, so Newton steps use MINRES preconditioned by IC(0) of the
//! definite surrogate `K + M|f_ε'(u)|`.
//!
//! Two globalizations are available. Energy damping backtracks on the
//! regularized energy, falling back to the surrogate direction when the
//! Newton step is not a descent direction; it settles on local minimizers,
//! which is what least-energy search wants. Residual damping backtracks on
//! the scaled residual and can converge to saddle-type solutions close to
//! the initial guess, which the radial oracles need.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Assembly;
use crate::mesh::Mesh;
use crate::numerics::sparse::{minres, pcg, Csr, Ic0};
use crate::radial::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Merit {
    Energy,
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub merit: Merit,
    /// Regularization levels relative to the initial amplitude, decreasing.
    pub epsilon_schedule: Vec<f64>,
    /// Scaled residual tolerance of the last stage.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Armijo constant of the residual backtracking.
    pub armijo: f64,
    /// Smallest damping factor before giving up.
    pub min_damping: f64,
    pub multistart_count: usize,
    pub prng_seed: u64,
    /// Records with discrete max below this count as the zero solution.
    pub nonzero_threshold: f64,
    pub max_linear_iters: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            merit: Merit::Energy,
            epsilon_schedule: vec![1e-4, 1e-6, 1e-8, 1e-10],
            newton_tol: 1e-10,
            max_newton_iters: 200,
            armijo: 1e-4,
            min_damping: 1.0 / 1024.0 / 1024.0,
            multistart_count: 8,
            prng_seed: 20240601,
            nonzero_threshold: 1e-6,
            max_linear_iters: 4000,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let e = &self.epsilon_schedule;
        if e.is_empty() || e.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParameter("epsilon_schedule must be nonempty and positive".into()));
        }
        if e.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("epsilon_schedule must be strictly decreasing".into()));
        }
        if *e.last().unwrap() > 1e-10 {
            return Err(Error::InvalidParameter("final epsilon must be at most 1e-10".into()));
        }
        if !(self.newton_tol > 0.0 && self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if !(self.min_damping > 0.0 && self.min_damping < 1.0) || self.max_newton_iters == 0 {
            return Err(Error::InvalidParameter("damping parameters out of range".into()));
        }
        Ok(())
    }
}

/// Regularized reaction and its derivative.
#[derive(Debug, Clone, Copy)]
pub struct Regularized {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
}

impl Regularized {
    pub fn f(&self, u: f64) -> f64 {
        let s = u.abs() + self.eps;
        if s == 0.0 {
            return 0.0;
        }
        u * (self.lambda * s.powf(self.beta - 1.0) - s.powf(self.alpha - 1.0))
    }

    pub fn df(&self, u: f64) -> f64 {
        let a = u.abs();
        let s = a + self.eps;
        if s == 0.0 {
            return 0.0;
        }
        let g = |e: f64| s.powf(e - 1.0) + (e - 1.0) * s.powf(e - 2.0) * a;
        self.lambda * g(self.beta) - g(self.alpha)
    }

    /// Primitive of `f_ε`, used for the regularized energy trace.
    fn primitive(&self, u: f64) -> f64 {
        // ∫₀^{|u|} t(t+ε)^{e-1} dt = [(t+ε)^{e+1}/(e+1) - ε(t+ε)^e/e]₀^{|u|}
        let a = u.abs();
        let p = |e: f64| {
            let s = a + self.eps;
            let v = |x: f64| x.powf(e + 1.0) / (e + 1.0) - self.eps * x.powf(e) / e;
            v(s) - v(self.eps)
        };
        self.lambda * p(self.beta) - p(self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageInfo {
    pub epsilon: f64,
    pub iterations: usize,
    pub residual: f64,
    pub min_damping: f64,
    /// Whether the regularized energy never increased in this stage.
    pub energy_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub lambda: f64,
    #[serde(skip)]
    pub field: Vec<f64>,
    pub energy: f64,
    pub residual_norm: f64,
    /// Residual after clamping negative nodal values to zero.
    pub clamped_residual: f64,
    pub max_value: f64,
    pub min_value_before_clamp: f64,
    pub iterations: usize,
    pub initial_guess: String,
    pub stages: Vec<StageInfo>,
}

impl SolutionRecord {
    pub fn is_nonzero(&self, threshold: f64) -> bool {
        self.max_value >= threshold
    }
}

/// `‖M^{-1/2} r‖` over free vertices, relative to `‖M^{1/2}‖ scale^α`.
fn scaled_norm(asm: &Assembly, r: &[f64], denom: f64) -> f64 {
    let s: f64 = (0..r.len())
        .filter(|&i| asm.free[i])
        .map(|i| r[i] * r[i] / asm.mass[i].max(f64::MIN_POSITIVE))
        .sum();
    s.sqrt() / denom
}

struct Workspace<'a> {
    asm: &'a Assembly,
    k_free: Csr,
    idx: Vec<usize>,
    denom_base: f64,
}

impl<'a> Workspace<'a> {
    fn new(asm: &'a Assembly) -> Self {
        let (k_free, idx) = asm.stiffness.submatrix(&asm.free);
        let vol: f64 = idx.iter().map(|&i| asm.mass[i]).sum();
        Self {
            asm,
            k_free,
            idx,
            denom_base: vol.sqrt(),
        }
    }

    fn residual(&self, u: &[f64], g: &Regularized) -> Vec<f64> {
        let mut r = self.asm.residual(u, |x| g.f(x));
        for (i, ri) in r.iter_mut().enumerate() {
            if !self.asm.free[i] {
                *ri = 0.0;
            }
        }
        r
    }

    fn reg_energy(&self, u: &[f64], g: &Regularized) -> f64 {
        let ku = self.asm.stiffness.mul(u);
        let q: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
        let nl: f64 = self.asm.mass.iter().zip(u).map(|(m, &x)| m * g.primitive(x)).sum();
        0.5 * q - nl
    }
}

/// Residual of `u` against the exact reaction, in the solver's scaled norm.
pub fn scaled_residual(asm: &Assembly, p: &ProblemParams, u: &[f64], scale: f64) -> f64 {
    let ws = Workspace::new(asm);
    let g = Regularized {
        lambda: p.lambda,
        alpha: p.alpha,
        beta: p.beta,
        eps: 0.0,
    };
    let r = ws.residual(u, &g);
    scaled_norm(asm, &r, ws.denom_base * scale.max(f64::MIN_POSITIVE).powf(p.alpha))
}

/// Runs the ε-staged damped Newton iteration from `initial`.
pub fn newton_solve(
    p: &ProblemParams,
    initial: &[f64],
    cfg: &SolveConfig,
    asm: &Assembly,
    guess_id: &str,
) -> Result<SolutionRecord> {
    let n = asm.n();
    let mut u: Vec<f64> = initial.iter().zip(&asm.free).map(|(&x, &f)| if f { x } else { 0.0 }).collect();
    let scale = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut rec = SolutionRecord {
        lambda: p.lambda,
        field: vec![0.0; n],
        energy: 0.0,
        residual_norm: 0.0,
        clamped_residual: 0.0,
        max_value: 0.0,
        min_value_before_clamp: 0.0,
        iterations: 0,
        initial_guess: guess_id.to_string(),
        stages: Vec::new(),
    };
    if scale == 0.0 {
        return Ok(rec);
    }
    let ws = Workspace::new(asm);
    let denom = ws.denom_base * scale.powf(p.alpha);
    let last = cfg.epsilon_schedule.len() - 1;
    for (stage, &er) in cfg.epsilon_schedule.iter().enumerate() {
        let g = Regularized {
            lambda: p.lambda,
            alpha: p.alpha,
            beta: p.beta,
            eps: er * scale,
        };
        let mut r = ws.residual(&u, &g);
        let mut res = scaled_norm(asm, &r, denom);
        let mut energy = ws.reg_energy(&u, &g);
        let mut info = StageInfo {
            epsilon: g.eps,
            iterations: 0,
            residual: res,
            min_damping: 1.0,
            energy_monotone: true,
        };
        while res > cfg.newton_tol {
            if info.iterations >= cfg.max_newton_iters {
                info.residual = res;
                rec.stages.push(info);
                return Err(Error::Nonconvergence {
                    stage,
                    epsilon: g.eps,
                    residual: res,
                });
            }
            let dfm: Vec<f64> = ws.idx.iter().map(|&i| asm.mass[i] * g.df(u[i])).collect();
            let jac = ws.k_free.add_diag(&dfm.iter().map(|x| -x).collect::<Vec<_>>());
            let pre = Ic0::new(&ws.k_free.add_diag(&dfm.iter().map(|x| x.abs()).collect::<Vec<_>>()));
            let b: Vec<f64> = ws.idx.iter().map(|&i| -r[i]).collect();
            let mut d = vec![0.0; b.len()];
            let rtol = (0.1 * res).clamp(1e-13, 1e-4);
            minres(&jac, &b, &mut d, &pre, rtol, cfg.max_linear_iters);
            let mut slope: f64 = ws.idx.iter().zip(&d).map(|(&i, di)| r[i] * di).sum();
            if cfg.merit == Merit::Energy && !(slope < 0.0) {
                // surrogate step -(K + M|f'|)⁻¹ r is always a descent direction
                let surrogate = ws.k_free.add_diag(&dfm.iter().map(|x| x.abs()).collect::<Vec<_>>());
                d.iter_mut().for_each(|x| *x = 0.0);
                pcg(&surrogate, &b, &mut d, &pre, 1e-8, cfg.max_linear_iters);
                slope = ws.idx.iter().zip(&d).map(|(&i, di)| r[i] * di).sum();
            }
            let mut t = 1.0;
            let (next, next_r, next_res) = loop {
                let mut cand = u.clone();
                for (k, &i) in ws.idx.iter().enumerate() {
                    cand[i] += t * d[k];
                }
                let cr = ws.residual(&cand, &g);
                let cres = scaled_norm(asm, &cr, denom);
                let accept = match cfg.merit {
                    Merit::Residual => cres <= (1.0 - cfg.armijo * t) * res,
                    Merit::Energy => {
                        let gain = cfg.armijo * t * slope;
                        if gain.abs() <= 1e-13 * energy.abs() {
                            // decrease below rounding: fall back on the residual
                            cres <= (1.0 - cfg.armijo * t) * res
                        } else {
                            ws.reg_energy(&cand, &g) <= energy + gain
                        }
                    }
                };
                if accept {
                    break (cand, cr, cres);
                }
                t *= 0.5;
                if t < cfg.min_damping {
                    info.residual = res;
                    rec.stages.push(info);
                    return Err(Error::Divergence {
                        stage,
                        epsilon: g.eps,
                        residual: res,
                    });
                }
            };
            info.min_damping = info.min_damping.min(t);
            let e_next = ws.reg_energy(&next, &g);
            if e_next > energy + 1e-12 * energy.abs().max(f64::MIN_POSITIVE) {
                info.energy_monotone = false;
            }
            energy = e_next;
            u = next;
            r = next_r;
            res = next_res;
            info.iterations += 1;
        }
        info.residual = res;
        rec.iterations += info.iterations;
        rec.stages.push(info);
        if stage == last {
            rec.residual_norm = res;
            rec.min_value_before_clamp = u.iter().copied().fold(f64::INFINITY, f64::min);
            for x in u.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
            rec.clamped_residual = scaled_norm(asm, &ws.residual(&u, &g), denom);
            if rec.clamped_residual > 10.0 * cfg.newton_tol {
                return Err(Error::Nonconvergence {
                    stage,
                    epsilon: g.eps,
                    residual: rec.clamped_residual,
                });
            }
        }
    }
    rec.max_value = u.iter().copied().fold(0.0, f64::max);
    rec.energy = asm.energy(&u, p);
    rec.field = u;
    Ok(rec)
}

/// Returns the nonzero record of least energy. Energies within a relative
/// `1e-9` of the minimum count as ties, resolved by candidate order.
pub fn least_energy_select<'a>(records: &'a [SolutionRecord], threshold: f64) -> Result<&'a SolutionRecord> {
    let best = records
        .iter()
        .filter(|r| r.is_nonzero(threshold))
        .map(|r| r.energy)
        .fold(f64::INFINITY, f64::min);
    records
        .iter()
        .find(|r| r.is_nonzero(threshold) && r.energy <= best + 1e-9 * best.abs())
        .ok_or(Error::NoNonzeroSolution(records.len()))
}

/// Deterministic perturbations of `base`: index 0 is `base` itself, the
/// others rescale it and tilt it by a smooth random factor.
pub fn multistart_guesses(mesh: &Mesh, base: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zs = mesh.vertices.iter().map(|p| p[1].abs()).fold(1.0, f64::max);
    let mut out = vec![base.to_vec()];
    for _ in 1..count {
        let s: f64 = rng.gen_range(0.5..1.5);
        let tilt: f64 = rng.gen_range(-0.3..0.3);
        let bulge: f64 = rng.gen_range(-0.3..0.3);
        out.push(
            mesh.vertices
                .iter()
                .zip(base)
                .map(|(p, &b)| (b * s * (1.0 + tilt * p[1] / zs + bulge * p[0] * p[0])).max(0.0))
                .collect(),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub id: String,
    pub converged: bool,
    pub energy: Option<f64>,
    pub max_value: Option<f64>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub lambda: f64,
    pub selected: Option<SolutionRecord>,
    pub candidates: Vec<CandidateSummary>,
    /// Set when no nonzero candidate survived, even after the halved step.
    pub failure: Option<String>,
    pub retried: bool,
}

/// Geometric schedule `λ_n = λ* + (λ_start - λ*) 2^{-n}`, `n = 0..steps`.
pub fn geometric_schedule(lambda_star: f64, lambda_start: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|n| lambda_star + (lambda_start - lambda_star) * 0.5f64.powi(n as i32))
        .collect()
}

/// Solves every candidate at `λ` in parallel and summarizes them.
pub fn solve_candidates(
    p: &ProblemParams,
    guesses: &[(String, Vec<f64>)],
    cfg: &SolveConfig,
    asm: &Assembly,
) -> (Vec<SolutionRecord>, Vec<CandidateSummary>) {
    let results: Vec<(String, Result<SolutionRecord>)> = guesses
        .par_iter()
        .map(|(id, g)| (id.clone(), newton_solve(p, g, cfg, asm, id)))
        .collect();
    let mut recs = Vec::new();
    let mut sums = Vec::new();
    for (id, r) in results {
        match r {
            Ok(rec) => {
                sums.push(CandidateSummary {
                    id,
                    converged: true,
                    energy: Some(rec.energy),
                    max_value: Some(rec.max_value),
                    residual: Some(rec.residual_norm),
                    error: None,
                });
                recs.push(rec);
            }
            Err(e) => sums.push(CandidateSummary {
                id,
                converged: false,
                energy: None,
                max_value: None,
                residual: None,
                error: Some(e.to_string()),
            }),
        }
    }
    (recs, sums)
}

/// Warm-started sweep along a decreasing schedule. `seeds(λ)` supplies the
/// fresh starting fields at each `λ`; they are expanded into multistarts and
/// compete with the warm start from the previous selection.
pub fn continuation_sweep<S>(
    base: &ProblemParams,
    schedule: &[f64],
    mesh: &Mesh,
    seeds: S,
    cfg: &SolveConfig,
    asm: &Assembly,
) -> Result<Vec<SweepStep>>
where
    S: Fn(f64) -> Vec<(String, Vec<f64>)>,
{
    cfg.validate()?;
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("lambda schedule must be strictly decreasing".into()));
    }
    let mut out = Vec::new();
    let mut warm: Option<(f64, Vec<f64>)> = None;
    for (n, &lam) in schedule.iter().enumerate() {
        let p = base.with_lambda(lam);
        let attempt = |p: &ProblemParams, warm: &Option<(f64, Vec<f64>)>| {
            let mut guesses = Vec::new();
            if let Some((_, w)) = warm {
                guesses.push(("warm".to_string(), w.clone()));
            }
            for (sid, s) in seeds(p.lambda) {
                let starts = multistart_guesses(mesh, &s, cfg.multistart_count.max(1), cfg.prng_seed ^ (n as u64));
                for (k, g) in starts.into_iter().enumerate() {
                    guesses.push((format!("{sid}#{k}"), g));
                }
            }
            let (recs, sums) = solve_candidates(p, &guesses, cfg, asm);
            let sel = least_energy_select(&recs, cfg.nonzero_threshold).ok().cloned();
            (sel, sums)
        };
        let (mut sel, mut sums) = attempt(&p, &warm);
        let mut retried = false;
        if sel.is_none() {
            if let Some((prev, _)) = &warm {
                retried = true;
                let mid = base.with_lambda(0.5 * (prev + lam));
                let (msel, _) = attempt(&mid, &warm);
                if let Some(m) = msel {
                    let w2 = Some((mid.lambda, m.field.clone()));
                    let (s2, sums2) = attempt(&p, &w2);
                    sel = s2;
                    sums = sums2;
                }
            }
        }
        let failure = if sel.is_none() {
            Some(format!("no nonzero candidate converged at lambda = {lam}"))
        } else {
            None
        };
        if let Some(s) = &sel {
            warm = Some((lam, s.field.clone()));
        }
        out.push(SweepStep {
            lambda: lam,
            selected: sel,
            candidates: sums,
            failure,
            retried,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> Regularized {
        Regularized {
            lambda: 2.0,
            alpha: 0.1,
            beta: 0.2,
            eps: 1e-3,
        }
    }

    #[test]
    fn regularized_derivative_matches_difference() {
        let g = reg();
        for u in [-0.7, -1e-3, 2e-4, 0.05, 1.3] {
            let h = 1e-7 * (u as f64).abs().max(1e-4);
            let fd = (g.f(u + h) - g.f(u - h)) / (2.0 * h);
            assert!((fd - g.df(u)).abs() <= 1e-5 * fd.abs().max(1.0), "u={u}: {fd} vs {}", g.df(u));
        }
        assert_eq!(g.f(0.0), 0.0);
        assert!((g.f(-0.3) + g.f(0.3)).abs() < 1e-15);
    }

    #[test]
    fn primitive_matches_reaction() {
        let g = reg();
        for u in [-0.4, 0.02, 0.9] {
            let h = 1e-6;
            let fd = (g.primitive(u + h) - g.primitive(u - h)) / (2.0 * h);
            assert!((fd - g.f(u)).abs() < 1e-7);
        }
    }

    #[test]
    fn schedule_validation() {
        let mut c = SolveConfig::default();
        assert!(c.validate().is_ok());
        c.epsilon_schedule = vec![1e-4, 1e-4, 1e-10];
        assert!(c.validate().is_err());
        c.epsilon_schedule = vec![1e-4, 1e-8];
        assert!(c.validate().is_err());
    }

    #[test]
    fn geometric_schedule_halves_the_gap() {
        let s = geometric_schedule(2.0, 3.0, 4);
        assert_eq!(s, vec![3.0, 2.5, 2.25, 2.125]);
    }

    fn rec(energy: f64, max_value: f64) -> SolutionRecord {
        SolutionRecord {
            lambda: 1.0,
            field: vec![],
            energy,
            residual_norm: 0.0,
            clamped_residual: 0.0,
            max_value,
            min_value_before_clamp: 0.0,
            iterations: 0,
            initial_guess: String::new(),
            stages: vec![],
        }
    }

    #[test]
    fn selection_rules() {
        let one = [rec(-1.0, 0.1)];
        assert_eq!(least_energy_select(&one, 1e-6).unwrap().energy, -1.0);
        let mixed = [rec(0.0, 0.0), rec(-0.5, 0.2)];
        assert_eq!(least_energy_select(&mixed, 1e-6).unwrap().energy, -0.5);
        let zeros = [rec(0.0, 0.0)];
        assert!(matches!(least_energy_select(&zeros, 1e-6), Err(Error::NoNonzeroSolution(1))));
        let pick = [rec(-0.5, 0.2), rec(-0.7, 0.3), rec(-0.6, 0.1)];
        assert_eq!(least_energy_select(&pick, 1e-6).unwrap().energy, -0.7);
    }
}
