//! Barrier potential, the compactly supported profile `w` and the
//! supersolution `v(x) = w(|x| - l₀)`.
//!
//! All quadratures run in the variable `t` with `s = t^p`, `p = 2/(1-α)`.
//! There `F(s)^{-1/2} ds = p·G(t^p)^{-1/2} dt` with
//! `G(s) = 1/(α+1) - λ₀ s^{β-α}/(β+1)`, which is bounded on `[0, δ]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ProblemParams, RadialProfile};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{graded_composite, GaussLegendre};
use crate::numerics::roots::safeguarded_newton;

/// `F(s) = s^{α+1}/(α+1) - λ₀ s^{β+1}/(β+1)`.
pub fn barrier_potential(s: f64, alpha: f64, beta: f64, lambda0: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    s.powf(alpha + 1.0) / (alpha + 1.0) - lambda0 * s.powf(beta + 1.0) / (beta + 1.0)
}

/// Positive root of `F`: `((β+1)/(λ₀(α+1)))^{1/(β-α)}`.
pub fn delta_max(alpha: f64, beta: f64, lambda0: f64) -> f64 {
    ((beta + 1.0) / (lambda0 * (alpha + 1.0))).powf(1.0 / (beta - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Initial number of graded panels.
    pub panels: usize,
    /// Gauss–Legendre points per panel.
    pub points: usize,
    /// Grading exponent toward `t = 0`.
    pub grading: f64,
    /// Accept when the `n` and `2n` panel results agree to this relative tolerance.
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 8,
            points: 10,
            grading: 6.0,
            rel_tol: 1e-13,
            max_panels: 4096,
        }
    }
}

/// `t ↦ ∫₀ᵗ p·G(τ^p)^{-1/2} dτ` at a fixed resolution.
#[derive(Debug, Clone)]
struct TransformedIntegral {
    alpha: f64,
    beta: f64,
    lambda0: f64,
    p: f64,
    rule: GaussLegendre,
    panels: usize,
    grading: f64,
}

impl TransformedIntegral {
    fn integrand(&self, t: f64) -> f64 {
        self.p * self.g_at(t).powf(-0.5)
    }

    fn g_at(&self, t: f64) -> f64 {
        let e = self.p * (self.beta - self.alpha);
        1.0 / (self.alpha + 1.0) - self.lambda0 * t.powf(e) / (self.beta + 1.0)
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        graded_composite(&self.rule, |x| self.integrand(x), 0.0, t, self.panels, self.grading)
    }
}

/// `C = (1/√2)∫₀^δ F^{-1/2} ds` computed in the transformed variable with
/// panel doubling until two successive results agree.
pub fn edge_constant(alpha: f64, beta: f64, lambda0: f64, delta: f64) -> Result<f64> {
    Ok(edge_constant_with(alpha, beta, lambda0, delta, &QuadratureConfig::default())?.0)
}

fn edge_constant_with(
    alpha: f64,
    beta: f64,
    lambda0: f64,
    delta: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, TransformedIntegral)> {
    let smax = delta_max(alpha, beta, lambda0);
    if !(delta > 0.0 && delta < smax) {
        return Err(Error::InvalidParameter(format!(
            "barrier height {delta} must lie in (0, {smax})"
        )));
    }
    let p = 2.0 / (1.0 - alpha);
    let t_end = delta.powf(1.0 / p);
    let mut ti = TransformedIntegral {
        alpha,
        beta,
        lambda0,
        p,
        rule: GaussLegendre::new(cfg.points),
        panels: cfg.panels,
        grading: cfg.grading,
    };
    let mut coarse = ti.eval(t_end);
    loop {
        ti.panels *= 2;
        let fine = ti.eval(t_end);
        let diff = (fine - coarse).abs();
        let tol = cfg.rel_tol * fine.abs();
        if diff <= tol {
            return Ok((fine / std::f64::consts::SQRT_2, ti));
        }
        if ti.panels >= cfg.max_panels {
            return Err(Error::QuadratureNonconvergence { diff, tol });
        }
        coarse = fine;
    }
}

/// Barrier data: `λ₀`, `δ`, `l₀`, `C` and `l₁ = l₀ + C`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierParams {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda0: f64,
    pub delta: f64,
    pub l0: f64,
    pub edge_constant: f64,
    pub l1: f64,
    #[serde(skip)]
    integral: Option<TransformedIntegralCache>,
}

#[derive(Debug, Clone)]
struct TransformedIntegralCache(TransformedIntegral);

impl BarrierParams {
    /// Builds the barrier for `λ₀` with height `delta` (use
    /// [`BarrierParams::default_delta`] for `0.9·s*`) and inner radius `l0 > 1`.
    pub fn new(p: &ProblemParams, lambda0: f64, delta: f64, l0: f64) -> Result<Self> {
        Self::with_quadrature(p, lambda0, delta, l0, &QuadratureConfig::default())
    }

    pub fn with_quadrature(
        p: &ProblemParams,
        lambda0: f64,
        delta: f64,
        l0: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        p.validate()?;
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda0 must be positive, got {lambda0}")));
        }
        if !(l0.is_finite() && l0 > 1.0) {
            return Err(Error::InvalidParameter(format!("l0 must exceed 1, got {l0}")));
        }
        let (c, ti) = edge_constant_with(p.alpha, p.beta, lambda0, delta, cfg)?;
        Ok(Self {
            dim: p.dim,
            alpha: p.alpha,
            beta: p.beta,
            lambda0,
            delta,
            l0,
            edge_constant: c,
            l1: l0 + c,
            integral: Some(TransformedIntegralCache(ti)),
        })
    }

    pub fn default_delta(alpha: f64, beta: f64, lambda0: f64) -> f64 {
        0.9 * delta_max(alpha, beta, lambda0)
    }

    pub fn potential(&self, s: f64) -> f64 {
        barrier_potential(s, self.alpha, self.beta, self.lambda0)
    }

    fn integral(&self) -> Result<TransformedIntegral> {
        match &self.integral {
            Some(c) => Ok(c.0.clone()),
            None => Ok(edge_constant_with(
                self.alpha,
                self.beta,
                self.lambda0,
                self.delta,
                &QuadratureConfig::default(),
            )?
            .1),
        }
    }

    /// `w(r)` by inverting `r = (1/√2)∫_w^δ F^{-1/2}` in the transformed variable.
    pub fn w(&self, r: f64) -> Result<f64> {
        let ti = self.integral()?;
        self.w_with(&ti, r)
    }

    fn w_with(&self, ti: &TransformedIntegral, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(self.delta);
        }
        let c = self.edge_constant;
        if r >= c {
            return Ok(0.0);
        }
        let t_end = self.delta.powf(1.0 / ti.p);
        let target = ti.eval(t_end) - std::f64::consts::SQRT_2 * r;
        let g = |t: f64| (ti.eval(t) - target, ti.integrand(t));
        let guess = t_end * (1.0 - r / c);
        let t = safeguarded_newton(g, 0.0, t_end, guess, 1e-16 * t_end).ok_or_else(|| {
            Error::InversionFailure {
                radius: r,
                reason: "target left the bracket [0, δ]".into(),
            }
        })?;
        Ok(t.max(0.0).powf(ti.p).min(self.delta))
    }

    /// `w′(r) = -√2·F(w)^{1/2}`.
    pub fn w_prime_of_value(&self, w: f64) -> f64 {
        -std::f64::consts::SQRT_2 * self.potential(w).max(0.0).sqrt()
    }

    /// Supersolution `v` at `|x| = x_radius ≥ l₀`.
    pub fn supersolution_v(&self, x_radius: f64) -> Result<f64> {
        if x_radius < self.l0 {
            return Err(Error::Domain(format!(
                "supersolution is defined for |x| >= l0 = {}, got {x_radius}",
                self.l0
            )));
        }
        self.w(x_radius - self.l0)
    }

    /// Pointwise residual `-Δv - (λ₀v^β - v^α) = -(N-1)/|x|·w′(|x| - l₀)`.
    pub fn supersolution_residual(&self, x_radius: f64) -> Result<f64> {
        let w = self.supersolution_v(x_radius)?;
        Ok(-(self.dim as f64 - 1.0) / x_radius * self.w_prime_of_value(w))
    }

    /// Samples `w` on `resolution` equispaced radii covering `[0, C]`.
    pub fn profile_w(&self, resolution: usize) -> Result<RadialProfile> {
        if resolution < 2 {
            return Err(Error::InvalidParameter("profile resolution must be at least 2".into()));
        }
        let ti = self.integral()?;
        let c = self.edge_constant;
        let last = resolution - 1;
        let grid: Vec<f64> = (0..resolution).map(|i| c * i as f64 / last as f64).collect();
        let values: Vec<f64> = grid
            .par_iter()
            .enumerate()
            .map(|(i, &r)| if i == last { Ok(0.0) } else { self.w_with(&ti, r) })
            .collect::<Result<_>>()?;
        let derivs = values.iter().map(|&w| self.w_prime_of_value(w)).collect();
        Ok(RadialProfile {
            grid,
            values,
            derivs,
            support_radius: c,
        })
    }
}

/// `BarrierParams::profile_w` as a free function.
pub fn profile_w(params: &BarrierParams, resolution: usize) -> Result<RadialProfile> {
    params.profile_w(resolution)
}

/// `BarrierParams::supersolution_v` as a free function.
pub fn supersolution_v(params: &BarrierParams, x_radius: f64) -> Result<f64> {
    params.supersolution_v(x_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ode::{Dopri5, StepControl};
    use crate::numerics::quadrature::adaptive_gk15;
    use crate::numerics::roots::bisect;

    const A: f64 = 0.1;
    const B: f64 = 0.2;

    fn barrier(lambda0: f64) -> BarrierParams {
        let p = ProblemParams::new(4, A, B, lambda0).unwrap();
        BarrierParams::new(&p, lambda0, BarrierParams::default_delta(A, B, lambda0), 1.5).unwrap()
    }

    #[test]
    fn potential_examples() {
        assert_eq!(barrier_potential(0.0, A, B, 1.0), 0.0);
        assert!(barrier_potential(1.0, A, B, 1.2 / 1.1).abs() < 1e-15);
        // 0.5^1.1/1.1 - 0.5^1.2/1.2 via exp/ln; literal from 30-digit arithmetic
        let s: f64 = 0.5;
        let oracle = (1.1 * s.ln()).exp() / 1.1 - (1.2 * s.ln()).exp() / 1.2;
        let f = barrier_potential(0.5, A, B, 1.0);
        assert!(f > 0.0);
        assert!((f - oracle).abs() < 1e-15);
        assert!((f - 0.061_376_503_870_618_3).abs() < 1e-12);
    }

    #[test]
    fn delta_max_examples() {
        assert!((delta_max(A, B, 1.2 / 1.1) - 1.0).abs() < 1e-14);
        let root = bisect(|s| barrier_potential(s, A, B, 1.0), 1e-3, 10.0, 1e-15).unwrap();
        assert!((root - delta_max(A, B, 1.0)).abs() < 1e-12);
        let ratio = delta_max(A, B, 2.0) / delta_max(A, B, 1.0);
        assert!((ratio - 2f64.powf(-1.0 / (B - A))).abs() < 1e-12);
    }

    #[test]
    fn edge_constant_matches_raw_quadrature() {
        let lam = 1.0;
        let delta = 0.9 * delta_max(A, B, lam);
        let c = edge_constant(A, B, lam, delta).unwrap();
        // raw integrand on (δ·1e-8, δ) plus the leading-order tail below
        let eps = delta * 1e-8;
        let raw = adaptive_gk15(
            |s: f64| barrier_potential(s, A, B, lam).powf(-0.5),
            eps,
            delta,
            1e-14,
            1e-13,
            100_000,
        )
        .unwrap();
        // series (1-x)^{-1/2} = 1 + x/2 + 3x²/8 with x = λ(α+1)s^{β-α}/(β+1)
        let k = (1.0 - A) / 2.0;
        let q = lam * (1.0 + A) / (1.0 + B);
        let d = B - A;
        let tail = (1.0 + A).sqrt()
            * (eps.powf(k) / k + 0.5 * q * eps.powf(k + d) / (k + d) + 0.375 * q * q * eps.powf(k + 2.0 * d) / (k + 2.0 * d));
        let oracle = (raw + tail) / std::f64::consts::SQRT_2;
        assert!((c - oracle).abs() / c < 1e-7, "{c} vs {oracle}");
        assert!((c - 7.205_067_407_949_65).abs() / c < 1e-9, "golden {c}");
    }

    #[test]
    fn edge_constant_self_convergence() {
        let delta = 0.9 * delta_max(A, B, 1.0);
        let coarse = QuadratureConfig {
            rel_tol: 1e-8,
            ..QuadratureConfig::default()
        };
        let (c1, _) = edge_constant_with(A, B, 1.0, delta, &coarse).unwrap();
        let (c2, _) = edge_constant_with(A, B, 1.0, delta, &QuadratureConfig::default()).unwrap();
        assert!((c1 - c2).abs() / c2 < 1e-8);
    }

    #[test]
    fn edge_constant_shrinks_with_delta() {
        let s = delta_max(A, B, 1.0);
        let c1 = edge_constant(A, B, 1.0, 0.5 * s).unwrap();
        let c2 = edge_constant(A, B, 1.0, 0.9 * s).unwrap();
        assert!(c1 < c2);
        assert!(edge_constant(A, B, 1.0, 1.1 * s).is_err());
    }

    #[test]
    fn w_endpoints_and_first_integral() {
        let b = barrier(1.0);
        let prof = b.profile_w(400).unwrap();
        assert!((prof.values[0] - b.delta).abs() <= 1e-10);
        let last = prof.len() - 1;
        assert_eq!(prof.values[last] + prof.derivs[last].abs(), 0.0);
        let scale = b.potential(b.delta / 2.0);
        for (&w, &d) in prof.values.iter().zip(&prof.derivs) {
            assert!((0.5 * d * d - b.potential(w)).abs() <= 1e-8 * scale);
        }
        for k in 1..prof.len() - 1 {
            assert!(prof.values[k] < prof.values[k - 1]);
        }
    }

    #[test]
    fn w_matches_direct_ode_integration() {
        let b = barrier(1.0);
        let c = b.edge_constant;
        let lam0 = b.lambda0;
        let sys = move |_r: f64, y: &[f64; 2]| {
            let u = y[0].max(0.0);
            [y[1], u.powf(A) - lam0 * u.powf(B)]
        };
        let ctl = StepControl {
            rtol: 1e-13,
            atol: [1e-16 * b.delta, 1e-16 * b.delta],
            h_init: 1e-6 * c,
            h_max: 1e-2 * c,
            h_min: 1e-20,
        };
        let w0p = b.w_prime_of_value(b.delta);
        let mut ode = Dopri5::new(&sys, 0.0, [b.delta, w0p], ctl);
        let half = 0.5 * c;
        let y = loop {
            let st = ode.step().unwrap();
            if st.t1 >= half {
                break st.interpolate(half).0;
            }
        };
        let w = b.w(half).unwrap();
        assert!((w - y[0]).abs() <= 1e-6 * b.delta, "{w} vs {}", y[0]);
    }

    #[test]
    fn supersolution_properties() {
        let b = barrier(1.0);
        assert_eq!(b.supersolution_v(b.l0).unwrap(), b.delta);
        assert_eq!(b.supersolution_v(b.l1).unwrap(), 0.0);
        assert_eq!(b.supersolution_v(b.l1 + 3.0).unwrap(), 0.0);
        assert!(b.supersolution_v(b.l0 - 0.1).unwrap_err().is_invalid_input());
        // finite-difference radial Laplacian of v against the closed-form residual
        let n = b.dim as f64;
        let h = 1e-3 * b.edge_constant;
        for k in 1..10 {
            let r = b.l0 + b.edge_constant * k as f64 / 20.0;
            let v = |x: f64| b.supersolution_v(x).unwrap();
            let d2 = (v(r + h) - 2.0 * v(r) + v(r - h)) / (h * h);
            let d1 = (v(r + h) - v(r - h)) / (2.0 * h);
            let vr = v(r);
            let lhs = -d2 - (n - 1.0) / r * d1 - (b.lambda0 * vr.powf(B) - vr.powf(A));
            let rhs = b.supersolution_residual(r).unwrap();
            assert!(rhs >= 0.0);
            assert!((lhs - rhs).abs() <= 1e-4 * rhs.max(b.delta), "{lhs} vs {rhs}");
        }
    }
}
