//! Shooting for the radial profile `U″ + (N-1)/r·U′ + λU^β - U^α = 0`,
//! `U(0) = a`, `U′(0) = 0`.
//!
//! Tolerances are relative to the natural scales of a shot: the amplitude
//! `a` and the length `L = a^{(1-α)/2}`.

use serde::{Deserialize, Serialize};

use super::barrier::delta_max;
use super::{ProblemParams, RadialProfile};
use crate::error::{Error, Result};
use crate::numerics::ode::{Dopri5, Step, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    pub rtol: f64,
    /// Event tolerance on `U/a` and `U′·L/a`.
    pub event_tol: f64,
    /// Step-size cap as a multiple of `L`.
    pub h_max_factor: f64,
    /// Integration stops with an error beyond this multiple of `L`.
    pub max_radius_factor: f64,
    /// Relative bisection tolerance on the center value.
    pub center_rtol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            event_tol: 1e-9,
            h_max_factor: 0.05,
            max_radius_factor: 1e3,
            center_rtol: 1e-12,
        }
    }
}

/// Outcome of one shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotOutcome {
    /// `U` reached 0 with `U′ < 0` at `radius`.
    Undershoot { radius: f64, slope: f64 },
    /// `U′` returned to 0 at `radius` with `U = value > 0`.
    Overshoot { radius: f64, value: f64 },
    /// `U` and `U′` vanish together at `radius` within the event tolerance.
    Profile { radius: f64 },
}

impl ShotOutcome {
    pub fn radius(&self) -> f64 {
        match *self {
            ShotOutcome::Undershoot { radius, .. }
            | ShotOutcome::Overshoot { radius, .. }
            | ShotOutcome::Profile { radius } => radius,
        }
    }
}

struct Radial {
    n1: f64,
    lambda: f64,
    alpha: f64,
    beta: f64,
}

impl Radial {
    fn rhs(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        let u = y[0].max(0.0);
        let fr = if r > 0.0 { self.n1 / r * y[1] } else { 0.0 };
        [y[1], -fr - self.lambda * u.powf(self.beta) + u.powf(self.alpha)]
    }
}

fn integrate(p: &ProblemParams, a: f64, opts: &ShootOptions, steps: &mut Vec<Step<2>>) -> Result<ShotOutcome> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter(format!("center value must be positive, got {a}")));
    }
    let n = p.dim as f64;
    let len = a.powf((1.0 - p.alpha) / 2.0);
    let sys = Radial {
        n1: n - 1.0,
        lambda: p.lambda,
        alpha: p.alpha,
        beta: p.beta,
    };
    let rhs = |r: f64, y: &[f64; 2]| sys.rhs(r, y);
    // series start U ≈ a + c r²/2 clears the coordinate singularity at r = 0
    let c = (a.powf(p.alpha) - p.lambda * a.powf(p.beta)) / n;
    let r0 = 1e-6 * len;
    let ctl = StepControl {
        rtol: opts.rtol,
        atol: [1e-4 * opts.rtol * a, 1e-4 * opts.rtol * a / len],
        h_init: 1e-3 * len,
        h_max: opts.h_max_factor * len,
        h_min: 1e-18 * len,
    };
    let mut ode = Dopri5::new(&rhs, r0, [a + 0.5 * c * r0 * r0, c * r0], ctl);
    let r_max = opts.max_radius_factor * len;
    let utol = opts.event_tol * a;
    let dtol = opts.event_tol * a / len;
    loop {
        let st = ode.step()?;
        steps.push(st);
        let hit_zero = st.y1[0] <= 0.0;
        let turn = st.y0[1] < 0.0 && st.y1[1] >= 0.0;
        let t_zero = hit_zero.then(|| st.locate_crossing(0, 0.0));
        let t_turn = turn.then(|| st.locate_crossing(1, 0.0));
        let outcome = match (t_zero, t_turn) {
            (Some(tz), Some(tt)) if tt < tz => Some(turning(&st, tt, utol)),
            (Some(tz), _) => {
                let slope = st.interpolate(tz).1[0];
                Some(if slope.abs() <= dtol {
                    ShotOutcome::Profile { radius: tz }
                } else {
                    ShotOutcome::Undershoot { radius: tz, slope }
                })
            }
            (None, Some(tt)) => Some(turning(&st, tt, utol)),
            (None, None) => None,
        };
        if let Some(o) = outcome {
            return Ok(o);
        }
        if st.t1 > r_max {
            return Err(Error::IntegrationBlowup {
                center_value: a,
                max_radius: r_max,
            });
        }
    }
}

fn turning(st: &Step<2>, t: f64, utol: f64) -> ShotOutcome {
    let value = st.interpolate(t).0[0];
    if value <= utol {
        ShotOutcome::Profile { radius: t }
    } else {
        ShotOutcome::Overshoot { radius: t, value }
    }
}

/// Integrates from center value `a` and classifies the trajectory.
pub fn shoot_flat_hat(p: &ProblemParams, center_value: f64, opts: &ShootOptions) -> Result<ShotOutcome> {
    let mut steps = Vec::new();
    integrate(p, center_value, opts, &mut steps)
}

/// Shot result with the sampled trajectory up to the event radius.
pub fn shoot_with_profile(
    p: &ProblemParams,
    center_value: f64,
    opts: &ShootOptions,
) -> Result<(ShotOutcome, RadialProfile)> {
    let mut steps = Vec::new();
    let outcome = integrate(p, center_value, opts, &mut steps)?;
    let end = outcome.radius();
    let mut grid = vec![0.0];
    let mut values = vec![center_value];
    let mut derivs = vec![0.0];
    for st in &steps {
        if st.t0 > 0.0 && st.t0 < end {
            grid.push(st.t0);
            values.push(st.y0[0].max(0.0));
            derivs.push(st.y0[1]);
        }
    }
    let last = steps.last().expect("at least one step");
    let (y_end, _) = last.interpolate(end);
    grid.push(end);
    match outcome {
        ShotOutcome::Undershoot { slope, .. } => {
            values.push(0.0);
            derivs.push(slope);
        }
        _ => {
            values.push(0.0);
            derivs.push(if matches!(outcome, ShotOutcome::Profile { .. }) { y_end[1].min(0.0) } else { 0.0 });
        }
    }
    Ok((
        outcome,
        RadialProfile {
            grid,
            values,
            derivs,
            support_radius: end,
        },
    ))
}

/// Flat-hat solution found by bisection over the center value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatHat {
    pub lambda: f64,
    pub center_value: f64,
    /// Free-boundary radius `R_λ`.
    pub radius: f64,
    /// `|U(R)|` at the returned radius.
    pub residual_value: f64,
    /// `|U′(R)|` at the returned radius.
    pub residual_slope: f64,
    pub bisection_steps: usize,
}

/// Bisection over the center value between an overshooting and an
/// undershooting shot. `R` is taken from the last overshooting trajectory,
/// whose turning point approaches the free boundary from inside.
pub fn flat_hat(p: &ProblemParams, opts: &ShootOptions) -> Result<FlatHat> {
    let s_star = delta_max(p.alpha, p.beta, p.lambda);
    let is_over = |o: &ShotOutcome| matches!(o, ShotOutcome::Overshoot { .. });
    let is_under = |o: &ShotOutcome| matches!(o, ShotOutcome::Undershoot { .. });
    let mut lo = s_star;
    let mut lo_out = shoot_flat_hat(p, lo, opts)?;
    let mut k = 0;
    while !is_over(&lo_out) {
        if let ShotOutcome::Profile { radius } = lo_out {
            return Ok(profile_hit(p, lo, radius));
        }
        lo *= 0.5;
        lo_out = shoot_flat_hat(p, lo, opts)?;
        k += 1;
        if k > 60 {
            return Err(Error::NoBracket(format!("no overshooting center value below {s_star}")));
        }
    }
    let mut hi = 2.0 * s_star;
    let mut k = 0;
    loop {
        let o = shoot_flat_hat(p, hi, opts)?;
        if is_under(&o) {
            break;
        }
        if is_over(&o) {
            lo = hi;
            lo_out = o;
        }
        hi *= 2.0;
        k += 1;
        if k > 60 {
            return Err(Error::NoBracket(format!("no undershooting center value above {s_star}")));
        }
    }
    let mut steps = 0;
    while hi - lo > opts.center_rtol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let o = shoot_flat_hat(p, mid, opts)?;
        steps += 1;
        match o {
            ShotOutcome::Overshoot { .. } => {
                lo = mid;
                lo_out = o;
            }
            ShotOutcome::Undershoot { .. } => hi = mid,
            ShotOutcome::Profile { radius } => {
                let mut fh = profile_hit(p, mid, radius);
                fh.bisection_steps = steps;
                return Ok(fh);
            }
        }
    }
    let (radius, value) = match lo_out {
        ShotOutcome::Overshoot { radius, value } => (radius, value),
        other => (other.radius(), 0.0),
    };
    Ok(FlatHat {
        lambda: p.lambda,
        center_value: lo,
        radius,
        residual_value: value.abs(),
        residual_slope: 0.0,
        bisection_steps: steps,
    })
}

fn profile_hit(p: &ProblemParams, a: f64, radius: f64) -> FlatHat {
    FlatHat {
        lambda: p.lambda,
        center_value: a,
        radius,
        residual_value: 0.0,
        residual_slope: 0.0,
        bisection_steps: 0,
    }
}

/// The free-boundary radius `R_λ`.
pub fn support_radius_r(p: &ProblemParams, opts: &ShootOptions) -> Result<f64> {
    Ok(flat_hat(p, opts)?.radius)
}

/// Flat-hat solution together with its sampled profile.
pub fn flat_hat_profile(p: &ProblemParams, opts: &ShootOptions) -> Result<(FlatHat, RadialProfile)> {
    let fh = flat_hat(p, opts)?;
    let (_, mut prof) = shoot_with_profile(p, fh.center_value, opts)?;
    prof.support_radius = fh.radius;
    if let Some(last) = prof.grid.last_mut() {
        *last = fh.radius;
    }
    Ok((fh, prof))
}

/// `λ*(R) = λ_ref·(R_ref/R)^{2(β-α)/(1-α)}`.
pub fn lambda_star_for_radius(radius: f64, lambda_ref: f64, radius_ref: f64, alpha: f64, beta: f64) -> f64 {
    lambda_ref * (radius_ref / radius).powf(2.0 * (beta - alpha) / (1.0 - alpha))
}

/// `λ*(R)` from one reference shooting at `p_ref.lambda`.
pub fn lambda_star(p_ref: &ProblemParams, radius: f64, opts: &ShootOptions) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let r_ref = support_radius_r(p_ref, opts)?;
    Ok(lambda_star_for_radius(radius, p_ref.lambda, r_ref, p_ref.alpha, p_ref.beta))
}

/// Positive radial solution of the Dirichlet problem on the ball of radius
/// `ball_radius`, for `λ` above `λ*(ball_radius)`.
///
/// Returns the largest-amplitude branch reached by bisection on the
/// zero-crossing radius between the flat-hat center value and a doubling
/// upper bracket.
pub fn dirichlet_ball_profile(
    p: &ProblemParams,
    ball_radius: f64,
    opts: &ShootOptions,
) -> Result<(f64, RadialProfile)> {
    let fh = flat_hat(p, opts)?;
    if fh.radius >= ball_radius {
        return Err(Error::NoBracket(format!(
            "flat-hat radius {} is not below the ball radius {ball_radius}",
            fh.radius
        )));
    }
    let zero_radius = |a: f64| -> Result<Option<f64>> {
        Ok(match shoot_flat_hat(p, a, opts)? {
            ShotOutcome::Undershoot { radius, .. } => Some(radius),
            _ => None,
        })
    };
    let mut lo = fh.center_value;
    let mut hi = 2.0 * lo;
    let mut k = 0;
    loop {
        match zero_radius(hi)? {
            Some(r) if r > ball_radius => break,
            _ => {
                lo = hi;
                hi *= 2.0;
            }
        }
        k += 1;
        if k > 80 {
            return Err(Error::NoBracket("zero-crossing radius never exceeds the ball radius".into()));
        }
    }
    while hi - lo > opts.center_rtol * hi {
        let mid = 0.5 * (lo + hi);
        match zero_radius(mid)? {
            Some(r) if r > ball_radius => hi = mid,
            _ => lo = mid,
        }
    }
    let (_, prof) = shoot_with_profile(p, hi, opts)?;
    Ok((hi, prof))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64) -> ProblemParams {
        ProblemParams::new(4, 0.1, 0.2, lambda).unwrap()
    }

    #[test]
    fn one_dimensional_flat_hat_is_the_potential_root() {
        for lam in [0.5, 1.0, 3.0] {
            let p = ProblemParams::new(1, 0.1, 0.2, lam).unwrap();
            let fh = flat_hat(&p, &ShootOptions::default()).unwrap();
            let s = delta_max(0.1, 0.2, lam);
            assert!((fh.center_value - s).abs() <= 1e-8 * s, "{} vs {s}", fh.center_value);
        }
    }

    #[test]
    fn below_potential_root_overshoots_with_friction() {
        let p = params(1.0);
        let s = delta_max(0.1, 0.2, 1.0);
        let o = shoot_flat_hat(&p, s - 1e-3, &ShootOptions::default()).unwrap();
        assert!(matches!(o, ShotOutcome::Overshoot { .. }), "{o:?}");
        let o = shoot_flat_hat(&p, 100.0 * s, &ShootOptions::default()).unwrap();
        assert!(matches!(o, ShotOutcome::Undershoot { .. }), "{o:?}");
    }

    #[test]
    fn flat_hat_residuals_small() {
        let fh = flat_hat(&params(1.0), &ShootOptions::default()).unwrap();
        assert!(fh.residual_value <= 1e-9, "{fh:?}");
        assert!((fh.radius - 20.4755).abs() < 1e-3, "{fh:?}");
        assert!((fh.center_value - 9.3512).abs() < 1e-3, "{fh:?}");
    }

    #[test]
    fn radius_stable_under_step_cap_halving() {
        let o1 = ShootOptions::default();
        let o2 = ShootOptions {
            h_max_factor: 0.5 * o1.h_max_factor,
            ..o1
        };
        let p = params(1.0);
        let r1 = support_radius_r(&p, &o1).unwrap();
        let r2 = support_radius_r(&p, &o2).unwrap();
        assert!((r1 - r2).abs() <= 1e-6 * r1, "{r1} {r2}");
    }

    #[test]
    fn lambda_star_identity_and_monotone() {
        assert_eq!(lambda_star_for_radius(2.0, 3.0, 2.0, 0.1, 0.2), 3.0);
        let l: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&r| lambda_star_for_radius(r, 1.0, 1.0, 0.1, 0.2)).collect();
        assert!(l[0] > l[1] && l[1] > l[2]);
    }

    #[test]
    fn profile_is_decreasing_and_zero_at_radius() {
        let (fh, prof) = flat_hat_profile(&params(1.0), &ShootOptions::default()).unwrap();
        assert_eq!(prof.eval(fh.radius), 0.0);
        assert!((prof.eval(0.0) - fh.center_value).abs() < 1e-12);
        for w in prof.values.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
