//! One-dimensional constructions: problem parameters, the barrier profile
//! `w` and its shifted supersolution, and flat-hat shooting with the
//! scaling law for the extinction threshold.

pub mod barrier;
pub mod shooting;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::num;

/// Exponents, dimension and bifurcation parameter of
/// `-Δu = λ|u|^{β-1}u - |u|^{α-1}u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl ProblemParams {
    /// Validates `0 < α < β < 1`, `λ > 0` and `dim ≥ 1`.
    pub fn new(dim: usize, alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            dim,
            alpha,
            beta,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok_exp = |x: f64| x.is_finite() && x > 0.0 && x < 1.0;
        if !ok_exp(self.alpha) || !ok_exp(self.beta) {
            return Err(Error::InvalidParameter(format!(
                "exponents must lie in (0,1), got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if self.alpha >= self.beta {
            return Err(Error::InvalidParameter(format!(
                "need alpha < beta, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    /// `2(1+α)(1+β) - N(1-α)(1-β)`; negative in the admissible range.
    pub fn admissibility_margin(&self) -> f64 {
        let (a, b, n) = (self.alpha, self.beta, self.dim as f64);
        2.0 * (1.0 + a) * (1.0 + b) - n * (1.0 - a) * (1.0 - b)
    }

    pub fn admissible(&self) -> bool {
        self.dim >= 3 && self.admissibility_margin() < 0.0
    }

    /// Exponent `k` in `R_λ ∝ λ^{-k}`.
    pub fn scaling_exponent(&self) -> f64 {
        (1.0 - self.alpha) / (2.0 * (self.beta - self.alpha))
    }

    /// The reaction term `λ|u|^{β-1}u - |u|^{α-1}u`.
    pub fn reaction(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return 0.0;
        }
        u.signum() * (self.lambda * a.powf(self.beta) - a.powf(self.alpha))
    }
}

/// Validates the parameters and reports admissibility.
pub fn admissibility_check(p: &ProblemParams) -> Result<bool> {
    p.validate()?;
    Ok(p.admissible())
}

/// A sampled nonnegative radial function with its derivative.
///
/// Evaluation between samples uses cubic Hermite interpolation built from
/// the stored derivatives; beyond `support_radius` the profile is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub support_radius: f64,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Value and derivative at `r ≥ 0`.
    pub fn eval_with_deriv(&self, r: f64) -> (f64, f64) {
        if r >= self.support_radius || self.grid.is_empty() {
            return (0.0, 0.0);
        }
        let g = &self.grid;
        if r <= g[0] {
            return (self.values[0], self.derivs[0]);
        }
        let last = g.len() - 1;
        if r >= g[last] {
            return (self.values[last], self.derivs[last]);
        }
        let i = g.partition_point(|&x| x <= r) - 1;
        let (x0, x1) = (g[i], g[i + 1]);
        let h = x1 - x0;
        let s = (r - x0) / h;
        let (y0, y1, d0, d1) = (self.values[i], self.values[i + 1], self.derivs[i], self.derivs[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let v = h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1;
        let dv = (6.0 * s * s - 6.0 * s) * (y0 - y1) / h + (3.0 * s * s - 4.0 * s + 1.0) * d0 + (3.0 * s * s - 2.0 * s) * d1;
        (v.max(0.0), dv)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_deriv(r).0
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with header `r,w,w_prime`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,w,w_prime\n");
        for i in 0..self.grid.len() {
            s.push_str(&format!("{},{},{}\n", num(self.grid[i]), num(self.values[i]), num(self.derivs[i])));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_examples() {
        let p = |n, a, b| ProblemParams::new(n, a, b, 1.0).unwrap();
        assert!(admissibility_check(&p(3, 0.05, 0.10)).unwrap());
        assert!(!admissibility_check(&p(3, 0.5, 0.7)).unwrap());
        assert!(admissibility_check(&p(4, 0.1, 0.2)).unwrap());
        assert!(!p(2, 0.01, 0.02).admissible());
    }

    #[test]
    fn invalid_exponents_rejected() {
        for (a, b) in [(0.2, 0.1), (0.2, 0.2), (0.0, 0.5), (0.5, 1.0), (-0.1, 0.5)] {
            let e = ProblemParams::new(4, a, b, 1.0).unwrap_err();
            assert!(e.is_invalid_input());
        }
        assert!(ProblemParams::new(4, 0.1, 0.2, 0.0).is_err());
    }

    #[test]
    fn hermite_profile_reproduces_cubic() {
        let f = |r: f64| 1.0 + r - r * r + 0.5 * r * r * r;
        let df = |r: f64| 1.0 - 2.0 * r + 1.5 * r * r;
        let grid = vec![0.0, 0.3, 0.5, 1.0];
        let p = RadialProfile {
            values: grid.iter().map(|&r| f(r)).collect(),
            derivs: grid.iter().map(|&r| df(r)).collect(),
            grid,
            support_radius: 2.0,
        };
        for r in [0.1, 0.4, 0.77] {
            let (v, d) = p.eval_with_deriv(r);
            assert!((v - f(r)).abs() < 1e-14);
            assert!((d - df(r)).abs() < 1e-13);
        }
        assert_eq!(p.eval(2.5), 0.0);
    }
}
