//! Dormand–Prince 5(4) integrator with step-level access for event detection.

use crate::error::{Error, Result};

/// Right-hand side of `y' = f(t, y)` for a state of fixed dimension `D`.
pub trait OdeSystem<const D: usize> {
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D];
}

impl<const D: usize, F> OdeSystem<D> for F
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D] {
        self(t, y)
    }
}

#[derive(Debug, Clone)]
pub struct StepControl<const D: usize> {
    pub rtol: f64,
    pub atol: [f64; D],
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
}

/// One accepted step, with enough data for cubic Hermite interpolation.
#[derive(Debug, Clone, Copy)]
pub struct Step<const D: usize> {
    pub t0: f64,
    pub y0: [f64; D],
    pub f0: [f64; D],
    pub t1: f64,
    pub y1: [f64; D],
    pub f1: [f64; D],
}

impl<const D: usize> Step<D> {
    /// Cubic Hermite value and derivative at `t` in `[t0, t1]`.
    pub fn interpolate(&self, t: f64) -> ([f64; D], [f64; D]) {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s * s - 2.0 * s;
        let mut y = [0.0; D];
        let mut dy = [0.0; D];
        for i in 0..D {
            y[i] = h00 * self.y0[i] + h * h10 * self.f0[i] + h01 * self.y1[i] + h * h11 * self.f1[i];
            dy[i] = (d00 * self.y0[i] + d01 * self.y1[i]) / h + d10 * self.f0[i] + d11 * self.f1[i];
        }
        (y, dy)
    }

    /// Locates `t` in the step where component `idx` of the interpolant crosses `level`.
    /// Assumes a sign change between the endpoints.
    pub fn locate_crossing(&self, idx: usize, level: f64) -> f64 {
        let g = |t: f64| self.interpolate(t).0[idx] - level;
        let (mut a, mut b) = (self.t0, self.t1);
        let mut ga = self.y0[idx] - level;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let gm = g(m);
            if gm == 0.0 {
                return m;
            }
            if (gm > 0.0) == (ga > 0.0) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// b5 - b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince integrator. Advance with [`Dopri5::step`].
pub struct Dopri5<'a, S: OdeSystem<D>, const D: usize> {
    sys: &'a S,
    ctl: StepControl<D>,
    t: f64,
    y: [f64; D],
    f: [f64; D],
    h: f64,
}

impl<'a, S: OdeSystem<D>, const D: usize> Dopri5<'a, S, D> {
    pub fn new(sys: &'a S, t0: f64, y0: [f64; D], ctl: StepControl<D>) -> Self {
        let f = sys.rhs(t0, &y0);
        let h = ctl.h_init.min(ctl.h_max);
        Self {
            sys,
            ctl,
            t: t0,
            y: y0,
            f,
            h,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; D] {
        &self.y
    }

    /// Takes one accepted step (retrying with smaller `h` as needed).
    pub fn step(&mut self) -> Result<Step<D>> {
        loop {
            let h = self.h.min(self.ctl.h_max);
            let mut k = [[0.0; D]; 7];
            k[0] = self.f;
            for s in 1..7 {
                let mut ys = self.y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..D {
                            ys[i] += h * a * kj[i];
                        }
                    }
                }
                k[s] = self.sys.rhs(self.t + C[s] * h, &ys);
                if s == 6 {
                    // FSAL: stage 7 is evaluated at the 5th-order solution
                    let mut err_sq = 0.0;
                    for i in 0..D {
                        let mut e = 0.0;
                        for (st, ks) in k.iter().enumerate() {
                            e += E[st] * ks[i];
                        }
                        let sc = self.ctl.atol[i] + self.ctl.rtol * self.y[i].abs().max(ys[i].abs());
                        err_sq += (h * e / sc).powi(2);
                    }
                    let err = (err_sq / D as f64).sqrt();
                    if !err.is_finite() {
                        self.h = 0.25 * h;
                    } else if err <= 1.0 {
                        let step = Step {
                            t0: self.t,
                            y0: self.y,
                            f0: self.f,
                            t1: self.t + h,
                            y1: ys,
                            f1: k[6],
                        };
                        self.t += h;
                        self.y = ys;
                        self.f = k[6];
                        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                        self.h = h * fac;
                        return Ok(step);
                    } else {
                        self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                    }
                    if self.h < self.ctl.h_min {
                        return Err(Error::StepSizeUnderflow { at: self.t });
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let sys = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let ctl = StepControl {
            rtol: 1e-12,
            atol: [1e-14; 2],
            h_init: 1e-3,
            h_max: 0.1,
            h_min: 1e-14,
        };
        let mut ode = Dopri5::new(&sys, 0.0, [1.0, 0.0], ctl);
        let tend = 2.0 * std::f64::consts::PI;
        let last = loop {
            let st = ode.step().unwrap();
            if st.t1 >= tend {
                break st;
            }
        };
        let (y, _) = last.interpolate(tend);
        assert!((y[0] - 1.0).abs() < 1e-8, "{y:?}");
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn crossing_is_located_inside_a_step() {
        let sys = |_t: f64, y: &[f64; 1]| [-y[0]];
        let ctl = StepControl {
            rtol: 1e-12,
            atol: [1e-14],
            h_init: 0.5,
            h_max: 0.5,
            h_min: 1e-14,
        };
        let mut ode = Dopri5::new(&sys, 0.0, [1.0], ctl);
        loop {
            let st = ode.step().unwrap();
            if st.y1[0] < 0.5 {
                let t = st.locate_crossing(0, 0.5);
                assert!((t - 2f64.ln()).abs() < 1e-8);
                break;
            }
        }
    }
}
