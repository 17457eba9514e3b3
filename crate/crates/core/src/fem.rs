//! Weighted P1 finite elements for the N-dimensional Laplacian of an
//! axisymmetric function, written in meridian coordinates:
//! `∫_Ω ∇u·∇φ dx = σ_{N-2} ∫∫ ∇u·∇φ ρ^{N-2} dρ dz`.
//!
//! The weight is sampled at the three edge midpoints of each triangle
//! (exact for quadratic weights, so for `N ≤ 4`). Zeroth-order terms use the
//! row-summed (lumped) weighted mass, which keeps the discrete equation the
//! gradient of the discrete energy.

use rayon::prelude::*;

use crate::mesh::Mesh;
use crate::numerics::sparse::{dot, Csr};
use crate::radial::{ProblemParams, RadialProfile};

/// Area of the unit `k`-sphere, `2π^{(k+1)/2}/Γ((k+1)/2)`.
pub fn sphere_area(k: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf((k as f64 + 1.0) / 2.0) / gamma_half(k + 1)
}

/// `Γ(n/2)` for a positive integer `n`.
fn gamma_half(n: usize) -> f64 {
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while x + 0.5 < n as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit `N`-ball.
pub fn unit_ball_volume(dim: usize) -> f64 {
    std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half(dim + 2)
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub dim: usize,
    /// `σ_{N-2}`; multiplies every reported integral.
    pub sigma: f64,
    /// Weighted stiffness without `σ`, all vertices.
    pub stiffness: Csr,
    /// Weighted lumped mass without `σ`.
    pub mass: Vec<f64>,
    /// Weighted lumped boundary mass without `σ`; zero off the curve.
    pub boundary_mass: Vec<f64>,
    /// Complement of the Dirichlet mask.
    pub free: Vec<bool>,
}

fn weight(rho: f64, dim: usize) -> f64 {
    rho.max(0.0).powi(dim as i32 - 2)
}

/// Element stiffness and lumped mass of one triangle.
fn element(p: [[f64; 2]; 3], dim: usize) -> ([[f64; 3]; 3], [f64; 3]) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    // midpoints of edges 01, 12, 20
    let w = [0, 1, 2].map(|k| weight(0.5 * (p[k][0] + p[(k + 1) % 3][0]), dim));
    let wbar = (w[0] + w[1] + w[2]) / 3.0;
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = wbar * (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    // vertex i touches midpoints i (edge i,i+1) and i+2 (edge i+2,i) with φ = 1/2
    let m = [0, 1, 2].map(|i| area / 3.0 * 0.5 * (w[i] + w[(i + 2) % 3]));
    (k, m)
}

/// Assembles the weighted structures on `mesh` for dimension `dim ≥ 2`.
pub fn assemble(mesh: &Mesh, dim: usize) -> Assembly {
    let n = mesh.n_vertices();
    let local: Vec<_> = mesh
        .triangles
        .par_iter()
        .map(|t| element(t.map(|v| mesh.vertices[v]), dim))
        .collect();
    let mut trip = Vec::with_capacity(9 * local.len());
    let mut mass = vec![0.0; n];
    for (t, (k, m)) in mesh.triangles.iter().zip(&local) {
        for i in 0..3 {
            mass[t[i]] += m[i];
            for j in 0..3 {
                trip.push((t[i], t[j], k[i][j]));
            }
        }
    }
    let mut boundary_mass = vec![0.0; n];
    for e in &mesh.boundary_edges {
        let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let wm = weight(0.5 * (a[0] + b[0]), dim);
        // Simpson on φ·w
        boundary_mass[e.v[0]] += len / 6.0 * (weight(a[0], dim) + 2.0 * wm);
        boundary_mass[e.v[1]] += len / 6.0 * (weight(b[0], dim) + 2.0 * wm);
    }
    Assembly {
        dim,
        sigma: sphere_area(dim - 2),
        stiffness: Csr::from_triplets(n, trip),
        mass,
        boundary_mass,
        free: mesh.dirichlet.iter().map(|&d| !d).collect(),
    }
}

impl Assembly {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    /// `∫_Ω |∇u|² dx`.
    pub fn dirichlet_integral(&self, u: &[f64]) -> f64 {
        self.sigma * dot(u, &self.stiffness.mul(u))
    }

    /// `∫_Ω g(u) dx` with lumped quadrature.
    pub fn integral<G: Fn(f64) -> f64>(&self, u: &[f64], g: G) -> f64 {
        self.sigma * self.mass.iter().zip(u).map(|(m, &x)| m * g(x)).sum::<f64>()
    }

    pub fn volume(&self) -> f64 {
        self.sigma * self.mass.iter().sum::<f64>()
    }

    /// Discrete `L²` norm.
    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.integral(u, |x| x * x).sqrt()
    }

    /// `E_λ(u) = ½∫|∇u|² - λ/(β+1)∫|u|^{β+1} + 1/(α+1)∫|u|^{α+1}`.
    pub fn energy(&self, u: &[f64], p: &ProblemParams) -> f64 {
        let (a, b, l) = (p.alpha, p.beta, p.lambda);
        0.5 * self.dirichlet_integral(u)
            + self.integral(u, |x| {
                let s = x.abs();
                s.powf(a + 1.0) / (a + 1.0) - l * s.powf(b + 1.0) / (b + 1.0)
            })
    }

    /// Residual `K u - M f(u)` of the discrete equation, without `σ`.
    pub fn residual<F: Fn(f64) -> f64 + Sync>(&self, u: &[f64], f: F) -> Vec<f64> {
        let mut r = self.stiffness.mul(u);
        r.par_iter_mut()
            .zip(self.mass.par_iter().zip(u.par_iter()))
            .for_each(|(ri, (m, &x))| *ri -= m * f(x));
        r
    }

    /// Nodal normal derivative on the curve by variational recovery: the
    /// weak-form residual at a boundary vertex equals `∫ ∂_ν u φ_i ρ^{N-2} ds`,
    /// divided here by the lumped boundary mass. Zero off the curve.
    pub fn nodal_flux<F: Fn(f64) -> f64 + Sync>(&self, u: &[f64], f: F) -> Vec<f64> {
        let r = self.residual(u, f);
        (0..self.n())
            .map(|i| if self.free[i] || self.boundary_mass[i] <= 0.0 { 0.0 } else { r[i] / self.boundary_mass[i] })
            .collect()
    }
}

/// Nodal interpolant of a radial profile centred at `(0, center_z)`.
pub fn transplant(mesh: &Mesh, profile: &RadialProfile, center_z: f64) -> Vec<f64> {
    mesh.vertices
        .iter()
        .zip(&mesh.dirichlet)
        .map(|(p, &d)| if d { 0.0 } else { profile.eval(p[0].hypot(p[1] - center_z)) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MeridianDomain;
    use crate::mesh::mesh_meridian;
    use crate::numerics::sparse::{pcg, Ic0};

    fn ball(h: f64) -> (Mesh, Assembly) {
        let d = MeridianDomain::ball(1.0).unwrap();
        let m = mesh_meridian(&d, h).unwrap();
        let a = assemble(&m, 4);
        (m, a)
    }

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area(0) - 2.0).abs() < 1e-15);
        assert!((sphere_area(1) - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * pi).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * pi * pi).abs() < 1e-13);
        assert!((unit_ball_volume(4) - pi * pi / 2.0).abs() < 1e-13);
        assert!((unit_ball_volume(3) - 4.0 * pi / 3.0).abs() < 1e-13);
    }

    #[test]
    fn constant_field_has_no_stiffness() {
        let (_, a) = ball(0.1);
        let r = a.stiffness.mul(&vec![1.0; a.n()]);
        assert!(r.iter().all(|x| x.abs() < 1e-12));
        assert!(a.stiffness.is_symmetric(1e-14));
    }

    #[test]
    fn weighted_volume_matches_unit_ball() {
        let (_, a) = ball(0.02);
        let v = unit_ball_volume(4);
        assert!((a.volume() - v).abs() / v < 5e-3, "{} vs {v}", a.volume());
    }

    #[test]
    fn masked_stiffness_is_positive_definite() {
        let (_, a) = ball(0.1);
        let (kf, _) = a.stiffness.submatrix(&a.free);
        let pre = Ic0::new(&kf);
        // inverse iteration for the smallest eigenvalue
        let n = kf.n;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
        let mut mu = 0.0;
        for _ in 0..30 {
            let nx = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= nx);
            let mut y = vec![0.0; n];
            assert!(pcg(&kf, &x, &mut y, &pre, 1e-12, 2000).converged);
            mu = dot(&x, &y);
            x = y;
        }
        assert!(mu > 0.0 && (1.0 / mu).is_finite());
        // semidefinite before masking: the constant is in the kernel, nothing below
        let ones = vec![1.0; a.n()];
        assert!(dot(&ones, &a.stiffness.mul(&ones)).abs() < 1e-10);
    }

    #[test]
    fn quadratic_energy_converges() {
        // u = 1 - |x|²: ∫|∇u|² = 4 ∫ r² dx = 4 σ_{N-1}/(N+2)
        let exact = 4.0 * sphere_area(3) / 6.0;
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let (m, a) = ball(h);
            let u: Vec<f64> = m.vertices.iter().map(|p| 1.0 - p[0] * p[0] - p[1] * p[1]).collect();
            errs.push((a.dirichlet_integral(&u) - exact).abs());
        }
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    /// Galerkin solution of `-Δu = 2N` with zero boundary values.
    fn poisson(m: &Mesh, a: &Assembly, f: f64) -> Vec<f64> {
        let (kf, idx) = a.stiffness.submatrix(&a.free);
        let b: Vec<f64> = idx.iter().map(|&i| f * a.mass[i]).collect();
        let mut x = vec![0.0; kf.n];
        assert!(pcg(&kf, &b, &mut x, &Ic0::new(&kf), 1e-13, 5000).converged);
        let mut u = vec![0.0; m.n_vertices()];
        for (k, &i) in idx.iter().enumerate() {
            u[i] = x[k];
        }
        u
    }

    #[test]
    fn manufactured_flux() {
        // u = 1 - |x|² solves -Δu = 2N with ∂_ν u = -2 on the unit sphere
        let hs = [0.08, 0.04, 0.02];
        let mut errs = Vec::new();
        let mut worst = 0.0f64;
        for h in hs {
            let (m, a) = ball(h);
            let u = poisson(&m, &a, 8.0);
            let g = a.nodal_flux(&u, |_| 8.0);
            let (mut num, mut den) = (0.0, 0.0);
            for e in &m.boundary_edges {
                let err = 0.5 * (g[e.v[0]] + g[e.v[1]]) + 2.0;
                let rho = 0.5 * (m.vertices[e.v[0]][0] + m.vertices[e.v[1]][0]);
                let w = (e.s[1] - e.s[0]) * rho * rho;
                num += err * err * w;
                den += w;
                if h == 0.02 {
                    worst = worst.max(err.abs());
                }
            }
            errs.push((num / den).sqrt());
        }
        // least-squares slope of log error against log h
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
        assert!(slope >= 1.0, "order {slope}, errors {errs:?}");
        assert!(worst < 0.05, "max error {worst}");
    }

    #[test]
    fn zero_field_zero_flux_and_energy() {
        let (_, a) = ball(0.1);
        let p = ProblemParams::new(4, 0.1, 0.2, 2.0).unwrap();
        let u = vec![0.0; a.n()];
        assert_eq!(a.energy(&u, &p), 0.0);
        assert!(a.nodal_flux(&u, |x| p.reaction(x)).iter().all(|&g| g == 0.0));
    }
}
