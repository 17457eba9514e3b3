//! Axisymmetric star-shaped domains in the meridian half-plane `{(ρ, z): ρ ≥ 0}`.
//!
//! The boundary runs from the top pole on the axis down to the bottom pole
//! as a chain of parametric segments, each returning position and two
//! derivatives. The outward normal is `(-T_z, T_ρ)/|T|` for the tangent `T`.
//!
//! The dumbbell is the unit ball joined to a cylinder of radius `r` along
//! `+z` with its top pole at height `l_total`. From the top:
//! - cap: polar about `(0, l_total - r)`, radius `r` near the pole, blended
//!   into the cylinder `r/sin φ` by a quintic smoothstep on `[π/4, 3π/4]`;
//! - cylinder: straight side `ρ = r`;
//! - fillet: polar about the origin, `1 + φ(g(θ))` with `g = r/sin θ - 1`
//!   and `φ` a C² smooth maximum of `0` and `g` that equals `0` for
//!   `g ≤ -a` and `g` for `g ≥ a`, so the fillet only adds material outside
//!   the ball and the cylinder;
//! - ball: unit circle.
//!
//! Every joint matches position and two derivatives, hence curvature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::num;
use crate::numerics::quadrature::GaussLegendre;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentTag {
    Ball,
    Fillet,
    Cylinder,
    Cap,
}

impl SegmentTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentTag::Ball => "ball",
            SegmentTag::Fillet => "fillet",
            SegmentTag::Cylinder => "cylinder",
            SegmentTag::Cap => "cap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ball" => SegmentTag::Ball,
            "fillet" => SegmentTag::Fillet,
            "cylinder" => SegmentTag::Cylinder,
            "cap" => SegmentTag::Cap,
            _ => return None,
        })
    }
}

/// Quintic smoothstep `S(s) = 10s³ - 15s⁴ + 6s⁵` with two derivatives.
fn smoothstep(s: f64) -> [f64; 3] {
    let s = s.clamp(0.0, 1.0);
    let s2 = s * s;
    [
        s2 * s * (10.0 - 15.0 * s + 6.0 * s2),
        30.0 * s2 * (1.0 - s) * (1.0 - s),
        60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
    ]
}

/// Radial function of a polar segment.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Radial {
    Const(f64),
    /// `base + S(σ)(r_cyl/sin φ - base)`, `σ = (φ - from)/(to - from)`;
    /// `S = 1` on the cylinder side.
    Blend { base: f64, r_cyl: f64, from: f64, to: f64 },
    /// `1 + φ(r_cyl/sin θ - 1)` with the smooth maximum `φ` of half-width `a`.
    SmoothMax { r_cyl: f64, a: f64 },
}

/// C² smooth maximum of `0` and `x`: `φ″` is the bump `(15/16a)(1-u²)²`,
/// `u = x/a`, with zero mean, so `φ = 0` for `x ≤ -a` and `φ = x` for `x ≥ a`.
fn smooth_max(x: f64, a: f64) -> [f64; 3] {
    if x <= -a {
        return [0.0, 0.0, 0.0];
    }
    if x >= a {
        return [x, 1.0, 0.0];
    }
    let u = x / a;
    let (u2, u4) = (u * u, u * u * u * u);
    let v = a * (0.5 * (u + 1.0) + 15.0 / 16.0 * ((u2 - 1.0) / 2.0 - (u4 - 1.0) / 6.0 + (u4 * u2 - 1.0) / 30.0));
    let d = 0.5 + 15.0 / 16.0 * (u - 2.0 * u2 * u / 3.0 + u4 * u / 5.0);
    let dd = 15.0 / 16.0 * (1.0 - u2) * (1.0 - u2) / a;
    [v, d, dd]
}

impl Radial {
    fn eval(&self, phi: f64) -> [f64; 3] {
        match *self {
            Radial::Const(r) => [r, 0.0, 0.0],
            Radial::Blend { base, r_cyl, from, to } => {
                let span = to - from;
                let sigma = (phi - from) / span;
                if sigma <= 0.0 {
                    return [base, 0.0, 0.0];
                }
                let sm = smoothstep(sigma);
                let s = [sm[0], sm[1] / span, sm[2] / (span * span)];
                let csc = 1.0 / phi.sin();
                let cot = phi.cos() * csc;
                let g = [r_cyl * csc - base, -r_cyl * csc * cot, r_cyl * csc * (cot * cot + csc * csc)];
                [
                    base + s[0] * g[0],
                    s[1] * g[0] + s[0] * g[1],
                    s[2] * g[0] + 2.0 * s[1] * g[1] + s[0] * g[2],
                ]
            }
            Radial::SmoothMax { r_cyl, a } => {
                let csc = 1.0 / phi.sin();
                let cot = phi.cos() * csc;
                let g = [r_cyl * csc - 1.0, -r_cyl * csc * cot, r_cyl * csc * (cot * cot + csc * csc)];
                let f = smooth_max(g[0], a);
                [1.0 + f[0], f[1] * g[1], f[2] * g[1] * g[1] + f[1] * g[2]]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Geom {
    /// `P = (0, center_z) + R(φ)(sin φ, cos φ)`.
    Polar { center_z: f64, radial: Radial },
    /// `P = (rho, z_top - t)`.
    Side { rho: f64, z_top: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    tag: SegmentTag,
    geom: Geom,
    t0: f64,
    t1: f64,
}

impl Segment {
    /// Position, first and second parameter derivatives.
    fn eval(&self, t: f64) -> [[f64; 2]; 3] {
        match self.geom {
            Geom::Polar { center_z, radial } => {
                let [r, dr, ddr] = radial.eval(t);
                let (s, c) = t.sin_cos();
                [
                    [r * s, center_z + r * c],
                    [dr * s + r * c, dr * c - r * s],
                    [ddr * s + 2.0 * dr * c - r * s, ddr * c - 2.0 * dr * s - r * c],
                ]
            }
            Geom::Side { rho, z_top } => [[rho, z_top - t], [0.0, -1.0], [0.0, 0.0]],
        }
    }

    fn speed(&self, t: f64) -> f64 {
        let d = self.eval(t)[1];
        d[0].hypot(d[1])
    }
}

fn curvature_of(e: [[f64; 2]; 3]) -> f64 {
    let [_, d, dd] = e;
    -(d[0] * dd[1] - d[1] * dd[0]) / d[0].hypot(d[1]).powi(3)
}

/// Domain parameters as recorded in manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainShape {
    Ball { radius: f64 },
    Dumbbell { r_cyl: f64, l_total: f64, fillet_length: f64 },
}

/// Axisymmetric domain star-shaped about the origin, with a parametric boundary.
#[derive(Debug, Clone)]
pub struct MeridianDomain {
    pub shape: DomainShape,
    segments: Vec<Segment>,
    /// Cumulative arc length at the start of each segment, plus the total.
    arc_start: Vec<f64>,
    /// Dense `(θ, segment, t)` table for angle lookups, θ ascending.
    angle_table: Vec<(f64, usize, f64)>,
    rule: GaussLegendre,
}

/// A boundary point with its exact outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub arc_length: f64,
    pub position: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
    pub tag: SegmentTag,
}

impl BoundarySample {
    pub fn x_dot_nu(&self) -> f64 {
        self.position[0] * self.normal[0] + self.position[1] * self.normal[1]
    }

    pub fn radius(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }
}

const ARC_PANELS: usize = 48;

impl MeridianDomain {
    /// Ball of the given radius centred at the origin.
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self::assemble(
            DomainShape::Ball { radius },
            vec![Segment {
                tag: SegmentTag::Ball,
                geom: Geom::Polar {
                    center_z: 0.0,
                    radial: Radial::Const(radius),
                },
                t0: 0.0,
                t1: PI,
            }],
        ))
    }

    /// Unit ball with a filleted, capped cylinder of radius `r_cyl` reaching
    /// height `l_total`. Geometry only; [`build_domain`] certifies it.
    pub fn dumbbell(r_cyl: f64, l_total: f64, fillet_length: f64) -> Result<Self> {
        if !(r_cyl > 0.0 && r_cyl <= 0.9) {
            return Err(Error::InvalidParameter(format!("r_cyl must lie in (0, 0.9], got {r_cyl}")));
        }
        if !(fillet_length > 0.0 && fillet_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fillet_length must be positive, got {fillet_length}"
            )));
        }
        let z_join = (1.0 - r_cyl * r_cyl).sqrt();
        let z_fillet = z_join + fillet_length;
        let cap_center = l_total - r_cyl;
        let (phi1, phi2) = (0.25 * PI, 0.75 * PI);
        // lowest cap point sits on the cylinder at φ = 3π/4
        let z_cap = cap_center + r_cyl * phi2.cos() / phi2.sin();
        if !(l_total.is_finite() && z_cap > z_fillet) {
            return Err(Error::InvalidParameter(format!(
                "l_total = {l_total} leaves no straight cylinder between the fillet (z = {z_fillet}) and the cap (z = {z_cap})"
            )));
        }
        // g = a where the fillet leaves the cylinder, g = -a where it meets the ball
        let a = r_cyl.hypot(z_fillet) - 1.0;
        if a >= 1.0 - r_cyl {
            return Err(Error::InvalidParameter(format!(
                "fillet_length = {fillet_length} is too long for r_cyl = {r_cyl}"
            )));
        }
        let theta_fillet = (r_cyl / (1.0 + a)).asin();
        let theta_ball = (r_cyl / (1.0 - a)).asin();
        let segments = vec![
            Segment {
                tag: SegmentTag::Cap,
                geom: Geom::Polar {
                    center_z: cap_center,
                    radial: Radial::Blend {
                        base: r_cyl,
                        r_cyl,
                        from: phi1,
                        to: phi2,
                    },
                },
                t0: 0.0,
                t1: phi2,
            },
            Segment {
                tag: SegmentTag::Cylinder,
                geom: Geom::Side { rho: r_cyl, z_top: z_cap },
                t0: 0.0,
                t1: z_cap - z_fillet,
            },
            Segment {
                tag: SegmentTag::Fillet,
                geom: Geom::Polar {
                    center_z: 0.0,
                    radial: Radial::SmoothMax { r_cyl, a },
                },
                t0: theta_fillet,
                t1: theta_ball,
            },
            Segment {
                tag: SegmentTag::Ball,
                geom: Geom::Polar {
                    center_z: 0.0,
                    radial: Radial::Const(1.0),
                },
                t0: theta_ball,
                t1: PI,
            },
        ];
        Ok(Self::assemble(
            DomainShape::Dumbbell {
                r_cyl,
                l_total,
                fillet_length,
            },
            segments,
        ))
    }

    pub fn from_shape(shape: &DomainShape) -> Result<Self> {
        match *shape {
            DomainShape::Ball { radius } => Self::ball(radius),
            DomainShape::Dumbbell {
                r_cyl,
                l_total,
                fillet_length,
            } => Self::dumbbell(r_cyl, l_total, fillet_length),
        }
    }

    fn assemble(shape: DomainShape, segments: Vec<Segment>) -> Self {
        let mut d = Self {
            shape,
            segments,
            arc_start: Vec::new(),
            angle_table: Vec::new(),
            rule: GaussLegendre::new(16),
        };
        let mut acc = vec![0.0];
        for (k, seg) in d.segments.iter().enumerate() {
            acc.push(acc[k] + d.arc_within(seg, seg.t1));
        }
        d.arc_start = acc;
        let mut table = Vec::new();
        for (k, seg) in d.segments.iter().enumerate() {
            let m = 512;
            for i in 0..m {
                let t = seg.t0 + (seg.t1 - seg.t0) * i as f64 / m as f64;
                let p = seg.eval(t)[0];
                table.push((p[0].atan2(p[1]), k, t));
            }
        }
        let last = d.segments.len() - 1;
        table.push((PI, last, d.segments[last].t1));
        d.angle_table = table;
        d
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.shape, DomainShape::Ball { .. })
    }

    fn arc_within(&self, seg: &Segment, t: f64) -> f64 {
        if t <= seg.t0 {
            return 0.0;
        }
        if let Geom::Side { .. } = seg.geom {
            return t - seg.t0;
        }
        let n = ARC_PANELS;
        let mut s = 0.0;
        for i in 0..n {
            let a = seg.t0 + (t - seg.t0) * i as f64 / n as f64;
            let b = seg.t0 + (t - seg.t0) * (i + 1) as f64 / n as f64;
            s += self.rule.integrate(|x| seg.speed(x), a, b);
        }
        s
    }

    pub fn total_length(&self) -> f64 {
        *self.arc_start.last().expect("nonempty")
    }

    /// Per-segment lengths in boundary order.
    pub fn segment_lengths(&self) -> Vec<(SegmentTag, f64)> {
        self.segments
            .iter()
            .enumerate()
            .map(|(k, s)| (s.tag, self.arc_start[k + 1] - self.arc_start[k]))
            .collect()
    }

    /// Segment index and parameter at arc length `s` (measured from the top pole).
    fn locate_arc(&self, s: f64) -> (usize, f64) {
        let total = self.total_length();
        let s = s.clamp(0.0, total);
        let n = self.segments.len();
        let k = (self.arc_start.partition_point(|&a| a <= s).max(1) - 1).min(n - 1);
        let seg = &self.segments[k];
        let target = s - self.arc_start[k];
        let len = self.arc_start[k + 1] - self.arc_start[k];
        let (mut lo, mut hi) = (seg.t0, seg.t1);
        let mut t = seg.t0 + (seg.t1 - seg.t0) * (target / len).clamp(0.0, 1.0);
        for _ in 0..100 {
            let g = self.arc_within(seg, t) - target;
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let next = t - g / seg.speed(t);
            let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) || hi - lo <= 1e-15 {
                return (k, next);
            }
            t = next;
        }
        (k, t)
    }

    fn sample_on(&self, k: usize, t: f64) -> BoundarySample {
        let seg = &self.segments[k];
        let e = seg.eval(t);
        let [p, d, _] = e;
        let len = d[0].hypot(d[1]);
        BoundarySample {
            arc_length: self.arc_start[k] + self.arc_within(seg, t),
            position: p,
            normal: [-d[1] / len, d[0] / len],
            curvature: curvature_of(e),
            tag: seg.tag,
        }
    }

    pub fn sample_at_arc(&self, s: f64) -> BoundarySample {
        let (k, t) = self.locate_arc(s);
        let mut out = self.sample_on(k, t);
        out.arc_length = s.clamp(0.0, self.total_length());
        out
    }

    /// `n` samples uniform in arc length, both poles included.
    pub fn boundary_samples(&self, n: usize) -> Vec<BoundarySample> {
        let n = n.max(2);
        let total = self.total_length();
        (0..n)
            .map(|i| self.sample_at_arc(total * i as f64 / (n - 1) as f64))
            .collect()
    }

    /// Boundary point on the ray from the origin at polar angle `θ ∈ [0, π]`
    /// (measured from `+z`). Unique because the domain is star-shaped.
    pub fn boundary_at_angle(&self, theta: f64) -> BoundarySample {
        let theta = theta.clamp(0.0, PI);
        let tab = &self.angle_table;
        let i = tab.partition_point(|e| e.0 <= theta).clamp(1, tab.len() - 1);
        let (a, b) = (tab[i - 1], tab[i]);
        let k = a.1;
        let seg = &self.segments[k];
        let (mut lo, mut hi) = (a.2, if b.1 == k { b.2 } else { seg.t1 });
        let ang = |t: f64| {
            let p = seg.eval(t)[0];
            p[0].atan2(p[1])
        };
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if ang(m) <= theta {
                lo = m;
            } else {
                hi = m;
            }
        }
        self.sample_on(k, 0.5 * (lo + hi))
    }

    /// Strict interior test by the radial ray from the origin; boundary points
    /// count as outside.
    pub fn contains(&self, rho: f64, z: f64) -> bool {
        if rho < 0.0 {
            return false;
        }
        let r = rho.hypot(z);
        if r == 0.0 {
            return true;
        }
        r < self.boundary_at_angle(rho.atan2(z)).radius()
    }

    /// Bounding box `(ρ_max, z_min, z_max)` of the meridian region.
    pub fn bounding_box(&self) -> (f64, f64, f64) {
        match self.shape {
            DomainShape::Ball { radius } => (radius, -radius, radius),
            DomainShape::Dumbbell { l_total, .. } => (1.0, -1.0, l_total),
        }
    }

    /// Polyline through boundary points roughly `spacing` apart.
    pub fn polyline(&self, spacing: f64) -> Vec<[f64; 2]> {
        let n = ((self.total_length() / spacing).ceil() as usize).max(16) + 1;
        self.boundary_samples(n).iter().map(|s| s.position).collect()
    }

    /// Largest inscribed ball by brute-force distance transform on a grid of
    /// spacing `grid_h` covering the meridian bounding box, axis included.
    /// In the meridian plane the distance to the curve equals the
    /// N-dimensional distance to the surface of revolution.
    pub fn inradius(&self, grid_h: f64) -> f64 {
        let poly = self.polyline(0.25 * grid_h);
        let (rmax, zmin, zmax) = self.bounding_box();
        let nr = (rmax / grid_h).ceil() as usize;
        let nz = ((zmax - zmin) / grid_h).ceil() as usize;
        let mut best = 0.0f64;
        for i in 0..=nr {
            let rho = i as f64 * grid_h;
            for j in 0..=nz {
                let z = zmin + j as f64 * grid_h;
                if self.contains(rho, z) {
                    best = best.max(distance_to_polyline(&poly, [rho, z]));
                }
            }
        }
        best
    }

    /// `(arc length, |κ_left - κ_right|)` at each segment joint.
    pub fn curvature_jumps(&self) -> Vec<(f64, f64)> {
        (1..self.segments.len())
            .map(|k| {
                let a = &self.segments[k - 1];
                let b = &self.segments[k];
                let jump = (curvature_of(a.eval(a.t1)) - curvature_of(b.eval(b.t0))).abs();
                (self.arc_start[k], jump)
            })
            .collect()
    }

    /// Largest position mismatch and tangent-direction mismatch over the joints.
    pub fn joint_gaps(&self) -> (f64, f64) {
        let mut gp = 0.0f64;
        let mut gt = 0.0f64;
        for k in 1..self.segments.len() {
            let a = self.segments[k - 1].eval(self.segments[k - 1].t1);
            let b = self.segments[k].eval(self.segments[k].t0);
            gp = gp.max((a[0][0] - b[0][0]).hypot(a[0][1] - b[0][1]));
            let la = a[1][0].hypot(a[1][1]);
            let lb = b[1][0].hypot(b[1][1]);
            gt = gt.max((a[1][0] / la - b[1][0] / lb).hypot(a[1][1] / la - b[1][1] / lb));
        }
        (gp, gt)
    }

    /// Tangent `z`-component at the two poles (zero when the curve meets the axis orthogonally).
    pub fn axis_slopes(&self) -> (f64, f64) {
        let first = &self.segments[0];
        let last = self.segments.last().expect("nonempty");
        let a = first.eval(first.t0)[1];
        let b = last.eval(last.t1)[1];
        (a[1] / a[0].hypot(a[1]), b[1] / b[0].hypot(b[1]))
    }

    /// Boundary CSV with header `arc_length,rho,z,n_rho,n_z,tag`.
    pub fn boundary_csv(&self, n: usize) -> String {
        let mut out = String::from("arc_length,rho,z,n_rho,n_z,tag\n");
        for s in self.boundary_samples(n) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                num(s.arc_length),
                num(s.position[0]),
                num(s.position[1]),
                num(s.normal[0]),
                num(s.normal[1]),
                s.tag.as_str()
            ));
        }
        out
    }
}

pub fn distance_to_polyline(poly: &[[f64; 2]], p: [f64; 2]) -> f64 {
    poly.windows(2)
        .map(|w| segment_distance(w[0], w[1], p))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Tolerances and measurements of a certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    pub samples: usize,
    pub min_x_dot_nu: f64,
    pub min_x_dot_nu_doubled: f64,
    pub max_curvature_jump: f64,
    pub curvature_tol: f64,
    pub max_joint_gap: f64,
    pub inradius: f64,
    pub inradius_grid_h: f64,
    pub axis_slope_top: f64,
    pub axis_slope_bottom: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Sampled certification of star-shapedness, curvature continuity, axis
/// orthogonality and inradius.
pub fn certify(d: &MeridianDomain, samples: usize, grid_h: f64) -> CertificationReport {
    let min_xn = |n: usize| {
        d.boundary_samples(n)
            .iter()
            .map(|s| s.x_dot_nu())
            .fold(f64::INFINITY, f64::min)
    };
    let m1 = min_xn(samples);
    let m2 = min_xn(2 * samples);
    let jump = d.curvature_jumps().iter().map(|j| j.1).fold(0.0, f64::max);
    let (gap_p, gap_t) = d.joint_gaps();
    let curvature_tol = 1e-8;
    let inr = d.inradius(grid_h);
    let (top, bottom) = d.axis_slopes();
    let expected_inradius = match d.shape {
        DomainShape::Ball { radius } => radius,
        DomainShape::Dumbbell { .. } => 1.0,
    };
    let mut failures = Vec::new();
    if !(m1 > 0.0) {
        failures.push(format!("star-shapedness: min position·normal = {m1}"));
    }
    if (m2 - m1).abs() > 0.1 * m1.abs() {
        failures.push(format!("star-shapedness minimum unstable under doubling: {m1} vs {m2}"));
    }
    if jump > curvature_tol {
        failures.push(format!("curvature jump {jump:.3e} at a segment joint"));
    }
    if gap_p.max(gap_t) > 1e-12 {
        failures.push(format!("segments do not join: position gap {gap_p:.3e}, tangent gap {gap_t:.3e}"));
    }
    if (inr - expected_inradius).abs() > 2.0 * grid_h {
        failures.push(format!("inradius {inr} differs from {expected_inradius} by more than 2·grid_h"));
    }
    if !(top.abs() <= 1e-12 && bottom.abs() <= 1e-12) {
        failures.push(format!("curve does not meet the axis orthogonally (slopes {top}, {bottom})"));
    }
    CertificationReport {
        samples,
        min_x_dot_nu: m1,
        min_x_dot_nu_doubled: m2,
        max_curvature_jump: jump,
        curvature_tol,
        max_joint_gap: gap_p.max(gap_t),
        inradius: inr,
        inradius_grid_h: grid_h,
        axis_slope_top: top,
        axis_slope_bottom: bottom,
        passed: failures.is_empty(),
        failures,
    }
}

/// Builds and certifies the dumbbell at 10⁴ samples. Requires `l_total > l1`.
pub fn build_domain(
    r_cyl: f64,
    l_total: f64,
    fillet_length: f64,
    l1: f64,
    grid_h: f64,
) -> Result<(MeridianDomain, CertificationReport)> {
    if !(l_total > l1) {
        return Err(Error::InvalidParameter(format!("l_total = {l_total} must exceed l1 = {l1}")));
    }
    let d = MeridianDomain::dumbbell(r_cyl, l_total, fillet_length)?;
    let rep = certify(&d, 10_000, grid_h);
    if !rep.passed {
        return Err(Error::Certification(rep.failures.join("; ")));
    }
    Ok((d, rep))
}

/// The part of the domain outside the closed ball of radius `cut_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRegion {
    pub cut_radius: f64,
}

impl TailRegion {
    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        p[0].hypot(p[1]) > self.cut_radius
    }

    pub fn contains(&self, d: &MeridianDomain, rho: f64, z: f64) -> bool {
        self.contains_point([rho, z]) && d.contains(rho, z)
    }

    pub fn is_nonempty(&self, d: &MeridianDomain) -> bool {
        d.boundary_at_angle(0.0).radius() > self.cut_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dumbbell() -> MeridianDomain {
        MeridianDomain::dumbbell(0.5, 2.56, 0.15).unwrap()
    }

    #[test]
    fn ball_is_half_circle() {
        let d = MeridianDomain::ball(1.0).unwrap();
        let rep = certify(&d, 1000, 0.02);
        assert!(rep.passed, "{:?}", rep.failures);
        assert!((rep.min_x_dot_nu - 1.0).abs() < 1e-14);
        assert!((d.total_length() - PI).abs() < 1e-12);
        for s in d.boundary_samples(50) {
            assert!((s.normal[0] - s.position[0]).abs() < 1e-12);
            assert!((s.normal[1] - s.position[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_side_has_horizontal_normal() {
        let d = dumbbell();
        let s = d.boundary_at_angle(0.5f64.atan2(1.5));
        assert_eq!(s.tag, SegmentTag::Cylinder);
        assert!((s.normal[0] - 1.0).abs() < 1e-12 && s.normal[1].abs() < 1e-12);
        assert!((s.x_dot_nu() - 0.5).abs() < 1e-12);
        assert!((s.position[1] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn default_dumbbell_certifies() {
        let (_, rep) = build_domain(0.5, 2.56, 0.15, 1.56, 0.02).unwrap();
        assert!(rep.min_x_dot_nu > 0.0);
        assert!(rep.max_curvature_jump < 1e-8);
        assert!(build_domain(0.5, 1.5, 0.15, 1.56, 0.02).is_err());
    }

    #[test]
    fn pole_curvature_is_cap_radius() {
        let d = dumbbell();
        assert!((d.sample_at_arc(0.0).curvature - 2.0).abs() < 1e-10);
        assert!((d.sample_at_arc(d.total_length()).curvature - 1.0).abs() < 1e-10);
    }

    #[test]
    fn segment_lengths_sum_to_total() {
        let d = dumbbell();
        let sum: f64 = d.segment_lengths().iter().map(|x| x.1).sum();
        assert!((sum - d.total_length()).abs() < 1e-10);
        // the ball arc below the fillet is known in closed form
        let a = 0.5f64.hypot(0.75f64.sqrt() + 0.15) - 1.0;
        let ball = d.segment_lengths()[3].1;
        assert!((ball - (PI - (0.5 / (1.0 - a)).asin())).abs() < 1e-12);
        // quadrature self-check on the fillet: 48 vs 96 panels
        let seg = d.segments[2];
        let fine: f64 = (0..96)
            .map(|i| {
                let a = seg.t0 + (seg.t1 - seg.t0) * i as f64 / 96.0;
                let b = seg.t0 + (seg.t1 - seg.t0) * (i + 1) as f64 / 96.0;
                d.rule.integrate(|x| seg.speed(x), a, b)
            })
            .sum();
        assert!((fine - d.segment_lengths()[2].1).abs() < 1e-13);
    }

    #[test]
    fn arc_length_inversion_round_trip() {
        let d = dumbbell();
        for s in [0.0, 0.1, 0.5, 1.3, 2.0, 3.5, d.total_length()] {
            assert!((d.sample_at_arc(s).arc_length - s).abs() < 1e-12);
            let (k, t) = d.locate_arc(s);
            let back = d.arc_start[k] + d.arc_within(&d.segments[k], t);
            assert!((back - s).abs() < 1e-10, "{s} {back}");
        }
    }

    #[test]
    fn angle_lookup_hits_the_ray() {
        let d = dumbbell();
        for th in [0.0, 0.05, 0.2, 0.45, 0.5, 1.0, 3.0, PI] {
            let p = d.boundary_at_angle(th).position;
            assert!((p[0].atan2(p[1]) - th).abs() < 1e-12, "{th}");
        }
    }

    #[test]
    fn contains_examples() {
        let d = dumbbell();
        assert!(d.contains(0.0, 0.0));
        assert!(!d.contains(2.0, 0.0));
        assert!(d.contains(0.45, 2.56 * 0.5));
        assert!(!d.contains(0.6, 2.0));
    }

    #[test]
    fn normals_are_unit() {
        let d = dumbbell();
        for s in d.boundary_samples(500) {
            assert!((s.normal[0].hypot(s.normal[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inradius_of_unit_ball_and_dumbbells() {
        let h = 0.02;
        let b = MeridianDomain::ball(1.0).unwrap();
        assert!((b.inradius(h) - 1.0).abs() <= h);
        for r in [0.5, 0.2] {
            let d = MeridianDomain::dumbbell(r, 2.56, 0.15).unwrap();
            assert!((d.inradius(h) - 1.0).abs() <= h);
        }
    }
}
