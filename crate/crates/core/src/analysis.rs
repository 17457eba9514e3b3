//! Boundary flux profiles, the Pohozaev balance, free/partial/Hopf
//! classification, support confinement and the tail comparison with the
//! shifted barrier.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fem::Assembly;
use crate::geometry::{MeridianDomain, SegmentTag};
use crate::io::num;
use crate::mesh::Mesh;
use crate::numerics::quadrature::GaussLegendre;
use crate::radial::barrier::BarrierParams;
use crate::radial::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxEntry {
    /// Arc length of the edge midpoint.
    pub arc_length: f64,
    /// Edge length along the curve parameter.
    pub length: f64,
    pub flux: f64,
    /// Nodal fluxes at the two edge ends.
    pub ends: [f64; 2],
    pub position: [f64; 2],
    pub normal: [f64; 2],
    pub x_dot_nu: f64,
    pub tag: SegmentTag,
}

impl FluxEntry {
    pub fn radius(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }
}

/// Normal derivative at every boundary-edge midpoint, in boundary order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxProfile {
    pub entries: Vec<FluxEntry>,
}

impl FluxProfile {
    /// Recovers the flux of `u` for the exact reaction at `p.lambda`.
    pub fn recover(mesh: &Mesh, d: &MeridianDomain, asm: &Assembly, p: &ProblemParams, u: &[f64]) -> Self {
        Self::from_nodal(mesh, d, &asm.nodal_flux(u, |x| p.reaction(x)))
    }

    pub fn from_nodal(mesh: &Mesh, d: &MeridianDomain, nodal: &[f64]) -> Self {
        let entries = mesh
            .boundary_edges
            .iter()
            .map(|e| {
                let s = 0.5 * (e.s[0] + e.s[1]);
                let b = d.sample_at_arc(s);
                let ends = [nodal[e.v[0]], nodal[e.v[1]]];
                FluxEntry {
                    arc_length: s,
                    length: e.s[1] - e.s[0],
                    flux: 0.5 * (ends[0] + ends[1]),
                    ends,
                    position: b.position,
                    normal: b.normal,
                    x_dot_nu: b.x_dot_nu(),
                    tag: e.tag,
                }
            })
            .collect();
        Self { entries }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, e| a.max(e.flux.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.flux *= c;
            e.ends = e.ends.map(|x| x * c);
        }
        out
    }

    /// CSV with header `arc_length,flux,x_dot_nu,tag`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("arc_length,flux,x_dot_nu,tag\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{},{}\n", num(e.arc_length), num(e.flux), num(e.x_dot_nu), e.tag.as_str()));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub energy: f64,
    pub dirichlet: f64,
    /// `P = E - (1/N)∫|∇u|²`.
    pub p_value: f64,
    /// `B = ∫_{∂Ω} |∂_ν u|² (x·ν) dS`.
    pub boundary_integral: f64,
    /// `|P + B/(2N)|`.
    pub balance_residual: f64,
}

/// Pohozaev functional and boundary integral of `u`. The boundary integral
/// uses two Gauss points per edge with the flux linear between the edge ends
/// and exact geometry at the nodes.
pub fn pohozaev(asm: &Assembly, d: &MeridianDomain, p: &ProblemParams, u: &[f64], flux: &FluxProfile) -> PohozaevReport {
    let n = p.dim as f64;
    let energy = asm.energy(u, p);
    let dirichlet = asm.dirichlet_integral(u);
    let gl = GaussLegendre::new(2);
    let mut b = 0.0;
    for e in &flux.entries {
        let s0 = e.arc_length - 0.5 * e.length;
        b += gl.integrate(
            |s| {
                let t = (s - s0) / e.length;
                let g = (1.0 - t) * e.ends[0] + t * e.ends[1];
                let q = d.sample_at_arc(s);
                g * g * q.x_dot_nu() * q.position[0].max(0.0).powi(p.dim as i32 - 2)
            },
            s0,
            s0 + e.length,
        );
    }
    let boundary_integral = asm.sigma * b;
    let p_value = energy - dirichlet / n;
    PohozaevReport {
        energy,
        dirichlet,
        p_value,
        boundary_integral,
        balance_residual: (p_value + boundary_integral / (2.0 * n)).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    FreeBoundary,
    PartialFreeBoundary,
    HopfEverywhere,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::FreeBoundary => "FreeBoundary",
            Verdict::PartialFreeBoundary => "PartialFreeBoundary",
            Verdict::HopfEverywhere => "HopfEverywhere",
            Verdict::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_rel: f64,
    pub tau_abs: f64,
    pub eta: f64,
    /// Shortest zero-set run that counts, in boundary edges.
    pub min_run_edges: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_rel: 0.05,
            tau_abs: 0.0,
            eta: 0.05,
            min_run_edges: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub zero_set_arc_fraction: f64,
    pub max_abs_flux_on_zero_set: f64,
    pub min_abs_flux_on_active_set: f64,
    pub max_abs_flux: f64,
    /// `max(τ_abs, τ_rel·max|flux|)`.
    pub zero_threshold: f64,
    pub thresholds: Thresholds,
    /// Arc-length intervals of the retained zero-set runs.
    pub zero_arcs: Vec<[f64; 2]>,
}

/// Splits the boundary into a zero set and an active set and issues the verdict.
pub fn classify(flux: &FluxProfile, th: &Thresholds) -> Classification {
    let max_abs = flux.max_abs();
    let thr = th.tau_abs.max(th.tau_rel * max_abs);
    let e = &flux.entries;
    let small: Vec<bool> = e.iter().map(|x| x.flux.abs() <= thr).collect();
    let mut zero = vec![false; e.len()];
    let mut zero_arcs = Vec::new();
    let mut i = 0;
    while i < e.len() {
        if !small[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < e.len() && small[i] {
            i += 1;
        }
        if i - start >= th.min_run_edges {
            zero[start..i].iter_mut().for_each(|z| *z = true);
            let a = e[start].arc_length - 0.5 * e[start].length;
            let b = e[i - 1].arc_length + 0.5 * e[i - 1].length;
            zero_arcs.push([a, b]);
        }
    }
    let total: f64 = e.iter().map(|x| x.length).sum();
    let zlen: f64 = e.iter().zip(&zero).filter(|(_, &z)| z).map(|(x, _)| x.length).sum();
    let frac = if total > 0.0 { zlen / total } else { 0.0 };
    let max_zero = e.iter().zip(&zero).filter(|(_, &z)| z).fold(0.0f64, |a, (x, _)| a.max(x.flux.abs()));
    let min_active = e
        .iter()
        .zip(&zero)
        .filter(|(_, &z)| !z)
        .fold(f64::INFINITY, |a, (x, _)| a.min(x.flux.abs()));
    let verdict = if max_abs <= th.tau_abs {
        Verdict::Indeterminate
    } else if frac >= 1.0 - th.eta {
        Verdict::FreeBoundary
    } else if frac <= th.eta {
        Verdict::HopfEverywhere
    } else {
        Verdict::PartialFreeBoundary
    };
    Classification {
        verdict,
        zero_set_arc_fraction: frac,
        max_abs_flux_on_zero_set: max_zero,
        min_abs_flux_on_active_set: if min_active.is_finite() { min_active } else { 0.0 },
        max_abs_flux: max_abs,
        zero_threshold: thr,
        thresholds: *th,
        zero_arcs,
    }
}

/// Largest `|flux|` over boundary midpoints at radius above `cut`; zero if
/// there are none.
pub fn tail_max_flux(flux: &FluxProfile, cut: f64) -> f64 {
    flux.entries
        .iter()
        .filter(|e| e.radius() > cut)
        .fold(0.0, |a, e| a.max(e.flux.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveArc {
    pub start: f64,
    pub end: f64,
    pub edges: usize,
    pub min_abs_flux: f64,
}

/// Longest contiguous run of ball-tagged midpoints whose flux exceeds the
/// zero threshold.
pub fn longest_active_ball_arc(flux: &FluxProfile, zero_threshold: f64) -> Option<ActiveArc> {
    let e = &flux.entries;
    let active = |i: usize| e[i].tag == SegmentTag::Ball && e[i].flux.abs() > zero_threshold;
    let mut best: Option<ActiveArc> = None;
    let mut i = 0;
    while i < e.len() {
        if !active(i) {
            i += 1;
            continue;
        }
        let start = i;
        let mut min = f64::INFINITY;
        while i < e.len() && active(i) {
            min = min.min(e[i].flux.abs());
            i += 1;
        }
        let arc = ActiveArc {
            start: e[start].arc_length - 0.5 * e[start].length,
            end: e[i - 1].arc_length + 0.5 * e[i - 1].length,
            edges: i - start,
            min_abs_flux: min,
        };
        if best.map_or(true, |b| arc.edges > b.edges) {
            best = Some(arc);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub cut_radius: f64,
    pub vertices_beyond: usize,
    pub max_beyond: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest nodal value beyond radius `l1`.
pub fn support_check(mesh: &Mesh, u: &[f64], l1: f64, u_tol: f64) -> SupportReport {
    let idx = mesh.vertices_beyond(l1);
    let max_beyond = idx.iter().map(|&i| u[i]).fold(0.0, f64::max);
    SupportReport {
        cut_radius: l1,
        vertices_beyond: idx.len(),
        max_beyond,
        tolerance: u_tol,
        pass: max_beyond <= u_tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub tail_vertices: usize,
    /// `max(u - v)` over tail vertices; `None` for an empty tail.
    pub max_excess: Option<f64>,
    /// Upper bound of `u` on the cut sphere `|x| = l0`.
    pub cut_sphere_max: f64,
    pub delta: f64,
    pub hypothesis_holds: bool,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `u` with `v(x) = w(|x| - l0)` on the tail `|x| > l0`. The cut
/// sphere bound takes the largest vertex value over triangles the sphere
/// crosses, which dominates the P1 field on the sphere.
pub fn comparison_check(mesh: &Mesh, u: &[f64], barrier: &BarrierParams, tol: f64) -> Result<ComparisonReport> {
    let l0 = barrier.l0;
    let radius = |i: usize| mesh.vertices[i][0].hypot(mesh.vertices[i][1]);
    let mut cut_max = 0.0f64;
    for t in &mesh.triangles {
        let rs = t.map(radius);
        let lo = rs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rs.iter().copied().fold(0.0, f64::max);
        if lo <= l0 && l0 <= hi {
            cut_max = t.iter().map(|&i| u[i]).fold(cut_max, f64::max);
        }
    }
    let tail = mesh.vertices_beyond(l0);
    let mut max_excess: Option<f64> = None;
    for &i in &tail {
        let d = u[i] - barrier.supersolution_v(radius(i))?;
        max_excess = Some(max_excess.map_or(d, |m| m.max(d)));
    }
    let hypothesis_holds = cut_max < barrier.delta;
    Ok(ComparisonReport {
        tail_vertices: tail.len(),
        max_excess,
        cut_sphere_max: cut_max,
        delta: barrier.delta,
        hypothesis_holds,
        tolerance: tol,
        pass: hypothesis_holds && max_excess.map_or(true, |m| m <= tol),
    })
}
