//! Triangulation of the meridian region.
//!
//! The closed constraint loop is the boundary curve from the top pole to the
//! bottom pole followed by the symmetry axis back up. Curve vertices are
//! spaced by `h`, tightened where the curvature would make the chord sag by
//! more than `h²/4`. spade's constrained Delaunay refinement fills the
//! interior; Steiner points it drops onto curve chords are pushed radially
//! onto the analytic curve afterwards.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{MeridianDomain, SegmentTag};
use crate::io::num;

/// Minimum angle requested from the refiner, in degrees.
pub const REFINE_ANGLE_DEG: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Vertex ids ordered by increasing arc length.
    pub v: [usize; 2],
    pub s: [f64; 2],
    pub tag: SegmentTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise in `(ρ, z)`.
    pub triangles: Vec<[usize; 3]>,
    /// Curve edges only, ordered from the top pole along the boundary.
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Vertices on the symmetry axis strictly between the poles.
    pub axis: Vec<bool>,
    /// Vertices on the boundary surface, poles included.
    pub dirichlet: Vec<bool>,
    /// Arc length of each curve vertex.
    pub arc: Vec<Option<f64>>,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeshQuality {
    pub vertices: usize,
    pub triangles: usize,
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    /// Longest over shortest triangle diameter.
    pub quasi_uniformity: f64,
    /// Largest radial gap between a boundary edge midpoint and the curve.
    pub max_boundary_gap: f64,
    pub inverted: usize,
}

/// Per-vertex spacing target along the curve.
fn spacing(h: f64, curvature: f64) -> f64 {
    // chord sag κℓ²/8 stays below h²/4
    h.min((2.0 / curvature.abs()).sqrt() * h)
}

/// Arc-length stations on the curve: equidistributes `1/spacing`.
fn curve_stations(d: &MeridianDomain, h: f64) -> Vec<f64> {
    let total = d.total_length();
    let m = ((total / h).ceil() as usize * 16).max(512);
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    let dens: Vec<f64> = (0..=m)
        .map(|i| 1.0 / spacing(h, d.sample_at_arc(total * i as f64 / m as f64).curvature))
        .collect();
    for i in 0..m {
        let ds = total / m as f64;
        cum.push(cum[i] + 0.5 * ds * (dens[i] + dens[i + 1]));
    }
    let n = (cum[m].ceil() as usize).max(8);
    let mut out = Vec::with_capacity(n + 1);
    let mut j = 0;
    for k in 0..=n {
        let target = cum[m] * k as f64 / n as f64;
        while j + 1 < m && cum[j + 1] < target {
            j += 1;
        }
        let f = ((target - cum[j]) / (cum[j + 1] - cum[j])).clamp(0.0, 1.0);
        out.push(total * (j as f64 + f) / m as f64);
    }
    out[0] = 0.0;
    out[n] = total;
    out
}

/// Meshes the meridian region of `d` at target size `h`.
pub fn mesh_meridian(d: &MeridianDomain, h: f64) -> Result<Mesh> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("mesh size must be positive, got {h}")));
    }
    if h > 0.25 * d.total_length() {
        return Err(Error::InvalidParameter(format!("mesh size {h} too coarse for the domain")));
    }
    let stations = curve_stations(d, h);
    let curve: Vec<[f64; 2]> = stations.iter().map(|&s| d.sample_at_arc(s).position).collect();
    let nc = curve.len();
    let top = curve[0][1];
    let bottom = curve[nc - 1][1];
    let na = ((top - bottom) / h).ceil() as usize;

    let mut pts: Vec<Point2<f64>> = curve.iter().map(|p| Point2::new(p[0].max(0.0), p[1])).collect();
    pts[0].x = 0.0;
    pts[nc - 1].x = 0.0;
    for k in 1..na {
        pts.push(Point2::new(0.0, bottom + (top - bottom) * k as f64 / na as f64));
    }
    let n_in = pts.len();
    let mut edges: Vec<[usize; 2]> = (0..nc - 1).map(|i| [i, i + 1]).collect();
    let mut prev = nc - 1;
    for k in nc..n_in {
        edges.push([prev, k]);
        prev = k;
    }
    edges.push([prev, 0]);

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::bulk_load_cdt(pts, edges)
            .map_err(|e| Error::Meshing(format!("constraint loop rejected: {e:?}")))?;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(REFINE_ANGLE_DEG))
        .with_max_allowed_area(3.0_f64.sqrt() / 4.0 * h * h)
        .with_max_additional_vertices(50 * n_in + (40.0 / (h * h)) as usize * 4)
        .exclude_outer_faces(true);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::Meshing("refinement ran out of Steiner points".into()));
    }
    let excluded: HashSet<usize> = result.excluded_faces.iter().map(|f| f.index()).collect();

    let scale = top - bottom;
    let on_axis = |p: Point2<f64>| p.x.abs() <= 1e-13 * scale;

    // vertices touching a constraint edge that is not an axis edge
    let mut curve_vertex: HashSet<usize> = HashSet::new();
    for e in cdt.undirected_edges() {
        if !e.is_constraint_edge() {
            continue;
        }
        let [a, b] = e.vertices();
        if on_axis(a.position()) && on_axis(b.position()) {
            continue;
        }
        curve_vertex.insert(a.fix().index());
        curve_vertex.insert(b.fix().index());
    }

    // compact numbering in spade's vertex order over vertices used by inner faces
    let mut used = vec![false; cdt.num_vertices()];
    let mut tri_raw = Vec::new();
    for f in cdt.inner_faces() {
        if excluded.contains(&f.fix().index()) {
            continue;
        }
        let vs = f.vertices().map(|v| v.fix().index());
        for &v in &vs {
            used[v] = true;
        }
        tri_raw.push(vs);
    }
    let mut remap = vec![usize::MAX; used.len()];
    let mut vertices = Vec::new();
    let mut arc = Vec::new();
    let mut axis = Vec::new();
    let mut dirichlet = Vec::new();
    for (i, v) in cdt.vertices().enumerate() {
        if !used[i] {
            continue;
        }
        remap[i] = vertices.len();
        let p = v.position();
        if i < nc {
            vertices.push([p.x, p.y]);
            arc.push(Some(stations[i]));
            axis.push(false);
            dirichlet.push(true);
        } else if curve_vertex.contains(&i) && !on_axis(p) {
            let b = d.boundary_at_angle(p.x.atan2(p.y));
            vertices.push(b.position);
            arc.push(Some(b.arc_length));
            axis.push(false);
            dirichlet.push(true);
        } else {
            let on = on_axis(p);
            vertices.push([if on { 0.0 } else { p.x }, p.y]);
            arc.push(None);
            axis.push(on);
            dirichlet.push(false);
        }
    }
    let triangles: Vec<[usize; 3]> = tri_raw.iter().map(|t| t.map(|v| remap[v])).collect();

    // boundary edges are triangle edges used once with both ends on the curve
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut boundary_edges = Vec::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] != 1 || !dirichlet[a] || !dirichlet[b] {
                continue;
            }
            let (sa, sb) = (arc[a].unwrap_or(0.0), arc[b].unwrap_or(0.0));
            let (v, s) = if sa <= sb { ([a, b], [sa, sb]) } else { ([b, a], [sb, sa]) };
            let tag = d.sample_at_arc(0.5 * (s[0] + s[1])).tag;
            boundary_edges.push(BoundaryEdge { v, s, tag });
        }
    }
    boundary_edges.sort_by(|x, y| x.s[0].total_cmp(&y.s[0]));

    let mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
        axis,
        dirichlet,
        arc,
        h,
    };
    let q = mesh.quality(d);
    if q.inverted > 0 {
        return Err(Error::Meshing(format!("{} inverted triangles after snapping", q.inverted)));
    }
    Ok(mesh)
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Interior angles of triangle `t` in degrees.
    pub fn angles_deg(&self, t: usize) -> [f64; 3] {
        let p = self.triangles[t].map(|v| self.vertices[v]);
        let mut out = [0.0; 3];
        for k in 0..3 {
            let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
            out[k] = cos.clamp(-1.0, 1.0).acos().to_degrees();
        }
        out
    }

    fn diameter(&self, t: usize) -> f64 {
        let p = self.triangles[t].map(|v| self.vertices[v]);
        (0..3)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(0.0, f64::max)
    }

    pub fn quality(&self, d: &MeridianDomain) -> MeshQuality {
        let mut q = MeshQuality {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            min_angle_deg: 180.0,
            max_angle_deg: 0.0,
            quasi_uniformity: 1.0,
            max_boundary_gap: 0.0,
            inverted: 0,
        };
        let (mut dmin, mut dmax) = (f64::MAX, 0.0f64);
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 0.0 {
                q.inverted += 1;
            }
            for a in self.angles_deg(t) {
                q.min_angle_deg = q.min_angle_deg.min(a);
                q.max_angle_deg = q.max_angle_deg.max(a);
            }
            let dm = self.diameter(t);
            dmin = dmin.min(dm);
            dmax = dmax.max(dm);
        }
        q.quasi_uniformity = dmax / dmin;
        for e in &self.boundary_edges {
            let (a, b) = (self.vertices[e.v[0]], self.vertices[e.v[1]]);
            let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let r = m[0].hypot(m[1]);
            let gap = (d.boundary_at_angle(m[0].atan2(m[1])).radius() - r).abs();
            q.max_boundary_gap = q.max_boundary_gap.max(gap);
        }
        q
    }

    /// Vertices at distance greater than `cut` from the origin.
    pub fn vertices_beyond(&self, cut: f64) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.vertices[i][0].hypot(self.vertices[i][1]) > cut)
            .collect()
    }

    /// Plain-text export: vertex, triangle and boundary-edge blocks.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for (i, p) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {}", num(p[0]), num(p[1]));
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary_edges {}", self.boundary_edges.len());
        for (i, e) in self.boundary_edges.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i} {} {} {} {} {}",
                e.v[0],
                e.v[1],
                num(e.s[0]),
                num(e.s[1]),
                e.tag.as_str()
            );
        }
        s
    }

    /// Field CSV with header `vertex,rho,z,value`.
    pub fn field_csv(&self, values: &[f64]) -> String {
        let mut s = String::from("vertex,rho,z,value\n");
        for (i, p) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", num(p[0]), num(p[1]), num(values[i]));
        }
        s
    }
}

/// Reads the value column of a field CSV written by [`Mesh::field_csv`].
pub fn parse_field_csv(text: &str) -> Option<Vec<f64>> {
    let mut lines = text.lines();
    if lines.next()? != "vertex,rho,z,value" {
        return None;
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| l.rsplit(',').next()?.parse().ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_mesh(h: f64) -> (MeridianDomain, Mesh) {
        let d = MeridianDomain::ball(1.0).unwrap();
        let m = mesh_meridian(&d, h).unwrap();
        (d, m)
    }

    #[test]
    fn ball_mesh_quality() {
        let (d, m) = ball_mesh(0.05);
        let q = m.quality(&d);
        assert_eq!(q.inverted, 0);
        assert!(q.min_angle_deg >= 20.0, "{q:?}");
        assert!(q.quasi_uniformity <= 10.0, "{q:?}");
        assert!(q.max_boundary_gap <= 0.05 * 0.05, "{q:?}");
    }

    #[test]
    fn vertex_count_scales_with_inverse_square() {
        let (_, a) = ball_mesh(0.08);
        let (_, b) = ball_mesh(0.04);
        let ratio = b.n_vertices() as f64 / a.n_vertices() as f64;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn boundary_vertices_lie_on_curve() {
        let (d, m) = ball_mesh(0.05);
        for (i, p) in m.vertices.iter().enumerate() {
            if m.dirichlet[i] {
                assert!((p[0].hypot(p[1]) - 1.0).abs() <= 1e-12);
                assert!(!m.axis[i]);
            }
            if m.axis[i] {
                assert_eq!(p[0], 0.0);
            }
        }
        // the curve edges chain from pole to pole
        let e = &m.boundary_edges;
        assert_eq!(e[0].s[0], 0.0);
        assert!((e.last().unwrap().s[1] - d.total_length()).abs() < 1e-12);
        for w in e.windows(2) {
            assert_eq!(w[0].v[1], w[1].v[0]);
        }
    }

    #[test]
    fn dumbbell_mesh_is_valid() {
        let d = MeridianDomain::dumbbell(0.5, 2.56, 0.2).unwrap();
        let m = mesh_meridian(&d, 0.04).unwrap();
        let q = m.quality(&d);
        assert!(q.min_angle_deg >= 20.0, "{q:?}");
        assert!(q.max_boundary_gap <= 0.04 * 0.04, "{q:?}");
        let tags: HashSet<_> = m.boundary_edges.iter().map(|e| e.tag).collect();
        assert_eq!(tags.len(), 4);
    }

    #[test]
    fn meshing_is_deterministic() {
        let (_, a) = ball_mesh(0.06);
        let (_, b) = ball_mesh(0.06);
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn field_csv_round_trip() {
        let (_, m) = ball_mesh(0.2);
        let vals: Vec<f64> = (0..m.n_vertices()).map(|i| i as f64 * 0.1).collect();
        let back = parse_field_csv(&m.field_csv(&vals)).unwrap();
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-300));
        }
    }
}
