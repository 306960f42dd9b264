//! Labelled partitions of parameter surfaces as half-edge meshes.
//!
//! A partition is assembled from face specifications: each face is the image
//! of a parameter rectangle under a face chart into the domain, together with
//! the list of its boundary sides in anticlockwise order (degenerate sides,
//! such as the pole side of a polar cap, are simply left out). Vertices are
//! identified through canonical domain coordinates, so periodic and polar
//! identifications need no special casing. Vertices lying in the interior of
//! another face's side are inserted there, which turns T-junctions into
//! genuine mesh vertices.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::cech::ChartCover;
use crate::error::{Error, Result};
use crate::numerics::{Cell, GaussLegendre};
use crate::types::{vector, ChartId, Orientation, Vector};

pub type FaceChart = Arc<dyn Fn(f64, f64) -> Vector + Send + Sync>;
pub type SurfaceMap = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

const KEY_QUANTUM: f64 = 1e-9;
const LABEL_GRID: usize = 5;
const AUDIT_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceDomain {
    /// `[u0, u1] × [v0, v1]`, each coordinate optionally periodic.
    Planar {
        u: [f64; 2],
        v: [f64; 2],
        periodic: [bool; 2],
    },
    /// Polar coordinates `(r, φ)` on a disk.
    Disk { radius: f64 },
    /// Colatitude and longitude `(θ, φ)` on the unit sphere.
    Sphere,
    /// Boundary of an axis-aligned box; domain points are 3-D.
    BoxBoundary { lo: [f64; 3], hi: [f64; 3] },
}

impl SurfaceDomain {
    pub fn rectangle(u: [f64; 2], v: [f64; 2]) -> Self {
        SurfaceDomain::Planar {
            u,
            v,
            periodic: [false, false],
        }
    }

    /// `S^1 × [v0, v1]` with the circle coordinate `u ∈ [0, 2π)`.
    pub fn cylinder(v: [f64; 2]) -> Self {
        SurfaceDomain::Planar {
            u: [0.0, TAU],
            v,
            periodic: [true, false],
        }
    }

    pub fn torus() -> Self {
        SurfaceDomain::Planar {
            u: [0.0, TAU],
            v: [0.0, TAU],
            periodic: [true, true],
        }
    }

    pub fn disk(radius: f64) -> Self {
        SurfaceDomain::Disk { radius }
    }

    pub fn sphere() -> Self {
        SurfaceDomain::Sphere
    }

    pub fn box_boundary(lo: [f64; 3], hi: [f64; 3]) -> Self {
        SurfaceDomain::BoxBoundary { lo, hi }
    }

    /// Number of coordinates of a domain point.
    pub fn point_dim(&self) -> usize {
        match self {
            SurfaceDomain::BoxBoundary { .. } => 3,
            _ => 2,
        }
    }

    /// `(origin, period)` of each periodic coordinate.
    fn periods(&self) -> [Option<(f64, f64)>; 3] {
        match *self {
            SurfaceDomain::Planar { u, v, periodic } => [
                periodic[0].then_some((u[0], u[1] - u[0])),
                periodic[1].then_some((v[0], v[1] - v[0])),
                None,
            ],
            SurfaceDomain::Disk { .. } | SurfaceDomain::Sphere => [None, Some((0.0, TAU)), None],
            SurfaceDomain::BoxBoundary { .. } => [None; 3],
        }
    }

    pub fn is_closed(&self) -> bool {
        match *self {
            SurfaceDomain::Planar { periodic, .. } => periodic[0] && periodic[1],
            SurfaceDomain::Disk { .. } => false,
            SurfaceDomain::Sphere | SurfaceDomain::BoxBoundary { .. } => true,
        }
    }

    /// Representative of a domain point: periodic coordinates reduced to
    /// their fundamental interval, polar singularities collapsed.
    pub fn canonical(&self, p: &Vector) -> Vector {
        let mut q = p.clone();
        for (k, per) in self.periods().iter().enumerate() {
            if let Some((origin, period)) = per {
                q[k] = origin + (q[k] - origin).rem_euclid(*period);
                if (q[k] - origin - period).abs() < KEY_QUANTUM {
                    q[k] = *origin;
                }
            }
        }
        match self {
            SurfaceDomain::Disk { .. } if q[0].abs() < KEY_QUANTUM => vector(&[0.0, 0.0]),
            SurfaceDomain::Sphere if q[0].abs() < KEY_QUANTUM => vector(&[0.0, 0.0]),
            SurfaceDomain::Sphere if (q[0] - PI).abs() < KEY_QUANTUM => vector(&[PI, 0.0]),
            _ => q,
        }
    }

    fn key(&self, p: &Vector) -> [i64; 3] {
        let q = self.canonical(p);
        let periods = self.periods();
        let mut key = [0i64; 3];
        for k in 0..q.len() {
            match periods[k] {
                Some((origin, period)) => {
                    let n = (period / KEY_QUANTUM).round() as i64;
                    key[k] = (((q[k] - origin) / KEY_QUANTUM).round() as i64).rem_euclid(n);
                }
                None => key[k] = (q[k] / KEY_QUANTUM).round() as i64,
            }
        }
        key
    }

    /// Periodic image of `p` closest to `target`.
    fn nearest_image(&self, p: &Vector, target: &Vector) -> Vector {
        let mut q = p.clone();
        for (k, per) in self.periods().iter().enumerate() {
            if let Some((_, period)) = per {
                q[k] += period * ((target[k] - q[k]) / period).round();
            }
        }
        q
    }
}

/// Identity face chart for domains whose points are the parameters.
pub fn identity_chart() -> FaceChart {
    Arc::new(|u, v| vector(&[u, v]))
}

/// Sides of a rectangle in anticlockwise order.
pub fn rect_sides(rect: &Cell<2>) -> Vec<[[f64; 2]; 2]> {
    let [x0, y0] = rect.lo;
    let [x1, y1] = rect.hi;
    vec![
        [[x0, y0], [x1, y0]],
        [[x1, y0], [x1, y1]],
        [[x1, y1], [x0, y1]],
        [[x0, y1], [x0, y0]],
    ]
}

/// One face: a chart from a parameter rectangle into the domain, the sides
/// of the rectangle that form its boundary, and its label.
#[derive(Clone)]
pub struct FaceSpec {
    pub chart: FaceChart,
    pub rect: Cell<2>,
    pub sides: Vec<[[f64; 2]; 2]>,
    pub label: ChartId,
    /// Whether the rect coordinates coincide with planar domain coordinates
    /// (enables cutting and refinement).
    pub planar: bool,
}

impl fmt::Debug for FaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FaceSpec")
            .field("rect", &self.rect)
            .field("sides", &self.sides.len())
            .field("label", &self.label)
            .finish()
    }
}

impl FaceSpec {
    /// Rectangle face of a planar domain.
    pub fn planar(rect: Cell<2>, label: ChartId) -> Self {
        Self {
            chart: identity_chart(),
            sides: rect_sides(&rect),
            rect,
            label,
            planar: true,
        }
    }

    /// Polar cap `[r0, r1] × [φ0, φ0 + 2π]` with only the ring `r = ring` as boundary.
    fn cap(rect: Cell<2>, ring_at_hi: bool, label: ChartId) -> Self {
        let [x0, y0] = rect.lo;
        let [x1, y1] = rect.hi;
        let side = if ring_at_hi {
            [[x1, y0], [x1, y1]]
        } else {
            [[x0, y1], [x0, y0]]
        };
        Self {
            chart: identity_chart(),
            rect,
            sides: vec![side],
            label,
            planar: false,
        }
    }

    /// Triangle `p0 p1 p2` (anticlockwise) of a planar domain, parametrised
    /// by the collapsed square `(s, t) ↦ p0 + s (p1 - p0) + s t (p2 - p1)`.
    pub fn triangle(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2], label: ChartId) -> Self {
        let chart: FaceChart = Arc::new(move |s, t| {
            vector(&[
                p0[0] + s * (p1[0] - p0[0]) + s * t * (p2[0] - p1[0]),
                p0[1] + s * (p1[1] - p0[1]) + s * t * (p2[1] - p1[1]),
            ])
        });
        Self {
            chart,
            rect: Cell::new([0.0, 0.0], [1.0, 1.0]),
            sides: vec![
                [[0.0, 0.0], [1.0, 0.0]],
                [[1.0, 0.0], [1.0, 1.0]],
                [[1.0, 1.0], [0.0, 1.0]],
            ],
            label,
            planar: false,
        }
    }

    pub fn is_full_rect(&self) -> bool {
        self.planar && self.sides.len() == 4
    }

    fn point(&self, uv: [f64; 2]) -> Vector {
        (self.chart)(uv[0], uv[1])
    }

    /// Parameter points used for labelling (coarse) or auditing (dense).
    fn sample_params(&self, dense: bool) -> Vec<[f64; 2]> {
        let [x0, y0] = self.rect.lo;
        let [x1, y1] = self.rect.hi;
        let n = if dense {
            2 * AUDIT_ORDER
        } else {
            LABEL_GRID - 1
        };
        let mut out = Vec::with_capacity((n + 1) * (n + 1) + AUDIT_ORDER * AUDIT_ORDER);
        for i in 0..=n {
            for j in 0..=n {
                out.push([
                    x0 + (x1 - x0) * i as f64 / n as f64,
                    y0 + (y1 - y0) * j as f64 / n as f64,
                ]);
            }
        }
        if dense {
            let rule = GaussLegendre::new(AUDIT_ORDER);
            let xs: Vec<f64> = rule.mapped(x0, x1).map(|p| p.0).collect();
            let ys: Vec<f64> = rule.mapped(y0, y1).map(|p| p.0).collect();
            for &x in &xs {
                for &y in &ys {
                    out.push([x, y]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfEdge {
    pub face: usize,
    pub origin: usize,
    pub target: usize,
    /// Start and end in the rect coordinates of `face`.
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub twin: Option<usize>,
    pub next: usize,
    pub prev: usize,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub spec: FaceSpec,
    /// Boundary half-edges in anticlockwise order.
    pub halfedges: Vec<usize>,
}

/// One row of a row-structured partition: the band `lo ≤ x ≤ hi` of the row
/// coordinate, cut by `breaks` along the other coordinate.
///
/// For a periodic break coordinate there is one label per break (the last
/// brick wraps round); otherwise `breaks` includes both ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSpec {
    pub lo: f64,
    pub hi: f64,
    pub breaks: Vec<f64>,
    pub labels: Vec<ChartId>,
}

/// Labelled partition `T` of a parameter surface.
#[derive(Clone)]
pub struct LabeledSurfacePartition {
    domain: SurfaceDomain,
    vertices: Vec<Vector>,
    halfedges: Vec<HalfEdge>,
    faces: Vec<Face>,
    outgoing: Vec<Vec<usize>>,
    orientation: Orientation,
}

impl fmt::Debug for LabeledSurfacePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LabeledSurfacePartition")
            .field("domain", &self.domain)
            .field("vertices", &self.vertices.len())
            .field("faces", &self.faces.len())
            .field("orientation", &self.orientation)
            .finish()
    }
}

/// Serialisable face table of a partition.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionSummary {
    pub domain: SurfaceDomain,
    pub orientation: Orientation,
    pub vertices: usize,
    pub edges: usize,
    pub labels: Vec<ChartId>,
    pub rects: Vec<[[f64; 2]; 2]>,
}

/// Per-vertex candidate lookup for side splitting.
struct VertexIndex {
    points: Vec<Vector>,
}

impl VertexIndex {
    fn on_segment(&self, domain: &SurfaceDomain, a: &Vector, b: &Vector) -> Vec<(f64, usize)> {
        let d = b - a;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return vec![];
        }
        let len = len2.sqrt();
        let tol = KEY_QUANTUM * len.max(1.0);
        let mid = (a + b) * 0.5;
        let mut out = Vec::new();
        for (id, p) in self.points.iter().enumerate() {
            let q = domain.nearest_image(p, &mid);
            if (0..q.len()).any(|k| q[k] < a[k].min(b[k]) - tol || q[k] > a[k].max(b[k]) + tol) {
                continue;
            }
            let s = (&q - a).dot(&d) / len2;
            if s * len <= tol || (1.0 - s) * len <= tol {
                continue;
            }
            if (&q - a - &d * s).norm() <= tol {
                out.push((s, id));
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }
}

impl LabeledSurfacePartition {
    /// Assembles the mesh from face specifications.
    pub fn from_faces(domain: SurfaceDomain, specs: Vec<FaceSpec>) -> Result<Self> {
        let mut keys: HashMap<[i64; 3], usize> = HashMap::new();
        let mut vertices: Vec<Vector> = Vec::new();
        let vid = |keys: &mut HashMap<[i64; 3], usize>,
                   vertices: &mut Vec<Vector>,
                   p: &Vector|
         -> usize {
            let key = domain.key(p);
            *keys.entry(key).or_insert_with(|| {
                vertices.push(domain.canonical(p));
                vertices.len() - 1
            })
        };
        for spec in &specs {
            if spec.sides.is_empty() {
                return Err(Error::InvalidPartition(
                    "face without boundary sides".into(),
                ));
            }
            for side in &spec.sides {
                vid(&mut keys, &mut vertices, &spec.point(side[0]));
                vid(&mut keys, &mut vertices, &spec.point(side[1]));
            }
        }
        let index = VertexIndex {
            points: vertices.clone(),
        };

        let mut halfedges: Vec<HalfEdge> = Vec::new();
        let mut faces: Vec<Face> = Vec::with_capacity(specs.len());
        for (f, spec) in specs.into_iter().enumerate() {
            let mut ids = Vec::new();
            for side in &spec.sides {
                let pa = spec.point(side[0]);
                let pb = spec.point(side[1]);
                let mut stops: Vec<(f64, usize)> = vec![(0.0, vid(&mut keys, &mut vertices, &pa))];
                stops.extend(index.on_segment(&domain, &pa, &pb));
                stops.push((1.0, vid(&mut keys, &mut vertices, &pb)));
                for w in stops.windows(2) {
                    let lerp = |s: f64| {
                        [
                            side[0][0] + s * (side[1][0] - side[0][0]),
                            side[0][1] + s * (side[1][1] - side[0][1]),
                        ]
                    };
                    ids.push(halfedges.len());
                    halfedges.push(HalfEdge {
                        face: f,
                        origin: w[0].1,
                        target: w[1].1,
                        from: lerp(w[0].0),
                        to: lerp(w[1].0),
                        twin: None,
                        next: 0,
                        prev: 0,
                    });
                }
            }
            let n = ids.len();
            for k in 0..n {
                let (h, nx) = (ids[k], ids[(k + 1) % n]);
                if halfedges[h].target != halfedges[nx].origin {
                    return Err(Error::InvalidPartition(format!(
                        "boundary of face {f} is not closed"
                    )));
                }
                halfedges[h].next = nx;
                halfedges[nx].prev = h;
            }
            faces.push(Face {
                spec,
                halfedges: ids,
            });
        }

        // Points at fractions 1/4 and 3/4 along an edge tell the two
        // directions of a closed-loop edge apart.
        let along = |e: &HalfEdge, s: f64| {
            let spec = &faces[e.face].spec;
            domain.key(&spec.point([
                e.from[0] + s * (e.to[0] - e.from[0]),
                e.from[1] + s * (e.to[1] - e.from[1]),
            ]))
        };
        let mut by_ends: HashMap<(usize, usize, [i64; 3], [i64; 3]), usize> = HashMap::new();
        for (h, e) in halfedges.iter().enumerate() {
            if by_ends
                .insert((e.origin, e.target, along(e, 0.5), along(e, 0.25)), h)
                .is_some()
            {
                return Err(Error::InvalidPartition(
                    "two faces traverse an edge in the same direction (inconsistent orientation)"
                        .into(),
                ));
            }
        }
        let twins: Vec<Option<usize>> = halfedges
            .iter()
            .enumerate()
            .map(|(h, e)| {
                by_ends
                    .get(&(e.target, e.origin, along(e, 0.5), along(e, 0.75)))
                    .copied()
                    .filter(|&t| t != h)
            })
            .collect();
        for (e, t) in halfedges.iter_mut().zip(twins) {
            e.twin = t;
        }

        let mut outgoing = vec![Vec::new(); vertices.len()];
        for (h, e) in halfedges.iter().enumerate() {
            outgoing[e.origin].push(h);
        }
        Ok(Self {
            domain,
            vertices,
            halfedges,
            faces,
            outgoing,
            orientation: Orientation::Positive,
        })
    }

    /// Partition made of rows of bricks.
    ///
    /// Planar domains stack rows along `v` and cut them along `u`; disks and
    /// spheres stack rings along the radial coordinate and cut them along `φ`.
    /// A row touching a pole or the disk centre must consist of one face,
    /// which becomes a polar cap bounded by its ring.
    pub fn from_rows(domain: SurfaceDomain, rows: &[RowSpec]) -> Result<Self> {
        let (row_is_v, periodic_breaks, break_range) = match domain {
            SurfaceDomain::Planar { u, periodic, .. } => (true, periodic[0], u),
            SurfaceDomain::Disk { .. } | SurfaceDomain::Sphere => (false, true, [0.0, TAU]),
            SurfaceDomain::BoxBoundary { .. } => {
                return Err(Error::InvalidPartition(
                    "box boundaries come from volume partitions".into(),
                ))
            }
        };
        let mut specs = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if !(row.lo < row.hi) {
                return Err(Error::InvalidPartition(format!("row {r} has empty extent")));
            }
            let expected = if periodic_breaks {
                row.labels.len()
            } else {
                row.labels.len() + 1
            };
            if row.labels.is_empty() || row.breaks.len() != expected {
                return Err(Error::InvalidPartition(format!(
                    "row {r}: {} breaks for {} labels",
                    row.breaks.len(),
                    row.labels.len()
                )));
            }
            if row.breaks.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidPartition(format!(
                    "row {r}: breaks must increase"
                )));
            }
            if periodic_breaks
                && row.breaks.last().unwrap() - row.breaks[0] >= break_range[1] - break_range[0]
            {
                return Err(Error::InvalidPartition(format!(
                    "row {r}: breaks exceed one period"
                )));
            }
            let is_cap = match domain {
                SurfaceDomain::Disk { .. } => row.lo == 0.0,
                SurfaceDomain::Sphere => row.lo == 0.0 || row.hi == PI,
                _ => false,
            };
            let period = break_range[1] - break_range[0];
            let n = row.labels.len();
            if is_cap {
                if n != 1 {
                    return Err(Error::InvalidPartition(format!(
                        "polar row {r} must be a single face"
                    )));
                }
                let rect = Cell::new([row.lo, row.breaks[0]], [row.hi, row.breaks[0] + period]);
                specs.push(FaceSpec::cap(rect, row.lo == 0.0, row.labels[0]));
                continue;
            }
            for k in 0..n {
                let b0 = row.breaks[k];
                let b1 = if k + 1 < row.breaks.len() {
                    row.breaks[k + 1]
                } else {
                    row.breaks[0] + period
                };
                let rect = if row_is_v {
                    Cell::new([b0, row.lo], [b1, row.hi])
                } else {
                    Cell::new([row.lo, b0], [row.hi, b1])
                };
                let mut spec = FaceSpec::planar(rect, row.labels[k]);
                spec.planar = row_is_v;
                specs.push(spec);
            }
        }
        Self::from_faces(domain, specs)
    }

    pub fn domain(&self) -> &SurfaceDomain {
        &self.domain
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Same partition of the oppositely oriented surface.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.orientation = self.orientation.reversed();
        out
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn halfedges(&self) -> &[HalfEdge] {
        &self.halfedges
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn label(&self, face: usize) -> ChartId {
        self.faces[face].spec.label
    }

    pub fn labels(&self) -> Vec<ChartId> {
        self.faces.iter().map(|f| f.spec.label).collect()
    }

    pub fn specs(&self) -> Vec<FaceSpec> {
        self.faces.iter().map(|f| f.spec.clone()).collect()
    }

    /// Domain point of a parameter point of a face.
    pub fn face_point(&self, face: usize, uv: [f64; 2]) -> Vector {
        self.faces[face].spec.point(uv)
    }

    /// Internal edges as `(h, twin)` with `h < twin`; face of `h` lies on its left.
    pub fn internal_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.halfedges
            .iter()
            .enumerate()
            .filter_map(|(h, e)| e.twin.filter(|&t| h < t).map(|t| (h, t)))
    }

    pub fn edge_count(&self) -> usize {
        self.halfedges
            .iter()
            .enumerate()
            .filter(|(h, e)| e.twin.is_none_or(|t| *h < t))
            .count()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.outgoing[v].iter().any(|&h| {
            self.halfedges[h].twin.is_none()
                || self.halfedges[self.halfedges[h].prev].twin.is_none()
        }) || self
            .halfedges
            .iter()
            .any(|e| e.twin.is_none() && e.target == v)
    }

    /// Outgoing half-edges of an internal vertex in anticlockwise order;
    /// `None` on the boundary.
    pub fn vertex_halfedges(&self, v: usize) -> Option<Vec<usize>> {
        let start = *self.outgoing[v].first()?;
        let mut out = Vec::new();
        let mut h = start;
        for _ in 0..=self.outgoing[v].len() {
            out.push(h);
            let incoming = self.halfedges[h].prev;
            h = self.halfedges[incoming].twin?;
            if h == start {
                return if out.len() == self.outgoing[v].len() {
                    Some(out)
                } else {
                    None
                };
            }
        }
        None
    }

    /// Faces around an internal vertex in anticlockwise order; `None` on the boundary.
    pub fn vertex_faces(&self, v: usize) -> Option<Vec<usize>> {
        Some(
            self.vertex_halfedges(v)?
                .into_iter()
                .map(|h| self.halfedges[h].face)
                .collect(),
        )
    }

    /// Internal vertices with the faces around them.
    pub fn internal_vertices(&self) -> Vec<(usize, Vec<usize>)> {
        (0..self.vertices.len())
            .filter_map(|v| self.vertex_faces(v).map(|f| (v, f)))
            .collect()
    }

    /// Number of distinct faces at each internal vertex.
    pub fn internal_valences(&self) -> Vec<usize> {
        self.internal_vertices()
            .into_iter()
            .map(|(_, f)| f.into_iter().collect::<BTreeSet<_>>().len())
            .collect()
    }

    /// Boundary circles as chains of boundary half-edges, each traversed with
    /// the surface on its left.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let mut from: HashMap<usize, usize> = HashMap::new();
        for (h, e) in self.halfedges.iter().enumerate() {
            if e.twin.is_none() {
                from.insert(e.origin, h);
            }
        }
        let mut seen = vec![false; self.halfedges.len()];
        let mut loops = Vec::new();
        for (h0, e) in self.halfedges.iter().enumerate() {
            if e.twin.is_some() || seen[h0] {
                continue;
            }
            let mut chain = Vec::new();
            let mut h = h0;
            while !seen[h] {
                seen[h] = true;
                chain.push(h);
                match from.get(&self.halfedges[h].target) {
                    Some(&n) => h = n,
                    None => break,
                }
            }
            loops.push(chain);
        }
        loops
    }

    pub fn summary(&self) -> PartitionSummary {
        PartitionSummary {
            domain: self.domain,
            orientation: self.orientation,
            vertices: self.vertices.len(),
            edges: self.edge_count(),
            labels: self.labels(),
            rects: self
                .faces
                .iter()
                .map(|f| [f.spec.rect.lo, f.spec.rect.hi])
                .collect(),
        }
    }

    /// Composes every face chart with `f` (a diffeomorphism of the domain).
    ///
    /// Used for reparametrisations `X ∘ σ` together with `σ^{-1}(T)`.
    pub fn with_charts_mapped(&self, f: Arc<dyn Fn(&Vector) -> Vector + Send + Sync>) -> Self {
        let mut out = self.clone();
        for face in &mut out.faces {
            let chart = face.spec.chart.clone();
            let g = f.clone();
            face.spec.chart = Arc::new(move |u, v| g(&chart(u, v)));
            face.spec.planar = false;
        }
        out.vertices = self.vertices.iter().map(|p| f(p)).collect();
        out
    }

    fn with_specs(&self, specs: Vec<FaceSpec>) -> Result<Self> {
        let mut out = Self::from_faces(self.domain, specs)?;
        out.orientation = self.orientation;
        Ok(out)
    }

    /// Splits face `face` by the chord `rect coordinate[axis] = at`.
    ///
    /// The chord must end at interior points of existing edges, so the new
    /// vertices are trivalent.
    pub fn refine_face(&self, face: usize, axis: usize, at: f64) -> Result<Self> {
        let spec = &self
            .faces
            .get(face)
            .ok_or_else(|| bad_face(face, self.faces.len()))?
            .spec;
        if !spec.is_full_rect() || axis > 1 {
            return Err(Error::InvalidPartition(format!(
                "face {face} cannot be split along axis {axis}"
            )));
        }
        let (lo, hi) = (spec.rect.lo[axis], spec.rect.hi[axis]);
        if !(lo < at && at < hi) {
            return Err(Error::InvalidPartition(format!(
                "chord {at} outside ({lo}, {hi})"
            )));
        }
        for &h in &self.faces[face].halfedges {
            let e = &self.halfedges[h];
            if (e.from[axis] - at).abs() < KEY_QUANTUM {
                return Err(Error::InvalidPartition(format!(
                    "chord {at} of face {face} ends at an existing vertex"
                )));
            }
        }
        let mut a = spec.clone();
        let mut b = spec.clone();
        a.rect.hi[axis] = at;
        b.rect.lo[axis] = at;
        a.sides = rect_sides(&a.rect);
        b.sides = rect_sides(&b.rect);
        let mut specs = self.specs();
        specs[face] = a;
        specs.insert(face + 1, b);
        self.with_specs(specs)
    }

    /// Merges two faces with equal labels whose rectangles share a full side.
    pub fn merge_faces(&self, a: usize, b: usize) -> Result<Self> {
        let n = self.faces.len();
        if a >= n || b >= n || a == b {
            return Err(Error::InvalidMerge {
                index: a,
                other: b,
                reason: "bad face indices".into(),
            });
        }
        let (sa, sb) = (&self.faces[a].spec, &self.faces[b].spec);
        if sa.label != sb.label {
            return Err(Error::InvalidMerge {
                index: a,
                other: b,
                reason: format!("labels {} and {} differ", sa.label, sb.label),
            });
        }
        if !sa.is_full_rect() || !sb.is_full_rect() {
            return Err(Error::InvalidMerge {
                index: a,
                other: b,
                reason: "faces are not rectangles".into(),
            });
        }
        let close = |x: f64, y: f64| (x - y).abs() < KEY_QUANTUM;
        let mut union = None;
        for axis in 0..2 {
            let other = 1 - axis;
            let same_span = close(sa.rect.lo[other], sb.rect.lo[other])
                && close(sa.rect.hi[other], sb.rect.hi[other]);
            if !same_span {
                continue;
            }
            if close(sa.rect.hi[axis], sb.rect.lo[axis]) {
                let mut r = sa.rect;
                r.hi[axis] = sb.rect.hi[axis];
                union = Some(r);
            } else if close(sb.rect.hi[axis], sa.rect.lo[axis]) {
                let mut r = sa.rect;
                r.lo[axis] = sb.rect.lo[axis];
                union = Some(r);
            }
        }
        let Some(rect) = union else {
            return Err(Error::InvalidMerge {
                index: a,
                other: b,
                reason: "rectangles do not share a full side".into(),
            });
        };
        let mut merged = sa.clone();
        merged.rect = rect;
        merged.sides = rect_sides(&rect);
        let (first, second) = (a.min(b), a.max(b));
        let mut specs = self.specs();
        specs.remove(second);
        specs[first] = merged;
        self.with_specs(specs)
    }

    /// Changes the label of a face after checking the image stays in the chart.
    pub fn relabel_face(
        &self,
        face: usize,
        label: ChartId,
        map: &SurfaceMap,
        cover: &ChartCover,
    ) -> Result<Self> {
        let spec = &self
            .faces
            .get(face)
            .ok_or_else(|| bad_face(face, self.faces.len()))?
            .spec;
        cover.chart(label)?;
        if face_min_margin(spec, label, map, cover, true) <= 0.0 {
            return Err(Error::InvalidRelabel {
                index: face,
                chart: label,
            });
        }
        let mut out = self.clone();
        out.faces[face].spec.label = label;
        Ok(out)
    }

    /// Smallest margin of any face's audit samples in its labelled chart.
    pub fn min_margin(&self, map: &SurfaceMap, cover: &ChartCover) -> f64 {
        use rayon::prelude::*;
        self.faces
            .par_iter()
            .map(|f| face_min_margin(&f.spec, f.spec.label, map, cover, true))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, map: &SurfaceMap, cover: &ChartCover) -> Result<()> {
        for (k, f) in self.faces.iter().enumerate() {
            cover.chart(f.spec.label)?;
            let m = face_min_margin(&f.spec, f.spec.label, map, cover, true);
            if m <= 0.0 {
                return Err(Error::InvalidPartition(format!(
                    "face {k} leaves chart {} (margin {m})",
                    f.spec.label
                )));
            }
        }
        Ok(())
    }

    /// Internal half-edges along the line `coordinate[axis] ≡ value` of a
    /// planar domain, oriented in the increasing direction of the other
    /// coordinate and sorted along it. The face of each returned half-edge is
    /// the face on the left of the line.
    pub fn line_edges(&self, axis: usize, value: f64) -> Result<Vec<usize>> {
        let SurfaceDomain::Planar { u, v, periodic } = self.domain else {
            return Err(Error::CutGeometryInvalid(
                "cuts are supported on planar domains only".into(),
            ));
        };
        let range = if axis == 0 { u } else { v };
        let period = range[1] - range[0];
        let on_line = |x: f64| {
            let d = if periodic[axis] {
                (x - value).rem_euclid(period)
            } else {
                x - value
            };
            d.abs() < KEY_QUANTUM || (periodic[axis] && (d - period).abs() < KEY_QUANTUM)
        };
        let other = 1 - axis;
        let mut edges: Vec<(f64, usize)> = Vec::new();
        for (h, e) in self.halfedges.iter().enumerate() {
            let spec = &self.faces[e.face].spec;
            if !spec.planar {
                return Err(Error::CutGeometryInvalid(
                    "faces must be planar rectangles".into(),
                ));
            }
            if e.twin.is_none() || !on_line(e.from[axis]) || !on_line(e.to[axis]) {
                continue;
            }
            if e.to[other] > e.from[other] {
                edges.push((e.from[other], h));
            }
        }
        let other_range = if other == 0 { u } else { v };
        let wrap = |x: f64| {
            if periodic[other] {
                other_range[0] + (x - other_range[0]).rem_euclid(other_range[1] - other_range[0])
            } else {
                x
            }
        };
        edges.sort_by(|a, b| wrap(a.0).total_cmp(&wrap(b.0)));
        let covered: f64 = edges
            .iter()
            .map(|&(_, h)| self.halfedges[h].to[other] - self.halfedges[h].from[other])
            .sum();
        let full = other_range[1] - other_range[0];
        if (covered - full).abs() > 1e-9 * full.max(1.0) {
            return Err(Error::CutGeometryInvalid(format!(
                "the line coordinate[{axis}] = {value} does not run along internal edges"
            )));
        }
        Ok(edges.into_iter().map(|(_, h)| h).collect())
    }

    /// Cuts a planar domain along `coordinate[axis] = value`, which must run
    /// along edges. The periodic coordinate becomes an interval
    /// `[value, value + period]`; face order is preserved.
    pub fn cut_planar(&self, axis: usize, value: f64) -> Result<Self> {
        let SurfaceDomain::Planar {
            mut u,
            mut v,
            mut periodic,
        } = self.domain
        else {
            return Err(Error::CutGeometryInvalid(
                "cuts are supported on planar domains only".into(),
            ));
        };
        if !periodic[axis] {
            return Err(Error::CutGeometryInvalid(format!(
                "coordinate {axis} is not periodic"
            )));
        }
        self.line_edges(axis, value)?;
        let range = if axis == 0 { &mut u } else { &mut v };
        let period = range[1] - range[0];
        *range = [value, value + period];
        periodic[axis] = false;
        let domain = SurfaceDomain::Planar { u, v, periodic };
        let mut specs = Vec::with_capacity(self.faces.len());
        for (k, f) in self.faces.iter().enumerate() {
            let spec = &f.spec;
            let shift = period * ((value - spec.rect.lo[axis]) / period).ceil();
            let shift = if spec.rect.lo[axis] + shift >= value + period - KEY_QUANTUM {
                shift - period
            } else {
                shift
            };
            let lo = spec.rect.lo[axis] + shift;
            let hi = spec.rect.hi[axis] + shift;
            if lo < value - KEY_QUANTUM || hi > value + period + KEY_QUANTUM {
                return Err(Error::CutGeometryInvalid(format!(
                    "face {k} straddles the cut"
                )));
            }
            let mut s = spec.clone();
            s.rect.lo[axis] = lo;
            s.rect.hi[axis] = hi;
            for side in &mut s.sides {
                side[0][axis] += shift;
                side[1][axis] += shift;
            }
            let chart = spec.chart.clone();
            s.chart = Arc::new(move |a, b| {
                let mut uv = [a, b];
                uv[axis] -= shift;
                let mut p = chart(uv[0], uv[1]);
                p[axis] += shift;
                p
            });
            specs.push(s);
        }
        let mut out = Self::from_faces(domain, specs)?;
        out.orientation = self.orientation;
        Ok(out)
    }

    /// Splits a planar partition by lines `coordinate[axis] = c` that cross
    /// faces transversally. With one cut value the two sides are returned;
    /// with two values on a periodic coordinate the band between them and
    /// its complement are returned.
    pub fn split_planar(&self, axis: usize, cuts: &[f64]) -> Result<(Self, Self)> {
        let SurfaceDomain::Planar { u, v, periodic } = self.domain else {
            return Err(Error::CutGeometryInvalid(
                "splits are supported on planar domains only".into(),
            ));
        };
        let range = if axis == 0 { u } else { v };
        let period = range[1] - range[0];
        match (periodic[axis], cuts.len()) {
            (false, 1) | (true, 2) => {}
            _ => {
                return Err(Error::CutGeometryInvalid(
                    "need one cut on an interval or two on a circle".into(),
                ))
            }
        }
        for p in &self.vertices {
            for &c in cuts {
                let d = if periodic[axis] {
                    (p[axis] - c).rem_euclid(period)
                } else {
                    p[axis] - c
                };
                if d.abs() < 1e-7 || (periodic[axis] && (d - period).abs() < 1e-7) {
                    return Err(Error::CutGeometryInvalid(format!(
                        "cut at {c} passes through a vertex"
                    )));
                }
            }
        }
        let side_of = |x: f64| -> bool {
            if periodic[axis] {
                let (a, b) = (cuts[0], cuts[1]);
                let rel = (x - a).rem_euclid(period);
                rel < (b - a).rem_euclid(period)
            } else {
                x < cuts[0]
            }
        };
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for (k, f) in self.faces.iter().enumerate() {
            let spec = &f.spec;
            if !spec.is_full_rect() {
                return Err(Error::CutGeometryInvalid(format!(
                    "face {k} is not a planar rectangle"
                )));
            }
            let (lo, hi) = (spec.rect.lo[axis], spec.rect.hi[axis]);
            let mut stops = vec![lo];
            for &c in cuts {
                let base = if periodic[axis] {
                    c + period * ((lo - c) / period).ceil()
                } else {
                    c
                };
                let mut x = base;
                while x < hi {
                    if x > lo {
                        stops.push(x);
                    }
                    if !periodic[axis] {
                        break;
                    }
                    x += period;
                }
            }
            stops.push(hi);
            stops.sort_by(f64::total_cmp);
            for w in stops.windows(2) {
                let mut s = spec.clone();
                s.rect.lo[axis] = w[0];
                s.rect.hi[axis] = w[1];
                s.sides = rect_sides(&s.rect);
                if side_of(0.5 * (w[0] + w[1])) {
                    first.push(s);
                } else {
                    second.push(s);
                }
            }
        }
        Ok((self.with_specs(first)?, self.with_specs(second)?))
    }

    /// Union of two partitions of the same domain glued along their common
    /// boundary, which must carry identical labelled partitions on both sides.
    /// Returns the joined partition and the number of seam edges.
    pub fn join(a: &Self, b: &Self) -> Result<(Self, usize)> {
        if a.domain != b.domain {
            return Err(Error::SeamMismatch(
                "pieces live on different domains".into(),
            ));
        }
        let na = a.faces.len();
        let mut specs = a.specs();
        specs.extend(b.specs());
        let joined = Self::from_faces(a.domain, specs)?;
        let key_set = |p: &Self| -> BTreeSet<[i64; 3]> {
            p.vertices.iter().map(|x| p.domain.key(x)).collect()
        };
        let (ka, kb) = (key_set(a), key_set(b));
        let mut seam = 0;
        for (h, t) in joined.internal_edges() {
            let (fh, ft) = (joined.halfedges[h].face, joined.halfedges[t].face);
            if (fh < na) == (ft < na) {
                continue;
            }
            seam += 1;
            if joined.label(fh) != joined.label(ft) {
                return Err(Error::SeamMismatch(format!(
                    "labels {} and {} meet across the seam",
                    joined.label(fh),
                    joined.label(ft)
                )));
            }
            for v in [joined.halfedges[h].origin, joined.halfedges[h].target] {
                let k = joined.domain.key(&joined.vertices[v]);
                if !(ka.contains(&k) && kb.contains(&k)) {
                    return Err(Error::SeamMismatch(
                        "seam breakpoints differ between the pieces".into(),
                    ));
                }
            }
        }
        if seam == 0 {
            return Err(Error::SeamMismatch("the pieces share no boundary".into()));
        }
        let mut joined = joined;
        joined.orientation = a.orientation;
        Ok((joined, seam))
    }
}

fn bad_face(face: usize, n: usize) -> Error {
    Error::InvalidPartition(format!("face {face} out of range ({n} faces)"))
}

fn face_min_margin(
    spec: &FaceSpec,
    label: ChartId,
    map: &SurfaceMap,
    cover: &ChartCover,
    dense: bool,
) -> f64 {
    spec.sample_params(dense)
        .into_iter()
        .map(|uv| cover.margin(label, &map(&spec.point(uv))))
        .fold(f64::INFINITY, f64::min)
}

/// Geometry of a brick-wall partition before labelling.
pub fn brick_rows(
    domain: &SurfaceDomain,
    resolution: (usize, usize),
) -> Result<Vec<(f64, f64, Vec<f64>)>> {
    let (nu, nv) = resolution;
    if nu < 2 || nv < 2 {
        return Err(Error::BadParameter {
            name: "resolution".into(),
            reason: format!("need at least (2, 2), got ({nu}, {nv})"),
        });
    }
    let mut rows = Vec::new();
    let periodic_breaks = |lo: f64, width: f64, offset: f64| -> Vec<f64> {
        (0..nu).map(|k| lo + offset + k as f64 * width).collect()
    };
    match *domain {
        SurfaceDomain::Planar { u, v, periodic } => {
            let nv = if periodic[1] && nv % 2 == 1 {
                nv + 1
            } else {
                nv
            };
            let w = (u[1] - u[0]) / nu as f64;
            let hv = (v[1] - v[0]) / nv as f64;
            for r in 0..nv {
                let offset = if r % 2 == 1 { 0.5 * w } else { 0.0 };
                let breaks = if periodic[0] {
                    periodic_breaks(u[0], w, offset)
                } else {
                    let mut b = vec![u[0]];
                    b.extend(
                        (0..=nu)
                            .map(|k| u[0] + offset + k as f64 * w)
                            .filter(|&x| x > u[0] + 1e-12 && x < u[1] - 1e-12),
                    );
                    b.push(u[1]);
                    b
                };
                rows.push((v[0] + r as f64 * hv, v[0] + (r + 1) as f64 * hv, breaks));
            }
        }
        SurfaceDomain::Disk { radius } => {
            let w = TAU / nu as f64;
            let h = radius / nv as f64;
            for r in 0..nv {
                let hi = if r + 1 == nv {
                    radius
                } else {
                    (r + 1) as f64 * h
                };
                // the cap's ring vertex sits on a break of the next ring
                let breaks = if r == 0 {
                    vec![0.5 * w]
                } else {
                    periodic_breaks(0.0, w, if r % 2 == 1 { 0.5 * w } else { 0.0 })
                };
                rows.push((r as f64 * h, hi, breaks));
            }
        }
        SurfaceDomain::Sphere => {
            let nv = nv.max(3);
            let w = TAU / nu as f64;
            let h = PI / nv as f64;
            for r in 0..nv {
                let lo = r as f64 * h;
                let hi = if r + 1 == nv { PI } else { (r + 1) as f64 * h };
                let breaks = if r == 0 {
                    vec![0.5 * w]
                } else if r + 1 == nv {
                    vec![if (nv - 2) % 2 == 1 { 0.5 * w } else { 0.0 }]
                } else {
                    periodic_breaks(0.0, w, if r % 2 == 1 { 0.5 * w } else { 0.0 })
                };
                rows.push((lo, hi, breaks));
            }
        }
        SurfaceDomain::BoxBoundary { .. } => {
            return Err(Error::InvalidPartition(
                "box boundaries come from volume partitions".into(),
            ))
        }
    }
    Ok(rows)
}

/// Brick-wall labelled partition of a surface domain.
///
/// Rows of bricks are offset by half a brick so every internal vertex is
/// trivalent; each brick is labelled with the chart of largest minimum margin
/// over its samples (ties to the smaller index). Polar rows become caps.
pub fn build_surface_partition(
    map: &SurfaceMap,
    domain: SurfaceDomain,
    cover: &ChartCover,
    resolution: (usize, usize),
) -> Result<LabeledSurfacePartition> {
    let rows = brick_rows(&domain, resolution)?;
    let periodic_breaks = !matches!(
        domain,
        SurfaceDomain::Planar {
            periodic: [false, _],
            ..
        }
    );
    let mut row_specs = Vec::with_capacity(rows.len());
    for (lo, hi, breaks) in rows {
        let n = if periodic_breaks {
            breaks.len()
        } else {
            breaks.len() - 1
        };
        let probe = LabeledSurfacePartition::from_rows(
            domain,
            &[RowSpec {
                lo,
                hi,
                breaks: breaks.clone(),
                labels: vec![0; n],
            }],
        )?;
        let mut labels = Vec::with_capacity(n);
        for face in probe.faces() {
            labels.push(pick_label(&face.spec, map, cover)?);
        }
        row_specs.push(RowSpec {
            lo,
            hi,
            breaks,
            labels,
        });
    }
    let partition = LabeledSurfacePartition::from_rows(domain, &row_specs)?;
    partition
        .validate(map, cover)
        .map_err(|e| Error::ResolutionTooCoarse {
            reason: e.to_string(),
        })?;
    Ok(partition)
}

fn pick_label(spec: &FaceSpec, map: &SurfaceMap, cover: &ChartCover) -> Result<ChartId> {
    let pts: Vec<Vector> = spec
        .sample_params(false)
        .into_iter()
        .map(|uv| map(&spec.point(uv)))
        .collect();
    let mut best: Option<(ChartId, f64)> = None;
    for i in 0..cover.len() {
        let m = pts
            .iter()
            .map(|p| cover.margin(i, p))
            .fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((i, m));
        }
    }
    match best {
        Some((i, m)) if m > 0.0 => Ok(i),
        _ => {
            for (uv, p) in spec.sample_params(false).into_iter().zip(&pts) {
                if cover.best_chart(p).is_none() {
                    return Err(Error::NoCoveringChart { at: uv.to_vec() });
                }
            }
            Err(Error::ResolutionTooCoarse {
                reason: format!("no single chart contains the face over {:?}", spec.rect),
            })
        }
    }
}

/// A map from a partitioned parameter surface into the ambient space.
///
/// Faces may use different maps (pieces joined along a seam); the maps must
/// agree on shared edges.
#[derive(Clone)]
pub struct SurfaceObject {
    maps: Vec<SurfaceMap>,
    face_map: Vec<usize>,
    partition: LabeledSurfacePartition,
}

impl fmt::Debug for SurfaceObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfaceObject")
            .field("partition", &self.partition)
            .field("maps", &self.maps.len())
            .finish()
    }
}

impl SurfaceObject {
    pub fn new(map: SurfaceMap, partition: LabeledSurfacePartition) -> Self {
        let face_map = vec![0; partition.faces().len()];
        Self {
            maps: vec![map],
            face_map,
            partition,
        }
    }

    pub fn partition(&self) -> &LabeledSurfacePartition {
        &self.partition
    }

    /// Same maps over another partition of the domain.
    pub fn with_partition(&self, partition: LabeledSurfacePartition) -> Result<Self> {
        let n = partition.faces().len();
        let face_map = if self.maps.len() == 1 {
            vec![0; n]
        } else if n == self.face_map.len() {
            self.face_map.clone()
        } else {
            return Err(Error::InvalidPartition(
                "face count changed on a piecewise map".into(),
            ));
        };
        Ok(Self {
            maps: self.maps.clone(),
            face_map,
            partition,
        })
    }

    pub fn map_of(&self, face: usize) -> &SurfaceMap {
        &self.maps[self.face_map[face]]
    }

    /// The map of the first piece.
    pub fn map(&self) -> &SurfaceMap {
        &self.maps[0]
    }

    /// Ambient point of parameter `uv` of a face.
    pub fn point(&self, face: usize, uv: [f64; 2]) -> Vector {
        (self.map_of(face))(&self.partition.face_point(face, uv))
    }

    /// `(s, t) ↦ X(chart_face(s, t))`.
    pub fn patch(&self, face: usize) -> impl Fn(f64, f64) -> Vector + '_ {
        let chart = self.partition.faces()[face].spec.chart.clone();
        let map = self.map_of(face).clone();
        move |s, t| map(&chart(s, t))
    }

    pub fn reversed(&self) -> Self {
        Self {
            maps: self.maps.clone(),
            face_map: self.face_map.clone(),
            partition: self.partition.reversed(),
        }
    }

    /// `(X ∘ σ, σ^{-1}(T))` for a diffeomorphism `σ` of the parameter domain.
    pub fn reparametrized(&self, sigma: SurfaceMap, sigma_inverse: SurfaceMap) -> Self {
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let (m, s) = (m.clone(), sigma.clone());
                Arc::new(move |p: &Vector| m(&s(p))) as SurfaceMap
            })
            .collect();
        Self {
            maps,
            face_map: self.face_map.clone(),
            partition: self.partition.with_charts_mapped(sigma_inverse),
        }
    }

    /// Objects on the two sides of a seam glued into one.
    pub fn join(a: &Self, b: &Self) -> Result<(Self, usize)> {
        let (partition, seam) = LabeledSurfacePartition::join(&a.partition, &b.partition)?;
        let mut maps = a.maps.clone();
        maps.extend(b.maps.iter().cloned());
        let mut face_map = a.face_map.clone();
        face_map.extend(b.face_map.iter().map(|k| k + a.maps.len()));
        let joined = Self {
            maps,
            face_map,
            partition,
        };
        for (h, t) in joined.partition.internal_edges() {
            let e = &joined.partition.halfedges()[h];
            let o = &joined.partition.halfedges()[t];
            if joined.face_map[e.face] == joined.face_map[o.face] {
                continue;
            }
            for (uh, ut) in [(e.from, o.to), (e.to, o.from)] {
                let d = (joined.point(e.face, uh) - joined.point(o.face, ut)).norm();
                if d > 1e-9 {
                    return Err(Error::SeamMismatch(format!(
                        "maps differ by {d:.3e} along the seam"
                    )));
                }
            }
        }
        Ok((joined, seam))
    }

    pub fn min_margin(&self, cover: &ChartCover) -> f64 {
        use rayon::prelude::*;
        (0..self.partition.faces().len())
            .into_par_iter()
            .map(|f| {
                face_min_margin(
                    &self.partition.faces()[f].spec,
                    self.partition.label(f),
                    self.map_of(f),
                    cover,
                    true,
                )
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, cover: &ChartCover) -> Result<()> {
        for f in 0..self.partition.faces().len() {
            let label = self.partition.label(f);
            cover.chart(label)?;
            let m = face_min_margin(
                &self.partition.faces()[f].spec,
                label,
                self.map_of(f),
                cover,
                true,
            );
            if m <= 0.0 {
                return Err(Error::InvalidPartition(format!(
                    "face {f} leaves chart {label} (margin {m})"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::Chart;

    fn one_chart(dim: usize) -> ChartCover {
        ChartCover::new(dim, 2, vec![Chart::new("all", |_: &Vector| 1.0, vec![])])
    }

    fn id_map() -> SurfaceMap {
        Arc::new(|p: &Vector| p.clone())
    }

    fn check_manifold(t: &LabeledSurfacePartition) {
        for e in t.halfedges() {
            if let Some(tw) = e.twin {
                let o = &t.halfedges()[tw];
                assert_eq!((o.origin, o.target), (e.target, e.origin));
                assert_eq!(
                    o.twin,
                    Some(
                        t.halfedges()
                            .iter()
                            .position(|x| std::ptr::eq(x, e))
                            .unwrap()
                    )
                );
            }
        }
    }

    fn euler(t: &LabeledSurfacePartition) -> i64 {
        t.vertices().len() as i64 - t.edge_count() as i64 + t.faces().len() as i64
    }

    #[test]
    fn brick_walls_are_trivalent_with_right_topology() {
        let cases = [
            (SurfaceDomain::torus(), 0, 0),
            (SurfaceDomain::cylinder([0.0, 1.0]), 0, 2),
            (SurfaceDomain::rectangle([0.0, 2.0], [0.0, 1.0]), 1, 1),
            (SurfaceDomain::disk(1.0), 1, 1),
            (SurfaceDomain::sphere(), 2, 0),
        ];
        for (domain, chi, loops) in cases {
            for res in [(4, 4), (5, 7), (8, 8)] {
                let t = build_surface_partition(&id_map(), domain, &one_chart(2), res).unwrap();
                check_manifold(&t);
                assert!(
                    t.internal_valences().iter().all(|&v| v == 3),
                    "{domain:?} {res:?}"
                );
                assert_eq!(euler(&t), chi, "{domain:?} {res:?}");
                assert_eq!(t.boundary_loops().len(), loops, "{domain:?}");
            }
        }
    }

    #[test]
    fn anticlockwise_fan_order() {
        // three faces around (1/2, 1/2): left half, lower right, upper right
        let specs = vec![
            FaceSpec::planar(Cell::new([0.0, 0.0], [0.5, 1.0]), 0),
            FaceSpec::planar(Cell::new([0.5, 0.0], [1.0, 0.5]), 1),
            FaceSpec::planar(Cell::new([0.5, 0.5], [1.0, 1.0]), 2),
        ];
        let t = LabeledSurfacePartition::from_faces(
            SurfaceDomain::rectangle([0.0, 1.0], [0.0, 1.0]),
            specs,
        )
        .unwrap();
        let inner = t.internal_vertices();
        assert_eq!(inner.len(), 1);
        let faces = &inner[0].1;
        let pos = faces.iter().position(|&f| f == 0).unwrap();
        let cyc: Vec<usize> = (0..3).map(|k| faces[(pos + k) % 3]).collect();
        assert_eq!(cyc, vec![0, 1, 2]);
    }

    #[test]
    fn refine_and_merge_are_inverse() {
        let t = build_surface_partition(&id_map(), SurfaceDomain::torus(), &one_chart(2), (4, 4))
            .unwrap();
        let f = 5;
        let rect = t.faces()[f].spec.rect;
        let at = 0.37 * rect.lo[0] + 0.63 * rect.hi[0];
        let r = t.refine_face(f, 0, at).unwrap();
        assert_eq!(r.faces().len(), t.faces().len() + 1);
        assert!(r.internal_valences().iter().all(|&v| v == 3));
        let m = r.merge_faces(f, f + 1).unwrap();
        assert_eq!(m.vertices().len(), t.vertices().len());
        assert_eq!(m.edge_count(), t.edge_count());
        assert_eq!(m.labels(), t.labels());
        assert!(matches!(
            t.merge_faces(0, 7),
            Err(Error::InvalidMerge { .. })
        ));
    }

    #[test]
    fn cut_torus_becomes_cylinder() {
        let t = build_surface_partition(&id_map(), SurfaceDomain::torus(), &one_chart(2), (4, 4))
            .unwrap();
        let v = PI / 2.0;
        let edges = t.line_edges(1, v).unwrap();
        assert!(!edges.is_empty());
        let c = t.cut_planar(1, v).unwrap();
        assert_eq!(c.boundary_loops().len(), 2);
        assert_eq!(euler(&c), 0);
        assert!(matches!(
            t.cut_planar(1, 0.3),
            Err(Error::CutGeometryInvalid(_))
        ));
    }

    #[test]
    fn stacked_single_face_rings_share_a_loop_edge() {
        let row = |lo, hi| RowSpec {
            lo,
            hi,
            breaks: vec![0.0],
            labels: vec![0],
        };
        let t = LabeledSurfacePartition::from_rows(
            SurfaceDomain::cylinder([0.0, 1.0]),
            &[row(0.0, 0.5), row(0.5, 1.0)],
        )
        .unwrap();
        let loops: Vec<usize> = t
            .halfedges()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.origin == e.target)
            .map(|(h, _)| h)
            .collect();
        assert_eq!(loops.len(), 4);
        let internal: Vec<(usize, usize)> = t.internal_edges().collect();
        assert!(internal
            .iter()
            .any(|&(a, b)| loops.contains(&a) && loops.contains(&b)));
        assert_eq!(t.boundary_loops().len(), 2);
    }

    #[test]
    fn split_and_join() {
        let t = build_surface_partition(&id_map(), SurfaceDomain::torus(), &one_chart(2), (4, 4))
            .unwrap();
        let (a, b) = t.split_planar(1, &[0.3, 3.5]).unwrap();
        assert_eq!(a.boundary_loops().len(), 2);
        let (j, seam) = LabeledSurfacePartition::join(&a, &b).unwrap();
        assert!(seam > 0);
        assert!(j.boundary_loops().is_empty());
        assert_eq!(euler(&j), 0);
    }

    #[test]
    fn triangles_make_a_square() {
        let d = SurfaceDomain::rectangle([0.0, 1.0], [0.0, 1.0]);
        let a = LabeledSurfacePartition::from_faces(
            d,
            vec![FaceSpec::triangle([0.0, 0.0], [1.0, 0.0], [1.0, 1.0], 0)],
        )
        .unwrap();
        let b = LabeledSurfacePartition::from_faces(
            d,
            vec![FaceSpec::triangle([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], 0)],
        )
        .unwrap();
        assert_eq!(a.boundary_loops()[0].len(), 3);
        let (j, seam) = LabeledSurfacePartition::join(&a, &b).unwrap();
        assert_eq!(seam, 1);
        assert_eq!(j.boundary_loops()[0].len(), 4);
        let c = LabeledSurfacePartition::from_faces(
            d,
            vec![FaceSpec::triangle([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], 1)],
        )
        .unwrap();
        assert!(matches!(
            LabeledSurfacePartition::join(&a, &c),
            Err(Error::SeamMismatch(_))
        ));
    }

    #[test]
    fn relabel_checks_the_chart() {
        let cover = ChartCover::new(
            2,
            2,
            vec![
                Chart::new("all", |_: &Vector| 1.0, vec![]),
                Chart::new("left", |y: &Vector| 1.0 - y[0], vec![]),
            ],
        );
        let t = build_surface_partition(&id_map(), SurfaceDomain::torus(), &cover, (8, 4)).unwrap();
        let inside = (0..t.faces().len())
            .find(|&f| t.faces()[f].spec.rect.hi[0] < 0.99)
            .unwrap();
        let outside = (0..t.faces().len())
            .find(|&f| t.faces()[f].spec.rect.lo[0] > 1.0)
            .unwrap();
        assert_eq!(
            t.relabel_face(inside, 1, &id_map(), &cover)
                .unwrap()
                .label(inside),
            1
        );
        assert_eq!(
            t.relabel_face(outside, 1, &id_map(), &cover).unwrap_err(),
            Error::InvalidRelabel {
                index: outside,
                chart: 1
            }
        );
    }
}
