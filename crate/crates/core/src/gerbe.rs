//! Surface transport of a U(1)-gerbe with connection as a state sum over
//! labelled partitions of surfaces: vertices carry `g_ijk`, edges `∫ A_jk`
//! and faces `∫ F_k`. Also the transition phases between two labelled
//! partitions of a loop, gluing, the Stokes identity one dimension up, and
//! reconstruction of the gerbe data from a surface-transport functor.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::cech::{gerbe_curvature, ChartCover, GerbeData, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::numerics::{
    integrate_pullback_1form, integrate_pullback_2form, integrate_pullback_3form, Cell,
    GaussLegendre, Integral, QuadConfig,
};
use crate::partition::{
    FaceSpec, LabeledLoopPartition, LabeledPathPartition, LabeledSurfacePartition,
    LabeledVolumePartition, SurfaceDomain, SurfaceMap, SurfaceObject, VolumeMap,
};
use crate::phase::Phase;
use crate::types::{vector, ChartId, Loop, Orientation, Path, Vector};

/// Breakpoints of the two partitions closer than this are treated as one point.
pub const COINCIDENCE: f64 = 1e-9;

/// Analytic 3-form `(point, u, v, w) ↦ G(u, v, w)`.
pub type ThreeForm = Arc<dyn Fn(&Vector, &Vector, &Vector, &Vector) -> f64 + Send + Sync>;

/// The pair of assignments `(Z', Z)` of a 2-dimensional transport theory.
pub trait GerbeFunctor: Send + Sync {
    fn cover(&self) -> &ChartCover;

    /// `Z'(ℓ^±, T, T')` with `T` the inner partition (on the left of `ℓ^+`).
    fn z_loop_transition(
        &self,
        ell: &Loop,
        inner: &LabeledLoopPartition,
        outer: &LabeledLoopPartition,
        orientation: Orientation,
    ) -> Result<Phase>;

    /// The same phase along an arc running between two boundary circles.
    fn z_seam_transition(
        &self,
        curve: &Path,
        left: &LabeledPathPartition,
        right: &LabeledPathPartition,
        orientation: Orientation,
    ) -> Result<Phase>;

    /// `Z(X, T)`.
    fn z_surface(&self, so: &SurfaceObject) -> Result<Phase>;
}

/// Surface state sum split by kind of term (orientation sign included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceEvaluation {
    pub phase: Phase,
    pub vertices: f64,
    pub edges: f64,
    pub faces: f64,
    pub internal_vertices: usize,
    pub internal_edges: usize,
    pub max_valence: usize,
    pub quadrature_error: f64,
}

/// Loop transition phase split by kind of term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionEvaluation {
    pub phase: Phase,
    pub vertices: f64,
    pub arcs: f64,
    /// Breakpoints shared by both partitions, resolved in the limit of a
    /// vanishing shift.
    pub coincident: usize,
    pub quadrature_error: f64,
}

/// Transport functor induced by gerbe data.
#[derive(Debug, Clone)]
pub struct GerbeTransport {
    data: Arc<GerbeData>,
    quad: QuadConfig,
}

/// `(start, label)` of each region of a partitioned curve.
struct Track {
    starts: Vec<f64>,
    labels: Vec<ChartId>,
}

impl Track {
    fn label_at(&self, x: f64) -> ChartId {
        // before the first start we are still in the last (wrapped) region
        match self.starts.partition_point(|&s| s <= x) {
            0 => self.labels[self.labels.len() - 1],
            k => self.labels[k - 1],
        }
    }
}

impl GerbeTransport {
    pub fn new(data: Arc<GerbeData>, quad: QuadConfig) -> Self {
        Self { data, quad }
    }

    pub fn data(&self) -> &Arc<GerbeData> {
        &self.data
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    /// `g_{l_0 l_m l_{m+1}}` summed over the fan of an internal vertex, read
    /// anticlockwise from the first face with the smallest label.
    fn vertex_phase(&self, labels: &[ChartId], y: &Vector) -> Result<f64> {
        if labels.len() < 3 {
            return Ok(0.0);
        }
        let n = labels.len();
        let s = (0..n).min_by_key(|&k| (labels[k], k)).unwrap_or(0);
        let l = |m: usize| labels[(s + m) % n];
        let mut sum = 0.0;
        for m in 1..n - 1 {
            sum += self.data.transition(l(0), l(m), l(m + 1), y)?.angle();
        }
        Ok(sum)
    }

    pub fn evaluate_surface(&self, so: &SurfaceObject) -> Result<SurfaceEvaluation> {
        let cover = self.data.cover();
        so.validate(cover)?;
        let part = so.partition();
        let he = part.halfedges();

        let mut vertices = 0.0;
        let mut internal_vertices = 0;
        let mut max_valence = 0;
        for v in 0..part.vertices().len() {
            let Some(hs) = part.vertex_halfedges(v) else {
                continue;
            };
            internal_vertices += 1;
            max_valence = max_valence.max(hs.len());
            let labels: Vec<ChartId> = hs.iter().map(|&h| part.label(he[h].face)).collect();
            let y = so.point(he[hs[0]].face, he[hs[0]].from);
            vertices += self.vertex_phase(&labels, &y)?;
        }

        let pairs: Vec<(usize, usize)> = part.internal_edges().collect();
        let edges: Vec<Result<Integral>> = pairs
            .par_iter()
            .map(|&(h, t)| {
                let (j, k) = (part.label(he[h].face), part.label(he[t].face));
                if j == k {
                    return Ok(Integral::default());
                }
                let e = &he[h];
                let patch = so.patch(e.face);
                let (from, to) = (e.from, e.to);
                let curve = |s: f64| {
                    patch(
                        from[0] + s * (to[0] - from[0]),
                        from[1] + s * (to[1] - from[1]),
                    )
                };
                integrate_pullback_1form(
                    |y, v| self.data.overlap_form(j, k, y, v),
                    curve,
                    0.0,
                    1.0,
                    &self.quad,
                )
            })
            .collect();
        let edges: Integral = edges
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();

        let faces: Vec<Result<Integral>> = (0..part.faces().len())
            .into_par_iter()
            .map(|f| {
                let k = part.label(f);
                integrate_pullback_2form(
                    |y, a, b| self.data.curving(k, y, a, b),
                    so.patch(f),
                    part.faces()[f].spec.rect,
                    &self.quad,
                )
            })
            .collect();
        let faces: Integral = faces
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();

        let sign = part.orientation().sign();
        let (vertices, edge_sum, face_sum) =
            (sign * vertices, sign * edges.value, sign * faces.value);
        Ok(SurfaceEvaluation {
            phase: Phase::from_angle(vertices + edge_sum + face_sum),
            vertices,
            edges: edge_sum,
            faces: face_sum,
            internal_vertices,
            internal_edges: pairs.len(),
            max_valence,
            quadrature_error: edges.error + faces.error,
        })
    }

    /// Shared evaluation for closed loops and open seams. `inner` lies on the
    /// left of the curve; `range` is the parameter interval (one period for loops).
    fn evaluate_tracks(
        &self,
        curve: &(dyn Fn(f64) -> Vector + Sync),
        range: (f64, f64),
        closed: bool,
        inner: &Track,
        outer: &Track,
        orientation: Orientation,
    ) -> Result<TransitionEvaluation> {
        let (a, b) = range;
        let period = b - a;
        let tol = COINCIDENCE * period.abs().max(1.0);
        let wrap = |x: f64| {
            if closed {
                a + (x - a).rem_euclid(period)
            } else {
                x
            }
        };

        // (position, is_inner, is_outer)
        let mut events: Vec<(f64, bool, bool)> = Vec::new();
        let mut push = |x: f64, inner_event: bool| {
            let x = wrap(x);
            if !closed && (x <= a + tol || x >= b - tol) {
                return;
            }
            events.push((x, inner_event, !inner_event));
        };
        for &s in &inner.starts {
            push(s, true);
        }
        for &s in &outer.starts {
            push(s, false);
        }
        events.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, bool, bool)> = Vec::new();
        for e in events {
            match merged.last_mut() {
                Some(last) if (e.0 - last.0).abs() <= tol => {
                    last.1 |= e.1;
                    last.2 |= e.2;
                }
                _ => merged.push(e),
            }
        }
        if closed && merged.len() > 1 {
            let (first, last) = (merged[0], merged[merged.len() - 1]);
            if first.0 + period - last.0 <= tol {
                merged[0].1 |= last.1;
                merged[0].2 |= last.2;
                merged.pop();
            }
        }

        // segment boundaries
        let mut bounds: Vec<f64> = Vec::with_capacity(merged.len() + 2);
        if closed {
            bounds.extend(merged.iter().map(|e| e.0));
            match merged.first() {
                Some(e) => bounds.push(e.0 + period),
                None => bounds.extend([a, b]),
            }
        } else {
            bounds.push(a);
            bounds.extend(merged.iter().map(|e| e.0));
            bounds.push(b);
        }
        let labels_on = |x0: f64, x1: f64| {
            let m = wrap(0.5 * (x0 + x1));
            (inner.label_at(m), outer.label_at(m))
        };
        let segs: Vec<(f64, f64, ChartId, ChartId)> = bounds
            .windows(2)
            .map(|w| {
                let (i, o) = labels_on(w[0], w[1]);
                (w[0], w[1], i, o)
            })
            .collect();

        let cover = self.data.cover();
        for (k, &(x0, x1, i, o)) in segs.iter().enumerate() {
            if i == o {
                continue;
            }
            let rule = GaussLegendre::new(8);
            let outside = rule
                .mapped(x0, x1)
                .map(|p| p.0)
                .chain([x0, x1])
                .any(|x| cover.overlap_margin(&[i, o], &curve(x)) <= 0.0);
            if outside {
                return Err(Error::ArcOutsideOverlap {
                    arc: k,
                    charts: vec![i, o],
                });
            }
        }

        let arcs: Vec<Result<Integral>> = segs
            .par_iter()
            .map(|&(x0, x1, i, o)| {
                if i == o || x1 - x0 <= 0.0 {
                    return Ok(Integral::default());
                }
                integrate_pullback_1form(
                    |y, v| self.data.overlap_form(i, o, y, v),
                    curve,
                    x0,
                    x1,
                    &self.quad,
                )
            })
            .collect();
        let arcs: Integral = arcs
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();

        let mut vertices = 0.0;
        let mut coincident = 0;
        let n = segs.len();
        for (k, &(x, is_inner, is_outer)) in merged.iter().enumerate() {
            let (prev, next) = if closed {
                (segs[(k + n - 1) % n], segs[k])
            } else {
                (segs[k], segs[k + 1])
            };
            let y = curve(x);
            let (ip, op, inn, on) = (prev.2, prev.3, next.2, next.3);
            vertices += match (is_inner, is_outer) {
                (true, true) => {
                    coincident += 1;
                    self.data.transition(ip, op, inn, &y)?.angle()
                        + self.data.transition(inn, op, on, &y)?.angle()
                }
                (true, false) => self.data.transition(ip, op, inn, &y)?.angle(),
                _ => self.data.transition(ip, op, on, &y)?.angle(),
            };
        }
        let sign = orientation.sign();
        Ok(TransitionEvaluation {
            phase: Phase::from_angle(sign * (vertices + arcs.value)),
            vertices: sign * vertices,
            arcs: sign * arcs.value,
            coincident,
            quadrature_error: arcs.error,
        })
    }

    pub fn evaluate_loop_transition(
        &self,
        ell: &Loop,
        inner: &LabeledLoopPartition,
        outer: &LabeledLoopPartition,
        orientation: Orientation,
    ) -> Result<TransitionEvaluation> {
        let cover = self.data.cover();
        inner.validate(ell, cover)?;
        outer.validate(ell, cover)?;
        let a = inner.start();
        let track = |t: &LabeledLoopPartition| {
            let r = t.rotated_start(a);
            Track {
                starts: r.angles().to_vec(),
                labels: r.labels().to_vec(),
            }
        };
        let curve = ell.curve().clone();
        self.evaluate_tracks(
            &|x| curve(x),
            (a, a + TAU),
            true,
            &track(inner),
            &track(outer),
            orientation,
        )
    }

    pub fn evaluate_seam_transition(
        &self,
        curve: &Path,
        left: &LabeledPathPartition,
        right: &LabeledPathPartition,
        orientation: Orientation,
    ) -> Result<TransitionEvaluation> {
        let cover = self.data.cover();
        left.validate(curve, cover)?;
        right.validate(curve, cover)?;
        let track = |t: &LabeledPathPartition| Track {
            starts: t.breakpoints()[..t.len()].to_vec(),
            labels: t.labels().to_vec(),
        };
        let c = curve.curve().clone();
        self.evaluate_tracks(
            &|x| c(x),
            (curve.start(), curve.end()),
            false,
            &track(left),
            &track(right),
            orientation,
        )
    }
}

impl GerbeFunctor for GerbeTransport {
    fn cover(&self) -> &ChartCover {
        self.data.cover()
    }

    fn z_loop_transition(
        &self,
        ell: &Loop,
        inner: &LabeledLoopPartition,
        outer: &LabeledLoopPartition,
        orientation: Orientation,
    ) -> Result<Phase> {
        Ok(self
            .evaluate_loop_transition(ell, inner, outer, orientation)?
            .phase)
    }

    fn z_seam_transition(
        &self,
        curve: &Path,
        left: &LabeledPathPartition,
        right: &LabeledPathPartition,
        orientation: Orientation,
    ) -> Result<Phase> {
        Ok(self
            .evaluate_seam_transition(curve, left, right, orientation)?
            .phase)
    }

    fn z_surface(&self, so: &SurfaceObject) -> Result<Phase> {
        Ok(self.evaluate_surface(so)?.phase)
    }
}

/// Curve along which a planar surface is cut, with the partitions induced on
/// its two sides. The curve runs in the increasing direction of the other
/// coordinate; `left` is the side on its left.
#[derive(Clone)]
pub enum CutCurve {
    Closed {
        curve: Loop,
        left: LabeledLoopPartition,
        right: LabeledLoopPartition,
    },
    Open {
        curve: Path,
        left: LabeledPathPartition,
        right: LabeledPathPartition,
    },
}

/// A surface object cut open along a coordinate line.
#[derive(Clone)]
pub struct CutSurface {
    pub cut: SurfaceObject,
    pub seam: CutCurve,
}

/// Cuts `so` along `coordinate[axis] = value`, a line running along edges of
/// its partition whose coordinate is periodic.
pub fn cut_surface(so: &SurfaceObject, axis: usize, value: f64) -> Result<CutSurface> {
    let part = so.partition();
    let SurfaceDomain::Planar { u, v, periodic } = *part.domain() else {
        return Err(Error::CutGeometryInvalid(
            "cuts are supported on planar domains only".into(),
        ));
    };
    let edges = part.line_edges(axis, value)?;
    let cut = so.with_partition(part.cut_planar(axis, value)?)?;
    let other = 1 - axis;
    let range = if other == 0 { u } else { v };
    let period = range[1] - range[0];
    let he = part.halfedges();
    let wrap = |x: f64| {
        if periodic[other] {
            range[0] + (x - range[0]).rem_euclid(period)
        } else {
            x
        }
    };
    let mut left: Vec<(f64, ChartId)> = Vec::new();
    let mut right: Vec<(f64, ChartId)> = Vec::new();
    let (mut last_l, mut last_r) = (usize::MAX, usize::MAX);
    for &h in &edges {
        let (fl, fr) = (he[h].face, he[he[h].twin.expect("internal edge")].face);
        let x = wrap(he[h].from[other]);
        if fl != last_l {
            left.push((x, part.label(fl)));
            last_l = fl;
        }
        if fr != last_r {
            right.push((x, part.label(fr)));
            last_r = fr;
        }
    }
    let map = so.map().clone();
    let point = move |x: f64| {
        let mut p = [0.0; 2];
        p[axis] = value;
        p[other] = x;
        map(&vector(&p))
    };
    let seam = if periodic[other] {
        let to_loop = |xs: Vec<(f64, ChartId)>| {
            let scale = TAU / period;
            LabeledLoopPartition::new(
                xs.iter().map(|p| (p.0 - range[0]) * scale).collect(),
                xs.iter().map(|p| p.1).collect(),
            )
        };
        let scale = period / TAU;
        let lo = range[0];
        CutCurve::Closed {
            curve: Loop::new(move |t| point(lo + t * scale)),
            left: to_loop(left)?,
            right: to_loop(right)?,
        }
    } else {
        let to_path = |xs: Vec<(f64, ChartId)>| {
            let mut b: Vec<f64> = xs.iter().map(|p| p.0).collect();
            b[0] = range[0];
            b.push(range[1]);
            LabeledPathPartition::new(b, xs.iter().map(|p| p.1).collect())
        };
        CutCurve::Open {
            curve: Path::new(range[0], range[1], point),
            left: to_path(left)?,
            right: to_path(right)?,
        }
    };
    Ok(CutSurface { cut, seam })
}

/// Terms of the gluing identity `Z(X', T') = Z'(X'|_C, T'_L, T'_R) Z(X, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlueReport {
    pub composite: Phase,
    pub transition: Phase,
    pub cut: Phase,
}

/// Right-hand side of the gluing identity for the cut of `so` along
/// `coordinate[axis] = value`.
pub fn glue_z_surface<Z: GerbeFunctor + ?Sized>(
    z: &Z,
    so: &SurfaceObject,
    axis: usize,
    value: f64,
) -> Result<GlueReport> {
    let CutSurface { cut, seam } = cut_surface(so, axis, value)?;
    let transition = match &seam {
        CutCurve::Closed { curve, left, right } => {
            z.z_loop_transition(curve, left, right, Orientation::Positive)?
        }
        CutCurve::Open { curve, left, right } => {
            z.z_seam_transition(curve, left, right, Orientation::Positive)?
        }
    };
    let cut_phase = z.z_surface(&cut)?;
    Ok(GlueReport {
        composite: transition + cut_phase,
        transition,
        cut: cut_phase,
    })
}

/// `Z(X_1, T_1) Z(X_2, T_2)` for two pieces meeting along a seam with the
/// same labels on both sides, together with the joined object.
pub fn partial_glue_z_surface<Z: GerbeFunctor + ?Sized>(
    z: &Z,
    a: &SurfaceObject,
    b: &SurfaceObject,
) -> Result<(Phase, SurfaceObject)> {
    let (joined, _) = SurfaceObject::join(a, b)?;
    Ok((z.z_surface(a)? + z.z_surface(b)?, joined))
}

/// Both sides of the Stokes identity for a partitioned volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stokes2Report {
    /// Surface state sum over the boundary with the induced partition.
    pub boundary_phase: Phase,
    /// `Σ_bricks ∫ H^*(G)`.
    pub curvature_phase: Phase,
    pub defect: f64,
    pub bricks: usize,
    pub quadrature_error: f64,
}

/// Integral of the curvature 3-form over a partitioned volume, analytic when
/// `g` is given and otherwise differenced from the curvings.
pub fn volume_curvature(
    data: &GerbeData,
    map: &VolumeMap,
    vol: &LabeledVolumePartition,
    g: Option<&ThreeForm>,
    quad: &QuadConfig,
) -> Result<Integral> {
    let bricks: Vec<Result<Integral>> = vol
        .bricks()
        .par_iter()
        .map(|b| {
            let form = |y: &Vector, u: &Vector, v: &Vector, w: &Vector| -> f64 {
                match g {
                    Some(g) => g(y, u, v, w),
                    None => {
                        let n = [u.norm(), v.norm(), w.norm()];
                        if n.contains(&0.0) {
                            return 0.0;
                        }
                        n[0] * n[1]
                            * n[2]
                            * gerbe_curvature(
                                data,
                                b.label,
                                y,
                                (&(u / n[0]), &(v / n[1]), &(w / n[2])),
                                DEFAULT_FD_STEP,
                            )
                            .unwrap_or(f64::NAN)
                    }
                }
            };
            integrate_pullback_3form(form, |s, t, r| map(&vector(&[s, t, r])), b.cell(), quad)
        })
        .collect();
    let total: Integral = bricks
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    if !total.value.is_finite() {
        return Err(Error::InvalidPartition(
            "curvature could not be differenced inside a brick chart".into(),
        ));
    }
    Ok(total)
}

pub fn stokes_check_2d(
    data: &Arc<GerbeData>,
    map: &VolumeMap,
    vol: &LabeledVolumePartition,
    g: Option<&ThreeForm>,
    quad: &QuadConfig,
) -> Result<Stokes2Report> {
    vol.validate(map, data.cover())?;
    let boundary = SurfaceObject::new(map.clone(), vol.boundary()?);
    let surface = GerbeTransport::new(data.clone(), *quad).evaluate_surface(&boundary)?;
    let flux = volume_curvature(data, map, vol, g, quad)?;
    let curvature_phase = Phase::from_angle(flux.value);
    Ok(Stokes2Report {
        boundary_phase: surface.phase,
        curvature_phase,
        defect: surface.phase.distance(curvature_phase),
        bricks: vol.bricks().len(),
        quadrature_error: surface.quadrature_error + flux.error,
    })
}

fn unit_square() -> SurfaceDomain {
    SurfaceDomain::rectangle([0.0, 1.0], [0.0, 1.0])
}

/// `g_ijk(y)` recovered from `Z` of the constant map on the unit square split
/// into `[0, ½] × [0, 1]` (label `i`) and the lower and upper halves of
/// `[½, 1] × [0, 1]` (labels `j`, `k`); the central vertex reads `i, j, k`
/// anticlockwise.
pub fn reconstruct_g3<Z: GerbeFunctor + ?Sized>(
    z: &Z,
    y: &Vector,
    i: ChartId,
    j: ChartId,
    k: ChartId,
) -> Result<Phase> {
    let margin = z.cover().overlap_margin(&[i, j, k], y);
    if margin <= 0.0 {
        return Err(Error::PointOutsideOverlap {
            charts: vec![i, j, k],
            margin,
        });
    }
    let part = LabeledSurfacePartition::from_faces(
        unit_square(),
        vec![
            FaceSpec::planar(Cell::new([0.0, 0.0], [0.5, 1.0]), i),
            FaceSpec::planar(Cell::new([0.5, 0.0], [1.0, 0.5]), j),
            FaceSpec::planar(Cell::new([0.5, 0.5], [1.0, 1.0]), k),
        ],
    )?;
    let y = y.clone();
    z.z_surface(&SurfaceObject::new(
        Arc::new(move |_: &Vector| y.clone()),
        part,
    ))
}

/// `A_jk(y)(v)` recovered from `Z` on the family `Q_t(u, s) = P(y + s t v)`
/// labelled `j` for `u ≤ ½` and `k` for `u ≥ ½`.
pub fn reconstruct_a2<Z: GerbeFunctor + ?Sized>(
    z: &Z,
    (j, k): (ChartId, ChartId),
    y: &Vector,
    v: &Vector,
    h: f64,
) -> Result<f64> {
    let cover = z.cover();
    let margin = cover.overlap_margin(&[j, k], y);
    if margin <= 0.0 {
        return Err(Error::PointOutsideOverlap {
            charts: vec![j, k],
            margin,
        });
    }
    let reach = h * v.norm();
    if margin <= reach {
        return Err(Error::StepTooLarge {
            step: reach,
            margin,
        });
    }
    let part = LabeledSurfacePartition::from_faces(
        unit_square(),
        vec![
            FaceSpec::planar(Cell::new([0.0, 0.0], [0.5, 1.0]), j),
            FaceSpec::planar(Cell::new([0.5, 0.0], [1.0, 1.0]), k),
        ],
    )?;
    let phase = |t: f64| -> Result<f64> {
        let proj = cover.clone();
        let (y, v) = (y.clone(), v.clone());
        let map: SurfaceMap = Arc::new(move |p: &Vector| proj.project(&(&y + &v * (p[1] * t))));
        Ok(z.z_surface(&SurfaceObject::new(map, part.clone()))?.angle())
    };
    Ok((phase(h)? - phase(-h)?) / (2.0 * h))
}

/// `F_j(y)(v, w)` recovered from `Z` on the single-face family
/// `Q_{t,u}(r, s) = P(y + r t v + s u w)` by a mixed central difference.
pub fn reconstruct_f<Z: GerbeFunctor + ?Sized>(
    z: &Z,
    j: ChartId,
    y: &Vector,
    (v, w): (&Vector, &Vector),
    h: f64,
) -> Result<f64> {
    let cover = z.cover();
    let margin = cover.margin(j, y);
    if margin <= 0.0 {
        return Err(Error::PointOutsideChart { chart: j, margin });
    }
    let reach = h * (v.norm() + w.norm());
    if margin <= reach {
        return Err(Error::StepTooLarge {
            step: reach,
            margin,
        });
    }
    let part = LabeledSurfacePartition::from_faces(
        unit_square(),
        vec![FaceSpec::planar(Cell::new([0.0, 0.0], [1.0, 1.0]), j)],
    )?;
    let phase = |t: f64, u: f64| -> Result<f64> {
        let proj = cover.clone();
        let (y, v, w) = (y.clone(), v.clone(), w.clone());
        let map: SurfaceMap =
            Arc::new(move |p: &Vector| proj.project(&(&y + &v * (p[0] * t) + &w * (p[1] * u))));
        Ok(z.z_surface(&SurfaceObject::new(map, part.clone()))?.angle())
    };
    let (pp, pm, mp, mm) = (phase(h, h)?, phase(h, -h)?, phase(-h, h)?, phase(-h, -h)?);
    Ok((pp - pm - mp + mm) / (4.0 * h * h))
}

/// Gerbe data read off a surface-transport functor; failures evaluate to NaN.
pub fn reconstructed_gerbe(z: Arc<dyn GerbeFunctor>, h_a: f64, h_f: f64) -> GerbeData {
    let cover = Arc::new(z.cover().clone());
    let (z1, z2) = (z.clone(), z.clone());
    let g3 = move |i: ChartId, j: ChartId, k: ChartId, y: &Vector| -> Complex<f64> {
        match reconstruct_g3(z1.as_ref(), y, i, j, k) {
            Ok(p) => Complex::from_polar(1.0, p.angle()),
            Err(_) => Complex::new(f64::NAN, f64::NAN),
        }
    };
    let a2 = move |j: ChartId, k: ChartId, y: &Vector, v: &Vector| -> f64 {
        let n = v.norm();
        if n == 0.0 || j == k {
            return 0.0;
        }
        let step = h_a.min(0.5 * z2.cover().overlap_margin(&[j, k], y));
        n * reconstruct_a2(z2.as_ref(), (j, k), y, &(v / n), step).unwrap_or(f64::NAN)
    };
    let f = move |k: ChartId, y: &Vector, v: &Vector, w: &Vector| -> f64 {
        let (nv, nw) = (v.norm(), w.norm());
        if nv == 0.0 || nw == 0.0 {
            return 0.0;
        }
        let step = h_f.min(0.25 * z.cover().margin(k, y));
        nv * nw * reconstruct_f(z.as_ref(), k, y, (&(v / nv), &(w / nw)), step).unwrap_or(f64::NAN)
    };
    GerbeData::new(cover, g3, a2, f)
}

/// A deliberately broken functor: every internal edge is integrated with the
/// opposite orientation.
pub struct FlippedEdges {
    pub inner: GerbeTransport,
}

impl GerbeFunctor for FlippedEdges {
    fn cover(&self) -> &ChartCover {
        self.inner.cover()
    }

    fn z_loop_transition(
        &self,
        ell: &Loop,
        inner: &LabeledLoopPartition,
        outer: &LabeledLoopPartition,
        orientation: Orientation,
    ) -> Result<Phase> {
        self.inner.z_loop_transition(ell, inner, outer, orientation)
    }

    fn z_seam_transition(
        &self,
        curve: &Path,
        left: &LabeledPathPartition,
        right: &LabeledPathPartition,
        orientation: Orientation,
    ) -> Result<Phase> {
        self.inner
            .z_seam_transition(curve, left, right, orientation)
    }

    fn z_surface(&self, so: &SurfaceObject) -> Result<Phase> {
        let e = self.inner.evaluate_surface(so)?;
        Ok(Phase::from_angle(e.vertices - e.edges + e.faces))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::{check_gerbe_cocycle, Chart};
    use crate::partition::{build_loop_partition, build_surface_partition, RowSpec};

    /// Three vertical strips of the plane, overlapping, with a gauge-trivial
    /// gerbe: `g_ijk = h_ij h_jk h_ki`, `A_jk = -d arg h_jk`, `F = 0`, where
    /// `h_jk = exp(i f_jk)` for non-constant antisymmetric `f`.
    fn strips(curving: f64) -> Arc<GerbeData> {
        let samples: Vec<Vector> = (0..9)
            .flat_map(|a| {
                (0..9).map(move |b| vector(&[a as f64 * 0.5 - 1.0, b as f64 * 0.5 - 1.0]))
            })
            .collect();
        let cover = ChartCover::new(
            2,
            2,
            vec![
                Chart::new("a", |y: &Vector| 0.4 - y[0], samples.clone()),
                Chart::new("b", |y: &Vector| 0.9 - y[0].abs(), samples.clone()),
                Chart::new("c", |y: &Vector| y[0] + 0.4, samples),
            ],
        )
        .with_overlaps(vec![vec![0, 1], vec![1, 2], vec![0, 2], vec![0, 1, 2]]);
        let f = |j: ChartId, k: ChartId, y: &Vector| -> f64 {
            let base = |a: usize, b: usize| match (a, b) {
                (0, 1) => (y[0] + 2.0 * y[1]).sin(),
                (1, 2) => y[0] * y[1],
                (0, 2) => 0.3 + y[1] * y[1],
                _ => 0.0,
            };
            if j < k {
                base(j, k)
            } else {
                -base(k, j)
            }
        };
        let grad = move |j: ChartId, k: ChartId, y: &Vector, v: &Vector| -> f64 {
            let base = |a: usize, b: usize| match (a, b) {
                (0, 1) => (y[0] + 2.0 * y[1]).cos() * (v[0] + 2.0 * v[1]),
                (1, 2) => y[1] * v[0] + y[0] * v[1],
                (0, 2) => 2.0 * y[1] * v[1],
                _ => 0.0,
            };
            if j < k {
                base(j, k)
            } else {
                -base(k, j)
            }
        };
        Arc::new(GerbeData::new(
            Arc::new(cover),
            move |i, j, k, y| Complex::from_polar(1.0, f(i, j, y) + f(j, k, y) + f(k, i, y)),
            move |j, k, y, v| -grad(j, k, y, v),
            move |_, _, v, w| curving * (v[0] * w[1] - v[1] * w[0]),
        ))
    }

    fn transport(data: Arc<GerbeData>) -> GerbeTransport {
        GerbeTransport::new(data, QuadConfig::default())
    }

    fn plane_map() -> SurfaceMap {
        Arc::new(|p: &Vector| vector(&[0.8 * p[0] - 0.8, 0.8 * p[1] - 0.8]))
    }

    #[test]
    fn gauge_trivial_gerbe_passes_the_cocycle_checks() {
        let rep = check_gerbe_cocycle(&strips(0.0), 1e-6).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn surface_phase_is_independent_of_labels() {
        let data = strips(0.0);
        let z = transport(data.clone());
        let domain = SurfaceDomain::rectangle([0.0, 2.0], [0.0, 2.0]);
        let t = build_surface_partition(&plane_map(), domain, data.cover(), (8, 8)).unwrap();
        let so = SurfaceObject::new(plane_map(), t.clone());
        let base = z.evaluate_surface(&so).unwrap();
        assert!(base.internal_vertices > 0);
        // relabelling interior faces only leaves the boundary term unchanged
        let mut relabelled = t.clone();
        let mut changed = 0;
        for f in 0..t.faces().len() {
            let on_boundary = t
                .boundary_loops()
                .iter()
                .flatten()
                .any(|&h| t.halfedges()[h].face == f);
            if on_boundary {
                continue;
            }
            for l in 0..3 {
                if l != relabelled.label(f) {
                    if let Ok(r) = relabelled.relabel_face(f, l, &plane_map(), data.cover()) {
                        relabelled = r;
                        changed += 1;
                        break;
                    }
                }
            }
        }
        assert!(changed > 5);
        let moved = z
            .z_surface(&SurfaceObject::new(plane_map(), relabelled))
            .unwrap();
        assert!(
            base.phase.distance(moved) < 1e-9,
            "{} vs {}",
            base.phase.angle(),
            moved.angle()
        );
    }

    #[test]
    fn curving_integrates_over_faces() {
        let data = strips(0.7);
        let z = transport(data.clone());
        let domain = SurfaceDomain::rectangle([0.0, 2.0], [0.0, 2.0]);
        let t = build_surface_partition(&plane_map(), domain, data.cover(), (6, 4)).unwrap();
        let flat = transport(strips(0.0))
            .z_surface(&SurfaceObject::new(plane_map(), t.clone()))
            .unwrap();
        let e = z
            .evaluate_surface(&SurfaceObject::new(plane_map(), t.clone()))
            .unwrap();
        // pulled-back area is 0.64 · 4
        assert!((e.faces - 0.7 * 0.64 * 4.0).abs() < 1e-10);
        assert!((e.phase - flat).distance(Phase::from_angle(0.7 * 2.56)) < 1e-10);
        let r = z
            .z_surface(&SurfaceObject::new(plane_map(), t.reversed()))
            .unwrap();
        assert!((r.angle() + e.phase.angle()).abs() < 1e-12);
    }

    #[test]
    fn loop_transition_identities() {
        let data = strips(0.0);
        let z = transport(data.clone());
        let ell = Loop::new(|t| vector(&[0.9 * t.cos(), 0.5 * t.sin()]));
        let t1 = build_loop_partition(&ell, data.cover(), 200).unwrap();
        let t2 = t1.rotated_start(0.3);
        let t3 = LabeledLoopPartition::new(
            t1.angles().iter().map(|a| a + 0.05).collect(),
            t1.labels().to_vec(),
        )
        .unwrap();
        let same = z
            .evaluate_loop_transition(&ell, &t1, &t1, Orientation::Positive)
            .unwrap();
        assert!(same.phase.canonical().abs() < 1e-12);
        assert_eq!(same.coincident, t1.len());
        assert_eq!(
            z.z_loop_transition(&ell, &t1, &t2, Orientation::Positive)
                .unwrap()
                .canonical()
                .abs()
                < 1e-12,
            true
        );
        let ab = z
            .z_loop_transition(&ell, &t1, &t3, Orientation::Positive)
            .unwrap();
        let ba = z
            .z_loop_transition(&ell, &t3, &t1, Orientation::Positive)
            .unwrap();
        let neg = z
            .z_loop_transition(&ell, &t1, &t3, Orientation::Negative)
            .unwrap();
        assert!((ab + ba).canonical().abs() < 1e-9);
        assert!((ab + neg).canonical().abs() < 1e-12);
    }

    #[test]
    fn annulus_equals_loop_transition() {
        let data = strips(0.0);
        let z = transport(data.clone());
        let ell = Loop::new(|t| vector(&[0.9 * t.cos(), 0.5 * t.sin()]));
        let t = build_loop_partition(&ell, data.cover(), 200).unwrap();
        let t2 = LabeledLoopPartition::new(
            t.angles().iter().map(|a| a + 0.1).collect(),
            t.labels().to_vec(),
        )
        .unwrap();
        let rows = |p: &LabeledLoopPartition, lo: f64, hi: f64| crate::partition::RowSpec {
            lo,
            hi,
            breaks: p.angles().to_vec(),
            labels: p.labels().to_vec(),
        };
        let domain = SurfaceDomain::Planar {
            u: [t.start(), t.start() + TAU],
            v: [0.0, 1.0],
            periodic: [true, false],
        };
        let part =
            LabeledSurfacePartition::from_rows(domain, &[rows(&t2, 0.0, 0.5), rows(&t, 0.5, 1.0)])
                .unwrap();
        let c = ell.curve().clone();
        let so = SurfaceObject::new(Arc::new(move |p: &Vector| c(p[0])), part);
        let annulus = z.z_surface(&so).unwrap();
        let direct = z
            .z_loop_transition(&ell, &t, &t2, Orientation::Positive)
            .unwrap();
        assert!(
            annulus.distance(direct) < 1e-9,
            "{} vs {}",
            annulus.angle(),
            direct.angle()
        );
        assert!(direct.canonical().abs() > 1e-3);
    }

    #[test]
    fn g3_a2_f_round_trip() {
        let data = strips(0.7);
        let z = transport(data.clone());
        let y = vector(&[0.1, 0.3]);
        let g = reconstruct_g3(&z, &y, 0, 1, 2).unwrap();
        assert!(g.distance(data.transition(0, 1, 2, &y).unwrap()) < 1e-12);
        assert_eq!(reconstruct_g3(&z, &y, 0, 0, 2).unwrap(), Phase::ZERO);
        let v = vector(&[0.3, -0.8]);
        let a = reconstruct_a2(&z, (0, 1), &y, &v, 1e-4).unwrap();
        assert!((a - data.overlap_form(0, 1, &y, &v)).abs() < 1e-4);
        let b = reconstruct_a2(&z, (1, 0), &y, &v, 1e-4).unwrap();
        assert!((a + b).abs() < 2e-4);
        let w = vector(&[0.5, 0.2]);
        let f = reconstruct_f(&z, 2, &y, (&v, &w), 1e-3).unwrap();
        assert!((f - data.curving(2, &y, &v, &w)).abs() < 1e-3);
        assert!(matches!(
            reconstruct_g3(&z, &vector(&[0.8, 0.0]), 0, 1, 2),
            Err(Error::PointOutsideOverlap { .. })
        ));
    }

    fn torus_map() -> SurfaceMap {
        Arc::new(|p: &Vector| {
            vector(&[
                0.8 * p[0].cos() + 0.1 * p[1].sin(),
                0.6 * p[0].sin() + 0.4 * p[1].cos(),
            ])
        })
    }

    #[test]
    fn gluing_a_torus_along_a_circle() {
        let data = strips(0.7);
        let z = transport(data.clone());
        let t =
            build_surface_partition(&torus_map(), SurfaceDomain::torus(), data.cover(), (12, 6))
                .unwrap();
        let so = SurfaceObject::new(torus_map(), t);
        let direct = z.z_surface(&so).unwrap();
        for k in 0..3 {
            let r = glue_z_surface(&z, &so, 1, TAU * k as f64 / 6.0).unwrap();
            assert!(
                r.composite.distance(direct) < 1e-10,
                "{} vs {}",
                r.composite.angle(),
                direct.angle()
            );
        }
        assert!(matches!(
            glue_z_surface(&z, &so, 1, 0.3),
            Err(Error::CutGeometryInvalid(_))
        ));
        let flipped = FlippedEdges { inner: z.clone() };
        let bad = glue_z_surface(&flipped, &so, 1, TAU / 6.0).unwrap();
        assert!(bad.composite.distance(flipped.z_surface(&so).unwrap()) > 1e-3);
    }

    #[test]
    fn self_gluing_a_square_into_a_cylinder() {
        let data = strips(0.7);
        let z = transport(data.clone());
        let map = torus_map();
        // every row breaks at u = 0, so the seam u = 0 runs along edges
        let rows: Vec<RowSpec> = (0..4)
            .map(|r| {
                let shift = if r % 2 == 1 { 0.5 } else { 0.0 };
                let mut breaks = vec![0.0];
                breaks.extend((0..6).map(|k| (k as f64 + 0.5 + shift) * TAU / 7.0));
                RowSpec {
                    lo: 0.5 * r as f64,
                    hi: 0.5 * (r + 1) as f64,
                    breaks,
                    labels: vec![0; 7],
                }
            })
            .collect();
        let mut t =
            LabeledSurfacePartition::from_rows(SurfaceDomain::cylinder([0.0, 2.0]), &rows).unwrap();
        for f in 0..t.faces().len() {
            let best = (0..3)
                .filter_map(|l| {
                    t.relabel_face(f, l, &map, data.cover())
                        .ok()
                        .map(|r| (r.min_margin(&map, data.cover()), r))
                })
                .max_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((_, r)) = best {
                t = r;
            }
        }
        let so = SurfaceObject::new(map, t);
        let direct = z.z_surface(&so).unwrap();
        let r = glue_z_surface(&z, &so, 0, 0.0).unwrap();
        assert!(
            r.composite.distance(direct) < 1e-10,
            "{} vs {}",
            r.composite.angle(),
            direct.angle()
        );
    }
}
