//! Chart covers and the local Čech data of bundles and gerbes with connection.
//!
//! Charts are open sets of the target manifold presented through an ambient
//! embedding: a chart is a signed margin function (positive inside) together
//! with a finite set of sample points used for residual scans. Forms are real
//! valued; a connection is `i·A` and transition functions are unit complex
//! numbers returned as (re, im) pairs.
//!
//! Conventions, for overlaps `U_jk`, `U_jkl`, `U_ijkl`:
//!
//! * bundle: `g_ij g_jk = g_ik` and `i(A_k - A_j) = d log g_jk`, curvature `F = dA_j`;
//! * gerbe: `g_ijk = 1` on repeated indices, `g_ijk g_ikl = g_jkl g_ijl`,
//!   `i(A_jk + A_kl + A_lj) = -d log g_jkl`, `F_k - F_j = dA_jk`, curvature `G = dF_k`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::derivative_4th;
use crate::phase::{canonical_angle, Phase};
use crate::types::{ChartId, Vector};

/// Default finite-difference step in ambient units.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Default tolerance for cocycle residuals.
pub const DEFAULT_COCYCLE_TOL: f64 = 1e-6;
/// Largest accepted deviation of a transition value from the unit circle.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Step for pushing a frame vector through the projection.
const FRAME_STEP: f64 = 1e-3;

pub type MembershipFn = dyn Fn(&Vector) -> f64 + Send + Sync;
pub type ProjectionFn = dyn Fn(&Vector) -> Vector + Send + Sync;
pub type FrameFn = dyn Fn(&Vector) -> Vec<Vector> + Send + Sync;

pub type TransitionFn = dyn Fn(ChartId, ChartId, &Vector) -> Complex<f64> + Send + Sync;
pub type ConnectionFn = dyn Fn(ChartId, &Vector, &Vector) -> f64 + Send + Sync;
pub type TripleTransitionFn =
    dyn Fn(ChartId, ChartId, ChartId, &Vector) -> Complex<f64> + Send + Sync;
pub type OverlapFormFn = dyn Fn(ChartId, ChartId, &Vector, &Vector) -> f64 + Send + Sync;
pub type CurvingFn = dyn Fn(ChartId, &Vector, &Vector, &Vector) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Chart {
    pub name: String,
    membership: Arc<MembershipFn>,
    sample_points: Vec<Vector>,
}

impl Chart {
    pub fn new(
        name: impl Into<String>,
        membership: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        sample_points: Vec<Vector>,
    ) -> Self {
        Self {
            name: name.into(),
            membership: Arc::new(membership),
            sample_points,
        }
    }

    pub fn margin(&self, y: &Vector) -> f64 {
        (self.membership)(y)
    }

    pub fn sample_points(&self) -> &[Vector] {
        &self.sample_points
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("name", &self.name)
            .field("samples", &self.sample_points.len())
            .finish()
    }
}

/// Indexed open cover `{U_i}` of the target manifold.
#[derive(Clone)]
pub struct ChartCover {
    ambient_dim: usize,
    manifold_dim: usize,
    charts: Vec<Chart>,
    overlaps: Vec<Vec<ChartId>>,
    projection: Arc<ProjectionFn>,
    frame: Option<Arc<FrameFn>>,
}

impl fmt::Debug for ChartCover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartCover")
            .field("ambient_dim", &self.ambient_dim)
            .field("manifold_dim", &self.manifold_dim)
            .field("charts", &self.charts)
            .field("overlaps", &self.overlaps)
            .finish()
    }
}

impl ChartCover {
    pub fn new(ambient_dim: usize, manifold_dim: usize, charts: Vec<Chart>) -> Self {
        Self {
            ambient_dim,
            manifold_dim,
            charts,
            overlaps: Vec::new(),
            projection: Arc::new(|y: &Vector| y.clone()),
            frame: None,
        }
    }

    /// Declares the nonempty intersections of two or more charts.
    pub fn with_overlaps(mut self, overlaps: Vec<Vec<ChartId>>) -> Self {
        self.overlaps = overlaps
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        self
    }

    /// Retraction of a neighbourhood of the manifold onto it.
    pub fn with_projection(
        mut self,
        p: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        self.projection = Arc::new(p);
        self
    }

    /// Tangent frame (one vector per manifold dimension) at points of M.
    pub fn with_tangent_frame(
        mut self,
        f: impl Fn(&Vector) -> Vec<Vector> + Send + Sync + 'static,
    ) -> Self {
        self.frame = Some(Arc::new(f));
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn manifold_dim(&self) -> usize {
        self.manifold_dim
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, i: ChartId) -> Result<&Chart> {
        self.charts.get(i).ok_or(Error::UnknownChart(i))
    }

    pub fn declared_overlaps(&self) -> &[Vec<ChartId>] {
        &self.overlaps
    }

    pub fn margin(&self, i: ChartId, y: &Vector) -> f64 {
        self.charts
            .get(i)
            .map_or(f64::NEG_INFINITY, |c| c.margin(y))
    }

    /// Margin of `y` in the intersection of the listed charts.
    pub fn overlap_margin(&self, ids: &[ChartId], y: &Vector) -> f64 {
        ids.iter()
            .map(|&i| self.margin(i, y))
            .fold(f64::INFINITY, f64::min)
    }

    /// Chart of maximal margin at `y`; ties go to the smallest index.
    pub fn best_chart(&self, y: &Vector) -> Option<(ChartId, f64)> {
        let mut best: Option<(ChartId, f64)> = None;
        for (i, c) in self.charts.iter().enumerate() {
            let m = c.margin(y);
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((i, m));
            }
        }
        best.filter(|&(_, m)| m > 0.0)
    }

    pub fn project(&self, y: &Vector) -> Vector {
        (self.projection)(y)
    }

    pub fn tangent_frame(&self, y: &Vector) -> Vec<Vector> {
        match &self.frame {
            Some(f) => f(y),
            None => (0..self.ambient_dim)
                .map(|k| {
                    let mut e = Vector::zeros(self.ambient_dim);
                    e[k] = 1.0;
                    e
                })
                .collect(),
        }
    }

    /// Sample points lying in every listed chart.
    pub fn overlap_samples(&self, ids: &[ChartId]) -> Vec<Vector> {
        let mut out = Vec::new();
        for &i in ids {
            let Some(chart) = self.charts.get(i) else {
                continue;
            };
            for y in &chart.sample_points {
                if self.overlap_margin(ids, y) > 0.0 {
                    out.push(y.clone());
                }
            }
        }
        out
    }

    /// Index sets of size ≤ `max_size` to scan: every singleton plus every
    /// declared overlap of that size.
    fn index_sets(&self, max_size: usize) -> Vec<Vec<ChartId>> {
        let mut sets: BTreeSet<Vec<ChartId>> = (0..self.len()).map(|i| vec![i]).collect();
        for s in &self.overlaps {
            if s.len() <= max_size {
                sets.insert(s.clone());
            }
        }
        sets.into_iter().collect()
    }

    /// Checks the structural invariants: sample points inside their chart and
    /// every declared overlap index valid.
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.charts.iter().enumerate() {
            for y in &c.sample_points {
                if y.len() != self.ambient_dim {
                    return Err(Error::BadParameter {
                        name: format!("chart {i}"),
                        reason: "sample point has wrong ambient dimension".into(),
                    });
                }
                let m = c.margin(y);
                if m <= 0.0 {
                    return Err(Error::PointOutsideChart {
                        chart: i,
                        margin: m,
                    });
                }
            }
        }
        for s in &self.overlaps {
            if let Some(&bad) = s.iter().find(|&&i| i >= self.len()) {
                return Err(Error::UnknownChart(bad));
            }
        }
        Ok(())
    }

    /// Pushes `v` at `y` through the projection: derivative of
    /// `t ↦ P(y + t v)` at 0.
    pub fn push_frame_vector(&self, y: &Vector, v: &Vector) -> Vector {
        let scale = v.norm().max(1e-300);
        let f = |t: f64| self.project(&(y + v * t));
        derivative_4th(&f, 0.0, FRAME_STEP / scale)
    }
}

/// Argument of a raw transition value, rejecting values off the unit circle.
fn unit_phase(z: Complex<f64>) -> Result<Phase> {
    let modulus = z.norm();
    if (modulus - 1.0).abs() > UNIT_TOLERANCE || !modulus.is_finite() {
        return Err(Error::NonUnitTransition { modulus });
    }
    Ok(Phase::from_complex(z.re, z.im))
}

/// Transition functions and connection 1-forms of a U(1)-bundle.
#[derive(Clone)]
pub struct BundleData {
    cover: Arc<ChartCover>,
    g: Arc<TransitionFn>,
    a: Arc<ConnectionFn>,
}

impl fmt::Debug for BundleData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleData")
            .field("cover", &self.cover)
            .finish()
    }
}

impl BundleData {
    pub fn new(
        cover: Arc<ChartCover>,
        g: impl Fn(ChartId, ChartId, &Vector) -> Complex<f64> + Send + Sync + 'static,
        a: impl Fn(ChartId, &Vector, &Vector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            cover,
            g: Arc::new(g),
            a: Arc::new(a),
        }
    }

    pub fn from_arcs(cover: Arc<ChartCover>, g: Arc<TransitionFn>, a: Arc<ConnectionFn>) -> Self {
        Self { cover, g, a }
    }

    pub fn cover(&self) -> &Arc<ChartCover> {
        &self.cover
    }

    /// Raw value of `g_ij(y)` as supplied.
    pub fn g_raw(&self, i: ChartId, j: ChartId, y: &Vector) -> Complex<f64> {
        (self.g)(i, j, y)
    }

    /// `g_ij(y)` renormalised to the unit circle.
    pub fn transition(&self, i: ChartId, j: ChartId, y: &Vector) -> Result<Phase> {
        unit_phase(self.g_raw(i, j, y))
    }

    /// `A_j` at `y` applied to `v`.
    pub fn connection(&self, j: ChartId, y: &Vector, v: &Vector) -> f64 {
        (self.a)(j, y, v)
    }

    pub fn transition_fn(&self) -> &Arc<TransitionFn> {
        &self.g
    }

    pub fn connection_fn(&self) -> &Arc<ConnectionFn> {
        &self.a
    }
}

/// Transition functions, connection 1-forms and curvings of a U(1)-gerbe.
#[derive(Clone)]
pub struct GerbeData {
    cover: Arc<ChartCover>,
    g3: Arc<TripleTransitionFn>,
    a2: Arc<OverlapFormFn>,
    f: Arc<CurvingFn>,
}

impl fmt::Debug for GerbeData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GerbeData")
            .field("cover", &self.cover)
            .finish()
    }
}

impl GerbeData {
    pub fn new(
        cover: Arc<ChartCover>,
        g3: impl Fn(ChartId, ChartId, ChartId, &Vector) -> Complex<f64> + Send + Sync + 'static,
        a2: impl Fn(ChartId, ChartId, &Vector, &Vector) -> f64 + Send + Sync + 'static,
        f: impl Fn(ChartId, &Vector, &Vector, &Vector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            cover,
            g3: Arc::new(g3),
            a2: Arc::new(a2),
            f: Arc::new(f),
        }
    }

    pub fn cover(&self) -> &Arc<ChartCover> {
        &self.cover
    }

    pub fn g3_raw(&self, i: ChartId, j: ChartId, k: ChartId, y: &Vector) -> Complex<f64> {
        (self.g3)(i, j, k, y)
    }

    /// `g_ijk(y)`; exactly 1 whenever two indices coincide.
    pub fn transition(&self, i: ChartId, j: ChartId, k: ChartId, y: &Vector) -> Result<Phase> {
        if i == j || j == k || i == k {
            return Ok(Phase::ZERO);
        }
        unit_phase(self.g3_raw(i, j, k, y))
    }

    /// `A_jk` at `y` applied to `v`.
    pub fn overlap_form(&self, j: ChartId, k: ChartId, y: &Vector, v: &Vector) -> f64 {
        (self.a2)(j, k, y, v)
    }

    /// `F_k` at `y` applied to `(v, w)`.
    pub fn curving(&self, k: ChartId, y: &Vector, v: &Vector, w: &Vector) -> f64 {
        (self.f)(k, y, v, w)
    }
}

/// Largest residual of one axiom over the scanned samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomResidual {
    pub axiom: String,
    pub max_residual: f64,
    pub evaluations: usize,
    pub worst_point: Option<Vec<f64>>,
    pub worst_indices: Option<Vec<ChartId>>,
}

impl AxiomResidual {
    fn new(axiom: &str) -> Self {
        Self {
            axiom: axiom.into(),
            max_residual: 0.0,
            evaluations: 0,
            worst_point: None,
            worst_indices: None,
        }
    }

    fn absorb(&mut self, other: Scan) {
        self.evaluations += other.evaluations;
        if other.max > self.max_residual || (other.max.is_nan() && !self.max_residual.is_nan()) {
            self.max_residual = other.max;
            self.worst_point = other.point.map(|p| p.iter().copied().collect());
            self.worst_indices = other.indices;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CocycleReport {
    pub residuals: Vec<AxiomResidual>,
    pub tolerance: f64,
    pub passed: bool,
}

impl CocycleReport {
    fn finish(residuals: Vec<AxiomResidual>, tolerance: f64) -> Self {
        let passed = residuals.iter().all(|r| r.max_residual <= tolerance);
        Self {
            residuals,
            tolerance,
            passed,
        }
    }

    pub fn residual(&self, axiom: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.axiom == axiom)
            .map(|r| r.max_residual)
    }
}

#[derive(Default)]
struct Scan {
    max: f64,
    evaluations: usize,
    point: Option<Vector>,
    indices: Option<Vec<ChartId>>,
}

impl Scan {
    fn merge(mut self, other: Scan) -> Scan {
        self.evaluations += other.evaluations;
        if other.max > self.max || (other.max.is_nan() && !self.max.is_nan()) {
            self.max = other.max;
            self.point = other.point;
            self.indices = other.indices;
        }
        self
    }

    fn record(&mut self, r: f64, y: &Vector, idx: &[ChartId]) {
        self.evaluations += 1;
        if r > self.max || (r.is_nan() && !self.max.is_nan()) {
            self.max = r;
            self.point = Some(y.clone());
            self.indices = Some(idx.to_vec());
        }
    }
}

/// All index tuples of the given arity whose index set is exactly `set`.
fn tuples_over(set: &[ChartId], arity: usize) -> Vec<Vec<ChartId>> {
    let n = set.len();
    let mut out = Vec::new();
    let total = n.pow(arity as u32);
    for flat in 0..total {
        let mut rem = flat;
        let t: Vec<ChartId> = (0..arity)
            .map(|_| {
                let i = set[rem % n];
                rem /= n;
                i
            })
            .collect();
        if set.iter().all(|s| t.contains(s)) {
            out.push(t);
        }
    }
    out
}

/// Runs `residual` over every index tuple of `arity` on the samples of its
/// overlap, with a deterministic max-reduction.
fn scan<F>(cover: &ChartCover, arity: usize, max_set: usize, residual: F) -> Result<Scan>
where
    F: Fn(&[ChartId], &Vector) -> Result<f64> + Sync,
{
    let mut total = Scan::default();
    for set in cover.index_sets(max_set.min(arity)) {
        let tuples = tuples_over(&set, arity);
        if tuples.is_empty() {
            continue;
        }
        let samples = cover.overlap_samples(&set);
        if samples.is_empty() {
            return Err(Error::EmptyOverlapSamples { charts: set });
        }
        let part = samples
            .par_iter()
            .map(|y| -> Result<Scan> {
                let mut s = Scan::default();
                for t in &tuples {
                    s.record(residual(t, y)?, y, t);
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(Scan::default(), Scan::merge);
        total = total.merge(part);
    }
    Ok(total)
}

/// Derivative of `arg f` along the manifold curve `t ↦ P(y + t v)`, unwrapped
/// across the stencil.
fn darg(
    cover: &ChartCover,
    y: &Vector,
    v: &Vector,
    h: f64,
    f: impl Fn(&Vector) -> Result<Phase>,
) -> Result<f64> {
    let plus = f(&cover.project(&(y + v * h)))?;
    let minus = f(&cover.project(&(y - v * h)))?;
    Ok(canonical_angle(plus.angle() - minus.angle()) / (2.0 * h))
}

/// Exterior derivative of a 1-form on the coordinate frame
/// `σ(s, t) = P(y + s a + t b)`.
fn d_one_form(
    cover: &ChartCover,
    y: &Vector,
    a: &Vector,
    b: &Vector,
    h: f64,
    form: impl Fn(&Vector, &Vector) -> f64,
) -> f64 {
    let along = |shift: &Vector, dir: &Vector| {
        let p = cover.project(&(y + shift));
        let t = cover.push_frame_vector(&(y + shift), dir);
        form(&p, &t)
    };
    let da = (along(&(a * h), b) - along(&(a * -h), b)) / (2.0 * h);
    let db = (along(&(b * h), a) - along(&(b * -h), a)) / (2.0 * h);
    da - db
}

/// Exterior derivative of a 2-form on the coordinate frame
/// `σ(r, s, t) = P(y + r a + s b + t c)`.
fn d_two_form(
    cover: &ChartCover,
    y: &Vector,
    frame: [&Vector; 3],
    h: f64,
    form: impl Fn(&Vector, &Vector, &Vector) -> f64,
) -> f64 {
    let term = |dir: usize, i: usize, j: usize| {
        let eval = |sign: f64| {
            let base = y + frame[dir] * (sign * h);
            let p = cover.project(&base);
            let ti = cover.push_frame_vector(&base, frame[i]);
            let tj = cover.push_frame_vector(&base, frame[j]);
            form(&p, &ti, &tj)
        };
        (eval(1.0) - eval(-1.0)) / (2.0 * h)
    };
    term(0, 1, 2) - term(1, 0, 2) + term(2, 0, 1)
}

/// Residuals of B1 (`g_ij g_jk = g_ik`) and B2 (`i(A_k - A_j) = d log g_jk`).
pub fn check_bundle_cocycle(data: &BundleData, tol: f64) -> Result<CocycleReport> {
    check_bundle_cocycle_with_step(data, tol, DEFAULT_FD_STEP)
}

pub fn check_bundle_cocycle_with_step(
    data: &BundleData,
    tol: f64,
    h: f64,
) -> Result<CocycleReport> {
    let cover = data.cover();
    let unit = |i, j, y: &Vector| -> Result<Complex<f64>> {
        let z = data.g_raw(i, j, y);
        unit_phase(z)?;
        Ok(z / z.norm())
    };

    let mut b1 = AxiomResidual::new("B1");
    b1.absorb(scan(cover, 3, 3, |t, y| {
        let (i, j, k) = (t[0], t[1], t[2]);
        Ok((unit(i, j, y)? * unit(j, k, y)? - unit(i, k, y)?).norm())
    })?);

    let mut b2 = AxiomResidual::new("B2");
    b2.absorb(scan(cover, 2, 2, |t, y| {
        let (j, k) = (t[0], t[1]);
        let mut worst: f64 = 0.0;
        for v in cover.tangent_frame(y) {
            let lhs = data.connection(k, y, &v) - data.connection(j, y, &v);
            let rhs = darg(cover, y, &v, h, |p| data.transition(j, k, p))?;
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    })?);

    Ok(CocycleReport::finish(vec![b1, b2], tol))
}

/// Residuals of G1–G4.
pub fn check_gerbe_cocycle(data: &GerbeData, tol: f64) -> Result<CocycleReport> {
    check_gerbe_cocycle_with_step(data, tol, DEFAULT_FD_STEP)
}

pub fn check_gerbe_cocycle_with_step(data: &GerbeData, tol: f64, h: f64) -> Result<CocycleReport> {
    let cover = data.cover();
    let unit = |i, j, k, y: &Vector| -> Result<Complex<f64>> {
        let z = data.g3_raw(i, j, k, y);
        unit_phase(z)?;
        Ok(z / z.norm())
    };
    let raw_phase = |i, j, k, y: &Vector| unit_phase(data.g3_raw(i, j, k, y));

    let mut g1 = AxiomResidual::new("G1");
    g1.absorb(scan(cover, 3, 2, |t, y| {
        let (i, j, k) = (t[0], t[1], t[2]);
        if i == j || j == k || i == k {
            Ok((unit(i, j, k, y)? - Complex::new(1.0, 0.0)).norm())
        } else {
            Ok(0.0)
        }
    })?);

    let mut g2 = AxiomResidual::new("G2");
    g2.absorb(scan(cover, 4, 4, |t, y| {
        let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
        let lhs = unit(i, j, k, y)? * unit(i, k, l, y)?;
        let rhs = unit(j, k, l, y)? * unit(i, j, l, y)?;
        Ok((lhs - rhs).norm())
    })?);

    let mut g3 = AxiomResidual::new("G3");
    g3.absorb(scan(cover, 3, 3, |t, y| {
        let (j, k, l) = (t[0], t[1], t[2]);
        let mut worst: f64 = 0.0;
        for v in cover.tangent_frame(y) {
            let sum = data.overlap_form(j, k, y, &v)
                + data.overlap_form(k, l, y, &v)
                + data.overlap_form(l, j, y, &v);
            let dlog = darg(cover, y, &v, h, |p| raw_phase(j, k, l, p))?;
            worst = worst.max((sum + dlog).abs());
        }
        Ok(worst)
    })?);

    let mut g4 = AxiomResidual::new("G4");
    g4.absorb(scan(cover, 2, 2, |t, y| {
        let (j, k) = (t[0], t[1]);
        let frame = cover.tangent_frame(y);
        let mut worst: f64 = 0.0;
        for a in 0..frame.len() {
            for b in a + 1..frame.len() {
                let (u, w) = (&frame[a], &frame[b]);
                let lhs = data.curving(k, y, u, w) - data.curving(j, y, u, w);
                let rhs = d_one_form(cover, y, u, w, h, |p, v| data.overlap_form(j, k, p, v));
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok(worst)
    })?);

    Ok(CocycleReport::finish(vec![g1, g2, g3, g4], tol))
}

fn require_margin(cover: &ChartCover, chart: ChartId, point: &Vector, reach: f64) -> Result<()> {
    cover.chart(chart)?;
    let margin = cover.margin(chart, point);
    if margin <= reach {
        return Err(Error::PointOutsideChart { chart, margin });
    }
    Ok(())
}

/// Curvature `F(u, v) = dA_chart(u, v)` by central differences with step `h`.
pub fn bundle_curvature(
    data: &BundleData,
    chart: ChartId,
    point: &Vector,
    frame: (&Vector, &Vector),
    h: f64,
) -> Result<f64> {
    let cover = data.cover();
    let reach = h * frame.0.norm().max(frame.1.norm());
    require_margin(cover, chart, point, reach)?;
    Ok(d_one_form(cover, point, frame.0, frame.1, h, |p, v| {
        data.connection(chart, p, v)
    }))
}

/// Curvature 3-form `G(u, v, w) = dF_chart(u, v, w)` by central differences.
pub fn gerbe_curvature(
    data: &GerbeData,
    chart: ChartId,
    point: &Vector,
    frame: (&Vector, &Vector, &Vector),
    h: f64,
) -> Result<f64> {
    let cover = data.cover();
    let reach = h * frame.0.norm().max(frame.1.norm()).max(frame.2.norm());
    require_margin(cover, chart, point, reach)?;
    Ok(d_two_form(
        cover,
        point,
        [frame.0, frame.1, frame.2],
        h,
        |p, v, w| data.curving(chart, p, v, w),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::vector;

    fn plane_cover() -> Arc<ChartCover> {
        let samples: Vec<Vector> = (0..5)
            .flat_map(|i| (0..5).map(move |j| vector(&[i as f64 * 0.2, j as f64 * 0.2])))
            .collect();
        let left = samples.iter().filter(|p| p[0] < 0.7).cloned().collect();
        let right = samples.iter().filter(|p| p[0] > 0.3).cloned().collect();
        Arc::new(
            ChartCover::new(
                2,
                2,
                vec![
                    Chart::new("left", |y: &Vector| 0.75 - y[0], left),
                    Chart::new("right", |y: &Vector| y[0] - 0.25, right),
                ],
            )
            .with_overlaps(vec![vec![0, 1]]),
        )
    }

    #[test]
    fn trivial_bundle_has_zero_residuals() {
        let data = BundleData::new(
            plane_cover(),
            |_, _, _| Complex::new(1.0, 0.0),
            |_, _, _| 0.0,
        );
        let report = check_bundle_cocycle(&data, 1e-12).unwrap();
        assert!(report.passed);
        assert_eq!(report.residual("B1"), Some(0.0));
        assert_eq!(report.residual("B2"), Some(0.0));
    }

    #[test]
    fn gauge_transformed_bundle_passes() {
        // g_01 = exp(i f), A_1 = A_0 + df with f = x y
        let data = BundleData::new(
            plane_cover(),
            |i, j, y| {
                let f = y[0] * y[1];
                let s = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 0) => -1.0,
                    _ => 0.0,
                };
                Complex::from_polar(1.0, s * f)
            },
            |j, y, v| {
                let base = y[1] * v[0];
                if j == 1 {
                    base + y[1] * v[0] + y[0] * v[1]
                } else {
                    base
                }
            },
        );
        let report = check_bundle_cocycle(&data, 1e-6).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.residual("B2").unwrap() < 1e-8);
    }

    #[test]
    fn non_unit_transition_is_rejected() {
        let data = BundleData::new(
            plane_cover(),
            |_, _, _| Complex::new(1.1, 0.0),
            |_, _, _| 0.0,
        );
        assert!(matches!(
            check_bundle_cocycle(&data, 1e-6),
            Err(Error::NonUnitTransition { .. })
        ));
    }

    #[test]
    fn empty_declared_overlap_is_reported() {
        let cover = Arc::new(
            ChartCover::new(
                1,
                1,
                vec![
                    Chart::new("a", |y: &Vector| 1.0 - y[0], vec![vector(&[0.0])]),
                    Chart::new("b", |y: &Vector| y[0] - 2.0, vec![vector(&[3.0])]),
                ],
            )
            .with_overlaps(vec![vec![0, 1]]),
        );
        let data = BundleData::new(cover, |_, _, _| Complex::new(1.0, 0.0), |_, _, _| 0.0);
        assert_eq!(
            check_bundle_cocycle(&data, 1e-6).unwrap_err(),
            Error::EmptyOverlapSamples { charts: vec![0, 1] }
        );
    }

    #[test]
    fn curvature_requires_margin() {
        let data = BundleData::new(
            plane_cover(),
            |_, _, _| Complex::new(1.0, 0.0),
            |_, y, v| y[0] * v[1],
        );
        let e0 = vector(&[1.0, 0.0]);
        let e1 = vector(&[0.0, 1.0]);
        let f = bundle_curvature(&data, 0, &vector(&[0.2, 0.3]), (&e0, &e1), 1e-4).unwrap();
        assert!((f - 1.0).abs() < 1e-9);
        let anti = bundle_curvature(&data, 0, &vector(&[0.2, 0.3]), (&e1, &e0), 1e-4).unwrap();
        assert!((f + anti).abs() < 1e-9);
        assert!(matches!(
            bundle_curvature(&data, 0, &vector(&[0.9, 0.3]), (&e0, &e1), 1e-4),
            Err(Error::PointOutsideChart { chart: 0, .. })
        ));
    }

    #[test]
    fn tuples_cover_exact_index_sets() {
        assert_eq!(tuples_over(&[3], 3), vec![vec![3, 3, 3]]);
        // {0,1}^3 minus the two constant tuples
        assert_eq!(tuples_over(&[0, 1], 3).len(), 6);
        assert_eq!(tuples_over(&[0, 1, 2], 3).len(), 6);
        assert_eq!(tuples_over(&[0, 1, 2], 4).len(), 36);
    }
}
