//! Randomised checks of the transport axioms for functors over a catalog
//! geometry.
//!
//! Trial `k` of a run with seed `s` draws from a ChaCha8 generator seeded with
//! `s + k · 0x9E3779B97F4A7C15` (wrapping), so trials are independent of the
//! thread count and of each other. Results are reduced in trial order.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{glue_z_path, BundleFunctor};
use crate::catalog::CatalogEntry;
use crate::cech::ChartCover;
use crate::error::{Error, Result};
use crate::gerbe::{glue_z_surface, partial_glue_z_surface, GerbeFunctor};
use crate::numerics::Cell;
use crate::partition::{
    build_loop_partition, build_path_partition, build_surface_partition, FaceSpec,
    LabeledLoopPartition, LabeledPathPartition, LabeledSurfacePartition, RowSpec, SurfaceDomain,
    SurfaceMap, SurfaceObject,
};
use crate::phase::Phase;
use crate::types::{ChartId, Loop, Orientation, Path, Vector};

pub const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Number of random partition moves applied in a move-invariance check.
pub const MOVES_PER_TRIAL: usize = 5;

pub const AXIOMS_1D: [&str; 10] = [
    "def_i",
    "def_ii",
    "def_iii",
    "prop_a",
    "prop_b",
    "prop_c",
    "prop_d",
    "inverse",
    "reparametrization",
    "moves",
];

pub const AXIOMS_2D: [&str; 11] = [
    "def_i",
    "def_ii",
    "def_iii",
    "def_iv",
    "prop_a",
    "prop_b",
    "prop_c",
    "prop_d",
    "orientation",
    "reparametrization",
    "moves",
];

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add((trial as u64).wrapping_mul(SEED_STRIDE))
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, trial))
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomDefect {
    pub axiom: String,
    /// Largest distance on the circle between the two sides of the identity.
    pub max_defect: f64,
    pub checks: usize,
    pub worst_trial: Option<usize>,
    pub worst_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub suite: String,
    pub geometry: String,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub axioms: Vec<AxiomDefect>,
    pub failures: Vec<TrialFailure>,
    pub passed: bool,
}

impl AxiomReport {
    pub fn defect(&self, axiom: &str) -> Option<f64> {
        self.axioms
            .iter()
            .find(|a| a.axiom == axiom)
            .map(|a| a.max_defect)
    }

    pub fn max_defect(&self) -> f64 {
        self.axioms.iter().map(|a| a.max_defect).fold(0.0, f64::max)
    }
}

type Defects = Vec<(&'static str, f64)>;

fn run_trials<F>(
    suite: &str,
    names: &[&str],
    entry: &CatalogEntry,
    trials: usize,
    seed: u64,
    tol: f64,
    trial: F,
) -> AxiomReport
where
    F: Fn(&mut ChaCha8Rng) -> Result<Defects> + Sync,
{
    let results: Vec<Result<Defects>> = (0..trials)
        .into_par_iter()
        .map(|k| trial(&mut trial_rng(seed, k)))
        .collect();
    let mut axioms: BTreeMap<&str, AxiomDefect> = names
        .iter()
        .map(|&n| {
            (
                n,
                AxiomDefect {
                    axiom: n.into(),
                    max_defect: 0.0,
                    checks: 0,
                    worst_trial: None,
                    worst_seed: None,
                },
            )
        })
        .collect();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(defects) => {
                for (name, d) in defects {
                    let d = if d.is_nan() { f64::INFINITY } else { d };
                    let a = axioms.get_mut(name).expect("axiom name registered");
                    a.checks += 1;
                    if a.worst_trial.is_none() || d > a.max_defect {
                        a.max_defect = d;
                        a.worst_trial = Some(k);
                        a.worst_seed = Some(trial_seed(seed, k));
                    }
                }
            }
            Err(e) => failures.push(TrialFailure {
                trial: k,
                seed: trial_seed(seed, k),
                error: e.to_string(),
            }),
        }
    }
    let axioms: Vec<AxiomDefect> = names
        .iter()
        .map(|n| axioms.remove(n).expect("present"))
        .collect();
    let passed = failures.is_empty() && axioms.iter().all(|a| a.max_defect <= tol);
    AxiomReport {
        suite: suite.into(),
        geometry: entry.name.clone(),
        trials,
        seed,
        tolerance: tol,
        axioms,
        failures,
        passed,
    }
}

fn pick<R: Rng + ?Sized, T: Copy>(rng: &mut R, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

fn charts_at(cover: &ChartCover, y: &Vector) -> Vec<ChartId> {
    (0..cover.len())
        .filter(|&i| cover.margin(i, y) > 0.0)
        .collect()
}

/// `s ↦ s + c sin(2π s) / 2π` on `[0, 1]`, increasing for `|c| < 1`.
fn interval_warp(c: f64) -> impl Fn(f64) -> f64 + Clone + Send + Sync + 'static {
    move |x: f64| x + c * (TAU * x).sin() / TAU
}

/// `x ↦ x + a sin(x + φ)`, an increasing map commuting with `x ↦ x + 2π`.
fn circle_warp(a: f64, phase: f64) -> impl Fn(f64) -> f64 + Clone + Send + Sync + 'static {
    move |x: f64| x + a * (x + phase).sin()
}

/// Inverse of an increasing `f` with `|f(x) − x| ≤ spread`, by bisection.
fn invert(f: &impl Fn(f64) -> f64, y: f64, spread: f64) -> f64 {
    let (mut lo, mut hi) = (y - spread - 1e-12, y + spread + 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn random_path_moves<R: Rng + ?Sized>(
    rng: &mut R,
    t: &LabeledPathPartition,
    p: &Path,
    cover: &ChartCover,
) -> LabeledPathPartition {
    let mut m = t.clone();
    let mut done = 0;
    for _ in 0..50 {
        if done == MOVES_PER_TRIAL {
            break;
        }
        let k = rng.random_range(0..m.len());
        let next = match rng.random_range(0..3) {
            0 => {
                let (x0, x1, _) = m.segment(k);
                m.refine(k, x0 + (x1 - x0) * rng.random_range(0.1..0.9))
            }
            1 => m.merge(k),
            _ if k > 0 && k + 1 < m.len() => {
                m.relabel(k, rng.random_range(0..cover.len()), p, cover)
            }
            _ => continue,
        };
        if let Ok(n) = next {
            m = n;
            done += 1;
        }
    }
    m
}

fn random_relabels_path<R: Rng + ?Sized>(
    rng: &mut R,
    t: &LabeledPathPartition,
    p: &Path,
    cover: &ChartCover,
) -> LabeledPathPartition {
    let mut m = t.clone();
    for k in 0..m.len() {
        if rng.random_bool(0.5) {
            if let Ok(n) = m.relabel(k, rng.random_range(0..cover.len()), p, cover) {
                m = n;
            }
        }
    }
    m
}

/// Composition, change of partition, gluing, the four point/constant-path
/// identities, the inverse law, reparametrisation and move invariance of a
/// 1-dimensional transport functor, on random paths of the geometry.
pub fn axiom_suite_1d<Z: BundleFunctor + ?Sized>(
    z: &Z,
    entry: &CatalogEntry,
    trials: usize,
    seed: u64,
    tol: f64,
) -> AxiomReport {
    let cover = entry.cover.as_ref();
    run_trials("axioms_1d", &AXIOMS_1D, entry, trials, seed, tol, |rng| {
        let mut out: Defects = Vec::new();
        let p = entry.random_path(rng);
        let t = build_path_partition(&p, cover, rng.random_range(8..64))?;
        let zp = z.z_path(&p, &t)?;

        // point axioms at a random point
        let y = entry.random_point(rng);
        let here = charts_at(cover, &y);
        let (i, j, k) = (pick(rng, &here), pick(rng, &here), pick(rng, &here));
        for o in [Orientation::Positive, Orientation::Negative] {
            let lhs = z.z_point(&y, o, i, j)? + z.z_point(&y, o, j, k)?;
            out.push(("def_i", lhs.distance(z.z_point(&y, o, i, k)?)));
            out.push(("prop_a", z.z_point(&y, o, i, i)?.distance(Phase::ZERO)));
        }
        let plus = z.z_point(&y, Orientation::Positive, i, j)?;
        out.push((
            "prop_d",
            (z.z_point(&y, Orientation::Negative, i, j)? + plus).distance(Phase::ZERO),
        ));
        let a = rng.random_range(-2.0..2.0);
        let b = a + rng.random_range(0.1..3.0);
        out.push((
            "prop_b",
            z.z_path(
                &Path::constant(a, b, y.clone()),
                &LabeledPathPartition::single(a, b, i),
            )?
            .distance(Phase::ZERO),
        ));
        let ij = LabeledPathPartition::split(0.0, 1.0, 0.5, i, j)?;
        out.push((
            "prop_c",
            z.z_path(&Path::constant(0.0, 1.0, y.clone()), &ij)?
                .distance(plus),
        ));

        // another partition of the same path, endpoint labels included
        let n2 = rng.random_range(8..64);
        let t2 = random_relabels_path(rng, &build_path_partition(&p, cover, n2)?, &p, cover);
        let (pa, pb) = (p.eval(p.start()), p.eval(p.end()));
        let expected = z.z_point(
            &pa,
            Orientation::Negative,
            t.first_label(),
            t2.first_label(),
        )? + zp
            + z.z_point(&pb, Orientation::Positive, t.last_label(), t2.last_label())?;
        out.push(("def_ii", z.z_path(&p, &t2)?.distance(expected)));

        // gluing at a breakpoint (or an interior point for a single segment)
        let cut = if t.len() >= 2 {
            t.breakpoints()[rng.random_range(1..t.len())]
        } else {
            p.start() + (p.end() - p.start()) * rng.random_range(0.2..0.8)
        };
        let (tl, tr) = t.split_at(cut)?;
        let (pl, pr) = (p.restricted(p.start(), cut), p.restricted(cut, p.end()));
        out.push((
            "def_iii",
            glue_z_path(z, (&pl, &tl), (&pr, &tr))?.distance(zp),
        ));

        out.push((
            "inverse",
            (z.z_path(&p.reversed(), &t.reversed())? + zp).distance(Phase::ZERO),
        ));

        let (a0, b0) = (p.start(), p.end());
        let h = interval_warp(rng.random_range(-0.9..0.9));
        let sigma = {
            let h = h.clone();
            move |s: f64| a0 + (b0 - a0) * h((s - a0) / (b0 - a0))
        };
        let sigma_inv = |x: f64| a0 + (b0 - a0) * invert(&h, (x - a0) / (b0 - a0), 1.0 / TAU);
        let ts = t.pulled_back(sigma_inv);
        out.push((
            "reparametrization",
            z.z_path(&p.reparametrized(sigma), &ts)?.distance(zp),
        ));

        let moved = random_path_moves(rng, &t, &p, cover);
        out.push(("moves", z.z_path(&p, &moved)?.distance(zp)));
        Ok(out)
    })
}

/// Loop partitions that differ from the greedy one in breakpoints and labels.
fn random_loop_partition<R: Rng + ?Sized>(
    rng: &mut R,
    ell: &Loop,
    cover: &ChartCover,
) -> Result<LabeledLoopPartition> {
    let mut t = build_loop_partition(ell, cover, rng.random_range(12..80))?.rotated_start(0.0);
    for _ in 0..rng.random_range(0..4) {
        let k = rng.random_range(0..t.len());
        let (a0, a1, _) = t.arc(k);
        if let Ok(n) = t.refine(k, a0 + (a1 - a0) * rng.random_range(0.2..0.8)) {
            t = n;
        }
    }
    for k in 0..t.len() {
        if rng.random_bool(0.5) {
            if let Ok(n) = t.relabel(k, rng.random_range(0..cover.len()), ell, cover) {
                t = n;
            }
        }
    }
    Ok(t.rotated_start(0.0))
}

/// The constant extension `L(a, x) = ℓ(a)` over `S^1 × [0, 1]`.
fn constant_cylinder(ell: &Loop) -> SurfaceMap {
    let c = ell.curve().clone();
    Arc::new(move |q: &Vector| c(q[0]))
}

fn loop_row(t: &LabeledLoopPartition, lo: f64, hi: f64) -> RowSpec {
    RowSpec {
        lo,
        hi,
        breaks: t.angles().to_vec(),
        labels: t.labels().to_vec(),
    }
}

/// Labelled partition induced on the boundary circle `v = value` of a
/// cylinder, as a partition of the loop `u ↦ X(u, value)`.
pub fn boundary_circle_partition(
    part: &LabeledSurfacePartition,
    value: f64,
) -> Result<LabeledLoopPartition> {
    let mut arcs: Vec<(f64, ChartId)> = Vec::new();
    for e in part.halfedges() {
        if e.twin.is_some() || (e.from[1] - value).abs() > 1e-9 || (e.to[1] - value).abs() > 1e-9 {
            continue;
        }
        arcs.push((e.from[0].min(e.to[0]).rem_euclid(TAU), part.label(e.face)));
    }
    if arcs.is_empty() {
        return Err(Error::InvalidPartition(format!(
            "no boundary circle at v = {value}"
        )));
    }
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    arcs.dedup_by(|b, a| (b.0 - a.0).abs() < 1e-12);
    LabeledLoopPartition::new(
        arcs.iter().map(|a| a.0).collect(),
        arcs.iter().map(|a| a.1).collect(),
    )
}

fn circle_loop(map: &SurfaceMap, v: f64) -> Loop {
    let m = map.clone();
    Loop::new(move |u| m(&crate::types::vector(&[u, v])))
}

fn relabel_faces<R: Rng + ?Sized>(
    rng: &mut R,
    t: &LabeledSurfacePartition,
    map: &SurfaceMap,
    cover: &ChartCover,
    p: f64,
) -> LabeledSurfacePartition {
    let mut m = t.clone();
    for f in 0..m.faces().len() {
        if rng.random_bool(p) {
            if let Ok(n) = m.relabel_face(f, rng.random_range(0..cover.len()), map, cover) {
                m = n;
            }
        }
    }
    m
}

fn random_surface_moves<R: Rng + ?Sized>(
    rng: &mut R,
    t: &LabeledSurfacePartition,
    map: &SurfaceMap,
    cover: &ChartCover,
) -> LabeledSurfacePartition {
    let mut m = t.clone();
    let mut done = 0;
    for _ in 0..60 {
        if done == MOVES_PER_TRIAL {
            break;
        }
        let f = rng.random_range(0..m.faces().len());
        let next = match rng.random_range(0..3) {
            0 => {
                let axis = rng.random_range(0..2);
                let r = m.faces()[f].spec.rect;
                m.refine_face(
                    f,
                    axis,
                    r.lo[axis] + (r.hi[axis] - r.lo[axis]) * rng.random_range(0.2..0.8),
                )
            }
            1 => {
                let edges: Vec<(usize, usize)> = m.internal_edges().collect();
                let (h, tw) = pick(rng, &edges);
                m.merge_faces(m.halfedges()[h].face, m.halfedges()[tw].face)
            }
            _ => m.relabel_face(f, rng.random_range(0..cover.len()), map, cover),
        };
        if let Ok(n) = next {
            m = n;
            done += 1;
        }
    }
    m
}

/// `X ∘ σ` with `σ(u, v) = (f(u), g(v))` together with the partition whose
/// rectangles are the preimages of those of `T`.
fn product_reparametrization<R: Rng + ?Sized>(
    rng: &mut R,
    so: &SurfaceObject,
) -> Result<SurfaceObject> {
    let (a, b) = (rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
    let f = circle_warp(a, rng.random_range(0.0..TAU));
    let g = circle_warp(b, rng.random_range(0.0..TAU));
    let part = so.partition();
    let mut specs = Vec::with_capacity(part.faces().len());
    for face in part.faces() {
        let s = &face.spec;
        if !s.is_full_rect() {
            return Err(Error::InvalidPartition(
                "reparametrisation needs rectangular faces".into(),
            ));
        }
        let lo = [
            invert(&f, s.rect.lo[0], a.abs()),
            invert(&g, s.rect.lo[1], b.abs()),
        ];
        let hi = [
            invert(&f, s.rect.hi[0], a.abs()),
            invert(&g, s.rect.hi[1], b.abs()),
        ];
        specs.push(FaceSpec::planar(Cell::new(lo, hi), s.label));
    }
    let t = LabeledSurfacePartition::from_faces(*part.domain(), specs)?;
    let map = so.map().clone();
    let warped: SurfaceMap =
        Arc::new(move |q: &Vector| map(&crate::types::vector(&[f(q[0]), g(q[1])])));
    Ok(SurfaceObject::new(warped, t))
}

/// Composition of loop transitions, change of partition on a band, closed and
/// partial gluing, the loop identities (constant cylinder, annulus),
/// orientation reversal, reparametrisation and move invariance of a
/// 2-dimensional transport functor, on random loops, closed surfaces and bands
/// of the geometry.
pub fn axiom_suite_2d<Z: GerbeFunctor + ?Sized>(
    z: &Z,
    entry: &CatalogEntry,
    trials: usize,
    seed: u64,
    tol: f64,
) -> AxiomReport {
    let cover = entry.cover.as_ref();
    run_trials("axioms_2d", &AXIOMS_2D, entry, trials, seed, tol, |rng| {
        let mut out: Defects = Vec::new();
        let unsupported = || Error::BadParameter {
            name: "geometry".into(),
            reason: format!("{} has no surfaces", entry.name),
        };

        // loops
        let ell = entry.random_loop(rng);
        let t1 = random_loop_partition(rng, &ell, cover)?;
        let t2 = random_loop_partition(rng, &ell, cover)?;
        let t3 = random_loop_partition(rng, &ell, cover)?;
        let pos = Orientation::Positive;
        let z12 = z.z_loop_transition(&ell, &t1, &t2, pos)?;
        let z23 = z.z_loop_transition(&ell, &t2, &t3, pos)?;
        out.push((
            "def_i",
            (z12 + z23).distance(z.z_loop_transition(&ell, &t1, &t3, pos)?),
        ));
        out.push((
            "prop_a",
            z.z_loop_transition(&ell, &t1, &t1, pos)?
                .distance(Phase::ZERO),
        ));
        out.push((
            "prop_d",
            (z.z_loop_transition(&ell, &t1, &t2, Orientation::Negative)? + z12)
                .distance(Phase::ZERO),
        ));
        let (b, c) = (rng.random_range(-1.0..0.0), rng.random_range(0.5..1.5));
        let flat = LabeledSurfacePartition::from_rows(
            SurfaceDomain::cylinder([b, c]),
            &[loop_row(&t1, b, c)],
        )?;
        out.push((
            "prop_b",
            z.z_surface(&SurfaceObject::new(constant_cylinder(&ell), flat))?
                .distance(Phase::ZERO),
        ));
        let annulus = LabeledSurfacePartition::from_rows(
            SurfaceDomain::cylinder([0.0, 1.0]),
            &[loop_row(&t2, 0.0, 0.5), loop_row(&t1, 0.5, 1.0)],
        )?;
        out.push((
            "prop_c",
            z.z_surface(&SurfaceObject::new(constant_cylinder(&ell), annulus))?
                .distance(z12),
        ));

        // closed surface
        let (map, domain) = entry.random_closed_surface(rng).ok_or_else(unsupported)?;
        let nv = 2 * rng.random_range(5..8);
        let t = build_surface_partition(&map, domain, cover, (rng.random_range(12..19), nv))?;
        let so = SurfaceObject::new(map.clone(), t.clone());
        let zs = z.z_surface(&so)?;
        let row = rng.random_range(0..nv);
        let glued = glue_z_surface(z, &so, 1, TAU * row as f64 / nv as f64)?;
        out.push(("def_iii", glued.composite.distance(zs)));
        out.push((
            "orientation",
            (z.z_surface(&so.reversed())? + zs).distance(Phase::ZERO),
        ));
        out.push((
            "reparametrization",
            z.z_surface(&product_reparametrization(rng, &so)?)?
                .distance(zs),
        ));
        let moved = random_surface_moves(rng, &t, &map, cover);
        out.push((
            "moves",
            z.z_surface(&so.with_partition(moved)?)?.distance(zs),
        ));

        // band with boundary
        let (bmap, bdom) = entry.random_bounded_surface(rng).ok_or_else(unsupported)?;
        let SurfaceDomain::Planar { v: [v0, v1], .. } = bdom else {
            return Err(Error::InvalidPartition("expected a cylinder".into()));
        };
        let ta = build_surface_partition(
            &bmap,
            bdom,
            cover,
            (rng.random_range(12..19), rng.random_range(3..6)),
        )?;
        let tb = build_surface_partition(
            &bmap,
            bdom,
            cover,
            (rng.random_range(12..19), rng.random_range(3..6)),
        )?;
        let tb = relabel_faces(rng, &tb, &bmap, cover, 0.5);
        let za = z.z_surface(&SurfaceObject::new(bmap.clone(), ta.clone()))?;
        let zb = z.z_surface(&SurfaceObject::new(bmap.clone(), tb.clone()))?;
        let mut expected = za;
        for (v, o) in [(v0, Orientation::Positive), (v1, Orientation::Negative)] {
            let (pa, pb) = (
                boundary_circle_partition(&ta, v)?,
                boundary_circle_partition(&tb, v)?,
            );
            expected = expected + z.z_loop_transition(&circle_loop(&bmap, v), &pa, &pb, o)?;
        }
        out.push(("def_ii", zb.distance(expected)));

        // partial gluing of the band cut across at two angles
        let vertices: Vec<f64> = ta.vertices().iter().map(|p| p[0].rem_euclid(TAU)).collect();
        let clear = |c: f64| {
            vertices
                .iter()
                .all(|&x| (x - c).rem_euclid(TAU).min((c - x).rem_euclid(TAU)) > 1e-3)
        };
        let cuts: Vec<f64> = (0..200)
            .map(|_| rng.random_range(0.0..TAU))
            .filter(|&c| clear(c))
            .take(2)
            .collect();
        if cuts.len() == 2 && (cuts[0] - cuts[1]).abs() > 1e-2 {
            let (lo, hi) = (cuts[0].min(cuts[1]), cuts[0].max(cuts[1]));
            let (pa, pb) = ta.split_planar(0, &[lo, hi])?;
            let (sa, sb) = (
                SurfaceObject::new(bmap.clone(), pa),
                SurfaceObject::new(bmap.clone(), pb),
            );
            let (phase, joined) = partial_glue_z_surface(z, &sa, &sb)?;
            out.push(("def_iv", phase.distance(z.z_surface(&joined)?)));
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{BundleTransport, DroppedTransition};
    use crate::catalog::{
        box_gerbe, circle_flat, sphere_monopole, torus_flat_gerbe, torus_global_b,
    };
    use crate::gerbe::{FlippedEdges, GerbeTransport};
    use crate::numerics::QuadConfig;

    #[test]
    fn seeds_follow_the_stride() {
        assert_eq!(trial_seed(0, 0), 0);
        assert_eq!(
            trial_seed(5, 2),
            5u64.wrapping_add(2u64.wrapping_mul(SEED_STRIDE))
        );
        let a: u64 = trial_rng(3, 4).random();
        let b: u64 = trial_rng(3, 4).random();
        assert_eq!(a, b);
    }

    #[test]
    fn warp_inverts() {
        let f = circle_warp(0.5, 1.0);
        for x in [-3.0, 0.0, 1.7, 8.0] {
            assert!((f(invert(&f, x, 0.5)) - x).abs() < 1e-13);
        }
    }

    #[test]
    fn bundle_suite_passes_and_catches_a_dropped_factor() {
        let e = sphere_monopole(1).unwrap();
        let z = BundleTransport::new(e.bundle.clone().unwrap(), QuadConfig::default());
        let r = axiom_suite_1d(&z, &e, 8, 0, 1e-6);
        assert!(r.passed, "{r:#?}");
        let c = circle_flat(0.7, -0.4).unwrap();
        let zc = BundleTransport::new(c.bundle.clone().unwrap(), QuadConfig::default());
        let bad = axiom_suite_1d(&DroppedTransition { inner: zc }, &c, 12, 0, 1e-6);
        assert!(bad.max_defect() > 1e-2, "{bad:#?}");
    }

    #[test]
    fn gerbe_suite_passes_and_catches_flipped_edges() {
        for e in [torus_flat_gerbe(1.0).unwrap(), torus_global_b(1.3).unwrap()] {
            let z = GerbeTransport::new(e.gerbe.clone().unwrap(), QuadConfig::default());
            let r = axiom_suite_2d(&z, &e, 4, 0, 1e-6);
            assert!(r.passed, "{r:#?}");
        }
        let e = box_gerbe(2, 1.0).unwrap();
        let z = GerbeTransport::new(e.gerbe.clone().unwrap(), QuadConfig::default());
        let good = axiom_suite_2d(&z, &e, 4, 0, 1e-6);
        assert!(good.passed, "{good:#?}");
        let bad = axiom_suite_2d(&FlippedEdges { inner: z }, &e, 4, 0, 1e-6);
        assert!(bad.defect("def_iii").unwrap() > 1e-2, "{bad:#?}");
    }
}
