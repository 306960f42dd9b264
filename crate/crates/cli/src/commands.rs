use std::sync::Arc;

use holonomy_core::axioms::{axiom_suite_1d, axiom_suite_2d};
use holonomy_core::bundle::{
    reconstruct_a, reconstruct_g, stokes_check_1d, BundleFunctor, BundleTransport,
    DroppedTransition,
};
use holonomy_core::catalog::{resolve_params, CatalogEntry, StandardMap};
use holonomy_core::cech::{BundleData, GerbeData};
use holonomy_core::gerbe::{
    reconstruct_a2, reconstruct_f, reconstruct_g3, stokes_check_2d, FlippedEdges, GerbeTransport,
};
use holonomy_core::numerics::{Cell, QuadConfig};
use holonomy_core::partition::{
    build_loop_partition, build_path_partition, build_surface_partition, build_volume_partition,
    FaceSpec, LabeledLoopPartition, LabeledPathPartition, LabeledSurfacePartition, SurfaceDomain,
    SurfaceObject,
};
use holonomy_core::roundtrip::{bundle_round_trip, gerbe_round_trip, RoundTripConfig};
use holonomy_core::{vector, ChartId, Orientation, Path, Phase, Vector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::scene::Scene;
use crate::CliError;

pub const DEFAULT_PATH_RESOLUTION: usize = 64;
pub const DEFAULT_SURFACE_RESOLUTION: usize = 16;
pub const DEFAULT_VOLUME_RESOLUTION: usize = 8;
/// `g` and `g3` are read back without any discretisation.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// Outcome of a command: the result document and whether every requested
/// tolerance was met.
#[derive(Debug)]
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
}

#[derive(Serialize)]
struct PhaseOut {
    canonical: f64,
    accumulated: f64,
    re: f64,
    im: f64,
}

fn phase_out(p: Phase) -> PhaseOut {
    let (re, im) = p.to_complex();
    PhaseOut {
        canonical: p.canonical(),
        accumulated: p.angle(),
        re,
        im,
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialise")
}

/// Builds the catalog entry and writes its resolved parameters back into the
/// scene.
fn entry(scene: &mut Scene) -> Result<CatalogEntry, CliError> {
    let name = scene
        .geometry
        .clone()
        .ok_or_else(|| CliError::schema("missing geometry (--geometry)"))?;
    let e = CatalogEntry::build(&name, &scene.params)?;
    scene.params = e.parameters.clone();
    Ok(e)
}

fn standard_map(scene: &mut Scene, e: &CatalogEntry) -> Result<StandardMap, CliError> {
    let name = scene
        .map
        .clone()
        .ok_or_else(|| CliError::schema("missing map (--map)"))?;
    let info = e.map_info(&name)?;
    let m = e.map(&name, &scene.map_params)?;
    scene.map_params = resolve_params(&scene.map_params, info.params)?;
    Ok(m)
}

fn bundle_of(e: &CatalogEntry) -> Result<Arc<BundleData>, CliError> {
    e.bundle
        .clone()
        .ok_or_else(|| CliError::geometry(format!("{} carries no bundle data", e.name)))
}

fn gerbe_of(e: &CatalogEntry) -> Result<Arc<GerbeData>, CliError> {
    e.gerbe
        .clone()
        .ok_or_else(|| CliError::geometry(format!("{} carries no gerbe data", e.name)))
}

fn tolerance(scene: &mut Scene, default: f64) -> Result<f64, CliError> {
    let tol = *scene.tolerance.get_or_insert(default);
    if !(tol > 0.0) {
        return Err(CliError::schema("tolerance must be positive"));
    }
    Ok(tol)
}

fn single_resolution(scene: &mut Scene, default: usize) -> Result<usize, CliError> {
    match scene.partition.resolution.as_slice() {
        [] => {
            scene.partition.resolution = vec![default];
            Ok(default)
        }
        [n] => Ok(*n),
        _ => Err(CliError::schema("this command takes a single resolution")),
    }
}

fn quad(scene: &Scene) -> Result<QuadConfig, CliError> {
    scene.quad.validate()?;
    Ok(scene.quad)
}

/// Compares `phase` with the scene's expected value, if one was given.
fn expectation(
    scene: &mut Scene,
    phase: Phase,
    default_tol: f64,
) -> Result<(Value, bool), CliError> {
    let Some(expected) = scene.expected else {
        return Ok((Value::Null, true));
    };
    let tol = tolerance(scene, default_tol)?;
    let defect = phase.distance(Phase::from_angle(expected));
    Ok((
        json!({ "expected": expected, "defect": defect, "tolerance": tol }),
        defect <= tol,
    ))
}

pub fn check(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let tol = tolerance(scene, holonomy_core::catalog::CATALOG_TOLERANCE)?;
    let reports = e.check(tol)?;
    let kinds = e
        .bundle
        .iter()
        .map(|_| "bundle")
        .chain(e.gerbe.iter().map(|_| "gerbe"));
    let passed = reports.iter().all(|r| r.passed);
    let out: Vec<Value> = kinds
        .zip(&reports)
        .map(|(kind, r)| json!({ "data": kind, "passed": r.passed, "residuals": to_value(&r.residuals) }))
        .collect();
    Ok(Outcome {
        result: json!({ "tolerance": tol, "reports": out }),
        passed,
    })
}

fn path_partition(
    scene: &mut Scene,
    p: &Path,
    e: &CatalogEntry,
) -> Result<LabeledPathPartition, CliError> {
    match (&scene.partition.breakpoints, &scene.partition.labels) {
        (Some(b), Some(l)) => {
            let t = LabeledPathPartition::new(b.clone(), l.clone())
                .map_err(|err| CliError::schema(err.to_string()))?;
            if (t.start() - p.start()).abs() > 1e-12 || (t.end() - p.end()).abs() > 1e-12 {
                return Err(CliError::schema(format!(
                    "breakpoints must run from {} to {}",
                    p.start(),
                    p.end()
                )));
            }
            t.validate(p, &e.cover)?;
            Ok(t)
        }
        (None, None) => {
            let n = single_resolution(scene, DEFAULT_PATH_RESOLUTION)?;
            Ok(build_path_partition(p, &e.cover, n)?)
        }
        _ => Err(CliError::schema(
            "explicit partitions need both breakpoints and labels",
        )),
    }
}

fn loop_partition(
    scene: &mut Scene,
    ell: &holonomy_core::Loop,
    e: &CatalogEntry,
) -> Result<LabeledLoopPartition, CliError> {
    match (&scene.partition.breakpoints, &scene.partition.labels) {
        (Some(b), Some(l)) => {
            let t = LabeledLoopPartition::new(b.clone(), l.clone())
                .map_err(|err| CliError::schema(err.to_string()))?;
            t.validate(ell, &e.cover)?;
            Ok(t)
        }
        (None, None) => {
            let n = single_resolution(scene, DEFAULT_PATH_RESOLUTION)?;
            Ok(build_loop_partition(ell, &e.cover, n)?)
        }
        _ => Err(CliError::schema(
            "explicit partitions need both breakpoints and labels",
        )),
    }
}

fn no_faces(scene: &Scene, kind: &str) -> Result<(), CliError> {
    if scene.partition.faces.is_some() {
        return Err(CliError::schema(format!(
            "a face table does not partition a {kind}"
        )));
    }
    Ok(())
}

pub fn transport(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let data = bundle_of(&e)?;
    let q = quad(scene)?;
    let z = BundleTransport::new(data, q);
    let map = standard_map(scene, &e)?;
    let (phase, mut result) = match map {
        StandardMap::Path(p) => {
            no_faces(scene, "path")?;
            let t = path_partition(scene, &p, &e)?;
            let ev = z.evaluate_path(&p, &t)?;
            let r = json!({
                "object": "path",
                "phase": phase_out(ev.phase),
                "integrals": ev.integrals,
                "transitions": ev.transitions,
                "quadrature_error": ev.quadrature_error,
                "partition": { "breakpoints": t.breakpoints(), "labels": t.labels() },
            });
            (ev.phase, r)
        }
        StandardMap::Loop(ell) => {
            no_faces(scene, "loop")?;
            let t = loop_partition(scene, &ell, &e)?;
            let a0 = t.start();
            let open = z.evaluate_path(&ell.as_path(a0), &t.as_path_partition())?;
            let labels = t.labels();
            let close = z.z_point(
                &ell.eval(a0),
                Orientation::Positive,
                labels[labels.len() - 1],
                labels[0],
            )?;
            let phase = open.phase + close;
            let r = json!({
                "object": "loop",
                "phase": phase_out(phase),
                "integrals": open.integrals,
                "transitions": open.transitions + close.angle(),
                "quadrature_error": open.quadrature_error,
                "partition": { "angles": t.angles(), "labels": labels },
            });
            (phase, r)
        }
        StandardMap::Point(y) => {
            no_faces(scene, "point")?;
            let labels: Vec<ChartId> = match scene.charts.as_slice() {
                [] => vec![
                    e.cover
                        .best_chart(&y)
                        .ok_or_else(|| CliError::geometry("no chart contains the point"))?
                        .0,
                ],
                [i] => vec![*i],
                [i, j] => vec![*i, *j],
                _ => {
                    return Err(CliError::schema(
                        "a constant path takes one or two chart labels",
                    ))
                }
            };
            let p = Path::constant(0.0, 1.0, y);
            let t = if labels.len() == 1 {
                LabeledPathPartition::single(0.0, 1.0, labels[0])
            } else {
                LabeledPathPartition::split(0.0, 1.0, 0.5, labels[0], labels[1])?
            };
            t.validate(&p, &e.cover)?;
            let ev = z.evaluate_path(&p, &t)?;
            let r = json!({
                "object": "constant_path",
                "phase": phase_out(ev.phase),
                "integrals": ev.integrals,
                "transitions": ev.transitions,
                "quadrature_error": ev.quadrature_error,
                "partition": { "breakpoints": t.breakpoints(), "labels": t.labels() },
            });
            (ev.phase, r)
        }
        other => {
            return Err(CliError::schema(format!(
                "transport needs a path, loop or point map, got {:?}",
                other.kind()
            )))
        }
    };
    let (check, passed) = expectation(scene, phase, 1e-6)?;
    result["check"] = check;
    Ok(Outcome { result, passed })
}

fn surface_object(
    scene: &mut Scene,
    e: &CatalogEntry,
    map: StandardMap,
) -> Result<SurfaceObject, CliError> {
    let StandardMap::Surface { map, domain } = map else {
        return Err(CliError::schema(format!(
            "expected a surface map, got {:?}",
            map.kind()
        )));
    };
    if scene.partition.breakpoints.is_some() || scene.partition.labels.is_some() {
        return Err(CliError::schema(
            "surfaces take a face table, not breakpoints and labels",
        ));
    }
    let part = match &scene.partition.faces {
        Some(faces) => {
            if !matches!(domain, SurfaceDomain::Planar { .. }) {
                return Err(CliError::schema(
                    "face tables are supported on planar domains only",
                ));
            }
            let specs = faces
                .iter()
                .map(|f| FaceSpec::planar(Cell::new(f.lo, f.hi), f.label))
                .collect();
            LabeledSurfacePartition::from_faces(domain, specs)
                .map_err(|err| CliError::schema(err.to_string()))?
        }
        None => {
            let res = match scene.partition.resolution.as_slice() {
                [] => [DEFAULT_SURFACE_RESOLUTION; 2],
                [n] => [*n, *n],
                [nu, nv] => [*nu, *nv],
                _ => return Err(CliError::schema("surface resolution is n or [nu, nv]")),
            };
            scene.partition.resolution = res.to_vec();
            build_surface_partition(&map, domain, &e.cover, (res[0], res[1]))?
        }
    };
    let part = match scene.orientation {
        Some(Orientation::Negative) => part.reversed(),
        _ => part,
    };
    let so = SurfaceObject::new(map, part);
    so.validate(&e.cover)?;
    Ok(so)
}

pub fn surface(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let data = gerbe_of(&e)?;
    let z = GerbeTransport::new(data, quad(scene)?);
    let map = standard_map(scene, &e)?;
    let so = surface_object(scene, &e, map)?;
    let ev = z.evaluate_surface(&so)?;
    let mut result = json!({
        "phase": phase_out(ev.phase),
        "vertices": ev.vertices,
        "edges": ev.edges,
        "faces": ev.faces,
        "internal_vertices": ev.internal_vertices,
        "internal_edges": ev.internal_edges,
        "max_valence": ev.max_valence,
        "quadrature_error": ev.quadrature_error,
        "partition": to_value(&so.partition().summary()),
    });
    let (check, passed) = expectation(scene, ev.phase, 1e-6)?;
    result["check"] = check;
    Ok(Outcome { result, passed })
}

/// Observed orders `log2(d_k / d_{k+1})` of a defect series at doubling
/// resolutions.
fn orders(defects: &[f64]) -> Vec<Option<f64>> {
    defects
        .windows(2)
        .map(|w| (w[0] > 0.0 && w[1] > 0.0).then(|| (w[0] / w[1]).log2()))
        .collect()
}

fn resolutions(scene: &mut Scene, default: usize) -> Vec<usize> {
    if scene.partition.resolution.is_empty() {
        scene.partition.resolution = vec![default];
    }
    scene.partition.resolution.clone()
}

pub fn stokes(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let data = bundle_of(&e)?;
    let q = quad(scene)?;
    let map = standard_map(scene, &e)?;
    let tol = tolerance(scene, 1e-5)?;
    if scene.partition.faces.is_some() {
        return Err(CliError::schema(
            "stokes builds its own partitions; give resolutions instead of faces",
        ));
    }
    let mut rows = Vec::new();
    let mut defects = Vec::new();
    for n in resolutions(scene, DEFAULT_SURFACE_RESOLUTION) {
        let mut s = scene.clone();
        s.partition.resolution = vec![n];
        let so = surface_object(&mut s, &e, map.clone())?;
        let r = stokes_check_1d(&data, &so, e.curvature.as_ref(), &q)?;
        defects.push(r.defect);
        rows.push(json!({
            "resolution": n,
            "faces": so.partition().faces().len(),
            "boundary_phase": phase_out(r.boundary_phase),
            "curvature_phase": phase_out(r.curvature_phase),
            "defect": r.defect,
            "boundary_circles": r.boundary_circles,
            "quadrature_error": r.quadrature_error,
        }));
    }
    let passed = defects.last().is_some_and(|&d| d <= tol);
    Ok(Outcome {
        result: json!({ "tolerance": tol, "series": rows, "observed_orders": orders(&defects) }),
        passed,
    })
}

pub fn stokes2(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let data = gerbe_of(&e)?;
    let q = quad(scene)?;
    if scene.map.is_none() {
        scene.map = Some("cube".into());
    }
    let StandardMap::Volume { map, lo, hi } = standard_map(scene, &e)? else {
        return Err(CliError::schema("stokes2 needs a volume map"));
    };
    let tol = tolerance(scene, 1e-5)?;
    let mut rows = Vec::new();
    let mut defects = Vec::new();
    for n in resolutions(scene, DEFAULT_VOLUME_RESOLUTION) {
        let vol = build_volume_partition(&map, lo, hi, &e.cover, n)?;
        let r = stokes_check_2d(&data, &map, &vol, e.curvature3.as_ref(), &q)?;
        defects.push(r.defect);
        rows.push(json!({
            "resolution": n,
            "bricks": r.bricks,
            "boundary_phase": phase_out(r.boundary_phase),
            "curvature_phase": phase_out(r.curvature_phase),
            "defect": r.defect,
            "quadrature_error": r.quadrature_error,
        }));
    }
    let passed = defects.last().is_some_and(|&d| d <= tol);
    Ok(Outcome {
        result: json!({ "tolerance": tol, "series": rows, "observed_orders": orders(&defects) }),
        passed,
    })
}

fn round_trip_config(scene: &mut Scene, objects: usize) -> Result<RoundTripConfig, CliError> {
    let d = RoundTripConfig::default();
    let h = *scene.fd_step.get_or_insert(d.h);
    if !(h > 0.0) {
        return Err(CliError::schema("fd_step must be positive"));
    }
    Ok(RoundTripConfig {
        samples: *scene.samples.get_or_insert(d.samples),
        objects: *scene.objects.get_or_insert(objects),
        h,
        h_f: h.max(d.h_f),
        seed: scene.seed,
        quad: quad(scene)?,
        resolution: d.resolution,
    })
}

fn point_of(e: &CatalogEntry, coords: &[f64]) -> Result<Vector, CliError> {
    if coords.len() != e.cover.ambient_dim() {
        return Err(CliError::schema(format!(
            "points of {} have {} coordinates, got {}",
            e.name,
            e.cover.ambient_dim(),
            coords.len()
        )));
    }
    Ok(vector(coords))
}

fn charts_at(scene: &Scene, e: &CatalogEntry, y: &Vector) -> Vec<ChartId> {
    let all: Vec<ChartId> = if scene.charts.is_empty() {
        (0..e.cover.len()).collect()
    } else {
        scene.charts.clone()
    };
    all.into_iter()
        .filter(|&i| e.cover.margin(i, y) > 0.0)
        .collect()
}

fn residual_checks(
    report: &holonomy_core::roundtrip::RoundTripReport,
    limits: &[(&str, f64)],
) -> (Vec<Value>, bool) {
    let mut ok = true;
    let rows = limits
        .iter()
        .map(|&(q, limit)| {
            let r = report.residuals.iter().find(|r| r.quantity == q).expect("known quantity");
            let pass = r.max_residual <= limit;
            ok &= pass;
            json!({ "quantity": q, "max_residual": r.max_residual, "count": r.count, "tolerance": limit,
                    "passed": pass, "worst_point": r.worst_point })
        })
        .collect();
    (rows, ok)
}

pub fn reconstruct(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let data = bundle_of(&e)?;
    let tol = tolerance(scene, 1e-4)?;
    let cfg = round_trip_config(scene, 5)?;
    let z = BundleTransport::new(data.clone(), cfg.quad);
    let mut points = Vec::new();
    for coords in &scene.points {
        let y = point_of(&e, coords)?;
        let ids = charts_at(scene, &e, &y);
        let mut g = Vec::new();
        for &i in &ids {
            for &j in &ids {
                let got = reconstruct_g(&z, &y, i, j)?;
                let want = data.transition(i, j, &y)?;
                g.push(json!({ "charts": [i, j], "value": phase_out(got), "residual": got.distance(want) }));
            }
        }
        let mut a = Vec::new();
        for &j in &ids {
            for v in e.cover.tangent_frame(&y) {
                let step = cfg.h.min(0.5 * e.cover.margin(j, &y));
                let got = reconstruct_a(&z, j, &y, &v, step)?;
                let want = data.connection(j, &y, &v);
                a.push(json!({ "chart": j, "vector": v.as_slice(), "value": got, "residual": (got - want).abs() }));
            }
        }
        points.push(json!({ "point": coords, "g": g, "A": a }));
    }
    let report = bundle_round_trip(&e, &cfg)?;
    let (rows, passed) = residual_checks(
        &report,
        &[("g", EXACT_TOLERANCE), ("A", tol), ("transport", tol)],
    );
    Ok(Outcome {
        result: json!({ "step": cfg.h, "round_trip": rows, "points": points }),
        passed,
    })
}

pub fn reconstruct_gerbe(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let data = gerbe_of(&e)?;
    let tol = tolerance(scene, 1e-3)?;
    let cfg = round_trip_config(scene, 2)?;
    let z = GerbeTransport::new(data.clone(), cfg.quad);
    let mut points = Vec::new();
    for coords in &scene.points {
        let y = point_of(&e, coords)?;
        let ids = charts_at(scene, &e, &y);
        let frame = e.cover.tangent_frame(&y);
        let mut g3 = Vec::new();
        for &i in &ids {
            for &j in &ids {
                for &k in &ids {
                    let got = reconstruct_g3(&z, &y, i, j, k)?;
                    let want = data.transition(i, j, k, &y)?;
                    g3.push(json!({ "charts": [i, j, k], "value": phase_out(got), "residual": got.distance(want) }));
                }
            }
        }
        let mut a2 = Vec::new();
        for &j in &ids {
            for &k in ids.iter().filter(|&&k| k != j) {
                for v in &frame {
                    let step = cfg.h.min(0.5 * e.cover.overlap_margin(&[j, k], &y));
                    let got = reconstruct_a2(&z, (j, k), &y, v, step)?;
                    let want = data.overlap_form(j, k, &y, v);
                    a2.push(json!({ "charts": [j, k], "vector": v.as_slice(), "value": got, "residual": (got - want).abs() }));
                }
            }
        }
        let mut f = Vec::new();
        for &j in &ids {
            for (a, v) in frame.iter().enumerate() {
                for w in &frame[a + 1..] {
                    let step = cfg.h_f.min(0.25 * e.cover.margin(j, &y));
                    let got = reconstruct_f(&z, j, &y, (v, w), step)?;
                    let want = data.curving(j, &y, v, w);
                    f.push(
                        json!({ "chart": j, "vectors": [v.as_slice(), w.as_slice()], "value": got,
                                   "residual": (got - want).abs() }),
                    );
                }
            }
        }
        points.push(json!({ "point": coords, "g3": g3, "A2": a2, "F": f }));
    }
    let report = gerbe_round_trip(&e, &cfg)?;
    let (rows, passed) = residual_checks(
        &report,
        &[
            ("g3", EXACT_TOLERANCE),
            ("A2", tol),
            ("F", tol),
            ("transport", tol),
        ],
    );
    Ok(Outcome {
        result: json!({ "step": cfg.h, "curving_step": cfg.h_f, "round_trip": rows, "points": points }),
        passed,
    })
}

pub fn axioms(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let data = bundle_of(&e)?;
    let tol = tolerance(scene, 1e-5)?;
    let trials = *scene.trials.get_or_insert(50);
    let z = BundleTransport::new(data, quad(scene)?);
    let report = match scene.mutant.as_deref() {
        None => axiom_suite_1d(&z, &e, trials, scene.seed, tol),
        Some("dropped-transition") => {
            axiom_suite_1d(&DroppedTransition { inner: z }, &e, trials, scene.seed, tol)
        }
        Some(m) => {
            return Err(CliError::schema(format!(
                "unknown 1-d mutant `{m}` (expected dropped-transition)"
            )))
        }
    };
    Ok(Outcome {
        passed: report.passed,
        result: to_value(&report),
    })
}

pub fn axioms2(scene: &mut Scene) -> Result<Outcome, CliError> {
    let e = entry(scene)?;
    let data = gerbe_of(&e)?;
    let tol = tolerance(scene, 1e-5)?;
    let trials = *scene.trials.get_or_insert(30);
    let z = GerbeTransport::new(data, quad(scene)?);
    if e.random_closed_surface(&mut holonomy_core::axioms::trial_rng(0, 0))
        .is_none()
    {
        return Err(CliError::geometry(format!(
            "{} has no surfaces to test",
            e.name
        )));
    }
    let report = match scene.mutant.as_deref() {
        None => axiom_suite_2d(&z, &e, trials, scene.seed, tol),
        Some("flipped-edges") => {
            axiom_suite_2d(&FlippedEdges { inner: z }, &e, trials, scene.seed, tol)
        }
        Some(m) => {
            return Err(CliError::schema(format!(
                "unknown 2-d mutant `{m}` (expected flipped-edges)"
            )))
        }
    };
    Ok(Outcome {
        passed: report.passed,
        result: to_value(&report),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(geometry: &str, map: Option<&str>) -> Scene {
        Scene {
            geometry: Some(geometry.into()),
            map: map.map(Into::into),
            ..Default::default()
        }
    }

    #[test]
    fn equator_transport_is_pi() {
        let mut s = scene("sphere_monopole", Some("equator"));
        s.expected = Some(std::f64::consts::PI);
        let out = transport(&mut s).unwrap();
        assert!(out.passed);
        assert!(
            (out.result["phase"]["canonical"].as_f64().unwrap().abs() - std::f64::consts::PI).abs()
                < 1e-6
        );
        assert_eq!(s.params["n"], 1.0);
        assert_eq!(s.partition.resolution, vec![DEFAULT_PATH_RESOLUTION]);
    }

    #[test]
    fn constant_path_has_zero_phase() {
        let mut s = scene("sphere_monopole", Some("constant"));
        let out = transport(&mut s).unwrap();
        assert_eq!(out.result["phase"]["accumulated"].as_f64().unwrap(), 0.0);
        assert_eq!(s.map_params.len(), 2);
    }

    #[test]
    fn flat_gerbe_check_is_exact() {
        let mut s = scene("torus_flat_gerbe", None);
        s.tolerance = Some(1e-9);
        assert!(check(&mut s).unwrap().passed);
    }

    #[test]
    fn wrong_object_kinds_are_schema_errors() {
        let mut s = scene("sphere_monopole", Some("sphere"));
        assert_eq!(transport(&mut s).unwrap_err().code, crate::EXIT_SCHEMA);
        let mut s = scene("sphere_monopole", Some("equator"));
        s.partition.breakpoints = Some(vec![0.0, 1.0]);
        assert_eq!(transport(&mut s).unwrap_err().code, crate::EXIT_SCHEMA);
    }

    #[test]
    fn geometry_errors_map_to_exit_3() {
        let mut s = scene("klein_bottle", Some("equator"));
        assert_eq!(transport(&mut s).unwrap_err().code, crate::EXIT_GEOMETRY);
        let mut s = scene("circle_flat", Some("circle"));
        assert_eq!(surface(&mut s).unwrap_err().code, crate::EXIT_GEOMETRY);
    }

    #[test]
    fn orders_of_a_quadratic_series() {
        let o = orders(&[4e-4, 1e-4, 2.5e-5]);
        assert!(o.iter().all(|x| (x.unwrap() - 2.0).abs() < 1e-12));
        assert_eq!(orders(&[0.0, 1.0]), vec![None]);
    }

    #[test]
    fn torus_surface_phase_is_theta() {
        let mut s = scene("torus_global_B", Some("torus"));
        s.params.insert("theta".into(), 0.75);
        s.expected = Some(0.75);
        s.partition.resolution = vec![4, 4];
        let out = surface(&mut s).unwrap();
        assert!(out.passed, "{}", out.result);
    }
}
