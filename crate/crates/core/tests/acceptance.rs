//! Acceptance criteria. Runs as a plain binary so every line is printed under
//! `cargo test`; exits non-zero when any criterion fails.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::{Duration, Instant};

use holonomy_core::axioms::{axiom_suite_1d, axiom_suite_2d, AxiomReport};
use holonomy_core::bundle::{
    boundary_transport, curvature_integral, stokes_check_1d, BundleFunctor, BundleTransport,
    DroppedTransition,
};
use holonomy_core::catalog::{
    box_gerbe, circle_flat, sphere_monopole, torus_flat_gerbe, torus_global_b, CatalogEntry,
    Params, StandardMap,
};
use holonomy_core::cech::{check_bundle_cocycle, check_gerbe_cocycle, BundleData, GerbeData};
use holonomy_core::gerbe::{stokes_check_2d, FlippedEdges, GerbeTransport};
use holonomy_core::numerics::QuadConfig;
use holonomy_core::partition::{
    build_loop_partition, build_surface_partition, build_volume_partition, SurfaceObject,
};
use holonomy_core::roundtrip::{bundle_round_trip, gerbe_round_trip, RoundTripConfig};
use holonomy_core::{Complex, Phase, Result};

const HOLONOMY_EQUATOR_TOL: f64 = 1e-6;
const HOLONOMY_LATITUDE_TOL: f64 = 1e-5;
const HOLONOMY_TIME: Duration = Duration::from_secs(1);
const CAP_SUM_TOL: f64 = 1e-5;
const FLUX_TOL: f64 = 1e-6;
const STOKES1_TOL: f64 = 1e-5;
const STOKES1_OBJECTS: usize = 20;
const STOKES2_TOL: f64 = 1e-5;
const MIN_ORDER: f64 = 2.0;
const AXIOM_TOL: f64 = 1e-5;
const AXIOM_TRIALS_1D: usize = 50;
const AXIOM_TRIALS_2D: usize = 30;
const MUTANT_MIN: f64 = 1e-2;
const GLUE_TOL: f64 = 1e-9;
const GLUE_CASES: usize = 10;
const G_TOL: f64 = 1e-9;
const A_TOL: f64 = 1e-4;
const GERBE_FORM_TOL: f64 = 1e-3;
const PATH_TRANSPORT_TOL: f64 = 1e-4;
const SURFACE_TRANSPORT_TOL: f64 = 1e-3;
const ROUND_TRIP_SAMPLES: usize = 100;
const ROUND_TRIP_PATHS: usize = 20;
const ROUND_TRIP_SURFACES: usize = 10;
const ROUND_TRIP_TIME: Duration = Duration::from_secs(60);
const MOVE_TOL: f64 = 1e-6;
const MOVE_PATHS: usize = 20;
const MOVE_SURFACES: usize = 10;
const REPARAM_TOL: f64 = 1e-8;
const COCYCLE_TOL: f64 = 1e-6;
const MUTANT_RESIDUAL_MIN: f64 = 1e-3;

type Outcome = Result<(bool, String)>;

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn loop_phase(e: &CatalogEntry, map: &str, p: &Params) -> Result<Phase> {
    let StandardMap::Loop(ell) = e.map(map, p)? else {
        unreachable!()
    };
    let t = build_loop_partition(&ell, &e.cover, 64)?;
    BundleTransport::new(e.bundle.clone().unwrap(), QuadConfig::default()).z_loop(&ell, &t)
}

fn surface(e: &CatalogEntry, map: &str, p: &Params, res: usize) -> Result<SurfaceObject> {
    let StandardMap::Surface { map, domain } = e.map(map, p)? else {
        unreachable!()
    };
    let t = build_surface_partition(&map, domain, &e.cover, (res, res))?;
    Ok(SurfaceObject::new(map, t))
}

fn orders(defects: &[f64]) -> Vec<f64> {
    defects.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn sci(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.1e}"))
        .collect::<Vec<_>>()
        .join("/")
}

fn fixed2(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.2}"))
        .collect::<Vec<_>>()
        .join("/")
}

fn holonomy() -> Outcome {
    let mut worst_eq: f64 = 0.0;
    let mut worst_lat: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for n in 1..=3 {
        let t0 = Instant::now();
        let e = sphere_monopole(n)?;
        let q = n as f64;
        worst_eq = worst_eq
            .max(loop_phase(&e, "equator", &Params::new())?.distance(Phase::from_angle(PI * q)));
        for th in [0.3, 0.7, 1.0, 2.5] {
            let got = loop_phase(&e, "latitude", &params(&[("theta0", th)]))?;
            worst_lat = worst_lat.max(got.distance(Phase::from_angle(q * PI * (1.0 - th.cos()))));
        }
        slowest = slowest.max(t0.elapsed());
    }
    Ok((
        worst_eq <= HOLONOMY_EQUATOR_TOL
            && worst_lat <= HOLONOMY_LATITUDE_TOL
            && slowest < HOLONOMY_TIME,
        format!("equator {worst_eq:.1e}, latitude {worst_lat:.1e}, slowest charge {slowest:.2?}"),
    ))
}

fn chern() -> Outcome {
    let quad = QuadConfig::default();
    let (mut worst_sum, mut worst_flux) = (0.0f64, 0.0f64);
    for n in [1, 2, 3, -2] {
        let e = sphere_monopole(n)?;
        let data = e.bundle.clone().unwrap();
        let mut total = 0.0;
        for cap in ["north_cap", "south_cap"] {
            let so = surface(&e, cap, &Params::new(), 16)?;
            total += boundary_transport(&data, &so, &quad)?.1.value;
        }
        worst_sum = worst_sum.max((total - TAU * n as f64).abs());
        let sphere = surface(&e, "sphere", &Params::new(), 16)?;
        let flux = curvature_integral(&data, &sphere, e.curvature.as_ref(), &quad)?.value / TAU;
        worst_flux = worst_flux.max((flux - n as f64).abs());
    }
    Ok((
        worst_sum <= CAP_SUM_TOL && worst_flux <= FLUX_TOL,
        format!("cap sum vs 2πn {worst_sum:.1e}, flux vs n {worst_flux:.1e}"),
    ))
}

fn stokes_1d() -> Outcome {
    let e = sphere_monopole(1)?;
    let data = e.bundle.clone().unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..STOKES1_OBJECTS {
        let rng = &mut holonomy_core::axioms::trial_rng(3, k);
        let (map, domain) = e.random_bounded_surface(rng).unwrap();
        let so = SurfaceObject::new(
            map.clone(),
            build_surface_partition(&map, domain, &e.cover, (16, 8))?,
        );
        worst = worst
            .max(stokes_check_1d(&data, &so, e.curvature.as_ref(), &QuadConfig::default())?.defect);
    }
    let fixed = QuadConfig {
        max_depth: 0,
        ..QuadConfig::fixed(2)
    };
    let mut series = Vec::new();
    for n in [4, 8, 16, 32] {
        let so = surface(&e, "band", &Params::new(), n)?;
        series.push(stokes_check_1d(&data, &so, e.curvature.as_ref(), &fixed)?.defect);
    }
    let ord = orders(&series);
    let min = ord.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        worst <= STOKES1_TOL && min >= MIN_ORDER,
        format!(
            "{STOKES1_OBJECTS} caps/bands max defect {worst:.1e}; band 2-pt series {}, orders {}",
            sci(&series),
            fixed2(&ord)
        ),
    ))
}

fn stokes_2d() -> Outcome {
    let e = box_gerbe(2, 1.0)?;
    let data = e.gerbe.clone().unwrap();
    let StandardMap::Volume { map, lo, hi } = e.map("cube", &Params::new())? else {
        unreachable!()
    };
    let vol = build_volume_partition(&map, lo, hi, &e.cover, 8)?;
    let r = stokes_check_2d(
        &data,
        &map,
        &vol,
        e.curvature3.as_ref(),
        &QuadConfig::default(),
    )?;
    let vs_exact = r.boundary_phase.distance(Phase::from_angle(1.0));
    let mut series = Vec::new();
    for n in [4, 8, 16] {
        let vol = build_volume_partition(&map, lo, hi, &e.cover, n)?;
        series.push(
            stokes_check_2d(
                &data,
                &map,
                &vol,
                e.curvature3.as_ref(),
                &QuadConfig::fixed(2),
            )?
            .defect,
        );
    }
    let ord = orders(&series);
    let min = ord.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        vs_exact <= STOKES2_TOL && r.defect <= STOKES2_TOL && min >= MIN_ORDER,
        format!(
            "8³ boundary vs ∭G=1 {vs_exact:.1e} (defect {:.1e}); 2-pt series {}, orders {}",
            r.defect,
            sci(&series),
            fixed2(&ord)
        ),
    ))
}

struct Suites {
    monopole: AxiomReport,
    circle: AxiomReport,
    flat: AxiomReport,
    global: AxiomReport,
    box_gerbe: AxiomReport,
}

fn run_suites() -> Result<Suites> {
    let quad = QuadConfig::default();
    let mono = sphere_monopole(1)?;
    let circle = circle_flat(0.4, -1.1)?;
    let flat = torus_flat_gerbe(1.0)?;
    let global = torus_global_b(1.3)?;
    let boxg = box_gerbe(2, 1.0)?;
    let bz = |e: &CatalogEntry| BundleTransport::new(e.bundle.clone().unwrap(), quad);
    let gz = |e: &CatalogEntry| GerbeTransport::new(e.gerbe.clone().unwrap(), quad);
    Ok(Suites {
        monopole: axiom_suite_1d(&bz(&mono), &mono, AXIOM_TRIALS_1D, 0, AXIOM_TOL),
        circle: axiom_suite_1d(&bz(&circle), &circle, AXIOM_TRIALS_1D, 0, AXIOM_TOL),
        flat: axiom_suite_2d(&gz(&flat), &flat, AXIOM_TRIALS_2D, 0, AXIOM_TOL),
        global: axiom_suite_2d(&gz(&global), &global, AXIOM_TRIALS_2D, 0, AXIOM_TOL),
        box_gerbe: axiom_suite_2d(&gz(&boxg), &boxg, GLUE_CASES, 0, AXIOM_TOL),
    })
}

fn axioms(s: &Suites) -> Outcome {
    let clean = [&s.monopole, &s.circle, &s.flat, &s.global];
    let worst = clean.iter().map(|r| r.max_defect()).fold(0.0, f64::max);
    let all_ok = clean.iter().all(|r| r.passed);
    let quad = QuadConfig::default();
    let circle = circle_flat(0.4, -1.1)?;
    let dropped = DroppedTransition {
        inner: BundleTransport::new(circle.bundle.clone().unwrap(), quad),
    };
    let d1 = axiom_suite_1d(&dropped, &circle, 10, 0, AXIOM_TOL).max_defect();
    let boxg = box_gerbe(2, 1.0)?;
    let flipped = FlippedEdges {
        inner: GerbeTransport::new(boxg.gerbe.clone().unwrap(), quad),
    };
    let d2 = axiom_suite_2d(&flipped, &boxg, 4, 0, AXIOM_TOL).max_defect();
    let summary: Vec<String> = clean
        .iter()
        .map(|r| {
            let mut s = format!("{} {}x {:.1e}", r.geometry, r.trials, r.max_defect());
            if let Some(f) = r.failures.first() {
                s += &format!(" ({} failed trials, first: {})", r.failures.len(), f.error);
            }
            s
        })
        .collect();
    Ok((
        all_ok && worst <= AXIOM_TOL && d1 >= MUTANT_MIN && d2 >= MUTANT_MIN,
        format!(
            "{}; mutants: dropped transition {d1:.1e}, flipped edges {d2:.1e}",
            summary.join(", ")
        ),
    ))
}

fn defect_with_checks(r: &AxiomReport, axiom: &str) -> (f64, usize) {
    r.axioms
        .iter()
        .find(|a| a.axiom == axiom)
        .map_or((f64::INFINITY, 0), |a| (a.max_defect, a.checks))
}

fn gluing(s: &Suites) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut enough = true;
    let mut parts = Vec::new();
    for (r, axiom) in [
        (&s.monopole, "def_iii"),
        (&s.circle, "def_iii"),
        (&s.box_gerbe, "def_iv"),
        (&s.flat, "def_iv"),
    ] {
        let (d, n) = defect_with_checks(r, axiom);
        worst = worst.max(d);
        enough &= n >= GLUE_CASES;
        parts.push(format!("{} {axiom} {n} cases {d:.1e}", r.geometry));
    }
    Ok((worst <= GLUE_TOL && enough, parts.join(", ")))
}

fn round_trips() -> Outcome {
    let t0 = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    let mono = sphere_monopole(1)?;
    let cfg = RoundTripConfig {
        samples: ROUND_TRIP_SAMPLES,
        objects: ROUND_TRIP_PATHS,
        ..Default::default()
    };
    let r = bundle_round_trip(&mono, &cfg)?;
    let (g, a, tr) = (
        r.residual("g").unwrap(),
        r.residual("A").unwrap(),
        r.residual("transport").unwrap(),
    );
    ok &= g <= G_TOL && a <= A_TOL && tr <= PATH_TRANSPORT_TOL;
    parts.push(format!(
        "{}: g {g:.1e}, A {a:.1e}, {ROUND_TRIP_PATHS} paths {tr:.1e}",
        r.geometry
    ));
    for e in [box_gerbe(2, 1.0)?, torus_global_b(1.3)?] {
        let cfg = RoundTripConfig {
            samples: ROUND_TRIP_SAMPLES,
            objects: ROUND_TRIP_SURFACES,
            ..Default::default()
        };
        let r = gerbe_round_trip(&e, &cfg)?;
        let q = |k| r.residual(k).unwrap();
        ok &= q("g3") <= G_TOL
            && q("A2") <= GERBE_FORM_TOL
            && q("F") <= GERBE_FORM_TOL
            && q("transport") <= SURFACE_TRANSPORT_TOL;
        parts.push(format!(
            "{}: g3 {:.1e}, A2 {:.1e}, F {:.1e}, {ROUND_TRIP_SURFACES} surfaces {:.1e}",
            r.geometry,
            q("g3"),
            q("A2"),
            q("F"),
            q("transport")
        ));
    }
    let elapsed = t0.elapsed();
    parts.push(format!("{elapsed:.1?}"));
    Ok((ok && elapsed < ROUND_TRIP_TIME, parts.join("; ")))
}

fn moves(s: &Suites) -> Outcome {
    let mut worst_moves: f64 = 0.0;
    let mut enough = true;
    for (r, need) in [
        (&s.monopole, MOVE_PATHS),
        (&s.circle, MOVE_PATHS),
        (&s.flat, MOVE_SURFACES),
        (&s.global, MOVE_SURFACES),
    ] {
        let (d, n) = defect_with_checks(r, "moves");
        worst_moves = worst_moves.max(d);
        enough &= n >= need;
    }
    let reparam = [&s.monopole, &s.circle]
        .iter()
        .map(|r| defect_with_checks(r, "reparametrization").0)
        .fold(0.0, f64::max);
    Ok((
        enough && worst_moves <= MOVE_TOL && reparam <= REPARAM_TOL,
        format!("5-move sequences {worst_moves:.1e}, path reparametrization {reparam:.1e}"),
    ))
}

fn bundle_mutant(data: &Arc<BundleData>, which: &str) -> BundleData {
    let (g, a) = (data.clone(), data.clone());
    let broken_b1 = which == "B1";
    let broken_b2 = which == "B2";
    BundleData::new(
        data.cover().clone(),
        move |i, j, y| {
            let z = g.g_raw(i, j, y);
            if broken_b1 && (i, j) == (0, 1) {
                z * Complex::from_polar(1.0, 0.1)
            } else {
                z
            }
        },
        move |j, y, v| a.connection(j, y, v) + if broken_b2 && j == 1 { 0.1 * v[0] } else { 0.0 },
    )
}

fn gerbe_mutant(data: &Arc<GerbeData>, which: &'static str) -> GerbeData {
    let (g, a, f) = (data.clone(), data.clone(), data.clone());
    GerbeData::new(
        data.cover().clone(),
        move |i, j, k, y| {
            let z = g.g3_raw(i, j, k, y);
            let hit = match which {
                "G1" => i == j,
                "G2" => (i, j, k) == (0, 1, 2),
                _ => false,
            };
            if hit {
                z * Complex::from_polar(1.0, 0.1)
            } else {
                z
            }
        },
        move |j, k, y, v| {
            a.overlap_form(j, k, y, v)
                + if which == "G3" && (j, k) == (0, 1) {
                    0.1 * v[0]
                } else {
                    0.0
                }
        },
        move |k, y, v, w| {
            let extra = if which == "G4" && k == 1 {
                0.1 * (v[0] * w[1] - v[1] * w[0])
            } else {
                0.0
            };
            f.curving(k, y, v, w) + extra
        },
    )
}

fn cocycles() -> Outcome {
    let entries = [
        circle_flat(0.4, -1.1)?,
        circle_flat(0.0, 0.0)?,
        sphere_monopole(1)?,
        sphere_monopole(-3)?,
        torus_global_b(1.3)?,
        torus_flat_gerbe(1.0)?,
        box_gerbe(1, 1.0)?,
        box_gerbe(2, -0.5)?,
    ];
    let mut worst: f64 = 0.0;
    for e in &entries {
        for r in e.check(COCYCLE_TOL)? {
            worst = worst.max(
                r.residuals
                    .iter()
                    .map(|a| a.max_residual)
                    .fold(0.0, f64::max),
            );
        }
    }
    let mut flagged = Vec::new();
    let mono = sphere_monopole(1)?.bundle.unwrap();
    for ax in ["B1", "B2"] {
        flagged.push((
            ax,
            check_bundle_cocycle(&bundle_mutant(&mono, ax), COCYCLE_TOL)?
                .residual(ax)
                .unwrap(),
        ));
    }
    let flat = torus_flat_gerbe(1.0)?.gerbe.unwrap();
    let boxg = box_gerbe(2, 1.0)?.gerbe.unwrap();
    for (ax, data) in [("G1", &flat), ("G2", &flat), ("G3", &boxg), ("G4", &boxg)] {
        flagged.push((
            ax,
            check_gerbe_cocycle(&gerbe_mutant(data, ax), COCYCLE_TOL)?
                .residual(ax)
                .unwrap(),
        ));
    }
    let min = flagged.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let detail: Vec<String> = flagged
        .iter()
        .map(|(a, r)| format!("{a} {r:.1e}"))
        .collect();
    Ok((
        worst <= COCYCLE_TOL && min >= MUTANT_RESIDUAL_MIN,
        format!(
            "{} entries max residual {worst:.1e}; mutants {}",
            entries.len(),
            detail.join(", ")
        ),
    ))
}

fn main() {
    let mut failed = 0;
    let mut line = |id: usize, name: &str, t0: Instant, out: Outcome| {
        let (ok, detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "{} {id} {name} [{:.1?}]: {detail}",
            if ok { "PASS" } else { "FAIL" },
            t0.elapsed()
        );
    };
    let t = Instant::now();
    line(1, "monopole holonomy", t, holonomy());
    let t = Instant::now();
    line(2, "chern extraction", t, chern());
    let t = Instant::now();
    line(3, "1-d stokes", t, stokes_1d());
    let t = Instant::now();
    line(4, "2-d stokes", t, stokes_2d());
    let t = Instant::now();
    let suites = run_suites();
    let on_suites = |f: fn(&Suites) -> Outcome| match &suites {
        Ok(s) => f(s),
        Err(e) => Ok((false, format!("error: {e}"))),
    };
    line(5, "axiom suites", t, on_suites(axioms));
    line(6, "gluing exactness", Instant::now(), on_suites(gluing));
    let t = Instant::now();
    line(7, "round trips", t, round_trips());
    line(
        8,
        "moves and reparametrization",
        Instant::now(),
        on_suites(moves),
    );
    let t = Instant::now();
    line(9, "cocycle checkers", t, cocycles());
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
