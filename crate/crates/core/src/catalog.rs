//! Built-in target manifolds: chart covers, bundle or gerbe data, analytic
//! curvature forms and the standard maps into them.
//!
//! Every entry is checked against the cocycle conditions when it is built.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_3, PI, TAU};
use std::sync::Arc;

use nalgebra::{Complex, Rotation3, Vector3};
use rand::Rng;
use serde::Serialize;

use crate::bundle::TwoForm;
use crate::cech::{
    check_bundle_cocycle, check_gerbe_cocycle, BundleData, Chart, ChartCover, CocycleReport,
    GerbeData,
};
use crate::error::{Error, Result};
use crate::gerbe::ThreeForm;
use crate::partition::{SurfaceDomain, SurfaceMap, VolumeMap};
use crate::types::{vector, ChartId, Loop, Path, Vector};

/// Tolerance every entry must meet at construction.
pub const CATALOG_TOLERANCE: f64 = 1e-6;

pub type Params = BTreeMap<String, f64>;

/// Names of the built-in geometries.
pub const GEOMETRIES: [&str; 5] = [
    "circle_flat",
    "sphere_monopole",
    "torus_global_B",
    "torus_flat_gerbe",
    "box_gerbe",
];

/// A named map into the target with its parameter defaults.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MapInfo {
    pub name: &'static str,
    pub kind: MapKind,
    pub params: &'static [(&'static str, f64)],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Point,
    Path,
    Loop,
    Surface,
    Volume,
}

#[derive(Clone)]
pub enum StandardMap {
    Point(Vector),
    Path(Path),
    Loop(Loop),
    Surface {
        map: SurfaceMap,
        domain: SurfaceDomain,
    },
    Volume {
        map: VolumeMap,
        lo: [f64; 3],
        hi: [f64; 3],
    },
}

impl StandardMap {
    pub fn kind(&self) -> MapKind {
        match self {
            StandardMap::Point(_) => MapKind::Point,
            StandardMap::Path(_) => MapKind::Path,
            StandardMap::Loop(_) => MapKind::Loop,
            StandardMap::Surface { .. } => MapKind::Surface,
            StandardMap::Volume { .. } => MapKind::Volume,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Circle,
    Sphere,
    TorusB,
    TorusFlat,
    Box,
}

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub parameters: Params,
    pub cover: Arc<ChartCover>,
    pub bundle: Option<Arc<BundleData>>,
    pub gerbe: Option<Arc<GerbeData>>,
    /// Curvature 2-form of the bundle.
    pub curvature: Option<TwoForm>,
    /// Curvature 3-form of the gerbe.
    pub curvature3: Option<ThreeForm>,
    kind: Kind,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("parameters", &self.parameters)
            .finish()
    }
}

fn bad(name: &str, reason: impl Into<String>) -> Error {
    Error::BadParameter {
        name: name.into(),
        reason: reason.into(),
    }
}

/// Merges `given` over `defaults`, rejecting unknown or non-finite values.
pub fn resolve_params(given: &Params, defaults: &[(&str, f64)]) -> Result<Params> {
    let mut out: Params = defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (k, &v) in given {
        if !out.contains_key(k) {
            let known: Vec<&str> = defaults.iter().map(|d| d.0).collect();
            return Err(bad(
                k,
                format!("unknown parameter (expected one of {known:?})"),
            ));
        }
        if !v.is_finite() {
            return Err(bad(k, "must be finite"));
        }
        out.insert(k.clone(), v);
    }
    Ok(out)
}

fn integer(params: &Params, name: &str) -> Result<i64> {
    let v = params[name];
    if v.fract() != 0.0 || v.abs() > 1e6 {
        return Err(bad(name, format!("expected an integer, got {v}")));
    }
    Ok(v as i64)
}

fn unit_phase(angle: f64) -> Complex<f64> {
    Complex::from_polar(1.0, angle)
}

/// Signs `±1` for the orderings of two distinct charts; `0` on the diagonal.
fn antisym(i: ChartId, j: ChartId) -> f64 {
    match i.cmp(&j) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Greater => -1.0,
        std::cmp::Ordering::Equal => 0.0,
    }
}

/// Sign of the permutation taking `(i, j, k)` to increasing order; `0` on repeats.
fn perm_sign(i: ChartId, j: ChartId, k: ChartId) -> f64 {
    antisym(i, j) * antisym(j, k) * antisym(i, k)
}

fn cross(a: &Vector, b: &Vector) -> Vector {
    vector(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

fn sphere_point(theta: f64, phi: f64) -> Vector {
    vector(&[
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ])
}

fn torus_point(u: f64, v: f64) -> Vector {
    vector(&[u.cos(), u.sin(), v.cos(), v.sin()])
}

fn fibonacci_sphere(n: usize) -> Vec<Vector> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            sphere_point(z.acos(), golden * k as f64)
        })
        .collect()
}

fn grid(n: usize, f: impl Fn(f64, f64) -> Vector) -> Vec<Vector> {
    (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| f(a as f64, b as f64))
        .collect()
}

fn chart_with_samples(
    name: &str,
    margin: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
    samples: &[Vector],
) -> Chart {
    let inside = samples
        .iter()
        .filter(|y| margin(y) > 0.0)
        .cloned()
        .collect();
    Chart::new(name, margin, inside)
}

const CIRCLE_MAPS: &[MapInfo] = &[
    MapInfo {
        name: "circle",
        kind: MapKind::Loop,
        params: &[("winding", 1.0)],
    },
    MapInfo {
        name: "arc",
        kind: MapKind::Path,
        params: &[("from", 0.0), ("to", PI)],
    },
    MapInfo {
        name: "constant",
        kind: MapKind::Point,
        params: &[("phi", 0.0)],
    },
];

const SPHERE_MAPS: &[MapInfo] = &[
    MapInfo {
        name: "equator",
        kind: MapKind::Loop,
        params: &[],
    },
    MapInfo {
        name: "latitude",
        kind: MapKind::Loop,
        params: &[("theta0", FRAC_PI_3)],
    },
    MapInfo {
        name: "meridian",
        kind: MapKind::Path,
        params: &[("phi", 0.0)],
    },
    MapInfo {
        name: "north_cap",
        kind: MapKind::Surface,
        params: &[("theta0", 0.5 * PI)],
    },
    MapInfo {
        name: "south_cap",
        kind: MapKind::Surface,
        params: &[("theta0", 0.5 * PI)],
    },
    MapInfo {
        name: "band",
        kind: MapKind::Surface,
        params: &[("theta1", FRAC_PI_3), ("theta2", 2.0 * FRAC_PI_3)],
    },
    MapInfo {
        name: "sphere",
        kind: MapKind::Surface,
        params: &[],
    },
    MapInfo {
        name: "constant",
        kind: MapKind::Point,
        params: &[("theta", 1.0), ("phi", 0.5)],
    },
];

const TORUS_MAPS: &[MapInfo] = &[
    MapInfo {
        name: "torus",
        kind: MapKind::Surface,
        params: &[],
    },
    MapInfo {
        name: "cylinder",
        kind: MapKind::Surface,
        params: &[("v0", 0.0), ("v1", PI)],
    },
    MapInfo {
        name: "meridian",
        kind: MapKind::Loop,
        params: &[("u", 0.0)],
    },
    MapInfo {
        name: "longitude",
        kind: MapKind::Loop,
        params: &[("v", 0.0)],
    },
    MapInfo {
        name: "constant",
        kind: MapKind::Point,
        params: &[("u", 1.0), ("v", 2.0)],
    },
];

const BOX_MAPS: &[MapInfo] = &[
    MapInfo {
        name: "cube",
        kind: MapKind::Volume,
        params: &[],
    },
    MapInfo {
        name: "torus",
        kind: MapKind::Surface,
        params: &[("major", 0.25), ("minor", 0.1)],
    },
    MapInfo {
        name: "constant",
        kind: MapKind::Point,
        params: &[("x", 0.5), ("y", 0.5), ("z", 0.5)],
    },
];

impl CatalogEntry {
    /// Builds the entry `name` from a parameter map (missing values take defaults).
    pub fn build(name: &str, params: &Params) -> Result<Self> {
        match name {
            "circle_flat" => {
                let p = resolve_params(params, &[("alpha_right", 0.7), ("alpha_left", -0.4)])?;
                circle_flat(p["alpha_right"], p["alpha_left"])
            }
            "sphere_monopole" => {
                let p = resolve_params(params, &[("n", 1.0)])?;
                sphere_monopole(integer(&p, "n")?)
            }
            "torus_global_B" => {
                let p = resolve_params(params, &[("theta", 1.0)])?;
                torus_global_b(p["theta"])
            }
            "torus_flat_gerbe" => {
                let p = resolve_params(params, &[("omega", 1.0)])?;
                torus_flat_gerbe(p["omega"])
            }
            "box_gerbe" => {
                let p = resolve_params(params, &[("charts", 1.0), ("coupling", 1.0)])?;
                let charts = integer(&p, "charts")?;
                if !(1..=2).contains(&charts) {
                    return Err(bad("charts", "must be 1 or 2"));
                }
                box_gerbe(charts as usize, p["coupling"])
            }
            other => Err(bad(
                "geometry",
                format!("unknown geometry `{other}` (expected one of {GEOMETRIES:?})"),
            )),
        }
    }

    pub fn maps(&self) -> &'static [MapInfo] {
        match self.kind {
            Kind::Circle => CIRCLE_MAPS,
            Kind::Sphere => SPHERE_MAPS,
            Kind::TorusB | Kind::TorusFlat => TORUS_MAPS,
            Kind::Box => BOX_MAPS,
        }
    }

    pub fn map_info(&self, name: &str) -> Result<MapInfo> {
        self.maps()
            .iter()
            .find(|m| m.name == name)
            .copied()
            .ok_or_else(|| {
                let known: Vec<&str> = self.maps().iter().map(|m| m.name).collect();
                bad(
                    "map",
                    format!(
                        "unknown map `{name}` for {} (expected one of {known:?})",
                        self.name
                    ),
                )
            })
    }

    /// The named standard map with the given parameters.
    pub fn map(&self, name: &str, params: &Params) -> Result<StandardMap> {
        let info = self.map_info(name)?;
        let p = resolve_params(params, info.params)?;
        let out = match (self.kind, name) {
            (Kind::Circle, "circle") => {
                let w = integer(&p, "winding")? as f64;
                StandardMap::Loop(Loop::new(move |t| vector(&[(w * t).cos(), (w * t).sin()])))
            }
            (Kind::Circle, "arc") => {
                let (a, b) = (p["from"], p["to"]);
                StandardMap::Path(Path::new(0.0, 1.0, move |t| {
                    let phi = a + (b - a) * t;
                    vector(&[phi.cos(), phi.sin()])
                }))
            }
            (Kind::Circle, "constant") => {
                StandardMap::Point(vector(&[p["phi"].cos(), p["phi"].sin()]))
            }
            (Kind::Sphere, "equator") => {
                StandardMap::Loop(Loop::new(|t| sphere_point(0.5 * PI, t)))
            }
            (Kind::Sphere, "latitude") => {
                let th = p["theta0"];
                StandardMap::Loop(Loop::new(move |t| sphere_point(th, t)))
            }
            (Kind::Sphere, "meridian") => {
                let phi = p["phi"];
                StandardMap::Path(Path::new(0.0, PI, move |t| sphere_point(t, phi)))
            }
            (Kind::Sphere, "north_cap") => {
                let th = positive(&p, "theta0", PI)?;
                StandardMap::Surface {
                    map: north_cap(th),
                    domain: SurfaceDomain::disk(1.0),
                }
            }
            (Kind::Sphere, "south_cap") => {
                let th = positive(&p, "theta0", PI)?;
                StandardMap::Surface {
                    map: south_cap(th),
                    domain: SurfaceDomain::disk(1.0),
                }
            }
            (Kind::Sphere, "band") => {
                let (t1, t2) = (p["theta1"], p["theta2"]);
                if !(0.0 < t1 && t1 < t2 && t2 < PI) {
                    return Err(bad("theta1", "need 0 < theta1 < theta2 < pi"));
                }
                StandardMap::Surface {
                    map: band(t1, t2),
                    domain: SurfaceDomain::cylinder([0.0, 1.0]),
                }
            }
            (Kind::Sphere, "sphere") => StandardMap::Surface {
                map: Arc::new(|q: &Vector| sphere_point(q[0], q[1])),
                domain: SurfaceDomain::sphere(),
            },
            (Kind::Sphere, "constant") => StandardMap::Point(sphere_point(p["theta"], p["phi"])),
            (Kind::TorusB | Kind::TorusFlat, "torus") => StandardMap::Surface {
                map: Arc::new(|q: &Vector| torus_point(q[0], q[1])),
                domain: SurfaceDomain::torus(),
            },
            (Kind::TorusB | Kind::TorusFlat, "cylinder") => {
                let (v0, v1) = (p["v0"], p["v1"]);
                if !(v0 < v1 && v1 - v0 <= TAU) {
                    return Err(bad("v0", "need v0 < v1 <= v0 + 2 pi"));
                }
                StandardMap::Surface {
                    map: Arc::new(|q: &Vector| torus_point(q[0], q[1])),
                    domain: SurfaceDomain::cylinder([v0, v1]),
                }
            }
            (Kind::TorusB | Kind::TorusFlat, "meridian") => {
                let u = p["u"];
                StandardMap::Loop(Loop::new(move |t| torus_point(u, t)))
            }
            (Kind::TorusB | Kind::TorusFlat, "longitude") => {
                let v = p["v"];
                StandardMap::Loop(Loop::new(move |t| torus_point(t, v)))
            }
            (Kind::TorusB | Kind::TorusFlat, "constant") => {
                StandardMap::Point(torus_point(p["u"], p["v"]))
            }
            (Kind::Box, "cube") => StandardMap::Volume {
                map: Arc::new(|q: &Vector| q.clone()),
                lo: [0.0; 3],
                hi: [1.0; 3],
            },
            (Kind::Box, "torus") => {
                let (big, small) = (p["major"], p["minor"]);
                if !(0.0 < small && small < big && big + small < 0.5) {
                    return Err(bad(
                        "major",
                        "need 0 < minor < major and major + minor < 0.5",
                    ));
                }
                StandardMap::Surface {
                    map: box_torus(vector(&[0.5, 0.5, 0.5]), Rotation3::identity(), big, small),
                    domain: SurfaceDomain::torus(),
                }
            }
            (Kind::Box, "constant") => StandardMap::Point(vector(&[p["x"], p["y"], p["z"]])),
            _ => unreachable!("map table and constructors disagree"),
        };
        Ok(out)
    }

    /// Cocycle residual reports of the data carried by the entry.
    pub fn check(&self, tol: f64) -> Result<Vec<CocycleReport>> {
        let mut out = Vec::new();
        if let Some(b) = &self.bundle {
            out.push(check_bundle_cocycle(b, tol)?);
        }
        if let Some(g) = &self.gerbe {
            out.push(check_gerbe_cocycle(g, tol)?);
        }
        Ok(out)
    }

    fn verified(self) -> Result<Self> {
        for r in self.check(CATALOG_TOLERANCE)? {
            if !r.passed {
                let worst = r
                    .residuals
                    .iter()
                    .map(|a| (a.axiom.as_str(), a.max_residual))
                    .collect::<Vec<_>>();
                return Err(bad(
                    &self.name,
                    format!("data fail the cocycle checks: {worst:?}"),
                ));
            }
        }
        Ok(self)
    }

    /// A point of the manifold drawn from `rng`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self.kind {
            Kind::Circle => {
                let phi = rng.random_range(0.0..TAU);
                vector(&[phi.cos(), phi.sin()])
            }
            Kind::Sphere => sphere_point(
                rng.random_range(-1.0f64..1.0).acos(),
                rng.random_range(0.0..TAU),
            ),
            Kind::TorusB | Kind::TorusFlat => {
                torus_point(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU))
            }
            Kind::Box => vector(&[rng.random(), rng.random(), rng.random()]),
        }
    }

    /// A point of the overlap of the listed charts, by rejection sampling.
    pub fn random_point_in<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        charts: &[ChartId],
        min_margin: f64,
    ) -> Option<Vector> {
        (0..10_000)
            .map(|_| self.random_point(rng))
            .find(|y| self.cover.overlap_margin(charts, y) > min_margin)
    }

    /// A unit tangent vector at `y`.
    pub fn random_tangent<R: Rng + ?Sized>(&self, y: &Vector, rng: &mut R) -> Vector {
        let frame = self.cover.tangent_frame(y);
        let mut v = Vector::zeros(y.len());
        for e in &frame {
            v += e * rng.random_range(-1.0..1.0);
        }
        let n = v.norm();
        if n < 1e-3 {
            frame[0].clone()
        } else {
            v / n
        }
    }

    /// A smooth path on `[0, 1]`.
    pub fn random_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Path {
        match self.kind {
            Kind::Circle => {
                let (phi0, len, wob) = (
                    rng.random_range(0.0..TAU),
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-0.3..0.3),
                );
                Path::new(0.0, 1.0, move |t| {
                    let phi = phi0 + len * t + wob * (PI * t).sin();
                    vector(&[phi.cos(), phi.sin()])
                })
            }
            Kind::Sphere => {
                let a = self.random_point(rng);
                let b = self.random_tangent(&a, rng) * rng.random_range(0.3..2.0);
                let c = random_unit3(rng) * rng.random_range(0.0..0.5);
                Path::new(0.0, 1.0, move |t| {
                    let p = &a + &b * t + &c * (t * t);
                    let n = p.norm();
                    p / n
                })
            }
            Kind::TorusB | Kind::TorusFlat => {
                let (u0, v0) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
                let (du, dv) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
                Path::new(0.0, 1.0, move |t| {
                    torus_point(u0 + du * t, v0 + dv * t + 0.3 * (PI * t).sin())
                })
            }
            Kind::Box => {
                let a = vector(&[rng.random(), rng.random(), rng.random()]);
                let b = vector(&[rng.random(), rng.random(), rng.random()]);
                Path::new(0.0, 1.0, move |t| &a + (&b - &a) * t)
            }
        }
    }

    /// A smooth loop.
    pub fn random_loop<R: Rng + ?Sized>(&self, rng: &mut R) -> Loop {
        match self.kind {
            Kind::Circle => {
                let w = [1.0, -1.0, 2.0][rng.random_range(0..3)];
                let (phi0, wob, ph) = (
                    rng.random_range(0.0..TAU),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(0.0..TAU),
                );
                Loop::new(move |t| {
                    let phi = phi0 + w * t + wob * (t + ph).sin();
                    vector(&[phi.cos(), phi.sin()])
                })
            }
            Kind::Sphere => {
                let rot = random_rotation(rng);
                let th = rng.random_range(0.4..PI - 0.4);
                let (k, amp, ph) = (
                    rng.random_range(1..4) as f64,
                    rng.random_range(0.0..0.2),
                    rng.random_range(0.0..TAU),
                );
                Loop::new(move |t| rotate(&rot, &sphere_point(th + amp * (k * t + ph).sin(), t)))
            }
            Kind::TorusB | Kind::TorusFlat => {
                let (p, q) =
                    [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)][rng.random_range(0..4)];
                let (u0, v0, amp) = (
                    rng.random_range(0.0..TAU),
                    rng.random_range(0.0..TAU),
                    rng.random_range(0.0..0.3),
                );
                Loop::new(move |t| {
                    torus_point(
                        u0 + p * t + amp * t.sin(),
                        v0 + q * t + amp * (2.0 * t).cos(),
                    )
                })
            }
            Kind::Box => {
                let c = vector(&[0.5, 0.5, 0.5]);
                let rot = random_rotation(rng);
                let r = rng.random_range(0.1..0.4);
                Loop::new(move |t| &c + rotate(&rot, &vector(&[r * t.cos(), r * t.sin(), 0.0])))
            }
        }
    }

    /// A closed surface: a perturbed identity of the torus, the sphere, or a
    /// small torus inside the box.
    pub fn random_closed_surface<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Option<(SurfaceMap, SurfaceDomain)> {
        match self.kind {
            Kind::TorusB | Kind::TorusFlat => Some((random_torus_map(rng), SurfaceDomain::torus())),
            Kind::Sphere => {
                let rot = random_rotation(rng);
                let amp = rng.random_range(0.0..0.3);
                Some((
                    Arc::new(move |q: &Vector| {
                        rotate(&rot, &sphere_point(q[0], q[1] + amp * q[0].sin()))
                    }),
                    SurfaceDomain::sphere(),
                ))
            }
            Kind::Box => {
                let c = vector(&[
                    rng.random_range(0.45..0.55),
                    rng.random_range(0.4..0.6),
                    rng.random_range(0.4..0.6),
                ]);
                let big = rng.random_range(0.15..0.25);
                let small = rng.random_range(0.05..0.1);
                Some((
                    box_torus(c, random_rotation(rng), big, small),
                    SurfaceDomain::torus(),
                ))
            }
            Kind::Circle => None,
        }
    }

    /// A surface with boundary: a cap or a band around a random axis on the
    /// sphere, otherwise a band of a random closed torus.
    pub fn random_bounded_surface<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Option<(SurfaceMap, SurfaceDomain)> {
        match self.kind {
            Kind::Sphere => {
                let rot = random_rotation(rng);
                if rng.random_bool(0.5) {
                    let th = rng.random_range(0.3..2.8);
                    let cap = north_cap(th);
                    Some((
                        Arc::new(move |q: &Vector| rotate(&rot, &cap(q))),
                        SurfaceDomain::disk(1.0),
                    ))
                } else {
                    let t1 = rng.random_range(0.2..1.5);
                    let t2 = t1 + rng.random_range(0.3..1.4);
                    let b = band(t1, t2);
                    Some((
                        Arc::new(move |q: &Vector| rotate(&rot, &b(q))),
                        SurfaceDomain::cylinder([0.0, 1.0]),
                    ))
                }
            }
            Kind::TorusB | Kind::TorusFlat => {
                let v0 = rng.random_range(0.0..TAU);
                let width = rng.random_range(0.5..3.0);
                Some((
                    random_torus_map(rng),
                    SurfaceDomain::cylinder([v0, v0 + width]),
                ))
            }
            Kind::Box => {
                let (map, _) = self.random_closed_surface(rng)?;
                let v0 = rng.random_range(0.0..TAU);
                let width = rng.random_range(0.5..3.0);
                Some((map, SurfaceDomain::cylinder([v0, v0 + width])))
            }
            Kind::Circle => None,
        }
    }
}

fn positive(p: &Params, name: &str, max: f64) -> Result<f64> {
    let v = p[name];
    if !(0.0 < v && v <= max) {
        return Err(bad(name, format!("need 0 < {name} <= {max}")));
    }
    Ok(v)
}

fn random_unit3<R: Rng + ?Sized>(rng: &mut R) -> Vector {
    sphere_point(
        rng.random_range(-1.0f64..1.0).acos(),
        rng.random_range(0.0..TAU),
    )
}

fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation3<f64> {
    let axis = random_unit3(rng);
    let angle = rng.random_range(0.0..PI);
    Rotation3::from_scaled_axis(Vector3::new(axis[0], axis[1], axis[2]) * angle)
}

fn rotate(rot: &Rotation3<f64>, p: &Vector) -> Vector {
    let q = rot * Vector3::new(p[0], p[1], p[2]);
    vector(&[q[0], q[1], q[2]])
}

/// Disk `(r, φ)` onto the cap of colatitude `≤ θ0` around the north pole.
fn north_cap(theta0: f64) -> SurfaceMap {
    Arc::new(move |q: &Vector| sphere_point(theta0 * q[0], q[1]))
}

/// Disk onto the cap around the south pole, oriented by the outward normal.
fn south_cap(theta0: f64) -> SurfaceMap {
    Arc::new(move |q: &Vector| sphere_point(PI - theta0 * q[0], -q[1]))
}

/// Cylinder `(φ, s)` onto the band `θ1 ≤ θ ≤ θ2`, `s = 0` on the southern circle.
fn band(theta1: f64, theta2: f64) -> SurfaceMap {
    Arc::new(move |q: &Vector| sphere_point(theta2 - (theta2 - theta1) * q[1], q[0]))
}

fn box_torus(c: Vector, rot: Rotation3<f64>, big: f64, small: f64) -> SurfaceMap {
    Arc::new(move |q: &Vector| {
        let (u, v) = (q[0], q[1]);
        let rr = big + small * v.cos();
        &c + rotate(
            &rot,
            &vector(&[rr * u.cos(), rr * u.sin(), small * v.sin()]),
        )
    })
}

fn random_torus_map<R: Rng + ?Sized>(rng: &mut R) -> SurfaceMap {
    let (u0, v0) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
    let (a, b) = (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
    let (pa, pb) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
    Arc::new(move |q: &Vector| {
        torus_point(
            u0 + q[0] + a * (q[1] + pa).sin(),
            v0 + q[1] + b * (q[0] + pb).sin(),
        )
    })
}

fn circle_cover() -> ChartCover {
    let samples: Vec<Vector> = (0..64)
        .map(|k| vector(&[(TAU * k as f64 / 64.0).cos(), (TAU * k as f64 / 64.0).sin()]))
        .collect();
    ChartCover::new(
        2,
        1,
        vec![
            chart_with_samples("lower", |y: &Vector| 0.3 - y[1] / y.norm(), &samples),
            chart_with_samples("upper", |y: &Vector| y[1] / y.norm() + 0.3, &samples),
        ],
    )
    .with_overlaps(vec![vec![0, 1]])
    .with_projection(|y: &Vector| y / y.norm())
    .with_tangent_frame(|y: &Vector| vec![vector(&[-y[1], y[0]]) / y.norm()])
}

/// Flat bundle on the unit circle with two arc charts whose overlap has two
/// components; `g_01` is `exp(i α_right)` on the `x > 0` arc and
/// `exp(i α_left)` on the other. The anticlockwise holonomy is
/// `α_right − α_left`.
pub fn circle_flat(alpha_right: f64, alpha_left: f64) -> Result<CatalogEntry> {
    for (n, v) in [("alpha_right", alpha_right), ("alpha_left", alpha_left)] {
        if !v.is_finite() {
            return Err(bad(n, "must be finite"));
        }
    }
    let cover = Arc::new(circle_cover());
    let g = move |i: ChartId, j: ChartId, y: &Vector| {
        let alpha = if y[0] > 0.0 { alpha_right } else { alpha_left };
        unit_phase(antisym(i, j) * alpha)
    };
    let bundle = BundleData::new(cover.clone(), g, |_, _, _| 0.0);
    CatalogEntry {
        name: "circle_flat".into(),
        parameters: [
            ("alpha_right".into(), alpha_right),
            ("alpha_left".into(), alpha_left),
        ]
        .into(),
        cover,
        bundle: Some(Arc::new(bundle)),
        gerbe: None,
        curvature: Some(Arc::new(|_: &Vector, _: &Vector, _: &Vector| 0.0)),
        curvature3: None,
        kind: Kind::Circle,
    }
    .verified()
}

/// Half-width of the overlap band of the two sphere charts, in radians of colatitude.
const SPHERE_BAND: f64 = 0.35;

fn sphere_frame(y: &Vector) -> Vec<Vector> {
    let n = y / y.norm();
    let a = if n[0].abs() < 0.6 {
        vector(&[1.0, 0.0, 0.0])
    } else {
        vector(&[0.0, 1.0, 0.0])
    };
    let e1 = cross(&a, &n).normalize();
    let e2 = cross(&n, &e1);
    vec![e1, e2]
}

fn sphere_cover() -> ChartCover {
    let samples = fibonacci_sphere(320);
    let colat = |y: &Vector| (y[2] / y.norm()).clamp(-1.0, 1.0).acos();
    ChartCover::new(
        3,
        2,
        vec![
            chart_with_samples(
                "north",
                move |y: &Vector| 0.5 * PI + SPHERE_BAND - colat(y),
                &samples,
            ),
            chart_with_samples(
                "south",
                move |y: &Vector| colat(y) - (0.5 * PI - SPHERE_BAND),
                &samples,
            ),
        ],
    )
    .with_overlaps(vec![vec![0, 1]])
    .with_projection(|y: &Vector| y / y.norm())
    .with_tangent_frame(sphere_frame)
}

/// Charge-`n` monopole on the unit sphere: `A_N = (n/2)(1 − cos θ) dφ`,
/// `A_S = −(n/2)(1 + cos θ) dφ`, `g_NS = exp(−i n φ)`, `F = (n/2) sin θ dθ∧dφ`.
pub fn sphere_monopole(n: i64) -> Result<CatalogEntry> {
    let cover = Arc::new(sphere_cover());
    let q = n as f64;
    let g =
        move |i: ChartId, j: ChartId, y: &Vector| unit_phase(-antisym(i, j) * q * y[1].atan2(y[0]));
    let a = move |j: ChartId, y: &Vector, v: &Vector| {
        let r = y.norm();
        let dphi = y[0] * v[1] - y[1] * v[0];
        if j == 0 {
            0.5 * q * dphi / (r * (r + y[2]))
        } else {
            -0.5 * q * dphi / (r * (r - y[2]))
        }
    };
    let bundle = BundleData::new(cover.clone(), g, a);
    let curvature: TwoForm = Arc::new(move |y: &Vector, u: &Vector, v: &Vector| {
        let r = y.norm();
        0.5 * q * y.dot(&cross(u, v)) / (r * r * r)
    });
    CatalogEntry {
        name: "sphere_monopole".into(),
        parameters: [("n".into(), q)].into(),
        cover,
        bundle: Some(Arc::new(bundle)),
        gerbe: None,
        curvature: Some(curvature),
        curvature3: None,
        kind: Kind::Sphere,
    }
    .verified()
}

fn torus_frame(y: &Vector) -> Vec<Vector> {
    let (a, b) = (
        (y[0] * y[0] + y[1] * y[1]).sqrt(),
        (y[2] * y[2] + y[3] * y[3]).sqrt(),
    );
    vec![
        vector(&[-y[1] / a, y[0] / a, 0.0, 0.0]),
        vector(&[0.0, 0.0, -y[3] / b, y[2] / b]),
    ]
}

fn torus_projection(y: &Vector) -> Vector {
    let (a, b) = (
        (y[0] * y[0] + y[1] * y[1]).sqrt(),
        (y[2] * y[2] + y[3] * y[3]).sqrt(),
    );
    vector(&[y[0] / a, y[1] / a, y[2] / b, y[3] / b])
}

/// `du` and `dv` of the flat torus embedding applied to `w`.
fn torus_du_dv(y: &Vector, w: &Vector) -> (f64, f64) {
    let a = y[0] * y[0] + y[1] * y[1];
    let b = y[2] * y[2] + y[3] * y[3];
    (
        (y[0] * w[1] - y[1] * w[0]) / a,
        (y[2] * w[3] - y[3] * w[2]) / b,
    )
}

fn torus_samples() -> Vec<Vector> {
    grid(24, |a, b| {
        torus_point(TAU * (a + 0.5) / 24.0, TAU * (b + 0.25) / 24.0)
    })
}

/// Single-chart gerbe on the flat torus in `R^4` with curving
/// `F = (θ / 4π²) du∧dv`; the surface phase of the identity map is `θ`.
pub fn torus_global_b(theta: f64) -> Result<CatalogEntry> {
    if !theta.is_finite() {
        return Err(bad("theta", "must be finite"));
    }
    let cover = Arc::new(
        ChartCover::new(
            4,
            2,
            vec![chart_with_samples(
                "torus",
                |_: &Vector| 1.0,
                &torus_samples(),
            )],
        )
        .with_projection(torus_projection)
        .with_tangent_frame(torus_frame),
    );
    let k = theta / (TAU * TAU);
    let f = move |_: ChartId, y: &Vector, a: &Vector, b: &Vector| {
        let (ua, va) = torus_du_dv(y, a);
        let (ub, vb) = torus_du_dv(y, b);
        k * (ua * vb - ub * va)
    };
    let gerbe = GerbeData::new(
        cover.clone(),
        |_, _, _, _| unit_phase(0.0),
        |_, _, _, _| 0.0,
        f,
    );
    CatalogEntry {
        name: "torus_global_B".into(),
        parameters: [("theta".into(), theta)].into(),
        cover,
        bundle: None,
        gerbe: Some(Arc::new(gerbe)),
        curvature: None,
        curvature3: Some(Arc::new(
            |_: &Vector, _: &Vector, _: &Vector, _: &Vector| 0.0,
        )),
        kind: Kind::TorusB,
    }
    .verified()
}

/// Radius (as a fraction of the half-period) of the centre disk and the
/// width of the frame band in the flat-gerbe cover.
const FLAT_CORE: f64 = 0.3;
/// Angular overlap of adjacent sectors beyond their `2π/3` width.
const FLAT_SECTOR_OVERLAP: f64 = 0.35;

/// Offsets of a torus point from the centre `(π, π)` of the fundamental
/// domain, each in `(−π, π]`.
fn centre_offsets(y: &Vector) -> (f64, f64) {
    ((-y[1]).atan2(-y[0]), (-y[3]).atan2(-y[2]))
}

/// Flat gerbe on the torus with a constant cocycle: three sector charts
/// around the centre of the fundamental domain, each also containing the
/// centre disk and the band around the domain's edges. The triple overlap
/// is the disk (where `g_012 = exp(i ω)`) and the band (where `g_012 = 1`),
/// so the identity map has surface phase `±ω`.
pub fn torus_flat_gerbe(omega: f64) -> Result<CatalogEntry> {
    if !omega.is_finite() {
        return Err(bad("omega", "must be finite"));
    }
    let samples = torus_samples();
    let sector = |k: usize| {
        let centre = TAU * k as f64 / 3.0;
        move |y: &Vector| {
            let (du, dv) = centre_offsets(y);
            let rho = du.abs().max(dv.abs()) / PI;
            let dpsi = crate::phase::canonical_angle(dv.atan2(du) - centre);
            let az = rho * PI * (FRAC_PI_3 + FLAT_SECTOR_OVERLAP - dpsi.abs());
            az.max(PI * (FLAT_CORE - rho))
                .max(PI * (rho - 1.0 + FLAT_CORE))
        }
    };
    let cover = Arc::new(
        ChartCover::new(
            4,
            2,
            vec![
                chart_with_samples("sector0", sector(0), &samples),
                chart_with_samples("sector1", sector(1), &samples),
                chart_with_samples("sector2", sector(2), &samples),
            ],
        )
        .with_overlaps(vec![vec![0, 1], vec![1, 2], vec![0, 2], vec![0, 1, 2]])
        .with_projection(torus_projection)
        .with_tangent_frame(torus_frame),
    );
    let g3 = move |i: ChartId, j: ChartId, k: ChartId, y: &Vector| {
        let (du, dv) = centre_offsets(y);
        let inner = du.abs().max(dv.abs()) < 0.5 * PI;
        unit_phase(if inner {
            perm_sign(i, j, k) * omega
        } else {
            0.0
        })
    };
    let gerbe = GerbeData::new(cover.clone(), g3, |_, _, _, _| 0.0, |_, _, _, _| 0.0);
    CatalogEntry {
        name: "torus_flat_gerbe".into(),
        parameters: [("omega".into(), omega)].into(),
        cover,
        bundle: None,
        gerbe: Some(Arc::new(gerbe)),
        curvature: None,
        curvature3: Some(Arc::new(
            |_: &Vector, _: &Vector, _: &Vector, _: &Vector| 0.0,
        )),
        kind: Kind::TorusFlat,
    }
    .verified()
}

/// Strength of the gauge term between the two box charts.
const BOX_GAUGE: f64 = 0.25;

fn box_gauge(y: &Vector, v: &Vector) -> f64 {
    BOX_GAUGE * ((3.0 * y[1] + 0.7).sin() * v[2] + (2.0 * y[2]).cos() * v[0])
}

fn box_gauge_d(y: &Vector, a: &Vector, b: &Vector) -> f64 {
    let dydz = a[1] * b[2] - a[2] * b[1];
    let dzdx = a[2] * b[0] - a[0] * b[2];
    BOX_GAUGE * (3.0 * (3.0 * y[1] + 0.7).cos() * dydz - 2.0 * (2.0 * y[2]).sin() * dzdx)
}

/// Topologically trivial gerbe on the unit box with `F = c x dy∧dz` and
/// `G = c dx∧dy∧dz`. With two charts (`x < 0.7`, `x > 0.3`) the second
/// curving differs from the first by `dA_01` for a non-polynomial `A_01`.
pub fn box_gerbe(charts: usize, coupling: f64) -> Result<CatalogEntry> {
    if !coupling.is_finite() {
        return Err(bad("coupling", "must be finite"));
    }
    let samples: Vec<Vector> = (0..7)
        .flat_map(|a| (0..7).flat_map(move |b| (0..7).map(move |c| [a, b, c])))
        .map(|p| vector(&[p[0] as f64 / 6.0, p[1] as f64 / 6.0, p[2] as f64 / 6.0]))
        .collect();
    let chart_list = match charts {
        1 => vec![chart_with_samples("box", |_: &Vector| 1.0, &samples)],
        2 => vec![
            chart_with_samples("left", |y: &Vector| 0.7 - y[0], &samples),
            chart_with_samples("right", |y: &Vector| y[0] - 0.3, &samples),
        ],
        _ => return Err(bad("charts", "must be 1 or 2")),
    };
    let mut cover = ChartCover::new(3, 3, chart_list);
    if charts == 2 {
        cover = cover.with_overlaps(vec![vec![0, 1]]);
    }
    let cover = Arc::new(cover);
    let c = coupling;
    let a2 = |j: ChartId, k: ChartId, y: &Vector, v: &Vector| antisym(j, k) * box_gauge(y, v);
    let f = move |k: ChartId, y: &Vector, a: &Vector, b: &Vector| {
        let base = c * y[0] * (a[1] * b[2] - a[2] * b[1]);
        if k == 1 {
            base + box_gauge_d(y, a, b)
        } else {
            base
        }
    };
    let gerbe = GerbeData::new(cover.clone(), |_, _, _, _| unit_phase(0.0), a2, f);
    let g: ThreeForm =
        Arc::new(move |_: &Vector, u: &Vector, v: &Vector, w: &Vector| c * u.dot(&cross(v, w)));
    CatalogEntry {
        name: "box_gerbe".into(),
        parameters: [
            ("charts".into(), charts as f64),
            ("coupling".into(), coupling),
        ]
        .into(),
        cover,
        bundle: None,
        gerbe: Some(Arc::new(gerbe)),
        curvature: None,
        curvature3: Some(g),
        kind: Kind::Box,
    }
    .verified()
}
