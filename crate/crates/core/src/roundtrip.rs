//! Data → functor → data and functor → data → functor round trips.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::axioms::trial_rng;
use crate::bundle::{
    reconstruct_a, reconstruct_g, reconstructed_bundle, BundleFunctor, BundleTransport,
};
use crate::catalog::CatalogEntry;
use crate::error::{Error, Result};
use crate::gerbe::{
    reconstruct_a2, reconstruct_f, reconstruct_g3, reconstructed_gerbe, GerbeFunctor,
    GerbeTransport,
};
use crate::numerics::QuadConfig;
use crate::partition::{build_path_partition, build_surface_partition, SurfaceObject};
use crate::types::{ChartId, Vector};

/// Gauss–Legendre order of the functor queried inside rebuilt data. Its
/// objects are shrinking squares and paths of length `O(h)`.
pub const PROBE_ORDER: usize = 4;

/// Points per axis on the faces of surfaces transported through rebuilt data.
pub const REBUILT_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTripConfig {
    /// Random overlap points per local quantity.
    pub samples: usize,
    /// Random paths or surfaces compared through the rebuilt functor.
    pub objects: usize,
    /// Difference step for connections and overlap forms.
    pub h: f64,
    /// Difference step for curvings.
    pub h_f: f64,
    pub seed: u64,
    pub quad: QuadConfig,
    /// Path sample count, or surface resolution per axis, of object partitions.
    pub resolution: usize,
}

impl Default for RoundTripConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            objects: 5,
            h: 1e-4,
            h_f: 1e-3,
            seed: 0,
            quad: QuadConfig::default(),
            resolution: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub quantity: String,
    pub max_residual: f64,
    pub count: usize,
    pub worst_point: Option<Vec<f64>>,
}

impl Residual {
    fn new(quantity: &str) -> Self {
        Self {
            quantity: quantity.into(),
            max_residual: 0.0,
            count: 0,
            worst_point: None,
        }
    }

    fn absorb(&mut self, r: f64, y: Option<&Vector>) {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        self.count += 1;
        if r > self.max_residual || self.worst_point.is_none() {
            self.max_residual = self.max_residual.max(r);
            self.worst_point = y.map(|y| y.iter().copied().collect());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub geometry: String,
    pub residuals: Vec<Residual>,
}

impl RoundTripReport {
    pub fn residual(&self, quantity: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.quantity == quantity)
            .map(|r| r.max_residual)
    }
}

/// Declared overlaps of exactly `size` charts, falling back to repeated
/// indices of smaller ones.
fn index_sets(entry: &CatalogEntry, size: usize) -> Vec<Vec<ChartId>> {
    let cover = &entry.cover;
    for s in (1..=size).rev() {
        let sets: Vec<Vec<ChartId>> = cover
            .declared_overlaps()
            .iter()
            .filter(|o| o.len() == s)
            .cloned()
            .collect();
        let sets = if s == 1 && sets.is_empty() {
            (0..cover.len()).map(|i| vec![i]).collect()
        } else {
            sets
        };
        if !sets.is_empty() {
            return sets
                .into_iter()
                .map(|o| (0..size).map(|k| o[k % o.len()]).collect())
                .collect();
        }
    }
    Vec::new()
}

fn sample<R: Rng + ?Sized>(
    entry: &CatalogEntry,
    rng: &mut R,
    size: usize,
) -> Option<(Vec<ChartId>, Vector)> {
    let sets = index_sets(entry, size);
    if sets.is_empty() {
        return None;
    }
    let mut ids = sets[rng.random_range(0..sets.len())].clone();
    if rng.random_bool(0.5) {
        ids.reverse();
    }
    let y = entry.random_point_in(rng, &ids, 0.02)?;
    Some((ids, y))
}

/// Residuals of `g`, `A` read back from the bundle transport of `entry`, and
/// of path transports through the functor rebuilt from them.
pub fn bundle_round_trip(entry: &CatalogEntry, cfg: &RoundTripConfig) -> Result<RoundTripReport> {
    let data = entry
        .bundle
        .clone()
        .ok_or_else(|| missing(entry, "bundle"))?;
    let z = Arc::new(BundleTransport::new(data.clone(), cfg.quad));
    let (mut g, mut a, mut tr) = (
        Residual::new("g"),
        Residual::new("A"),
        Residual::new("transport"),
    );
    for k in 0..cfg.samples {
        let rng = &mut trial_rng(cfg.seed, k);
        let Some((ids, y)) = sample(entry, rng, 2) else {
            continue;
        };
        let (i, j) = (ids[0], ids[1]);
        g.absorb(
            reconstruct_g(z.as_ref(), &y, i, j)?.distance(data.transition(i, j, &y)?),
            Some(&y),
        );
        let v = entry.random_tangent(&y, rng);
        let step = cfg.h.min(0.5 * entry.cover.margin(j, &y));
        a.absorb(
            (reconstruct_a(z.as_ref(), j, &y, &v, step)? - data.connection(j, &y, &v)).abs(),
            Some(&y),
        );
    }
    let probe: Arc<dyn BundleFunctor> = Arc::new(BundleTransport::new(
        data.clone(),
        QuadConfig::plain(PROBE_ORDER),
    ));
    let rebuilt = BundleTransport::new(
        Arc::new(reconstructed_bundle(probe, cfg.h)),
        QuadConfig::plain(cfg.quad.order_1d),
    );
    for k in 0..cfg.objects {
        let rng = &mut trial_rng(cfg.seed ^ 0x5851_F42D_4C95_7F2D, k);
        let p = entry.random_path(rng);
        let t = build_path_partition(&p, &entry.cover, 4 * cfg.resolution)?;
        tr.absorb(rebuilt.z_path(&p, &t)?.distance(z.z_path(&p, &t)?), None);
    }
    Ok(RoundTripReport {
        geometry: entry.name.clone(),
        residuals: vec![g, a, tr],
    })
}

/// Residuals of `g3`, `A2`, `F` read back from the gerbe transport of
/// `entry`, and of surface transports through the functor rebuilt from them.
pub fn gerbe_round_trip(entry: &CatalogEntry, cfg: &RoundTripConfig) -> Result<RoundTripReport> {
    let data = entry.gerbe.clone().ok_or_else(|| missing(entry, "gerbe"))?;
    let z = Arc::new(GerbeTransport::new(data.clone(), cfg.quad));
    let mut res = [
        Residual::new("g3"),
        Residual::new("A2"),
        Residual::new("F"),
        Residual::new("transport"),
    ];
    for k in 0..cfg.samples {
        let rng = &mut trial_rng(cfg.seed, k);
        if let Some((ids, y)) = sample(entry, rng, 3) {
            let (i, j, l) = (ids[0], ids[1], ids[2]);
            res[0].absorb(
                reconstruct_g3(z.as_ref(), &y, i, j, l)?.distance(data.transition(i, j, l, &y)?),
                Some(&y),
            );
        }
        if let Some((ids, y)) = sample(entry, rng, 2).filter(|(ids, _)| ids[0] != ids[1]) {
            let v = entry.random_tangent(&y, rng);
            let step = cfg.h.min(0.5 * entry.cover.overlap_margin(&ids, &y));
            let got = reconstruct_a2(z.as_ref(), (ids[0], ids[1]), &y, &v, step)?;
            res[1].absorb(
                (got - data.overlap_form(ids[0], ids[1], &y, &v)).abs(),
                Some(&y),
            );
        }
        if let Some((ids, y)) = sample(entry, rng, 1) {
            let (v, w) = (entry.random_tangent(&y, rng), entry.random_tangent(&y, rng));
            let step = cfg.h_f.min(0.25 * entry.cover.margin(ids[0], &y));
            let got = reconstruct_f(z.as_ref(), ids[0], &y, (&v, &w), step)?;
            res[2].absorb((got - data.curving(ids[0], &y, &v, &w)).abs(), Some(&y));
        }
    }
    let probe: Arc<dyn GerbeFunctor> = Arc::new(GerbeTransport::new(
        data.clone(),
        QuadConfig::plain(PROBE_ORDER),
    ));
    let rebuilt = GerbeTransport::new(
        Arc::new(reconstructed_gerbe(probe, cfg.h, cfg.h_f)),
        QuadConfig::plain(REBUILT_ORDER),
    );
    for k in 0..cfg.objects {
        let rng = &mut trial_rng(cfg.seed ^ 0x5851_F42D_4C95_7F2D, k);
        let Some((map, domain)) = entry.random_closed_surface(rng) else {
            break;
        };
        let n = 2 * cfg.resolution.max(2);
        let t = build_surface_partition(&map, domain, &entry.cover, (n, n))?;
        let so = SurfaceObject::new(map, t);
        res[3].absorb(rebuilt.z_surface(&so)?.distance(z.z_surface(&so)?), None);
    }
    Ok(RoundTripReport {
        geometry: entry.name.clone(),
        residuals: res.to_vec(),
    })
}

fn missing(entry: &CatalogEntry, what: &str) -> Error {
    Error::BadParameter {
        name: "geometry".into(),
        reason: format!("{} carries no {what} data", entry.name),
    }
}
