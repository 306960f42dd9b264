//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use holonomy_core::bundle::BundleTransport;
use holonomy_core::catalog::{
    box_gerbe, sphere_monopole, torus_flat_gerbe, CatalogEntry, Params, StandardMap,
};
use holonomy_core::gerbe::GerbeTransport;
use holonomy_core::numerics::QuadConfig;
use holonomy_core::partition::{
    build_loop_partition, build_surface_partition, LabeledLoopPartition, SurfaceObject,
};
use holonomy_core::Loop;

pub struct LoopFixture {
    pub z: BundleTransport,
    pub ell: Loop,
    pub t: LabeledLoopPartition,
}

/// Latitude loop at colatitude `theta0` on the monopole of charge `n`.
pub fn monopole_latitude(n: i64, theta0: f64, samples: usize) -> LoopFixture {
    let e = sphere_monopole(n).expect("catalog entry");
    let params: Params = [("theta0".to_string(), theta0)].into();
    let StandardMap::Loop(ell) = e.map("latitude", &params).expect("map") else {
        unreachable!()
    };
    let t = build_loop_partition(&ell, &e.cover, samples).expect("partition");
    LoopFixture {
        z: BundleTransport::new(e.bundle.clone().expect("bundle"), QuadConfig::default()),
        ell,
        t,
    }
}

pub struct SurfaceFixture {
    pub entry: CatalogEntry,
    pub z: GerbeTransport,
    pub so: SurfaceObject,
}

/// Identity torus in the flat gerbe at resolution `n × n`.
pub fn flat_torus(n: usize) -> SurfaceFixture {
    let entry = torus_flat_gerbe(1.0).expect("catalog entry");
    let StandardMap::Surface { map, domain } = entry.map("torus", &Params::new()).expect("map")
    else {
        unreachable!()
    };
    let t = build_surface_partition(&map, domain, &entry.cover, (n, n)).expect("partition");
    let z = GerbeTransport::new(entry.gerbe.clone().expect("gerbe"), QuadConfig::default());
    SurfaceFixture {
        so: SurfaceObject::new(map, t),
        entry,
        z,
    }
}

/// The two-chart box gerbe with its curvature data.
pub fn two_chart_box() -> (CatalogEntry, Arc<holonomy_core::cech::GerbeData>) {
    let e = box_gerbe(2, 1.0).expect("catalog entry");
    let g = e.gerbe.clone().expect("gerbe");
    (e, g)
}
