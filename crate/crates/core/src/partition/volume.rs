//! Labelled brick partitions of a box, and their induced boundary partitions.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::surface::{rect_sides, FaceSpec, LabeledSurfacePartition, SurfaceDomain};
use crate::cech::ChartCover;
use crate::error::{Error, Result};
use crate::numerics::{Cell, GaussLegendre};
use crate::types::{vector, ChartId, Vector};

pub type VolumeMap = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

const LABEL_GRID: usize = 3;
const AUDIT_ORDER: usize = 5;
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Brick {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub label: ChartId,
}

impl Brick {
    pub fn cell(&self) -> Cell<3> {
        Cell::new(self.lo, self.hi)
    }

    fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|k| self.lo[k] - EPS <= p[k] && p[k] <= self.hi[k] + EPS)
    }

    fn corners(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..8).map(move |m| {
            std::array::from_fn(|k| {
                if m >> k & 1 == 1 {
                    self.hi[k]
                } else {
                    self.lo[k]
                }
            })
        })
    }

    fn samples(&self, dense: bool) -> Vec<[f64; 3]> {
        let mut axes: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                let n = if dense {
                    2 * AUDIT_ORDER
                } else {
                    LABEL_GRID - 1
                };
                (0..=n)
                    .map(|i| self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / n as f64)
                    .collect()
            })
            .collect();
        if dense {
            let rule = GaussLegendre::new(AUDIT_ORDER);
            for (k, axis) in axes.iter_mut().enumerate() {
                axis.extend(rule.mapped(self.lo[k], self.hi[k]).map(|p| p.0));
            }
        }
        let mut out = Vec::new();
        for &x in &axes[0] {
            for &y in &axes[1] {
                for &z in &axes[2] {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }
}

/// Labelled partition of the box `[lo, hi]` into bricks.
///
/// Bricks are laid in layers along `z`; each layer is a brick wall in the
/// `(x, y)` plane and odd layers are shifted by a quarter brick in `x` and
/// half a brick in `y`, so corners of adjacent layers never coincide and at
/// most four bricks meet at any internal vertex.
#[derive(Debug, Clone, Serialize)]
pub struct LabeledVolumePartition {
    lo: [f64; 3],
    hi: [f64; 3],
    bricks: Vec<Brick>,
}

fn breaks(lo: f64, hi: f64, width: f64, offset: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let mut x = lo + offset;
    while x < hi - 1e-9 * width {
        if x > lo + 1e-9 * width {
            out.push(x);
        }
        x += width;
    }
    out.push(hi);
    out
}

impl LabeledVolumePartition {
    /// Unlabelled (all label 0) layered brick geometry at resolution `n` per axis.
    pub fn bricks_geometry(lo: [f64; 3], hi: [f64; 3], n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadParameter {
                name: "resolution".into(),
                reason: format!("need ≥ 2, got {n}"),
            });
        }
        if (0..3).any(|k| !(lo[k] < hi[k])) {
            return Err(Error::BadParameter {
                name: "box".into(),
                reason: "empty box".into(),
            });
        }
        let size: [f64; 3] = std::array::from_fn(|k| (hi[k] - lo[k]) / n as f64);
        let mut bricks = Vec::new();
        for layer in 0..n {
            let (z0, z1) = (
                lo[2] + layer as f64 * size[2],
                lo[2] + (layer + 1) as f64 * size[2],
            );
            let odd = layer % 2 == 1;
            let ys = breaks(lo[1], hi[1], size[1], if odd { 0.5 * size[1] } else { 0.0 });
            for (row, y) in ys.windows(2).enumerate() {
                let shift = if odd { 0.25 * size[0] } else { 0.0 }
                    + if row % 2 == 1 { 0.5 * size[0] } else { 0.0 };
                let xs = breaks(lo[0], hi[0], size[0], shift);
                for x in xs.windows(2) {
                    bricks.push(Brick {
                        lo: [x[0], y[0], z0],
                        hi: [x[1], y[1], z1],
                        label: 0,
                    });
                }
            }
        }
        Ok(Self { lo, hi, bricks })
    }

    pub fn from_bricks(lo: [f64; 3], hi: [f64; 3], bricks: Vec<Brick>) -> Result<Self> {
        let total = (0..3).map(|k| hi[k] - lo[k]).product::<f64>();
        let sum: f64 = bricks.iter().map(|b| b.cell().volume()).sum();
        if bricks.iter().any(|b| {
            (0..3).any(|k| !(b.lo[k] < b.hi[k]) || b.lo[k] < lo[k] - EPS || b.hi[k] > hi[k] + EPS)
        }) || (sum - total).abs() > 1e-9 * total
        {
            return Err(Error::InvalidPartition("bricks do not tile the box".into()));
        }
        Ok(Self { lo, hi, bricks })
    }

    pub fn lo(&self) -> [f64; 3] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 3] {
        self.hi
    }

    pub fn bricks(&self) -> &[Brick] {
        &self.bricks
    }

    /// Largest number of bricks sharing an internal corner.
    pub fn max_regions_at_vertex(&self) -> usize {
        let interior =
            |p: &[f64; 3]| (0..3).all(|k| p[k] > self.lo[k] + EPS && p[k] < self.hi[k] - EPS);
        self.bricks
            .par_iter()
            .flat_map_iter(|b| b.corners().collect::<Vec<_>>())
            .filter(interior)
            .map(|p| self.bricks.iter().filter(|b| b.contains(&p)).count())
            .max()
            .unwrap_or(0)
    }

    /// Smallest margin of audit samples of each brick in its labelled chart.
    pub fn min_margin(&self, map: &VolumeMap, cover: &ChartCover) -> f64 {
        self.bricks
            .par_iter()
            .map(|b| brick_margin(b, b.label, map, cover, true))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, map: &VolumeMap, cover: &ChartCover) -> Result<()> {
        for (k, b) in self.bricks.iter().enumerate() {
            cover.chart(b.label)?;
            let m = brick_margin(b, b.label, map, cover, true);
            if m <= 0.0 {
                return Err(Error::InvalidPartition(format!(
                    "brick {k} leaves chart {} (margin {m})",
                    b.label
                )));
            }
        }
        Ok(())
    }

    /// Induced partition of the box boundary, oriented by the outward normal.
    ///
    /// Each boundary face of a brick becomes a face whose chart sends its
    /// rectangle to the box surface with `∂_s × ∂_t` pointing outwards.
    pub fn boundary(&self) -> Result<LabeledSurfacePartition> {
        let (lo, hi) = (self.lo, self.hi);
        let mut specs = Vec::new();
        for b in &self.bricks {
            for axis in 0..3 {
                for upper in [false, true] {
                    let at = if upper { hi[axis] } else { lo[axis] };
                    let face_at = if upper { b.hi[axis] } else { b.lo[axis] };
                    if (face_at - at).abs() > EPS {
                        continue;
                    }
                    // (s, t) axes chosen so that e_s × e_t is the outward normal
                    let (s_ax, t_ax) = match (axis, upper) {
                        (0, true) => (1, 2),
                        (0, false) => (2, 1),
                        (1, true) => (2, 0),
                        (1, false) => (0, 2),
                        (2, true) => (0, 1),
                        _ => (1, 0),
                    };
                    let rect = Cell::new([b.lo[s_ax], b.lo[t_ax]], [b.hi[s_ax], b.hi[t_ax]]);
                    let chart = Arc::new(move |s: f64, t: f64| {
                        let mut p = [0.0; 3];
                        p[axis] = at;
                        p[s_ax] = s;
                        p[t_ax] = t;
                        vector(&p)
                    });
                    specs.push(FaceSpec {
                        chart,
                        sides: rect_sides(&rect),
                        rect,
                        label: b.label,
                        planar: false,
                    });
                }
            }
        }
        LabeledSurfacePartition::from_faces(SurfaceDomain::box_boundary(lo, hi), specs)
    }
}

fn brick_margin(
    b: &Brick,
    label: ChartId,
    map: &VolumeMap,
    cover: &ChartCover,
    dense: bool,
) -> f64 {
    b.samples(dense)
        .into_iter()
        .map(|p| cover.margin(label, &map(&vector(&p))))
        .fold(f64::INFINITY, f64::min)
}

/// Layered brick partition of `[lo, hi]` labelled by largest minimum margin.
pub fn build_volume_partition(
    map: &VolumeMap,
    lo: [f64; 3],
    hi: [f64; 3],
    cover: &ChartCover,
    resolution: usize,
) -> Result<LabeledVolumePartition> {
    let mut part = LabeledVolumePartition::bricks_geometry(lo, hi, resolution)?;
    let labels: Vec<Result<ChartId>> = part
        .bricks
        .par_iter()
        .map(|b| {
            let mut best: Option<(ChartId, f64)> = None;
            for i in 0..cover.len() {
                let m = brick_margin(b, i, map, cover, false);
                if best.is_none_or(|(_, bm)| m > bm) {
                    best = Some((i, m));
                }
            }
            match best {
                Some((i, m)) if m > 0.0 => Ok(i),
                _ => Err(Error::ResolutionTooCoarse {
                    reason: format!("no chart contains brick at {:?}", b.lo),
                }),
            }
        })
        .collect();
    for (b, l) in part.bricks.iter_mut().zip(labels) {
        b.label = l?;
    }
    part.validate(map, cover)
        .map_err(|e| Error::ResolutionTooCoarse {
            reason: e.to_string(),
        })?;
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::Chart;

    #[test]
    fn bricks_tile_and_meet_at_most_four() {
        for n in [2, 3, 4, 6] {
            let p = LabeledVolumePartition::bricks_geometry([0.0; 3], [1.0; 3], n).unwrap();
            let vol: f64 = p.bricks().iter().map(|b| b.cell().volume()).sum();
            assert!((vol - 1.0).abs() < 1e-12);
            assert!(p.max_regions_at_vertex() <= 4, "n = {n}");
        }
    }

    #[test]
    fn boundary_is_a_closed_sphere() {
        let p = LabeledVolumePartition::bricks_geometry([0.0; 3], [1.0, 2.0, 1.5], 4).unwrap();
        let s = p.boundary().unwrap();
        assert!(s.boundary_loops().is_empty());
        let chi = s.vertices().len() as i64 - s.edge_count() as i64 + s.faces().len() as i64;
        assert_eq!(chi, 2);
    }

    #[test]
    fn labels_follow_the_charts() {
        let cover = ChartCover::new(
            3,
            3,
            vec![
                Chart::new("left", |y: &Vector| 0.7 - y[0], vec![]),
                Chart::new("right", |y: &Vector| y[0] - 0.3, vec![]),
            ],
        );
        let id: VolumeMap = Arc::new(|p: &Vector| p.clone());
        let p = build_volume_partition(&id, [0.0; 3], [1.0; 3], &cover, 4).unwrap();
        assert!(p.bricks().iter().any(|b| b.label == 0) && p.bricks().iter().any(|b| b.label == 1));
        assert!(p.min_margin(&id, &cover) > 0.0);
        assert!(matches!(
            build_volume_partition(&id, [0.0; 3], [1.0; 3], &cover, 2),
            Err(Error::ResolutionTooCoarse { .. })
        ));
    }
}
