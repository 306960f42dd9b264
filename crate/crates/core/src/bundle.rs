//! Parallel transport of a U(1)-bundle with connection as a state sum over
//! labelled partitions of paths, and the reverse construction of transition
//! functions and connection forms from a transport functor.

use std::sync::Arc;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::cech::{bundle_curvature, BundleData, ChartCover, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::numerics::{integrate_pullback_1form, integrate_pullback_2form, Integral, QuadConfig};
use crate::partition::{LabeledLoopPartition, LabeledPathPartition, SurfaceObject};
use crate::phase::Phase;
use crate::types::{ChartId, Loop, Orientation, Path, Vector};

/// Largest gap allowed between the endpoints of glued paths.
pub const GLUE_TOLERANCE: f64 = 1e-9;

/// Analytic 2-form `(point, u, v) ↦ F(u, v)`.
pub type TwoForm = Arc<dyn Fn(&Vector, &Vector, &Vector) -> f64 + Send + Sync>;

/// The pair of assignments `(Z', Z)` of a 1-dimensional transport theory.
pub trait BundleFunctor: Send + Sync {
    fn cover(&self) -> &ChartCover;

    /// `Z'(y^±, i, j)`.
    fn z_point(
        &self,
        y: &Vector,
        orientation: Orientation,
        i: ChartId,
        j: ChartId,
    ) -> Result<Phase>;

    /// `Z(p, T)`.
    fn z_path(&self, p: &Path, t: &LabeledPathPartition) -> Result<Phase>;

    /// Holonomy of a loop: the path cut open at `a_0` closed up by the
    /// transition from the last label back to the first.
    fn z_loop(&self, ell: &Loop, t: &LabeledLoopPartition) -> Result<Phase> {
        let a0 = t.start();
        let open = self.z_path(&ell.as_path(a0), &t.as_path_partition())?;
        let labels = t.labels();
        let close = self.z_point(
            &ell.eval(a0),
            Orientation::Positive,
            labels[labels.len() - 1],
            labels[0],
        )?;
        Ok(open + close)
    }
}

/// State sum of a path split into its two kinds of terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathEvaluation {
    pub phase: Phase,
    /// `Σ_α ∫_{e_α} p^*(A_{i_α})`.
    pub integrals: f64,
    /// `Σ arg g_{i_α i_{α+1}}` over interior breakpoints.
    pub transitions: f64,
    pub quadrature_error: f64,
}

/// Transport functor induced by bundle data.
#[derive(Debug, Clone)]
pub struct BundleTransport {
    data: Arc<BundleData>,
    quad: QuadConfig,
}

impl BundleTransport {
    pub fn new(data: Arc<BundleData>, quad: QuadConfig) -> Self {
        Self { data, quad }
    }

    pub fn data(&self) -> &Arc<BundleData> {
        &self.data
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn evaluate_path(&self, p: &Path, t: &LabeledPathPartition) -> Result<PathEvaluation> {
        t.validate(p, self.data.cover())?;
        let segments: Vec<(f64, f64, ChartId)> = t.segments().collect();
        let integrals: Vec<Result<Integral>> = segments
            .par_iter()
            .map(|&(x0, x1, l)| {
                integrate_pullback_1form(
                    |y, v| self.data.connection(l, y, v),
                    |s| p.eval(s),
                    x0,
                    x1,
                    &self.quad,
                )
            })
            .collect();
        let integral: Integral = integrals
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        let mut transitions = 0.0;
        for (k, w) in t.labels().windows(2).enumerate() {
            transitions += self
                .data
                .transition(w[0], w[1], &p.eval(t.breakpoints()[k + 1]))?
                .angle();
        }
        Ok(PathEvaluation {
            phase: Phase::from_angle(integral.value + transitions),
            integrals: integral.value,
            transitions,
            quadrature_error: integral.error,
        })
    }
}

impl BundleFunctor for BundleTransport {
    fn cover(&self) -> &ChartCover {
        self.data.cover()
    }

    fn z_point(
        &self,
        y: &Vector,
        orientation: Orientation,
        i: ChartId,
        j: ChartId,
    ) -> Result<Phase> {
        let margin = self.data.cover().overlap_margin(&[i, j], y);
        if margin <= 0.0 {
            return Err(Error::PointOutsideOverlap {
                charts: vec![i, j],
                margin,
            });
        }
        let g = self.data.transition(i, j, y)?;
        Ok(match orientation {
            Orientation::Positive => g,
            Orientation::Negative => -g,
        })
    }

    fn z_path(&self, p: &Path, t: &LabeledPathPartition) -> Result<Phase> {
        Ok(self.evaluate_path(p, t)?.phase)
    }
}

/// `Z(p, T) Z'(p(b)^+, i_N, i'_1) Z(p', T')`, the value the gluing axiom
/// assigns to `(p ∘ p', T ∘ T')`.
pub fn glue_z_path<Z: BundleFunctor + ?Sized>(
    z: &Z,
    (p, t): (&Path, &LabeledPathPartition),
    (q, s): (&Path, &LabeledPathPartition),
) -> Result<Phase> {
    if (p.end() - q.start()).abs() > GLUE_TOLERANCE {
        return Err(Error::InvalidPartition(format!(
            "domains [{}, {}] and [{}, {}] are not adjacent",
            p.start(),
            p.end(),
            q.start(),
            q.end()
        )));
    }
    let y = p.eval(p.end());
    let distance = (&y - q.eval(q.start())).norm();
    if distance > GLUE_TOLERANCE {
        return Err(Error::EndpointMismatch { distance });
    }
    Ok(z.z_path(p, t)?
        + z.z_point(&y, Orientation::Positive, t.last_label(), s.first_label())?
        + z.z_path(q, s)?)
}

/// Both sides of the 1-dimensional Stokes identity for a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StokesReport {
    /// State sum around the boundary circles with their induced partitions.
    pub boundary_phase: Phase,
    /// `Σ_faces ∫ X^*(F)`.
    pub curvature_phase: Phase,
    /// Distance on the circle between the two.
    pub defect: f64,
    pub boundary_circles: usize,
    pub quadrature_error: f64,
}

/// State sum of a bundle around every boundary circle of a surface object,
/// each circle oriented with the surface on its left.
pub fn boundary_transport(
    data: &BundleData,
    so: &SurfaceObject,
    quad: &QuadConfig,
) -> Result<(Phase, Integral)> {
    let part = so.partition();
    let mut total = 0.0;
    let mut error = 0.0;
    for chain in part.boundary_loops() {
        let n = chain.len();
        for (k, &h) in chain.iter().enumerate() {
            let e = &part.halfedges()[h];
            let label = part.label(e.face);
            let patch = so.patch(e.face);
            let (from, to) = (e.from, e.to);
            let curve = |s: f64| {
                patch(
                    from[0] + s * (to[0] - from[0]),
                    from[1] + s * (to[1] - from[1]),
                )
            };
            let i = integrate_pullback_1form(
                |y, v| data.connection(label, y, v),
                curve,
                0.0,
                1.0,
                quad,
            )?;
            total += i.value;
            error += i.error;
            let next = &part.halfedges()[chain[(k + 1) % n]];
            let next_label = part.label(next.face);
            if next_label != label {
                total += data
                    .transition(label, next_label, &so.point(e.face, to))?
                    .angle();
            }
        }
    }
    let sign = part.orientation().sign();
    Ok((
        Phase::from_angle(sign * total),
        Integral {
            value: sign * total,
            error,
        },
    ))
}

/// Integral of the curvature over a surface object, from `curvature` when
/// given and otherwise by differentiating the connection of each face label.
pub fn curvature_integral(
    data: &BundleData,
    so: &SurfaceObject,
    curvature: Option<&TwoForm>,
    quad: &QuadConfig,
) -> Result<Integral> {
    let part = so.partition();
    let faces: Vec<Result<Integral>> = (0..part.faces().len())
        .into_par_iter()
        .map(|f| {
            let label = part.label(f);
            let form = |y: &Vector, a: &Vector, b: &Vector| -> f64 {
                match curvature {
                    Some(c) => c(y, a, b),
                    None => {
                        let (na, nb) = (a.norm(), b.norm());
                        if na == 0.0 || nb == 0.0 {
                            return 0.0;
                        }
                        na * nb
                            * bundle_curvature(
                                data,
                                label,
                                y,
                                (&(a / na), &(b / nb)),
                                DEFAULT_FD_STEP,
                            )
                            .unwrap_or(f64::NAN)
                    }
                }
            };
            integrate_pullback_2form(form, so.patch(f), part.faces()[f].spec.rect, quad)
        })
        .collect();
    let sum: Integral = faces
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let sign = part.orientation().sign();
    if !sum.value.is_finite() {
        return Err(Error::InvalidPartition(
            "curvature could not be differenced inside a face chart".into(),
        ));
    }
    Ok(Integral {
        value: sign * sum.value,
        error: sum.error,
    })
}

/// Compares the boundary state sum of a surface with its curvature integral.
pub fn stokes_check_1d(
    data: &BundleData,
    so: &SurfaceObject,
    curvature: Option<&TwoForm>,
    quad: &QuadConfig,
) -> Result<StokesReport> {
    so.validate(data.cover())?;
    let (boundary, berr) = boundary_transport(data, so, quad)?;
    let flux = curvature_integral(data, so, curvature, quad)?;
    let curvature_phase = Phase::from_angle(flux.value);
    Ok(StokesReport {
        boundary_phase: boundary,
        curvature_phase,
        defect: boundary.distance(curvature_phase),
        boundary_circles: so.partition().boundary_loops().len(),
        quadrature_error: berr.error + flux.error,
    })
}

/// `g_ij(y)` recovered as `Z` of the constant path on `[0, 1]` labelled `i`
/// on the first half and `j` on the second.
pub fn reconstruct_g<Z: BundleFunctor + ?Sized>(
    z: &Z,
    y: &Vector,
    i: ChartId,
    j: ChartId,
) -> Result<Phase> {
    let margin = z.cover().overlap_margin(&[i, j], y);
    if margin <= 0.0 {
        return Err(Error::PointOutsideOverlap {
            charts: vec![i, j],
            margin,
        });
    }
    let t = LabeledPathPartition::split(0.0, 1.0, 0.5, i, j)?;
    z.z_path(&Path::constant(0.0, 1.0, y.clone()), &t)
}

/// Short path `s ↦ P(y + s·t·v)` on `[0, 1]`.
fn short_path(cover: &ChartCover, y: &Vector, v: &Vector, t: f64) -> Path {
    let proj = cover.clone();
    let (y, v) = (y.clone(), v.clone());
    Path::new(0.0, 1.0, move |s| proj.project(&(&y + &v * (s * t))))
}

/// `A_j(y)(v)` recovered as the derivative at `t = 0` of `Z` along the short
/// paths `q_t`, by a central difference with step `h`.
pub fn reconstruct_a<Z: BundleFunctor + ?Sized>(
    z: &Z,
    j: ChartId,
    y: &Vector,
    v: &Vector,
    h: f64,
) -> Result<f64> {
    let cover = z.cover();
    let margin = cover.margin(j, y);
    if margin <= 0.0 {
        return Err(Error::PointOutsideChart { chart: j, margin });
    }
    let reach = h * v.norm();
    if margin <= reach {
        return Err(Error::StepTooLarge {
            step: reach,
            margin,
        });
    }
    let t = LabeledPathPartition::single(0.0, 1.0, j);
    let plus = z.z_path(&short_path(cover, y, v, h), &t)?.angle();
    let minus = z.z_path(&short_path(cover, y, v, -h), &t)?.angle();
    Ok((plus - minus) / (2.0 * h))
}

/// Bundle data read off a transport functor.
///
/// The connection uses linearity in `v` and shrinks the difference step near
/// chart boundaries; failures evaluate to NaN so they surface downstream.
pub fn reconstructed_bundle(z: Arc<dyn BundleFunctor>, h: f64) -> BundleData {
    let cover = Arc::new(z.cover().clone());
    let zg = z.clone();
    let g = move |i: ChartId, j: ChartId, y: &Vector| -> Complex<f64> {
        match reconstruct_g(zg.as_ref(), y, i, j) {
            Ok(p) => Complex::from_polar(1.0, p.angle()),
            Err(_) => Complex::new(f64::NAN, f64::NAN),
        }
    };
    let a = move |j: ChartId, y: &Vector, v: &Vector| -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        let step = h.min(0.5 * z.cover().margin(j, y));
        n * reconstruct_a(z.as_ref(), j, y, &(v / n), step).unwrap_or(f64::NAN)
    };
    BundleData::new(cover, g, a)
}

/// A deliberately broken functor: the first breakpoint factor of every path
/// is dropped.
pub struct DroppedTransition<Z> {
    pub inner: Z,
}

impl<Z: BundleFunctor> BundleFunctor for DroppedTransition<Z> {
    fn cover(&self) -> &ChartCover {
        self.inner.cover()
    }

    fn z_point(
        &self,
        y: &Vector,
        orientation: Orientation,
        i: ChartId,
        j: ChartId,
    ) -> Result<Phase> {
        self.inner.z_point(y, orientation, i, j)
    }

    fn z_path(&self, p: &Path, t: &LabeledPathPartition) -> Result<Phase> {
        let full = self.inner.z_path(p, t)?;
        if t.len() < 2 {
            return Ok(full);
        }
        let (l0, l1) = (t.labels()[0], t.labels()[1]);
        Ok(full
            - self
                .inner
                .z_point(&p.eval(t.breakpoints()[1]), Orientation::Positive, l0, l1)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::Chart;
    use crate::partition::build_path_partition;
    use crate::types::vector;
    use std::f64::consts::PI;

    /// Unit circle in the plane, lower and upper arc charts, flat with
    /// constant transitions on the two overlap arcs.
    fn flat_circle(alpha_r: f64, alpha_l: f64) -> BundleTransport {
        let samples: Vec<Vector> = (0..64)
            .map(|k| {
                let t = k as f64 * PI / 32.0;
                vector(&[t.cos(), t.sin()])
            })
            .collect();
        let cover = ChartCover::new(
            2,
            1,
            vec![
                Chart::new("lower", |y: &Vector| 0.3 - y[1], samples.clone()),
                Chart::new("upper", |y: &Vector| y[1] + 0.3, samples),
            ],
        )
        .with_overlaps(vec![vec![0, 1]])
        .with_projection(|y: &Vector| y / y.norm());
        let g = move |i: ChartId, j: ChartId, y: &Vector| {
            let a = if y[0] > 0.0 { alpha_r } else { alpha_l };
            let s = match (i, j) {
                (0, 1) => a,
                (1, 0) => -a,
                _ => 0.0,
            };
            Complex::from_polar(1.0, s)
        };
        BundleTransport::new(
            Arc::new(BundleData::new(Arc::new(cover), g, |_, _, _| 0.0)),
            QuadConfig::default(),
        )
    }

    fn circle() -> Loop {
        Loop::new(|t| vector(&[t.cos(), t.sin()]))
    }

    #[test]
    fn flat_circle_holonomy_is_the_product_of_transitions() {
        let z = flat_circle(PI / 3.0, 0.0);
        let ell = circle();
        let t = crate::partition::build_loop_partition(&ell, z.cover(), 64).unwrap();
        assert!(t.len() >= 2);
        let hol = z.z_loop(&ell, &t).unwrap();
        assert!((hol.canonical() - PI / 3.0).abs() < 1e-12, "{hol:?}");
        let t2 = t.rotated_start(1.0);
        assert!((z.z_loop(&ell, &t2).unwrap().canonical() - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn z_point_conventions() {
        let z = flat_circle(0.7, 0.0);
        let y = vector(&[1.0, 0.0]);
        assert_eq!(
            z.z_point(&y, Orientation::Positive, 0, 0).unwrap(),
            Phase::ZERO
        );
        assert!((z.z_point(&y, Orientation::Positive, 0, 1).unwrap().angle() - 0.7).abs() < 1e-15);
        assert!((z.z_point(&y, Orientation::Negative, 0, 1).unwrap().angle() + 0.7).abs() < 1e-15);
        assert!(matches!(
            z.z_point(&vector(&[0.0, 1.0]), Orientation::Positive, 0, 1),
            Err(Error::PointOutsideOverlap { .. })
        ));
    }

    #[test]
    fn gluing_matches_direct_evaluation() {
        let z = flat_circle(0.4, -0.9);
        let p = circle().as_path(0.3);
        let t = build_path_partition(&p, z.cover(), 200).unwrap();
        let b = 2.0;
        let (t1, t2) = t.split_at(b).unwrap();
        let direct = z.z_path(&p, &t).unwrap();
        let glued = glue_z_path(
            &z,
            (&p.restricted(p.start(), b), &t1),
            (&p.restricted(b, p.end()), &t2),
        )
        .unwrap();
        assert!((direct.angle() - glued.angle()).abs() < 1e-12);
        let far = Path::constant(b, 3.0, vector(&[0.0, -1.0]));
        assert!(matches!(
            glue_z_path(
                &z,
                (&p.restricted(p.start(), b), &t1),
                (&far, &LabeledPathPartition::single(b, 3.0, 0))
            ),
            Err(Error::EndpointMismatch { .. })
        ));
    }

    #[test]
    fn reconstructs_transitions() {
        let z = flat_circle(0.4, -0.9);
        let y = vector(&[-1.0, 0.0]);
        assert!((reconstruct_g(&z, &y, 0, 1).unwrap().angle() + 0.9).abs() < 1e-14);
        assert_eq!(reconstruct_g(&z, &y, 1, 1).unwrap(), Phase::ZERO);
        let a = reconstruct_a(&z, 0, &vector(&[0.0, -1.0]), &vector(&[1.0, 0.0]), 1e-4).unwrap();
        assert!(a.abs() < 1e-12);
        assert!(matches!(
            reconstruct_a(&z, 0, &vector(&[0.0, 1.0]), &vector(&[1.0, 0.0]), 1e-4),
            Err(Error::PointOutsideChart { .. })
        ));
        assert!(matches!(
            reconstruct_a(&z, 0, &vector(&[0.0, -1.0]), &vector(&[1.0, 0.0]), 2.0),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        let z = flat_circle(0.4, 0.0);
        let p = circle().as_path(0.0);
        let t = LabeledPathPartition::single(0.0, 2.0 * PI, 0);
        assert!(matches!(z.z_path(&p, &t), Err(Error::InvalidPartition(_))));
    }
}
