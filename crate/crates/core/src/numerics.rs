//! Quadrature, finite differences and pullback integration of forms.
//!
//! Every integrator uses tensor Gauss–Legendre rules on axis-aligned cells and
//! refines adaptively by bisection. The error estimate of a cell is the
//! difference between the rule on the cell and the sum of the rule over its
//! children; a cell is accepted once that difference is below its share of the
//! tolerance. `max_depth == 0` switches refinement off and returns the plain
//! rule, which is what convergence-order studies want.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Vector;

/// Relative parameter step used for numeric tangents of user maps.
pub const TANGENT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    /// Gauss–Legendre points per cell for curves.
    pub order_1d: usize,
    /// Points per axis on surface cells.
    pub order_2d: usize,
    /// Points per axis on volume cells.
    pub order_3d: usize,
    /// Absolute tolerance on the whole integral.
    pub tolerance: f64,
    pub max_depth: u32,
    /// With `max_depth == 0`, whether to spend the extra child evaluations on
    /// an error estimate. Without it the reported error is zero.
    pub estimate: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            order_1d: 16,
            order_2d: 8,
            order_3d: 5,
            tolerance: 1e-10,
            max_depth: 12,
            estimate: true,
        }
    }
}

impl QuadConfig {
    /// A non-adaptive rule with `order` points per axis in every dimension.
    pub fn fixed(order: usize) -> Self {
        Self {
            order_1d: order,
            order_2d: order,
            order_3d: order,
            tolerance: 1e-10,
            max_depth: 0,
            estimate: true,
        }
    }

    /// [`QuadConfig::fixed`] without the error estimate.
    pub fn plain(order: usize) -> Self {
        Self {
            estimate: false,
            ..Self::fixed(order)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, order) in [
            ("order_1d", self.order_1d),
            ("order_2d", self.order_2d),
            ("order_3d", self.order_3d),
        ] {
            if order < 2 {
                return Err(Error::BadParameter {
                    name: name.into(),
                    reason: format!("quadrature order must be at least 2, got {order}"),
                });
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::BadParameter {
                name: "tolerance".into(),
                reason: "quadrature tolerance must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Value of an integral with its estimated absolute error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::iter::Sum for Integral {
    fn sum<I: Iterator<Item = Integral>>(iter: I) -> Integral {
        iter.fold(Integral::default(), |a, b| a + b)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    fn apply(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (x, w) in self.mapped(a, b) {
            let y = f(x);
            sum += w * y;
            abs += w * y.abs();
        }
        (sum, abs)
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Accepts a cell once its refinement changes the value by less than its
/// tolerance share, or by less than round-off in the absolute integrand.
fn accepted(diff: f64, tol: f64, abs_mass: f64) -> bool {
    diff <= tol || diff <= 64.0 * f64::EPSILON * abs_mass
}

/// Adaptive Gauss–Legendre integral of a scalar function on `[a, b]`.
pub fn integrate_1d(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    order: usize,
    cfg: &QuadConfig,
) -> Result<Integral> {
    let rule = GaussLegendre::new(order);
    if a == b {
        return Ok(Integral::default());
    }
    let (whole, abs) = rule.apply(&mut f, a, b);
    if cfg.max_depth == 0 && !cfg.estimate {
        return Ok(Integral {
            value: whole,
            error: 0.0,
        });
    }
    let mut failed = None;
    let out = refine_1d(
        &mut f,
        &rule,
        a,
        b,
        whole,
        abs,
        cfg.tolerance,
        0,
        cfg.max_depth,
        &mut failed,
    );
    if let Some(estimate) = failed {
        return Err(Error::QuadratureNotConverged {
            tolerance: cfg.tolerance,
            estimate,
        });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn refine_1d(
    f: &mut impl FnMut(f64) -> f64,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    abs: f64,
    tol: f64,
    depth: u32,
    max_depth: u32,
    failed: &mut Option<f64>,
) -> Integral {
    let m = 0.5 * (a + b);
    let (left, left_abs) = rule.apply(f, a, m);
    let (right, right_abs) = rule.apply(f, m, b);
    let diff = (left + right - whole).abs();
    if max_depth == 0 {
        return Integral {
            value: whole,
            error: diff,
        };
    }
    if accepted(diff, tol, abs) {
        return Integral {
            value: left + right,
            error: diff,
        };
    }
    if depth + 1 >= max_depth {
        *failed = Some(failed.unwrap_or(0.0) + diff);
        return Integral {
            value: left + right,
            error: diff,
        };
    }
    refine_1d(
        f,
        rule,
        a,
        m,
        left,
        left_abs,
        0.5 * tol,
        depth + 1,
        max_depth,
        failed,
    ) + refine_1d(
        f,
        rule,
        m,
        b,
        right,
        right_abs,
        0.5 * tol,
        depth + 1,
        max_depth,
        failed,
    )
}

/// Total error estimate after uniform refinement into `2^depth` panels.
///
/// Used to study how the estimate behaves with depth.
pub fn uniform_error_estimate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    order: usize,
    depth: u32,
) -> f64 {
    let rule = GaussLegendre::new(order);
    let panels = 1usize << depth;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let m = 0.5 * (lo + hi);
            let whole = rule.apply(&mut f, lo, hi).0;
            let split = rule.apply(&mut f, lo, m).0 + rule.apply(&mut f, m, hi).0;
            (split - whole).abs()
        })
        .sum()
}

/// Axis-aligned cell `[lo_0, hi_0] × … × [lo_{D-1}, hi_{D-1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<const D: usize> {
    pub lo: [f64; D],
    pub hi: [f64; D],
}

impl<const D: usize> Cell<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Self {
        Self { lo, hi }
    }

    pub fn volume(&self) -> f64 {
        (0..D).map(|k| self.hi[k] - self.lo[k]).product()
    }

    fn children(&self) -> Vec<Cell<D>> {
        let mid: [f64; D] = std::array::from_fn(|k| 0.5 * (self.lo[k] + self.hi[k]));
        (0..1usize << D)
            .map(|bits| {
                let mut c = *self;
                for k in 0..D {
                    if bits >> k & 1 == 0 {
                        c.hi[k] = mid[k];
                    } else {
                        c.lo[k] = mid[k];
                    }
                }
                c
            })
            .collect()
    }
}

fn tensor_rule<const D: usize>(
    f: &mut impl FnMut([f64; D]) -> f64,
    rule: &GaussLegendre,
    cell: &Cell<D>,
) -> (f64, f64) {
    let axes: Vec<Vec<(f64, f64)>> = (0..D)
        .map(|k| rule.mapped(cell.lo[k], cell.hi[k]).collect())
        .collect();
    let n = rule.len();
    let total = n.pow(D as u32);
    let (mut sum, mut abs) = (0.0, 0.0);
    for flat in 0..total {
        let mut rem = flat;
        let mut point = [0.0; D];
        let mut weight = 1.0;
        for k in 0..D {
            let (x, w) = axes[k][rem % n];
            rem /= n;
            point[k] = x;
            weight *= w;
        }
        let y = f(point);
        sum += weight * y;
        abs += weight * y.abs();
    }
    (sum, abs)
}

/// Adaptive tensor Gauss–Legendre integral over a `D`-dimensional cell.
pub fn integrate_cell<const D: usize>(
    mut f: impl FnMut([f64; D]) -> f64,
    cell: Cell<D>,
    order: usize,
    cfg: &QuadConfig,
) -> Result<Integral> {
    let rule = GaussLegendre::new(order);
    let (whole, abs) = tensor_rule(&mut f, &rule, &cell);
    if cfg.max_depth == 0 && !cfg.estimate {
        return Ok(Integral {
            value: whole,
            error: 0.0,
        });
    }
    let mut failed = None;
    let out = refine_cell(
        &mut f,
        &rule,
        cell,
        whole,
        abs,
        cfg.tolerance,
        0,
        cfg.max_depth,
        &mut failed,
    );
    if let Some(estimate) = failed {
        return Err(Error::QuadratureNotConverged {
            tolerance: cfg.tolerance,
            estimate,
        });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn refine_cell<const D: usize>(
    f: &mut impl FnMut([f64; D]) -> f64,
    rule: &GaussLegendre,
    cell: Cell<D>,
    whole: f64,
    abs: f64,
    tol: f64,
    depth: u32,
    max_depth: u32,
    failed: &mut Option<f64>,
) -> Integral {
    let children = cell.children();
    let parts: Vec<(f64, f64)> = children.iter().map(|c| tensor_rule(f, rule, c)).collect();
    let split: f64 = parts.iter().map(|p| p.0).sum();
    let diff = (split - whole).abs();
    if max_depth == 0 {
        return Integral {
            value: whole,
            error: diff,
        };
    }
    if accepted(diff, tol, abs) {
        return Integral {
            value: split,
            error: diff,
        };
    }
    if depth + 1 >= max_depth {
        *failed = Some(failed.unwrap_or(0.0) + diff);
        return Integral {
            value: split,
            error: diff,
        };
    }
    let share = tol / children.len() as f64;
    children
        .into_iter()
        .zip(parts)
        .map(|(c, (v, a))| refine_cell(f, rule, c, v, a, share, depth + 1, max_depth, failed))
        .sum()
}

/// Fourth-order central difference of a vector-valued function.
///
/// The step is rounded down to a power of two so the stencil abscissae are
/// exact in floating point.
pub fn derivative_4th(f: &impl Fn(f64) -> Vector, t: f64, h: f64) -> Vector {
    let h = pow2_floor(h);
    let a = f(t + 2.0 * h);
    let b = f(t + h);
    let c = f(t - h);
    let d = f(t - 2.0 * h);
    (8.0 * (b - c) - (a - d)) / (12.0 * h)
}

fn pow2_floor(h: f64) -> f64 {
    if h > 0.0 && h.is_finite() {
        2f64.powi(h.log2().floor() as i32)
    } else {
        h
    }
}

/// Differencing schemes offered by [`central_diff`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    /// `(f(t+h) - f(t-h)) / 2h`.
    First,
}

/// First derivative at `t0` by central differences.
pub fn central_diff(f: impl Fn(f64) -> f64, t0: f64, h: f64, scheme: DiffScheme) -> f64 {
    match scheme {
        DiffScheme::First => (f(t0 + h) - f(t0 - h)) / (2.0 * h),
    }
}

/// `∂²f/∂t∂u` at the origin by the 4-point mixed central difference.
pub fn mixed_central_diff(f: impl Fn(f64, f64) -> f64, h: f64) -> f64 {
    (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h)
}

/// Integral of `γ^*(α)` over `[t0, t1]`, with tangents from 4th-order differences.
pub fn integrate_pullback_1form(
    form: impl Fn(&Vector, &Vector) -> f64,
    curve: impl Fn(f64) -> Vector,
    t0: f64,
    t1: f64,
    cfg: &QuadConfig,
) -> Result<Integral> {
    let h = TANGENT_STEP * (t1 - t0).abs();
    if h == 0.0 {
        return Ok(Integral::default());
    }
    integrate_1d(
        |t| {
            let p = curve(t);
            let v = derivative_4th(&curve, t, h);
            form(&p, &v)
        },
        t0,
        t1,
        cfg.order_1d,
        cfg,
    )
}

/// Integral of `X^*(β)` over a parameter cell, integrand `β(X)(∂_u X, ∂_v X)`.
pub fn integrate_pullback_2form(
    form: impl Fn(&Vector, &Vector, &Vector) -> f64,
    patch: impl Fn(f64, f64) -> Vector,
    cell: Cell<2>,
    cfg: &QuadConfig,
) -> Result<Integral> {
    let hu = TANGENT_STEP * (cell.hi[0] - cell.lo[0]).abs();
    let hv = TANGENT_STEP * (cell.hi[1] - cell.lo[1]).abs();
    if hu == 0.0 || hv == 0.0 {
        return Ok(Integral::default());
    }
    integrate_cell(
        |[u, v]| {
            let p = patch(u, v);
            let du = derivative_4th(&|s| patch(s, v), u, hu);
            let dv = derivative_4th(&|s| patch(u, s), v, hv);
            form(&p, &du, &dv)
        },
        cell,
        cfg.order_2d,
        cfg,
    )
}

/// Integral of `H^*(γ)` over a parameter block.
pub fn integrate_pullback_3form(
    form: impl Fn(&Vector, &Vector, &Vector, &Vector) -> f64,
    block: impl Fn(f64, f64, f64) -> Vector,
    cell: Cell<3>,
    cfg: &QuadConfig,
) -> Result<Integral> {
    let h: [f64; 3] = std::array::from_fn(|k| TANGENT_STEP * (cell.hi[k] - cell.lo[k]).abs());
    if h.iter().any(|&x| x == 0.0) {
        return Ok(Integral::default());
    }
    integrate_cell(
        |[u, v, w]| {
            let p = block(u, v, w);
            let du = derivative_4th(&|s| block(s, v, w), u, h[0]);
            let dv = derivative_4th(&|s| block(u, s, w), v, h[1]);
            let dw = derivative_4th(&|s| block(u, v, s), w, h[2]);
            form(&p, &du, &dv, &dw)
        },
        cell,
        cfg.order_3d,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::vector;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, TAU};

    fn dphi(p: &Vector, v: &Vector) -> f64 {
        (p[0] * v[1] - p[1] * v[0]) / (p[0] * p[0] + p[1] * p[1])
    }

    fn circle(t: f64) -> Vector {
        vector(&[t.cos(), t.sin()])
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 2..=20 {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights().iter().sum();
            assert_abs_diff_eq!(wsum, 2.0, epsilon = 1e-13);
            // degree 2n-1 is exact
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            let approx: f64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            assert_abs_diff_eq!(approx, exact, epsilon = 1e-12);
            let even: f64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(x, w)| w * x.powi(2 * n as i32 - 2))
                .sum();
            assert_abs_diff_eq!(even, 2.0 / (2.0 * n as f64 - 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn dphi_around_circle_is_two_pi() {
        let cfg = QuadConfig::default();
        let out = integrate_pullback_1form(dphi, circle, 0.0, TAU, &cfg).unwrap();
        assert_abs_diff_eq!(out.value, TAU, epsilon = 1e-10);
    }

    #[test]
    fn zero_form_and_scaling() {
        let cfg = QuadConfig::default();
        let zero = integrate_pullback_1form(|_, _| 0.0, circle, 0.0, 2.0, &cfg).unwrap();
        assert_eq!(zero.value, 0.0);
        let one = integrate_pullback_1form(dphi, circle, 0.3, 2.0, &cfg).unwrap();
        let three =
            integrate_pullback_1form(|p, v| 3.0 * dphi(p, v), circle, 0.3, 2.0, &cfg).unwrap();
        assert_abs_diff_eq!(three.value, 3.0 * one.value, epsilon = 1e-12);
    }

    #[test]
    fn area_form_on_flat_square() {
        let cfg = QuadConfig::default();
        let area = |_: &Vector, a: &Vector, b: &Vector| a[0] * b[1] - a[1] * b[0];
        let patch = |u: f64, v: f64| vector(&[u, v]);
        let out =
            integrate_pullback_2form(area, patch, Cell::new([0.0, 0.0], [2.0, 1.5]), &cfg).unwrap();
        assert_abs_diff_eq!(out.value, 3.0, epsilon = 1e-12);
        let swapped = integrate_pullback_2form(
            |p: &Vector, a: &Vector, b: &Vector| area(p, b, a),
            patch,
            Cell::new([0.0, 0.0], [2.0, 1.5]),
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(swapped.value, -3.0, epsilon = 1e-12);
    }

    #[test]
    fn volume_form_constant_and_additive() {
        let cfg = QuadConfig::default();
        let vol = |_: &Vector, a: &Vector, b: &Vector, c: &Vector| {
            2.5 * nalgebra::Matrix3::from_columns(&[
                nalgebra::Vector3::new(a[0], a[1], a[2]),
                nalgebra::Vector3::new(b[0], b[1], b[2]),
                nalgebra::Vector3::new(c[0], c[1], c[2]),
            ])
            .determinant()
        };
        let block = |u: f64, v: f64, w: f64| vector(&[u, v, w]);
        let whole =
            integrate_pullback_3form(vol, block, Cell::new([0.0; 3], [1.0; 3]), &cfg).unwrap();
        assert_abs_diff_eq!(whole.value, 2.5, epsilon = 1e-12);
        let zero =
            integrate_pullback_3form(|_, _, _, _| 0.0, block, Cell::new([0.0; 3], [1.0; 3]), &cfg)
                .unwrap();
        assert_eq!(zero.value, 0.0);

        // non-polynomial integrand, split into two blocks
        let wavy =
            |p: &Vector, a: &Vector, b: &Vector, c: &Vector| (p[0] * 3.0).sin() * vol(p, a, b, c);
        let full =
            integrate_pullback_3form(wavy, block, Cell::new([0.0; 3], [1.0; 3]), &cfg).unwrap();
        let lo = integrate_pullback_3form(wavy, block, Cell::new([0.0; 3], [0.4, 1.0, 1.0]), &cfg)
            .unwrap();
        let hi = integrate_pullback_3form(wavy, block, Cell::new([0.4, 0.0, 0.0], [1.0; 3]), &cfg)
            .unwrap();
        assert_abs_diff_eq!(full.value, lo.value + hi.value, epsilon = 1e-10);
    }

    #[test]
    fn central_differences() {
        let h = 1e-3;
        assert_abs_diff_eq!(
            central_diff(|t| t * t, 0.0, h, DiffScheme::First),
            0.0,
            epsilon = 1e-12
        );
        let d = central_diff(f64::sin, 0.0, h, DiffScheme::First);
        // Taylor: sin'(0) estimate is 1 - h²/6 + O(h⁴)
        assert_abs_diff_eq!(d, 1.0 - h * h / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mixed_central_diff(|t, u| t * u, h), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let cfg = QuadConfig::default();
        let f = |x: f64| 1.0 / (1e-2 + x * x);
        let out = integrate_1d(f, -1.0, 1.0, 16, &cfg).unwrap();
        let exact = 2.0 * (1.0f64 / 0.1).atan() / 0.1;
        assert_abs_diff_eq!(out.value, exact, epsilon = 1e-9);
    }

    #[test]
    fn depth_limit_reports_non_convergence() {
        let cfg = QuadConfig {
            max_depth: 2,
            ..QuadConfig::default()
        };
        let err = integrate_1d(|x: f64| (1.0 / (1e-6 + x * x)).sqrt(), -1.0, 1.0, 2, &cfg);
        assert!(matches!(err, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn error_estimate_is_monotone_in_depth() {
        let integrands: Vec<Box<dyn Fn(f64) -> f64>> = vec![
            Box::new(|t: f64| 0.5 * (1.0 - (0.7 * t).cos())),
            Box::new(|t: f64| (3.0 * t).sin() * t.exp()),
            Box::new(|t: f64| 1.0 / (1.2 + t.cos())),
        ];
        for f in &integrands {
            let mut last = f64::INFINITY;
            for depth in 0..8 {
                let e = uniform_error_estimate(f, 0.0, PI, 4, depth);
                assert!(
                    e <= last * (1.0 + 1e-9) + 1e-15,
                    "estimate grew at depth {depth}: {e} > {last}"
                );
                last = e;
            }
        }
    }

    #[test]
    fn linear_in_form_argument() {
        let cfg = QuadConfig::default();
        let patch = |u: f64, v: f64| vector(&[u.cos() * v, u.sin() * v, v * v]);
        let beta = |p: &Vector, a: &Vector, b: &Vector| p[2] * (a[0] * b[1] - a[1] * b[0]);
        let cell = Cell::new([0.1, 0.2], [1.3, 0.9]);
        let one = integrate_pullback_2form(beta, patch, cell, &cfg)
            .unwrap()
            .value;
        let scaled = integrate_pullback_2form(
            |p: &Vector, a: &Vector, b: &Vector| -4.25 * beta(p, a, b),
            patch,
            cell,
            &cfg,
        )
        .unwrap()
        .value;
        assert!((scaled + 4.25 * one).abs() <= 1e-12 * one.abs().max(1.0));
    }
}
