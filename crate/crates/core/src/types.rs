use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Point or tangent vector in the ambient coordinate space.
pub type Vector = nalgebra::DVector<f64>;

/// Index of a chart in a [`ChartCover`](crate::cech::ChartCover).
pub type ChartId = usize;

pub fn vector(coords: &[f64]) -> Vector {
    Vector::from_column_slice(coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Positive => write!(f, "+"),
            Orientation::Negative => write!(f, "-"),
        }
    }
}

type CurveFn = dyn Fn(f64) -> Vector + Send + Sync;

/// A parametrized path `[a, b] -> M` presented in ambient coordinates.
#[derive(Clone)]
pub struct Path {
    start: f64,
    end: f64,
    map: Arc<CurveFn>,
}

impl Path {
    pub fn new(start: f64, end: f64, map: impl Fn(f64) -> Vector + Send + Sync + 'static) -> Self {
        assert!(start < end, "path domain must be a nondegenerate interval");
        Self {
            start,
            end,
            map: Arc::new(map),
        }
    }

    pub fn from_arc(start: f64, end: f64, map: Arc<CurveFn>) -> Self {
        Self { start, end, map }
    }

    /// Constant path at `point` on `[start, end]`.
    pub fn constant(start: f64, end: f64, point: Vector) -> Self {
        Self::new(start, end, move |_| point.clone())
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn eval(&self, t: f64) -> Vector {
        (self.map)(t)
    }

    pub fn curve(&self) -> &Arc<CurveFn> {
        &self.map
    }

    /// `p^{-1}(x) = p(a + b - x)`.
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.start, self.end);
        let map = self.map.clone();
        Self::new(a, b, move |t| map(a + b - t))
    }

    /// Precompose with an increasing bijection of the domain fixing the endpoints.
    pub fn reparametrized(&self, sigma: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let map = self.map.clone();
        Self::new(self.start, self.end, move |t| map(sigma(t)))
    }

    /// Restriction to a subinterval.
    pub fn restricted(&self, start: f64, end: f64) -> Self {
        Self::from_arc(start, end, self.map.clone())
    }

    /// `p ∘ p'` on `[a, c]`; `other` must be defined on `[b, c]`.
    pub fn concat(&self, other: &Path) -> Self {
        let b = self.end;
        let (first, second) = (self.map.clone(), other.map.clone());
        Self::new(self.start, other.end, move |t| {
            if t <= b {
                first(t)
            } else {
                second(t)
            }
        })
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Path")
            .field("start", &self.start)
            .field("end", &self.end)
            .finish()
    }
}

/// A closed curve `S^1 -> M`, parametrized by an angle with period 2π.
#[derive(Clone)]
pub struct Loop {
    map: Arc<CurveFn>,
}

impl Loop {
    pub fn new(map: impl Fn(f64) -> Vector + Send + Sync + 'static) -> Self {
        Self { map: Arc::new(map) }
    }

    pub fn from_arc(map: Arc<CurveFn>) -> Self {
        Self { map }
    }

    pub fn eval(&self, angle: f64) -> Vector {
        (self.map)(angle)
    }

    pub fn curve(&self) -> &Arc<CurveFn> {
        &self.map
    }

    /// View of the loop as a path on `[start, start + 2π]`.
    pub fn as_path(&self, start: f64) -> Path {
        Path::from_arc(start, start + TAU, self.map.clone())
    }
}

impl fmt::Debug for Loop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Loop")
    }
}
