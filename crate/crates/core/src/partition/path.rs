use std::f64::consts::TAU;

use serde::Serialize;

use crate::cech::ChartCover;
use crate::error::{Error, Result};
use crate::numerics::GaussLegendre;
use crate::types::{ChartId, Loop, Path, Vector};

/// Audit density per segment: Gauss nodes of this order plus a uniform grid
/// four times as dense.
const AUDIT_ORDER: usize = 16;

/// A builder switches away from its current chart once the margin there
/// falls below this fraction of the best available margin.
const SWITCH_RATIO: f64 = 0.5;

fn segment_audit_points(x0: f64, x1: f64) -> Vec<f64> {
    let rule = GaussLegendre::new(AUDIT_ORDER);
    let grid = 4 * AUDIT_ORDER;
    let mut pts: Vec<f64> = rule.mapped(x0, x1).map(|(x, _)| x).collect();
    pts.extend((0..=grid).map(|k| x0 + (x1 - x0) * k as f64 / grid as f64));
    pts
}

fn min_margin_on(
    curve: &(impl Fn(f64) -> Vector + ?Sized),
    cover: &ChartCover,
    chart: ChartId,
    x0: f64,
    x1: f64,
) -> f64 {
    segment_audit_points(x0, x1)
        .into_iter()
        .map(|t| cover.margin(chart, &curve(t)))
        .fold(f64::INFINITY, f64::min)
}

/// Chart with the largest margin at `y`, preferring charts that also contain
/// `prev` so that the switching point lies in an overlap.
fn switch_target(cover: &ChartCover, y: &Vector, prev: Option<&Vector>) -> Option<ChartId> {
    let mut best: Option<(ChartId, f64)> = None;
    for pass in 0..2 {
        for i in 0..cover.len() {
            if pass == 0 {
                if let Some(p) = prev {
                    if cover.margin(i, p) <= 0.0 {
                        continue;
                    }
                }
            }
            let m = cover.margin(i, y);
            if m > 0.0 && best.is_none_or(|(_, b)| m > b) {
                best = Some((i, m));
            }
        }
        if best.is_some() {
            break;
        }
    }
    best.map(|(i, _)| i)
}

/// Greedy sweep over `n` samples of `[a, b]`; returns breakpoints and labels.
fn greedy_sweep(
    curve: &(impl Fn(f64) -> Vector + ?Sized),
    cover: &ChartCover,
    a: f64,
    b: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<ChartId>)> {
    let ts: Vec<f64> = (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect();
    let pts: Vec<Vector> = ts.iter().map(|&t| curve(t)).collect();
    for (t, p) in ts.iter().zip(&pts) {
        if cover.best_chart(p).is_none() {
            return Err(Error::NoCoveringChart { at: vec![*t] });
        }
    }
    let mut current = cover.best_chart(&pts[0]).map(|(i, _)| i).unwrap_or(0);
    let mut breakpoints = vec![a];
    let mut labels = vec![current];
    for k in 1..n {
        let m = cover.margin(current, &pts[k]);
        let best = cover.best_chart(&pts[k]).map_or(0.0, |(_, m)| m);
        if m > SWITCH_RATIO * best {
            continue;
        }
        let Some(next) = switch_target(cover, &pts[k], Some(&pts[k - 1])) else {
            return Err(Error::NoCoveringChart { at: vec![ts[k]] });
        };
        if next == current {
            continue;
        }
        breakpoints.push(0.5 * (ts[k - 1] + ts[k]));
        labels.push(next);
        current = next;
    }
    breakpoints.push(b);
    Ok((breakpoints, labels))
}

/// Labelled partition `a = x_0 < … < x_N = b` of a parameter interval; segment
/// `[x_{α-1}, x_α]` carries label `labels[α-1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledPathPartition {
    breakpoints: Vec<f64>,
    labels: Vec<ChartId>,
}

impl LabeledPathPartition {
    pub fn new(breakpoints: Vec<f64>, labels: Vec<ChartId>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPartition(
                "a path partition needs at least one segment".into(),
            ));
        }
        if breakpoints.len() != labels.len() + 1 {
            return Err(Error::InvalidPartition(format!(
                "{} breakpoints for {} labels",
                breakpoints.len(),
                labels.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPartition(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            labels,
        })
    }

    /// The whole interval with a single label.
    pub fn single(a: f64, b: f64, label: ChartId) -> Self {
        Self {
            breakpoints: vec![a, b],
            labels: vec![label],
        }
    }

    /// `[a, m]` labelled `i` and `[m, b]` labelled `j`.
    pub fn split(a: f64, b: f64, m: f64, i: ChartId, j: ChartId) -> Result<Self> {
        Self::new(vec![a, m, b], vec![i, j])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn labels(&self) -> &[ChartId] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn first_label(&self) -> ChartId {
        self.labels[0]
    }

    pub fn last_label(&self) -> ChartId {
        *self.labels.last().unwrap()
    }

    /// `(x_{k}, x_{k+1}, label)` for segment `k`.
    pub fn segment(&self, k: usize) -> (f64, f64, ChartId) {
        (self.breakpoints[k], self.breakpoints[k + 1], self.labels[k])
    }

    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, ChartId)> + '_ {
        (0..self.len()).map(|k| self.segment(k))
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::InvalidPartition(format!(
                "segment {index} out of range ({} segments)",
                self.len()
            )));
        }
        Ok(())
    }

    /// Splits segment `index` at `at` into two segments with the same label.
    pub fn refine(&self, index: usize, at: f64) -> Result<Self> {
        self.check_index(index)?;
        let (x0, x1, label) = self.segment(index);
        if !(x0 < at && at < x1) {
            return Err(Error::InvalidPartition(format!(
                "split point {at} not inside ({x0}, {x1})"
            )));
        }
        let mut out = self.clone();
        out.breakpoints.insert(index + 1, at);
        out.labels.insert(index + 1, label);
        Ok(out)
    }

    /// Merges segments `index` and `index + 1`, which must carry the same label.
    pub fn merge(&self, index: usize) -> Result<Self> {
        if index + 1 >= self.len() {
            return Err(Error::InvalidMerge {
                index,
                other: index + 1,
                reason: "no following segment".into(),
            });
        }
        if self.labels[index] != self.labels[index + 1] {
            return Err(Error::InvalidMerge {
                index,
                other: index + 1,
                reason: format!(
                    "labels {} and {} differ",
                    self.labels[index],
                    self.labels[index + 1]
                ),
            });
        }
        let mut out = self.clone();
        out.breakpoints.remove(index + 1);
        out.labels.remove(index + 1);
        Ok(out)
    }

    /// Changes the label of segment `index`, checking that the segment image
    /// lies in the new chart.
    pub fn relabel(
        &self,
        index: usize,
        label: ChartId,
        path: &Path,
        cover: &ChartCover,
    ) -> Result<Self> {
        self.check_index(index)?;
        cover.chart(label)?;
        let (x0, x1, _) = self.segment(index);
        if min_margin_on(&|t| path.eval(t), cover, label, x0, x1) <= 0.0 {
            return Err(Error::InvalidRelabel {
                index,
                chart: label,
            });
        }
        let mut out = self.clone();
        out.labels[index] = label;
        Ok(out)
    }

    /// `T ∘ T'` on `[a, c]`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if (self.end() - other.start()).abs() > 1e-12 {
            return Err(Error::InvalidPartition(format!(
                "cannot concatenate [{}, {}] with [{}, {}]",
                self.start(),
                self.end(),
                other.start(),
                other.end()
            )));
        }
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.extend_from_slice(&other.breakpoints[1..]);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Self {
            breakpoints,
            labels,
        })
    }

    /// Splits the partition at an interior point `b` into partitions of
    /// `[a, b]` and `[b, c]`.
    pub fn split_at(&self, b: f64) -> Result<(Self, Self)> {
        if !(self.start() < b && b < self.end()) {
            return Err(Error::InvalidPartition(format!(
                "split point {b} outside the interval"
            )));
        }
        let mut left_b = vec![];
        let mut left_l = vec![];
        let mut right_b = vec![b];
        let mut right_l = vec![];
        for (x0, x1, l) in self.segments() {
            if x1 <= b {
                left_b.push(x0);
                left_l.push(l);
            } else if x0 >= b {
                right_b.push(x1);
                right_l.push(l);
            } else {
                left_b.push(x0);
                left_l.push(l);
                right_b.push(x1);
                right_l.push(l);
            }
        }
        left_b.push(b);
        Ok((Self::new(left_b, left_l)?, Self::new(right_b, right_l)?))
    }

    /// Partition of the reversed path `p(a + b - x)`.
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.start(), self.end());
        Self {
            breakpoints: self.breakpoints.iter().rev().map(|x| a + b - x).collect(),
            labels: self.labels.iter().rev().copied().collect(),
        }
    }

    /// Partition `σ^{-1}(T)` for the reparametrised path `p ∘ σ`.
    pub fn pulled_back(&self, sigma_inverse: impl Fn(f64) -> f64) -> Self {
        let n = self.breakpoints.len();
        let mut breakpoints: Vec<f64> =
            self.breakpoints.iter().map(|&x| sigma_inverse(x)).collect();
        breakpoints[0] = self.breakpoints[0];
        breakpoints[n - 1] = self.breakpoints[n - 1];
        Self {
            breakpoints,
            labels: self.labels.clone(),
        }
    }

    /// Smallest chart margin over the audit samples of all segments.
    pub fn min_margin(&self, path: &Path, cover: &ChartCover) -> f64 {
        self.segments()
            .map(|(x0, x1, l)| min_margin_on(&|t| path.eval(t), cover, l, x0, x1))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, path: &Path, cover: &ChartCover) -> Result<()> {
        if (self.start() - path.start()).abs() > 1e-12 || (self.end() - path.end()).abs() > 1e-12 {
            return Err(Error::InvalidPartition(
                "partition and path domains differ".into(),
            ));
        }
        for (k, (x0, x1, l)) in self.segments().enumerate() {
            cover.chart(l)?;
            let m = min_margin_on(&|t| path.eval(t), cover, l, x0, x1);
            if m <= 0.0 {
                return Err(Error::InvalidPartition(format!(
                    "segment {k} leaves chart {l} (margin {m})"
                )));
            }
        }
        Ok(())
    }
}

/// Greedy labelled partition of a path: follow the current chart until its
/// margin falls well below the best one, then switch halfway between samples.
pub fn build_path_partition(
    path: &Path,
    cover: &ChartCover,
    n_samples: usize,
) -> Result<LabeledPathPartition> {
    if n_samples < 2 {
        return Err(Error::BadParameter {
            name: "n_samples".into(),
            reason: "need at least 2".into(),
        });
    }
    let (breakpoints, labels) = greedy_sweep(
        &|t| path.eval(t),
        cover,
        path.start(),
        path.end(),
        n_samples,
    )?;
    let partition = LabeledPathPartition::new(breakpoints, labels)?;
    partition
        .validate(path, cover)
        .map_err(|e| Error::ResolutionTooCoarse {
            reason: e.to_string(),
        })?;
    Ok(partition)
}

/// Labelled partition of the parameter circle: cyclically ordered angles
/// `a_0 < a_1 < … < a_{N-1} < a_0 + 2π`, arc `[a_k, a_{k+1}]` labelled
/// `labels[k]` (the last arc wraps round to `a_0 + 2π`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledLoopPartition {
    angles: Vec<f64>,
    labels: Vec<ChartId>,
}

impl LabeledLoopPartition {
    pub fn new(angles: Vec<f64>, labels: Vec<ChartId>) -> Result<Self> {
        if labels.is_empty() || angles.len() != labels.len() {
            return Err(Error::InvalidPartition(format!(
                "{} angles for {} labels",
                angles.len(),
                labels.len()
            )));
        }
        if angles.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPartition(
                "loop angles must be strictly increasing".into(),
            ));
        }
        if angles.last().unwrap() - angles[0] >= TAU {
            return Err(Error::InvalidPartition(
                "loop angles must be distinct modulo 2π".into(),
            ));
        }
        Ok(Self { angles, labels })
    }

    /// Whole circle with one label, cut open at `start`.
    pub fn single(start: f64, label: ChartId) -> Self {
        Self {
            angles: vec![start],
            labels: vec![label],
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn labels(&self) -> &[ChartId] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.angles[0]
    }

    /// `(a_k, a_{k+1}, label)`, with the last arc ending at `a_0 + 2π`.
    pub fn arc(&self, k: usize) -> (f64, f64, ChartId) {
        let end = if k + 1 < self.len() {
            self.angles[k + 1]
        } else {
            self.angles[0] + TAU
        };
        (self.angles[k], end, self.labels[k])
    }

    pub fn arcs(&self) -> impl Iterator<Item = (f64, f64, ChartId)> + '_ {
        (0..self.len()).map(|k| self.arc(k))
    }

    /// Label of the arc containing `angle` (arcs are closed on the left).
    pub fn label_at(&self, angle: f64) -> ChartId {
        let a0 = self.angles[0];
        let x = a0 + (angle - a0).rem_euclid(TAU);
        let k = self.angles.partition_point(|&a| a <= x);
        self.labels[k.saturating_sub(1)]
    }

    /// Same partition cut open at a different base angle.
    pub fn rotated_start(&self, start: f64) -> Self {
        let mut pairs: Vec<(f64, ChartId)> = self
            .angles
            .iter()
            .zip(&self.labels)
            .map(|(&a, &l)| (start + (a - start).rem_euclid(TAU), l))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            angles: pairs.iter().map(|p| p.0).collect(),
            labels: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn refine(&self, index: usize, at: f64) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::InvalidPartition(format!("arc {index} out of range")));
        }
        let (a0, a1, label) = self.arc(index);
        if !(a0 < at && at < a1) {
            return Err(Error::InvalidPartition(format!(
                "split point {at} not inside ({a0}, {a1})"
            )));
        }
        let mut out = self.clone();
        out.angles.insert(index + 1, at);
        out.labels.insert(index + 1, label);
        Ok(out)
    }

    pub fn relabel(
        &self,
        index: usize,
        label: ChartId,
        ell: &Loop,
        cover: &ChartCover,
    ) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::InvalidPartition(format!("arc {index} out of range")));
        }
        cover.chart(label)?;
        let (a0, a1, _) = self.arc(index);
        if min_margin_on(&|t| ell.eval(t), cover, label, a0, a1) <= 0.0 {
            return Err(Error::InvalidRelabel {
                index,
                chart: label,
            });
        }
        let mut out = self.clone();
        out.labels[index] = label;
        Ok(out)
    }

    /// Partition of the path obtained by cutting the loop open at `a_0`.
    pub fn as_path_partition(&self) -> LabeledPathPartition {
        let mut breakpoints = self.angles.clone();
        breakpoints.push(self.angles[0] + TAU);
        LabeledPathPartition {
            breakpoints,
            labels: self.labels.clone(),
        }
    }

    pub fn min_margin(&self, ell: &Loop, cover: &ChartCover) -> f64 {
        self.arcs()
            .map(|(a0, a1, l)| min_margin_on(&|t| ell.eval(t), cover, l, a0, a1))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, ell: &Loop, cover: &ChartCover) -> Result<()> {
        for (k, (a0, a1, l)) in self.arcs().enumerate() {
            cover.chart(l)?;
            let m = min_margin_on(&|t| ell.eval(t), cover, l, a0, a1);
            if m <= 0.0 {
                return Err(Error::InvalidPartition(format!(
                    "arc {k} leaves chart {l} (margin {m})"
                )));
            }
        }
        Ok(())
    }
}

/// Greedy labelled partition of a loop, cut open at angle 0.
pub fn build_loop_partition(
    ell: &Loop,
    cover: &ChartCover,
    n_samples: usize,
) -> Result<LabeledLoopPartition> {
    if n_samples < 2 {
        return Err(Error::BadParameter {
            name: "n_samples".into(),
            reason: "need at least 2".into(),
        });
    }
    let (mut breakpoints, labels) = greedy_sweep(&|t| ell.eval(t), cover, 0.0, TAU, n_samples + 1)?;
    breakpoints.pop();
    let partition = LabeledLoopPartition::new(breakpoints, labels)?;
    partition
        .validate(ell, cover)
        .map_err(|e| Error::ResolutionTooCoarse {
            reason: e.to_string(),
        })?;
    Ok(partition)
}
