//! Distances, nearest-neighbour search and bi-square kernel weights.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::model::{resolve_bandwidth_count, Bandwidth, KernelSpec, Point};

/// Inflation applied to an adaptive radius so the k-th neighbour itself
/// receives a strictly positive weight.
pub const ADAPTIVE_INFLATION: f64 = 1e-9;

pub fn euclidean_distance(a: Point, b: Point) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Bi-square kernel: `(1 - (d/b)^2)^2` inside the support, exactly zero at
/// and beyond `b`.
pub fn bisquare_weight(d: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::NonPositiveBandwidth(b));
    }
    Ok(bisquare(d, b))
}

#[inline]
pub(crate) fn bisquare(d: f64, b: f64) -> f64 {
    if d < b {
        let u = d / b;
        let t = 1.0 - u * u;
        t * t
    } else {
        0.0
    }
}

/// Kernel weights of the samples around one evaluation center.
///
/// Entries are sorted by sample index and only carry strictly positive
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub center: Point,
    pub entries: Vec<(usize, f64)>,
    pub bandwidth_used: f64,
}

impl WeightVector {
    /// Builds a vector from explicit entries, dropping zero weights and
    /// ordering by sample index.
    pub fn from_entries(center: Point, bandwidth_used: f64, entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().filter(|&(_, w)| w > 0.0).collect();
        entries.sort_by_key(|&(j, _)| j);
        Self {
            center,
            entries,
            bandwidth_used,
        }
    }

    /// Unit weights on every one of `n` samples.
    pub fn uniform(n: usize) -> Self {
        Self {
            center: Point::new(f64::NAN, f64::NAN),
            entries: (0..n).map(|j| (j, 1.0)).collect(),
            bandwidth_used: f64::INFINITY,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }
}

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    lo: Point,
    hi: Point,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Static 2-d tree over sample locations.
///
/// Query results are identical to a linear scan: every candidate distance is
/// computed with [`euclidean_distance`] and the tree only prunes boxes whose
/// lower-bound distance cannot qualify.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(PartialEq)]
struct Farthest(f64);

impl Eq for Farthest {}

impl PartialOrd for Farthest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Farthest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl SpatialIndex {
    pub fn build(points: &[Point]) -> Self {
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build_node(0, points.len());
        }
        index
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let (lo, hi) = self.bounds(start, end);
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            children: None,
        });
        if end - start > LEAF_SIZE {
            let split_x = hi.x - lo.x >= hi.y - lo.y;
            let mid = start + (end - start) / 2;
            let points = &self.points;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                let (pa, pb) = (points[a], points[b]);
                if split_x {
                    pa.x.total_cmp(&pb.x)
                } else {
                    pa.y.total_cmp(&pb.y)
                }
            });
            let left = self.build_node(start, mid);
            let right = self.build_node(mid, end);
            self.nodes[id].children = Some((left, right));
        }
        id
    }

    fn bounds(&self, start: usize, end: usize) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &j in &self.order[start..end] {
            let p = self.points[j];
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, j: usize) -> Point {
        self.points[j]
    }

    // Rounding is monotone, so this never exceeds the computed distance to
    // any point inside the box.
    fn box_distance(node: &Node, c: Point) -> f64 {
        let dx = (node.lo.x - c.x).max(c.x - node.hi.x).max(0.0);
        let dy = (node.lo.y - c.y).max(c.y - node.hi.y).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    /// Distance from `center` to its `k`-th nearest point (1-based).
    pub fn kth_nearest_distance(&self, center: Point, k: usize) -> Option<f64> {
        if k == 0 || k > self.len() {
            return None;
        }
        let mut heap: BinaryHeap<Farthest> = BinaryHeap::with_capacity(k + 1);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if heap.len() == k && Self::box_distance(node, center) > heap.peek().map_or(f64::INFINITY, |f| f.0) {
                continue;
            }
            match node.children {
                Some((left, right)) => {
                    // Visit the nearer child first.
                    let dl = Self::box_distance(&self.nodes[left], center);
                    let dr = Self::box_distance(&self.nodes[right], center);
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
                None => {
                    for &j in &self.order[node.start..node.end] {
                        let d = euclidean_distance(center, self.points[j]);
                        if heap.len() < k {
                            heap.push(Farthest(d));
                        } else if d < heap.peek().map_or(f64::INFINITY, |f| f.0) {
                            heap.pop();
                            heap.push(Farthest(d));
                        }
                    }
                }
            }
        }
        heap.peek().map(|f| f.0)
    }

    /// Indices and distances of every point with distance strictly below
    /// `radius`, sorted by index.
    pub fn within(&self, center: Point, radius: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if Self::box_distance(node, center) >= radius {
                continue;
            }
            match node.children {
                Some((left, right)) => {
                    stack.push(right);
                    stack.push(left);
                }
                None => {
                    for &j in &self.order[node.start..node.end] {
                        let d = euclidean_distance(center, self.points[j]);
                        if d < radius {
                            out.push((j, d));
                        }
                    }
                }
            }
        }
        out.sort_unstable_by_key(|&(j, _)| j);
        out
    }
}

/// Kernel radius at `center`: the fixed distance, or the distance to the
/// k-th nearest sample inflated by [`ADAPTIVE_INFLATION`].
pub fn resolve_local_bandwidth(index: &SpatialIndex, center: Point, spec: &KernelSpec) -> Result<f64> {
    match spec.bandwidth {
        Bandwidth::Fixed(b) => {
            if !(b > 0.0) {
                return Err(Error::NonPositiveBandwidth(b));
            }
            Ok(b)
        }
        Bandwidth::AdaptiveFraction(_) | Bandwidth::AdaptiveCount(_) => {
            let k = resolve_bandwidth_count(spec, index.len())?;
            let d = index
                .kth_nearest_distance(center, k)
                .ok_or(Error::TooFewPoints { needed: k, got: index.len() })?;
            if d == 0.0 {
                return Err(Error::DegenerateBandwidth {
                    x: center.x,
                    y: center.y,
                });
            }
            Ok(d * (1.0 + ADAPTIVE_INFLATION))
        }
    }
}

/// Bi-square weights of all samples strictly inside the local bandwidth.
pub fn weight_vector(index: &SpatialIndex, center: Point, spec: &KernelSpec) -> Result<WeightVector> {
    let b = resolve_local_bandwidth(index, center, spec)?;
    let entries: Vec<(usize, f64)> = index
        .within(center, b)
        .into_iter()
        .map(|(j, d)| (j, bisquare(d, b)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(WeightVector {
        center,
        entries,
        bandwidth_used: b,
    })
}
