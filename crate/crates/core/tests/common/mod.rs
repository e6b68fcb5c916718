//! Reference implementations used to cross-check the library.
#![allow(dead_code)]

use gwdiag::diagnostics::{local_diagnostics, Columns, LocalDiagnostics, SurfaceOptions};
use gwdiag::model::{Bandwidth, EvaluationGrid, KernelSpec, Point, SampleSet};
use gwdiag::spatial::{bisquare_weight, euclidean_distance, WeightVector, ADAPTIVE_INFLATION};

/// Weight vector by scanning every sample; no spatial index involved.
pub fn scan_weight_vector(s: &SampleSet, center: Point, spec: &KernelSpec) -> Option<WeightVector> {
    let dists: Vec<f64> = s.points().iter().map(|p| euclidean_distance(center, p.location())).collect();
    let n = dists.len();
    let b = match spec.bandwidth {
        Bandwidth::Fixed(b) => b,
        Bandwidth::AdaptiveFraction(f) => {
            let k = ((f * n as f64 - 1e-9).ceil() as usize).clamp(2, n);
            kth(&dists, k)? * (1.0 + ADAPTIVE_INFLATION)
        }
        Bandwidth::AdaptiveCount(k) => kth(&dists, k.clamp(2, n))? * (1.0 + ADAPTIVE_INFLATION),
    };
    let entries: Vec<(usize, f64)> = dists
        .iter()
        .enumerate()
        .map(|(j, &d)| (j, bisquare_weight(d, b).unwrap()))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    if entries.is_empty() {
        return None;
    }
    Some(WeightVector::from_entries(center, b, entries))
}

fn kth(dists: &[f64], k: usize) -> Option<f64> {
    let mut sorted = dists.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d = sorted[k - 1];
    (d > 0.0).then_some(d)
}

/// All-pairs evaluation of every cell.
pub fn scan_surfaces(s: &SampleSet, grid: &EvaluationGrid, spec: &KernelSpec, opts: &SurfaceOptions) -> Vec<Option<LocalDiagnostics>> {
    let cols = Columns::from_samples(s);
    (0..grid.n_cells())
        .map(|i| scan_weight_vector(s, grid.center_at(i), spec).map(|w| local_diagnostics(&cols, &w, opts)))
        .collect()
}

/// Moran's I by the textbook double loop with raw 1/d^2 weights.
pub fn moran_double_loop(s: &SampleSet) -> f64 {
    let pts = s.points();
    let n = pts.len();
    let e: Vec<f64> = pts.iter().map(|p| p.predicted - p.reference).collect();
    let mean = e.iter().sum::<f64>() / n as f64;
    let (mut num, mut s0, mut den) = (0.0, 0.0, 0.0);
    for i in 0..n {
        den += (e[i] - mean) * (e[i] - mean);
        for j in 0..n {
            if i == j {
                continue;
            }
            let d2 = (pts[i].x - pts[j].x).powi(2) + (pts[i].y - pts[j].y).powi(2);
            let w = 1.0 / d2;
            s0 += w;
            num += w * (e[i] - mean) * (e[j] - mean);
        }
    }
    (n as f64 / s0) * num / den
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
