//! Global and geographically weighted error diagnostics.
//!
//! Deviations are `predicted - reference`, so a positive msd means
//! over-prediction. Every weighted sum runs over the weight-vector entries in
//! sample-index order, which makes results bit-reproducible regardless of how
//! cells are scheduled across threads.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DiagnosticKind, DiagnosticSurface, EvaluationGrid, KernelSpec, Point, SampleSet};
use crate::spatial::{weight_vector, SpatialIndex, WeightVector};

/// Rounding slack tolerated on |r| before it is treated as a numerical failure.
pub const CORRELATION_SLACK: f64 = 1e-12;

/// Adaptive bandwidth ladder from 5% to 50% in steps of 5%.
pub const DEFAULT_SWEEP_FRACTIONS: [f64; 10] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceOptions {
    /// A local correlation needs at least this many positively weighted samples.
    pub min_points_for_r: usize,
    /// Largest grid `evaluate_surfaces` accepts.
    pub max_cells: usize,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self {
            min_points_for_r: 3,
            max_cells: 10_000_000,
        }
    }
}

/// Per-sample columns in the layout the weighted sums consume.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub predicted: Vec<f64>,
    pub reference: Vec<f64>,
    pub deviation: Vec<f64>,
}

impl Columns {
    pub fn from_samples(s: &SampleSet) -> Self {
        Self {
            predicted: s.predicted(),
            reference: s.reference(),
            deviation: s.deviations(),
        }
    }

    /// Columns with sample `j` taking the values of sample `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let pick = |v: &[f64]| perm.iter().map(|&j| v[j]).collect();
        Self {
            predicted: pick(&self.predicted),
            reference: pick(&self.reference),
            deviation: pick(&self.deviation),
        }
    }

    pub fn len(&self) -> usize {
        self.deviation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deviation.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalReport {
    pub msd: f64,
    pub mae: f64,
    pub rmse: f64,
    pub r: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDiagnostics {
    pub center: Point,
    pub gw_msd: Option<f64>,
    pub gw_mae: Option<f64>,
    pub gw_rmse: Option<f64>,
    pub gw_r: Option<f64>,
    pub effective_weight_sum: f64,
}

impl LocalDiagnostics {
    pub fn get(&self, kind: DiagnosticKind) -> Option<f64> {
        match kind {
            DiagnosticKind::GwMsd => self.gw_msd,
            DiagnosticKind::GwMae => self.gw_mae,
            DiagnosticKind::GwRmse => self.gw_rmse,
            DiagnosticKind::GwR => self.gw_r,
        }
    }
}

fn checked_sum(w: &WeightVector) -> Result<f64> {
    let sum = w.sum();
    if sum > 0.0 {
        Ok(sum)
    } else {
        Err(Error::EmptySupport)
    }
}

fn weighted_average(values: &[f64], w: &WeightVector, f: impl Fn(f64) -> f64) -> Result<f64> {
    let sum = checked_sum(w)?;
    let acc: f64 = w.entries.iter().map(|&(j, wj)| wj * f(values[j])).sum();
    Ok(acc / sum)
}

/// Weighted mean, computed relative to the first supported value so a
/// locally constant series yields that constant exactly.
pub fn gw_mean(values: &[f64], w: &WeightVector) -> Result<f64> {
    let sum = checked_sum(w)?;
    let origin = values[w.entries[0].0];
    let acc: f64 = w.entries.iter().map(|&(j, wj)| wj * (values[j] - origin)).sum();
    Ok(origin + acc / sum)
}

/// Weighted population standard deviation.
pub fn gw_sd(values: &[f64], w: &WeightVector) -> Result<f64> {
    let m = gw_mean(values, w)?;
    Ok(weighted_average(values, w, |v| (v - m) * (v - m))?.sqrt())
}

pub fn gw_covariance(a: &[f64], b: &[f64], w: &WeightVector) -> Result<f64> {
    let sum = checked_sum(w)?;
    let ma = gw_mean(a, w)?;
    let mb = gw_mean(b, w)?;
    let acc: f64 = w.entries.iter().map(|&(j, wj)| wj * (a[j] - ma) * (b[j] - mb)).sum();
    Ok(acc / sum)
}

pub(crate) fn msd_of(dev: &[f64], w: &WeightVector) -> Result<f64> {
    weighted_average(dev, w, |d| d)
}

pub(crate) fn mae_of(dev: &[f64], w: &WeightVector) -> Result<f64> {
    weighted_average(dev, w, f64::abs)
}

pub(crate) fn rmse_of(dev: &[f64], w: &WeightVector) -> Result<f64> {
    Ok(weighted_average(dev, w, |d| d * d)?.sqrt())
}

/// Weighted correlation of reference against predicted; `None` when either
/// local standard deviation is zero or fewer than `min_points` samples are
/// supported.
pub(crate) fn r_of(reference: &[f64], predicted: &[f64], w: &WeightVector, min_points: usize) -> Result<Option<f64>> {
    checked_sum(w)?;
    if w.len() < min_points {
        return Ok(None);
    }
    let sx = gw_sd(reference, w)?;
    let sy = gw_sd(predicted, w)?;
    if sx == 0.0 || sy == 0.0 {
        return Ok(None);
    }
    let r = gw_covariance(reference, predicted, w)? / (sx * sy);
    if !r.is_finite() {
        return Ok(None);
    }
    if r.abs() > 1.0 + CORRELATION_SLACK {
        return Err(Error::NumericalBlowup(r));
    }
    Ok(Some(r.clamp(-1.0, 1.0)))
}

pub fn gw_msd(s: &SampleSet, w: &WeightVector) -> Result<f64> {
    msd_of(&s.deviations(), w)
}

pub fn gw_mae(s: &SampleSet, w: &WeightVector) -> Result<f64> {
    mae_of(&s.deviations(), w)
}

pub fn gw_rmse(s: &SampleSet, w: &WeightVector) -> Result<f64> {
    rmse_of(&s.deviations(), w)
}

/// Local correlation with the default three-point minimum support.
pub fn gw_r(s: &SampleSet, w: &WeightVector) -> Result<Option<f64>> {
    r_of(&s.reference(), &s.predicted(), w, SurfaceOptions::default().min_points_for_r)
}

/// One local statistic over pre-extracted columns.
pub fn local_statistic(kind: DiagnosticKind, cols: &Columns, w: &WeightVector, min_points_for_r: usize) -> Result<Option<f64>> {
    Ok(match kind {
        DiagnosticKind::GwMsd => Some(msd_of(&cols.deviation, w)?),
        DiagnosticKind::GwMae => Some(mae_of(&cols.deviation, w)?),
        DiagnosticKind::GwRmse => Some(rmse_of(&cols.deviation, w)?),
        DiagnosticKind::GwR => r_of(&cols.reference, &cols.predicted, w, min_points_for_r)?,
    })
}

/// All four statistics at one center. A failed statistic becomes `None`.
pub fn local_diagnostics(cols: &Columns, w: &WeightVector, opts: &SurfaceOptions) -> LocalDiagnostics {
    let get = |kind| local_statistic(kind, cols, w, opts.min_points_for_r).ok().flatten();
    LocalDiagnostics {
        center: w.center,
        gw_msd: get(DiagnosticKind::GwMsd),
        gw_mae: get(DiagnosticKind::GwMae),
        gw_rmse: get(DiagnosticKind::GwRmse),
        gw_r: get(DiagnosticKind::GwR),
        effective_weight_sum: w.sum(),
    }
}

/// Unweighted msd, mae, rmse and Pearson r over the whole set.
pub fn global_diagnostics(s: &SampleSet) -> Result<GlobalReport> {
    if s.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: s.len() });
    }
    let cols = Columns::from_samples(s);
    let w = WeightVector::uniform(s.len());
    Ok(GlobalReport {
        msd: msd_of(&cols.deviation, &w)?,
        mae: mae_of(&cols.deviation, &w)?,
        rmse: rmse_of(&cols.deviation, &w)?,
        r: r_of(&cols.reference, &cols.predicted, &w, 3)?,
        n: s.len(),
    })
}

/// Weight vector for every grid cell, `None` where the kernel has no usable
/// support. Cells are computed in parallel; each result depends only on its
/// own center.
pub fn cell_weights(index: &SpatialIndex, grid: &EvaluationGrid, spec: &KernelSpec) -> Vec<Option<WeightVector>> {
    (0..grid.n_cells())
        .into_par_iter()
        .map(|i| weight_vector(index, grid.center_at(i), spec).ok())
        .collect()
}

pub(crate) fn check_grid_size(grid: &EvaluationGrid, opts: &SurfaceOptions) -> Result<()> {
    if grid.n_cells() > opts.max_cells {
        return Err(Error::GridTooLarge {
            cells: grid.n_cells(),
            cap: opts.max_cells,
        });
    }
    Ok(())
}

/// Local diagnostics at every cell center, one surface per requested kind.
///
/// All kinds at a cell share one weight vector. Cells without kernel support
/// or with an undefined correlation are missing.
pub fn evaluate_surfaces(
    s: &SampleSet,
    grid: &EvaluationGrid,
    spec: &KernelSpec,
    kinds: &BTreeSet<DiagnosticKind>,
    opts: &SurfaceOptions,
) -> Result<Vec<DiagnosticSurface>> {
    check_grid_size(grid, opts)?;
    let index = SpatialIndex::build(&s.locations());
    let cols = Columns::from_samples(s);
    let cells: Vec<Option<LocalDiagnostics>> = (0..grid.n_cells())
        .into_par_iter()
        .map(|i| {
            weight_vector(&index, grid.center_at(i), spec)
                .ok()
                .map(|w| local_diagnostics(&cols, &w, opts))
        })
        .collect();
    Ok(kinds
        .iter()
        .map(|&kind| DiagnosticSurface {
            grid: *grid,
            kind,
            kernel: *spec,
            values: cells.iter().map(|c| c.as_ref().and_then(|c| c.get(kind))).collect(),
        })
        .collect())
}

/// One surface of `kind` per adaptive fraction, in the order given.
pub fn bandwidth_sweep(
    s: &SampleSet,
    grid: &EvaluationGrid,
    kind: DiagnosticKind,
    fractions: &[f64],
    opts: &SurfaceOptions,
) -> Result<Vec<(f64, DiagnosticSurface)>> {
    let kinds = BTreeSet::from([kind]);
    fractions
        .iter()
        .map(|&f| {
            let spec = KernelSpec::adaptive_fraction(f)?;
            let surface = evaluate_surfaces(s, grid, &spec, &kinds, opts)?.remove(0);
            Ok((f, surface))
        })
        .collect()
}
