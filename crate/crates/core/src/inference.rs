//! Monte Carlo permutation tests for local diagnostics and Moran's I of the
//! deviations.
//!
//! The exchangeable unit is the (predicted, reference) pair: each replicate
//! reassigns pairs to locations by a uniform random permutation. Replicate
//! `i` draws its permutation from a ChaCha8 stream keyed by `(seed, i)`, so
//! results do not depend on how replicates are scheduled.
//!
//! Pseudo p-values follow the add-one convention: the actual outcome is
//! ranked among all `n_permutations + 1` outcomes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diagnostics::{cell_weights, check_grid_size, local_statistic, Columns, SurfaceOptions};
use crate::error::{Error, Result};
use crate::model::{DiagnosticKind, EvaluationGrid, KernelSpec, SampleSet, SamplePoint};
use crate::spatial::{euclidean_distance, SpatialIndex, WeightVector};

/// Smallest permutation count accepted.
pub const MIN_PERMUTATIONS: usize = 19;

/// Two statistics closer than this (relative) count as tied when ranking.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tail {
    #[default]
    TwoSided,
    Upper,
    Lower,
}

impl FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "two_sided" | "two-sided" | "two" | "both" => Ok(Tail::TwoSided),
            "upper" | "greater" => Ok(Tail::Upper),
            "lower" | "less" => Ok(Tail::Lower),
            _ => Err(Error::InvalidConfig(format!("unknown tail {s:?}"))),
        }
    }
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tail::TwoSided => "two_sided",
            Tail::Upper => "upper",
            Tail::Lower => "lower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationConfig {
    pub n_permutations: usize,
    pub seed: u64,
    pub alpha: f64,
    pub tail: Tail,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            n_permutations: 999,
            seed: 0,
            alpha: 0.01,
            tail: Tail::TwoSided,
        }
    }
}

impl PermutationConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_permutations < MIN_PERMUTATIONS {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_PERMUTATIONS} permutations are required, got {}",
                self.n_permutations
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Generator for replicate `replicate` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Uniform random permutation of `0..n` by Fisher–Yates.
pub fn fisher_yates<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Reassigns (predicted, reference) pairs to locations uniformly at random.
/// Ids and coordinates stay in place.
pub fn permute_pairs<R: Rng + ?Sized>(s: &SampleSet, rng: &mut R) -> SampleSet {
    let perm = fisher_yates(s.len(), rng);
    let src = s.points();
    let points = src
        .iter()
        .zip(&perm)
        .map(|(loc, &j)| SamplePoint {
            id: loc.id.clone(),
            x: loc.x,
            y: loc.y,
            predicted: src[j].predicted,
            reference: src[j].reference,
        })
        .collect();
    SampleSet::from_validated(points)
}

fn at_least(value: f64, actual: f64) -> bool {
    value >= actual || (actual - value) <= TIE_TOLERANCE * value.abs().max(actual.abs())
}

fn at_most(value: f64, actual: f64) -> bool {
    value <= actual || (value - actual) <= TIE_TOLERANCE * value.abs().max(actual.abs())
}

/// Running rank counts of permuted outcomes against one actual outcome.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RankCounts {
    /// Permuted outcomes at least as large as the actual one.
    pub upper: usize,
    /// Permuted outcomes at most as large as the actual one.
    pub lower: usize,
    /// Permuted outcomes that were defined at all.
    pub valid: usize,
}

impl RankCounts {
    pub fn record(&mut self, actual: f64, permuted: f64) {
        self.valid += 1;
        if at_least(permuted, actual) {
            self.upper += 1;
        }
        if at_most(permuted, actual) {
            self.lower += 1;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.upper += other.upper;
        self.lower += other.lower;
        self.valid += other.valid;
        self
    }

    /// Pseudo p-value, `G / (valid + 1)` with `G = 1 + count`; the two-sided
    /// value doubles the smaller tail and is capped at 1.
    pub fn p_value(&self, tail: Tail) -> f64 {
        let total = (self.valid + 1) as f64;
        let g_upper = (self.upper + 1) as f64;
        let g_lower = (self.lower + 1) as f64;
        match tail {
            Tail::Upper => g_upper / total,
            Tail::Lower => g_lower / total,
            Tail::TwoSided => (2.0 * g_upper.min(g_lower) / total).min(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationReport {
    pub grid: EvaluationGrid,
    pub kind: DiagnosticKind,
    pub p_values: Vec<Option<f64>>,
    pub significant: Vec<bool>,
    pub config: PermutationConfig,
}

impl PermutationReport {
    /// Significance mask at a different level; missing p is never significant.
    pub fn significant_at(&self, alpha: f64) -> Vec<bool> {
        self.p_values.iter().map(|p| p.is_some_and(|p| p < alpha)).collect()
    }

    pub fn flagged_count(&self) -> usize {
        self.significant.iter().filter(|&&s| s).count()
    }

    pub fn present_count(&self) -> usize {
        self.p_values.iter().filter(|p| p.is_some()).count()
    }
}

/// Permutation test of one local diagnostic at every grid cell.
pub fn local_permutation_test(
    s: &SampleSet,
    grid: &EvaluationGrid,
    spec: &KernelSpec,
    kind: DiagnosticKind,
    cfg: &PermutationConfig,
    opts: &SurfaceOptions,
) -> Result<PermutationReport> {
    let kinds = BTreeSet::from([kind]);
    Ok(local_permutation_tests(s, grid, spec, &kinds, cfg, opts)?.remove(0))
}

/// Permutation tests of several diagnostics sharing the same replicates.
/// Each report is identical to what [`local_permutation_test`] returns for
/// that kind alone.
pub fn local_permutation_tests(
    s: &SampleSet,
    grid: &EvaluationGrid,
    spec: &KernelSpec,
    kinds: &BTreeSet<DiagnosticKind>,
    cfg: &PermutationConfig,
    opts: &SurfaceOptions,
) -> Result<Vec<PermutationReport>> {
    cfg.validate()?;
    check_grid_size(grid, opts)?;
    let kinds: Vec<DiagnosticKind> = kinds.iter().copied().collect();
    let index = SpatialIndex::build(&s.locations());
    let weights = cell_weights(&index, grid, spec);
    let cols = Columns::from_samples(s);

    // (kind slot, weight vector, actual statistic) for every defined cell.
    let mut targets: Vec<(usize, usize, &WeightVector, f64)> = Vec::new();
    for (cell, w) in weights.iter().enumerate() {
        let Some(w) = w else { continue };
        for (slot, &kind) in kinds.iter().enumerate() {
            if let Ok(Some(actual)) = local_statistic(kind, &cols, w, opts.min_points_for_r) {
                targets.push((slot, cell, w, actual));
            }
        }
    }

    let counts = (0..cfg.n_permutations)
        .into_par_iter()
        .fold(
            || vec![RankCounts::default(); targets.len()],
            |mut acc, replicate| {
                let perm = fisher_yates(cols.len(), &mut replicate_rng(cfg.seed, replicate as u64));
                let shuffled = cols.permuted(&perm);
                for (t, &(slot, _, w, actual)) in targets.iter().enumerate() {
                    if let Ok(Some(v)) = local_statistic(kinds[slot], &shuffled, w, opts.min_points_for_r) {
                        acc[t].record(actual, v);
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![RankCounts::default(); targets.len()],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
        );

    let mut p_values = vec![vec![None; grid.n_cells()]; kinds.len()];
    for (&(slot, cell, _, _), c) in targets.iter().zip(&counts) {
        p_values[slot][cell] = Some(c.p_value(cfg.tail));
    }
    Ok(kinds
        .iter()
        .zip(p_values)
        .map(|(&kind, p_values)| {
            let significant = p_values.iter().map(|p| p.is_some_and(|p| p < cfg.alpha)).collect();
            PermutationReport {
                grid: *grid,
                kind,
                p_values,
                significant,
                config: *cfg,
            }
        })
        .collect())
}

/// Weighting options for Moran's I.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MoranOptions {
    /// Scale each row of the inverse-distance-squared weights to sum to one.
    pub row_standardize: bool,
}

/// Dense inverse-distance-squared weight matrix with a zero diagonal.
#[derive(Debug, Clone)]
pub struct MoranWeights {
    n: usize,
    w: Vec<f64>,
    s0: f64,
    symmetric: bool,
}

impl MoranWeights {
    pub fn build(s: &SampleSet, opts: &MoranOptions) -> Result<Self> {
        let n = s.len();
        if n < 3 {
            return Err(Error::TooFewPoints { needed: 3, got: n });
        }
        let pts = s.points();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean_distance(pts[i].location(), pts[j].location());
                if d == 0.0 {
                    return Err(Error::CoincidentPoints(pts[i].id.clone(), pts[j].id.clone()));
                }
                let wij = 1.0 / (d * d);
                w[i * n + j] = wij;
                w[j * n + i] = wij;
            }
        }
        if opts.row_standardize {
            for row in w.chunks_mut(n) {
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
        let s0 = w.iter().sum();
        Ok(Self {
            n,
            w,
            s0,
            symmetric: !opts.row_standardize,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// `sum_i sum_j w_ij z_i z_j`.
    fn quadratic_form(&self, z: &[f64]) -> f64 {
        let n = self.n;
        if self.symmetric {
            let mut acc = 0.0;
            for i in 0..n {
                acc += z[i] * dot(&self.w[i * n + i + 1..(i + 1) * n], &z[i + 1..]);
            }
            2.0 * acc
        } else {
            (0..n).map(|i| z[i] * dot(&self.w[i * n..(i + 1) * n], z)).sum()
        }
    }

    /// Moran's I of already-centred values with sum of squares `ss`.
    fn statistic(&self, centred: &[f64], ss: f64) -> f64 {
        (self.n as f64 / self.s0) * self.quadratic_form(centred) / ss
    }
}

// Four fixed lanes keep the summation order independent of the target.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        lanes[0] += x[0] * y[0];
        lanes[1] += x[1] * y[1];
        lanes[2] += x[2] * y[2];
        lanes[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

fn centred_deviations(s: &SampleSet) -> Result<(Vec<f64>, f64)> {
    let dev = s.deviations();
    let first = dev[0];
    if dev.iter().all(|&d| d == first) {
        return Err(Error::ZeroVariance);
    }
    let mean = dev.iter().sum::<f64>() / dev.len() as f64;
    let centred: Vec<f64> = dev.iter().map(|d| d - mean).collect();
    let ss: f64 = centred.iter().map(|z| z * z).sum();
    if !(ss > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((centred, ss))
}

/// Moran's I of the deviations with raw inverse-distance-squared weights.
pub fn morans_i(s: &SampleSet) -> Result<f64> {
    morans_i_with(s, &MoranOptions::default())
}

pub fn morans_i_with(s: &SampleSet, opts: &MoranOptions) -> Result<f64> {
    let weights = MoranWeights::build(s, opts)?;
    let (centred, ss) = centred_deviations(s)?;
    Ok(weights.statistic(&centred, ss))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoranReport {
    pub i_value: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

/// Moran's I with a permutation p-value from shuffling deviations across
/// locations.
pub fn morans_i_test(s: &SampleSet, cfg: &PermutationConfig) -> Result<MoranReport> {
    morans_i_test_with(s, cfg, &MoranOptions::default())
}

pub fn morans_i_test_with(s: &SampleSet, cfg: &PermutationConfig, opts: &MoranOptions) -> Result<MoranReport> {
    cfg.validate()?;
    let weights = MoranWeights::build(s, opts)?;
    let (centred, ss) = centred_deviations(s)?;
    let actual = weights.statistic(&centred, ss);
    let counts = (0..cfg.n_permutations)
        .into_par_iter()
        .map(|replicate| {
            let perm = fisher_yates(centred.len(), &mut replicate_rng(cfg.seed, replicate as u64));
            let shuffled: Vec<f64> = perm.iter().map(|&j| centred[j]).collect();
            let mut c = RankCounts::default();
            c.record(actual, weights.statistic(&shuffled, ss));
            c
        })
        .reduce(RankCounts::default, RankCounts::merge);
    Ok(MoranReport {
        i_value: actual,
        p_value: counts.p_value(cfg.tail),
        n_permutations: cfg.n_permutations,
        seed: cfg.seed,
    })
}
