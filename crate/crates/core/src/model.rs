//! Domain types shared across the crate: samples, kernels, grids and surfaces.
//!
//! Everything here is immutable once constructed. Constructors validate their
//! inputs so downstream code can rely on the invariants without rechecking.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A location in a projected planar coordinate system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// One sample location carrying a predicted and a reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub predicted: f64,
    pub reference: f64,
}

impl SamplePoint {
    pub fn new(id: impl Into<String>, x: f64, y: f64, predicted: f64, reference: f64) -> Self {
        Self {
            id: id.into(),
            x,
            y,
            predicted,
            reference,
        }
    }

    pub fn location(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Signed deviation, predicted minus reference. Positive means over-prediction.
    pub fn deviation(&self) -> f64 {
        self.predicted - self.reference
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        let fields = [
            ("x", self.x),
            ("y", self.y),
            ("predicted", self.predicted),
            ("reference", self.reference),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    id: self.id.clone(),
                    field,
                });
            }
        }
        Ok(())
    }
}

/// A validated, ordered collection of samples.
///
/// All coordinates and values are finite and ids are unique. Coincident
/// locations are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<SamplePoint>,
}

impl SampleSet {
    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn locations(&self) -> Vec<Point> {
        self.points.iter().map(SamplePoint::location).collect()
    }

    pub fn predicted(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.predicted).collect()
    }

    pub fn reference(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.reference).collect()
    }

    pub fn deviations(&self) -> Vec<f64> {
        self.points.iter().map(SamplePoint::deviation).collect()
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Length of the bounding-box diagonal, an upper bound on pairwise distance.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        ((hi.x - lo.x).powi(2) + (hi.y - lo.y).powi(2)).sqrt()
    }

    pub fn into_points(self) -> Vec<SamplePoint> {
        self.points
    }

    /// Builds a set whose points already satisfy the invariants. Used when
    /// values are reassigned between validated points.
    pub(crate) fn from_validated(points: Vec<SamplePoint>) -> Self {
        Self { points }
    }
}

/// Validates raw samples into a [`SampleSet`], preserving input order.
pub fn validate_sample_set(raw: Vec<SamplePoint>) -> Result<SampleSet> {
    let mut seen = HashSet::with_capacity(raw.len());
    for p in &raw {
        p.check_finite()?;
        if !seen.insert(p.id.as_str()) {
            return Err(Error::DuplicateId(p.id.clone()));
        }
    }
    if raw.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: raw.len(),
        });
    }
    Ok(SampleSet { points: raw })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Bisquare,
}

/// Kernel radius rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Constant radius in coordinate units.
    Fixed(f64),
    /// Radius enclosing `ceil(f * n)` nearest samples.
    AdaptiveFraction(f64),
    /// Radius enclosing `k` nearest samples.
    AdaptiveCount(usize),
}

impl Bandwidth {
    pub fn validate(self) -> Result<Self> {
        match self {
            Bandwidth::Fixed(b) if !(b.is_finite() && b > 0.0) => Err(Error::NonPositiveBandwidth(b)),
            Bandwidth::AdaptiveFraction(f) if !(f > 0.0 && f <= 1.0) => Err(Error::InvalidKernel(
                format!("adaptive fraction must be in (0, 1], got {f}"),
            )),
            Bandwidth::AdaptiveCount(k) if k < 2 => Err(Error::InvalidKernel(format!(
                "adaptive neighbour count must be at least 2, got {k}"
            ))),
            ok => Ok(ok),
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Fixed(b) => write!(f, "fixed:{b}"),
            Bandwidth::AdaptiveFraction(x) => write!(f, "adaptive:{x}"),
            Bandwidth::AdaptiveCount(k) => write!(f, "knn:{k}"),
        }
    }
}

impl FromStr for Bandwidth {
    type Err = Error;

    /// Parses `fixed:<distance>`, `adaptive:<fraction>` or `knn:<count>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidKernel(format!("cannot parse bandwidth {s:?}"));
        let (mode, value) = s.split_once(':').ok_or_else(bad)?;
        let bw = match mode.trim().to_ascii_lowercase().as_str() {
            "fixed" => Bandwidth::Fixed(value.trim().parse().map_err(|_| bad())?),
            "adaptive" => Bandwidth::AdaptiveFraction(value.trim().parse().map_err(|_| bad())?),
            "knn" | "count" => Bandwidth::AdaptiveCount(value.trim().parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        bw.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: Bandwidth,
}

impl KernelSpec {
    pub fn bisquare(bandwidth: Bandwidth) -> Result<Self> {
        Ok(Self {
            family: KernelFamily::Bisquare,
            bandwidth: bandwidth.validate()?,
        })
    }

    pub fn fixed(b: f64) -> Result<Self> {
        Self::bisquare(Bandwidth::Fixed(b))
    }

    pub fn adaptive_fraction(f: f64) -> Result<Self> {
        Self::bisquare(Bandwidth::AdaptiveFraction(f))
    }

    pub fn adaptive_count(k: usize) -> Result<Self> {
        Self::bisquare(Bandwidth::AdaptiveCount(k))
    }
}

/// Number of neighbours an adaptive kernel must enclose for a dataset of `n`
/// points: `ceil(f * n)` or `k`, clamped to `[2, n]`.
pub fn resolve_bandwidth_count(spec: &KernelSpec, n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let k = match spec.bandwidth {
        Bandwidth::Fixed(_) => return Err(Error::WrongBandwidthKind),
        Bandwidth::AdaptiveFraction(f) => {
            let raw = f * n as f64;
            // 0.3 * 10 is 3.0000000000000004 in binary; snap products that are
            // an integer up to rounding so ceil does not overshoot.
            let nearest = raw.round();
            let target = if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
                nearest
            } else {
                raw.ceil()
            };
            target as usize
        }
        Bandwidth::AdaptiveCount(k) => k,
    };
    Ok(k.clamp(2, n))
}

/// Regular lattice of evaluation centers.
///
/// Cell `(col, row)` has its center at
/// `(x_min + (col + 0.5) * cell_size, y_min + (row + 0.5) * cell_size)`, so
/// row 0 is the southernmost row. Cell values are stored row-major in that
/// order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationGrid {
    x_min: f64,
    y_min: f64,
    cell_size: f64,
    n_cols: usize,
    n_rows: usize,
}

impl EvaluationGrid {
    pub fn new(x_min: f64, y_min: f64, cell_size: f64, n_cols: usize, n_rows: usize) -> Result<Self> {
        if !(x_min.is_finite() && y_min.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if n_cols == 0 || n_rows == 0 {
            return Err(Error::InvalidGrid(format!(
                "grid must have at least one cell, got {n_cols}x{n_rows}"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            cell_size,
            n_cols,
            n_rows,
        })
    }

    /// Grid over an explicit extent; the last row/column may overhang the
    /// upper edge so the whole extent is covered.
    pub fn from_extent(lo: Point, hi: Point, cell_size: f64) -> Result<Self> {
        if !(hi.x > lo.x && hi.y > lo.y) {
            return Err(Error::InvalidGrid("extent must have positive width and height".into()));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        let n_cols = ((hi.x - lo.x) / cell_size).ceil().max(1.0) as usize;
        let n_rows = ((hi.y - lo.y) / cell_size).ceil().max(1.0) as usize;
        Self::new(lo.x, lo.y, cell_size, n_cols, n_rows)
    }

    /// Grid over the sample bounding box padded by `pad` of its larger side
    /// on every edge, with the larger side split into `target` cells.
    pub fn covering(samples: &SampleSet, pad: f64, target: usize) -> Result<Self> {
        if target == 0 {
            return Err(Error::InvalidGrid("target cell count must be positive".into()));
        }
        let (lo, hi) = samples.bounds();
        let mut span = (hi.x - lo.x).max(hi.y - lo.y);
        if span <= 0.0 {
            span = 1.0;
        }
        let margin = span * pad;
        let lo = Point::new(lo.x - margin, lo.y - margin);
        let width = (hi.x - lo.x) + margin;
        let height = (hi.y - lo.y) + margin;
        let cell_size = width.max(height) / target as f64;
        let n_cols = ((width / cell_size - 1e-9).ceil() as usize).clamp(1, target);
        let n_rows = ((height / cell_size - 1e-9).ceil() as usize).clamp(1, target);
        Self::new(lo.x, lo.y, cell_size, n_cols, n_rows)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cells(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.x_min + (col as f64 + 0.5) * self.cell_size,
            self.y_min + (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Center of the cell at row-major position `idx`.
    pub fn center_at(&self, idx: usize) -> Point {
        self.center(idx % self.n_cols, idx / self.n_cols)
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.n_cols + col
    }

    pub fn centers(&self) -> Vec<Point> {
        (0..self.n_cells()).map(|i| self.center_at(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagnosticKind {
    GwMsd,
    GwMae,
    GwRmse,
    GwR,
}

impl DiagnosticKind {
    pub const ALL: [DiagnosticKind; 4] = [
        DiagnosticKind::GwMsd,
        DiagnosticKind::GwMae,
        DiagnosticKind::GwRmse,
        DiagnosticKind::GwR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DiagnosticKind::GwMsd => "gw_msd",
            DiagnosticKind::GwMae => "gw_mae",
            DiagnosticKind::GwRmse => "gw_rmse",
            DiagnosticKind::GwR => "gw_r",
        }
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiagnosticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let name = lower.strip_prefix("gw_").unwrap_or(&lower);
        match name {
            "msd" => Ok(DiagnosticKind::GwMsd),
            "mae" => Ok(DiagnosticKind::GwMae),
            "rmse" => Ok(DiagnosticKind::GwRmse),
            "r" | "cor" => Ok(DiagnosticKind::GwR),
            _ => Err(Error::InvalidConfig(format!("unknown diagnostic kind {s:?}"))),
        }
    }
}

/// Per-cell values of one local diagnostic. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSurface {
    pub grid: EvaluationGrid,
    pub kind: DiagnosticKind,
    pub kernel: KernelSpec,
    pub values: Vec<Option<f64>>,
}

impl DiagnosticSurface {
    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        self.values[self.grid.index(col, row)]
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// `(min, max)` over non-missing cells.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.present().fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Mean and population standard deviation over non-missing cells.
    pub fn mean_sd(&self) -> Option<(f64, f64)> {
        let vals: Vec<f64> = self.present().collect();
        if vals.is_empty() {
            return None;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some((mean, var.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(n: usize) -> Vec<SamplePoint> {
        (0..n)
            .map(|i| SamplePoint::new(format!("p{i}"), i as f64, 0.0, i as f64, 1.0))
            .collect()
    }

    #[test]
    fn validate_passes_finite_unique_points() {
        let set = validate_sample_set(pts(3)).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.points()[2].id, "p2");
    }

    #[test]
    fn validate_rejects_nan() {
        let mut raw = pts(3);
        raw[1].predicted = f64::NAN;
        match validate_sample_set(raw) {
            Err(Error::NonFinite { id, field }) => {
                assert_eq!(id, "p1");
                assert_eq!(field, "predicted");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_infinite_coordinate() {
        let mut raw = pts(3);
        raw[0].y = f64::INFINITY;
        assert!(matches!(
            validate_sample_set(raw),
            Err(Error::NonFinite { field: "y", .. })
        ));
    }

    #[test]
    fn validate_rejects_duplicate_ids() {
        let mut raw = pts(3);
        raw[0].id = "p1".into();
        assert!(matches!(validate_sample_set(raw), Err(Error::DuplicateId(id)) if id == "p1"));
    }

    #[test]
    fn validate_rejects_small_sets() {
        assert!(matches!(
            validate_sample_set(pts(1)),
            Err(Error::TooFewPoints { got: 1, .. })
        ));
        assert!(matches!(
            validate_sample_set(vec![]),
            Err(Error::TooFewPoints { got: 0, .. })
        ));
    }

    #[test]
    fn validate_allows_coincident_points() {
        let mut raw = pts(3);
        raw[1].x = raw[0].x;
        assert!(validate_sample_set(raw).is_ok());
    }

    #[test]
    fn validate_is_idempotent() {
        let once = validate_sample_set(pts(5)).unwrap();
        let twice = validate_sample_set(once.clone().into_points()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn bandwidth_count_examples() {
        let f = |x| KernelSpec::adaptive_fraction(x).unwrap();
        assert_eq!(resolve_bandwidth_count(&f(0.10), 550).unwrap(), 55);
        assert_eq!(resolve_bandwidth_count(&f(1.0), 7).unwrap(), 7);
        assert_eq!(resolve_bandwidth_count(&f(0.05), 10).unwrap(), 2);
        // 0.3 * 10 rounds up to 3.0000000000000004 in f64.
        assert_eq!(resolve_bandwidth_count(&f(0.3), 10).unwrap(), 3);
        assert_eq!(resolve_bandwidth_count(&f(0.31), 10).unwrap(), 4);
    }

    #[test]
    fn bandwidth_count_clamps_counts() {
        let k = KernelSpec::adaptive_count(50).unwrap();
        assert_eq!(resolve_bandwidth_count(&k, 10).unwrap(), 10);
        let k = KernelSpec::adaptive_count(3).unwrap();
        assert_eq!(resolve_bandwidth_count(&k, 10).unwrap(), 3);
    }

    #[test]
    fn bandwidth_count_rejects_fixed() {
        let k = KernelSpec::fixed(10.0).unwrap();
        assert!(matches!(
            resolve_bandwidth_count(&k, 10),
            Err(Error::WrongBandwidthKind)
        ));
    }

    #[test]
    fn kernel_spec_validation() {
        assert!(KernelSpec::fixed(0.0).is_err());
        assert!(KernelSpec::fixed(f64::NAN).is_err());
        assert!(KernelSpec::adaptive_fraction(0.0).is_err());
        assert!(KernelSpec::adaptive_fraction(1.5).is_err());
        assert!(KernelSpec::adaptive_count(1).is_err());
    }

    #[test]
    fn bandwidth_parsing() {
        assert_eq!("adaptive:0.10".parse::<Bandwidth>().unwrap(), Bandwidth::AdaptiveFraction(0.10));
        assert_eq!("fixed:2000".parse::<Bandwidth>().unwrap(), Bandwidth::Fixed(2000.0));
        assert_eq!("knn:55".parse::<Bandwidth>().unwrap(), Bandwidth::AdaptiveCount(55));
        assert!("fixed:-1".parse::<Bandwidth>().is_err());
        assert!("gaussian:3".parse::<Bandwidth>().is_err());
        assert!("adaptive".parse::<Bandwidth>().is_err());
    }

    #[test]
    fn grid_centers_are_inside_extent() {
        let g = EvaluationGrid::new(10.0, 20.0, 2.0, 3, 2).unwrap();
        assert_eq!(g.center(0, 0), Point::new(11.0, 21.0));
        assert_eq!(g.center(2, 1), Point::new(15.0, 23.0));
        assert_eq!(g.center_at(g.index(2, 1)), g.center(2, 1));
        assert_eq!(g.n_cells(), 6);
    }

    #[test]
    fn grid_rejects_degenerate_shapes() {
        assert!(EvaluationGrid::new(0.0, 0.0, 0.0, 1, 1).is_err());
        assert!(EvaluationGrid::new(0.0, 0.0, 1.0, 0, 1).is_err());
    }

    #[test]
    fn covering_grid_contains_all_samples() {
        let raw = vec![
            SamplePoint::new("a", 0.0, 0.0, 1.0, 1.0),
            SamplePoint::new("b", 100.0, 50.0, 1.0, 1.0),
        ];
        let set = validate_sample_set(raw).unwrap();
        let g = EvaluationGrid::covering(&set, 0.05, 100).unwrap();
        assert_eq!(g.n_cols(), 100);
        assert_eq!(g.n_rows(), 55);
        assert!(g.x_min() < 0.0 && g.y_min() < 0.0);
        assert!(g.x_min() + g.cell_size() * g.n_cols() as f64 >= 100.0);
        assert!(g.y_min() + g.cell_size() * g.n_rows() as f64 >= 50.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in DiagnosticKind::ALL {
            assert_eq!(kind.name().parse::<DiagnosticKind>().unwrap(), kind);
        }
        assert!("gw_bias".parse::<DiagnosticKind>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn bandwidth_count_is_monotone(f1 in 0.001f64..1.0, df in 0.0f64..0.5, n1 in 2usize..2000, dn in 0usize..500) {
            let f2 = (f1 + df).min(1.0);
            let a = resolve_bandwidth_count(&KernelSpec::adaptive_fraction(f1).unwrap(), n1).unwrap();
            let b = resolve_bandwidth_count(&KernelSpec::adaptive_fraction(f2).unwrap(), n1).unwrap();
            let c = resolve_bandwidth_count(&KernelSpec::adaptive_fraction(f1).unwrap(), n1 + dn).unwrap();
            proptest::prop_assert!(a <= b);
            proptest::prop_assert!(a <= c);
        }
    }
}
