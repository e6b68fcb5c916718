//! ESRI ASCII grid reading and writing.
//!
//! Layout: six header lines (`ncols`, `nrows`, `xllcorner`, `yllcorner`,
//! `cellsize`, `NODATA_value`), then `nrows` lines of `ncols`
//! space-separated values, northernmost row first. Missing cells are written
//! as `-9999` and numbers with 17 significant digits.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::inference::PermutationReport;
use crate::io::number::format_significant;
use crate::model::{DiagnosticSurface, EvaluationGrid};

pub const NODATA: f64 = -9999.0;

const HEADER_KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value"];

/// Raster contents as read back from disk, rows stored south to north like
/// [`EvaluationGrid`] cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRaster {
    pub grid: EvaluationGrid,
    pub values: Vec<Option<f64>>,
}

/// Writes row-major (south-first) cell values as an ASCII grid.
pub fn write_values<W: Write>(grid: &EvaluationGrid, values: &[Option<f64>], sink: &mut W) -> Result<()> {
    assert_eq!(values.len(), grid.n_cells(), "value count must match the grid");
    let mut out = String::with_capacity(grid.n_cells() * 20 + 128);
    let header = [
        grid.n_cols().to_string(),
        grid.n_rows().to_string(),
        format_significant(grid.x_min(), 17),
        format_significant(grid.y_min(), 17),
        format_significant(grid.cell_size(), 17),
        format_significant(NODATA, 17),
    ];
    for (key, value) in HEADER_KEYS.iter().zip(header) {
        out.push_str(key);
        out.push(' ');
        out.push_str(&value);
        out.push('\n');
    }
    for row in (0..grid.n_rows()).rev() {
        let start = row * grid.n_cols();
        let line: Vec<String> = values[start..start + grid.n_cols()]
            .iter()
            .map(|v| format_significant(v.unwrap_or(NODATA), 17))
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_surface<W: Write>(surface: &DiagnosticSurface, sink: &mut W) -> Result<()> {
    write_values(&surface.grid, &surface.values, sink)
}

pub fn write_p_values<W: Write>(report: &PermutationReport, sink: &mut W) -> Result<()> {
    write_values(&report.grid, &report.p_values, sink)
}

/// Writes the significance mask as 0/1 cells.
pub fn write_mask<W: Write>(report: &PermutationReport, sink: &mut W) -> Result<()> {
    let values: Vec<Option<f64>> = report
        .p_values
        .iter()
        .zip(&report.significant)
        .map(|(p, &s)| p.map(|_| if s { 1.0 } else { 0.0 }))
        .collect();
    write_values(&report.grid, &values, sink)
}

fn header_value(line: Option<std::io::Result<String>>, key: &str) -> Result<String> {
    let line = line.ok_or_else(|| Error::GridFormat(format!("missing {key} header")))??;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some(k), Some(v)) if k.eq_ignore_ascii_case(key) => Ok(v.to_string()),
        _ => Err(Error::GridFormat(format!("expected {key} header, found {line:?}"))),
    }
}

fn parse<T: std::str::FromStr>(token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::GridFormat(format!("cannot parse {what} {token:?}")))
}

/// Reads an ASCII grid. Cells equal to the file's NODATA value become `None`.
pub fn read_ascii_grid<R: Read>(source: R) -> Result<GridRaster> {
    let mut lines = BufReader::new(source).lines();
    let mut header = Vec::with_capacity(6);
    for key in HEADER_KEYS {
        header.push(header_value(lines.next(), key)?);
    }
    let n_cols: usize = parse(&header[0], "ncols")?;
    let n_rows: usize = parse(&header[1], "nrows")?;
    let x_min: f64 = parse(&header[2], "xllcorner")?;
    let y_min: f64 = parse(&header[3], "yllcorner")?;
    let cell_size: f64 = parse(&header[4], "cellsize")?;
    let nodata: f64 = parse(&header[5], "NODATA_value")?;
    let grid = EvaluationGrid::new(x_min, y_min, cell_size, n_cols, n_rows)?;

    let mut file_order = Vec::with_capacity(grid.n_cells());
    for line in lines {
        for token in line?.split_whitespace() {
            let v: f64 = parse(token, "cell value")?;
            file_order.push(if v == nodata { None } else { Some(v) });
        }
    }
    if file_order.len() != grid.n_cells() {
        return Err(Error::GridFormat(format!(
            "expected {} cell values, found {}",
            grid.n_cells(),
            file_order.len()
        )));
    }
    let mut values = Vec::with_capacity(grid.n_cells());
    for row in file_order.chunks(n_cols).rev() {
        values.extend_from_slice(row);
    }
    Ok(GridRaster { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiagnosticKind, KernelSpec};
    use proptest::prelude::*;

    fn surface(grid: EvaluationGrid, values: Vec<Option<f64>>) -> DiagnosticSurface {
        DiagnosticSurface {
            grid,
            kind: DiagnosticKind::GwMae,
            kernel: KernelSpec::adaptive_fraction(0.1).unwrap(),
            values,
        }
    }

    fn render(s: &DiagnosticSurface) -> String {
        let mut buf = Vec::new();
        write_surface(s, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn mask_keeps_missing_cells_missing() {
        let report = PermutationReport {
            grid: EvaluationGrid::new(0.0, 0.0, 1.0, 3, 1).unwrap(),
            kind: DiagnosticKind::GwMsd,
            p_values: vec![Some(0.002), None, Some(0.5)],
            significant: vec![true, false, false],
            config: crate::inference::PermutationConfig::with_seed(1),
        };
        let mut buf = Vec::new();
        write_mask(&report, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().last(), Some("1 -9999 0"));
    }

    #[test]
    fn single_zero_cell() {
        let g = EvaluationGrid::new(0.0, 0.0, 1.0, 1, 1).unwrap();
        assert_eq!(
            render(&surface(g, vec![Some(0.0)])),
            "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n0\n"
        );
    }

    #[test]
    fn missing_cell_and_row_order() {
        // Row 0 is south, so it is written last.
        let g = EvaluationGrid::new(100.0, 200.0, 0.5, 2, 2).unwrap();
        let text = render(&surface(g, vec![Some(1.0), None, Some(3.25), Some(4.0)]));
        let body: Vec<&str> = text.lines().skip(6).collect();
        assert_eq!(body, vec!["3.25 4", "1 -9999"]);
        assert!(text.contains("xllcorner 100\nyllcorner 200\ncellsize 0.5\n"));
    }

    #[test]
    fn rejects_truncated_files() {
        let text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n3\n";
        assert!(matches!(read_ascii_grid(text.as_bytes()), Err(Error::GridFormat(_))));
        let text = "ncols 2\nnrows 2\nxllcorner 0\n";
        assert!(matches!(read_ascii_grid(text.as_bytes()), Err(Error::GridFormat(_))));
    }

    proptest! {
        #[test]
        fn write_read_write_is_stable(
            cols in 1usize..6,
            rows in 1usize..6,
            x0 in -1e6f64..1e6,
            cs in 0.001f64..1e4,
            seed in proptest::collection::vec(proptest::option::weighted(0.8, -1e9f64..1e9), 36),
        ) {
            let g = EvaluationGrid::new(x0, -x0 / 3.0, cs, cols, rows).unwrap();
            let values: Vec<Option<f64>> = seed.into_iter().take(cols * rows).collect();
            prop_assume!(values.len() == cols * rows);
            let s = surface(g, values.clone());
            let first = render(&s);
            let back = read_ascii_grid(first.as_bytes()).unwrap();
            prop_assert_eq!(back.grid, g);
            for (a, b) in back.values.iter().zip(&values) {
                match (a, b) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-10 * b.abs()),
                    (None, None) => {}
                    _ => prop_assert!(false, "missing mask differs"),
                }
            }
            let second = render(&surface(back.grid, back.values));
            prop_assert_eq!(first, second);
        }
    }
}
