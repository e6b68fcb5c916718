use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::io::number::format_significant;
use crate::model::{validate_sample_set, SamplePoint, SampleSet};

const COLUMNS: [&str; 5] = ["id", "x", "y", "predicted", "reference"];

/// Delimited sample file layout. A header row is mandatory; the required
/// columns are located by name (case-insensitive) and extra columns ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleFileFormat {
    pub delimiter: u8,
}

impl Default for SampleFileFormat {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

pub fn read_samples<R: Read>(source: R, fmt: &SampleFileFormat) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(fmt.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let mut positions = [0usize; 5];
    for (slot, name) in COLUMNS.iter().enumerate() {
        positions[slot] = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut points = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |slot: usize| record.get(positions[slot]).unwrap_or("");
        let number = |slot: usize| -> Result<f64> {
            let token = field(slot);
            token.parse::<f64>().map_err(|_| Error::Parse {
                line,
                column: COLUMNS[slot].to_string(),
                token: token.to_string(),
            })
        };
        let point = SamplePoint::new(field(0), number(1)?, number(2)?, number(3)?, number(4)?);
        let at_line = |source| Error::AtLine {
            line,
            source: Box::new(source),
        };
        point.check_finite().map_err(at_line)?;
        if !seen.insert(point.id.clone()) {
            return Err(at_line(Error::DuplicateId(point.id)));
        }
        points.push(point);
    }
    validate_sample_set(points)
}

/// Writes samples as comma-separated text that [`read_samples`] reads back
/// exactly.
pub fn write_samples<W: Write>(samples: &SampleSet, sink: &mut W) -> Result<()> {
    let mut out = String::from("id,x,y,predicted,reference\n");
    for p in samples.points() {
        let fields = [p.x, p.y, p.predicted, p.reference].map(|v| format_significant(v, 17));
        out.push_str(&p.id);
        for f in fields {
            out.push(',');
            out.push_str(&f);
        }
        out.push('\n');
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}
