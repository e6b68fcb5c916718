//! Sample ingestion, ASCII grid rasters and report documents.

mod ascii_grid;
mod number;
mod report;
mod samples;

pub use ascii_grid::{read_ascii_grid, write_mask, write_p_values, write_surface, write_values, GridRaster, NODATA};
pub use number::format_significant;
pub use report::write_reports;
pub use samples::{read_samples, write_samples, SampleFileFormat};
