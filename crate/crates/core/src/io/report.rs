use std::io::Write;

use crate::diagnostics::GlobalReport;
use crate::error::Result;
use crate::inference::{MoranReport, PermutationConfig};
use crate::io::number::format_significant;

fn scalar(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format_significant(v, 10))
}

/// Writes the global report as `key value` lines in a fixed order:
/// msd, mae, rmse, r, moran_i, moran_p, n, seed, n_permutations.
///
/// Missing values render as `NA`. When Moran's I is undefined for the data
/// (`moran` is `None`) the seed and permutation count come from `cfg`.
pub fn write_reports<W: Write>(
    global: &GlobalReport,
    moran: Option<&MoranReport>,
    cfg: &PermutationConfig,
    sink: &mut W,
) -> Result<()> {
    let (seed, n_permutations) = moran.map_or((cfg.seed, cfg.n_permutations), |m| (m.seed, m.n_permutations));
    let lines = [
        ("msd", scalar(Some(global.msd))),
        ("mae", scalar(Some(global.mae))),
        ("rmse", scalar(Some(global.rmse))),
        ("r", scalar(global.r)),
        ("moran_i", scalar(moran.map(|m| m.i_value))),
        ("moran_p", scalar(moran.map(|m| m.p_value))),
        ("n", global.n.to_string()),
        ("seed", seed.to_string()),
        ("n_permutations", n_permutations.to_string()),
    ];
    let mut out = String::new();
    for (key, value) in lines {
        out.push_str(key);
        out.push(' ');
        out.push_str(&value);
        out.push('\n');
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(global: &GlobalReport, moran: Option<&MoranReport>) -> String {
        let mut buf = Vec::new();
        write_reports(global, moran, &PermutationConfig::default(), &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn perfect_prediction_report() {
        let g = GlobalReport {
            msd: 0.0,
            mae: 0.0,
            rmse: 0.0,
            r: Some(1.0),
            n: 3,
        };
        let m = MoranReport {
            i_value: -0.25,
            p_value: 0.5,
            n_permutations: 999,
            seed: 42,
        };
        assert_eq!(
            render(&g, Some(&m)),
            "msd 0\nmae 0\nrmse 0\nr 1\nmoran_i -0.25\nmoran_p 0.5\nn 3\nseed 42\nn_permutations 999\n"
        );
    }

    #[test]
    fn missing_scalars_render_na() {
        let g = GlobalReport {
            msd: 3.0,
            mae: 3.0,
            rmse: (29.0f64 / 3.0).sqrt(),
            r: None,
            n: 3,
        };
        let text = render(&g, None);
        assert!(text.contains("\nr NA\nmoran_i NA\nmoran_p NA\n"));
        assert!(text.contains("rmse 3.109126351\n"));
        assert!(text.ends_with("seed 0\nn_permutations 999\n"));
    }
}
