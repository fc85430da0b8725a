//! Per-episode attention export for offline inspection.
//!
//! One file per episode: a `step,pose_x,pose_y` header, then one line per
//! step carrying those three fields followed by the row-major attention
//! distribution at six significant digits.

use std::io::Write;
use std::path::Path;

use crate::autodiff::AdResult;

/// One step's attention snapshot.
#[derive(Debug, Clone)]
pub struct HeatmapRow {
    pub step: usize,
    pub pose: (i64, i64),
    /// Row-major `H*W` distribution.
    pub alpha: Vec<f64>,
}

pub fn write_heatmap(path: &Path, rows: &[HeatmapRow]) -> AdResult<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "step,pose_x,pose_y")?;
    for row in rows {
        write!(out, "{},{},{}", row.step, row.pose.0, row.pose.1)?;
        for &a in &row.alpha {
            write!(out, ",{:.5e}", a)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a heatmap file back into rows (used by tests and the attention
/// analysis in evaluation reports).
pub fn read_heatmap(path: &Path) -> AdResult<Vec<HeatmapRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "step,pose_x,pose_y" {
        return Err(crate::autodiff::AdError::Argument {
            op: "read_heatmap",
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for line in lines {
        let mut fields = line.split(',');
        let parse_err = || crate::autodiff::AdError::Argument {
            op: "read_heatmap",
            message: format!("malformed line {line:?}"),
        };
        let step = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        let px = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        let py = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        let alpha: Vec<f64> = fields.map(|f| f.parse().map_err(|_| parse_err())).collect::<Result<_, _>>()?;
        rows.push(HeatmapRow { step, pose: (px, py), alpha });
    }
    Ok(rows)
}
