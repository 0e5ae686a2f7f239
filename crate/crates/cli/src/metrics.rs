use std::io::Write;

use anyhow::Result;
use sdfuzz::fuzz::GenerationMetrics;

/// One row per generation, header first.
pub fn write_metrics<W: Write>(out: W, generations: &[GenerationMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for g in generations {
        w.serialize(g)?;
    }
    w.flush()?;
    Ok(())
}
