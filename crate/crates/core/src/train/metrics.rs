//! Per-epoch metrics as CSV.

use std::io::Write;

use super::epoch::EpochMetrics;
use crate::error::Result;

pub const SCHEMA_LINE: &str = "# metrics-v1";
pub const HEADER: &str = "epoch,split,loss,bit_error,sample_error,wall_seconds";

/// Writes the schema line and header on creation, then one row per call.
pub struct MetricsWriter<W: Write> {
    out: W,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{SCHEMA_LINE}")?;
        writeln!(out, "{HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    /// Continues an existing file without rewriting the header.
    pub fn append(out: W) -> Self {
        Self { out }
    }

    pub fn row(&mut self, epoch: usize, split: &str, m: &EpochMetrics) -> Result<()> {
        writeln!(
            self.out,
            "{epoch},{split},{:.6},{:.6},{:.6},{:.3}",
            m.loss, m.bit_error, m.sample_error, m.wall_seconds
        )?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
