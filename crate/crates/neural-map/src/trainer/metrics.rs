//! Training metrics rows and their CSV form.

use crate::autodiff::{AdError, AdResult};

/// One line of the training log. Episode aggregates cover the most recent
/// completed episodes (a sliding window); loss figures come from the
/// update that closed the row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub env_steps: u64,
    pub mean_return: f64,
    pub success_rate: f64,
    pub mean_length: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad_norm: f64,
    /// Seconds since training started. The only nondeterministic column;
    /// comparisons between runs must ignore it.
    pub wall_clock_s: f64,
}

pub const CSV_HEADER: &str =
    "env_steps,mean_return,success_rate,mean_length,policy_loss,value_loss,entropy,grad_norm,wall_clock_s";

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.3}",
            self.env_steps,
            self.mean_return,
            self.success_rate,
            self.mean_length,
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.grad_norm,
            self.wall_clock_s
        )
    }

    pub fn from_csv(line: &str) -> AdResult<MetricsRow> {
        let bad = |message: String| AdError::Argument { op: "metrics-csv", message };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 9 {
            return Err(bad(format!("expected 9 fields, got {}", fields.len())));
        }
        let num = |s: &str| -> AdResult<f64> {
            s.parse().map_err(|e| bad(format!("bad number {s:?}: {e}")))
        };
        Ok(MetricsRow {
            env_steps: fields[0]
                .parse()
                .map_err(|e| bad(format!("bad step count {:?}: {e}", fields[0])))?,
            mean_return: num(fields[1])?,
            success_rate: num(fields[2])?,
            mean_length: num(fields[3])?,
            policy_loss: num(fields[4])?,
            value_loss: num(fields[5])?,
            entropy: num(fields[6])?,
            grad_norm: num(fields[7])?,
            wall_clock_s: num(fields[8])?,
        })
    }

    /// Equality over every deterministic column.
    pub fn same_ignoring_clock(&self, other: &MetricsRow) -> bool {
        let mut a = *self;
        let mut b = *other;
        a.wall_clock_s = 0.0;
        b.wall_clock_s = 0.0;
        a == b
    }
}

impl std::fmt::Display for MetricsRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_csv())
    }
}
