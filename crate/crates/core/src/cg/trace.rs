use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    LineSearchFailed,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::LineSearchFailed => "line_search_failed",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Diagnostics for iterate `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `f(x_k)`
    pub f: f64,
    /// `‖g_k‖`
    pub grad_norm: f64,
    /// `⟨g_k, η_k⟩`
    pub dir_deriv: f64,
    /// `‖η_k‖`
    pub eta_norm: f64,
    /// `β_k` used to build `η_k`; absent for `k = 0`.
    pub beta: Option<f64>,
    /// Step `α_{k-1}` that produced `x_k`; absent for `k = 0`.
    pub alpha: Option<f64>,
    /// Scale `s_{k-1}` of the transported direction; absent for `k = 0`.
    pub scale: Option<f64>,
    /// `η_k` was reset to `−g_k` because the CG direction was not descent.
    pub fallback: bool,
    /// Cumulative cost evaluations, line-search probes included.
    pub cost_evals: usize,
    /// Cumulative gradient evaluations, line-search probes included.
    pub grad_evals: usize,
    /// `⟨g_k, η_k⟩² / ‖η_k‖²`
    pub zoutendijk_term: f64,
    /// Partial sum of the Zoutendijk terms up to `k`.
    pub zoutendijk_sum: f64,
}

impl TraceRecord {
    /// `⟨g_k, η_k⟩ / ‖g_k‖²`
    pub fn descent_ratio(&self) -> f64 {
        self.dir_deriv / (self.grad_norm * self.grad_norm)
    }
}

/// Full history of one solve. Holds one record per visited iterate, so
/// `records.len() == iterations() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub status: Status,
    /// Reason for a [`Status::LineSearchFailed`] termination.
    pub failure: Option<String>,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> &TraceRecord {
        self.records
            .last()
            .expect("a trace always holds the initial record")
    }

    pub fn final_cost(&self) -> f64 {
        self.last().f
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.last().grad_norm
    }

    /// Writes one JSON object per record.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(serde_json::Error::io)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Parses records written by [`Trace::write_jsonl`]; blank lines are
    /// skipped.
    pub fn read_records<R: BufRead>(r: R) -> Result<Vec<TraceRecord>> {
        let mut out = Vec::new();
        for line in r.lines() {
            let line = line.map_err(serde_json::Error::io)?;
            if !line.trim().is_empty() {
                out.push(serde_json::from_str(&line)?);
            }
        }
        Ok(out)
    }
}
