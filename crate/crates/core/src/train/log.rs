use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// One evaluation point of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogEntry {
    pub step: usize,
    /// Mean training loss over the steps since the previous entry.
    pub loss: f64,
    pub eval_sgcs: f64,
    /// Running maximum of `eval_sgcs`.
    pub best_sgcs: f64,
    /// Milliseconds since the run started, or 0 when wall time is not recorded.
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceLog {
    pub entries: Vec<LogEntry>,
}

impl ConvergenceLog {
    /// Appends an entry, keeping `best_sgcs` a running maximum.
    pub fn push(&mut self, step: usize, loss: f64, eval_sgcs: f64, wall_ms: u64) {
        if let Some(last) = self.entries.last() {
            assert!(step > last.step, "log steps must increase");
        }
        let best = self.best().map_or(eval_sgcs, |b| b.max(eval_sgcs));
        self.entries.push(LogEntry {
            step,
            loss,
            eval_sgcs,
            best_sgcs: best,
            wall_ms,
        });
    }

    pub fn best(&self) -> Option<f64> {
        self.entries.last().map(|e| e.best_sgcs)
    }

    /// First logged step whose best-so-far SGCS reaches `threshold`.
    pub fn steps_to_reach(&self, threshold: f64) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.best_sgcs >= threshold)
            .map(|e| e.step)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for e in &self.entries {
            out.serialize(e).map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_best_and_threshold() {
        let mut log = ConvergenceLog::default();
        for (s, v) in [(0, 0.2), (10, 0.5), (20, 0.4), (30, 0.7)] {
            log.push(s, -v, v, 0);
        }
        let best: Vec<f64> = log.entries.iter().map(|e| e.best_sgcs).collect();
        assert_eq!(best, vec![0.2, 0.5, 0.5, 0.7]);
        assert_eq!(log.steps_to_reach(0.45), Some(10));
        assert_eq!(log.steps_to_reach(0.9), None);
    }

    #[test]
    fn csv_header_and_rows() {
        let mut log = ConvergenceLog::default();
        log.push(0, -0.25, 0.25, 0);
        log.push(5, -0.5, 0.5, 12);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "step,loss,eval_sgcs,best_sgcs,wall_ms\n0,-0.25,0.25,0.25,0\n5,-0.5,0.5,0.5,12\n"
        );
    }

    #[test]
    #[should_panic]
    fn steps_must_increase() {
        let mut log = ConvergenceLog::default();
        log.push(3, 0.0, 0.0, 0);
        log.push(3, 0.0, 0.0, 0);
    }
}
