//! Shared helpers for the acceptance checks.

use std::f64::consts::PI;
use std::io::Write;

/// Outcome of one criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: u32, title: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            id,
            title,
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("[{tag}] criterion {:2} {}: {}", self.id, self.title, self.detail)
    }

    /// Writes the line past the test harness capture, then fails the test if needed.
    pub fn emit(&self) {
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err, "\n{}", self.line());
        let _ = err.flush();
        assert!(self.pass, "{}", self.line());
    }
}

/// C_j by term-wise integration of ln tan(x/4) = −2 Σ_{m odd} cos(mx/2)/m against sin(jx).
pub fn series_c(j: usize) -> f64 {
    let j = j as f64;
    let mut sum = 0.0;
    let mut m = 1.0;
    while m < 2e6 {
        sum += 1.0 / (m * (4.0 * j * j - m * m));
        m += 2.0;
    }
    sum -= 1.0 / (4.0 * m * m);
    -8.0 * j / PI * sum
}
