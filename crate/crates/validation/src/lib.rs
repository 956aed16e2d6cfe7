//! Bookkeeping for the acceptance run in `tests/acceptance.rs`.

use std::time::{Duration, Instant};

/// One named measurement inside a criterion.
#[derive(Clone, Debug)]
pub struct SubCheck {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

/// Collects sub-checks and timing for one numbered criterion.
#[derive(Debug)]
pub struct Criterion {
    pub number: usize,
    pub title: &'static str,
    pub checks: Vec<SubCheck>,
    started: Instant,
    elapsed: Option<Duration>,
}

impl Criterion {
    pub fn start(number: usize, title: &'static str) -> Self {
        Self {
            number,
            title,
            checks: Vec::new(),
            started: Instant::now(),
            elapsed: None,
        }
    }

    pub fn check(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(SubCheck {
            label: label.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// `value <= limit`, with both printed.
    pub fn at_most(&mut self, label: impl Into<String>, value: f64, limit: f64) {
        self.check(label, value <= limit, format!("{value:.3e} <= {limit:.0e}"));
    }

    /// Stop the clock and add a runtime sub-check when `budget` is given.
    pub fn finish(&mut self, budget: Option<Duration>) {
        let elapsed = self.started.elapsed();
        self.elapsed = Some(elapsed);
        if let Some(b) = budget {
            self.check("runtime", elapsed <= b, format!("{:.2} s <= {:.0} s", elapsed.as_secs_f64(), b.as_secs_f64()));
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Detail lines, then the single verdict line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s += &format!("    [{}] {}: {}\n", if c.passed { "ok" } else { "FAIL" }, c.label, c.detail);
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        s += &format!(
            "criterion {} {}: {} ({}/{} checks passed, {:.2} s)\n",
            self.number,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            self.checks.len() - failed,
            self.checks.len(),
            self.elapsed.unwrap_or_default().as_secs_f64()
        );
        s
    }
}
