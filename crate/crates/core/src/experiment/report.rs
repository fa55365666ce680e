use std::time::Duration;

use serde::Serialize;

/// How `measured` is compared with `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    /// `|measured - target| / |target| <= tolerance`
    RelativeWithin,
    /// Boolean outcome; `measured` is informational.
    Holds,
    /// Recorded only.
    Report,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub comparison: Comparison,
    pub target: Option<f64>,
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub gated: bool,
    pub pass: bool,
    pub detail: String,
}

impl CheckRecord {
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, Comparison::AtMost, Some(bound), measured, None, measured <= bound)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, Comparison::AtLeast, Some(bound), measured, None, measured >= bound)
    }

    pub fn relative(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        let pass = (measured - target).abs() <= tolerance * target.abs();
        Self::new(name, Comparison::RelativeWithin, Some(target), measured, Some(tolerance), pass)
    }

    pub fn holds(name: impl Into<String>, measured: f64, pass: bool) -> Self {
        Self::new(name, Comparison::Holds, None, measured, None, pass)
    }

    pub fn report(name: impl Into<String>, measured: f64) -> Self {
        let mut c = Self::new(name, Comparison::Report, None, measured, None, true);
        c.gated = false;
        c
    }

    /// A pipeline stage that failed before producing a measurement.
    pub fn error(name: impl Into<String>, err: &crate::Error) -> Self {
        Self {
            name: name.into(),
            comparison: Comparison::Holds,
            target: None,
            measured: None,
            tolerance: None,
            gated: true,
            pass: false,
            detail: err.to_string(),
        }
    }

    fn new(
        name: impl Into<String>,
        comparison: Comparison,
        target: Option<f64>,
        measured: f64,
        tolerance: Option<f64>,
        pass: bool,
    ) -> Self {
        Self {
            name: name.into(),
            comparison,
            target,
            measured: Some(measured).filter(|m| m.is_finite()),
            tolerance,
            gated: true,
            pass: pass && measured.is_finite(),
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Keeps the outcome in the report without letting it decide the exit code.
    pub fn ungated(mut self, reason: impl Into<String>) -> Self {
        self.gated = false;
        let reason = reason.into();
        self.detail = if self.detail.is_empty() {
            reason
        } else {
            format!("{}; {reason}", self.detail)
        };
        self
    }

    /// Ungates when the grid is coarser than the resolution the bound is stated for.
    pub fn gate_from_n(self, n: usize, n_min: usize) -> Self {
        if n < n_min {
            self.ungated(format!("bound stated for n >= {n_min}"))
        } else {
            self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvironmentStamp {
    pub version: String,
    pub seed: u64,
    pub grid_n: usize,
    pub pad_half_width: f64,
    pub k: u32,
}

/// Checks and configuration of one run. Timing lives in a separate file so
/// that reports of identical runs are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub environment: EnvironmentStamp,
    pub checks: Vec<CheckRecord>,
    pub overall_pass: bool,
}

impl RunReport {
    pub fn new(command: &str, environment: EnvironmentStamp) -> Self {
        Self {
            command: command.into(),
            environment,
            checks: Vec::new(),
            overall_pass: true,
        }
    }

    /// Adds a check; names must be unique within a report.
    pub fn push(&mut self, check: CheckRecord) {
        debug_assert!(
            self.checks.iter().all(|c| c.name != check.name),
            "duplicate check {}",
            check.name
        );
        if check.gated && !check.pass {
            self.overall_pass = false;
        }
        self.checks.push(check);
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.gated && !c.pass)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

impl Timing {
    pub fn record(&mut self, stage: &str, elapsed: Duration) {
        let seconds = elapsed.as_secs_f64();
        self.total_seconds += seconds;
        self.stages.push(StageTiming {
            stage: stage.into(),
            seconds,
        });
    }
}
