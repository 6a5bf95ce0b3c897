//! Run-level report: every suite, every negative control and the verdict.

use std::path::Path;

use serde::Serialize;

use crate::checks::{CheckReport, Status};
use crate::error::Result;
use crate::modules::ModuleFingerprint;

pub const SCHEMA_VERSION: u32 = 1;

/// Whether a suite decides the run or only records the outcome of an
/// alternative reading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteRole {
    Check,
    Scan,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub role: SuiteRole,
    pub status: Status,
    pub failure_count: usize,
    #[serde(flatten)]
    pub check: CheckReport,
}

impl SuiteReport {
    pub fn new(check: CheckReport, role: SuiteRole) -> Self {
        let failure_count = check.failure_count();
        let status = if failure_count == 0 { Status::Pass } else { Status::Fail };
        SuiteReport { role, status, failure_count, check }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlStatus {
    FailedAsExpected,
    PassedUnexpectedly,
}

#[derive(Clone, Debug, Serialize)]
pub struct NegativeControl {
    pub suite: String,
    pub mutation: String,
    pub status: ControlStatus,
    pub failing_instances: usize,
    pub total_instances: usize,
    pub check: CheckReport,
}

/// A run-level conclusion drawn from several suites, e.g. which of several
/// readings passes.
#[derive(Clone, Debug, Serialize)]
pub struct Finding {
    pub name: String,
    pub value: String,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Overall {
    pub status: Status,
    pub exit_code: i32,
    pub failing_suites: Vec<String>,
    pub aborted_by: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport<C: Serialize> {
    pub schema_version: u32,
    pub run_config: C,
    pub module_fingerprints: Vec<ModuleFingerprint>,
    pub suites: Vec<SuiteReport>,
    pub negative_controls: Vec<NegativeControl>,
    pub findings: Vec<Finding>,
    pub overall: Overall,
}

impl<C: Serialize> RunReport<C> {
    pub fn new(run_config: C) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            run_config,
            module_fingerprints: Vec::new(),
            suites: Vec::new(),
            negative_controls: Vec::new(),
            findings: Vec::new(),
            overall: Overall { status: Status::Pass, exit_code: 0, failing_suites: Vec::new(), aborted_by: None },
        }
    }

    fn note_module(&mut self, fp: &ModuleFingerprint) {
        if !self.module_fingerprints.contains(fp) {
            self.module_fingerprints.push(*fp);
        }
    }

    pub fn push_suite(&mut self, check: CheckReport, role: SuiteRole) -> &SuiteReport {
        self.note_module(&check.module);
        self.suites.push(SuiteReport::new(check, role));
        self.suites.last().expect("just pushed")
    }

    /// Records a mutated run; returns whether it failed as it must.
    pub fn push_control(&mut self, suite: &str, mutation: &str, check: CheckReport) -> bool {
        self.note_module(&check.module);
        let failing = check.failure_count();
        let status = if failing > 0 { ControlStatus::FailedAsExpected } else { ControlStatus::PassedUnexpectedly };
        self.negative_controls.push(NegativeControl {
            suite: suite.to_string(),
            mutation: mutation.to_string(),
            status,
            failing_instances: failing,
            total_instances: check.instances.len(),
            check,
        });
        failing > 0
    }

    pub fn push_finding(&mut self, name: &str, value: String, ok: bool) {
        self.findings.push(Finding { name: name.to_string(), value, ok });
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.check.name == name)
    }

    /// Sets the verdict: exit 0 iff every checking suite and finding passes and
    /// every negative control fails.
    pub fn finalize(&mut self) {
        let mut failing: Vec<String> = self
            .suites
            .iter()
            .filter(|s| s.role == SuiteRole::Check && s.status == Status::Fail)
            .map(|s| s.check.name.clone())
            .collect();
        failing.extend(self.findings.iter().filter(|f| !f.ok).map(|f| format!("finding {}", f.name)));
        failing.extend(
            self.negative_controls
                .iter()
                .filter(|c| c.status == ControlStatus::PassedUnexpectedly)
                .map(|c| format!("control {} ({})", c.suite, c.mutation)),
        );
        let ok = failing.is_empty() && self.overall.aborted_by.is_none();
        self.overall.status = if ok { Status::Pass } else { Status::Fail };
        self.overall.exit_code = if ok { 0 } else { 1 };
        self.overall.failing_suites = failing;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::InstanceResult;
    use crate::coeffs::{make_param_point, EpsConvention, ModuleFlavor};
    use crate::modules::{build_module, TruncatedModule};
    use crate::rational::Rational;

    fn module() -> TruncatedModule {
        let p = make_param_point(
            Rational::new(3, 7),
            Rational::new(5, 11),
            ModuleFlavor::Evaluation,
            3,
            EpsConvention::Maim,
        )
        .unwrap();
        build_module(3, 1, 1, p).unwrap()
    }

    fn check(name: &str, statuses: &[Status]) -> CheckReport {
        let mut c = CheckReport::new(name, &module());
        for s in statuses {
            c.instances.push(InstanceResult {
                relation: "r".into(),
                indices: Default::default(),
                status: *s,
                source_degree: 1,
                residual_witness: None,
            });
        }
        c
    }

    #[test]
    fn passing_run_exits_zero() {
        let mut r = RunReport::new("cfg");
        r.push_suite(check("a", &[Status::Pass]), SuiteRole::Check);
        r.push_suite(check("b", &[Status::Fail]), SuiteRole::Scan);
        assert!(r.push_control("a", "flip", check("a", &[Status::Fail, Status::Pass])));
        r.finalize();
        assert_eq!(r.overall.exit_code, 0);
        assert_eq!(r.module_fingerprints.len(), 1);
        assert_eq!(r.negative_controls[0].failing_instances, 1);
    }

    #[test]
    fn failures_are_listed() {
        let mut r = RunReport::new("cfg");
        r.push_suite(check("a", &[Status::Fail]), SuiteRole::Check);
        assert!(!r.push_control("a", "flip", check("a", &[Status::Pass])));
        r.push_finding("count", "0".into(), false);
        r.finalize();
        assert_eq!(r.overall.exit_code, 1);
        assert_eq!(r.overall.failing_suites.len(), 3);
    }

    #[test]
    fn json_has_schema_fields() {
        let mut r = RunReport::new("cfg");
        r.push_suite(check("a", &[Status::Pass]), SuiteRole::Check);
        r.finalize();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["suites"][0]["name"], "a");
        assert_eq!(v["suites"][0]["role"], "check");
        assert_eq!(v["overall"]["status"], "pass");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/report.json");
        r.write(&path).unwrap();
        assert!(path.exists());
    }
}
