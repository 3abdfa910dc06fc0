//! Structured outcomes of statistical tests.
//!
//! Every report carries the worst sub-check's statistic and threshold, the
//! sample size and a standard-error estimate, a three-valued verdict, and
//! the configuration needed to reproduce the run. The pass flag is a pure
//! function of statistic and threshold: pass ⇔ statistic ≤ threshold.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The run lacked the power to decide; never counts as a failure.
    Inconclusive,
}

/// One bound of the form `statistic ≤ threshold`. Two-sided checks store
/// the absolute deviation; one-sided checks store a signed slack against
/// a zero threshold.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckLine {
    pub fn bound(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n: u64,
    pub se: f64,
    pub pass: bool,
    pub verdict: Verdict,
    pub config: serde_json::Value,
    pub checks: Vec<CheckLine>,
}

impl TestReport {
    /// Roll sub-checks up into a report. The headline statistic/threshold
    /// pair comes from the check with the least slack, so the headline
    /// passes exactly when every sub-check does.
    pub fn from_checks(
        name: impl Into<String>,
        n: u64,
        se: f64,
        config: serde_json::Value,
        checks: Vec<CheckLine>,
    ) -> Self {
        assert!(!checks.is_empty(), "a report needs at least one check");
        let worst = checks
            .iter()
            .max_by(|a, b| {
                let ga = a.statistic - a.threshold;
                let gb = b.statistic - b.threshold;
                ga.partial_cmp(&gb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let pass = checks.iter().all(|c| c.pass);
        Self {
            name: name.into(),
            statistic: worst.statistic,
            threshold: worst.threshold,
            n,
            se,
            pass,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            config,
            checks,
        }
    }

    /// Downgrade a passing report to "inconclusive" (power was lacking).
    pub fn mark_inconclusive(mut self) -> Self {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Inconclusive;
        }
        self
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    /// One human-readable summary line.
    pub fn human_line(&self) -> String {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        format!(
            "{tag:<12} {:<38} statistic={:+.6e} threshold={:.6e} n={} se={:.3e}",
            self.name, self.statistic, self.threshold, self.n, self.se
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headline_tracks_the_worst_check() {
        let checks = vec![
            CheckLine::bound("a", 0.5, 1.0),
            CheckLine::bound("b", 0.9, 1.0),
        ];
        let r = TestReport::from_checks("t", 10, 0.1, serde_json::json!({}), checks);
        assert!(r.pass);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.statistic, 0.9);

        let checks = vec![
            CheckLine::bound("a", 0.5, 1.0),
            CheckLine::bound("b", 2.0, 1.0),
        ];
        let r = TestReport::from_checks("t", 10, 0.1, serde_json::json!({}), checks);
        assert!(!r.pass);
        assert!(r.failed());
        assert_eq!(r.statistic, 2.0);
        // the pass flag is recomputable from the headline fields
        assert_eq!(r.pass, r.statistic <= r.threshold);
    }

    #[test]
    fn inconclusive_never_overwrites_failure() {
        let r = TestReport::from_checks(
            "t",
            1,
            0.0,
            serde_json::json!({}),
            vec![CheckLine::bound("a", 2.0, 1.0)],
        )
        .mark_inconclusive();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.failed());
    }

    #[test]
    fn json_has_the_documented_fields() {
        let r = TestReport::from_checks(
            "demo",
            5,
            0.3,
            serde_json::json!({"k": 3}),
            vec![CheckLine::bound("a", 0.1, 0.2)],
        );
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for field in ["name", "statistic", "threshold", "n", "se", "verdict", "config"] {
            assert!(v.get(field).is_some(), "missing field {field}");
        }
        assert_eq!(v["verdict"], "pass");
        assert_eq!(v["config"]["k"], 3);
    }
}
