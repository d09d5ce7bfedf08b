//! Verdicts for acceptance criteria, built from verification cases or from
//! sampled residuals.

use std::fmt;
use std::time::Duration;

use gaudin_cli::report::CaseJson;

/// Outcome of one criterion, rendered as a single `PASS`/`FAIL` line.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub id: usize,
    pub title: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

/// Failing cases listed in a verdict before the remainder is summarised.
const LISTED: usize = 4;

impl Verdict {
    /// Passes when `cases` is non-empty and every case passes.
    pub fn from_cases<'a>(id: usize, title: &str, cases: impl IntoIterator<Item = &'a CaseJson>) -> Self {
        let cases: Vec<&CaseJson> = cases.into_iter().collect();
        let failed: Vec<&&CaseJson> = cases.iter().filter(|c| !c.pass).collect();
        let detail = if cases.is_empty() {
            "no cases selected".to_string()
        } else if failed.is_empty() {
            format!("{} cases within tolerance", cases.len())
        } else {
            let listed: Vec<String> = failed
                .iter()
                .take(LISTED)
                .map(|c| format!("{} ({:.2e} vs {:.0e})", c.name, c.residual, c.tol))
                .collect();
            let rest = failed.len().saturating_sub(LISTED);
            let more = if rest > 0 { format!(" and {rest} more") } else { String::new() };
            format!("{} of {} cases failed: {}{more}", failed.len(), cases.len(), listed.join(", "))
        };
        Verdict { id, title: title.into(), pass: !cases.is_empty() && failed.is_empty(), detail }
    }

    /// Passes when all `draws` residuals are finite, the worst is at most
    /// `tol`, and the elapsed time respects `limit` when one is given.
    pub fn from_draws(
        id: usize,
        title: &str,
        draws: &[f64],
        tol: f64,
        elapsed: Duration,
        limit: Option<Duration>,
    ) -> Self {
        let worst = if draws.iter().any(|v| v.is_nan()) { f64::NAN } else { draws.iter().copied().fold(0.0, f64::max) };
        let within = !draws.is_empty() && worst <= tol;
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let budget = limit.map(|l| format!(" (limit {:.0} s)", l.as_secs_f64())).unwrap_or_default();
        let detail = format!(
            "worst {worst:.2e} vs {tol:.0e} over {} draws in {:.1} ms{budget}",
            draws.len(),
            1e3 * elapsed.as_secs_f64()
        );
        Verdict { id, title: title.into(), pass: within && in_time, detail }
    }
}

/// Cases whose name starts with `prefix` and contains every part of `needles`.
pub fn select<'a>(cases: &'a [CaseJson], prefix: &str, needles: &[&str]) -> Vec<&'a CaseJson> {
    cases.iter().filter(|c| c.name.starts_with(prefix) && needles.iter().all(|n| c.name.contains(n))).collect()
}
