use serde::Serialize;
use serde_json::Value;

/// How `estimate` is compared with `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `estimate <= bound + 3·stderr`
    Upper,
    /// `estimate <= bound + 5·stderr`
    UpperLoose,
    /// `|estimate − bound| <= 5·stderr`
    Identity,
    /// `estimate <= bound · (1 + 3·stderr/estimate)`
    Relative,
    /// No comparison.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub op: String,
    pub params: Value,
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
    /// Bound for one-sided checks, exact value for identities.
    pub bound: Option<f64>,
    pub check: Check,
    pub pass: Option<bool>,
    pub seed: u64,
    pub elapsed_ms: f64,
}

impl McReport {
    pub fn new(op: impl Into<String>, params: Value, estimate: f64, stderr: f64, n: u64, seed: u64) -> Self {
        Self {
            op: op.into(),
            params,
            estimate,
            stderr,
            n,
            bound: None,
            check: Check::None,
            pass: None,
            seed,
            elapsed_ms: 0.0,
        }
    }

    pub fn checked(mut self, check: Check, bound: f64) -> Self {
        let (e, s) = (self.estimate, self.stderr);
        let pass = match check {
            Check::Upper => e <= bound + 3.0 * s,
            Check::UpperLoose => e <= bound + 5.0 * s,
            Check::Identity => (e - bound).abs() <= 5.0 * s,
            Check::Relative => e <= 0.0 || e <= bound * (1.0 + 3.0 * s / e),
            Check::None => return self,
        };
        self.check = check;
        self.bound = Some(bound);
        self.pass = Some(pass);
        self
    }

    pub fn with_elapsed(mut self, since: std::time::Instant) -> Self {
        self.elapsed_ms = since.elapsed().as_secs_f64() * 1e3;
        self
    }

    /// Upper end of the one-sided tolerance band, if any.
    pub fn margin(&self) -> Option<f64> {
        let b = self.bound?;
        Some(match self.check {
            Check::Upper => b + 3.0 * self.stderr - self.estimate,
            Check::UpperLoose => b + 5.0 * self.stderr - self.estimate,
            Check::Identity => 5.0 * self.stderr - (self.estimate - b).abs(),
            Check::Relative => b + 3.0 * self.stderr * b / self.estimate.max(f64::MIN_POSITIVE) - self.estimate,
            Check::None => return None,
        })
    }
}

/// True when no report failed.
pub fn all_pass<'a>(reports: impl IntoIterator<Item = &'a McReport>) -> bool {
    reports.into_iter().all(|r| r.pass != Some(false))
}
