//! `(n, value, stderr)` curves with a verdict, and their CSV/JSON forms.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Inconclusive => "inconclusive",
        }
    }

    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub n: u64,
    pub value: f64,
    /// Monte Carlo standard error; 0 for exact statistics.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub label: String,
    pub points: Vec<SeriesPoint>,
    pub verdict: Verdict,
    pub threshold_used: f64,
}

impl DiagnosticsSeries {
    pub fn new(label: impl Into<String>, threshold_used: f64) -> Self {
        Self {
            label: label.into(),
            points: Vec::new(),
            verdict: Verdict::Inconclusive,
            threshold_used,
        }
    }

    /// Append a point; `n` must exceed the previous one.
    pub fn push(&mut self, n: u64, value: f64, stderr: f64) {
        if let Some(last) = self.points.last() {
            assert!(n > last.n, "series points must have increasing n");
        }
        assert!(stderr >= 0.0, "stderr must be nonnegative");
        self.points.push(SeriesPoint { n, value, stderr });
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn last_value(&self) -> Option<f64> {
        self.points.last().map(|p| p.value)
    }

    /// Spearman rank correlation between `n` and the values.
    pub fn trend(&self) -> f64 {
        let ns: Vec<f64> = self.points.iter().map(|p| p.n as f64).collect();
        spearman(&ns, &self.values())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,stderr\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                p.n,
                format_real(p.value),
                format_real(p.stderr)
            ));
        }
        out
    }

    pub fn verdict_record(&self, seed: u64) -> VerdictRecord {
        VerdictRecord {
            label: self.label.clone(),
            verdict: self.verdict,
            threshold_used: self.threshold_used,
            seed,
        }
    }
}

/// JSON verdict emitted next to each series CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub label: String,
    pub verdict: Verdict,
    pub threshold_used: f64,
    pub seed: u64,
}

/// Decimal with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

/// Spearman's rho with average ranks for ties; NaN for fewer than two points
/// or a constant sequence.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return f64::NAN;
    }
    pearson(&ranks(x), &ranks(y))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Linear-interpolated quantile of a sample, `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}
