//! LT degree distributions over the intermediate packets `1..=n`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// Normalization tolerance every constructed distribution must meet.
pub const PMF_TOLERANCE: f64 = 1e-12;
/// Custom tables whose mass deviates from 1 by less than this are renormalized.
pub const TABLE_RENORMALIZE_LIMIT: f64 = 1e-9;

const GPP3_TERMS: [(usize, f64); 6] = [
    (1, 0.0099),
    (2, 0.4663),
    (3, 0.2144),
    (4, 0.1152),
    (10, 0.1131),
    (11, 0.0811),
];

#[derive(Debug, Error)]
pub enum DegreeError {
    #[error("support size must be at least {min}, got {n}")]
    SupportTooSmall { n: usize, min: usize },
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid probability mass: {0}")]
    InvalidPmf(String),
    #[error("degree table line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error("reading degree table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown degree distribution selector `{0}`")]
    UnknownSelector(String),
}

/// Probability mass over degrees `1..=n` with a cumulative table for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    name: String,
    // pmf[d - 1] = Pr(degree = d)
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    spike_clamped: bool,
}

impl DegreeDistribution {
    /// Validates `pmf` (index 0 is degree 1) and builds the sampling table.
    pub fn from_pmf(name: impl Into<String>, pmf: Vec<f64>) -> Result<Self, DegreeError> {
        if pmf.is_empty() {
            return Err(DegreeError::SupportTooSmall { n: 0, min: 1 });
        }
        if let Some((i, p)) = pmf
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(DegreeError::InvalidPmf(format!("Pr(d = {}) = {p}", i + 1)));
        }
        let total = neumaier_sum(pmf.iter().copied());
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(DegreeError::InvalidPmf(format!("mass sums to {total}")));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // zero-mass tail degrees keep the previous value so sampling never lands on them
        let last_positive = pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for c in &mut cdf[last_positive..] {
            *c = 1.0;
        }
        Ok(Self {
            name: name.into(),
            pmf,
            cdf,
            spike_clamped: false,
        })
    }

    /// `Ω_1 = 1/n`, `Ω_d = 1/(d(d-1))` for `2 <= d <= n`.
    pub fn ideal_soliton(n: usize) -> Result<Self, DegreeError> {
        if n == 0 {
            return Err(DegreeError::SupportTooSmall { n, min: 1 });
        }
        let pmf = (1..=n)
            .map(|d| {
                if d == 1 {
                    1.0 / n as f64
                } else {
                    1.0 / (d as f64 * (d - 1) as f64)
                }
            })
            .collect();
        Self::from_pmf("ideal", pmf)
    }

    /// Luby's robust soliton: `(ρ + τ) / β` with `R = c ln(n/δ) √n` and the
    /// spike at `round(n/R)`.
    ///
    /// A spike index beyond `n` is clamped to `n`, and a negative spike weight
    /// (possible when `R < δ`) is clamped to zero; both set
    /// [`spike_clamped`](Self::spike_clamped).
    pub fn robust_soliton(n: usize, c: f64, delta: f64) -> Result<Self, DegreeError> {
        if n < 2 {
            return Err(DegreeError::SupportTooSmall { n, min: 2 });
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(DegreeError::InvalidParameter {
                name: "c",
                value: c,
                reason: "must be positive",
            });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(DegreeError::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "must lie in (0, 1)",
            });
        }
        let nf = n as f64;
        let r = c * (nf / delta).ln() * nf.sqrt();
        let raw_spike = (nf / r).round();
        let mut clamped = false;
        let spike = if raw_spike >= nf || !raw_spike.is_finite() {
            clamped |= raw_spike > nf;
            n
        } else {
            (raw_spike as usize).max(1)
        };
        let mut spike_weight = r * (r / delta).ln() / nf;
        if spike_weight < 0.0 {
            spike_weight = 0.0;
            clamped = true;
        }
        let mut mu: Vec<f64> = (1..=n)
            .map(|d| {
                let rho = if d == 1 {
                    1.0 / nf
                } else {
                    1.0 / (d as f64 * (d - 1) as f64)
                };
                let tau = if d < spike {
                    r / (d as f64 * nf)
                } else if d == spike {
                    spike_weight
                } else {
                    0.0
                };
                rho + tau
            })
            .collect();
        let beta = neumaier_sum(mu.iter().copied());
        for m in &mut mu {
            *m /= beta;
        }
        let mut dist = Self::from_pmf(format!("robust({c},{delta})"), mu)?;
        dist.spike_clamped = clamped;
        Ok(dist)
    }

    /// The standardized MBMS distribution (support 1..=11).
    pub fn standard_3gpp() -> Self {
        let mut pmf = vec![0.0; 11];
        for (d, p) in GPP3_TERMS {
            pmf[d - 1] = p;
        }
        Self::from_pmf("3gpp", pmf).expect("3GPP coefficients sum to one")
    }

    /// `Ω_d = C(n,d) / (2^n - 1)`: a full LT row is uniform over the nonzero vectors.
    pub fn binomial(n: usize) -> Result<Self, DegreeError> {
        if n == 0 {
            return Err(DegreeError::SupportTooSmall { n, min: 1 });
        }
        // C(n,d) / (2^n - 1) = C(n,d) 2^-n / (1 - 2^-n), built by the ratio recurrence
        let denom = 1.0 - (-(n as f64)).exp2();
        let mut term = (-(n as f64)).exp2();
        let pmf = (1..=n)
            .map(|d| {
                term *= (n - d + 1) as f64 / d as f64;
                term / denom
            })
            .collect();
        Self::from_pmf("binomial", pmf)
    }

    pub fn point_mass(n: usize, degree: usize) -> Result<Self, DegreeError> {
        if degree == 0 || degree > n {
            return Err(DegreeError::InvalidParameter {
                name: "degree",
                value: degree as f64,
                reason: "must lie in 1..=n",
            });
        }
        let mut pmf = vec![0.0; n];
        pmf[degree - 1] = 1.0;
        Self::from_pmf(format!("point({degree})"), pmf)
    }

    /// Parses a `degree probability` table; `#` starts a comment.
    pub fn parse_table(name: impl Into<String>, text: &str) -> Result<Self, DegreeError> {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| DegreeError::Table { line: i + 1, reason };
            let mut parts = line.split_whitespace();
            let (Some(d), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad(format!("expected `degree probability`, got `{line}`")));
            };
            let d: usize = d.parse().map_err(|_| bad(format!("bad degree `{d}`")))?;
            let p: f64 = p.parse().map_err(|_| bad(format!("bad probability `{p}`")))?;
            if d == 0 {
                return Err(bad("degree 0 is not allowed".into()));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(bad(format!("probability {p} is negative or not finite")));
            }
            if entries.iter().any(|&(e, _)| e == d) {
                return Err(bad(format!("degree {d} listed twice")));
            }
            entries.push((d, p));
        }
        let n = entries.iter().map(|&(d, _)| d).max().ok_or_else(|| {
            DegreeError::InvalidPmf("degree table has no entries".into())
        })?;
        let mut pmf = vec![0.0; n];
        for (d, p) in entries {
            pmf[d - 1] = p;
        }
        let total = neumaier_sum(pmf.iter().copied());
        if (total - 1.0).abs() >= TABLE_RENORMALIZE_LIMIT {
            return Err(DegreeError::InvalidPmf(format!(
                "table mass {total} deviates from 1 by more than {TABLE_RENORMALIZE_LIMIT:e}"
            )));
        }
        for p in &mut pmf {
            *p /= total;
        }
        Self::from_pmf(name, pmf)
    }

    pub fn from_table_file(path: &Path) -> Result<Self, DegreeError> {
        let text = std::fs::read_to_string(path).map_err(|source| DegreeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_table(format!("file({})", path.display()), &text)
    }

    /// Pads the support with zero-mass degrees up to `n`.
    pub fn with_support(mut self, n: usize) -> Result<Self, DegreeError> {
        let max_degree = self.max_degree();
        if n < max_degree {
            return Err(DegreeError::SupportTooSmall { n, min: max_degree });
        }
        self.pmf.resize(n, 0.0);
        self.cdf.resize(n, 1.0);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Support size `n`.
    pub fn n(&self) -> usize {
        self.pmf.len()
    }

    /// Largest degree with positive mass.
    pub fn max_degree(&self) -> usize {
        self.pmf.iter().rposition(|&p| p > 0.0).map_or(0, |i| i + 1)
    }

    /// `Ω_d`; zero outside `1..=n`.
    pub fn prob(&self, d: usize) -> f64 {
        if d == 0 {
            return 0.0;
        }
        self.pmf.get(d - 1).copied().unwrap_or(0.0)
    }

    /// Pmf indexed from degree 1.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Set when the robust-soliton spike had to be clamped.
    pub fn spike_clamped(&self) -> bool {
        self.spike_clamped
    }

    /// Inverse-CDF draw of a degree in `1..=n` with positive mass.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.pmf.len() - 1) + 1
    }
}

impl rand::distributions::Distribution<usize> for DegreeDistribution {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        DegreeDistribution::sample(self, rng)
    }
}

/// Which degree distribution to build; resolved against a support size `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum OmegaSpec {
    Ideal,
    Robust { c: f64, delta: f64 },
    Standard3gpp,
    Binomial,
    PointMass(usize),
    File(std::path::PathBuf),
}

impl OmegaSpec {
    /// Robust soliton parameters used throughout the simulations.
    pub const ROBUST_DEFAULT: OmegaSpec = OmegaSpec::Robust {
        c: 0.04,
        delta: 0.01,
    };

    pub fn build(&self, n: usize) -> Result<DegreeDistribution, DegreeError> {
        match self {
            OmegaSpec::Ideal => DegreeDistribution::ideal_soliton(n),
            OmegaSpec::Robust { c, delta } => DegreeDistribution::robust_soliton(n, *c, *delta),
            OmegaSpec::Standard3gpp => DegreeDistribution::standard_3gpp().with_support(n),
            OmegaSpec::Binomial => DegreeDistribution::binomial(n),
            OmegaSpec::PointMass(d) => DegreeDistribution::point_mass(n, *d),
            OmegaSpec::File(path) => DegreeDistribution::from_table_file(path)?.with_support(n),
        }
    }
}

impl fmt::Display for OmegaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaSpec::Ideal => write!(f, "ideal"),
            OmegaSpec::Robust { c, delta } => write!(f, "robust({c},{delta})"),
            OmegaSpec::Standard3gpp => write!(f, "3gpp"),
            OmegaSpec::Binomial => write!(f, "binomial"),
            OmegaSpec::PointMass(d) => write!(f, "point({d})"),
            OmegaSpec::File(p) => write!(f, "file({})", p.display()),
        }
    }
}

impl FromStr for OmegaSpec {
    type Err = DegreeError;

    /// Accepts `ideal`, `binomial`, `3gpp`, `robust`, `robust(c,delta)`,
    /// `point(d)` and `file(path)` (also `file:path`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let unknown = || DegreeError::UnknownSelector(s.to_string());
        let args = |prefix: &str| -> Option<&str> {
            s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')
        };
        match s {
            "ideal" => return Ok(OmegaSpec::Ideal),
            "binomial" => return Ok(OmegaSpec::Binomial),
            "3gpp" => return Ok(OmegaSpec::Standard3gpp),
            "robust" => return Ok(OmegaSpec::ROBUST_DEFAULT),
            _ => {}
        }
        if let Some(a) = args("robust") {
            let (c, delta) = a.split_once(',').ok_or_else(unknown)?;
            let c = c.trim().parse().map_err(|_| unknown())?;
            let delta = delta.trim().parse().map_err(|_| unknown())?;
            return Ok(OmegaSpec::Robust { c, delta });
        }
        if let Some(a) = args("point") {
            return Ok(OmegaSpec::PointMass(a.trim().parse().map_err(|_| unknown())?));
        }
        if let Some(p) = args("file").or_else(|| s.strip_prefix("file:")) {
            return Ok(OmegaSpec::File(p.into()));
        }
        Err(unknown())
    }
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
