//! Monte Carlo estimation of the decoding success probability, exact
//! enumeration on tiny codes, overhead sweeps and erasure-channel experiments.

use std::collections::HashMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{self, BoundTables, BoundsError};
use crate::codec::{decodable, lt_rows, Precode, RaptorConfig};
use crate::rng::stream_rng;
use crate::scalar::binomial;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Default ceiling on the number of weighted terms `exact_small` may visit.
pub const EXACT_BUDGET: f64 = 1e8;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("exact enumeration needs {required:.3e} weighted terms, budget is {budget:.3e}")]
    BudgetExceeded { required: f64, budget: f64 },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("building worker pool: {0}")]
    Pool(String),
}

/// One row of a sweep: Monte Carlo estimate with its Wilson interval, and
/// optionally the analytical bounds and the exact value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub k: usize,
    pub n: usize,
    pub eta: f64,
    pub omega: String,
    pub m: usize,
    pub gamma: f64,
    pub trials: u64,
    pub seed: u64,
    pub mc_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub exact: Option<f64>,
}

/// Binary erasure channel with `transmissions` packets sent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelBec {
    pub p: f64,
    pub transmissions: usize,
}

impl ChannelBec {
    pub fn new(p: f64, transmissions: usize) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SimError::InvalidInput(format!("erasure probability {p} is outside [0, 1]")));
        }
        Ok(Self { p, transmissions })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McEstimate {
    fn new(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, Z_95);
        Self {
            successes,
            trials,
            estimate: successes as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    /// Half-width of the 95% interval.
    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    /// Standard error implied by the Wilson interval (half-width over `z`).
    pub fn sigma(&self) -> f64 {
        self.half_width() / Z_95
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let nt = trials as f64;
    let phat = successes as f64 / nt;
    let z2 = z * z;
    let denom = 1.0 + z2 / nt;
    let center = (phat + z2 / (2.0 * nt)) / denom;
    let spread = z * (phat * (1.0 - phat) / nt + z2 / (4.0 * nt * nt)).sqrt() / denom;
    // clamp so the interval always contains the point estimate despite rounding
    ((center - spread).max(0.0).min(phat), (center + spread).min(1.0).max(phat))
}

/// Runs trials on a fixed-size worker pool.
///
/// Trial `t` always uses RNG stream `t` under the caller's seed, and the only
/// cross-trial state is a success count, so results are identical for any
/// worker count.
#[derive(Debug)]
pub struct Simulator {
    pool: rayon::ThreadPool,
}

impl Simulator {
    /// `workers == 0` uses rayon's default thread count.
    pub fn new(workers: usize) -> Result<Self, SimError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Estimates `Pr(A_m^k)`: each trial draws a fresh pre-code and `m` LT
    /// rows, and succeeds when `rank(G_lt G_pre) == k`.
    pub fn estimate(
        &self,
        cfg: &RaptorConfig,
        m: usize,
        trials: u64,
        seed: u64,
    ) -> Result<McEstimate, SimError> {
        if trials == 0 {
            return Err(SimError::InvalidInput("trials must be at least 1".into()));
        }
        let successes = if m < cfg.k() {
            0
        } else {
            self.pool.install(|| {
                (0..trials)
                    .into_par_iter()
                    .filter(|&t| trial_succeeds(cfg, m, seed, t))
                    .count() as u64
            })
        };
        Ok(McEstimate::new(successes, trials))
    }

    /// One record per `m`, with bounds attached when `with_bounds` is set.
    pub fn sweep(
        &self,
        cfg: &RaptorConfig,
        ms: &[usize],
        trials: u64,
        seed: u64,
        with_bounds: bool,
    ) -> Result<Vec<SweepRecord>, SimError> {
        if ms.is_empty() {
            return Err(SimError::InvalidInput("m range is empty".into()));
        }
        if ms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::InvalidInput("m range must be strictly ascending".into()));
        }
        let tables = with_bounds.then(|| BoundTables::<f64>::new(cfg));
        ms.iter()
            .map(|&m| {
                let est = self.estimate(cfg, m, trials, seed)?;
                let point = tables.as_ref().map(|t| t.point(m));
                Ok(SweepRecord {
                    k: cfg.k(),
                    n: cfg.n(),
                    eta: cfg.eta(),
                    omega: cfg.omega().name().to_string(),
                    m,
                    gamma: m as f64 / cfg.k() as f64,
                    trials,
                    seed,
                    mc_estimate: est.estimate,
                    ci_low: est.ci_low,
                    ci_high: est.ci_high,
                    lower: point.map(|p| p.lower),
                    upper: point.map(|p| p.upper),
                    exact: None,
                })
            })
            .collect()
    }

    /// `P_suc(T)` for each `T`, mixing the chosen success curve over the
    /// binomial number of arrivals.
    pub fn bec_experiment(
        &self,
        cfg: &RaptorConfig,
        p: f64,
        ts: &[usize],
        trials: u64,
        seed: u64,
        source: CurveSource,
    ) -> Result<Vec<(usize, f64)>, SimError> {
        ChannelBec::new(p, 0)?;
        if ts.windows(2).any(|w| w[0] > w[1]) {
            return Err(SimError::InvalidInput("T range must be ascending".into()));
        }
        let t_max = ts.iter().copied().max().unwrap_or(0);
        let curve = self.success_curve(cfg, t_max, trials, seed, source)?;
        ts.iter()
            .map(|&t| {
                let v = bounds::bec_success(t, p, |m| curve[m], cfg.k())?;
                Ok((t, v))
            })
            .collect()
    }

    /// `Pr(A_m^k)` for `m` in `0..=m_max` from the chosen source.
    pub fn success_curve(
        &self,
        cfg: &RaptorConfig,
        m_max: usize,
        trials: u64,
        seed: u64,
        source: CurveSource,
    ) -> Result<Vec<f64>, SimError> {
        let k = cfg.k();
        let mut curve = vec![0.0; m_max + 1];
        match source {
            CurveSource::Ideal => {
                for v in curve.iter_mut().skip(k) {
                    *v = 1.0;
                }
            }
            CurveSource::Lower | CurveSource::Upper => {
                let tables = BoundTables::<f64>::new(cfg);
                for (m, v) in curve.iter_mut().enumerate().skip(k) {
                    let pt = tables.point(m);
                    *v = if source == CurveSource::Lower { pt.lower } else { pt.upper };
                }
            }
            CurveSource::Mc => {
                for (m, v) in curve.iter_mut().enumerate().skip(k) {
                    *v = self.estimate(cfg, m, trials, seed)?.estimate;
                }
            }
        }
        Ok(curve)
    }
}

/// One Monte Carlo trial; the pre-code is drawn before the rows, so runs with
/// larger `m` extend the same row sequence.
pub fn trial_succeeds(cfg: &RaptorConfig, m: usize, seed: u64, trial: u64) -> bool {
    let mut rng = stream_rng(seed, trial);
    let precode = Precode::generate(cfg, &mut rng);
    let g_lt = lt_rows(cfg, m, &mut rng);
    decodable(&g_lt, &precode)
}

/// Where `Pr(A_m^k)` comes from in an erasure-channel experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSource {
    Mc,
    Lower,
    Upper,
    Ideal,
}

impl FromStr for CurveSource {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mc" => Ok(Self::Mc),
            "lower" => Ok(Self::Lower),
            "upper" => Ok(Self::Upper),
            "ideal" => Ok(Self::Ideal),
            other => Err(SimError::InvalidInput(format!(
                "unknown curve source `{other}` (expected mc, lower, upper or ideal)"
            ))),
        }
    }
}

/// Weighted-term count of the naive enumeration: `(2^n - 1)^m · 2^{k(n-k)}`.
pub fn exact_budget_required(k: usize, n: usize, m: usize) -> f64 {
    ((n as f64).exp2() - 1.0).powi(m as i32) * ((k * (n - k)) as f64).exp2()
}

/// Exact `Pr(A_m^k)` on a tiny code.
///
/// Sums over every parity block `P` (weighted by its Bernoulli probability)
/// and every sequence of `m` LT rows (each row weighted `Ω_d / C(n,d)`). Rows
/// are folded in one at a time, tracking the distribution of the spanned
/// subspace of `GF(2)^k`, which gives the same total as visiting each
/// `m`-tuple separately.
pub fn exact_small(cfg: &RaptorConfig, m: usize, budget: f64) -> Result<f64, SimError> {
    let (k, n) = (cfg.k(), cfg.n());
    let required = exact_budget_required(k, n, m);
    if required > budget {
        return Err(SimError::BudgetExceeded { required, budget });
    }
    // subspaces are stored as membership masks over the 2^k vectors
    if k > 6 {
        return Err(SimError::InvalidInput(format!("exact enumeration supports k <= 6, got {k}")));
    }
    if m < k {
        return Ok(0.0);
    }
    let parity = n - k;
    let cells = k * parity;
    let eta = cfg.eta();
    let full: u64 = if k == 6 { u64::MAX } else { (1u64 << (1u32 << k)) - 1 };

    // row law: support v (as an n-bit mask) has probability Ω_|v| / C(n,|v|)
    let rows: Vec<(u32, f64)> = (1u32..(1 << n))
        .filter_map(|v| {
            let d = v.count_ones() as usize;
            let p = cfg.omega().prob(d) / binomial::<f64>(n, d);
            (p > 0.0).then_some((v, p))
        })
        .collect();

    let mut total = 0.0;
    for pbits in 0u64..(1u64 << cells) {
        let ones = pbits.count_ones() as i32;
        let weight = eta.powi(ones) * (1.0 - eta).powi(cells as i32 - ones);
        if weight == 0.0 {
            continue;
        }
        // row t of G_pre as a k-bit mask: e_t on top, column j of P below
        let g_pre: Vec<u32> = (0..k)
            .map(|t| 1u32 << t)
            .chain((0..parity).map(|j| {
                (0..k).fold(0u32, |acc, i| acc | ((((pbits >> (i * parity + j)) & 1) as u32) << i))
            }))
            .collect();
        // product-row law over GF(2)^k
        let mut law = vec![0.0; 1 << k];
        for &(v, p) in &rows {
            let u = (0..n)
                .filter(|t| v >> t & 1 == 1)
                .fold(0u32, |acc, t| acc ^ g_pre[t]);
            law[u as usize] += p;
        }
        let mut states: HashMap<u64, f64> = HashMap::from([(1u64, 1.0)]);
        for _ in 0..m {
            let mut next: HashMap<u64, f64> = HashMap::with_capacity(states.len() * 2);
            for (&span, &ps) in &states {
                for (u, &pu) in law.iter().enumerate() {
                    if pu > 0.0 {
                        *next.entry(extend_span(span, u)).or_default() += ps * pu;
                    }
                }
            }
            states = next;
        }
        total += weight * states.get(&full).copied().unwrap_or(0.0);
    }
    Ok(total)
}

/// Membership mask of `span(S ∪ {u})` given the membership mask of `S`.
fn extend_span(span: u64, u: usize) -> u64 {
    if span >> u & 1 == 1 {
        return span;
    }
    let mut out = span;
    let mut rest = span;
    while rest != 0 {
        let s = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        out |= 1u64 << (s ^ u);
    }
    out
}
