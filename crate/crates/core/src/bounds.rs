//! Lower and upper bounds on the probability that `m` received LT packets
//! suffice for ML decoding of all `k` source packets.
//!
//! Two quantities drive both bounds:
//!
//! * `J(r)`: probability that a random LT row has even overlap with a fixed
//!   weight-`r` vector of length `n`.
//! * `D(i, r)`: probability that the XOR of `i` distinct pre-code generator
//!   columns has Hamming weight `r`.
//!
//! The lower bound is the union bound over the `2^k - 1` nonzero codewords of
//! the pre-code; the upper bound adds back the pairwise (second Bonferroni)
//! term. Both are averaged over the Bernoulli(`eta`) parity block.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::RaptorConfig;
use crate::degree::DegreeDistribution;
use crate::scalar::{binomial, ln_binomial, CompensatedSum, Real};

/// Above this support size the hypergeometric parity sums run in the log domain.
const LOG_DOMAIN_THRESHOLD: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("erasure probability {0} is outside [0, 1]")]
    InvalidErasure(f64),
}

/// Probability that a uniformly placed degree-`d` support has even overlap
/// with a fixed weight-`r` set, out of `n` positions.
///
/// The hypergeometric terms are built by their ratio recurrence and
/// normalized by their own total, so no binomial coefficient is formed.
pub fn even_overlap<T: Real>(n: usize, r: usize, d: usize) -> T {
    assert!(r <= n && d <= n, "r = {r}, d = {d} must not exceed n = {n}");
    let lo = (d + r).saturating_sub(n);
    let hi = r.min(d);
    // h(s+1) / h(s)
    let ratio = |s: usize| {
        T::of_usize((r - s) * (d - s)) / T::of_usize((s + 1) * (n + s + 1 - r - d))
    };
    if n <= LOG_DOMAIN_THRESHOLD {
        let (mut even, mut total) = (T::zero(), T::zero());
        let mut h = T::one();
        for s in lo..=hi {
            if s > lo {
                h *= ratio(s - 1);
            }
            total += h;
            if s % 2 == 0 {
                even += h;
            }
        }
        even / total
    } else {
        let mut log_h = Vec::with_capacity(hi - lo + 1);
        let mut acc = T::zero();
        for s in lo..=hi {
            if s > lo {
                acc += ratio(s - 1).ln();
            }
            log_h.push(acc);
        }
        let peak = log_h.iter().copied().fold(T::neg_infinity(), T::max);
        let mut even = CompensatedSum::default();
        let mut total = CompensatedSum::default();
        for (s, lh) in (lo..=hi).zip(log_h) {
            let h = (lh - peak).exp();
            total.add(h);
            if s % 2 == 0 {
                even.add(h);
            }
        }
        even.value() / total.value()
    }
}

/// `J(r) = Σ_d Ω_d · Pr[even overlap | weight r, degree d]`.
pub fn j_of_r<T: Real>(r: usize, n: usize, omega: &DegreeDistribution) -> T {
    assert!(omega.n() <= n, "degree support {} exceeds n = {n}", omega.n());
    let mut acc = CompensatedSum::default();
    for (idx, &p) in omega.pmf().iter().enumerate() {
        if p > 0.0 {
            acc.add(T::of(p) * even_overlap::<T>(n, r, idx + 1));
        }
    }
    acc.value().max(T::zero()).min(T::one())
}

/// `D(i, r)`: probability that `i` XORed pre-code columns have weight `r`.
///
/// The top `k` coordinates contribute exactly `i` ones; each of the `n - k`
/// parity coordinates is one with probability `(1 - (1 - 2η)^i) / 2`,
/// independently. `D(0, r)` is the point mass at `r = 0`. Out-of-range `r`
/// gives zero.
pub fn d_of_ir<T: Real>(i: usize, r: usize, k: usize, n: usize, eta: f64) -> T {
    let parity = n - k;
    if i == 0 {
        return if r == 0 { T::one() } else { T::zero() };
    }
    if r < i || r > parity + i {
        return T::zero();
    }
    let bias = (T::one() - T::of(2.0 * eta)).powi(i as i32);
    let two = T::of(2.0);
    let p_zero = (T::one() + bias) / two;
    let p_one = (T::one() - bias) / two;
    let ones = r - i;
    let zeros = parity - ones;
    if parity <= 500 {
        binomial::<T>(parity, ones) * p_zero.powi(zeros as i32) * p_one.powi(ones as i32)
    } else {
        let term = |p: T, cnt: usize| {
            if cnt == 0 {
                T::zero()
            } else {
                T::of_usize(cnt) * p.ln()
            }
        };
        (ln_binomial::<T>(parity, ones) + term(p_zero, zeros) + term(p_one, ones)).exp()
    }
}

/// One evaluated point of the bound curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint<T> {
    pub m: usize,
    pub gamma: T,
    pub lower: T,
    pub upper: T,
    pub lower_raw: T,
    pub upper_raw: T,
}

impl<T: Real> BoundPoint<T> {
    fn new(m: usize, k: usize, lower_raw: T, upper_raw: T) -> Self {
        Self {
            m,
            gamma: T::of_usize(m) / T::of_usize(k),
            lower: clamp01(lower_raw),
            upper: clamp01(upper_raw),
            lower_raw,
            upper_raw,
        }
    }
}

/// `J` and `D` tables for one configuration, plus the `m`-independent parts
/// of both bound sums.
#[derive(Debug, Clone)]
pub struct BoundTables<T> {
    k: usize,
    n: usize,
    eta: f64,
    j: Vec<T>,
    // d[i][r], i in 0..=k, r in 0..=n
    d: Vec<Vec<T>>,
    // (Σ_i C(k,i) D(i,r), J(r)) per weight r
    single: Vec<(T, T)>,
    // (coefficient, J0 J1 J2 + J̄0 J̄1 J̄2) per weight triple, already halved
    pair: Vec<(T, T)>,
}

impl<T: Real> BoundTables<T> {
    pub fn new(cfg: &RaptorConfig) -> Self {
        Self::from_parts(cfg.k(), cfg.n(), cfg.eta(), cfg.omega())
    }

    #[allow(clippy::needless_range_loop)] // r0, r1, r2 are keys as well as indices
    pub fn from_parts(k: usize, n: usize, eta: f64, omega: &DegreeDistribution) -> Self {
        assert!(k >= 1 && n >= k, "need n >= k >= 1");
        let parity = n - k;
        let j: Vec<T> = (0..=n).map(|r| j_of_r(r, n, omega)).collect();
        let d: Vec<Vec<T>> = (0..=k)
            .map(|i| (0..=n).map(|r| d_of_ir(i, r, k, n, eta)).collect())
            .collect();

        let mut single = Vec::new();
        for r in 1..=n {
            let w: CompensatedSum<T> = (1..=k)
                .filter(|&i| r >= i && r <= parity + i)
                .map(|i| binomial::<T>(k, i) * d[i][r])
                .collect();
            let w = w.value();
            if w > T::zero() {
                single.push((w, j[r]));
            }
        }

        // Group the triple sum by (r0, r1, r2) so each m costs one pass.
        let half = T::of(0.5);
        let mut grouped: BTreeMap<(usize, usize, usize), CompensatedSum<T>> = BTreeMap::new();
        for i in 1..=k {
            let ck = binomial::<T>(k, i);
            for w0 in 0..=i {
                let w1 = i - w0;
                for w2 in 0..=k - i {
                    if w0 + w2 == 0 || w1 + w2 == 0 {
                        continue;
                    }
                    let coef = half * ck * binomial::<T>(i, w0) * binomial::<T>(k - i, w2);
                    for r0 in w0..=parity + w0 {
                        let a = d[w0][r0];
                        if a == T::zero() {
                            continue;
                        }
                        for r1 in w1..=parity + w1 {
                            let b = d[w1][r1];
                            if b == T::zero() {
                                continue;
                            }
                            for r2 in w2..=parity + w2 {
                                let c = d[w2][r2];
                                if c == T::zero() {
                                    continue;
                                }
                                grouped
                                    .entry((r0, r1, r2))
                                    .or_default()
                                    .add(coef * a * b * c);
                            }
                        }
                    }
                }
            }
        }
        let pair = grouped
            .into_iter()
            .map(|((r0, r1, r2), w)| {
                let (j0, j1, j2) = (j[r0], j[r1], j[r2]);
                let one = T::one();
                let base = j0 * j1 * j2 + (one - j0) * (one - j1) * (one - j2);
                (w.value(), base)
            })
            .collect();

        Self {
            k,
            n,
            eta,
            j,
            d,
            single,
            pair,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `J(r)` for `r` in `0..=n`.
    pub fn j_table(&self) -> &[T] {
        &self.j
    }

    /// `D(i, r)`; zero outside `i <= r <= n - k + i`.
    pub fn d(&self, i: usize, r: usize) -> T {
        self.d
            .get(i)
            .and_then(|row| row.get(r))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Union-bound sum `Σ_i C(k,i) Σ_r J(r)^m D(i,r)`.
    pub fn union_term(&self, m: usize) -> T {
        let m = m as i32;
        self.single
            .iter()
            .map(|&(w, j)| w * j.powi(m))
            .collect::<CompensatedSum<T>>()
            .value()
    }

    /// Half the pairwise sum of the second Bonferroni term.
    pub fn pair_term(&self, m: usize) -> T {
        let m = m as i32;
        self.pair
            .iter()
            .map(|&(w, base)| w * base.powi(m))
            .collect::<CompensatedSum<T>>()
            .value()
    }

    /// Unclamped lower bound `1 - union_term(m)`.
    pub fn lower_raw(&self, m: usize) -> T {
        T::one() - self.union_term(m)
    }

    /// Unclamped upper bound `lower_raw(m) + pair_term(m)`.
    pub fn upper_raw(&self, m: usize) -> T {
        self.lower_raw(m) + self.pair_term(m)
    }

    pub fn point(&self, m: usize) -> BoundPoint<T> {
        let lower_raw = self.lower_raw(m);
        BoundPoint::new(m, self.k, lower_raw, lower_raw + self.pair_term(m))
    }

    pub fn sweep<I: IntoIterator<Item = usize>>(&self, ms: I) -> Vec<BoundPoint<T>> {
        ms.into_iter().map(|m| self.point(m)).collect()
    }
}

/// Single-row null probability under the binomial distribution,
/// `(2^{n-1} - 1) / (2^n - 1)`.
pub fn binomial_row_ratio<T: Real>(n: usize) -> T {
    let tiny = T::of(2.0).powi(-(n as i32));
    (T::of(0.5) - tiny) / (T::one() - tiny)
}

/// Closed-form lower bound for the binomial distribution, unclamped.
pub fn binomial_closed_lower_raw<T: Real>(m: usize, k: usize, n: usize) -> T {
    let codewords = T::of(2.0).powi(k as i32) - T::one();
    T::one() - codewords * binomial_row_ratio::<T>(n).powi(m as i32)
}

/// Closed-form upper bound for the binomial distribution, unclamped.
pub fn binomial_closed_upper_raw<T: Real>(m: usize, k: usize, n: usize) -> T {
    let rho = binomial_row_ratio::<T>(n);
    let one = T::one();
    let codewords = T::of(2.0).powi(k as i32) - one;
    let pairs = codewords * (T::of(2.0).powi(k as i32 - 1) - one);
    let base = rho.powi(3) + (one - rho).powi(3);
    binomial_closed_lower_raw::<T>(m, k, n) + pairs * base.powi(m as i32)
}

fn clamp01<T: Real>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

/// Closed-form lower bound for the binomial distribution, clamped to `[0, 1]`.
pub fn binomial_closed_lower<T: Real>(m: usize, k: usize, n: usize) -> T {
    clamp01(binomial_closed_lower_raw(m, k, n))
}

/// Closed-form upper bound for the binomial distribution, clamped to `[0, 1]`.
pub fn binomial_closed_upper<T: Real>(m: usize, k: usize, n: usize) -> T {
    clamp01(binomial_closed_upper_raw(m, k, n))
}

/// Both closed forms as one record.
pub fn binomial_closed_point<T: Real>(m: usize, k: usize, n: usize) -> BoundPoint<T> {
    BoundPoint::new(m, k, binomial_closed_lower_raw(m, k, n), binomial_closed_upper_raw(m, k, n))
}

/// `Pr[Binomial(trials, q) = j]` for `j` in `0..=trials`.
pub fn binomial_pmf<T: Real>(trials: usize, q: f64) -> Vec<T> {
    let mut out = vec![T::zero(); trials + 1];
    if q <= 0.0 {
        out[0] = T::one();
        return out;
    }
    if q >= 1.0 {
        out[trials] = T::one();
        return out;
    }
    let (lq, lp) = (T::of(q).ln(), T::of(1.0 - q).ln());
    let mut ln_c = T::zero();
    for (j, slot) in out.iter_mut().enumerate() {
        if j > 0 {
            ln_c += (T::of_usize(trials - j + 1) / T::of_usize(j)).ln();
        }
        *slot = (ln_c + T::of_usize(j) * lq + T::of_usize(trials - j) * lp).exp();
    }
    out
}

/// Success probability after `t` transmissions over an erasure channel with
/// loss probability `p`: `Σ_{m=k}^{t} C(t,m) (1-p)^m p^{t-m} curve(m)`.
pub fn bec_success<T: Real, F: Fn(usize) -> T>(
    t: usize,
    p: f64,
    curve: F,
    k: usize,
) -> Result<T, BoundsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BoundsError::InvalidErasure(p));
    }
    if t < k {
        return Ok(T::zero());
    }
    let pmf = binomial_pmf::<T>(t, 1.0 - p);
    Ok((k..=t)
        .filter(|&m| pmf[m] > T::zero())
        .map(|m| pmf[m] * curve(m))
        .collect::<CompensatedSum<T>>()
        .value())
}

/// Smallest `t` in `k..=t_max` with `bec_success(t) >= target`.
pub fn min_transmissions<T: Real, F: Fn(usize) -> T>(
    p: f64,
    curve: F,
    k: usize,
    target: T,
    t_max: usize,
) -> Result<Option<usize>, BoundsError> {
    for t in k..=t_max {
        if bec_success(t, p, &curve, k)? >= target {
            return Ok(Some(t));
        }
    }
    Ok(None)
}
