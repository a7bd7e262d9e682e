//! Raptor encoder and ML decoder.
//!
//! The pre-code is a systematic LDPC code with generator
//! `G_pre = [I_k | P]^T` (`n x k`) and parity check `H = [P^T | I_{n-k}]`,
//! where `P` is `k x (n-k)` with i.i.d. Bernoulli(`eta`) entries. The LT layer
//! draws rows over the `n` intermediate packets. Decoding runs Gaussian
//! elimination on the stacked system `[G_lt; H] x = [Y; 0]`.

use rand::Rng;
use thiserror::Error;

use crate::degree::DegreeDistribution;
use crate::gf2::{BitMatrix, BitVec, Gf2Error, ManySolution};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("received system is inconsistent (corrupted payloads)")]
    Inconsistent,
    #[error("malformed coded block: {0}")]
    Malformed(String),
    #[error(transparent)]
    Linalg(#[from] Gf2Error),
}

/// Code parameters: `k` source packets, `n` intermediate packets, parity
/// density `eta`, and the LT degree distribution over `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaptorConfig {
    k: usize,
    n: usize,
    eta: f64,
    omega: DegreeDistribution,
}

impl RaptorConfig {
    pub fn new(k: usize, n: usize, eta: f64, omega: DegreeDistribution) -> Result<Self, CodecError> {
        if k == 0 {
            return Err(CodecError::InvalidConfig("k must be at least 1".into()));
        }
        if n < k {
            return Err(CodecError::InvalidConfig(format!("n = {n} is smaller than k = {k}")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(CodecError::InvalidConfig(format!("eta = {eta} is outside [0, 1]")));
        }
        if omega.n() != n {
            return Err(CodecError::InvalidConfig(format!(
                "degree distribution support {} does not match n = {n}",
                omega.n()
            )));
        }
        Ok(Self { k, n, eta, omega })
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

    pub fn omega(&self) -> &DegreeDistribution {
        &self.omega
    }

    /// Number of parity packets `n - k`.
    pub fn parity(&self) -> usize {
        self.n - self.k
    }
}

/// Systematic LDPC pre-code.
#[derive(Debug, Clone, PartialEq)]
pub struct Precode {
    g_pre: BitMatrix,
    h: BitMatrix,
}

impl Precode {
    /// Builds both matrices from the `k x (n-k)` parity block `P`.
    pub fn from_parity(p: &BitMatrix) -> Self {
        let (k, parity) = (p.rows(), p.cols());
        let n = k + parity;
        let pt = p.transpose();
        let mut g_pre = BitMatrix::zeros(n, k);
        let mut h = BitMatrix::zeros(parity, n);
        for i in 0..k {
            g_pre.set(i, i, true);
        }
        for j in 0..parity {
            for i in 0..k {
                if pt.get(j, i) {
                    g_pre.set(k + j, i, true);
                    h.set(j, i, true);
                }
            }
            h.set(j, k + j, true);
        }
        Self { g_pre, h }
    }

    /// Draws `P` entrywise Bernoulli(`eta`).
    pub fn generate<R: Rng + ?Sized>(cfg: &RaptorConfig, rng: &mut R) -> Self {
        let p = BitMatrix::random_bernoulli(cfg.k, cfg.parity(), cfg.eta, rng)
            .expect("eta validated by RaptorConfig");
        Self::from_parity(&p)
    }

    /// `n x k` generator.
    pub fn g_pre(&self) -> &BitMatrix {
        &self.g_pre
    }

    /// `(n-k) x n` parity check.
    pub fn h(&self) -> &BitMatrix {
        &self.h
    }

    pub fn k(&self) -> usize {
        self.g_pre.cols()
    }

    pub fn n(&self) -> usize {
        self.g_pre.rows()
    }

    /// Intermediate packets `G_pre * S` for a `k x bits` source matrix.
    pub fn intermediate(&self, source: &BitMatrix) -> Result<BitMatrix, CodecError> {
        Ok(self.g_pre.mul(source)?)
    }
}

/// Draws one LT row: a degree `d ~ Ω`, then `d` distinct positions uniformly
/// from the `n` intermediate packets.
pub fn lt_row<R: Rng + ?Sized>(cfg: &RaptorConfig, rng: &mut R) -> BitVec {
    let d = cfg.omega.sample(rng);
    let mut row = BitVec::zeros(cfg.n);
    for pos in rand::seq::index::sample(rng, cfg.n, d) {
        row.set(pos, true);
    }
    row
}

/// `m x n` matrix of independent LT rows.
pub fn lt_rows<R: Rng + ?Sized>(cfg: &RaptorConfig, m: usize, rng: &mut R) -> BitMatrix {
    let rows: Vec<BitVec> = (0..m).map(|_| lt_row(cfg, rng)).collect();
    BitMatrix::from_bitvecs(cfg.n, &rows)
}

/// Received LT rows and their payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedBlock {
    k: usize,
    g_lt: BitMatrix,
    payloads: Vec<Vec<u8>>,
}

impl CodedBlock {
    pub fn new(k: usize, g_lt: BitMatrix, payloads: Vec<Vec<u8>>) -> Result<Self, CodecError> {
        if payloads.len() != g_lt.rows() {
            return Err(CodecError::InvalidInput(format!(
                "{} payloads for {} LT rows",
                payloads.len(),
                g_lt.rows()
            )));
        }
        if let Some(first) = payloads.first() {
            if payloads.iter().any(|p| p.len() != first.len()) {
                return Err(CodecError::InvalidInput("payload lengths differ".into()));
            }
        }
        if k > g_lt.cols() {
            return Err(CodecError::InvalidInput(format!(
                "k = {k} exceeds n = {}",
                g_lt.cols()
            )));
        }
        Ok(Self { k, g_lt, payloads })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.g_lt.cols()
    }

    pub fn m(&self) -> usize {
        self.g_lt.rows()
    }

    pub fn packet_len(&self) -> usize {
        self.payloads.first().map_or(0, Vec::len)
    }

    pub fn g_lt(&self) -> &BitMatrix {
        &self.g_lt
    }

    pub fn payloads(&self) -> &[Vec<u8>] {
        &self.payloads
    }

    pub fn payloads_mut(&mut self) -> &mut [Vec<u8>] {
        &mut self.payloads
    }

    /// Keeps only the listed coded packets (erasure of the rest).
    pub fn select(&self, keep: &[usize]) -> CodedBlock {
        let rows: Vec<BitVec> = keep.iter().map(|&i| self.g_lt.row(i)).collect();
        CodedBlock {
            k: self.k,
            g_lt: BitMatrix::from_bitvecs(self.n(), &rows),
            payloads: keep.iter().map(|&i| self.payloads[i].clone()).collect(),
        }
    }

    /// Length-prefixed binary form: `k, n, m, L` as little-endian `u32`, then
    /// each LT row packed LSB-first into `ceil(n/8)` bytes, then the `m`
    /// payloads of `L` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (n, m, len) = (self.n(), self.m(), self.packet_len());
        let row_bytes = n.div_ceil(8);
        let mut out = Vec::with_capacity(16 + m * (row_bytes + len));
        for v in [self.k, n, m, len] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for r in 0..m {
            let mut packed = vec![0u8; row_bytes];
            for c in self.g_lt.row(r).ones() {
                packed[c / 8] |= 1 << (c % 8);
            }
            out.extend_from_slice(&packed);
        }
        for p in &self.payloads {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let header = |i: usize| -> Result<usize, CodecError> {
            let b = bytes
                .get(4 * i..4 * i + 4)
                .ok_or_else(|| CodecError::Malformed("truncated header".into()))?;
            Ok(u32::from_le_bytes(b.try_into().expect("4-byte slice")) as usize)
        };
        let (k, n, m, len) = (header(0)?, header(1)?, header(2)?, header(3)?);
        let row_bytes = n.div_ceil(8);
        let expected = m
            .checked_mul(row_bytes + len)
            .and_then(|b| b.checked_add(16))
            .ok_or_else(|| CodecError::Malformed("size overflow".into()))?;
        if bytes.len() != expected {
            return Err(CodecError::Malformed(format!(
                "expected {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let mut g_lt = BitMatrix::zeros(m, n);
        let mut at = 16;
        for r in 0..m {
            let row = &bytes[at..at + row_bytes];
            for c in 0..row_bytes * 8 {
                if row[c / 8] >> (c % 8) & 1 == 1 {
                    if c >= n {
                        return Err(CodecError::Malformed(format!("row {r} has bits past n")));
                    }
                    g_lt.set(r, c, true);
                }
            }
            at += row_bytes;
        }
        let payloads = (0..m)
            .map(|i| bytes[at + i * len..at + (i + 1) * len].to_vec())
            .collect();
        Self::new(k, g_lt, payloads)
    }
}

/// Packs equal-length byte packets into a bit matrix, one packet per row.
pub fn packets_to_bits(packets: &[Vec<u8>]) -> Result<BitMatrix, CodecError> {
    let len = packets.first().map_or(0, Vec::len);
    if packets.iter().any(|p| p.len() != len) {
        return Err(CodecError::InvalidInput("packet lengths differ".into()));
    }
    let mut m = BitMatrix::zeros(packets.len(), 8 * len);
    for (r, p) in packets.iter().enumerate() {
        for (b, byte) in p.iter().enumerate() {
            for bit in 0..8 {
                if byte >> bit & 1 == 1 {
                    m.set(r, 8 * b + bit, true);
                }
            }
        }
    }
    Ok(m)
}

fn bits_to_packet(m: &BitMatrix, r: usize) -> Vec<u8> {
    let mut out = vec![0u8; m.cols() / 8];
    for c in m.row(r).ones() {
        out[c / 8] |= 1 << (c % 8);
    }
    out
}

/// Encodes `source` with caller-supplied LT rows.
pub fn encode_with_rows(
    precode: &Precode,
    source: &[Vec<u8>],
    g_lt: BitMatrix,
) -> Result<CodedBlock, CodecError> {
    if source.len() != precode.k() {
        return Err(CodecError::InvalidInput(format!(
            "{} source packets for k = {}",
            source.len(),
            precode.k()
        )));
    }
    if g_lt.cols() != precode.n() {
        return Err(CodecError::InvalidInput(format!(
            "LT rows have {} columns, n = {}",
            g_lt.cols(),
            precode.n()
        )));
    }
    let intermediate = precode.intermediate(&packets_to_bits(source)?)?;
    let coded = g_lt.mul(&intermediate)?;
    let payloads = (0..coded.rows()).map(|r| bits_to_packet(&coded, r)).collect();
    CodedBlock::new(precode.k(), g_lt, payloads)
}

/// Draws `m` LT rows and encodes `source` (`k` packets of `L >= 1` bytes).
pub fn encode<R: Rng + ?Sized>(
    cfg: &RaptorConfig,
    precode: &Precode,
    source: &[Vec<u8>],
    m: usize,
    rng: &mut R,
) -> Result<CodedBlock, CodecError> {
    if source.first().is_none_or(Vec::is_empty) {
        return Err(CodecError::InvalidInput("source packets must be non-empty".into()));
    }
    if precode.k() != cfg.k || precode.n() != cfg.n {
        return Err(CodecError::InvalidInput("pre-code does not match config".into()));
    }
    encode_with_rows(precode, source, lt_rows(cfg, m, rng))
}

/// ML decodability: `rank(G_lt G_pre) == k`.
pub fn decodable(g_lt: &BitMatrix, precode: &Precode) -> bool {
    g_lt.mul(precode.g_pre())
        .map(|prod| prod.rank() == precode.k())
        .unwrap_or(false)
}

/// Equivalent criterion on the stacked system: `rank([G_lt; H]) == n`.
pub fn decodable_stacked(g_lt: &BitMatrix, precode: &Precode) -> bool {
    g_lt.stack(precode.h())
        .map(|s| s.rank() == precode.n())
        .unwrap_or(false)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeOutcome {
    Decoded { source: Vec<Vec<u8>> },
    Failure { rank: usize },
}

/// Gaussian elimination on `[G_lt; H] x = [Y; 0]`, all payload bits at once.
pub fn decode(block: &CodedBlock, precode: &Precode) -> Result<DecodeOutcome, CodecError> {
    if block.n() != precode.n() || block.k() != precode.k() {
        return Err(CodecError::InvalidInput(format!(
            "block is ({}, {}), pre-code is ({}, {})",
            block.k(),
            block.n(),
            precode.k(),
            precode.n()
        )));
    }
    let system = block.g_lt.stack(precode.h())?;
    let mut rhs_packets = block.payloads.clone();
    rhs_packets.extend(std::iter::repeat_n(vec![0u8; block.packet_len()], precode.h().rows()));
    let rhs = packets_to_bits(&rhs_packets)?;
    let outcome = match system.solve_many(&rhs) {
        Ok(ManySolution::Unique(x)) => DecodeOutcome::Decoded {
            source: (0..precode.k()).map(|r| bits_to_packet(&x, r)).collect(),
        },
        Ok(ManySolution::RankDeficient { rank }) => DecodeOutcome::Failure { rank },
        Err(Gf2Error::Inconsistent) => return Err(CodecError::Inconsistent),
        Err(e) => return Err(e.into()),
    };
    debug_assert_eq!(
        matches!(outcome, DecodeOutcome::Decoded { .. }),
        decodable(&block.g_lt, precode),
        "decoder success must coincide with rank(G_lt G_pre) == k"
    );
    debug_assert_eq!(
        decodable(&block.g_lt, precode),
        decodable_stacked(&block.g_lt, precode)
    );
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn cfg(k: usize, n: usize, eta: f64, omega: DegreeDistribution) -> RaptorConfig {
        RaptorConfig::new(k, n, eta, omega).unwrap()
    }

    fn random_source<R: Rng>(k: usize, len: usize, rng: &mut R) -> Vec<Vec<u8>> {
        (0..k).map(|_| (0..len).map(|_| rng.gen()).collect()).collect()
    }

    #[test]
    fn config_validation() {
        let om = DegreeDistribution::ideal_soliton(5).unwrap();
        assert!(RaptorConfig::new(0, 5, 0.5, om.clone()).is_err());
        assert!(RaptorConfig::new(6, 5, 0.5, om.clone()).is_err());
        assert!(RaptorConfig::new(3, 5, 1.5, om.clone()).is_err());
        assert!(RaptorConfig::new(3, 6, 0.5, om.clone()).is_err());
        assert!(RaptorConfig::new(3, 5, 0.5, om).is_ok());
    }

    #[test]
    fn precode_structure() {
        let c = cfg(5, 9, 0.5, DegreeDistribution::binomial(9).unwrap());
        let mut rng = stream_rng(1, 0);
        for _ in 0..50 {
            let pc = Precode::generate(&c, &mut rng);
            let (g, h) = (pc.g_pre(), pc.h());
            assert_eq!((g.rows(), g.cols(), h.rows(), h.cols()), (9, 5, 4, 9));
            for i in 0..5 {
                for j in 0..5 {
                    assert_eq!(g.get(i, j), i == j);
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(h.get(i, 5 + j), i == j);
                }
            }
            assert!(h.mul(g).unwrap().is_zero());
            assert_eq!(g.rank(), 5);
        }
    }

    #[test]
    fn precode_degenerate_cases() {
        let c = cfg(4, 4, 0.5, DegreeDistribution::ideal_soliton(4).unwrap());
        let pc = Precode::generate(&c, &mut stream_rng(2, 0));
        assert_eq!(pc.g_pre(), &BitMatrix::identity(4));
        assert_eq!((pc.h().rows(), pc.h().cols()), (0, 4));

        let c = cfg(3, 5, 0.0, DegreeDistribution::ideal_soliton(5).unwrap());
        let pc = Precode::generate(&c, &mut stream_rng(2, 1));
        let want = BitMatrix::identity(3).stack(&BitMatrix::zeros(2, 3)).unwrap();
        assert_eq!(pc.g_pre(), &want);
    }

    #[test]
    fn lt_row_point_masses() {
        let c = cfg(3, 6, 0.5, DegreeDistribution::point_mass(6, 6).unwrap());
        let mut rng = stream_rng(3, 0);
        assert_eq!(lt_row(&c, &mut rng).weight(), 6);

        let n = 6;
        let c = cfg(3, n, 0.5, DegreeDistribution::point_mass(n, 1).unwrap());
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            let row = lt_row(&c, &mut rng);
            assert_eq!(row.weight(), 1);
            counts[row.ones().next().unwrap()] += 1;
        }
        let p = 1.0 / n as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for cnt in counts {
            assert!((cnt as f64 / draws as f64 - p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn lt_row_binomial_is_uniform_over_nonzero() {
        let c = cfg(2, 3, 0.5, DegreeDistribution::binomial(3).unwrap());
        let mut rng = stream_rng(4, 0);
        let draws = 100_000;
        let mut counts = [0usize; 8];
        for _ in 0..draws {
            let row = lt_row(&c, &mut rng);
            let idx: usize = row.ones().map(|i| 1 << i).sum();
            counts[idx] += 1;
        }
        assert_eq!(counts[0], 0);
        let p = 1.0 / 7.0;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for cnt in &counts[1..] {
            assert!((*cnt as f64 / draws as f64 - p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn systematic_rows_return_source() {
        let c = cfg(3, 5, 0.5, DegreeDistribution::ideal_soliton(5).unwrap());
        let mut rng = stream_rng(5, 0);
        let pc = Precode::generate(&c, &mut rng);
        let src = random_source(3, 4, &mut rng);
        let mut e1 = BitMatrix::zeros(1, 5);
        e1.set(0, 1, true);
        let block = encode_with_rows(&pc, &src, e1).unwrap();
        assert_eq!(block.payloads()[0], src[1]);
    }

    #[test]
    fn zero_source_gives_zero_payloads() {
        let c = cfg(4, 6, 0.7, DegreeDistribution::ideal_soliton(6).unwrap());
        let mut rng = stream_rng(6, 0);
        let pc = Precode::generate(&c, &mut rng);
        let block = encode(&c, &pc, &vec![vec![0u8; 8]; 4], 10, &mut rng).unwrap();
        assert!(block.payloads().iter().all(|p| p.iter().all(|&b| b == 0)));
    }

    #[test]
    fn payloads_match_naive_xor() {
        let c = cfg(6, 9, 0.4, DegreeDistribution::ideal_soliton(9).unwrap());
        let mut rng = stream_rng(7, 0);
        let pc = Precode::generate(&c, &mut rng);
        let src = random_source(6, 16, &mut rng);
        let block = encode(&c, &pc, &src, 20, &mut rng).unwrap();
        // intermediate packet t = XOR of source packets i with g_pre[t][i]
        let inter: Vec<Vec<u8>> = (0..9)
            .map(|t| {
                let mut acc = vec![0u8; 16];
                for (i, s) in src.iter().enumerate() {
                    if pc.g_pre().get(t, i) {
                        for (a, b) in acc.iter_mut().zip(s) {
                            *a ^= b;
                        }
                    }
                }
                acc
            })
            .collect();
        for (r, payload) in block.payloads().iter().enumerate() {
            let mut acc = vec![0u8; 16];
            for (t, it) in inter.iter().enumerate() {
                if block.g_lt().get(r, t) {
                    for (a, b) in acc.iter_mut().zip(it) {
                        *a ^= b;
                    }
                }
            }
            assert_eq!(&acc, payload);
        }
    }

    #[test]
    fn decodable_trivial_cases() {
        let c = cfg(3, 5, 0.5, DegreeDistribution::ideal_soliton(5).unwrap());
        let pc = Precode::generate(&c, &mut stream_rng(8, 0));
        assert!(decodable(&BitMatrix::identity(5), &pc));
        assert!(!decodable(&BitMatrix::zeros(7, 5), &pc));
        assert!(!decodable_stacked(&BitMatrix::zeros(7, 5), &pc));
    }

    #[test]
    fn product_and_stacked_rank_agree() {
        let c = cfg(4, 6, 0.5, DegreeDistribution::ideal_soliton(6).unwrap());
        let mut rng = stream_rng(9, 0);
        for t in 0..1000 {
            let pc = Precode::generate(&c, &mut rng);
            let m = 3 + t % 6;
            let g = lt_rows(&c, m, &mut rng);
            assert_eq!(decodable(&g, &pc), decodable_stacked(&g, &pc));
        }
    }

    #[test]
    fn decode_identity_rows() {
        let c = cfg(4, 6, 0.5, DegreeDistribution::ideal_soliton(6).unwrap());
        let mut rng = stream_rng(10, 0);
        let pc = Precode::generate(&c, &mut rng);
        let src = random_source(4, 5, &mut rng);
        let block = encode_with_rows(&pc, &src, BitMatrix::identity(6)).unwrap();
        assert_eq!(decode(&block, &pc).unwrap(), DecodeOutcome::Decoded { source: src });

        let c = cfg(3, 3, 0.5, DegreeDistribution::ideal_soliton(3).unwrap());
        let pc = Precode::generate(&c, &mut rng);
        let src = random_source(3, 2, &mut rng);
        let block = encode_with_rows(&pc, &src, BitMatrix::identity(3)).unwrap();
        assert_eq!(decode(&block, &pc).unwrap(), DecodeOutcome::Decoded { source: src });
    }

    #[test]
    fn decode_round_trips() {
        let c = cfg(20, 21, 0.7, DegreeDistribution::ideal_soliton(21).unwrap());
        let (mut ok, mut failed) = (0, 0);
        for trial in 0..1000 {
            let mut rng = stream_rng(11, trial);
            let pc = Precode::generate(&c, &mut rng);
            let src = random_source(20, 3, &mut rng);
            let block = encode(&c, &pc, &src, 40, &mut rng).unwrap();
            match decode(&block, &pc).unwrap() {
                DecodeOutcome::Decoded { source } => {
                    assert_eq!(source, src);
                    ok += 1;
                }
                DecodeOutcome::Failure { rank } => {
                    assert!(rank < 21);
                    assert!(!decodable(block.g_lt(), &pc));
                    failed += 1;
                }
            }
        }
        assert!(ok > 900, "ok = {ok}, failed = {failed}");
    }

    #[test]
    fn fewer_than_k_rows_never_decode() {
        let c = cfg(5, 7, 0.5, DegreeDistribution::binomial(7).unwrap());
        let mut rng = stream_rng(12, 0);
        for _ in 0..200 {
            let pc = Precode::generate(&c, &mut rng);
            let src = random_source(5, 2, &mut rng);
            let block = encode(&c, &pc, &src, 4, &mut rng).unwrap();
            assert!(matches!(decode(&block, &pc).unwrap(), DecodeOutcome::Failure { .. }));
        }
    }

    #[test]
    fn corrupted_payload_is_inconsistent() {
        let c = cfg(3, 4, 0.5, DegreeDistribution::binomial(4).unwrap());
        let mut rng = stream_rng(13, 0);
        let pc = Precode::generate(&c, &mut rng);
        let src = random_source(3, 4, &mut rng);
        // identity rows plus a duplicate of row 0: corrupting the duplicate breaks consistency
        let mut rows = BitMatrix::identity(4);
        rows = rows.stack(&BitMatrix::from_rows(&[[1u8, 0, 0, 0]])).unwrap();
        let mut block = encode_with_rows(&pc, &src, rows).unwrap();
        block.payloads_mut()[4][0] ^= 1;
        assert!(matches!(decode(&block, &pc), Err(CodecError::Inconsistent)));
    }

    #[test]
    fn encoding_is_linear() {
        let c = cfg(6, 8, 0.3, DegreeDistribution::ideal_soliton(8).unwrap());
        let mut rng = stream_rng(14, 0);
        let pc = Precode::generate(&c, &mut rng);
        let s1 = random_source(6, 8, &mut rng);
        let s2 = random_source(6, 8, &mut rng);
        let sx: Vec<Vec<u8>> = s1
            .iter()
            .zip(&s2)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x ^ y).collect())
            .collect();
        let b1 = encode(&c, &pc, &s1, 12, &mut stream_rng(15, 0)).unwrap();
        let b2 = encode(&c, &pc, &s2, 12, &mut stream_rng(15, 0)).unwrap();
        let bx = encode(&c, &pc, &sx, 12, &mut stream_rng(15, 0)).unwrap();
        for ((p1, p2), px) in b1.payloads().iter().zip(b2.payloads()).zip(bx.payloads()) {
            let x: Vec<u8> = p1.iter().zip(p2).map(|(a, b)| a ^ b).collect();
            assert_eq!(&x, px);
        }
    }

    #[test]
    fn success_does_not_depend_on_packet_length() {
        let c = cfg(8, 10, 0.5, DegreeDistribution::ideal_soliton(10).unwrap());
        for trial in 0..100 {
            let outcome = |len: usize| {
                let mut rng = stream_rng(16, trial);
                let pc = Precode::generate(&c, &mut rng);
                let g = lt_rows(&c, 10, &mut rng);
                let src = vec![vec![0xA5u8; len]; 8];
                let block = encode_with_rows(&pc, &src, g).unwrap();
                matches!(decode(&block, &pc).unwrap(), DecodeOutcome::Decoded { .. })
            };
            assert_eq!(outcome(1), outcome(33));
        }
    }

    #[test]
    fn block_serialization_round_trip() {
        let c = cfg(5, 11, 0.5, DegreeDistribution::ideal_soliton(11).unwrap());
        let mut rng = stream_rng(17, 0);
        let pc = Precode::generate(&c, &mut rng);
        let src = random_source(5, 7, &mut rng);
        let block = encode(&c, &pc, &src, 9, &mut rng).unwrap();
        let bytes = block.to_bytes();
        assert_eq!(&bytes[..4], &5u32.to_le_bytes());
        assert_eq!(&bytes[4..8], &11u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &9u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &7u32.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 9 * (2 + 7));
        assert_eq!(CodedBlock::from_bytes(&bytes).unwrap(), block);
        assert!(CodedBlock::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[16 + 1] |= 0x80; // bit 15 of row 0, past n = 11
        assert!(CodedBlock::from_bytes(&bad).is_err());
    }
}
