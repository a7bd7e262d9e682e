//! Dense GF(2) matrices with bit-packed rows.
//!
//! Rows are stored row-major in `u64` words. Bits past `cols` in the last
//! word of each row are kept at zero, so whole-word XOR and popcount are
//! always exact.

use std::fmt;

use rand::Rng;
use thiserror::Error;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(bits: usize) -> u64 {
    match bits % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Gf2Error {
    #[error("dimension mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
}

/// A bit vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = Self::zeros(0);
        for b in bits {
            v.push(b);
        }
        v
    }

    /// Builds a vector from 0/1 entries; any non-zero entry counts as 1.
    pub fn from_u8s(bits: &[u8]) -> Self {
        Self::from_bits(bits.iter().map(|&b| b != 0))
    }

    fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.truncate(words_for(len));
        words.resize(words_for(len), 0);
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { len, words }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if bit {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Indices of the set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD_BITS + t)
            })
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of the overlap with `other`.
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec[")?;
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        write!(f, "]")
    }
}

/// Dense GF(2) matrix, row-major, bit-packed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Outcome of [`BitMatrix::solve`].
#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Unique(BitVec),
    RankDeficient { rank: usize },
}

/// Outcome of [`BitMatrix::solve_many`]; one solution column per right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub enum ManySolution {
    /// `cols x rhs.cols` matrix `X` with `A X = B`.
    Unique(BitMatrix),
    RankDeficient { rank: usize },
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        let mask = tail_mask(cols);
        for r in 0..rows {
            let row = m.row_words_mut(r);
            row.fill(u64::MAX);
            if let Some(last) = row.last_mut() {
                *last &= mask;
            }
        }
        m
    }

    /// Builds a matrix from rows of 0/1 entries.
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged row {i}");
            for (j, &b) in r.iter().enumerate() {
                if b != 0 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Builds a matrix whose rows are the given vectors (all of length `cols`).
    pub fn from_bitvecs(cols: usize, rows: &[BitVec]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row {i} has length {} != {cols}", r.len());
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        m
    }

    /// Column vector view of a bit vector (`len x 1`).
    pub fn column(v: &BitVec) -> Self {
        let mut m = Self::zeros(v.len(), 1);
        for i in v.ones() {
            m.set(i, 0, true);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        (self.data[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        let w = &mut self.data[r * self.stride + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if bit {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVec {
        BitVec::from_words(self.cols, self.row_words(r).to_vec())
    }

    pub fn set_row(&mut self, r: usize, v: &BitVec) {
        assert_eq!(v.len(), self.cols, "row length mismatch");
        self.row_words_mut(r).copy_from_slice(v.words());
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// `dst ^= src` for two rows of this matrix.
    fn xor_rows(&mut self, dst: usize, src: usize, from_word: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        let (d, sr) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..dst * s + s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..src * s + s])
        };
        for (a, b) in d[from_word..].iter_mut().zip(&sr[from_word..]) {
            *a ^= b;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        let (lo, hi) = self.data.split_at_mut(a.max(b) * s);
        let lo_start = a.min(b) * s;
        lo[lo_start..lo_start + s].swap_with_slice(&mut hi[..s]);
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(self.mismatch("mul", other));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        let s = other.stride;
        for i in 0..self.rows {
            let dst = &mut out.data[i * s..(i + 1) * s];
            for (wi, &w) in self.row_words(i).iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let t = wi * WORD_BITS + w.trailing_zeros() as usize;
                    w &= w - 1;
                    for (a, b) in dst.iter_mut().zip(&other.data[t * s..(t + 1) * s]) {
                        *a ^= b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * v`.
    pub fn mul_vec(&self, v: &BitVec) -> Result<BitVec, Gf2Error> {
        if self.cols != v.len() {
            return Err(Gf2Error::DimensionMismatch {
                op: "mul_vec",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.len(),
                right_cols: 1,
            });
        }
        Ok(BitVec::from_bits((0..self.rows).map(|r| {
            self.row_words(r)
                .iter()
                .zip(v.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum::<u32>()
                % 2
                == 1
        })))
    }

    /// Row-vector product `v^T * self`: XOR of the rows selected by `v`.
    pub fn vec_mul(&self, v: &BitVec) -> Result<BitVec, Gf2Error> {
        if self.rows != v.len() {
            return Err(Gf2Error::DimensionMismatch {
                op: "vec_mul",
                left_rows: 1,
                left_cols: v.len(),
                right_rows: self.rows,
                right_cols: self.cols,
            });
        }
        let mut acc = vec![0u64; self.stride];
        for t in v.ones() {
            for (a, b) in acc.iter_mut().zip(self.row_words(t)) {
                *a ^= b;
            }
        }
        Ok(BitVec::from_words(self.cols, acc))
    }

    /// Vertical concatenation, `self` on top.
    pub fn stack(&self, bottom: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.cols != bottom.cols {
            return Err(self.mismatch("stack", bottom));
        }
        let mut data = Vec::with_capacity(self.data.len() + bottom.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&bottom.data);
        Ok(BitMatrix {
            rows: self.rows + bottom.rows,
            cols: self.cols,
            stride: self.stride,
            data,
        })
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in BitVec::from_words(self.cols, self.row_words(r).to_vec()).ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// GF(2) rank by forward elimination on a scratch copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.forward_eliminate()
    }

    /// In-place forward elimination; returns the rank.
    fn forward_eliminate(&mut self) -> usize {
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let wi = c / WORD_BITS;
            let bit = 1u64 << (c % WORD_BITS);
            let Some(p) = (rank..self.rows).find(|&r| self.data[r * self.stride + wi] & bit != 0)
            else {
                continue;
            };
            self.swap_rows(rank, p);
            for r in rank + 1..self.rows {
                if self.data[r * self.stride + wi] & bit != 0 {
                    self.xor_rows(r, rank, wi);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Solves `self * x = y`.
    ///
    /// Returns [`Solution::RankDeficient`] when the column rank is below
    /// `cols`, and [`Gf2Error::Inconsistent`] when the system has full column
    /// rank but no solution.
    pub fn solve(&self, y: &BitVec) -> Result<Solution, Gf2Error> {
        if self.rows != y.len() {
            return Err(Gf2Error::DimensionMismatch {
                op: "solve",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: y.len(),
                right_cols: 1,
            });
        }
        Ok(match self.solve_many(&BitMatrix::column(y))? {
            ManySolution::Unique(x) => Solution::Unique(x.transpose().row(0)),
            ManySolution::RankDeficient { rank } => Solution::RankDeficient { rank },
        })
    }

    /// Solves `self * X = rhs` for every column of `rhs` in one Gauss-Jordan pass.
    pub fn solve_many(&self, rhs: &BitMatrix) -> Result<ManySolution, Gf2Error> {
        if self.rows != rhs.rows {
            return Err(self.mismatch("solve_many", rhs));
        }
        let mut a = self.clone();
        let mut b = rhs.clone();
        let mut pivots = Vec::with_capacity(self.cols.min(self.rows));
        for c in 0..a.cols {
            let rank = pivots.len();
            if rank == a.rows {
                break;
            }
            let wi = c / WORD_BITS;
            let bit = 1u64 << (c % WORD_BITS);
            let Some(p) = (rank..a.rows).find(|&r| a.data[r * a.stride + wi] & bit != 0) else {
                continue;
            };
            a.swap_rows(rank, p);
            b.swap_rows(rank, p);
            for r in 0..a.rows {
                if r != rank && a.data[r * a.stride + wi] & bit != 0 {
                    a.xor_rows(r, rank, wi);
                    b.xor_rows(r, rank, 0);
                }
            }
            pivots.push(c);
        }
        let rank = pivots.len();
        if rank < a.cols {
            return Ok(ManySolution::RankDeficient { rank });
        }
        if (rank..b.rows).any(|r| b.row_words(r).iter().any(|&w| w != 0)) {
            return Err(Gf2Error::Inconsistent);
        }
        // full column rank: pivot row i sits on column i
        let mut x = BitMatrix::zeros(a.cols, b.cols);
        for (i, &c) in pivots.iter().enumerate() {
            x.row_words_mut(c).copy_from_slice(b.row_words(i));
        }
        Ok(ManySolution::Unique(x))
    }

    /// Matrix with i.i.d. Bernoulli(`eta`) entries.
    pub fn random_bernoulli<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        eta: f64,
        rng: &mut R,
    ) -> Result<BitMatrix, Gf2Error> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Gf2Error::InvalidProbability(eta));
        }
        let mut m = BitMatrix::zeros(rows, cols);
        if eta == 1.0 {
            return Ok(BitMatrix::ones(rows, cols));
        }
        if eta > 0.0 {
            for r in 0..rows {
                for c in 0..cols {
                    if rng.gen_bool(eta) {
                        m.set(r, c, true);
                    }
                }
            }
        }
        Ok(m)
    }

    fn mismatch(&self, op: &'static str, other: &BitMatrix) -> Gf2Error {
        Gf2Error::DimensionMismatch {
            op,
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Unpacked reference: rows as Vec<u8>, elimination mod 2 on integers.
    fn naive_rank(rows: &[Vec<u8>]) -> usize {
        let mut m: Vec<Vec<u8>> = rows.to_vec();
        let cols = m.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..m.len()).find(|&r| m[r][c] % 2 == 1) else {
                continue;
            };
            m.swap(rank, p);
            let pivot = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && row[c] % 2 == 1 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x = (*x + y) % 2;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn naive_mul(a: &[Vec<u8>], b: &[Vec<u8>]) -> Vec<Vec<u8>> {
        let inner = b.len();
        let cols = b.first().map_or(0, |r| r.len());
        a.iter()
            .map(|ar| {
                (0..cols)
                    .map(|j| (0..inner).map(|t| ar[t] * b[t][j]).sum::<u8>() % 2)
                    .collect()
            })
            .collect()
    }

    fn random_rows(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Vec<Vec<u8>> {
        (0..r)
            .map(|_| (0..c).map(|_| rng.gen_range(0..2u8)).collect())
            .collect()
    }

    fn to_rows(m: &BitMatrix) -> Vec<Vec<u8>> {
        (0..m.rows())
            .map(|r| (0..m.cols()).map(|c| m.get(r, c) as u8).collect())
            .collect()
    }

    #[test]
    fn identity_times_m_is_m() {
        let m = BitMatrix::from_rows(&[[1u8, 0, 1, 1], [0, 1, 1, 0], [1, 1, 1, 1]]);
        assert_eq!(BitMatrix::identity(3).mul(&m).unwrap(), m);
    }

    #[test]
    fn one_plus_one_is_zero() {
        let a = BitMatrix::from_rows(&[[1u8, 1]]);
        let b = BitMatrix::from_rows(&[[1u8], [1]]);
        assert_eq!(a.mul(&b).unwrap(), BitMatrix::from_rows(&[[0u8]]));
    }

    #[test]
    fn mul_matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = random_rows(&mut rng, 8, 8);
            let b = random_rows(&mut rng, 8, 8);
            let got = BitMatrix::from_rows(&a).mul(&BitMatrix::from_rows(&b)).unwrap();
            assert_eq!(to_rows(&got), naive_mul(&a, &b));
        }
        // wide operands cross word boundaries
        let a = random_rows(&mut rng, 5, 130);
        let b = random_rows(&mut rng, 130, 70);
        let got = BitMatrix::from_rows(&a).mul(&BitMatrix::from_rows(&b)).unwrap();
        assert_eq!(to_rows(&got), naive_mul(&a, &b));
    }

    #[test]
    fn mul_dimension_mismatch() {
        let err = BitMatrix::zeros(2, 3).mul(&BitMatrix::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Gf2Error::DimensionMismatch { op: "mul", .. }));
    }

    #[test]
    fn rank_basics() {
        assert_eq!(BitMatrix::identity(7).rank(), 7);
        assert_eq!(BitMatrix::from_rows(&[[1u8, 1], [1, 1]]).rank(), 1);
        assert_eq!(BitMatrix::zeros(0, 5).rank(), 0);
        assert_eq!(BitMatrix::zeros(5, 0).rank(), 0);
        assert_eq!(BitMatrix::zeros(3, 3).rank(), 0);
    }

    #[test]
    fn rank_is_pure() {
        let m = BitMatrix::from_rows(&[[1u8, 1, 0], [0, 1, 1], [1, 0, 1]]);
        let before = m.clone();
        assert_eq!(m.rank(), 2);
        assert_eq!(m, before);
    }

    #[test]
    fn rank_matches_naive_exhaustive_4x4() {
        for bits in 0u32..(1 << 16) {
            let rows: Vec<Vec<u8>> = (0..4)
                .map(|r| (0..4).map(|c| ((bits >> (4 * r + c)) & 1) as u8).collect())
                .collect();
            assert_eq!(BitMatrix::from_rows(&rows).rank(), naive_rank(&rows), "{rows:?}");
        }
    }

    #[test]
    fn rank_matches_naive_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let r = rng.gen_range(1..=10);
            let c = rng.gen_range(1..=10);
            let rows = random_rows(&mut rng, r, c);
            assert_eq!(BitMatrix::from_rows(&rows).rank(), naive_rank(&rows));
        }
        let rows = random_rows(&mut rng, 70, 150);
        assert_eq!(BitMatrix::from_rows(&rows).rank(), naive_rank(&rows));
    }

    #[test]
    fn solve_identity() {
        let y = BitVec::from_u8s(&[1, 0, 1, 1, 0]);
        assert_eq!(
            BitMatrix::identity(5).solve(&y).unwrap(),
            Solution::Unique(y.clone())
        );
    }

    #[test]
    fn solve_overdetermined_consistent() {
        let a = BitMatrix::from_rows(&[[1u8, 0], [1, 1], [0, 1]]);
        let y = BitVec::from_u8s(&[1, 1, 0]);
        assert_eq!(
            a.solve(&y).unwrap(),
            Solution::Unique(BitVec::from_u8s(&[1, 0]))
        );
    }

    #[test]
    fn solve_reports_rank_deficiency_and_inconsistency() {
        let a = BitMatrix::from_rows(&[[1u8, 1], [1, 1]]);
        assert_eq!(
            a.solve(&BitVec::from_u8s(&[1, 1])).unwrap(),
            Solution::RankDeficient { rank: 1 }
        );
        let a = BitMatrix::from_rows(&[[1u8, 0], [0, 1], [1, 1]]);
        assert_eq!(
            a.solve(&BitVec::from_u8s(&[1, 1, 1])).unwrap_err(),
            Gf2Error::Inconsistent
        );
        assert!(matches!(
            a.solve(&BitVec::from_u8s(&[1, 1])).unwrap_err(),
            Gf2Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn solve_round_trip_random_full_column_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 100 {
            let a = BitMatrix::random_bernoulli(12, 8, 0.5, &mut rng).unwrap();
            if a.rank() < 8 {
                continue;
            }
            let x = BitVec::from_bits((0..8).map(|_| rng.gen_bool(0.5)));
            let y = a.mul_vec(&x).unwrap();
            match a.solve(&y).unwrap() {
                Solution::Unique(got) => {
                    assert_eq!(got, x);
                    assert_eq!(a.mul_vec(&got).unwrap(), y);
                }
                other => panic!("unexpected {other:?}"),
            }
            checked += 1;
        }
    }

    #[test]
    fn stack_basics() {
        let s = BitMatrix::identity(2).stack(&BitMatrix::identity(2)).unwrap();
        assert_eq!((s.rows(), s.cols(), s.rank()), (4, 2, 2));
        let a = BitMatrix::from_rows(&[[1u8, 0, 1]]);
        assert_eq!(a.stack(&BitMatrix::zeros(0, 3)).unwrap(), a);
        assert!(a.stack(&BitMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn bernoulli_extremes_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(BitMatrix::random_bernoulli(7, 70, 0.0, &mut rng).unwrap().is_zero());
        let ones = BitMatrix::random_bernoulli(7, 70, 1.0, &mut rng).unwrap();
        assert!((0..7).all(|r| ones.row_weight(r) == 70));
        // 10^5 entries; 3 sigma of the sample mean is ~0.0043
        let m = BitMatrix::random_bernoulli(100, 1000, 0.3, &mut rng).unwrap();
        let mean = (0..100).map(|r| m.row_weight(r)).sum::<usize>() as f64 / 1e5;
        assert!((mean - 0.3).abs() < 0.01, "mean {mean}");
        assert!(BitMatrix::random_bernoulli(1, 1, 1.5, &mut rng).is_err());
    }

    #[test]
    fn bernoulli_is_deterministic_per_seed() {
        let a = BitMatrix::random_bernoulli(9, 9, 0.4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = BitMatrix::random_bernoulli(9, 9, 0.4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bitvec_ones_and_dot() {
        let v = BitVec::from_u8s(&[0, 1, 1, 0, 1]);
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![1, 2, 4]);
        assert_eq!(v.weight(), 3);
        assert!(!v.dot(&BitVec::from_u8s(&[0, 1, 1, 0, 0])));
        assert!(v.dot(&BitVec::from_u8s(&[0, 0, 0, 0, 1])));
    }
}
