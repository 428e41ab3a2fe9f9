//! Dense rational matrices with exact rank and null space.
//!
//! Elimination uses a fixed pivot rule: in the leftmost column not yet
//! resolved, the first row (at or below the current pivot row) with a
//! nonzero entry becomes the pivot. Kernel bases are therefore reproducible.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{ExactError, Rational};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: QMatrix,
    pub pivots: Vec<usize>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, ExactError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(ExactError::Ragged);
        }
        Ok(QMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Builds a matrix whose columns are the given vectors, all of length `rows`.
    pub fn from_columns(rows: usize, cols: &[Vec<Rational>]) -> Result<Self, ExactError> {
        let mut m = Self::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            if col.len() != rows {
                return Err(ExactError::DimensionMismatch {
                    expected: rows,
                    found: col.len(),
                });
            }
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        Ok(m)
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| super::qvec(r)).collect()).expect("rectangular literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, idx.len());
        for (k, &j) in idx.iter().enumerate() {
            for i in 0..self.rows {
                m[(i, k)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vec<Rational>, ExactError> {
        if v.len() != self.cols {
            return Err(ExactError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn mul(&self, other: &QMatrix) -> Result<QMatrix, ExactError> {
        if self.cols != other.rows {
            return Err(ExactError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Rational::is_zero)
    }

    /// Reduced row echelon form under the deterministic pivot rule.
    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut prow = 0;
        for col in 0..m.cols {
            if prow == m.rows {
                break;
            }
            let Some(sel) = (prow..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(prow, sel);
            let inv = m[(prow, col)].recip().expect("pivot is nonzero");
            for j in col..m.cols {
                let v = &m[(prow, j)] * &inv;
                m[(prow, j)] = v;
            }
            for r in 0..m.rows {
                if r == prow || m[(r, col)].is_zero() {
                    continue;
                }
                let factor = m[(r, col)].clone();
                for j in col..m.cols {
                    let delta = &factor * &m[(prow, j)];
                    m[(r, j)] -= delta;
                }
            }
            pivots.push(col);
            prow += 1;
        }
        Rref { matrix: m, pivots }
    }

    /// Exact rank over the rationals.
    ///
    /// Tries a fraction-free integer elimination in `i128` first and falls
    /// back to rational elimination if any intermediate value overflows.
    pub fn rank(&self) -> usize {
        if let Some(r) = self.rank_small_int() {
            return r;
        }
        self.rank_rational()
    }

    /// Rank through rational row reduction only.
    pub fn rank_rational(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Rank via Bareiss elimination on column-rescaled integer entries.
    /// `None` when entries do not fit or an intermediate overflows.
    pub fn rank_small_int(&self) -> Option<usize> {
        let ints = self.integer_columns_i64()?;
        bareiss_rank(self.rows, self.cols, ints)
    }

    /// Scales each column by the lcm of its denominators; returns the integer
    /// entries row-major if all fit in `i64`.
    fn integer_columns_i64(&self) -> Option<Vec<i128>> {
        let mut out = vec![0i128; self.rows * self.cols];
        for j in 0..self.cols {
            let mut l = BigInt::from(1);
            for i in 0..self.rows {
                l = l.lcm(self[(i, j)].denom());
            }
            for i in 0..self.rows {
                let e = &self[(i, j)];
                let v: BigInt = e.numer() * (&l / e.denom());
                out[i * self.cols + j] = v.to_i64()? as i128;
            }
        }
        Some(out)
    }

    /// Basis of the right null space: one vector per non-pivot column, with a
    /// 1 in that column. Length is `cols - rank`.
    pub fn kernel_basis(&self) -> Vec<Vec<Rational>> {
        let Rref { matrix: r, pivots } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (prow, &pc) in pivots.iter().enumerate() {
                    v[pc] = -&r[(prow, f)];
                }
                v
            })
            .collect()
    }

    /// Determinant of a square matrix by rational elimination.
    pub fn determinant(&self) -> Result<Rational, ExactError> {
        if self.rows != self.cols {
            return Err(ExactError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut m = self.clone();
        let mut det = Rational::one();
        for col in 0..m.cols {
            let Some(sel) = (col..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                return Ok(Rational::zero());
            };
            if sel != col {
                m.swap_rows(col, sel);
                det = -det;
            }
            let p = m[(col, col)].clone();
            det *= &p;
            for r in col + 1..m.rows {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let factor = &m[(r, col)] / &p;
                for j in col..m.cols {
                    let delta = &factor * &m[(col, j)];
                    m[(r, j)] -= delta;
                }
            }
        }
        Ok(det)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// Fraction-free Gaussian elimination; exact because every division is exact.
/// `a` is row-major `rows x cols`; `None` on `i128` overflow.
pub(crate) fn bareiss_rank(rows: usize, cols: usize, mut a: Vec<i128>) -> Option<usize> {
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(sel) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
            continue;
        };
        if sel != rank {
            for j in 0..cols {
                a.swap(sel * cols + j, rank * cols + j);
            }
        }
        let piv = a[rank * cols + col];
        for r in rank + 1..rows {
            let lead = a[r * cols + col];
            for j in col..cols {
                let lhs = piv.checked_mul(a[r * cols + j])?;
                let rhs = lead.checked_mul(a[rank * cols + j])?;
                a[r * cols + j] = lhs.checked_sub(rhs)? / prev;
            }
        }
        prev = piv;
        rank += 1;
    }
    Some(rank)
}

/// The Mersenne prime `2^61 - 1`.
pub(crate) const PRIME: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b);
        }
        b = mul_mod(b, b);
        e >>= 1;
    }
    acc
}

/// Image of `x` in the field with [`PRIME`] elements, if its denominator is a unit.
pub(crate) fn to_mod_p(x: &Rational) -> Option<u64> {
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;
    let p = BigInt::from(PRIME);
    let reduce = |v: &BigInt| ((v % &p + &p) % &p).to_u64().expect("reduced below p");
    let den = reduce(x.denom());
    if den == 0 {
        return None;
    }
    Some(mul_mod(reduce(x.numer()), pow_mod(den, PRIME - 2)))
}

/// Rank over the field with [`PRIME`] elements; never exceeds the rank over Q
/// of any rational matrix reducing to `a`.
pub(crate) fn rank_mod_p(rows: usize, cols: usize, mut a: Vec<u64>) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(sel) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
            continue;
        };
        if sel != rank {
            for j in 0..cols {
                a.swap(sel * cols + j, rank * cols + j);
            }
        }
        let inv = pow_mod(a[rank * cols + col], PRIME - 2);
        for r in rank + 1..rows {
            let f = mul_mod(a[r * cols + col], inv);
            if f == 0 {
                continue;
            }
            for j in col..cols {
                let sub = mul_mod(f, a[rank * cols + j]);
                a[r * cols + j] = (a[r * cols + j] + PRIME - sub) % PRIME;
            }
        }
        rank += 1;
    }
    rank
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl Serialize for QMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<Rational>>::deserialize(d)?;
        QMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Returns `true` if `v` is the zero vector.
pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Rational::is_zero)
}

/// Scales a nonzero vector so that its first nonzero entry is `1`.
pub fn normalize_leading(v: &[Rational]) -> Vec<Rational> {
    match v.iter().find(|x| !x.is_zero()) {
        None => v.to_vec(),
        Some(lead) => {
            let inv = lead.recip().expect("nonzero");
            v.iter().map(|x| x * &inv).collect()
        }
    }
}
