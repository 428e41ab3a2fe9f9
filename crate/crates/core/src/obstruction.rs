//! First-order obstruction to eventual smoothability for one ghost component.
//!
//! The obstruction map sends the line at attachment point `p_i` to
//! `H^1(C, O_C) ⊗ T_{X,q}`. Pairing with a basis of `H^0(C, ω_C)` and a basis
//! of `T_{X,q}^∨` turns it into a `(g·N) x n` matrix whose column `i` is the
//! Kronecker product `e_i ⊗ v_i`, where `e_i` is the evaluation covector at
//! `p_i` and `v_i` the derivative of the effective branch there. The kernel of
//! the map and of this matrix coincide, so every check below is a rank
//! computation over the rationals.
//!
//! Verdicts are one-directional: an injective map rules out eventual
//! smoothability; a kernel proves nothing, hence "inconclusive".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{AttachmentPoint, CurveError, GhostCurveModel};
use crate::exact::{bareiss_rank, is_zero_vec, rank_mod_p, to_mod_p, QMatrix, Rational};

/// Largest attachment count accepted by the exhaustive subset search.
pub const MAX_SUBSET_POINTS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObstructionError {
    #[error("genus must be at least 1")]
    ZeroGenus,
    #[error("ambient dimension must be at least 1")]
    ZeroAmbientDim,
    #[error("at least one attachment point is required")]
    NoPoints,
    #[error("point {index}: {field} has length {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0} attachment points exceed the subset-search cap of {MAX_SUBSET_POINTS}")]
    TooManyPoints(usize),
    #[error("vector is not a nonzero element of the obstruction kernel")]
    NotAKernelVector,
    #[error("subset index {0} out of range")]
    SubsetIndex(usize),
    #[error("{attachments} attachments but {derivs} derivative vectors")]
    AttachmentCount { attachments: usize, derivs: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Data at one attachment point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachmentColumn {
    /// Evaluation covector, length `genus`.
    pub delta: Vec<Rational>,
    /// Derivative of the effective branch, length `ambient_dim`.
    pub deriv: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ProblemRepr", into = "ProblemRepr")]
pub struct ObstructionProblem {
    genus: usize,
    ambient_dim: usize,
    columns: Vec<AttachmentColumn>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemRepr {
    genus: usize,
    ambient_dim: usize,
    points: Vec<AttachmentColumn>,
}

impl TryFrom<ProblemRepr> for ObstructionProblem {
    type Error = ObstructionError;
    fn try_from(r: ProblemRepr) -> Result<Self, Self::Error> {
        ObstructionProblem::new(r.genus, r.ambient_dim, r.points)
    }
}

impl From<ObstructionProblem> for ProblemRepr {
    fn from(p: ObstructionProblem) -> Self {
        ProblemRepr {
            genus: p.genus,
            ambient_dim: p.ambient_dim,
            points: p.columns,
        }
    }
}

impl ObstructionProblem {
    pub fn new(
        genus: usize,
        ambient_dim: usize,
        columns: Vec<AttachmentColumn>,
    ) -> Result<Self, ObstructionError> {
        if genus == 0 {
            return Err(ObstructionError::ZeroGenus);
        }
        if ambient_dim == 0 {
            return Err(ObstructionError::ZeroAmbientDim);
        }
        if columns.is_empty() {
            return Err(ObstructionError::NoPoints);
        }
        for (index, c) in columns.iter().enumerate() {
            if c.delta.len() != genus {
                return Err(ObstructionError::DimensionMismatch {
                    index,
                    field: "delta",
                    expected: genus,
                    found: c.delta.len(),
                });
            }
            if c.deriv.len() != ambient_dim {
                return Err(ObstructionError::DimensionMismatch {
                    index,
                    field: "deriv",
                    expected: ambient_dim,
                    found: c.deriv.len(),
                });
            }
        }
        Ok(ObstructionProblem {
            genus,
            ambient_dim,
            columns,
        })
    }

    /// Resolves the evaluation covectors through a curve model.
    pub fn from_model(
        model: &GhostCurveModel,
        attachments: &[AttachmentPoint],
        derivs: Vec<Vec<Rational>>,
    ) -> Result<Self, ObstructionError> {
        if attachments.len() != derivs.len() {
            return Err(ObstructionError::AttachmentCount {
                attachments: attachments.len(),
                derivs: derivs.len(),
            });
        }
        let ev = model.ev_matrix(attachments)?;
        let ambient_dim = derivs.first().map_or(0, Vec::len);
        let columns = derivs
            .into_iter()
            .enumerate()
            .map(|(i, deriv)| AttachmentColumn {
                delta: ev.column(i),
                deriv,
            })
            .collect();
        Self::new(model.genus(), ambient_dim, columns)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[AttachmentColumn] {
        &self.columns
    }

    /// `genus x n` matrix of evaluation covectors.
    pub fn delta_matrix(&self) -> QMatrix {
        let cols: Vec<Vec<Rational>> = self.columns.iter().map(|c| c.delta.clone()).collect();
        QMatrix::from_columns(self.genus, &cols).expect("validated lengths")
    }

    /// `ambient_dim x n` matrix of derivative vectors.
    pub fn deriv_matrix(&self) -> QMatrix {
        let cols: Vec<Vec<Rational>> = self.columns.iter().map(|c| c.deriv.clone()).collect();
        QMatrix::from_columns(self.ambient_dim, &cols).expect("validated lengths")
    }

    /// Column `i` is `delta_i ⊗ deriv_i`, row `(a, b)` at index `a * N + b`.
    pub fn obstruction_matrix(&self) -> QMatrix {
        let n = self.ambient_dim;
        let mut m = QMatrix::zeros(self.genus * n, self.columns.len());
        for (i, c) in self.columns.iter().enumerate() {
            for (a, e) in c.delta.iter().enumerate() {
                if e.is_zero() {
                    continue;
                }
                for (b, v) in c.deriv.iter().enumerate() {
                    m[(a * n + b, i)] = e * v;
                }
            }
        }
        m
    }
}

/// Outcome of the injectivity test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum TheoremVerdict {
    NotEventuallySmoothable,
    Inconclusive { kernel_witness: Vec<Rational> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremCheck {
    pub rank: usize,
    pub verdict: TheoremVerdict,
}

impl TheoremCheck {
    pub fn obstructed(&self) -> bool {
        matches!(self.verdict, TheoremVerdict::NotEventuallySmoothable)
    }

    pub fn kernel_witness(&self) -> Option<&[Rational]> {
        match &self.verdict {
            TheoremVerdict::Inconclusive { kernel_witness } => Some(kernel_witness),
            TheoremVerdict::NotEventuallySmoothable => None,
        }
    }
}

/// Outcome of the subset rank inequality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorollaryVerdict {
    NotEventuallySmoothable,
    /// Smallest subset (by size, then lexicographically) meeting the inequality.
    Inconclusive {
        witness_d: Vec<usize>,
    },
}

impl CorollaryVerdict {
    pub fn obstructed(&self) -> bool {
        matches!(self, CorollaryVerdict::NotEventuallySmoothable)
    }

    pub fn witness(&self) -> Option<&[usize]> {
        match self {
            CorollaryVerdict::Inconclusive { witness_d } => Some(witness_d),
            CorollaryVerdict::NotEventuallySmoothable => None,
        }
    }
}

/// Injective obstruction map means the obstruction fires; otherwise the first
/// kernel basis vector is returned as witness.
pub fn theorem_check(prob: &ObstructionProblem) -> TheoremCheck {
    let m = prob.obstruction_matrix();
    let rank = m.rank();
    if rank == prob.len() {
        return TheoremCheck {
            rank,
            verdict: TheoremVerdict::NotEventuallySmoothable,
        };
    }
    let kernel_witness = m
        .kernel_basis()
        .into_iter()
        .next()
        .expect("rank deficiency implies a kernel vector");
    TheoremCheck {
        rank,
        verdict: TheoremVerdict::Inconclusive { kernel_witness },
    }
}

/// Both sides of the subset inequality for `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SubsetRanks {
    pub deriv_rank: usize,
    pub delta_rank: usize,
    pub size: usize,
}

impl SubsetRanks {
    pub fn holds(&self) -> bool {
        self.deriv_rank + self.delta_rank <= self.size
    }
}

/// Evaluates `rank{v_i : i ∈ D} + rank{e_i : i ∈ D} ≤ |D|`.
pub fn subset_ranks(
    prob: &ObstructionProblem,
    d: &[usize],
) -> Result<SubsetRanks, ObstructionError> {
    if let Some(&bad) = d.iter().find(|&&i| i >= prob.len()) {
        return Err(ObstructionError::SubsetIndex(bad));
    }
    let ranker = ColumnRanker::new(prob);
    Ok(ranker.ranks(d))
}

/// Exhaustive search over nonempty subsets in (size, lexicographic) order.
pub fn corollary_check(prob: &ObstructionProblem) -> Result<CorollaryVerdict, ObstructionError> {
    corollary_check_threaded(prob, 1)
}

/// As [`corollary_check`], splitting each size class across `threads`
/// workers. The witness is the global minimum, identical to the sequential run.
pub fn corollary_check_threaded(
    prob: &ObstructionProblem,
    threads: usize,
) -> Result<CorollaryVerdict, ObstructionError> {
    let n = prob.len();
    if n > MAX_SUBSET_POINTS {
        return Err(ObstructionError::TooManyPoints(n));
    }
    let ranker = ColumnRanker::new(prob);
    let search = |k: usize| -> Option<Vec<usize>> {
        let total = binomial(n, k);
        if threads <= 1 || total < 2 * CHUNK {
            return scan_combinations(n, k, 0, total, &ranker);
        }
        let chunks = total.div_ceil(CHUNK);
        (0..chunks).into_par_iter().find_map_first(|c| {
            let start = c * CHUNK;
            scan_combinations(n, k, start, (start + CHUNK).min(total), &ranker)
        })
    };
    let run = || {
        for k in 1..=n {
            if let Some(witness_d) = search(k) {
                return CorollaryVerdict::Inconclusive { witness_d };
            }
        }
        CorollaryVerdict::NotEventuallySmoothable
    };
    if threads <= 1 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    Ok(pool.install(run))
}

const CHUNK: u64 = 4096;

/// Checks combinations with lexicographic rank in `[start, end)`.
fn scan_combinations(
    n: usize,
    k: usize,
    start: u64,
    end: u64,
    ranker: &ColumnRanker,
) -> Option<Vec<usize>> {
    let mut comb = unrank_combination(n, k, start);
    for _ in start..end {
        if ranker.passes(&comb) {
            return Some(comb);
        }
        if !next_combination(&mut comb, n) {
            break;
        }
    }
    None
}

/// Support of a kernel vector; guaranteed to meet the subset inequality.
pub fn kernel_to_witness_d(
    prob: &ObstructionProblem,
    kernel_vec: &[Rational],
) -> Result<Vec<usize>, ObstructionError> {
    if kernel_vec.len() != prob.len() || is_zero_vec(kernel_vec) {
        return Err(ObstructionError::NotAKernelVector);
    }
    let image = prob
        .obstruction_matrix()
        .mul_vec(kernel_vec)
        .map_err(|_| ObstructionError::NotAKernelVector)?;
    if !is_zero_vec(&image) {
        return Err(ObstructionError::NotAKernelVector);
    }
    Ok(kernel_vec
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, _)| i)
        .collect())
}

/// Column ranks of subsets of the delta and deriv families.
///
/// Columns are rescaled to integers once; subsets are ranked with `i128`
/// fraction-free elimination, falling back to rational arithmetic.
struct ColumnRanker {
    delta: Family,
    deriv: Family,
}

struct Family {
    dim: usize,
    rational: Vec<Vec<Rational>>,
    ints: Option<Vec<Vec<i128>>>,
    residues: Option<Vec<Vec<u64>>>,
}

impl Family {
    fn new(dim: usize, rational: Vec<Vec<Rational>>) -> Self {
        let ints = rational
            .iter()
            .map(|c| {
                let m =
                    QMatrix::from_columns(dim, std::slice::from_ref(c)).expect("length checked");
                integer_column(&m)
            })
            .collect::<Option<Vec<_>>>();
        let residues = rational
            .iter()
            .map(|c| c.iter().map(to_mod_p).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>();
        Family {
            dim,
            rational,
            ints,
            residues,
        }
    }

    /// A lower bound for [`Family::rank`].
    fn rank_lower_bound(&self, idx: &[usize]) -> usize {
        let Some(res) = &self.residues else {
            return 0;
        };
        let mut a = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            a.extend_from_slice(&res[i]);
        }
        rank_mod_p(idx.len(), self.dim, a)
    }

    fn rank(&self, idx: &[usize]) -> usize {
        if let Some(ints) = &self.ints {
            // rank of the transpose: one row per selected column
            let mut a = Vec::with_capacity(idx.len() * self.dim);
            for &i in idx {
                a.extend_from_slice(&ints[i]);
            }
            if let Some(r) = bareiss_rank(idx.len(), self.dim, a) {
                return r;
            }
        }
        let cols: Vec<Vec<Rational>> = idx.iter().map(|&i| self.rational[i].clone()).collect();
        QMatrix::from_columns(self.dim, &cols)
            .expect("length checked")
            .rank_rational()
    }
}

fn integer_column(m: &QMatrix) -> Option<Vec<i128>> {
    use num_integer::Integer;
    use num_traits::ToPrimitive;
    let col = m.column(0);
    let l = col
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    col.iter()
        .map(|x| (x.numer() * (&l / x.denom())).to_i64().map(i128::from))
        .collect()
}

impl ColumnRanker {
    fn new(prob: &ObstructionProblem) -> Self {
        ColumnRanker {
            delta: Family::new(
                prob.genus,
                prob.columns.iter().map(|c| c.delta.clone()).collect(),
            ),
            deriv: Family::new(
                prob.ambient_dim,
                prob.columns.iter().map(|c| c.deriv.clone()).collect(),
            ),
        }
    }

    fn ranks(&self, d: &[usize]) -> SubsetRanks {
        SubsetRanks {
            deriv_rank: self.deriv.rank(d),
            delta_rank: self.delta.rank(d),
            size: d.len(),
        }
    }

    fn passes(&self, d: &[usize]) -> bool {
        if self.deriv.rank_lower_bound(d) + self.delta.rank_lower_bound(d) > d.len() {
            return false;
        }
        let deriv_rank = self.deriv.rank(d);
        if deriv_rank >= d.len() {
            // only an all-zero covector family leaves room
            return d.iter().all(|&i| is_zero_vec(&self.delta.rational[i]));
        }
        deriv_rank + self.delta.rank(d) <= d.len()
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub(crate) fn unrank_combination(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let mut c = next;
        loop {
            let count = binomial(n - c - 1, k - slot - 1);
            if rank < count {
                break;
            }
            rank -= count;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    out
}

/// Advances to the next `k`-subset in lexicographic order.
pub(crate) fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let Some(i) = (0..k).rev().find(|&i| comb[i] < n - k + i) else {
        return false;
    };
    comb[i] += 1;
    for j in i + 1..k {
        comb[j] = comb[j - 1] + 1;
    }
    true
}
