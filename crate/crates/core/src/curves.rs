//! Concrete ghost-curve models and the evaluation covectors of their
//! dualizing-sheaf sections at attachment points.
//!
//! Each model fixes a basis of global sections of the dualizing sheaf and a
//! local coordinate at each admissible point; `ev_vector` returns the values
//! of the basis differentials against that coordinate.
//!
//! * hyperelliptic `y^2 = f(x)`: basis `x^(a-1) dx / y` for `a = 1..g`,
//!   coordinate `x - x0`. Coefficients of `f` are listed constant term first.
//! * nodal rational: a line with `g` pairs of points `(a_j, b_j)` glued;
//!   basis `(1/(x - a_j) - 1/(x - b_j)) dx`, coordinate `x - p`.
//! * raw: the evaluation matrix is given directly, one column per point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{ExactError, QMatrix, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("invalid curve model: {0}")]
    InvalidModel(String),
    #[error("point {0} is not on the curve")]
    PointNotOnCurve(String),
    #[error("point with x = {0} is a Weierstrass point (y = 0)")]
    WeierstrassPoint(Rational),
    #[error("point {0} coincides with a node preimage")]
    PointAtNode(Rational),
    #[error("attachment point {0} is listed twice")]
    DuplicatePoint(usize),
    #[error("point index {index} out of range for {count} declared points")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("attachment point kind does not match a {0} model")]
    WrongPointKind(&'static str),
    #[error("coordinate scale must be nonzero")]
    ZeroScale,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperellipticModel {
    genus: usize,
    f: Vec<Rational>,
}

impl HyperellipticModel {
    /// `f` is given constant term first; trailing zeros are not allowed.
    pub fn new(genus: usize, f: Vec<Rational>) -> Result<Self, CurveError> {
        if genus == 0 {
            return Err(CurveError::InvalidModel("genus must be at least 1".into()));
        }
        let Some(lead) = f.last() else {
            return Err(CurveError::InvalidModel("empty polynomial".into()));
        };
        if lead.is_zero() {
            return Err(CurveError::InvalidModel(
                "leading coefficient is zero".into(),
            ));
        }
        let deg = f.len() - 1;
        if deg != 2 * genus + 1 && deg != 2 * genus + 2 {
            return Err(CurveError::InvalidModel(format!(
                "degree {deg} does not define genus {genus} (need {} or {})",
                2 * genus + 1,
                2 * genus + 2
            )));
        }
        if !poly::is_squarefree(&f) {
            return Err(CurveError::InvalidModel("f is not squarefree".into()));
        }
        Ok(HyperellipticModel { genus, f })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn f(&self) -> &[Rational] {
        &self.f
    }

    pub fn eval_f(&self, x: &Rational) -> Rational {
        poly::eval(&self.f, x)
    }

    /// The point `(x, y)` with `y > 0` over `x`, if `f(x)` is a nonzero rational square.
    pub fn point_over(&self, x: &Rational) -> Option<(Rational, Rational)> {
        let v = self.eval_f(x);
        if v.is_zero() {
            return None;
        }
        v.sqrt_exact().map(|y| (x.clone(), y))
    }

    fn ev(&self, x: &Rational, y: &Rational) -> Result<Vec<Rational>, CurveError> {
        if y * y != self.eval_f(x) {
            return Err(CurveError::PointNotOnCurve(format!("({x}, {y})")));
        }
        let Some(inv_y) = y.recip() else {
            return Err(CurveError::WeierstrassPoint(x.clone()));
        };
        let mut out = Vec::with_capacity(self.genus);
        let mut pow = inv_y;
        for _ in 0..self.genus {
            out.push(pow.clone());
            pow *= x;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodalRationalModel {
    nodes: Vec<(Rational, Rational)>,
}

impl NodalRationalModel {
    pub fn new(genus: usize, nodes: Vec<(Rational, Rational)>) -> Result<Self, CurveError> {
        if genus == 0 {
            return Err(CurveError::InvalidModel("genus must be at least 1".into()));
        }
        if nodes.len() != genus {
            return Err(CurveError::InvalidModel(format!(
                "expected {genus} node pairs, got {}",
                nodes.len()
            )));
        }
        let mut all: Vec<&Rational> = nodes.iter().flat_map(|(a, b)| [a, b]).collect();
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(CurveError::InvalidModel(
                "node preimages must be pairwise distinct".into(),
            ));
        }
        Ok(NodalRationalModel { nodes })
    }

    pub fn genus(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[(Rational, Rational)] {
        &self.nodes
    }

    /// Residues of the basis differential `j` at its two poles, read off the
    /// stored partial fractions: `+1` at `a_j`, `-1` at `b_j`, zero elsewhere.
    pub fn residues(&self, j: usize) -> Vec<(Rational, Rational)> {
        let (a, b) = &self.nodes[j];
        vec![(a.clone(), Rational::one()), (b.clone(), -Rational::one())]
    }

    fn ev(&self, p: &Rational) -> Result<Vec<Rational>, CurveError> {
        self.nodes
            .iter()
            .map(|(a, b)| {
                let da = (p - a)
                    .recip()
                    .ok_or_else(|| CurveError::PointAtNode(p.clone()))?;
                let db = (p - b)
                    .recip()
                    .ok_or_else(|| CurveError::PointAtNode(p.clone()))?;
                Ok(da - db)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawEvaluationModel {
    ev_matrix: QMatrix,
}

impl RawEvaluationModel {
    pub fn new(genus: usize, ev_matrix: QMatrix) -> Result<Self, CurveError> {
        if genus == 0 {
            return Err(CurveError::InvalidModel("genus must be at least 1".into()));
        }
        if ev_matrix.rows() != genus {
            return Err(CurveError::InvalidModel(format!(
                "ev_matrix has {} rows but genus is {genus}",
                ev_matrix.rows()
            )));
        }
        Ok(RawEvaluationModel { ev_matrix })
    }

    pub fn genus(&self) -> usize {
        self.ev_matrix.rows()
    }

    pub fn point_count(&self) -> usize {
        self.ev_matrix.cols()
    }

    pub fn matrix(&self) -> &QMatrix {
        &self.ev_matrix
    }
}

/// A ghost-component model, serialized with a `"type"` tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub enum GhostCurveModel {
    Hyperelliptic(HyperellipticModel),
    NodalRational(NodalRationalModel),
    Raw(RawEvaluationModel),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ModelRepr {
    Hyperelliptic {
        genus: usize,
        f: Vec<Rational>,
    },
    NodalRational {
        genus: usize,
        nodes: Vec<(Rational, Rational)>,
    },
    Raw {
        genus: usize,
        ev_matrix: QMatrix,
    },
}

impl TryFrom<ModelRepr> for GhostCurveModel {
    type Error = CurveError;

    fn try_from(r: ModelRepr) -> Result<Self, CurveError> {
        Ok(match r {
            ModelRepr::Hyperelliptic { genus, f } => {
                GhostCurveModel::Hyperelliptic(HyperellipticModel::new(genus, f)?)
            }
            ModelRepr::NodalRational { genus, nodes } => {
                GhostCurveModel::NodalRational(NodalRationalModel::new(genus, nodes)?)
            }
            ModelRepr::Raw { genus, ev_matrix } => {
                GhostCurveModel::Raw(RawEvaluationModel::new(genus, ev_matrix)?)
            }
        })
    }
}

impl From<GhostCurveModel> for ModelRepr {
    fn from(m: GhostCurveModel) -> Self {
        match m {
            GhostCurveModel::Hyperelliptic(h) => ModelRepr::Hyperelliptic {
                genus: h.genus,
                f: h.f,
            },
            GhostCurveModel::NodalRational(n) => ModelRepr::NodalRational {
                genus: n.nodes.len(),
                nodes: n.nodes,
            },
            GhostCurveModel::Raw(r) => ModelRepr::Raw {
                genus: r.ev_matrix.rows(),
                ev_matrix: r.ev_matrix,
            },
        }
    }
}

/// Attachment point in model-specific coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttachmentPoint {
    Affine { x: Rational, y: Rational },
    Line { p: Rational },
    Index { index: usize },
}

impl GhostCurveModel {
    pub fn genus(&self) -> usize {
        match self {
            GhostCurveModel::Hyperelliptic(h) => h.genus(),
            GhostCurveModel::NodalRational(n) => n.genus(),
            GhostCurveModel::Raw(r) => r.genus(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GhostCurveModel::Hyperelliptic(_) => "hyperelliptic",
            GhostCurveModel::NodalRational(_) => "nodal_rational",
            GhostCurveModel::Raw(_) => "raw",
        }
    }

    /// Values of the basis sections at `p` against the model's local coordinate.
    pub fn ev_vector(&self, p: &AttachmentPoint) -> Result<Vec<Rational>, CurveError> {
        match (self, p) {
            (GhostCurveModel::Hyperelliptic(h), AttachmentPoint::Affine { x, y }) => h.ev(x, y),
            (GhostCurveModel::NodalRational(n), AttachmentPoint::Line { p }) => n.ev(p),
            (GhostCurveModel::Raw(r), AttachmentPoint::Index { index }) => {
                if *index >= r.point_count() {
                    return Err(CurveError::IndexOutOfRange {
                        index: *index,
                        count: r.point_count(),
                    });
                }
                Ok(r.ev_matrix.column(*index))
            }
            (m, _) => Err(CurveError::WrongPointKind(m.kind())),
        }
    }

    /// Same values against the rescaled coordinate `u = scale * (x - x0)`.
    ///
    /// Since `du = scale * dx`, a differential `g dx` equals `(g / scale) du`.
    pub fn ev_vector_in_coordinate(
        &self,
        p: &AttachmentPoint,
        scale: &Rational,
    ) -> Result<Vec<Rational>, CurveError> {
        let inv = scale.recip().ok_or(CurveError::ZeroScale)?;
        Ok(self.ev_vector(p)?.into_iter().map(|v| v * &inv).collect())
    }

    /// `g x n` matrix whose column `i` is `ev_vector(points[i])`.
    pub fn ev_matrix(&self, points: &[AttachmentPoint]) -> Result<QMatrix, CurveError> {
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(CurveError::DuplicatePoint(i));
            }
        }
        let cols = points
            .iter()
            .map(|p| self.ev_vector(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QMatrix::from_columns(self.genus(), &cols)?)
    }
}

/// Dense univariate helpers, coefficients constant term first.
pub(crate) mod poly {
    use crate::exact::Rational;

    pub fn eval(f: &[Rational], x: &Rational) -> Rational {
        f.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    fn trim(mut f: Vec<Rational>) -> Vec<Rational> {
        while f.last().is_some_and(Rational::is_zero) {
            f.pop();
        }
        f
    }

    pub fn derivative(f: &[Rational]) -> Vec<Rational> {
        f.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * &Rational::from(i as i64))
            .collect()
    }

    fn rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let mut r = trim(a.to_vec());
        let b = trim(b.to_vec());
        let lead = b.last().expect("nonzero divisor").clone();
        while r.len() >= b.len() && !r.is_empty() {
            let shift = r.len() - b.len();
            let factor = r.last().unwrap() / &lead;
            for (i, c) in b.iter().enumerate() {
                let delta = &factor * c;
                r[i + shift] -= delta;
            }
            r = trim(r);
        }
        r
    }

    pub fn gcd(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &b);
            a = b;
            b = r;
        }
        a
    }

    pub fn is_squarefree(f: &[Rational]) -> bool {
        gcd(f, &derivative(f)).len() <= 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qvec};

    fn hyper(g: usize, f: &[i64]) -> GhostCurveModel {
        GhostCurveModel::Hyperelliptic(HyperellipticModel::new(g, qvec(f)).unwrap())
    }

    fn pt(x: i64, y: i64) -> AttachmentPoint {
        AttachmentPoint::Affine {
            x: x.into(),
            y: y.into(),
        }
    }

    #[test]
    fn hyperelliptic_example() {
        // y^2 = x^5 + 2x + 1 at (1, 2)
        let m = hyper(2, &[1, 2, 0, 0, 0, 1]);
        assert_eq!(m.ev_vector(&pt(1, 2)).unwrap(), vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn hyperelliptic_errors() {
        let m = hyper(2, &[1, 2, 0, 0, 0, 1]);
        assert!(matches!(
            m.ev_vector(&pt(1, 3)),
            Err(CurveError::PointNotOnCurve(_))
        ));
        // x^5 - x has a root at 0
        let w = hyper(2, &[0, -1, 0, 0, 0, 1]);
        assert!(matches!(
            w.ev_vector(&pt(0, 0)),
            Err(CurveError::WeierstrassPoint(_))
        ));
        assert!(matches!(
            m.ev_vector(&AttachmentPoint::Line { p: q(1, 1) }),
            Err(CurveError::WrongPointKind("hyperelliptic"))
        ));
        assert!(
            HyperellipticModel::new(2, qvec(&[0, 0, 1, 0, 0, 1])).is_err(),
            "x^2 factor"
        );
        assert!(
            HyperellipticModel::new(2, qvec(&[1, 1, 1, 1])).is_err(),
            "degree 3 is genus 1"
        );
        assert!(HyperellipticModel::new(0, qvec(&[1, 1])).is_err());
        assert!(HyperellipticModel::new(1, qvec(&[1, 0, 0, 1, 0])).is_err());
    }

    #[test]
    fn nodal_example() {
        let m = GhostCurveModel::NodalRational(
            NodalRationalModel::new(1, vec![(q(0, 1), q(1, 1))]).unwrap(),
        );
        assert_eq!(
            m.ev_vector(&AttachmentPoint::Line { p: q(2, 1) }).unwrap(),
            vec![q(-1, 2)]
        );
        assert!(matches!(
            m.ev_vector(&AttachmentPoint::Line { p: q(1, 1) }),
            Err(CurveError::PointAtNode(_))
        ));
        let mat = m
            .ev_matrix(&[AttachmentPoint::Line { p: q(7, 3) }])
            .unwrap();
        assert_eq!((mat.rows(), mat.cols(), mat.rank()), (1, 1, 1));
        assert!(NodalRationalModel::new(2, vec![(q(0, 1), q(1, 1)), (q(1, 1), q(2, 1))]).is_err());
    }

    #[test]
    fn nodal_residues_are_opposite() {
        let m = NodalRationalModel::new(2, vec![(q(0, 1), q(1, 1)), (q(5, 2), q(-3, 1))]).unwrap();
        for j in 0..2 {
            let res = m.residues(j);
            let total: Rational = res.iter().map(|(_, r)| r.clone()).sum();
            assert!(total.is_zero());
            assert_eq!(res[0], (m.nodes()[j].0.clone(), Rational::one()));
            assert_eq!(res[1], (m.nodes()[j].1.clone(), -Rational::one()));
        }
    }

    #[test]
    fn raw_model() {
        let mat = QMatrix::from_i64_rows(&[&[1, 0, 2], &[0, 0, 3]]);
        let m = GhostCurveModel::Raw(RawEvaluationModel::new(2, mat.clone()).unwrap());
        assert_eq!(
            m.ev_vector(&AttachmentPoint::Index { index: 0 }).unwrap(),
            qvec(&[1, 0])
        );
        let pts: Vec<_> = (0..3)
            .map(|index| AttachmentPoint::Index { index })
            .collect();
        assert_eq!(m.ev_matrix(&pts).unwrap(), mat);
        assert!(matches!(
            m.ev_vector(&AttachmentPoint::Index { index: 3 }),
            Err(CurveError::IndexOutOfRange { .. })
        ));
        assert!(RawEvaluationModel::new(3, mat).is_err());
    }

    #[test]
    fn duplicate_points_rejected() {
        let m = hyper(2, &[1, 2, 0, 0, 0, 1]);
        assert!(matches!(
            m.ev_matrix(&[pt(1, 2), pt(1, 2)]),
            Err(CurveError::DuplicatePoint(1))
        ));
    }

    #[test]
    fn two_point_vandermonde() {
        // y^2 = x^5 + 2x + 1 has (0, 1) and (1, 2)
        let m = hyper(2, &[1, 2, 0, 0, 0, 1]);
        let mat = m.ev_matrix(&[pt(0, 1), pt(1, 2)]).unwrap();
        // det = (1/(y0 y1)) (x1 - x0)
        assert_eq!(mat.determinant().unwrap(), q(1, 2));
        assert_eq!(mat.rank(), 2);
    }

    #[test]
    fn rescaled_coordinate() {
        let m = hyper(2, &[1, 2, 0, 0, 0, 1]);
        let p = pt(1, 2);
        let base = m.ev_vector(&p).unwrap();
        let lam = q(-3, 5);
        let scaled = m.ev_vector_in_coordinate(&p, &lam).unwrap();
        for (s, b) in scaled.iter().zip(&base) {
            assert_eq!(&(s * &lam), b);
        }
        assert!(matches!(
            m.ev_vector_in_coordinate(&p, &Rational::zero()),
            Err(CurveError::ZeroScale)
        ));
    }

    #[test]
    fn json_forms() {
        let src = r#"{"type":"hyperelliptic","genus":2,"f":["1","2","0","0","0","1"]}"#;
        let m: GhostCurveModel = serde_json::from_str(src).unwrap();
        assert_eq!(m.genus(), 2);
        assert_eq!(serde_json::to_string(&m).unwrap(), src);
        let n: GhostCurveModel =
            serde_json::from_str(r#"{"type":"nodal_rational","genus":1,"nodes":[["0","1"]]}"#)
                .unwrap();
        assert_eq!(n.kind(), "nodal_rational");
        let r: GhostCurveModel =
            serde_json::from_str(r#"{"type":"raw","genus":1,"ev_matrix":[["1","1/2"]]}"#).unwrap();
        assert_eq!(r.genus(), 1);
        assert!(serde_json::from_str::<GhostCurveModel>(
            r#"{"type":"raw","genus":2,"ev_matrix":[["1"]]}"#
        )
        .is_err());
        let pts: Vec<AttachmentPoint> =
            serde_json::from_str(r#"[{"x":"1","y":"2"},{"p":"-1/2"},{"index":3}]"#).unwrap();
        assert_eq!(pts[1], AttachmentPoint::Line { p: q(-1, 2) });
        assert_eq!(pts[2], AttachmentPoint::Index { index: 3 });
    }

    #[test]
    fn squarefree_helper() {
        assert!(poly::is_squarefree(&qvec(&[-1, 0, 1])));
        assert!(!poly::is_squarefree(&qvec(&[1, 2, 1])));
        assert_eq!(
            poly::eval(&qvec(&[1, 2, 0, 0, 0, 1]), &q(1, 1)),
            Rational::from(4)
        );
    }
}
