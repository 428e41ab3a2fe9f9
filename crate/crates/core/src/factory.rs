//! Dimension counts for stable-map strata in projective space, the family of
//! non-smoothable maps built from lines through one point, and seeded random
//! problems for property testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{
    AttachmentPoint, CurveError, GhostCurveModel, HyperellipticModel, NodalRationalModel,
};
use crate::exact::{QMatrix, Rational};
use crate::obstruction::{AttachmentColumn, ObstructionError, ObstructionProblem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FactoryError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("stratum spec invalid: {0}")]
    InvalidStratum(String),
    #[error("could not build a {kind} model for N = {ambient_dim}, h = {genus}: {reason}")]
    Construction {
        kind: &'static str,
        ambient_dim: usize,
        genus: usize,
        reason: String,
    },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Obstruction(#[from] ObstructionError),
}

/// `(N-3)(1-g) + d(N+1)` without range checks: the expected dimension, which
/// is the actual one only when `d >= 2g - 1`.
pub fn expected_dim_moduli(n: i64, g: i64, d: i64) -> i64 {
    (n - 3) * (1 - g) + d * (n + 1)
}

/// Dimension of the space of degree-`d` genus-`g` maps from smooth curves to
/// `P^N`: `(N-3)(1-g) + d(N+1)`. Requires `N, g, d >= 1` and `d >= 2g - 1`.
pub fn dim_moduli(ambient_dim: i64, genus: i64, degree: i64) -> Result<i64, FactoryError> {
    if ambient_dim < 1 || genus < 1 || degree < 1 {
        return Err(FactoryError::Precondition(format!(
            "N, g, d must be at least 1 (got N = {ambient_dim}, g = {genus}, d = {degree})"
        )));
    }
    if degree < 2 * genus - 1 {
        return Err(FactoryError::Precondition(format!(
            "d = {degree} must be at least 2g - 1 = {}",
            2 * genus - 1
        )));
    }
    Ok(expected_dim_moduli(ambient_dim, genus, degree))
}

/// A boundary stratum: a genus-`h` ghost meeting `n` effective components of
/// genus `g_i` and degree `d_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumSpec {
    #[serde(rename = "N")]
    pub ambient_dim: i64,
    pub g: i64,
    pub d: i64,
    pub h: i64,
    pub n: i64,
    /// `(g_i, d_i)` for each effective component.
    pub parts: Vec<(i64, i64)>,
}

impl StratumSpec {
    /// Derives `g` and `d` from the parts.
    pub fn from_parts(ambient_dim: i64, h: i64, parts: Vec<(i64, i64)>) -> Self {
        StratumSpec {
            ambient_dim,
            g: h + parts.iter().map(|p| p.0).sum::<i64>(),
            d: parts.iter().map(|p| p.1).sum(),
            h,
            n: parts.len() as i64,
            parts,
        }
    }

    pub fn validate(&self) -> Result<(), FactoryError> {
        let fail = |s: String| Err(FactoryError::InvalidStratum(s));
        if self.ambient_dim < 1 || self.h < 1 || self.n < 1 {
            return fail("N, h and n must be at least 1".into());
        }
        if self.parts.len() as i64 != self.n {
            return fail(format!(
                "n = {} but {} parts given",
                self.n,
                self.parts.len()
            ));
        }
        for (i, &(gi, di)) in self.parts.iter().enumerate() {
            if gi < 0 || di < 1 || di < 2 * gi {
                return fail(format!(
                    "part {i}: need g_i >= 0, d_i >= 1 and d_i >= 2 g_i, got ({gi}, {di})"
                ));
            }
        }
        let dsum: i64 = self.parts.iter().map(|p| p.1).sum();
        if dsum != self.d {
            return fail(format!("d = {} but the parts sum to {dsum}", self.d));
        }
        let gsum = self.h + self.parts.iter().map(|p| p.0).sum::<i64>();
        if gsum != self.g {
            return fail(format!("g = {} but h + sum g_i = {gsum}", self.g));
        }
        Ok(())
    }
}

/// Dimension of the stratum, summed component by component. The result is
/// checked against `dim M + N h - n`.
pub fn dim_stratum(spec: &StratumSpec) -> Result<i64, FactoryError> {
    spec.validate()?;
    let n_amb = spec.ambient_dim;
    let base = 3 * spec.h - 3 + spec.n - n_amb * (spec.n - 1);
    let parts: i64 = spec
        .parts
        .iter()
        .map(|&(gi, di)| expected_dim_moduli(n_amb, gi, di) + 1)
        .sum();
    let explicit = base + parts;
    let via_moduli = expected_dim_moduli(n_amb, spec.g, spec.d) + n_amb * spec.h - spec.n;
    assert_eq!(
        explicit, via_moduli,
        "stratum dimension identity failed for {spec:?}"
    );
    Ok(explicit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Hyperelliptic,
    NodalRational,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Hyperelliptic => "hyperelliptic",
            ModelKind::NodalRational => "nodal_rational",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hyperelliptic" => Ok(ModelKind::Hyperelliptic),
            "nodal_rational" | "nodal-rational" => Ok(ModelKind::NodalRational),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

/// The genus-`h` ghost with `N` groups of `h` attachment points, every point
/// of group `i` carrying a line in direction `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanInstance {
    pub curve_model: GhostCurveModel,
    pub attachments: Vec<AttachmentPoint>,
    pub derivs: Vec<Vec<Rational>>,
}

impl FanInstance {
    pub fn problem(&self) -> Result<ObstructionProblem, ObstructionError> {
        ObstructionProblem::from_model(&self.curve_model, &self.attachments, self.derivs.clone())
    }

    pub fn ambient_dim(&self) -> usize {
        self.derivs.first().map_or(0, Vec::len)
    }

    pub fn genus(&self) -> usize {
        self.curve_model.genus()
    }

    /// Attachment indices of group `i`.
    pub fn group(&self, i: usize) -> std::ops::Range<usize> {
        let h = self.genus();
        i * h..(i + 1) * h
    }
}

const RESAMPLE_ATTEMPTS: u64 = 32;
const HYPERELLIPTIC_SCAN: i64 = 64;

/// Builds the example family with `n = N h` attachment points.
///
/// Points are chosen deterministically first (`x = 1, 2, 3, ...`), with
/// seeded resampling if a choice fails. Each group's evaluation matrix is
/// checked to have rank `h`.
pub fn build_fan_instance(
    ambient_dim: usize,
    genus: usize,
    kind: ModelKind,
) -> Result<FanInstance, FactoryError> {
    if ambient_dim < 2 || genus < 2 {
        return Err(FactoryError::Precondition(format!(
            "N and h must be at least 2 (got N = {ambient_dim}, h = {genus})"
        )));
    }
    let (model, attachments) = match kind {
        ModelKind::Hyperelliptic => hyperelliptic_points(ambient_dim, genus)?,
        ModelKind::NodalRational => nodal_points(ambient_dim, genus)?,
    };
    let derivs = (0..ambient_dim)
        .flat_map(|i| std::iter::repeat_n(unit_vector(ambient_dim, i), genus))
        .collect();
    let inst = FanInstance {
        curve_model: model,
        attachments,
        derivs,
    };
    for i in 0..ambient_dim {
        let ev = inst
            .curve_model
            .ev_matrix(&inst.attachments[inst.group(i)])?;
        if ev.rank() != genus {
            return Err(FactoryError::Construction {
                kind: kind.name(),
                ambient_dim,
                genus,
                reason: format!("group {i} has deficient evaluation rank"),
            });
        }
    }
    Ok(inst)
}

fn unit_vector(n: usize, i: usize) -> Vec<Rational> {
    (0..n)
        .map(|k| {
            if k == i {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .collect()
}

/// `y^2 = 1 + λ (x-1)(x-2)...(x-(2h+2))`, so `x = 1..2h+2` all carry `y = ±1`.
fn hyperelliptic_curve(genus: usize, lambda: i64) -> Option<HyperellipticModel> {
    let mut f = vec![Rational::one()];
    for k in 1..=(2 * genus as i64 + 2) {
        // multiply by (x - k)
        let mut next = vec![Rational::zero(); f.len() + 1];
        for (i, c) in f.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * &Rational::from(k);
        }
        f = next;
    }
    let mut f: Vec<Rational> = f.into_iter().map(|c| c * Rational::from(lambda)).collect();
    f[0] += Rational::one();
    HyperellipticModel::new(genus, f).ok()
}

fn hyperelliptic_points(
    ambient_dim: usize,
    genus: usize,
) -> Result<(GhostCurveModel, Vec<AttachmentPoint>), FactoryError> {
    let need_x = genus.max((ambient_dim * genus).div_ceil(2));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2200 + (ambient_dim * 1000 + genus) as u64);
    let mut lambdas: Vec<i64> = vec![1, -1, 2, -2, 3, -3];
    lambdas.extend((0..RESAMPLE_ATTEMPTS).map(|_| {
        let v: i64 = rng.gen_range(1..=50);
        if rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    }));
    for lambda in lambdas {
        let Some(model) = hyperelliptic_curve(genus, lambda) else {
            continue;
        };
        let valid: Vec<(Rational, Rational)> = (1..=2 * genus as i64 + 2 + HYPERELLIPTIC_SCAN)
            .filter_map(|x| model.point_over(&Rational::from(x)))
            .take(need_x)
            .collect();
        if valid.len() < need_x {
            continue;
        }
        // all points with y > 0, then their reflections; any window of h
        // consecutive entries has distinct x-values
        let attachments = valid
            .iter()
            .map(|(x, y)| AttachmentPoint::Affine {
                x: x.clone(),
                y: y.clone(),
            })
            .chain(valid.iter().map(|(x, y)| AttachmentPoint::Affine {
                x: x.clone(),
                y: -y,
            }))
            .take(ambient_dim * genus)
            .collect();
        return Ok((GhostCurveModel::Hyperelliptic(model), attachments));
    }
    Err(FactoryError::Construction {
        kind: "hyperelliptic",
        ambient_dim,
        genus,
        reason: format!("fewer than {need_x} rational x-values found"),
    })
}

fn nodal_points(
    ambient_dim: usize,
    genus: usize,
) -> Result<(GhostCurveModel, Vec<AttachmentPoint>), FactoryError> {
    let nodes: Vec<(Rational, Rational)> = (1..=genus as i64)
        .map(|j| (Rational::from(-(2 * j - 1)), Rational::from(-2 * j)))
        .collect();
    let model = GhostCurveModel::NodalRational(NodalRationalModel::new(genus, nodes.clone())?);
    let is_node = |p: &Rational| nodes.iter().any(|(a, b)| a == p || b == p);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2201 + (ambient_dim * 1000 + genus) as u64);
    let mut used: Vec<Rational> = Vec::new();
    let mut next = 1i64;
    let mut attachments = Vec::with_capacity(ambient_dim * genus);
    for group in 0..ambient_dim {
        let mut pts: Vec<Rational> = (0..genus)
            .map(|_| {
                let p = Rational::from(next);
                next += 1;
                p
            })
            .collect();
        let mut attempt = 0;
        loop {
            let ev = model.ev_matrix(
                &pts.iter()
                    .map(|p| AttachmentPoint::Line { p: p.clone() })
                    .collect::<Vec<_>>(),
            )?;
            if ev.rank() == genus {
                break;
            }
            attempt += 1;
            if attempt > RESAMPLE_ATTEMPTS {
                return Err(FactoryError::Construction {
                    kind: "nodal_rational",
                    ambient_dim,
                    genus,
                    reason: format!("group {group} stayed rank deficient after resampling"),
                });
            }
            pts.clear();
            while pts.len() < genus {
                let p = Rational::new(rng.gen_range(1..=1000i64), rng.gen_range(1..=7i64))
                    .expect("nonzero");
                if !is_node(&p) && !pts.contains(&p) && !used.contains(&p) {
                    pts.push(p);
                }
            }
        }
        used.extend(pts.iter().cloned());
        attachments.extend(pts.into_iter().map(|p| AttachmentPoint::Line { p }));
    }
    Ok((model, attachments))
}

/// Seeded problem with entries uniform in `[-bound, bound]`.
pub fn random_instance(
    seed: u64,
    genus: usize,
    ambient_dim: usize,
    n: usize,
    bound: i64,
) -> ObstructionProblem {
    random_instance_inner(seed, genus, ambient_dim, n, bound, false)
}

/// As [`random_instance`], but every covector and derivative vector is nonzero.
pub fn random_instance_nonzero(
    seed: u64,
    genus: usize,
    ambient_dim: usize,
    n: usize,
    bound: i64,
) -> ObstructionProblem {
    random_instance_inner(seed, genus, ambient_dim, n, bound, true)
}

fn random_instance_inner(
    seed: u64,
    genus: usize,
    ambient_dim: usize,
    n: usize,
    bound: i64,
    nonzero: bool,
) -> ObstructionProblem {
    assert!(
        genus >= 1 && ambient_dim >= 1 && n >= 1,
        "g, N, n must be at least 1"
    );
    let bound = bound.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |len: usize, rng: &mut ChaCha8Rng| loop {
        let v: Vec<Rational> = (0..len)
            .map(|_| Rational::from(rng.gen_range(-bound..=bound)))
            .collect();
        if !nonzero || v.iter().any(|x| !x.is_zero()) {
            break v;
        }
    };
    let columns = (0..n)
        .map(|_| AttachmentColumn {
            delta: draw(genus, &mut rng),
            deriv: draw(ambient_dim, &mut rng),
        })
        .collect();
    ObstructionProblem::new(genus, ambient_dim, columns).expect("sizes are positive")
}

/// Seeded valid stratum with `N <= 6`, `h <= 5`, `n <= 8`.
pub fn random_stratum(seed: u64) -> StratumSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ambient_dim = rng.gen_range(1..=6);
    let h = rng.gen_range(1..=5);
    let n = rng.gen_range(1..=8);
    let parts = (0..n)
        .map(|_| {
            let gi = rng.gen_range(0..=3i64);
            let di = rng.gen_range((2 * gi).max(1)..=2 * gi + 4);
            (gi, di)
        })
        .collect();
    StratumSpec::from_parts(ambient_dim, h, parts)
}

/// Seeded invertible `k x k` matrix: unit lower triangular times unit-diagonal
/// upper triangular with small random entries, then a random permutation.
pub fn random_invertible(rng: &mut impl Rng, k: usize, bound: i64) -> QMatrix {
    let mut lower = QMatrix::identity(k);
    let mut upper = QMatrix::identity(k);
    for i in 0..k {
        for j in 0..k {
            if i > j {
                lower[(i, j)] = Rational::from(rng.gen_range(-bound..=bound));
            } else if i < j {
                upper[(i, j)] = Rational::from(rng.gen_range(-bound..=bound));
            } else {
                let mut d = 0;
                while d == 0 {
                    d = rng.gen_range(-bound..=bound);
                }
                upper[(i, j)] = Rational::from(d);
            }
        }
    }
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    lower.mul(&upper).expect("square").select_columns(&perm)
}
