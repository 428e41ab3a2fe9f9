//! Local model of a smoothing near one attachment node: the surface
//! `xy = t^m`, its minimal resolution by toric charts, node coordinates on
//! the exceptional chain, and the level-by-level expansion of a map germ
//! `G(x, y, t)` restricted to the ghost side of the chain.
//!
//! Chart `j` (`0 <= j < m`) has coordinates `(z, w)` with
//! `x = z^(j+1) w^j`, `y = z^(m-1-j) w^(m-j)`, `t = z w`. The chain component
//! `E_j` (`1 <= j < m`) is `{z = 0}` in chart `j-1` and `{w = 0}` in chart
//! `j`; the ghost branch is `E_m = {z = 0}` in chart `m-1`. The node `p_l`
//! is the origin of chart `l-1`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{parse_expression, ExactError, LaurentPoly, MonomialImage, Rational};

pub const MAX_CHART_M: u32 = 8;
pub const GHOST_VARS: [&str; 3] = ["x", "y", "t"];
const CHART_VARS: [&str; 2] = ["z", "w"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocalModelError {
    #[error("multiplicity m must be at least 1")]
    ZeroMultiplicity,
    #[error("multiplicity m = {m} exceeds the cap of {cap}")]
    MultiplicityTooLarge { m: u32, cap: u32 },
    #[error("{what} index {index} out of range for m = {m}")]
    IndexOutOfRange {
        what: &'static str,
        index: u32,
        m: u32,
    },
    #[error("G has no components")]
    EmptyMap,
    #[error("G must be a polynomial in x, y, t; got variables {0:?}")]
    WrongVariables(Vec<String>),
    #[error("component {component} of G does not vanish on the ghost branch: G(0, y, 0) = {restriction}")]
    GhostVanishingViolated {
        component: usize,
        restriction: String,
    },
    #[error("level {level}: G_{prev} restricted to {on} is {restriction}, not the common constant {expected}", prev = level - 1)]
    NonConstantLevel {
        level: u32,
        component: usize,
        on: String,
        restriction: String,
        expected: String,
    },
    #[error("level {level}, coordinate {component}: pole of order {order} {location}")]
    UnexpectedPole {
        level: u32,
        component: usize,
        location: String,
        order: u32,
    },
    #[error("charts {left} and {right} disagree on {on} at level {level}")]
    ChartMismatch {
        level: u32,
        on: String,
        left: u32,
        right: u32,
    },
    #[error("residue vectors have lengths {expected} and {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Exact(#[from] ExactError),
}

impl LocalModelError {
    pub fn code(&self) -> &'static str {
        match self {
            LocalModelError::ZeroMultiplicity | LocalModelError::MultiplicityTooLarge { .. } => {
                "invalid_multiplicity"
            }
            LocalModelError::IndexOutOfRange { .. } => "index_out_of_range",
            LocalModelError::EmptyMap => "empty_map",
            LocalModelError::WrongVariables(_) => "wrong_variables",
            LocalModelError::GhostVanishingViolated { .. } => "ghost_vanishing_violated",
            LocalModelError::NonConstantLevel { .. } => "non_constant_level",
            LocalModelError::UnexpectedPole { .. } => "unexpected_pole",
            LocalModelError::ChartMismatch { .. } => "chart_mismatch",
            LocalModelError::LengthMismatch { .. } => "length_mismatch",
            LocalModelError::Exact(_) => "exact_arithmetic",
        }
    }
}

/// Local intersection multiplicity at a node: the surface is `xy = t^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChainParam {
    m: u32,
}

impl ChainParam {
    pub fn new(m: u32) -> Result<Self, LocalModelError> {
        if m == 0 {
            return Err(LocalModelError::ZeroMultiplicity);
        }
        Ok(ChainParam { m })
    }

    pub fn m(self) -> u32 {
        self.m
    }

    /// Name of chain component `j`, with the ghost branch last.
    pub fn component_name(self, j: u32) -> String {
        if j == self.m {
            "C_tilde".to_string()
        } else {
            format!("E_{j}")
        }
    }
}

fn chart_vars() -> Vec<String> {
    CHART_VARS.iter().map(|s| s.to_string()).collect()
}

/// A monomial chart of the resolved surface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub m: u32,
    pub index: u32,
    /// Exponents of `(z, w)` in the images of `x`, `y`, `t`.
    pub x: [i32; 2],
    pub y: [i32; 2],
    pub t: [i32; 2],
}

pub fn chart(m: u32, j: u32) -> Result<Chart, LocalModelError> {
    ChainParam::new(m)?;
    if j >= m {
        return Err(LocalModelError::IndexOutOfRange {
            what: "chart",
            index: j,
            m,
        });
    }
    let (m, j) = (m as i32, j as i32);
    Ok(Chart {
        m: m as u32,
        index: j as u32,
        x: [j + 1, j],
        y: [m - 1 - j, m - j],
        t: [1, 1],
    })
}

impl Chart {
    fn images(&self) -> HashMap<String, MonomialImage> {
        [("x", self.x), ("y", self.y), ("t", self.t)]
            .into_iter()
            .map(|(v, e)| (v.to_string(), MonomialImage::monic(e.to_vec())))
            .collect()
    }

    /// Pulls a Laurent polynomial in `x, y, t` back to `z, w`.
    pub fn pull_back(&self, g: &LaurentPoly) -> Result<LaurentPoly, LocalModelError> {
        check_ghost_vars(g)?;
        Ok(g.substitute(&self.images(), &chart_vars())?)
    }

    /// The images of `x`, `y`, `t` as polynomials in `z, w`.
    pub fn coordinate_images(&self) -> [LaurentPoly; 3] {
        let mono = |e: [i32; 2]| {
            LaurentPoly::monomial(&CHART_VARS, Rational::one(), e.to_vec()).expect("two exponents")
        };
        [mono(self.x), mono(self.y), mono(self.t)]
    }
}

fn check_ghost_vars(g: &LaurentPoly) -> Result<(), LocalModelError> {
    if g.vars() != GHOST_VARS {
        return Err(LocalModelError::WrongVariables(g.vars().to_vec()));
    }
    Ok(())
}

/// Parses an expression in `x, y, t`.
pub fn ghost_poly(src: &str) -> Result<LaurentPoly, LocalModelError> {
    Ok(parse_expression(src, &GHOST_VARS)?)
}

fn xyt(src: &str) -> LaurentPoly {
    ghost_poly(src).expect("well-formed literal")
}

/// One identity and whether it held.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub m: u32,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: String, passed: bool) {
        self.checks.push(IdentityCheck { name, passed });
    }
}

/// Transition from chart `j` to chart `j+1`: `z' = w^-1`, `w' = z w^2`.
fn transition_images() -> HashMap<String, MonomialImage> {
    HashMap::from([
        ("z".to_string(), MonomialImage::monic(vec![0, -1])),
        ("w".to_string(), MonomialImage::monic(vec![1, 2])),
    ])
}

/// Checks every chart against the blow-up equations of the resolved surface.
///
/// The chain coordinates are `[u_k : v_k] = [t^k : x]` for `1 <= k < m`,
/// subject to `x u_1 = t v_1`, `v_(k-1) u_k = t v_k u_(k-1)` and
/// `u_(m-1) t = v_(m-1) y`.
pub fn verify_chart_relations(m: u32) -> Result<IdentityReport, LocalModelError> {
    ChainParam::new(m)?;
    if m > MAX_CHART_M {
        return Err(LocalModelError::MultiplicityTooLarge {
            m,
            cap: MAX_CHART_M,
        });
    }
    let mut report = IdentityReport {
        m,
        checks: Vec::new(),
    };
    let surface = xyt("x*y").try_sub(&xyt("t").pow(m))?;
    let u = |k: u32| xyt("t").pow(k);
    let v = |_k: u32| xyt("x");
    let l = m - 1;
    let mut equations: Vec<(String, LaurentPoly)> = Vec::new();
    if l >= 1 {
        equations.push((
            "x u_1 - t v_1".into(),
            &(&xyt("x") * &u(1)) - &(&xyt("t") * &v(1)),
        ));
        for k in 2..=l {
            let e = &(&v(k - 1) * &u(k)) - &(&(&xyt("t") * &v(k)) * &u(k - 1));
            equations.push((format!("v_{} u_{k} - t v_{k} u_{}", k - 1, k - 1), e));
        }
        let last = &(&u(l) * &xyt("t")) - &(&v(l) * &xyt("y"));
        equations.push((format!("u_{l} t - v_{l} y"), last));
    }
    for j in 0..m {
        let c = chart(m, j)?;
        report.push(
            format!("chart {j}: x y = t^{m}"),
            c.pull_back(&surface)?.is_zero(),
        );
        for (name, e) in &equations {
            report.push(format!("chart {j}: {name} = 0"), c.pull_back(e)?.is_zero());
        }
        // each ratio point [u_k : v_k] must be a regular monomial in the chart
        let [xz, xw] = c.x;
        for k in 1..=l as i32 {
            let v_over_u = [xz - k, xw - k];
            let ok = if k <= j as i32 {
                v_over_u.iter().all(|&e| e >= 0)
            } else {
                v_over_u.iter().all(|&e| e <= 0)
            };
            let which = if k <= j as i32 { "v/u" } else { "u/v" };
            report.push(format!("chart {j}: {which}_{k} regular"), ok);
        }
        if j + 1 < m {
            let next = chart(m, j + 1)?;
            let here = c.coordinate_images();
            let mapped = next.coordinate_images().map(|p| {
                p.substitute(&transition_images(), &chart_vars())
                    .expect("chart variables")
            });
            report.push(
                format!("transition {j} -> {}: z' = w^-1, w' = z w^2", j + 1),
                mapped == here,
            );
        }
    }
    Ok(report)
}

/// Coordinates at the node `p_l`, as polynomials in the variables of chart
/// `l-1`, together with their expressions in `x, y, t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeCoordinates {
    pub l: u32,
    pub chart: u32,
    /// Coordinate along `E_(l-1)` (`E_0` is the effective branch).
    pub x_l: LaurentPoly,
    /// Coordinate along `E_l` (`E_m` is the ghost branch).
    pub y_l: LaurentPoly,
    /// `x_l` as a rational function of `x, y, t`.
    pub x_l_ambient: LaurentPoly,
    /// `y_l` as a rational function of `x, y, t`.
    pub y_l_ambient: LaurentPoly,
    /// Whether `x_l y_l = t` holds in the chart.
    pub product_is_t: bool,
}

pub fn node_coordinates(m: u32, l: u32) -> Result<NodeCoordinates, LocalModelError> {
    ChainParam::new(m)?;
    if l == 0 || l > m {
        return Err(LocalModelError::IndexOutOfRange {
            what: "node",
            index: l,
            m,
        });
    }
    let c = chart(m, l - 1)?;
    let x_l = LaurentPoly::var(&CHART_VARS, "z")?;
    let y_l = LaurentPoly::var(&CHART_VARS, "w")?;
    let li = l as i32;
    let x_l_ambient = xyt("x").shift(&[0, 0, 1 - li])?;
    let y_l_ambient = if l == m {
        xyt("y")
    } else {
        LaurentPoly::monomial(&GHOST_VARS, Rational::one(), vec![-1, 0, li])?
    };
    let t = c.coordinate_images()[2].clone();
    let product_is_t = &x_l * &y_l == t;
    Ok(NodeCoordinates {
        l,
        chart: l - 1,
        x_l,
        y_l,
        x_l_ambient,
        y_l_ambient,
        product_is_t,
    })
}

/// The identification of `d/dt^(tensor m)` with `d/dx (x) d/dy`, factored
/// through the `m` nodes of the chain: each node contributes `x_l y_l = t`,
/// adjacent nodes are dual to each other along the component between them,
/// and the product of all node identities recovers `xy = t^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PhiConvention {
    pub m: u32,
}

impl PhiConvention {
    pub fn new(m: u32) -> Result<Self, LocalModelError> {
        ChainParam::new(m)?;
        Ok(PhiConvention { m })
    }

    pub fn verify(&self) -> Result<IdentityReport, LocalModelError> {
        let m = self.m;
        let mut report = IdentityReport {
            m,
            checks: Vec::new(),
        };
        let nodes: Vec<NodeCoordinates> = (1..=m)
            .map(|l| node_coordinates(m, l))
            .collect::<Result<_, _>>()?;
        for n in &nodes {
            report.push(
                format!("p_{}: x_{0} y_{0} = t in chart {}", n.l, n.chart),
                n.product_is_t,
            );
            let c = chart(m, n.chart)?;
            report.push(
                format!(
                    "p_{}: chart coordinates match their ambient expressions",
                    n.l
                ),
                c.pull_back(&n.x_l_ambient)? == n.x_l && c.pull_back(&n.y_l_ambient)? == n.y_l,
            );
        }
        // on E_j the coordinate at p_(j+1) is the inverse of the one at p_j
        for j in 1..m {
            let y_j = &nodes[j as usize - 1].y_l_ambient;
            let x_next = &nodes[j as usize].x_l_ambient;
            let prod = y_j * x_next;
            report.push(
                format!("E_{j}: x_{} y_{j} = 1", j + 1),
                prod.as_constant().is_some_and(|c| c.is_one()),
            );
        }
        let mut product = LaurentPoly::constant(&GHOST_VARS, Rational::one());
        for n in &nodes {
            product = &product * &(&n.x_l_ambient * &n.y_l_ambient);
        }
        let ok = product.normal_form_xyt(m)? == xyt("t").pow(m);
        report.push(format!("prod_l x_l y_l = t^{m}"), ok);
        Ok(report)
    }
}

/// One chain component's view of `G_l`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentRecord {
    pub j: u32,
    pub name: String,
    /// Restriction of each coordinate of `G_l`, in the variable `w` of chart
    /// `j-1` (that is, `y_j`).
    #[serde(skip)]
    pub restriction: Vec<LaurentPoly>,
    /// Largest pole order at `p_l` over the coordinates.
    pub pole_order: u32,
    /// Coefficient of `y_l^-1`, per coordinate.
    pub residue: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelRecord {
    pub l: u32,
    /// The constant `a_(l-1)` peeled off before forming `G_l`.
    pub a: Vec<Rational>,
    pub components: Vec<ComponentRecord>,
}

impl LevelRecord {
    pub fn component(&self, j: u32) -> Option<&ComponentRecord> {
        self.components.iter().find(|c| c.j == j)
    }

    /// The record on `E_l`, which carries the node `p_l`.
    pub fn at_node(&self) -> &ComponentRecord {
        self.component(self.l).expect("E_l is always present")
    }
}

/// `G = a_0 + a_1 t + ... + a_(l-1) t^(l-1) + t^l G_l` for `l = 1..m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GhostExpansion {
    pub m: u32,
    /// `a_0, ..., a_(m-1)`.
    pub constants: Vec<Vec<Rational>>,
    pub levels: Vec<LevelRecord>,
}

impl GhostExpansion {
    pub fn level(&self, l: u32) -> Option<&LevelRecord> {
        self.levels.iter().find(|r| r.l == l)
    }

    pub fn residues(&self) -> Vec<Vec<Rational>> {
        self.levels
            .iter()
            .map(|r| r.at_node().residue.clone())
            .collect()
    }
}

#[derive(Debug)]
struct Restricted {
    poly: LaurentPoly,
    pole_order: u32,
    residue: Rational,
}

/// Restricts `G_l` (one coordinate) to `E_j` and checks where it has poles.
fn restrict_component(
    g_l: &LaurentPoly,
    m: u32,
    l: u32,
    j: u32,
    coord: usize,
) -> Result<Restricted, LocalModelError> {
    let cp = ChainParam::new(m)?;
    let name = cp.component_name(j);
    let pole = |location: String, order: u32| LocalModelError::UnexpectedPole {
        level: l,
        component: coord,
        location,
        order,
    };
    let left = chart(m, j - 1)?;
    let (r, along) = left.pull_back(g_l)?.restrict_to_axis("z")?;
    if along > 0 {
        return Err(pole(format!("along {name}"), along));
    }
    let min_w = r.min_exponent("w")?.unwrap_or(0);
    let order = (-min_w).max(0) as u32;
    if order > 0 && (j != l || order > 1) {
        let location = if j == l {
            format!("at p_{l}")
        } else {
            format!("at p_{j} on {name}")
        };
        return Err(pole(location, order));
    }
    if j < m {
        let right = chart(m, j)?;
        let (s, along) = right.pull_back(g_l)?.restrict_to_axis("w")?;
        if along > 0 {
            return Err(pole(format!("along {name} in chart {j}"), along));
        }
        if let Some(e) = s.min_exponent("z")? {
            if e < 0 {
                return Err(pole(format!("at p_{} on {name}", j + 1), (-e) as u32));
            }
        }
        let inv = HashMap::from([("w".to_string(), MonomialImage::monic(vec![-1]))]);
        if r.substitute(&inv, &["z".to_string()])? != s {
            return Err(LocalModelError::ChartMismatch {
                level: l,
                on: name,
                left: j - 1,
                right: j,
            });
        }
    }
    let residue = r.coeff(&[-1]);
    Ok(Restricted {
        poly: r,
        pole_order: order,
        residue,
    })
}

/// Normalizes each coordinate of `G` modulo `xy = t^m` and checks that it
/// vanishes on the ghost branch.
pub fn normalize_ghost_map(g: &[LaurentPoly], m: u32) -> Result<Vec<LaurentPoly>, LocalModelError> {
    ChainParam::new(m)?;
    if g.is_empty() {
        return Err(LocalModelError::EmptyMap);
    }
    g.iter()
        .enumerate()
        .map(|(i, gi)| {
            check_ghost_vars(gi)?;
            let nf = gi.normal_form_xyt(m)?;
            let on_ghost = nf.evaluate_at_zero(&["x", "t"])?;
            if !on_ghost.is_zero() {
                return Err(LocalModelError::GhostVanishingViolated {
                    component: i,
                    restriction: on_ghost.to_string(),
                });
            }
            Ok(nf)
        })
        .collect()
}

/// Expands a map germ `G` (one polynomial per target coordinate) along the
/// ghost side of the chain resolving `xy = t^m`.
pub fn expand_ghost(g: &[LaurentPoly], m: u32) -> Result<GhostExpansion, LocalModelError> {
    let cp = ChainParam::new(m)?;
    let normal = normalize_ghost_map(g, m)?;
    let n = normal.len();
    let mut current: Vec<LaurentPoly> = normal
        .iter()
        .map(|p| p.shift(&[0, 0, -1]))
        .collect::<Result<_, _>>()?;
    let mut constants = vec![vec![Rational::zero(); n]];
    let mut levels = Vec::with_capacity(m as usize);
    for l in 1..=m {
        let mut components = Vec::new();
        for j in l..=m {
            let parts: Vec<Restricted> = current
                .iter()
                .enumerate()
                .map(|(i, p)| restrict_component(p, m, l, j, i))
                .collect::<Result<_, _>>()?;
            components.push(ComponentRecord {
                j,
                name: cp.component_name(j),
                pole_order: parts.iter().map(|r| r.pole_order).max().unwrap_or(0),
                residue: parts.iter().map(|r| r.residue.clone()).collect(),
                restriction: parts.into_iter().map(|r| r.poly).collect(),
            });
        }
        let a_prev = constants.last().expect("a_0 present").clone();
        if l < m {
            let mut a = Vec::with_capacity(n);
            for i in 0..n {
                let first = &components[1].restriction[i];
                let value = first.as_constant();
                for c in &components[1..] {
                    let r = &c.restriction[i];
                    let ok = match (&value, r.as_constant()) {
                        (Some(v), Some(w)) => *v == w,
                        _ => false,
                    };
                    if !ok {
                        return Err(LocalModelError::NonConstantLevel {
                            level: l + 1,
                            component: i,
                            on: c.name.clone(),
                            restriction: r.to_string(),
                            expected: value
                                .as_ref()
                                .map_or_else(|| first.to_string(), |v| v.to_string()),
                        });
                    }
                }
                a.push(value.expect("checked above"));
            }
            current = current
                .iter()
                .zip(&a)
                .map(|(p, ai)| {
                    p.try_sub(&LaurentPoly::constant(&GHOST_VARS, ai.clone()))?
                        .shift(&[0, 0, -1])
                })
                .collect::<Result<_, _>>()?;
            constants.push(a);
        }
        levels.push(LevelRecord {
            l,
            a: a_prev,
            components,
        });
    }
    Ok(GhostExpansion {
        m,
        constants,
        levels,
    })
}

/// Coefficient of `x^1` in `G(x, 0, 0)`, per coordinate: the derivative of
/// the map along the effective branch at the node.
pub fn effective_derivative(g: &[LaurentPoly], m: u32) -> Result<Vec<Rational>, LocalModelError> {
    normalize_ghost_map(g, m)?
        .iter()
        .map(|p| Ok(p.evaluate_at_zero(&["y", "t"])?.coeff(&[1, 0, 0])))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidueReport {
    pub m: u32,
    pub expected_residue: Vec<Rational>,
    pub expansion: GhostExpansion,
    pub failures: Vec<String>,
}

impl ResidueReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Expands `G` and checks that every level has at most a simple pole, only
/// at `p_l`, with residue equal to [`effective_derivative`].
pub fn verify_residue_theorem(g: &[LaurentPoly], m: u32) -> Result<ResidueReport, LocalModelError> {
    verify_residue_theorem_with(g, m, expand_ghost)
}

/// As [`verify_residue_theorem`], with the expansion routine supplied.
pub fn verify_residue_theorem_with(
    g: &[LaurentPoly],
    m: u32,
    expand: impl Fn(&[LaurentPoly], u32) -> Result<GhostExpansion, LocalModelError>,
) -> Result<ResidueReport, LocalModelError> {
    let expected = effective_derivative(g, m)?;
    let expansion = expand(g, m)?;
    let mut failures = Vec::new();
    if expansion.levels.len() != m as usize {
        failures.push(format!(
            "expected {m} levels, found {}",
            expansion.levels.len()
        ));
    }
    for level in &expansion.levels {
        let l = level.l;
        for c in &level.components {
            if c.pole_order > 1 {
                failures.push(format!(
                    "level {l}: pole of order {} on {}",
                    c.pole_order, c.name
                ));
            }
            if c.j != l && (c.pole_order > 0 || c.residue.iter().any(|r| !r.is_zero())) {
                failures.push(format!("level {l}: pole on {} away from p_{l}", c.name));
            }
        }
        match level.component(l) {
            Some(c) if c.residue == expected => {}
            Some(c) => failures.push(format!(
                "level {l}: residue at p_{l} is {} but the derivative along the effective branch is {}",
                fmt_vec(&c.residue),
                fmt_vec(&expected)
            )),
            None => failures.push(format!("level {l}: no record on E_{l}")),
        }
    }
    Ok(ResidueReport {
        m,
        expected_residue: expected,
        expansion,
        failures,
    })
}

fn fmt_vec(v: &[Rational]) -> String {
    let items: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", items.join(", "))
}

/// Value of the leading-term section at one attachment point:
/// `d/dy (x) deriv`, stored as the coefficient of `d/dy` and the vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaValue {
    pub tangent_coeff: Rational,
    pub deriv: Vec<Rational>,
}

/// Packages residues (one vector per attachment point) as values of the
/// leading-term section on `d/dt^(tensor m)`.
pub fn sigma_values(
    m: u32,
    residues: &[Vec<Rational>],
    convention: &PhiConvention,
) -> Result<Vec<SigmaValue>, LocalModelError> {
    if convention.m != m {
        return Err(LocalModelError::LengthMismatch {
            expected: m as usize,
            found: convention.m as usize,
        });
    }
    let width = residues.first().map_or(0, Vec::len);
    residues
        .iter()
        .map(|r| {
            if r.len() != width {
                return Err(LocalModelError::LengthMismatch {
                    expected: width,
                    found: r.len(),
                });
            }
            Ok(SigmaValue {
                tangent_coeff: Rational::one(),
                deriv: r.clone(),
            })
        })
        .collect()
}

/// A seeded map germ from the span of `x^a t^c` with `a >= 1`, `a + c <= 4`,
/// coefficients in `-9..=9`.
pub fn random_admissible_ghost(rng: &mut impl Rng, ambient_dim: usize) -> Vec<LaurentPoly> {
    (0..ambient_dim)
        .map(|_| {
            let mut p = LaurentPoly::zero(&GHOST_VARS);
            for a in 1..=4 {
                for c in 0..=(4 - a) {
                    let k: i64 = rng.gen_range(-9..=9);
                    if k != 0 {
                        p.add_term(vec![a, 0, c], Rational::from(k))
                            .expect("three exponents");
                    }
                }
            }
            p
        })
        .collect()
}

pub fn random_admissible_ghost_seeded(seed: u64, ambient_dim: usize) -> Vec<LaurentPoly> {
    random_admissible_ghost(&mut ChaCha8Rng::seed_from_u64(seed), ambient_dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qvec};

    fn g(srcs: &[&str]) -> Vec<LaurentPoly> {
        srcs.iter().map(|s| xyt(s)).collect()
    }

    #[test]
    fn chart_examples() {
        assert_eq!(chart(1, 0).unwrap().x, [1, 0]);
        assert_eq!(chart(1, 0).unwrap().y, [0, 1]);
        let c = chart(2, 0).unwrap();
        assert_eq!((c.x, c.y, c.t), ([1, 0], [1, 2], [1, 1]));
        let c = chart(3, 1).unwrap();
        assert_eq!((c.x, c.y, c.t), ([2, 1], [1, 2], [1, 1]));
        assert!(chart(3, 3).is_err());
        assert!(chart(0, 0).is_err());
    }

    #[test]
    fn chart_relations_hold() {
        for m in 1..=MAX_CHART_M {
            let r = verify_chart_relations(m).unwrap();
            assert!(
                r.all_passed(),
                "m = {m}: {:?}",
                r.failures().collect::<Vec<_>>()
            );
        }
        let r = verify_chart_relations(5).unwrap();
        assert_eq!(
            r.checks
                .iter()
                .filter(|c| c.name.starts_with("transition"))
                .count(),
            4
        );
        assert_eq!(
            r.checks
                .iter()
                .filter(|c| c.name.starts_with("chart 0:") && c.name.ends_with("= 0"))
                .count(),
            5
        );
        assert!(verify_chart_relations(9).is_err());
    }

    #[test]
    fn wrong_chart_fails_relations() {
        // a non-chart must not satisfy xy = t^m
        let bogus = Chart {
            m: 2,
            index: 0,
            x: [1, 0],
            y: [1, 1],
            t: [1, 1],
        };
        let surface = &xyt("x*y") - &xyt("t^2");
        assert!(!bogus.pull_back(&surface).unwrap().is_zero());
    }

    #[test]
    fn node_coordinate_examples() {
        let n = node_coordinates(1, 1).unwrap();
        assert!(n.product_is_t);
        assert_eq!(n.x_l_ambient, xyt("x"));
        assert_eq!(n.y_l_ambient, xyt("y"));
        let n = node_coordinates(2, 2).unwrap();
        assert_eq!(n.chart, 1);
        assert_eq!(n.y_l_ambient, xyt("y"));
        for m in 1..=6 {
            for l in 1..=m {
                assert!(node_coordinates(m, l).unwrap().product_is_t);
            }
        }
        assert!(node_coordinates(3, 0).is_err());
        assert!(node_coordinates(3, 4).is_err());
    }

    #[test]
    fn phi_convention_is_consistent() {
        for m in 1..=MAX_CHART_M {
            let r = PhiConvention::new(m).unwrap().verify().unwrap();
            assert!(
                r.all_passed(),
                "m = {m}: {:?}",
                r.failures().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn expansion_of_x() {
        let e = expand_ghost(&g(&["x"]), 1).unwrap();
        assert_eq!(e.levels.len(), 1);
        let c = e.levels[0].at_node();
        assert_eq!((c.name.as_str(), c.pole_order), ("C_tilde", 1));
        assert_eq!(c.residue, qvec(&[1]));

        let e = expand_ghost(&g(&["x"]), 2).unwrap();
        assert_eq!(e.constants, vec![qvec(&[0]), qvec(&[0])]);
        assert_eq!(e.residues(), vec![qvec(&[1]), qvec(&[1])]);
        assert_eq!(e.levels[0].at_node().name, "E_1");
        assert_eq!(e.levels[1].at_node().name, "C_tilde");
    }

    #[test]
    fn expansion_without_linear_term() {
        let e = expand_ghost(&g(&["x*t + x^2"]), 2).unwrap();
        for level in &e.levels {
            for c in &level.components {
                assert_eq!(c.pole_order, 0);
                assert_eq!(c.residue, qvec(&[0]));
            }
        }
    }

    #[test]
    fn expansion_errors() {
        assert!(matches!(
            expand_ghost(&g(&["y"]), 2),
            Err(LocalModelError::GhostVanishingViolated { component: 0, .. })
        ));
        assert!(matches!(
            expand_ghost(&g(&["t*y"]), 3),
            Err(LocalModelError::NonConstantLevel { level: 2, .. })
        ));
        assert!(matches!(
            expand_ghost(&g(&["t^2*y"]), 3),
            Err(LocalModelError::NonConstantLevel { level: 3, .. })
        ));
        assert!(matches!(
            expand_ghost(&[], 2),
            Err(LocalModelError::EmptyMap)
        ));
        assert!(matches!(
            expand_ghost(&g(&["x"]), 0),
            Err(LocalModelError::ZeroMultiplicity)
        ));
        let wrong = parse_expression("a", &["a"]).unwrap();
        assert!(matches!(
            expand_ghost(&[wrong], 2),
            Err(LocalModelError::WrongVariables(_))
        ));
    }

    #[test]
    fn unexpected_pole_is_reported() {
        // G_1 = x^2/t^2 never arises from a valid germ; feed it directly
        let g1 = xyt("x^2").shift(&[0, 0, -2]).unwrap();
        let err = restrict_component(&g1, 1, 1, 1, 0).unwrap_err();
        assert!(
            matches!(err, LocalModelError::UnexpectedPole { order: 2, .. }),
            "{err:?}"
        );
        let err = restrict_component(&xyt("x").shift(&[0, 0, -1]).unwrap(), 2, 1, 2, 0);
        assert!(err.is_ok());
        let err =
            restrict_component(&xyt("x").shift(&[0, 0, -2]).unwrap(), 2, 1, 1, 0).unwrap_err();
        assert_eq!(err.code(), "unexpected_pole");
    }

    #[test]
    fn residue_theorem_examples() {
        for m in 1..=5 {
            for c in [q(3, 2), q(-7, 1), q(0, 1)] {
                let gc = vec![xyt("x").scale(&c)];
                let r = verify_residue_theorem(&gc, m).unwrap();
                assert!(r.passed(), "{:?}", r.failures);
                assert!(r.expansion.residues().iter().all(|v| v == &vec![c.clone()]));
            }
        }
        let r = verify_residue_theorem(&g(&["t^2*y"]), 2).unwrap();
        assert!(r.passed());
        assert!(r.expansion.residues().iter().all(|v| v[0].is_zero()));
        let r = verify_residue_theorem(&g(&["t^3*y"]), 3).unwrap();
        assert!(r.passed());
        let r = verify_residue_theorem(&g(&["0"]), 3).unwrap();
        assert!(r.passed());
        assert!(r
            .expansion
            .levels
            .iter()
            .all(|l| l.components.iter().all(|c| c.pole_order == 0)));
    }

    #[test]
    fn sabotaged_expansion_is_caught() {
        let flip = |g: &[LaurentPoly], m: u32| {
            let mut e = expand_ghost(g, m)?;
            for level in &mut e.levels {
                for c in &mut level.components {
                    for r in &mut c.residue {
                        *r = -r.clone();
                    }
                }
            }
            Ok(e)
        };
        let r = verify_residue_theorem_with(&g(&["x"]), 2, flip).unwrap();
        assert!(!r.passed());
        assert_eq!(r.failures.len(), 2);
    }

    #[test]
    fn sigma_examples() {
        let conv = PhiConvention::new(2).unwrap();
        let s = sigma_values(2, &[qvec(&[1, 0])], &conv).unwrap();
        assert_eq!(s[0].tangent_coeff, q(1, 1));
        assert_eq!(s[0].deriv, qvec(&[1, 0]));

        let r = verify_residue_theorem(&g(&["x", "x"]), 2).unwrap();
        let last = r.expansion.residues().pop().unwrap();
        let s = sigma_values(2, &[last], &conv).unwrap();
        assert_eq!(s[0].deriv, qvec(&[1, 1]));

        let r = verify_residue_theorem(&g(&["x^2 + x*t"]), 2).unwrap();
        let s = sigma_values(2, &[r.expansion.residues().pop().unwrap()], &conv).unwrap();
        assert!(s[0].deriv.iter().all(Rational::is_zero));

        assert!(sigma_values(3, &[qvec(&[1])], &conv).is_err());
        assert!(sigma_values(2, &[qvec(&[1]), qvec(&[1, 2])], &conv).is_err());
    }

    #[test]
    fn random_admissible_germs_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=5 {
            for _ in 0..20 {
                let n = rng.gen_range(1..=3);
                let gr = random_admissible_ghost(&mut rng, n);
                let r = verify_residue_theorem(&gr, m).unwrap();
                assert!(r.passed(), "{:?}", r.failures);
            }
        }
    }
}
