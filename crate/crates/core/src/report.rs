//! Problem files and reports: JSON parsing with field-level diagnostics,
//! byte-deterministic JSON output and the human-readable rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::curves::{AttachmentPoint, GhostCurveModel};
use crate::exact::{LaurentPoly, Rational, Term};
use crate::localmodel::{
    ghost_poly, verify_chart_relations, verify_residue_theorem, LocalModelError, PhiConvention,
    ResidueReport, GHOST_VARS, MAX_CHART_M,
};
use crate::obstruction::{
    corollary_check_threaded, kernel_to_witness_d, subset_ranks, theorem_check, CorollaryVerdict,
    ObstructionError, ObstructionProblem, TheoremVerdict, MAX_SUBSET_POINTS,
};

pub const FORMAT_VERSION: u64 = 1;
pub const TOOL: &str = concat!("ghostcheck ", env!("CARGO_PKG_VERSION"));

pub const FIRES: &str = "NOT eventually smoothable (obstruction fires)";
pub const VANISHES: &str = "inconclusive (obstruction vanishes)";

/// An input problem with a machine-readable code.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct InputError {
    pub code: &'static str,
    pub message: String,
}

impl InputError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        InputError {
            code,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::json!({"error": {"code": self.code, "message": self.message}});
        serde_json::to_string_pretty(&v).expect("plain JSON")
    }
}

fn schema(at: &str, e: impl std::fmt::Display) -> InputError {
    InputError::new("schema", format!("{at}: {e}"))
}

/// One ghost component as given in a problem file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ComponentInput {
    Raw(ObstructionProblem),
    Model {
        curve_model: GhostCurveModel,
        attachments: Vec<AttachmentPoint>,
        derivs: Vec<Vec<Rational>>,
    },
}

impl ComponentInput {
    pub fn problem(&self) -> Result<ObstructionProblem, ObstructionError> {
        match self {
            ComponentInput::Raw(p) => Ok(p.clone()),
            ComponentInput::Model {
                curve_model,
                attachments,
                derivs,
            } => ObstructionProblem::from_model(curve_model, attachments, derivs.clone()),
        }
    }

    fn from_value(v: Value, at: &str) -> Result<Self, InputError> {
        let Value::Object(map) = &v else {
            return Err(schema(at, "expected an object"));
        };
        if map.contains_key("points") {
            let p: ObstructionProblem = serde_json::from_value(v).map_err(|e| invalid(at, e))?;
            Ok(ComponentInput::Raw(p))
        } else if map.contains_key("curve_model") {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct ModelInput {
                curve_model: Value,
                attachments: Vec<AttachmentPoint>,
                derivs: Vec<Vec<Rational>>,
            }
            let m: ModelInput = serde_json::from_value(v).map_err(|e| schema(at, e))?;
            let curve_model: GhostCurveModel = serde_json::from_value(m.curve_model)
                .map_err(|e| invalid(&format!("{at}.curve_model"), e))?;
            let c = ComponentInput::Model {
                curve_model,
                attachments: m.attachments,
                derivs: m.derivs,
            };
            c.problem()
                .map_err(|e| InputError::new("invalid_problem", format!("{at}: {e}")))?;
            Ok(c)
        } else {
            Err(schema(at, "expected either \"points\" or \"curve_model\""))
        }
    }
}

/// Errors raised from inside a type's validation surface as `invalid_problem`,
/// everything else as `schema`.
fn invalid(at: &str, e: serde_json::Error) -> InputError {
    let msg = e.to_string();
    let structural = [
        "missing field",
        "unknown field",
        "invalid type",
        "invalid length",
        "unknown variant",
    ];
    if structural.iter().any(|s| msg.contains(s)) {
        schema(at, msg)
    } else {
        InputError::new("invalid_problem", format!("{at}: {msg}"))
    }
}

/// The `{"m": .., "G": [..]}` section. Each coordinate of `G` is either an
/// expression string in `x, y, t` or a list of terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalModelSection {
    pub m: u32,
    pub g: Vec<LaurentPoly>,
}

impl Serialize for LocalModelSection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            m: u32,
            #[serde(rename = "G")]
            g: Vec<String>,
        }
        Repr {
            m: self.m,
            g: self.g.iter().map(ToString::to_string).collect(),
        }
        .serialize(s)
    }
}

impl LocalModelSection {
    fn from_value(v: Value, at: &str) -> Result<Self, InputError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            m: u32,
            #[serde(rename = "G")]
            g: Vec<Value>,
        }
        let r: Repr = serde_json::from_value(v).map_err(|e| schema(at, e))?;
        let g = r
            .g
            .into_iter()
            .enumerate()
            .map(|(i, gi)| {
                let here = format!("{at}.G[{i}]");
                match gi {
                    Value::String(s) => ghost_poly(&s)
                        .map_err(|e| InputError::new("invalid_expression", format!("{here}: {e}"))),
                    Value::Array(_) => {
                        let terms: Vec<Term> =
                            serde_json::from_value(gi).map_err(|e| schema(&here, e))?;
                        LaurentPoly::from_terms(
                            GHOST_VARS.iter().map(|s| s.to_string()).collect(),
                            terms,
                        )
                        .map_err(|e| InputError::new("invalid_expression", format!("{here}: {e}")))
                    }
                    _ => Err(schema(
                        &here,
                        "expected an expression string or a list of terms",
                    )),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if r.m == 0 {
            return Err(InputError::new(
                "invalid_multiplicity",
                format!("{at}.m: must be at least 1"),
            ));
        }
        if g.is_empty() {
            return Err(schema(&format!("{at}.G"), "needs at least one coordinate"));
        }
        Ok(LocalModelSection { m: r.m, g })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NamedComponent {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub input: ComponentInput,
}

/// A parsed problem file: ghost components plus an optional local-model
/// section. Serializes to the canonical `{"version", "components", ...}` form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProblemFile {
    pub version: u64,
    pub components: Vec<NamedComponent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localmodel: Option<LocalModelSection>,
}

impl ProblemFile {
    pub fn single(input: ComponentInput) -> Self {
        ProblemFile {
            version: FORMAT_VERSION,
            components: vec![NamedComponent { name: None, input }],
            localmodel: None,
        }
    }

    /// Accepts a single component at top level, a `"components"` list, a
    /// bare local-model section, or any of these with a `"localmodel"` key.
    pub fn parse(src: &str) -> Result<Self, InputError> {
        let v: Value = serde_json::from_str(src).map_err(|e| {
            InputError::new(
                "json_syntax",
                format!("line {}, column {}: {e}", e.line(), e.column()),
            )
        })?;
        let Value::Object(mut map) = v else {
            return Err(schema("$", "top level must be an object"));
        };
        let version = match map.remove("version") {
            None => FORMAT_VERSION,
            Some(Value::Number(n)) if n.as_u64() == Some(FORMAT_VERSION) => FORMAT_VERSION,
            Some(other) => {
                return Err(InputError::new(
                    "unsupported_version",
                    format!("$.version: expected {FORMAT_VERSION}, found {other}"),
                ))
            }
        };
        if map.contains_key("G") && map.contains_key("m") {
            let lm = LocalModelSection::from_value(Value::Object(map), "$")?;
            return Ok(ProblemFile {
                version,
                components: Vec::new(),
                localmodel: Some(lm),
            });
        }
        let localmodel = map
            .remove("localmodel")
            .map(|v| LocalModelSection::from_value(v, "$.localmodel"))
            .transpose()?;
        let components = if let Some(list) = map.remove("components") {
            if let Some(k) = map.keys().next() {
                return Err(schema(
                    "$",
                    format!("unknown field {k:?} next to \"components\""),
                ));
            }
            let Value::Array(items) = list else {
                return Err(schema("$.components", "expected a list"));
            };
            if items.is_empty() && localmodel.is_none() {
                return Err(schema("$.components", "needs at least one component"));
            }
            items
                .into_iter()
                .enumerate()
                .map(|(i, mut item)| {
                    let at = format!("$.components[{i}]");
                    let name = match item.as_object_mut().and_then(|m| m.remove("name")) {
                        None => None,
                        Some(Value::String(s)) => Some(s),
                        Some(_) => return Err(schema(&format!("{at}.name"), "expected a string")),
                    };
                    Ok(NamedComponent {
                        name,
                        input: ComponentInput::from_value(item, &at)?,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        } else if map.is_empty() {
            if localmodel.is_none() {
                return Err(schema("$", "no ghost component and no local-model section"));
            }
            Vec::new()
        } else {
            vec![NamedComponent {
                name: None,
                input: ComponentInput::from_value(Value::Object(map), "$")?,
            }]
        };
        Ok(ProblemFile {
            version,
            components,
            localmodel,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain JSON") + "\n"
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TheoremReport {
    pub verdict: &'static str,
    pub rank: usize,
    pub kernel_witness: Option<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorollaryReport {
    pub verdict: &'static str,
    #[serde(rename = "witness_D")]
    pub witness_d: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentReport {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub genus: usize,
    pub ambient_dim: usize,
    pub points: usize,
    pub theorem: TheoremReport,
    pub corollary: CorollaryReport,
}

pub const OBSTRUCTED: &str = "NotEventuallySmoothable";
pub const INCONCLUSIVE: &str = "Inconclusive";

/// A failure of an internal guarantee, as opposed to bad input.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("internal invariant failed: {0}")]
pub struct InternalError(pub String);

/// Runs both checks on one component and re-verifies their certificates.
pub fn check_component(
    index: usize,
    name: Option<String>,
    prob: &ObstructionProblem,
    threads: usize,
) -> Result<ComponentReport, InternalError> {
    let th = theorem_check(prob);
    let theorem = match &th.verdict {
        TheoremVerdict::NotEventuallySmoothable => TheoremReport {
            verdict: OBSTRUCTED,
            rank: th.rank,
            kernel_witness: None,
        },
        TheoremVerdict::Inconclusive { kernel_witness } => {
            let d = kernel_to_witness_d(prob, kernel_witness).map_err(|e| {
                InternalError(format!("component {index}: kernel witness rejected: {e}"))
            })?;
            let r = subset_ranks(prob, &d).map_err(|e| InternalError(e.to_string()))?;
            if !r.holds() {
                return Err(InternalError(format!(
                    "component {index}: support of the kernel witness fails the subset inequality"
                )));
            }
            TheoremReport {
                verdict: INCONCLUSIVE,
                rank: th.rank,
                kernel_witness: Some(kernel_witness.clone()),
            }
        }
    };
    let corollary = match corollary_check_threaded(prob, threads) {
        Ok(CorollaryVerdict::NotEventuallySmoothable) => {
            if !th.obstructed() {
                return Err(InternalError(format!(
                    "component {index}: subset inequality fires but the injectivity test does not"
                )));
            }
            CorollaryReport {
                verdict: OBSTRUCTED,
                witness_d: None,
                reason: None,
            }
        }
        Ok(CorollaryVerdict::Inconclusive { witness_d }) => CorollaryReport {
            verdict: INCONCLUSIVE,
            witness_d: Some(witness_d),
            reason: None,
        },
        Err(ObstructionError::TooManyPoints(n)) => CorollaryReport {
            verdict: "Skipped",
            witness_d: None,
            reason: Some(format!(
                "{n} points exceed the subset-search cap of {MAX_SUBSET_POINTS}"
            )),
        },
        Err(e) => return Err(InternalError(e.to_string())),
    };
    Ok(ComponentReport {
        index,
        name,
        genus: prob.genus(),
        ambient_dim: prob.ambient_dim(),
        points: prob.len(),
        theorem,
        corollary,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelComponentJson {
    pub name: String,
    pub pole_order: u32,
    pub residue: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelJson {
    pub l: u32,
    pub a: Vec<Rational>,
    pub components: Vec<LevelComponentJson>,
}

/// Ledger of the level-by-level expansion and the residue verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalModelReport {
    pub m: u32,
    #[serde(rename = "G")]
    pub g: Vec<String>,
    pub expected_residue: Vec<Rational>,
    pub levels: Vec<LevelJson>,
    pub verdict: &'static str,
    pub failures: Vec<String>,
}

impl LocalModelReport {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

fn levels_json(r: &ResidueReport) -> Vec<LevelJson> {
    r.expansion
        .levels
        .iter()
        .map(|lv| LevelJson {
            l: lv.l,
            a: lv.a.clone(),
            components: lv
                .components
                .iter()
                .map(|c| LevelComponentJson {
                    name: c.name.clone(),
                    pole_order: c.pole_order,
                    residue: c.residue.clone(),
                })
                .collect(),
        })
        .collect()
}

/// Runs the residue verifier. A non-constant level is a finding and ends up
/// in `failures`; every other error is returned.
pub fn localmodel_report(section: &LocalModelSection) -> Result<LocalModelReport, LocalModelError> {
    let m = section.m;
    let mut failures = Vec::new();
    if m <= MAX_CHART_M {
        let charts = verify_chart_relations(m)?;
        failures.extend(
            charts
                .failures()
                .map(|c| format!("chart relation: {}", c.name)),
        );
        let phi = PhiConvention::new(m)?.verify()?;
        failures.extend(
            phi.failures()
                .map(|c| format!("node convention: {}", c.name)),
        );
    }
    let g: Vec<String> = section.g.iter().map(ToString::to_string).collect();
    let (expected_residue, levels) = match verify_residue_theorem(&section.g, m) {
        Ok(r) => {
            failures.extend(r.failures.iter().cloned());
            (r.expected_residue.clone(), levels_json(&r))
        }
        Err(e @ LocalModelError::NonConstantLevel { .. }) => {
            failures.push(format!("{}: {e}", e.code()));
            let expected = crate::localmodel::effective_derivative(&section.g, m)?;
            (expected, Vec::new())
        }
        Err(e) => return Err(e),
    };
    Ok(LocalModelReport {
        m,
        g,
        expected_residue,
        levels,
        verdict: if failures.is_empty() { "pass" } else { "fail" },
        failures,
    })
}

/// Exit-code class of a local-model error: bad input or internal failure.
pub fn localmodel_error_is_input(e: &LocalModelError) -> bool {
    !matches!(
        e,
        LocalModelError::UnexpectedPole { .. } | LocalModelError::ChartMismatch { .. }
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub tool: &'static str,
    pub components: Vec<ComponentReport>,
    /// `NotEventuallySmoothable` if any component's injectivity test fires.
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localmodel: Option<LocalModelReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Internal(#[from] InternalError),
}

impl CheckError {
    pub fn code(&self) -> &'static str {
        match self {
            CheckError::Input(e) => e.code,
            CheckError::Internal(_) => "internal",
        }
    }

    /// The message without the code prefix.
    pub fn message(&self) -> String {
        match self {
            CheckError::Input(e) => e.message.clone(),
            CheckError::Internal(e) => e.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::json!({"error": {"code": self.code(), "message": self.message()}});
        serde_json::to_string_pretty(&v).expect("plain JSON")
    }
}

fn local_error(e: LocalModelError) -> CheckError {
    if localmodel_error_is_input(&e) {
        InputError::new(e.code(), e.to_string()).into()
    } else {
        InternalError(e.to_string()).into()
    }
}

pub fn run_check(file: &ProblemFile, threads: usize) -> Result<CheckReport, CheckError> {
    if file.components.is_empty() {
        return Err(InputError::new("schema", "$: no ghost component to check").into());
    }
    let mut components = Vec::with_capacity(file.components.len());
    for (i, c) in file.components.iter().enumerate() {
        let prob = c
            .input
            .problem()
            .map_err(|e| InputError::new("invalid_problem", format!("component {i}: {e}")))?;
        components.push(check_component(i, c.name.clone(), &prob, threads)?);
    }
    let verdict = if components.iter().any(|c| c.theorem.verdict == OBSTRUCTED) {
        OBSTRUCTED
    } else {
        INCONCLUSIVE
    };
    let localmodel = file
        .localmodel
        .as_ref()
        .map(localmodel_report)
        .transpose()
        .map_err(local_error)?;
    Ok(CheckReport {
        tool: TOOL,
        components,
        verdict,
        localmodel,
    })
}

pub fn run_localmodel(file: &ProblemFile) -> Result<LocalModelReport, CheckError> {
    let section = file.localmodel.as_ref().ok_or_else(|| {
        InputError::new("missing_localmodel", "$: file has no local-model section")
    })?;
    localmodel_report(section).map_err(local_error)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain JSON") + "\n"
}

fn wording(verdict: &str) -> &'static str {
    match verdict {
        OBSTRUCTED => FIRES,
        INCONCLUSIVE => VANISHES,
        _ => "not run",
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn render_check(r: &CheckReport) -> String {
    let mut s = String::new();
    for c in &r.components {
        let label = c.name.as_deref().map_or_else(
            || format!("component {}", c.index),
            |n| format!("component {} ({n})", c.index),
        );
        let _ = writeln!(
            s,
            "{label}: genus {}, N = {}, {} points",
            c.genus, c.ambient_dim, c.points
        );
        let _ = writeln!(
            s,
            "  theorem:   {}; rank {}/{}",
            wording(c.theorem.verdict),
            c.theorem.rank,
            c.points
        );
        if let Some(w) = &c.theorem.kernel_witness {
            let _ = writeln!(s, "             kernel witness ({})", join(w));
        }
        let _ = writeln!(s, "  corollary: {}", wording(c.corollary.verdict));
        if let Some(d) = &c.corollary.witness_d {
            let _ = writeln!(s, "             witness D = {{{}}}", join(d));
        }
        if let Some(reason) = &c.corollary.reason {
            let _ = writeln!(s, "             skipped: {reason}");
        }
    }
    let _ = writeln!(s, "map: {}", wording(r.verdict));
    if let Some(lm) = &r.localmodel {
        s.push_str(&render_localmodel(lm));
    }
    s
}

pub fn render_localmodel(r: &LocalModelReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "local model m = {}, G = ({})", r.m, r.g.join(", "));
    let _ = writeln!(s, "  expected residue ({})", join(&r.expected_residue));
    for lv in &r.levels {
        let _ = writeln!(s, "  level {}: a = ({})", lv.l, join(&lv.a));
        for c in &lv.components {
            let _ = writeln!(
                s,
                "    {:<8} pole order {}, residue ({})",
                c.name,
                c.pole_order,
                join(&c.residue)
            );
        }
    }
    let _ = writeln!(s, "  residue check: {}", r.verdict);
    for f in &r.failures {
        let _ = writeln!(s, "    {f}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::qvec;
    use crate::factory::{build_fan_instance, random_instance, ModelKind};
    use crate::obstruction::AttachmentColumn;

    #[test]
    fn parse_raw_single() {
        let src = r#"{"genus":1,"ambient_dim":1,"points":[{"delta":["1"],"deriv":["1"]}]}"#;
        let f = ProblemFile::parse(src).unwrap();
        assert_eq!(f.components.len(), 1);
        let r = run_check(&f, 1).unwrap();
        assert_eq!(r.verdict, "NotEventuallySmoothable");
        assert_eq!(r.components[0].theorem.rank, 1);
        assert_eq!(r.components[0].corollary.verdict, "NotEventuallySmoothable");
    }

    #[test]
    fn zero_derivative_column_is_inconclusive() {
        let src = r#"{"genus":2,"ambient_dim":2,"points":[
            {"delta":["1","0"],"deriv":["0","1"]},
            {"delta":["0","1"],"deriv":["0","0"]}]}"#;
        let r = run_check(&ProblemFile::parse(src).unwrap(), 1).unwrap();
        let c = &r.components[0];
        assert_eq!(c.theorem.verdict, "Inconclusive");
        assert_eq!(
            c.theorem.kernel_witness.as_deref(),
            Some(&qvec(&[0, 1])[..])
        );
        assert_eq!(c.corollary.witness_d.as_deref(), Some(&[1usize][..]));
        let json = to_json(&r);
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(
            v["components"][0]["theorem"]["kernel_witness"],
            serde_json::json!(["0", "1"])
        );
        assert_eq!(
            v["components"][0]["corollary"]["witness_D"],
            serde_json::json!([1])
        );
        assert!(render_check(&r).contains(VANISHES));
    }

    #[test]
    fn syntax_and_schema_errors_have_codes() {
        let e = ProblemFile::parse("{\"genus\": 1,\n").unwrap_err();
        assert_eq!(e.code, "json_syntax");
        assert!(e.message.contains("line 2"));
        let e = ProblemFile::parse(r#"{"genus":1,"ambient_dim":1}"#).unwrap_err();
        assert_eq!(e.code, "schema");
        let e = ProblemFile::parse(
            r#"{"genus":1,"ambient_dim":1,"points":[{"delta":["1","2"],"deriv":["1"]}]}"#,
        )
        .unwrap_err();
        assert_eq!(e.code, "invalid_problem");
        assert!(e.message.contains("delta"), "{}", e.message);
        let e = ProblemFile::parse(r#"{"version":2,"m":1,"G":["x"]}"#).unwrap_err();
        assert_eq!(e.code, "unsupported_version");
        let e = ProblemFile::parse(r#"{"m":1,"G":["x +"]}"#).unwrap_err();
        assert_eq!(e.code, "invalid_expression");
        let e = ProblemFile::parse(r#"{"curve_model":{"type":"hyperelliptic","genus":2,"f":["1","0","1"]},"attachments":[],"derivs":[]}"#)
            .unwrap_err();
        assert_eq!(e.code, "invalid_problem");
    }

    #[test]
    fn model_form_and_components() {
        let inst = build_fan_instance(2, 2, ModelKind::NodalRational).unwrap();
        let comp = ComponentInput::Model {
            curve_model: inst.curve_model.clone(),
            attachments: inst.attachments.clone(),
            derivs: inst.derivs.clone(),
        };
        let raw = ComponentInput::Raw(random_instance(3, 2, 2, 3, 3));
        let file = ProblemFile {
            version: 1,
            components: vec![
                NamedComponent {
                    name: Some("fan".into()),
                    input: comp,
                },
                NamedComponent {
                    name: None,
                    input: raw,
                },
            ],
            localmodel: Some(LocalModelSection {
                m: 2,
                g: vec![ghost_poly("x").unwrap()],
            }),
        };
        let json = file.to_json();
        let back = ProblemFile::parse(&json).unwrap();
        assert_eq!(back, file);
        let r = run_check(&back, 1).unwrap();
        assert_eq!(r.verdict, "NotEventuallySmoothable");
        assert!(r.localmodel.unwrap().passed());
    }

    #[test]
    fn localmodel_examples() {
        let f = ProblemFile::parse(r#"{"m":2,"G":["x"]}"#).unwrap();
        let r = run_localmodel(&f).unwrap();
        assert!(r.passed());
        assert_eq!(r.levels.len(), 2);
        assert_eq!(r.levels[0].components[0].residue, qvec(&[1]));
        assert_eq!(r.levels[1].components[0].residue, qvec(&[1]));

        let f = ProblemFile::parse(r#"{"m":3,"G":["t*y"]}"#).unwrap();
        let r = run_localmodel(&f).unwrap();
        assert!(!r.passed());
        assert!(
            r.failures[0].starts_with("non_constant_level: level 2"),
            "{:?}",
            r.failures
        );

        let f = ProblemFile::parse(r#"{"m":1,"G":["0"]}"#).unwrap();
        let r = run_localmodel(&f).unwrap();
        assert!(r.passed());
        assert!(r
            .levels
            .iter()
            .all(|l| l.components.iter().all(|c| c.pole_order == 0)));

        let f = ProblemFile::parse(r#"{"m":2,"G":[[{"exps":[1,0,0],"coeff":"3"}]]}"#).unwrap();
        assert_eq!(run_localmodel(&f).unwrap().expected_residue, qvec(&[3]));

        let f = ProblemFile::parse(r#"{"m":2,"G":["y"]}"#).unwrap();
        match run_localmodel(&f).unwrap_err() {
            CheckError::Input(e) => assert_eq!(e.code, "ghost_vanishing_violated"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn output_is_deterministic_across_threads() {
        let prob = random_instance(5, 2, 2, 9, 2);
        let f = ProblemFile::single(ComponentInput::Raw(prob));
        let a = to_json(&run_check(&f, 1).unwrap());
        let b = to_json(&run_check(&f, 4).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn too_many_points_skips_the_subset_search() {
        let cols = (0..25)
            .map(|i| AttachmentColumn {
                delta: qvec(&[1]),
                deriv: qvec(&[i]),
            })
            .collect();
        let prob = ObstructionProblem::new(1, 1, cols).unwrap();
        let r = run_check(&ProblemFile::single(ComponentInput::Raw(prob)), 1).unwrap();
        assert_eq!(r.components[0].corollary.verdict, "Skipped");
    }
}
