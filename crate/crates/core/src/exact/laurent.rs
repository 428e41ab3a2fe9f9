//! Sparse multivariate Laurent polynomials over the rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::{ExactError, Rational};

/// Exponent vector ordered graded-lexicographically: total degree first,
/// then lexicographic on the entries.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Exponents(pub Vec<i32>);

impl Exponents {
    pub fn degree(&self) -> i64 {
        self.0.iter().map(|&e| e as i64).sum()
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One serialized term: `{"exps": [...], "coeff": "a/b"}`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Term {
    pub exps: Vec<i32>,
    pub coeff: Rational,
}

/// Image of a variable under a monomial substitution: `coeff * target^exps`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MonomialImage {
    pub coeff: Rational,
    pub exps: Vec<i32>,
}

impl MonomialImage {
    pub fn new(coeff: Rational, exps: Vec<i32>) -> Self {
        MonomialImage { coeff, exps }
    }

    pub fn monic(exps: Vec<i32>) -> Self {
        MonomialImage {
            coeff: Rational::one(),
            exps,
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    vars: Vec<String>,
    terms: BTreeMap<Exponents, Rational>,
}

impl LaurentPoly {
    pub fn zero(vars: &[&str]) -> Self {
        Self::zero_owned(vars.iter().map(|s| s.to_string()).collect())
    }

    pub fn zero_owned(vars: Vec<String>) -> Self {
        LaurentPoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[&str], c: Rational) -> Self {
        let n = vars.len();
        Self::monomial(vars, c, vec![0; n]).expect("length matches")
    }

    pub fn monomial(vars: &[&str], coeff: Rational, exps: Vec<i32>) -> Result<Self, ExactError> {
        let mut p = Self::zero(vars);
        p.add_term(exps, coeff)?;
        Ok(p)
    }

    /// The single variable `name` as a polynomial.
    pub fn var(vars: &[&str], name: &str) -> Result<Self, ExactError> {
        let idx = vars
            .iter()
            .position(|v| *v == name)
            .ok_or_else(|| ExactError::UnknownVariable(name.to_string()))?;
        let mut e = vec![0; vars.len()];
        e[idx] = 1;
        Self::monomial(vars, Rational::one(), e)
    }

    pub fn from_terms(
        vars: Vec<String>,
        terms: impl IntoIterator<Item = Term>,
    ) -> Result<Self, ExactError> {
        let mut p = Self::zero_owned(vars);
        for t in terms {
            p.add_term(t.exps, t.coeff)?;
        }
        Ok(p)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&[i32], &Rational)> {
        self.terms.iter().map(|(e, c)| (e.0.as_slice(), c))
    }

    pub fn coeff(&self, exps: &[i32]) -> Rational {
        self.terms
            .get(&Exponents(exps.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Returns the constant value if the polynomial has no non-constant terms.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.0.iter().all(|&x| x == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, exps: Vec<i32>, coeff: Rational) -> Result<(), ExactError> {
        if exps.len() != self.vars.len() {
            return Err(ExactError::DimensionMismatch {
                expected: self.vars.len(),
                found: exps.len(),
            });
        }
        if coeff.is_zero() {
            return Ok(());
        }
        let key = Exponents(exps);
        let remove = match self.terms.get_mut(&key) {
            Some(c) => {
                *c += coeff;
                c.is_zero()
            }
            None => {
                self.terms.insert(key.clone(), coeff);
                false
            }
        };
        if remove {
            self.terms.remove(&key);
        }
        Ok(())
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|(e, c)| Term {
                exps: e.0.clone(),
                coeff: c.clone(),
            })
            .collect()
    }

    fn check_vars(&self, other: &Self) -> Result<(), ExactError> {
        if self.vars != other.vars {
            return Err(ExactError::VariableMismatch {
                left: self.vars.clone(),
                right: other.vars.clone(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.0.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, ExactError> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_vars(other)?;
        let mut out = Self::zero_owned(self.vars.clone());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<i32> = ea.0.iter().zip(&eb.0).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb)?;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero_owned(self.vars.clone());
        }
        LaurentPoly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect(),
        }
    }

    /// Multiplies by the monomial with the given exponent shift.
    pub fn shift(&self, exps: &[i32]) -> Result<Self, ExactError> {
        if exps.len() != self.vars.len() {
            return Err(ExactError::DimensionMismatch {
                expected: self.vars.len(),
                found: exps.len(),
            });
        }
        Ok(LaurentPoly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    (
                        Exponents(e.0.iter().zip(exps).map(|(a, b)| a + b).collect()),
                        c.clone(),
                    )
                })
                .collect(),
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant_owned(self.vars.clone(), Rational::one());
        for _ in 0..k {
            acc = acc.try_mul(self).expect("same variables");
        }
        acc
    }

    fn constant_owned(vars: Vec<String>, c: Rational) -> Self {
        let n = vars.len();
        let mut p = Self::zero_owned(vars);
        p.add_term(vec![0; n], c).expect("length matches");
        p
    }

    /// Ring homomorphism sending each variable to a monomial in `target_vars`.
    pub fn substitute(
        &self,
        images: &HashMap<String, MonomialImage>,
        target_vars: &[String],
    ) -> Result<Self, ExactError> {
        let mut imgs = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let img = images
                .get(v)
                .ok_or_else(|| ExactError::MissingImage(v.clone()))?;
            if img.exps.len() != target_vars.len() {
                return Err(ExactError::DimensionMismatch {
                    expected: target_vars.len(),
                    found: img.exps.len(),
                });
            }
            if img.coeff.is_zero() {
                return Err(ExactError::ZeroImage(v.clone()));
            }
            imgs.push(img);
        }
        let mut out = Self::zero_owned(target_vars.to_vec());
        for (e, c) in &self.terms {
            let mut coeff = c.clone();
            let mut exps = vec![0i32; target_vars.len()];
            for (k, img) in e.0.iter().zip(&imgs) {
                if *k == 0 {
                    continue;
                }
                coeff *= img.coeff.pow(*k).expect("nonzero image coefficient");
                for (slot, x) in exps.iter_mut().zip(&img.exps) {
                    *slot += k * x;
                }
            }
            out.add_term(exps, coeff)?;
        }
        Ok(out)
    }

    /// Leading Laurent coefficient along `{v = 0}`.
    ///
    /// Returns the terms of minimal `v`-exponent (with `v` removed) when that
    /// exponent is negative, and the `v`-free terms otherwise, together with
    /// the pole order `max(0, -min exponent)`.
    pub fn restrict_to_axis(&self, v: &str) -> Result<(LaurentPoly, u32), ExactError> {
        let idx = self
            .var_index(v)
            .ok_or_else(|| ExactError::UnknownVariable(v.to_string()))?;
        let rest_vars: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, s)| s.clone())
            .collect();
        let Some(min) = self.terms.keys().map(|e| e.0[idx]).min() else {
            return Ok((Self::zero_owned(rest_vars), 0));
        };
        let target = min.min(0);
        let mut out = Self::zero_owned(rest_vars);
        for (e, c) in &self.terms {
            if e.0[idx] == target {
                let mut rest = e.0.clone();
                rest.remove(idx);
                out.add_term(rest, c.clone())?;
            }
        }
        Ok((out, (-target) as u32))
    }

    /// Minimal exponent of `v` over all terms; `None` for the zero polynomial.
    pub fn min_exponent(&self, v: &str) -> Result<Option<i32>, ExactError> {
        let idx = self
            .var_index(v)
            .ok_or_else(|| ExactError::UnknownVariable(v.to_string()))?;
        Ok(self.terms.keys().map(|e| e.0[idx]).min())
    }

    /// Maximal exponent of `v` over all terms; `None` for the zero polynomial.
    pub fn max_exponent(&self, v: &str) -> Result<Option<i32>, ExactError> {
        let idx = self
            .var_index(v)
            .ok_or_else(|| ExactError::UnknownVariable(v.to_string()))?;
        Ok(self.terms.keys().map(|e| e.0[idx]).max())
    }

    /// Normal form in `k[x,y,t]/(xy - t^m)`: every mixed `x^a y^b` is
    /// rewritten through `xy -> t^m` until one of the two exponents is zero.
    pub fn normal_form_xyt(&self, m: u32) -> Result<Self, ExactError> {
        if m == 0 {
            return Err(ExactError::InvalidMultiplicity(m));
        }
        let find = |name: &str| {
            self.var_index(name)
                .ok_or_else(|| ExactError::UnknownVariable(name.to_string()))
        };
        let (ix, iy, it) = (find("x")?, find("y")?, find("t")?);
        let mut out = Self::zero_owned(self.vars.clone());
        for (e, c) in &self.terms {
            if e.0.iter().any(|&k| k < 0) {
                return Err(ExactError::NegativeExponent);
            }
            let k = e.0[ix].min(e.0[iy]);
            let mut ne = e.0.clone();
            ne[ix] -= k;
            ne[iy] -= k;
            ne[it] += k * m as i32;
            out.add_term(ne, c.clone())?;
        }
        Ok(out)
    }

    /// Sets the named variables to zero (they must carry nonnegative exponents
    /// in every surviving term); the variable list is kept.
    pub fn evaluate_at_zero(&self, names: &[&str]) -> Result<Self, ExactError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.var_index(n)
                    .ok_or_else(|| ExactError::UnknownVariable(n.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let mut out = Self::zero_owned(self.vars.clone());
        for (e, c) in &self.terms {
            if idx.iter().any(|&i| e.0[i] < 0) {
                return Err(ExactError::NegativeExponent);
            }
            if idx.iter().all(|&i| e.0[i] == 0) {
                out.add_term(e.0.clone(), c.clone())?;
            }
        }
        Ok(out)
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.try_add(rhs).expect("variable lists differ")
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.try_sub(rhs).expect("variable lists differ")
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.try_mul(rhs).expect("variable lists differ")
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // descending order reads more naturally
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let mono: Vec<String> =
                e.0.iter()
                    .zip(&self.vars)
                    .filter(|(x, _)| **x != 0)
                    .map(|(x, v)| {
                        if *x == 1 {
                            v.clone()
                        } else {
                            format!("{v}^{x}")
                        }
                    })
                    .collect();
            if mono.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{abs}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentPoly[{}]({})", self.vars.join(","), self)
    }
}

/// Parses a sum of monomials such as `3/2*x^2*t - y + 4*z^-1` over `vars`.
///
/// Only `+`, `-`, `*` and integer `^` exponents are understood; no parentheses.
pub fn parse_expression(src: &str, vars: &[&str]) -> Result<LaurentPoly, ExactError> {
    let bad = |why: &str| ExactError::ParseExpression {
        input: src.to_string(),
        reason: why.to_string(),
    };
    let mut out = LaurentPoly::zero(vars);
    let cleaned: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Err(bad("empty expression"));
    }
    // split into signed terms, keeping a '-' that follows '^'
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    let mut prev: Option<char> = None;
    for ch in cleaned.chars() {
        let ch = if ch == '\u{2212}' { '-' } else { ch };
        if (ch == '+' || ch == '-') && prev != Some('^') {
            if !cur.is_empty() {
                terms.push((neg, std::mem::take(&mut cur)));
            } else if prev.is_some() && prev != Some('+') && prev != Some('-') {
                return Err(bad("dangling operator"));
            }
            neg = if prev == Some('-') || prev == Some('+') {
                return Err(bad("repeated sign"));
            } else {
                ch == '-'
            };
        } else {
            cur.push(ch);
        }
        prev = Some(ch);
    }
    if cur.is_empty() {
        return Err(bad("trailing operator"));
    }
    terms.push((neg, cur));

    for (neg, body) in terms {
        let mut coeff = Rational::one();
        let mut exps = vec![0i32; vars.len()];
        for factor in body.split('*') {
            if factor.is_empty() {
                return Err(bad("empty factor"));
            }
            let (base, power) = match factor.split_once('^') {
                Some((b, p)) => (b, p.parse::<i32>().map_err(|_| bad("bad exponent"))?),
                None => (factor, 1),
            };
            if let Some(i) = vars.iter().position(|v| *v == base) {
                exps[i] += power;
            } else {
                let c: Rational = base.parse().map_err(|_| bad("unknown symbol"))?;
                coeff *= c
                    .pow(power)
                    .ok_or_else(|| bad("zero to a negative power"))?;
            }
        }
        if neg {
            coeff = -coeff;
        }
        out.add_term(exps, coeff)?;
    }
    Ok(out)
}
