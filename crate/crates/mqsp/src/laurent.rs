//! Sparse Laurent polynomials in one and two variables.
//!
//! Bivariate polynomials are keyed by `(j, k)` for the monomial `a^j b^k`.
//! Exponents may be negative. Coefficients below a relative threshold are
//! pruned after every arithmetic operation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type Cplx = Complex64;

/// Coefficients with modulus at most this fraction of the largest are dropped.
pub const PRUNE_REL: f64 = 1e-14;

/// Relative tolerance for coefficient symmetry tests.
pub const PARITY_REL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaurentError {
    #[error("non-finite coefficient at exponent ({0}, {1})")]
    NonFinite(i32, i32),
    #[error("duplicate exponent ({0}, {1}) in coefficient records")]
    DuplicateExponent(i32, i32),
    #[error("polynomial is zero")]
    Zero,
    #[error("expected a univariate polynomial but found exponent {0} in the second variable")]
    NotUnivariate(i32),
}

/// One of the two signal variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    A,
    B,
}

impl Var {
    pub fn other(self) -> Var {
        match self {
            Var::A => Var::B,
            Var::B => Var::A,
        }
    }

    pub(crate) fn pick(self, (j, k): (i32, i32)) -> i32 {
        match self {
            Var::A => j,
            Var::B => k,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::A => write!(f, "a"),
            Var::B => write!(f, "b"),
        }
    }
}

/// Symmetry class of a polynomial under a substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Indefinite,
}

impl Parity {
    /// Parity of an integer, as used for exponent bounds.
    pub fn of(n: i64) -> Parity {
        if n.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Inversion and negation parities of a bivariate polynomial.
///
/// The zero polynomial reports `Even` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParitySignature {
    pub inversion_a: Parity,
    pub inversion_b: Parity,
    pub inversion_joint: Parity,
    pub negation_a: Parity,
    pub negation_b: Parity,
}

/// Exponent extents of a nonzero polynomial.
///
/// `deg_a` is the largest `|j|` in the support; `max_a`/`min_a` are the
/// signed extremes. Likewise for `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DegreePair {
    pub deg_a: i32,
    pub deg_b: i32,
    pub max_a: i32,
    pub min_a: i32,
    pub max_b: i32,
    pub min_b: i32,
}

impl DegreePair {
    /// Componentwise order on `(deg_a, deg_b)`.
    pub fn precedes(&self, bound: (i32, i32)) -> bool {
        self.deg_a <= bound.0 && self.deg_b <= bound.1
    }

    pub fn get(&self, var: Var) -> i32 {
        match var {
            Var::A => self.deg_a,
            Var::B => self.deg_b,
        }
    }
}

/// Serialized coefficient record `{j, k, re, im}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffRecord {
    pub j: i32,
    #[serde(default)]
    pub k: i32,
    pub re: f64,
    pub im: f64,
}

/// Bivariate Laurent polynomial in `a`, `b`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CoeffRecord>", into = "Vec<CoeffRecord>")]
pub struct LaurentPoly2 {
    coeffs: BTreeMap<(i32, i32), Cplx>,
}

impl LaurentPoly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Cplx) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn one() -> Self {
        Self::constant(Cplx::new(1.0, 0.0))
    }

    pub fn monomial(j: i32, k: i32, c: Cplx) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != Cplx::new(0.0, 0.0) {
            coeffs.insert((j, k), c);
        }
        Self { coeffs }
    }

    /// Builds a polynomial from `(j, k, c)` terms, summing repeated exponents.
    pub fn from_terms<I>(terms: I) -> Result<Self, LaurentError>
    where
        I: IntoIterator<Item = ((i32, i32), Cplx)>,
    {
        let mut coeffs: BTreeMap<(i32, i32), Cplx> = BTreeMap::new();
        for ((j, k), c) in terms {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(LaurentError::NonFinite(j, k));
            }
            *coeffs.entry((j, k)).or_default() += c;
        }
        let mut p = Self { coeffs };
        p.prune();
        Ok(p)
    }

    /// `½(v + 1/v)`, the cosine of the variable's angle on the torus.
    pub fn cos_of(var: Var) -> Self {
        let (p, m) = Self::unit_pair(var);
        (p + m).scale(Cplx::new(0.5, 0.0))
    }

    /// `½(v − 1/v)`, equal to `i sin θ` on the torus.
    pub fn isin_of(var: Var) -> Self {
        let (p, m) = Self::unit_pair(var);
        (p - m).scale(Cplx::new(0.5, 0.0))
    }

    /// The monomial `v^e` in the given variable.
    pub fn var_power(var: Var, e: i32) -> Self {
        match var {
            Var::A => Self::monomial(e, 0, Cplx::new(1.0, 0.0)),
            Var::B => Self::monomial(0, e, Cplx::new(1.0, 0.0)),
        }
    }

    fn unit_pair(var: Var) -> (Self, Self) {
        (Self::var_power(var, 1), Self::var_power(var, -1))
    }

    pub fn coeff(&self, j: i32, k: i32) -> Cplx {
        self.coeffs.get(&(j, k)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i32, i32), Cplx)> + '_ {
        self.coeffs.iter().map(|(&e, &c)| (e, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus of `self − other`.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for (e, c) in &self.coeffs {
            d = d.max((c - other.coeff(e.0, e.1)).norm());
        }
        for (e, c) in &other.coeffs {
            if !self.coeffs.contains_key(e) {
                d = d.max(c.norm());
            }
        }
        d
    }

    fn prune(&mut self) {
        let max = self.max_abs();
        let cut = max * PRUNE_REL;
        self.coeffs
            .retain(|_, c| c.norm() > cut && *c != Cplx::new(0.0, 0.0));
    }

    /// Drops every term for which `keep` returns false.
    pub fn retain<F: FnMut((i32, i32), Cplx) -> bool>(&mut self, mut keep: F) {
        self.coeffs.retain(|&e, c| keep(e, *c));
    }

    pub fn scale(&self, s: Cplx) -> Self {
        let mut out = Self {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e, c * s)).collect(),
        };
        out.prune();
        out
    }

    /// Multiplies by the monomial `a^dj b^dk`.
    pub fn shift(&self, dj: i32, dk: i32) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&(j, k), &c)| ((j + dj, k + dk), c))
                .collect(),
        }
    }

    /// `p̃(a, b) = p*(1/a, 1/b)`: conjugate coefficients, negate exponents.
    pub fn conj_reciprocal(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&(j, k), c)| ((-j, -k), c.conj()))
                .collect(),
        }
    }

    /// Substitutes `a → 1/a` (and/or `b → 1/b`) without conjugation.
    pub fn invert(&self, in_a: bool, in_b: bool) -> Self {
        let sa = if in_a { -1 } else { 1 };
        let sb = if in_b { -1 } else { 1 };
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&(j, k), &c)| ((sa * j, sb * k), c))
                .collect(),
        }
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs<F: Fn(Cplx) -> Cplx>(&self, f: F) -> Self {
        let mut out = Self {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e, f(c))).collect(),
        };
        out.prune();
        out
    }

    /// Evaluates at arbitrary nonzero complex `(a, b)`.
    pub fn eval(&self, a: Cplx, b: Cplx) -> Cplx {
        self.coeffs
            .iter()
            .map(|(&(j, k), &c)| c * a.powi(j) * b.powi(k))
            .sum()
    }

    /// Evaluates at `a = e^{iθa}`, `b = e^{iθb}`.
    pub fn eval_torus(&self, theta_a: f64, theta_b: f64) -> Cplx {
        self.coeffs
            .iter()
            .map(|(&(j, k), &c)| c * Cplx::from_polar(1.0, j as f64 * theta_a + k as f64 * theta_b))
            .sum()
    }

    /// Exponent extents, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<DegreePair> {
        let mut it = self.coeffs.keys();
        let &(j0, k0) = it.next()?;
        let mut d = DegreePair {
            deg_a: 0,
            deg_b: 0,
            max_a: j0,
            min_a: j0,
            max_b: k0,
            min_b: k0,
        };
        for &(j, k) in self.coeffs.keys() {
            d.max_a = d.max_a.max(j);
            d.min_a = d.min_a.min(j);
            d.max_b = d.max_b.max(k);
            d.min_b = d.min_b.min(k);
        }
        d.deg_a = d.max_a.max(-d.min_a);
        d.deg_b = d.max_b.max(-d.min_b);
        Some(d)
    }

    /// Largest exponent of `var` appearing in the support.
    pub fn max_exponent(&self, var: Var) -> Option<i32> {
        self.coeffs.keys().map(|&e| var.pick(e)).max()
    }

    /// Coefficient of `var^e`, a univariate polynomial in the other variable.
    pub fn slice(&self, var: Var, e: i32) -> LaurentPoly1 {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(&ex, _)| var.pick(ex) == e)
            .map(|(&ex, &c)| (var.other().pick(ex), c))
            .collect();
        LaurentPoly1 { coeffs }
    }

    /// Slice at the largest power of `var` in the support.
    pub fn leading_slice(&self, var: Var) -> Result<LaurentPoly1, LaurentError> {
        let e = self.max_exponent(var).ok_or(LaurentError::Zero)?;
        Ok(self.slice(var, e))
    }

    /// True if `p(1/a, 1/b) = ± p(a, b)` coefficientwise.
    pub fn has_inversion_parity(&self, in_a: bool, in_b: bool, parity: Parity) -> bool {
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
            Parity::Indefinite => return false,
        };
        let tol = PARITY_REL * self.max_abs();
        let sa = if in_a { -1 } else { 1 };
        let sb = if in_b { -1 } else { 1 };
        self.coeffs
            .iter()
            .all(|(&(j, k), &c)| (c - self.coeff(sa * j, sb * k) * sign).norm() <= tol)
    }

    /// True if every exponent of `var` has the given parity.
    pub fn has_negation_parity(&self, var: Var, parity: Parity) -> bool {
        match parity {
            Parity::Indefinite => false,
            p => {
                let floor = PARITY_REL * self.max_abs();
                self.coeffs
                    .iter()
                    .all(|(&e, c)| c.norm() <= floor || Parity::of(var.pick(e) as i64) == p)
            }
        }
    }

    fn classify(even: bool, odd: bool) -> Parity {
        if even {
            Parity::Even
        } else if odd {
            Parity::Odd
        } else {
            Parity::Indefinite
        }
    }

    pub fn parity_signature(&self) -> ParitySignature {
        let inv = |a: bool, b: bool| {
            Self::classify(
                self.has_inversion_parity(a, b, Parity::Even),
                self.has_inversion_parity(a, b, Parity::Odd),
            )
        };
        let neg = |v: Var| {
            Self::classify(
                self.has_negation_parity(v, Parity::Even),
                self.has_negation_parity(v, Parity::Odd),
            )
        };
        ParitySignature {
            inversion_a: inv(true, false),
            inversion_b: inv(false, true),
            inversion_joint: inv(true, true),
            negation_a: neg(Var::A),
            negation_b: neg(Var::B),
        }
    }

    /// True if `p̃ = p`, i.e. the polynomial is real on the torus.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        let t = self.conj_reciprocal();
        self.distance(&t) <= tol
    }

    /// True if all coefficients are real to within `rel_tol`.
    pub fn has_real_coefficients(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        self.coeffs.values().all(|c| c.im.abs() <= tol)
    }

    /// Projects onto a single variable, failing if the other exponent is used.
    pub fn to_univariate(&self, var: Var) -> Result<LaurentPoly1, LaurentError> {
        let other = var.other();
        if let Some((&e, _)) = self.coeffs.iter().find(|(&e, _)| other.pick(e) != 0) {
            return Err(LaurentError::NotUnivariate(other.pick(e)));
        }
        Ok(self.slice(other, 0))
    }

    pub fn to_records(&self) -> Vec<CoeffRecord> {
        self.coeffs
            .iter()
            .map(|(&(j, k), c)| CoeffRecord {
                j,
                k,
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    /// Builds from records exactly, without pruning.
    pub fn from_records(records: &[CoeffRecord]) -> Result<Self, LaurentError> {
        let mut coeffs = BTreeMap::new();
        for r in records {
            if !r.re.is_finite() || !r.im.is_finite() {
                return Err(LaurentError::NonFinite(r.j, r.k));
            }
            if coeffs.insert((r.j, r.k), Cplx::new(r.re, r.im)).is_some() {
                return Err(LaurentError::DuplicateExponent(r.j, r.k));
            }
        }
        coeffs.retain(|_, c: &mut Cplx| *c != Cplx::new(0.0, 0.0));
        Ok(Self { coeffs })
    }
}

impl TryFrom<Vec<CoeffRecord>> for LaurentPoly2 {
    type Error = LaurentError;
    fn try_from(v: Vec<CoeffRecord>) -> Result<Self, Self::Error> {
        Self::from_records(&v)
    }
}

impl From<LaurentPoly2> for Vec<CoeffRecord> {
    fn from(p: LaurentPoly2) -> Self {
        p.to_records()
    }
}

impl Add<&LaurentPoly2> for &LaurentPoly2 {
    type Output = LaurentPoly2;
    fn add(self, rhs: &LaurentPoly2) -> LaurentPoly2 {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&LaurentPoly2> for LaurentPoly2 {
    fn add_assign(&mut self, rhs: &LaurentPoly2) {
        for (&e, &c) in &rhs.coeffs {
            *self.coeffs.entry(e).or_default() += c;
        }
        self.prune();
    }
}

impl Sub<&LaurentPoly2> for &LaurentPoly2 {
    type Output = LaurentPoly2;
    fn sub(self, rhs: &LaurentPoly2) -> LaurentPoly2 {
        let mut out = self.clone();
        for (&e, &c) in &rhs.coeffs {
            *out.coeffs.entry(e).or_default() -= c;
        }
        out.prune();
        out
    }
}

impl Neg for &LaurentPoly2 {
    type Output = LaurentPoly2;
    fn neg(self) -> LaurentPoly2 {
        LaurentPoly2 {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e, -c)).collect(),
        }
    }
}

impl Mul<&LaurentPoly2> for &LaurentPoly2 {
    type Output = LaurentPoly2;
    fn mul(self, rhs: &LaurentPoly2) -> LaurentPoly2 {
        let mut coeffs: BTreeMap<(i32, i32), Cplx> = BTreeMap::new();
        for (&(j1, k1), &c1) in &self.coeffs {
            for (&(j2, k2), &c2) in &rhs.coeffs {
                *coeffs.entry((j1 + j2, k1 + k2)).or_default() += c1 * c2;
            }
        }
        let mut out = LaurentPoly2 { coeffs };
        out.prune();
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<LaurentPoly2> for LaurentPoly2 {
            type Output = LaurentPoly2;
            fn $m(self, rhs: LaurentPoly2) -> LaurentPoly2 {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&LaurentPoly2> for LaurentPoly2 {
            type Output = LaurentPoly2;
            fn $m(self, rhs: &LaurentPoly2) -> LaurentPoly2 {
                (&self).$m(rhs)
            }
        }
        impl $tr<LaurentPoly2> for &LaurentPoly2 {
            type Output = LaurentPoly2;
            fn $m(self, rhs: LaurentPoly2) -> LaurentPoly2 {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for LaurentPoly2 {
    type Output = LaurentPoly2;
    fn neg(self) -> LaurentPoly2 {
        -&self
    }
}

impl fmt::Display for LaurentPoly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(&(j, k), c)| format!("({:.6}{:+.6}i)a^{j}b^{k}", c.re, c.im))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Univariate Laurent polynomial in `z`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaurentPoly1 {
    coeffs: BTreeMap<i32, Cplx>,
}

impl LaurentPoly1 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I>(terms: I) -> Result<Self, LaurentError>
    where
        I: IntoIterator<Item = (i32, Cplx)>,
    {
        let mut coeffs: BTreeMap<i32, Cplx> = BTreeMap::new();
        for (e, c) in terms {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(LaurentError::NonFinite(e, 0));
            }
            *coeffs.entry(e).or_default() += c;
        }
        let mut p = Self { coeffs };
        p.prune();
        Ok(p)
    }

    /// `c_0 + c_1 z + ... + c_d z^d` from an ascending coefficient slice.
    pub fn from_ascending(coeffs: &[Cplx]) -> Self {
        Self::from_terms(coeffs.iter().enumerate().map(|(i, &c)| (i as i32, c)))
            .expect("finite coefficients")
    }

    fn prune(&mut self) {
        let max = self.max_abs();
        let cut = max * PRUNE_REL;
        self.coeffs
            .retain(|_, c| c.norm() > cut && *c != Cplx::new(0.0, 0.0));
    }

    pub fn coeff(&self, e: i32) -> Cplx {
        self.coeffs.get(&e).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Cplx)> + '_ {
        self.coeffs.iter().map(|(&e, &c)| (e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn min_exponent(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Largest `|e|` in the support, `None` for zero.
    pub fn degree(&self) -> Option<i32> {
        Some(self.max_exponent()?.max(-self.min_exponent()?))
    }

    pub fn scale(&self, s: Cplx) -> Self {
        let mut out = Self {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e, c * s)).collect(),
        };
        out.prune();
        out
    }

    pub fn shift(&self, d: i32) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e + d, c)).collect(),
        }
    }

    pub fn conj_reciprocal(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&e, c)| (-e, c.conj())).collect(),
        }
    }

    pub fn map_coeffs<F: Fn(Cplx) -> Cplx>(&self, f: F) -> Self {
        let mut out = Self {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e, f(c))).collect(),
        };
        out.prune();
        out
    }

    pub fn eval(&self, z: Cplx) -> Cplx {
        self.coeffs.iter().map(|(&e, &c)| c * z.powi(e)).sum()
    }

    pub fn eval_circle(&self, theta: f64) -> Cplx {
        self.coeffs
            .iter()
            .map(|(&e, &c)| c * Cplx::from_polar(1.0, e as f64 * theta))
            .sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        self.distance(&self.conj_reciprocal()) <= tol
    }

    pub fn has_real_coefficients(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        self.coeffs.values().all(|c| c.im.abs() <= tol)
    }

    /// Embeds as a bivariate polynomial in the given variable.
    pub fn embed(&self, var: Var) -> LaurentPoly2 {
        LaurentPoly2 {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&e, &c)| match var {
                    Var::A => ((e, 0), c),
                    Var::B => ((0, e), c),
                })
                .collect(),
        }
    }
}

impl Add<&LaurentPoly1> for &LaurentPoly1 {
    type Output = LaurentPoly1;
    fn add(self, rhs: &LaurentPoly1) -> LaurentPoly1 {
        let mut out = self.clone();
        for (&e, &c) in &rhs.coeffs {
            *out.coeffs.entry(e).or_default() += c;
        }
        out.prune();
        out
    }
}

impl Sub<&LaurentPoly1> for &LaurentPoly1 {
    type Output = LaurentPoly1;
    fn sub(self, rhs: &LaurentPoly1) -> LaurentPoly1 {
        let mut out = self.clone();
        for (&e, &c) in &rhs.coeffs {
            *out.coeffs.entry(e).or_default() -= c;
        }
        out.prune();
        out
    }
}

impl Mul<&LaurentPoly1> for &LaurentPoly1 {
    type Output = LaurentPoly1;
    fn mul(self, rhs: &LaurentPoly1) -> LaurentPoly1 {
        let mut coeffs: BTreeMap<i32, Cplx> = BTreeMap::new();
        for (&e1, &c1) in &self.coeffs {
            for (&e2, &c2) in &rhs.coeffs {
                *coeffs.entry(e1 + e2).or_default() += c1 * c2;
            }
        }
        let mut out = LaurentPoly1 { coeffs };
        out.prune();
        out
    }
}
