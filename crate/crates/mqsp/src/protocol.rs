//! Protocol specifications and the SU(2)-valued Laurent unitaries they build.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laurent::{Cplx, LaurentPoly2, Parity, Var};

/// Determinant residual accepted by the structure check.
pub const DETERMINANT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(
        "phase count {phases} does not match {iterates} oracle iterates (expected {iterates} + 1)"
    )]
    PhaseCount { phases: usize, iterates: usize },
    #[error("non-finite phase at index {0}")]
    NonFinitePhase(usize),
    #[error("oracle bit must be 0 or 1, got {0}")]
    BadBit(u8),
    #[error("decomposition residual exceeded: parity remainder {remainder:.3e}, determinant residual {determinant:.3e}")]
    DecompositionResidual { remainder: f64, determinant: f64 },
}

/// Which signal oracle an iterate queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Oracle {
    /// `A(a)`, bit 1.
    A,
    /// `B(b)`, bit 0.
    B,
}

impl Oracle {
    pub fn var(self) -> Var {
        match self {
            Oracle::A => Var::A,
            Oracle::B => Var::B,
        }
    }

    pub fn from_var(v: Var) -> Self {
        match v {
            Var::A => Oracle::A,
            Var::B => Oracle::B,
        }
    }
}

impl TryFrom<u8> for Oracle {
    type Error = ProtocolError;
    fn try_from(b: u8) -> Result<Self, Self::Error> {
        match b {
            1 => Ok(Oracle::A),
            0 => Ok(Oracle::B),
            other => Err(ProtocolError::BadBit(other)),
        }
    }
}

impl From<Oracle> for u8 {
    fn from(o: Oracle) -> u8 {
        match o {
            Oracle::A => 1,
            Oracle::B => 0,
        }
    }
}

/// Wraps a phase into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    if phi > -PI && phi <= PI {
        return phi;
    }
    let mut r = phi.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Deserialize)]
struct RawSpec {
    s: Vec<Oracle>,
    phases: Vec<f64>,
}

/// Oracle sequence `s` and phases `φ_0..φ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ProtocolSpec {
    s: Vec<Oracle>,
    phases: Vec<f64>,
}

impl TryFrom<RawSpec> for ProtocolSpec {
    type Error = ProtocolError;
    fn try_from(r: RawSpec) -> Result<Self, Self::Error> {
        ProtocolSpec::new(r.s, r.phases)
    }
}

impl ProtocolSpec {
    /// Validates lengths and finiteness; phases are wrapped into `(−π, π]`.
    pub fn new(s: Vec<Oracle>, phases: Vec<f64>) -> Result<Self, ProtocolError> {
        if phases.len() != s.len() + 1 {
            return Err(ProtocolError::PhaseCount {
                phases: phases.len(),
                iterates: s.len(),
            });
        }
        if let Some(i) = phases.iter().position(|p| !p.is_finite()) {
            return Err(ProtocolError::NonFinitePhase(i));
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(Self { s, phases })
    }

    /// Parses `s` from 0/1 bits.
    pub fn from_bits(bits: &[u8], phases: Vec<f64>) -> Result<Self, ProtocolError> {
        let s = bits
            .iter()
            .map(|&b| Oracle::try_from(b))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(s, phases)
    }

    pub fn s(&self) -> &[Oracle] {
        &self.s
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Number of oracle iterates `n`.
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Number of `A` iterates `m`.
    pub fn count_a(&self) -> usize {
        self.s.iter().filter(|&&o| o == Oracle::A).count()
    }

    /// Concatenates two protocols, merging the phases at the seam.
    pub fn concat(&self, other: &ProtocolSpec) -> ProtocolSpec {
        let mut s = self.s.clone();
        s.extend_from_slice(&other.s);
        let mut phases = self.phases.clone();
        let last = phases.pop().expect("at least one phase");
        phases.push(last + other.phases[0]);
        phases.extend_from_slice(&other.phases[1..]);
        ProtocolSpec::new(s, phases).expect("concatenation preserves validity")
    }
}

/// Top row `[P, Q]` of `[[P, Q], [−Q̃, P̃]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Su2LaurentUnitary {
    #[serde(rename = "P")]
    pub p: LaurentPoly2,
    #[serde(rename = "Q")]
    pub q: LaurentPoly2,
}

impl Su2LaurentUnitary {
    pub fn new(p: LaurentPoly2, q: LaurentPoly2) -> Self {
        Self { p, q }
    }

    pub fn identity() -> Self {
        Self::new(LaurentPoly2::one(), LaurentPoly2::zero())
    }

    /// Bottom row `[−Q̃, P̃]`.
    pub fn bottom_row(&self) -> (LaurentPoly2, LaurentPoly2) {
        (-self.q.conj_reciprocal(), self.p.conj_reciprocal())
    }

    /// `P P̃ + Q Q̃`, identically one for a valid unitary.
    pub fn determinant(&self) -> LaurentPoly2 {
        &self.p * &self.p.conj_reciprocal() + &self.q * &self.q.conj_reciprocal()
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Su2LaurentUnitary) -> Su2LaurentUnitary {
        let p = &self.p * &other.p - &self.q * &other.q.conj_reciprocal();
        let q = &self.p * &other.q + &self.q * &other.p.conj_reciprocal();
        Su2LaurentUnitary::new(p, q)
    }

    /// Evaluates the full 2×2 matrix on the torus.
    pub fn eval_torus(&self, theta_a: f64, theta_b: f64) -> Matrix2<Cplx> {
        let p = self.p.eval_torus(theta_a, theta_b);
        let q = self.q.eval_torus(theta_a, theta_b);
        Matrix2::new(p, q, -q.conj(), p.conj())
    }

    /// Largest coefficient difference in either entry.
    pub fn distance(&self, other: &Su2LaurentUnitary) -> f64 {
        self.p.distance(&other.p).max(self.q.distance(&other.q))
    }
}

/// Right-multiplies the top row `[P, Q]` by the oracle in `var`, then `Z(φ)`.
pub(crate) fn apply_iterate(u: &Su2LaurentUnitary, var: Var, phi: f64) -> Su2LaurentUnitary {
    let c = LaurentPoly2::cos_of(var);
    let s = LaurentPoly2::isin_of(var);
    let ep = Cplx::from_polar(1.0, phi);
    let em = ep.conj();
    let p = (&u.p * &c + &u.q * &s).scale(ep);
    let q = (&u.p * &s + &u.q * &c).scale(em);
    Su2LaurentUnitary::new(p, q)
}

/// Builds `Z(φ_0) Π_k A^{s_k} B^{1−s_k} Z(φ_k)` symbolically.
pub fn build_unitary(spec: &ProtocolSpec) -> Su2LaurentUnitary {
    let mut u = Su2LaurentUnitary::new(
        LaurentPoly2::constant(Cplx::from_polar(1.0, spec.phases[0])),
        LaurentPoly2::zero(),
    );
    for (o, &phi) in spec.s.iter().zip(&spec.phases[1..]) {
        u = apply_iterate(&u, o.var(), phi);
    }
    u
}

fn z_matrix(phi: f64) -> Matrix2<Cplx> {
    Matrix2::new(
        Cplx::from_polar(1.0, phi),
        Cplx::new(0.0, 0.0),
        Cplx::new(0.0, 0.0),
        Cplx::from_polar(1.0, -phi),
    )
}

fn x_rotation(theta: f64) -> Matrix2<Cplx> {
    let c = Cplx::new(theta.cos(), 0.0);
    let s = Cplx::new(0.0, theta.sin());
    Matrix2::new(c, s, s, c)
}

/// Numeric product of 2×2 matrices at `(θa, θb)`, independent of the symbolic builder.
pub fn eval_unitary(spec: &ProtocolSpec, theta_a: f64, theta_b: f64) -> Matrix2<Cplx> {
    let mut m = z_matrix(spec.phases[0]);
    for (o, &phi) in spec.s.iter().zip(&spec.phases[1..]) {
        let theta = match o {
            Oracle::A => theta_a,
            Oracle::B => theta_b,
        };
        m = m * x_rotation(theta) * z_matrix(phi);
    }
    m
}

/// Outcome of the forward structure check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StructureReport {
    pub n: usize,
    pub m: usize,
    pub degree_bound: (i32, i32),
    pub degree_ok: bool,
    pub inversion_parity_ok: bool,
    pub negation_parity_ok: bool,
    pub determinant_residual: f64,
    pub passed: bool,
}

/// Checks degree, parity and determinant conditions for `n` iterates of which `m` are `A`.
///
/// `P` must be even and `Q` odd under `(a, b) ↦ (1/a, 1/b)`; both must have
/// `a`-exponents of parity `m` and `b`-exponents of parity `n − m`.
pub fn verify_structure(u: &Su2LaurentUnitary, n: usize, m: usize) -> StructureReport {
    let nb = n as i64 - m as i64;
    let bound = (m as i32, nb.max(-1) as i32);
    let within = |p: &LaurentPoly2| match p.degree() {
        None => true,
        Some(d) => nb >= 0 && d.precedes(bound),
    };
    let degree_ok = nb >= 0 && within(&u.p) && within(&u.q);
    let inversion_parity_ok = u.p.has_inversion_parity(true, true, Parity::Even)
        && u.q.has_inversion_parity(true, true, Parity::Odd);
    let pa = Parity::of(m as i64);
    let pb = Parity::of(nb);
    let negation_parity_ok = [&u.p, &u.q]
        .iter()
        .all(|x| x.has_negation_parity(Var::A, pa) && x.has_negation_parity(Var::B, pb));
    let determinant_residual = (u.determinant() - LaurentPoly2::one()).max_abs();
    StructureReport {
        n,
        m,
        degree_bound: bound,
        degree_ok,
        inversion_parity_ok,
        negation_parity_ok,
        determinant_residual,
        passed: degree_ok
            && inversion_parity_ok
            && negation_parity_ok
            && determinant_residual <= DETERMINANT_TOL,
    }
}

/// Components of a unitary rewritten in the cosine variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XComponents {
    pub p_hat: Cplx,
    pub q_hat: Cplx,
    pub r_hat: Cplx,
    pub s_hat: Cplx,
}

impl XComponents {
    /// `|P̂ + Q̂ sa sb|² + |R̂ sa + Ŝ sb|² − 1`.
    pub fn modulus_residual(&self, sa: f64, sb: f64) -> f64 {
        let top = self.p_hat + self.q_hat * (sa * sb);
        let right = self.r_hat * sa + self.s_hat * sb;
        top.norm_sqr() + right.norm_sqr() - 1.0
    }

    /// Same identity with the cross terms written as `PQ + P*Q* + RS + R*S*`.
    pub fn literal_residual(&self, sa: f64, sb: f64) -> f64 {
        let (p, q, r, s) = (self.p_hat, self.q_hat, self.r_hat, self.s_hat);
        let cross = p * q + p.conj() * q.conj() + r * s + r.conj() * s.conj();
        p.norm_sqr()
            + (sa * sb).powi(2) * q.norm_sqr()
            + sa * sa * r.norm_sqr()
            + sb * sb * s.norm_sqr()
            + sa * sb * cross.re
            - 1.0
    }
}

/// Projects `P`, `Q` at `(±θa, ±θb)`, `θ ∈ (0, π)`, onto the x-picture components.
///
/// Returns the components and the largest parity-forbidden projection.
pub fn x_components(u: &Su2LaurentUnitary, theta_a: f64, theta_b: f64) -> (XComponents, f64) {
    let ev = |p: &LaurentPoly2| {
        [
            p.eval_torus(theta_a, theta_b),
            p.eval_torus(-theta_a, theta_b),
            p.eval_torus(theta_a, -theta_b),
            p.eval_torus(-theta_a, -theta_b),
        ]
    };
    // ee, oe (odd in a), eo (odd in b), oo
    let project = |v: [Cplx; 4]| {
        [
            (v[0] + v[1] + v[2] + v[3]) / 4.0,
            (v[0] - v[1] + v[2] - v[3]) / 4.0,
            (v[0] + v[1] - v[2] - v[3]) / 4.0,
            (v[0] - v[1] - v[2] + v[3]) / 4.0,
        ]
    };
    let pp = project(ev(&u.p));
    let qq = project(ev(&u.q));
    let (sa, sb) = (theta_a.sin(), theta_b.sin());
    let comps = XComponents {
        p_hat: pp[0],
        q_hat: pp[3] / (sa * sb),
        r_hat: qq[1] / sa,
        s_hat: qq[2] / sb,
    };
    let remainder = [pp[1], pp[2], qq[0], qq[3]]
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    (comps, remainder)
}

/// Result of the x-picture cross-check over an interior grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct XPictureReport {
    pub parity_remainder: f64,
    pub modulus_residual: f64,
    pub literal_residual: f64,
    pub samples: usize,
}

/// Tolerance for the x-picture cross-check.
pub const X_PICTURE_TOL: f64 = 1e-8;

/// Rewrites `u` in the cosine variables on a grid and checks the unitarity identity.
pub fn x_picture_cross_check(u: &Su2LaurentUnitary) -> Result<XPictureReport, ProtocolError> {
    const G: usize = 12;
    let nodes: Vec<f64> = (0..G).map(|i| PI * (i as f64 + 0.5) / G as f64).collect();
    let mut report = XPictureReport {
        parity_remainder: 0.0,
        modulus_residual: 0.0,
        literal_residual: 0.0,
        samples: G * G,
    };
    for &ta in &nodes {
        for &tb in &nodes {
            let (c, rem) = x_components(u, ta, tb);
            let (sa, sb) = (ta.sin(), tb.sin());
            report.parity_remainder = report.parity_remainder.max(rem);
            report.modulus_residual = report
                .modulus_residual
                .max(c.modulus_residual(sa, sb).abs());
            report.literal_residual = report
                .literal_residual
                .max(c.literal_residual(sa, sb).abs());
        }
    }
    if report.parity_remainder > X_PICTURE_TOL || report.modulus_residual > X_PICTURE_TOL {
        return Err(ProtocolError::DecompositionResidual {
            remainder: report.parity_remainder,
            determinant: report.modulus_residual,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    fn arb_spec(max_n: usize) -> impl Strategy<Value = ProtocolSpec> {
        (0..=max_n).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..=1, n),
                prop::collection::vec(-PI..PI, n + 1),
            )
                .prop_map(|(bits, phases)| ProtocolSpec::from_bits(&bits, phases).unwrap())
        })
    }

    #[test]
    fn single_a_iterate() {
        let spec = ProtocolSpec::from_bits(&[1], vec![0.0, 0.0]).unwrap();
        let u = build_unitary(&spec);
        let expect_p =
            LaurentPoly2::from_terms([((1, 0), c(0.5, 0.0)), ((-1, 0), c(0.5, 0.0))]).unwrap();
        let expect_q =
            LaurentPoly2::from_terms([((1, 0), c(0.5, 0.0)), ((-1, 0), c(-0.5, 0.0))]).unwrap();
        assert!(u.p.distance(&expect_p) < 1e-15);
        assert!(u.q.distance(&expect_q) < 1e-15);
    }

    #[test]
    fn empty_protocol_is_phase() {
        let spec = ProtocolSpec::from_bits(&[], vec![0.7]).unwrap();
        let u = build_unitary(&spec);
        assert!((u.p.coeff(0, 0) - Cplx::from_polar(1.0, 0.7)).norm() < 1e-15);
        assert!(u.q.is_zero());
    }

    #[test]
    fn phase_count_checked() {
        assert!(matches!(
            ProtocolSpec::from_bits(&[1, 0], vec![0.0, 0.0]),
            Err(ProtocolError::PhaseCount { .. })
        ));
        assert!(ProtocolSpec::from_bits(&[2], vec![0.0, 0.0]).is_err());
        assert!(ProtocolSpec::from_bits(&[1], vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ProtocolSpec::from_bits(&[1, 0, 1], vec![0.1, -0.2, 0.3, 3.0]).unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"s":[1,0,1],"phases":[0.1,-0.2,0.3,3.0]}"#);
        let back: ProtocolSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<ProtocolSpec>(r#"{"s":[1],"phases":[0.0]}"#).is_err());
    }

    #[test]
    fn structure_trivial_pass_and_monomial_fail() {
        let spec = ProtocolSpec::from_bits(&[1, 0], vec![0.0; 3]).unwrap();
        let r = verify_structure(&build_unitary(&spec), 2, 1);
        assert!(r.passed, "{r:?}");
        let u = Su2LaurentUnitary::new(
            LaurentPoly2::monomial(1, 0, c(1.0, 0.0)),
            LaurentPoly2::zero(),
        );
        let r = verify_structure(&u, 1, 1);
        assert!(!r.passed);
        assert!(!r.inversion_parity_ok);
        assert!(r.determinant_residual < 1e-15);
    }

    #[test]
    fn structure_rejects_wrong_counts() {
        let spec = ProtocolSpec::from_bits(&[1, 1, 0], vec![0.3, 0.1, -0.4, 0.2]).unwrap();
        let u = build_unitary(&spec);
        assert!(verify_structure(&u, 3, 2).passed);
        assert!(!verify_structure(&u, 3, 1).passed);
        assert!(!verify_structure(&u, 2, 2).passed);
    }

    #[test]
    fn x_picture_single_iterate() {
        let spec = ProtocolSpec::from_bits(&[1], vec![0.0, 0.0]).unwrap();
        let u = build_unitary(&spec);
        let report = x_picture_cross_check(&u).unwrap();
        assert!(report.modulus_residual < 1e-10);
        let (xc, _) = x_components(&u, 1.1, 0.4);
        assert!((xc.p_hat - c(1.1f64.cos(), 0.0)).norm() < 1e-12);
        assert!(xc.q_hat.norm() < 1e-12);
        assert!((xc.r_hat - c(0.0, 1.0)).norm() < 1e-12);
        assert!(xc.s_hat.norm() < 1e-12);
    }

    #[test]
    fn x_picture_rejects_monomial() {
        let u = Su2LaurentUnitary::new(
            LaurentPoly2::monomial(1, 0, c(1.0, 0.0)),
            LaurentPoly2::zero(),
        );
        assert!(matches!(
            x_picture_cross_check(&u),
            Err(ProtocolError::DecompositionResidual { .. })
        ));
    }

    proptest! {
        #[test]
        fn built_unitaries_satisfy_structure(spec in arb_spec(7)) {
            let u = build_unitary(&spec);
            let r = verify_structure(&u, spec.len(), spec.count_a());
            prop_assert!(r.passed, "{:?}", r);
        }

        #[test]
        fn symbolic_matches_numeric(spec in arb_spec(6), ta in -PI..PI, tb in -PI..PI) {
            let u = build_unitary(&spec);
            let sym = u.eval_torus(ta, tb);
            let num = eval_unitary(&spec, ta, tb);
            prop_assert!((sym - num).iter().all(|d| d.norm() < 1e-12));
        }

        #[test]
        fn composition_merges_seam_phase(s1 in arb_spec(4), s2 in arb_spec(4)) {
            let lhs = build_unitary(&s1).compose(&build_unitary(&s2));
            let rhs = build_unitary(&s1.concat(&s2));
            prop_assert!(lhs.distance(&rhs) < 1e-12);
        }

        #[test]
        fn x_picture_holds_for_built(spec in arb_spec(6)) {
            let r = x_picture_cross_check(&build_unitary(&spec));
            prop_assert!(r.is_ok(), "{:?}", r);
        }
    }
}
