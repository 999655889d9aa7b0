//! Univariate spectral factorization and QSP completion.

use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laurent::{Cplx, LaurentPoly1, Parity, Var};
use crate::peel::{readoff, PeelError};
use crate::protocol::{ProtocolSpec, Su2LaurentUnitary};

/// Roots within this distance of the unit circle are treated as boundary roots.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Relative tolerance for matching a root `r` with its reflection `1/r̄`.
pub const PAIRING_TOL: f64 = 1e-6;

const SAMPLES: usize = 1024;
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("polynomial is not Hermitian")]
    NotHermitian,
    #[error("polynomial is negative on the circle (minimum {0:.3e})")]
    NotNonnegative(f64),
    #[error("root pairing failed: {0}")]
    RootPairing(String),
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("read-off failed: {0}")]
    Readoff(#[from] PeelError),
}

/// Roots of `Σ c_i z^i` from the companion matrix, Newton-polished.
pub fn poly_roots(coeffs: &[Cplx]) -> Vec<Cplx> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let mut m = DMatrix::<Cplx>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Cplx::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let raw = schur_eigenvalues(&m).unwrap_or_else(|| aberth(&c));
    raw.into_iter().map(|z| polish(&c, z)).collect()
}

/// Diagonal of the complex Schur form; retries on a shifted matrix when the
/// iteration stalls on permutation-like companion matrices.
fn schur_eigenvalues(m: &DMatrix<Cplx>) -> Option<Vec<Cplx>> {
    let n = m.nrows();
    let shift = Cplx::new(0.3137, 0.7213);
    for sigma in [Cplx::new(0.0, 0.0), shift] {
        let shifted = m + DMatrix::<Cplx>::identity(n, n) * sigma;
        if let Some(s) = Schur::try_new(shifted, f64::EPSILON, 100 * n.max(10)) {
            let (_, t) = s.unpack();
            return Some((0..n).map(|i| t[(i, i)] - sigma).collect());
        }
    }
    None
}

/// Simultaneous Aberth-Ehrlich iteration.
fn aberth(c: &[Cplx]) -> Vec<Cplx> {
    let n = c.len() - 1;
    let radius = c[..n]
        .iter()
        .map(|x| (x / c[n]).norm())
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Cplx> = (0..n)
        .map(|k| {
            Cplx::from_polar(
                radius,
                2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64,
            )
        })
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let (p, dp) = horner(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulse: Cplx = (0..n)
                .filter(|&j| j != i)
                .map(|j| Cplx::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let w = ratio / (Cplx::new(1.0, 0.0) - ratio * repulse);
            z[i] -= w;
            moved = moved.max(w.norm() / z[i].norm().max(1.0));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn horner(c: &[Cplx], z: Cplx) -> (Cplx, Cplx) {
    let mut p = Cplx::new(0.0, 0.0);
    let mut dp = Cplx::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Newton steps that are kept only while they reduce `|p|`.
fn polish(c: &[Cplx], mut z: Cplx) -> Cplx {
    let (mut pz, _) = horner(c, z);
    for _ in 0..8 {
        let (p, dp) = horner(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = horner(c, cand);
        if pc.norm() < pz.norm() {
            z = cand;
            pz = pc;
        } else {
            break;
        }
    }
    z
}

fn derivative(c: &[Cplx]) -> Vec<Cplx> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &a)| a * i as f64)
        .collect()
}

/// Whether the factor's roots avoid the open disk strictly or touch the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootClass {
    Stable,
    Outer,
}

/// `f = |g|²` on the circle, with `g` a polynomial in `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization1D {
    pub g: LaurentPoly1,
    pub roots: Vec<Cplx>,
    pub residual: f64,
    pub root_class: RootClass,
}

fn sample_min_max(f: &LaurentPoly1) -> (f64, f64) {
    (0..SAMPLES)
        .map(|i| {
            f.eval_circle(2.0 * std::f64::consts::PI * i as f64 / SAMPLES as f64)
                .re
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

/// Largest `|f − |g|²|` over the sampling grid.
pub fn sup_residual(f: &LaurentPoly1, g: &LaurentPoly1) -> f64 {
    (0..SAMPLES)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / SAMPLES as f64;
            (f.eval_circle(t).re - g.eval_circle(t).norm_sqr()).abs()
        })
        .fold(0.0, f64::max)
}

/// Factors a Hermitian `f ≥ 0` on the circle as `|g|²` with all roots of `g` in `|z| ≥ 1`.
pub fn fejer_riesz_1d(f: &LaurentPoly1) -> Result<Factorization1D, SpectralError> {
    if !f.is_hermitian(HERMITIAN_TOL) {
        return Err(SpectralError::NotHermitian);
    }
    if f.is_zero() {
        return Ok(Factorization1D {
            g: LaurentPoly1::zero(),
            roots: Vec::new(),
            residual: 0.0,
            root_class: RootClass::Stable,
        });
    }
    let norm = f.max_abs();
    let (min, _) = sample_min_max(f);
    if min < -1e-12 * norm.max(1.0) {
        return Err(SpectralError::NotNonnegative(min));
    }
    let n = f.degree().unwrap_or(0);
    let coeffs: Vec<Cplx> = (-n..=n).map(|e| f.coeff(e)).collect();
    let roots = poly_roots(&coeffs);

    let mut inside = Vec::new();
    let mut outside = Vec::new();
    let mut boundary = Vec::new();
    for r in roots {
        let m = r.norm();
        if (m - 1.0).abs() <= BOUNDARY_TOL {
            boundary.push(r);
        } else if m > 1.0 {
            outside.push(r);
        } else {
            inside.push(r);
        }
    }
    if inside.len() != outside.len() || boundary.len() % 2 != 0 {
        return Err(SpectralError::RootPairing(format!(
            "{} inside, {} outside, {} on the circle",
            inside.len(),
            outside.len(),
            boundary.len()
        )));
    }
    let mut chosen = Vec::with_capacity(n as usize);
    for &r in &outside {
        let target = Cplx::new(1.0, 0.0) / r.conj();
        let (idx, dist) = inside
            .iter()
            .enumerate()
            .map(|(i, &x)| (i, (x - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| SpectralError::RootPairing("no inside root left".into()))?;
        if dist > PAIRING_TOL * target.norm().max(1e-300) {
            return Err(SpectralError::RootPairing(format!(
                "root {r} has no reflection (distance {dist:.3e})"
            )));
        }
        inside.swap_remove(idx);
        chosen.push(r);
    }
    let dcoeffs = derivative(&coeffs);
    while let Some(r) = boundary.pop() {
        let (idx, _) = boundary
            .iter()
            .enumerate()
            .map(|(i, &x)| (i, (x - r).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("even count");
        let mate = boundary.swap_remove(idx);
        let mid = polish(&dcoeffs, (r + mate) / 2.0);
        chosen.push(mid / mid.norm());
    }
    let root_class = if chosen.len() > outside.len() {
        RootClass::Outer
    } else {
        RootClass::Stable
    };

    let mut h = LaurentPoly1::from_ascending(&[Cplx::new(1.0, 0.0)]);
    for &r in &chosen {
        h = &h * &LaurentPoly1::from_ascending(&[-r, Cplx::new(1.0, 0.0)]);
    }
    let hh = &h * &h.conj_reciprocal();
    let num: f64 = hh.terms().map(|(e, c)| (f.coeff(e) * c.conj()).re).sum();
    let den: f64 = hh.terms().map(|(_, c)| c.norm_sqr()).sum();
    let scale = (num / den).max(0.0).sqrt();
    let mut g = h.scale(Cplx::new(scale, 0.0));
    if f.has_real_coefficients(1e-14) {
        g = g.map_coeffs(|c| Cplx::new(c.re, 0.0));
    }
    let residual = sup_residual(f, &g);
    Ok(Factorization1D {
        g,
        roots: chosen,
        residual,
        root_class,
    })
}

/// Completed single-variable protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion1D {
    pub unitary: Su2LaurentUnitary,
    pub spec: ProtocolSpec,
    pub readoff_residual: f64,
    pub factorization: Factorization1D,
}

/// Completes real parts `(P̃, Q̃)` of degree `n` to a QSP unitary and reads off its phases.
///
/// `Q̃` is taken in Laurent form including its sine factor, so it is real
/// on the circle and odd under `z ↦ 1/z`.
pub fn complete_qsp_1d(
    p_re: &LaurentPoly1,
    q_re: &LaurentPoly1,
    n: usize,
    tol: f64,
) -> Result<Completion1D, SpectralError> {
    let n = n as i32;
    let check = |name: &str, p: &LaurentPoly1, odd: bool| -> Result<(), SpectralError> {
        if !p.is_hermitian(HERMITIAN_TOL) {
            return Err(SpectralError::ParityMismatch(format!(
                "{name} is not real on the circle"
            )));
        }
        if p.degree().is_some_and(|d| d > n) {
            return Err(SpectralError::ParityMismatch(format!(
                "{name} exceeds degree {n}"
            )));
        }
        if p.terms().any(|(e, _)| (e - n).rem_euclid(2) != 0) {
            return Err(SpectralError::ParityMismatch(format!(
                "{name} has exponents of parity other than {}",
                n.rem_euclid(2)
            )));
        }
        let embedded = p.embed(Var::A);
        let parity = if odd { Parity::Odd } else { Parity::Even };
        if !embedded.has_inversion_parity(true, false, parity) {
            return Err(SpectralError::ParityMismatch(format!(
                "{name} is not {} under z -> 1/z",
                if odd { "odd" } else { "even" }
            )));
        }
        Ok(())
    };
    check("P", p_re, false)?;
    check("Q", q_re, true)?;

    let one = LaurentPoly1::from_ascending(&[Cplx::new(1.0, 0.0)]);
    let u = &(&one - &(p_re * p_re)) - &(q_re * q_re);
    let factorization = fejer_riesz_1d(&u)?;
    let w = factorization.g.shift(-n);
    let wt = w.conj_reciprocal();
    let r = (&w + &wt).scale(Cplx::new(0.5, 0.0));
    let s = (&w - &wt).scale(Cplx::new(0.0, -0.5));
    let i = Cplx::new(0.0, 1.0);
    let p = (p_re + &r.scale(i)).embed(Var::A);
    let q = (q_re + &s.scale(i)).embed(Var::A);
    let result = readoff(&p, &q, tol)?;
    Ok(Completion1D {
        unitary: Su2LaurentUnitary::new(p, q),
        spec: result.spec,
        readoff_residual: result.residual,
        factorization,
    })
}

/// `T_k(x)` in Laurent form: `½(z^k + z^{-k})`.
pub fn chebyshev_t_laurent(k: i32) -> LaurentPoly1 {
    LaurentPoly1::from_terms([(k, Cplx::new(0.5, 0.0)), (-k, Cplx::new(0.5, 0.0))]).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peel::DEFAULT_TOLERANCE;
    use crate::protocol::verify_structure;
    use proptest::prelude::*;

    fn c(re: f64) -> Cplx {
        Cplx::new(re, 0.0)
    }

    #[test]
    fn roots_of_quadratic() {
        let mut r = poly_roots(&[c(2.0), c(-3.0), c(1.0)]);
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0] - c(1.0)).norm() < 1e-12);
        assert!((r[1] - c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn roots_of_permutation_like_companion() {
        // z^4 - 2z^2 + 1 = (z - 1)^2 (z + 1)^2
        let r = poly_roots(&[c(1.0), c(0.0), c(-2.0), c(0.0), c(1.0)]);
        assert_eq!(r.len(), 4);
        for z in r {
            assert!((z.norm() - 1.0).abs() < 1e-6 && z.im.abs() < 1e-6);
        }
        let r = aberth(&[c(-1.0), c(0.0), c(0.0), c(1.0)]);
        for z in r {
            assert!((z.powi(3) - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn simple_factor() {
        // |1 + z/2|^2 = 5/4 + (z + 1/z)/2
        let f = LaurentPoly1::from_terms([(0, c(1.25)), (1, c(0.5)), (-1, c(0.5))]).unwrap();
        let fr = fejer_riesz_1d(&f).unwrap();
        assert_eq!(fr.root_class, RootClass::Stable);
        assert!(fr.residual < 1e-14);
        assert!((fr.roots[0] - c(-2.0)).norm() < 1e-12);
        assert!(fr.g.has_real_coefficients(0.0));
    }

    #[test]
    fn boundary_double_root() {
        // 2 - z - 1/z = |1 - z|^2
        let f = LaurentPoly1::from_terms([(0, c(2.0)), (1, c(-1.0)), (-1, c(-1.0))]).unwrap();
        let fr = fejer_riesz_1d(&f).unwrap();
        assert_eq!(fr.root_class, RootClass::Outer);
        assert!((fr.roots[0] - c(1.0)).norm() < 1e-8);
        assert!(fr.residual < 1e-12);
    }

    #[test]
    fn zero_polynomial() {
        let fr = fejer_riesz_1d(&LaurentPoly1::zero()).unwrap();
        assert!(fr.g.is_zero());
    }

    #[test]
    fn rejects_negative_and_non_hermitian() {
        let f = LaurentPoly1::from_terms([(0, c(0.5)), (1, c(0.5)), (-1, c(0.5))]).unwrap();
        assert!(matches!(
            fejer_riesz_1d(&f),
            Err(SpectralError::NotNonnegative(_))
        ));
        let f = LaurentPoly1::from_terms([(0, c(1.0)), (1, c(0.3))]).unwrap();
        assert_eq!(fejer_riesz_1d(&f), Err(SpectralError::NotHermitian));
    }

    #[test]
    fn cosine_completes_to_single_iterate() {
        let x = chebyshev_t_laurent(1);
        let out = complete_qsp_1d(&x, &LaurentPoly1::zero(), 1, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(out.spec.len(), 1);
        let expect_q = LaurentPoly1::from_terms([(1, c(0.5)), (-1, c(-0.5))]).unwrap();
        assert!(out.unitary.q.distance(&expect_q.embed(Var::A)) < 1e-12);
    }

    #[test]
    fn chebyshev_completes() {
        for n in 1..=6 {
            let out = complete_qsp_1d(
                &chebyshev_t_laurent(n),
                &LaurentPoly1::zero(),
                n as usize,
                DEFAULT_TOLERANCE,
            )
            .unwrap();
            assert!(verify_structure(&out.unitary, n as usize, n as usize).passed);
            assert!(out.readoff_residual < 1e-9);
        }
    }

    #[test]
    fn zero_real_parts_complete() {
        let out = complete_qsp_1d(
            &LaurentPoly1::zero(),
            &LaurentPoly1::zero(),
            1,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert!(verify_structure(&out.unitary, 1, 1).passed);
    }

    #[test]
    fn parity_mismatch_rejected() {
        let x = chebyshev_t_laurent(1);
        assert!(matches!(
            complete_qsp_1d(&x, &LaurentPoly1::zero(), 2, DEFAULT_TOLERANCE),
            Err(SpectralError::ParityMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn factors_products_of_outer_polynomials(
            roots in prop::collection::vec((1.05f64..3.0, -3.2f64..3.2), 1..8)
        ) {
            let mut g = LaurentPoly1::from_ascending(&[c(1.0)]);
            for (m, t) in &roots {
                g = &g * &LaurentPoly1::from_ascending(&[-Cplx::from_polar(*m, *t), c(1.0)]);
            }
            let f = &g * &g.conj_reciprocal();
            let fr = fejer_riesz_1d(&f).unwrap();
            prop_assert!(fr.residual < 1e-8 * f.max_abs());
            prop_assert!(fr.roots.iter().all(|r| r.norm() >= 1.0));
        }
    }
}
