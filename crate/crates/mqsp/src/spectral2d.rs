//! Bivariate spectral factorization of strictly positive trigonometric polynomials.
//!
//! The pipeline computes Fourier coefficients of `1/f` on a grid, assembles
//! the block-Toeplitz matrix `Γ` over the degree lattice, tests the rank
//! condition for a stable factor and solves for it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laurent::{Cplx, LaurentPoly2, Parity, Var};
use crate::peel::readoff;
use crate::protocol::{ProtocolSpec, Su2LaurentUnitary};

/// Windowed change between successive grids accepted as converged.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Singular values above this fraction of the largest count toward the rank.
pub const RANK_REL_TOL: f64 = 1e-8;
/// Largest inverse-block entry, relative to the inverse, accepted as zero.
pub const INVERSE_BLOCK_TOL: f64 = 1e-6;
/// Sup residual `|f − |p|²|` accepted, relative to `‖f‖∞`.
pub const VERIFY_REL_TOL: f64 = 1e-6;

const START_GRID: usize = 128;
const MAX_GRID: usize = 4096;
const VERIFY_GRID: usize = 128;
const NET_RADII: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
const NET_ANGLES: usize = 64;
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Spectral2Error {
    #[error("polynomial is not Hermitian")]
    NotHermitian,
    #[error("f not strictly positive (minimum sample {0:.3e})")]
    NotStrictlyPositive(f64),
    #[error("no convergence of Fourier coefficients up to grid {grid} (change {change:.3e})")]
    NoConvergence { grid: usize, change: f64 },
    #[error("Fourier window ({have_n}, {have_m}) does not cover ({need_n}, {need_m})")]
    WindowTooSmall {
        have_n: i32,
        have_m: i32,
        need_n: i32,
        need_m: i32,
    },
    #[error("rank condition not satisfied (rank {}, need {})", .0.rank, .0.target_rank)]
    RankConditionFailed(Box<RankConditionReport>),
    #[error("rank and inverse-block routes disagree (rank {}, need {}, block {:.3e})", .0.rank, .0.target_rank, .0.inverse_block_norm)]
    RoutesDisagree(Box<RankConditionReport>),
    #[error("Γ is singular")]
    Singular,
    #[error("singular value decomposition did not converge")]
    SvdFailed,
    #[error("verification failed: residual {residual:.3e} exceeds {bound:.3e}")]
    VerificationFailed { residual: f64, bound: f64 },
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("generator supports at most 8 variable slots, got {0}")]
    GeneratorTooLarge(usize),
}

/// Fourier coefficients `c_{kl}` of `1/f` for `|k| ≤ n`, `|l| ≤ m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FourierTable {
    pub window: (i32, i32),
    pub grid: usize,
    pub convergence_residual: f64,
    #[serde(skip)]
    coeffs: BTreeMap<(i32, i32), Cplx>,
}

impl FourierTable {
    /// Table from explicit coefficients, which must be Hermitian and cover the window.
    pub fn from_coefficients(
        window: (i32, i32),
        coeffs: BTreeMap<(i32, i32), Cplx>,
    ) -> Result<Self, Spectral2Error> {
        for k in -window.0..=window.0 {
            for l in -window.1..=window.1 {
                let c = coeffs.get(&(k, l)).copied().unwrap_or_default();
                let d = coeffs.get(&(-k, -l)).copied().unwrap_or_default();
                if (c - d.conj()).norm() > HERMITIAN_TOL * (1.0 + c.norm()) {
                    return Err(Spectral2Error::NotHermitian);
                }
            }
        }
        Ok(Self {
            window,
            grid: 0,
            convergence_residual: 0.0,
            coeffs,
        })
    }

    pub fn get(&self, k: i32, l: i32) -> Cplx {
        self.coeffs.get(&(k, l)).copied().unwrap_or_default()
    }
}

fn fft2d(data: &mut [Cplx], n: usize, dir: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let fft: std::sync::Arc<dyn Fft<f64>> = planner.plan_fft(n, dir);
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
    let mut t = vec![Cplx::new(0.0, 0.0); n * n];
    t.par_chunks_mut(n).enumerate().for_each(|(s, col)| {
        for (r, x) in col.iter_mut().enumerate() {
            *x = data[r * n + s];
        }
        fft.process(col);
    });
    data.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
        for (s, x) in row.iter_mut().enumerate() {
            *x = t[s * n + r];
        }
    });
}

/// Samples `f` on the `N×N` grid `(2πr/N, 2πs/N)`, indexed `r·N + s`.
fn sample_grid(f: &LaurentPoly2, n: usize) -> Vec<Cplx> {
    let mut data = vec![Cplx::new(0.0, 0.0); n * n];
    let ni = n as i32;
    for ((j, k), c) in f.terms() {
        data[j.rem_euclid(ni) as usize * n + k.rem_euclid(ni) as usize] += c;
    }
    fft2d(&mut data, n, FftDirection::Inverse);
    data
}

fn reciprocal_coefficients(
    f: &LaurentPoly2,
    n: usize,
    window: (i32, i32),
) -> Result<BTreeMap<(i32, i32), Cplx>, Spectral2Error> {
    let mut data = sample_grid(f, n);
    let scale = f.max_abs();
    let min = data.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    if min <= 1e-12 * scale {
        return Err(Spectral2Error::NotStrictlyPositive(min));
    }
    for v in data.iter_mut() {
        *v = Cplx::new(1.0 / v.re, 0.0);
    }
    fft2d(&mut data, n, FftDirection::Forward);
    let norm = 1.0 / (n * n) as f64;
    let ni = n as i32;
    let mut out = BTreeMap::new();
    for k in -window.0..=window.0 {
        for l in -window.1..=window.1 {
            let idx = k.rem_euclid(ni) as usize * n + l.rem_euclid(ni) as usize;
            out.insert((k, l), data[idx] * norm);
        }
    }
    Ok(out)
}

/// Fourier coefficients of `1/f` on the window, refining the grid until they settle.
pub fn fourier_of_reciprocal(
    f: &LaurentPoly2,
    window: (i32, i32),
) -> Result<FourierTable, Spectral2Error> {
    if !f.is_hermitian(HERMITIAN_TOL) {
        return Err(Spectral2Error::NotHermitian);
    }
    let deg = f.degree().map(|d| d.deg_a.max(d.deg_b)).unwrap_or(0);
    let reach = deg.max(window.0).max(window.1) as usize;
    let mut n = START_GRID;
    while n <= 4 * reach {
        n *= 2;
    }
    let mut prev = reciprocal_coefficients(f, n, window)?;
    loop {
        let next_n = n * 2;
        if next_n > MAX_GRID {
            let change = f64::INFINITY;
            return Err(Spectral2Error::NoConvergence { grid: n, change });
        }
        let next = reciprocal_coefficients(f, next_n, window)?;
        let change = next
            .iter()
            .map(|(e, c)| (c - prev[e]).norm())
            .fold(0.0, f64::max);
        if change < CONVERGENCE_TOL {
            return Ok(FourierTable {
                window,
                grid: next_n,
                convergence_residual: change,
                coeffs: next,
            });
        }
        if next_n * 2 > MAX_GRID {
            return Err(Spectral2Error::NoConvergence {
                grid: next_n,
                change,
            });
        }
        prev = next;
        n = next_n;
    }
}

/// `Γ_{u,v} = c_{u−v}` over `Λ = {0..n}×{0..m}`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub n: usize,
    pub m: usize,
    pub matrix: DMatrix<Cplx>,
}

impl GammaMatrix {
    /// Row/column index of the lattice point `(k, l)`.
    pub fn index(&self, k: usize, l: usize) -> usize {
        k * (self.m + 1) + l
    }

    fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.n).flat_map(move |k| (0..=self.m).map(move |l| (k, l)))
    }

    fn submatrix<R, C>(&self, rows: R, cols: C) -> DMatrix<Cplx>
    where
        R: Fn(usize, usize) -> bool,
        C: Fn(usize, usize) -> bool,
    {
        let ri: Vec<usize> = self
            .points()
            .filter(|&(k, l)| rows(k, l))
            .map(|(k, l)| self.index(k, l))
            .collect();
        let ci: Vec<usize> = self
            .points()
            .filter(|&(k, l)| cols(k, l))
            .map(|(k, l)| self.index(k, l))
            .collect();
        DMatrix::from_fn(ri.len(), ci.len(), |i, j| self.matrix[(ri[i], ci[j])])
    }
}

pub fn build_gamma(
    table: &FourierTable,
    n: usize,
    m: usize,
) -> Result<GammaMatrix, Spectral2Error> {
    let (ni, mi) = (n as i32, m as i32);
    if table.window.0 < ni || table.window.1 < mi {
        return Err(Spectral2Error::WindowTooSmall {
            have_n: table.window.0,
            have_m: table.window.1,
            need_n: ni,
            need_m: mi,
        });
    }
    let size = (n + 1) * (m + 1);
    let matrix = DMatrix::from_fn(size, size, |u, v| {
        let (ku, lu) = ((u / (m + 1)) as i32, (u % (m + 1)) as i32);
        let (kv, lv) = ((v / (m + 1)) as i32, (v % (m + 1)) as i32);
        table.get(ku - kv, lu - lv)
    });
    Ok(GammaMatrix { n, m, matrix })
}

/// Both certifications of a stable factor, with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankConditionReport {
    pub n: usize,
    pub m: usize,
    pub rank: usize,
    pub target_rank: usize,
    pub singular_values: Vec<f64>,
    pub inverse_block_norm: f64,
    pub rank_route: bool,
    pub inverse_route: bool,
    pub satisfied: bool,
    pub condition_number: f64,
}

fn singular_values(m: &DMatrix<Cplx>) -> Result<Vec<f64>, Spectral2Error> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, 10_000)
        .ok_or(Spectral2Error::SvdFailed)?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Tests for a stable factor by the submatrix rank and by the vanishing inverse block.
pub fn rank_condition(gamma: &GammaMatrix) -> Result<RankConditionReport, Spectral2Error> {
    let (n, m) = (gamma.n, gamma.m);
    let sub = gamma.submatrix(|_, l| l >= 1, |k, _| k >= 1);
    let sv = singular_values(&sub)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > RANK_REL_TOL * smax).count();
    let target_rank = n * m;

    let inner = gamma.submatrix(|k, l| (k, l) != (0, 0), |k, l| (k, l) != (0, 0));
    let inverse_block_norm = if inner.nrows() == 0 {
        0.0
    } else {
        let inv = inner
            .clone()
            .try_inverse()
            .ok_or(Spectral2Error::Singular)?;
        let scale = inv.iter().map(|c| c.norm()).fold(0.0, f64::max);
        // inner drops (0, 0), so lattice index i maps to i - 1
        let mut worst: f64 = 0.0;
        for k in 1..=n {
            for l in 1..=m {
                let r = gamma.index(k, 0) - 1;
                let c = gamma.index(0, l) - 1;
                worst = worst.max(inv[(r, c)].norm());
            }
        }
        worst / scale
    };
    let full = singular_values(&gamma.matrix)?;
    let condition_number = match (full.first(), full.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    };
    let rank_route = rank == target_rank;
    let inverse_route = inverse_block_norm <= INVERSE_BLOCK_TOL;
    let report = RankConditionReport {
        n,
        m,
        rank,
        target_rank,
        singular_values: sv,
        inverse_block_norm,
        rank_route,
        inverse_route,
        satisfied: rank_route && inverse_route,
        condition_number,
    };
    if rank_route != inverse_route {
        return Err(Spectral2Error::RoutesDisagree(Box::new(report)));
    }
    Ok(report)
}

/// Extracted stable factor with its verification figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Factorization2D {
    pub p: LaurentPoly2,
    pub residual: f64,
    pub min_modulus_on_net: f64,
    pub stable_on_net: bool,
}

/// Largest `|f − |p|²|` on a `128×128` torus grid.
pub fn verify_residual(f: &LaurentPoly2, p: &LaurentPoly2) -> f64 {
    let g = VERIFY_GRID;
    (0..g)
        .into_par_iter()
        .map(|r| {
            let ta = 2.0 * PI * r as f64 / g as f64;
            (0..g)
                .map(|s| {
                    let tb = 2.0 * PI * s as f64 / g as f64;
                    (f.eval_torus(ta, tb).re - p.eval_torus(ta, tb).norm_sqr()).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Smallest `|p|` over a radial-angular net of the closed bidisk.
pub fn min_modulus_on_net(p: &LaurentPoly2) -> f64 {
    let pts: Vec<Cplx> = NET_RADII
        .iter()
        .flat_map(|&r| {
            (0..NET_ANGLES)
                .map(move |i| Cplx::from_polar(r, 2.0 * PI * i as f64 / NET_ANGLES as f64))
        })
        .collect();
    pts.par_iter()
        .map(|&z| {
            pts.iter()
                .map(|&w| p.eval(z, w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
        .min(p.coeff(0, 0).norm())
}

/// Solves `Γ q = e₀` and normalizes to `p = q/√q₀₀`.
pub fn extract_stable_factor(
    gamma: &GammaMatrix,
    f: &LaurentPoly2,
) -> Result<Factorization2D, Spectral2Error> {
    let size = gamma.matrix.nrows();
    let mut e0 = DVector::<Cplx>::zeros(size);
    e0[0] = Cplx::new(1.0, 0.0);
    let q = match gamma.matrix.clone().cholesky() {
        Some(ch) => ch.solve(&e0),
        None => gamma
            .matrix
            .clone()
            .lu()
            .solve(&e0)
            .ok_or(Spectral2Error::Singular)?,
    };
    let q00 = q[0].re;
    if q00 <= 0.0 {
        return Err(Spectral2Error::Singular);
    }
    let s = q00.sqrt();
    let mut p = LaurentPoly2::from_terms(
        (0..=gamma.n)
            .flat_map(|k| (0..=gamma.m).map(move |l| ((k as i32, l as i32), (k, l))))
            .map(|(e, (k, l))| (e, q[gamma.index(k, l)] / s)),
    )
    .map_err(|_| Spectral2Error::Singular)?;
    if f.has_real_coefficients(1e-14) {
        p = p.map_coeffs(|c| Cplx::new(c.re, 0.0));
    }
    let residual = verify_residual(f, &p);
    let bound = VERIFY_REL_TOL * f.max_abs();
    if residual > bound {
        return Err(Spectral2Error::VerificationFailed { residual, bound });
    }
    let min_modulus = min_modulus_on_net(&p);
    Ok(Factorization2D {
        stable_on_net: min_modulus > 1e-8 * p.max_abs(),
        min_modulus_on_net: min_modulus,
        residual,
        p,
    })
}

/// Summary of the full factorization pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FactorizationReport {
    pub p: LaurentPoly2,
    pub residual: f64,
    pub singular_values: Vec<f64>,
    pub satisfied: bool,
    pub convergence_residual: f64,
    pub min_modulus_on_net: f64,
    pub rank: RankConditionReport,
}

/// Fourier table, `Γ`, rank condition and extraction for `f` at degree `(n, m)`.
pub fn factor_2d(
    f: &LaurentPoly2,
    n: usize,
    m: usize,
) -> Result<FactorizationReport, Spectral2Error> {
    let table = fourier_of_reciprocal(f, (n as i32, m as i32))?;
    let gamma = build_gamma(&table, n, m)?;
    let rank = rank_condition(&gamma)?;
    if !rank.satisfied {
        return Err(Spectral2Error::RankConditionFailed(Box::new(rank)));
    }
    let fac = extract_stable_factor(&gamma, f)?;
    Ok(FactorizationReport {
        p: fac.p,
        residual: fac.residual,
        singular_values: rank.singular_values.clone(),
        satisfied: rank.satisfied,
        convergence_residual: table.convergence_residual,
        min_modulus_on_net: fac.min_modulus_on_net,
        rank,
    })
}

/// `det(I − K Z)` with `Z = diag(a,…,a, b,…,b)` and `‖K‖ < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StableGenerator {
    pub k: DMatrix<Cplx>,
    pub deg_a: usize,
    pub deg_b: usize,
}

/// Operator norm of the random contraction.
pub const GENERATOR_NORM: f64 = 0.8;

impl StableGenerator {
    pub fn random(deg_a: usize, deg_b: usize, seed: u64) -> Result<Self, Spectral2Error> {
        let size = deg_a + deg_b;
        if size > 8 {
            return Err(Spectral2Error::GeneratorTooLarge(size));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut k = DMatrix::from_fn(size, size, |_, _| {
            Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let top = singular_values(&k)?.first().copied().unwrap_or(0.0);
        if top > 0.0 {
            k *= Cplx::new(GENERATOR_NORM / top, 0.0);
        }
        Ok(Self { k, deg_a, deg_b })
    }

    /// Expands the determinant over principal minors.
    pub fn polynomial(&self) -> LaurentPoly2 {
        let size = self.deg_a + self.deg_b;
        let terms = (0u32..1 << size).map(|mask| {
            let idx: Vec<usize> = (0..size).filter(|i| mask >> i & 1 == 1).collect();
            let minor = if idx.is_empty() {
                Cplx::new(1.0, 0.0)
            } else {
                DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.k[(idx[r], idx[c])])
                    .determinant()
            };
            let ja = idx.iter().filter(|&&i| i < self.deg_a).count() as i32;
            let kb = idx.len() as i32 - ja;
            let sign = if idx.len().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            ((ja, kb), minor * sign)
        });
        LaurentPoly2::from_terms(terms).expect("finite minors")
    }
}

/// Random stable polynomial of degree `(deg_a, deg_b)` with constant term one.
pub fn generate_stable(
    deg_a: usize,
    deg_b: usize,
    seed: u64,
) -> Result<LaurentPoly2, Spectral2Error> {
    Ok(StableGenerator::random(deg_a, deg_b, seed)?.polynomial())
}

/// Completed two-variable protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Completion2D {
    pub unitary: Su2LaurentUnitary,
    pub factorization: FactorizationReport,
    pub spec: Option<ProtocolSpec>,
    pub readoff_residual: Option<f64>,
    pub not_peelable: Option<String>,
}

impl Completion2D {
    pub fn is_peelable(&self) -> bool {
        self.spec.is_some()
    }
}

fn check_real_part(
    name: &str,
    p: &LaurentPoly2,
    n: usize,
    m: usize,
    joint: Parity,
) -> Result<(), Spectral2Error> {
    let bad = |msg: String| Err(Spectral2Error::ParityMismatch(format!("{name} {msg}")));
    if !p.is_hermitian(HERMITIAN_TOL) {
        return bad("is not real on the torus".into());
    }
    if p.degree()
        .is_some_and(|d| !d.precedes((n as i32, m as i32)))
    {
        return bad(format!("exceeds degree ({n}, {m})"));
    }
    if !p.has_inversion_parity(true, true, joint) {
        return bad(format!("lacks {joint:?} joint inversion parity"));
    }
    if !p.has_negation_parity(Var::A, Parity::of(n as i64))
        || !p.has_negation_parity(Var::B, Parity::of(m as i64))
    {
        return bad(format!("has exponents of parity other than ({n}, {m})"));
    }
    Ok(())
}

/// Completes real parts `(P̃, Q̃)` of degree `(n, m)` to an SU(2) unitary and tries a read-off.
pub fn complete_mqsp_2d(
    p_re: &LaurentPoly2,
    q_re: &LaurentPoly2,
    n: usize,
    m: usize,
    tol: f64,
) -> Result<Completion2D, Spectral2Error> {
    check_real_part("P", p_re, n, m, Parity::Even)?;
    check_real_part("Q", q_re, n, m, Parity::Odd)?;
    let f = LaurentPoly2::one() - p_re * p_re - q_re * q_re;
    let factorization = factor_2d(&f, 2 * n, 2 * m)?;
    let w = factorization.p.shift(-(n as i32), -(m as i32));
    let wt = w.conj_reciprocal();
    let r = (&w + &wt).scale(Cplx::new(0.5, 0.0));
    let s = (&w - &wt).scale(Cplx::new(0.0, -0.5));
    let i = Cplx::new(0.0, 1.0);
    let unitary = Su2LaurentUnitary::new(p_re + r.scale(i), q_re + s.scale(i));
    let (spec, readoff_residual, not_peelable) = match readoff(&unitary.p, &unitary.q, tol) {
        Ok(res) => (Some(res.spec), Some(res.residual), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    Ok(Completion2D {
        unitary,
        factorization,
        spec,
        readoff_residual,
        not_peelable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peel::DEFAULT_TOLERANCE;
    use crate::protocol::{build_unitary, verify_structure};

    fn c(re: f64) -> Cplx {
        Cplx::new(re, 0.0)
    }

    fn modsq(p: &LaurentPoly2) -> LaurentPoly2 {
        p * &p.conj_reciprocal()
    }

    #[test]
    fn reciprocal_of_constant() {
        let t = fourier_of_reciprocal(&LaurentPoly2::constant(c(4.0)), (1, 1)).unwrap();
        assert!((t.get(0, 0) - c(0.25)).norm() < 1e-14);
        assert!(t.get(1, 0).norm() < 1e-14);
    }

    #[test]
    fn reciprocal_matches_geometric_series() {
        // 1/|1 - z/2|^2 has c_k = (4/3) 2^{-|k|}
        let p = LaurentPoly2::from_terms([((0, 0), c(1.0)), ((1, 0), c(-0.5))]).unwrap();
        let t = fourier_of_reciprocal(&modsq(&p), (3, 0)).unwrap();
        for k in -3..=3i32 {
            let expect = 4.0 / 3.0 * 0.5f64.powi(k.abs());
            assert!((t.get(k, 0) - c(expect)).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive() {
        let f = LaurentPoly2::from_terms([((0, 0), c(1.0)), ((1, 1), c(0.5)), ((-1, -1), c(0.5))])
            .unwrap();
        assert!(matches!(
            fourier_of_reciprocal(&f, (1, 1)),
            Err(Spectral2Error::NotStrictlyPositive(_))
        ));
    }

    #[test]
    fn gamma_layout_matches_block_toeplitz() {
        // c_{-k,-l} = conj(c_{k,l})
        let mut coeffs = BTreeMap::new();
        for k in -1..=1i32 {
            for l in -1..=1i32 {
                let v: i32 = 3 * k + l;
                coeffs.insert((k, l), Cplx::new(v.abs() as f64, v as f64));
            }
        }
        let t = FourierTable::from_coefficients((1, 1), coeffs).unwrap();
        let g = build_gamma(&t, 1, 1).unwrap();
        let cc = |k, l| t.get(k, l);
        let expect = [
            [cc(0, 0), cc(0, -1), cc(-1, 0), cc(-1, -1)],
            [cc(0, 1), cc(0, 0), cc(-1, 1), cc(-1, 0)],
            [cc(1, 0), cc(1, -1), cc(0, 0), cc(0, -1)],
            [cc(1, 1), cc(1, 0), cc(0, 1), cc(0, 0)],
        ];
        for (i, row) in expect.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(g.matrix[(i, j)], *v);
            }
        }
    }

    #[test]
    fn diagonal_example_factors() {
        // 5/4 + (ab + 1/(ab))/2 = |1 + ab/2|^2
        let f = LaurentPoly2::from_terms([((0, 0), c(1.25)), ((1, 1), c(0.5)), ((-1, -1), c(0.5))])
            .unwrap();
        let rep = factor_2d(&f, 1, 1).unwrap();
        assert!(rep.satisfied);
        let expect = LaurentPoly2::from_terms([((0, 0), c(1.0)), ((1, 1), c(0.5))]).unwrap();
        assert!(rep.p.distance(&expect) < 1e-8);
    }

    #[test]
    fn generic_positive_polynomial_fails_rank() {
        let f = LaurentPoly2::from_terms([
            ((0, 0), c(3.0)),
            ((1, 0), c(0.4)),
            ((-1, 0), c(0.4)),
            ((0, 1), c(0.3)),
            ((0, -1), c(0.3)),
            ((1, 1), c(0.25)),
            ((-1, -1), c(0.25)),
            ((1, -1), c(0.6)),
            ((-1, 1), c(0.6)),
        ])
        .unwrap();
        match factor_2d(&f, 1, 1) {
            Err(Spectral2Error::RankConditionFailed(r)) => {
                assert_eq!(r.target_rank, 1);
                assert_eq!(r.rank, 2);
            }
            other => panic!("expected rank failure, got {other:?}"),
        }
    }

    #[test]
    fn generator_is_stable_with_unit_constant() {
        let p = generate_stable(2, 1, 5).unwrap();
        assert!((p.coeff(0, 0) - c(1.0)).norm() < 1e-14);
        let d = p.degree().unwrap();
        assert!(d.precedes((2, 1)));
        assert!(min_modulus_on_net(&p) > 0.0);
        assert!(generate_stable(5, 4, 0).is_err());
    }

    #[test]
    fn stable_generator_round_trip() {
        for seed in 0..4 {
            let p = generate_stable(1, 2, seed).unwrap();
            let rep = factor_2d(&modsq(&p), 1, 2).unwrap();
            let phase = p.coeff(0, 0) / rep.p.coeff(0, 0);
            assert!(rep.p.scale(phase).distance(&p) < 1e-6);
        }
    }

    #[test]
    fn constant_completion() {
        let out = complete_mqsp_2d(
            &LaurentPoly2::constant(c(0.9)),
            &LaurentPoly2::zero(),
            0,
            0,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert!(out.is_peelable());
        assert!((out.unitary.p.coeff(0, 0).norm() - 1.0).abs() < 1e-12);
    }

    fn real_parts(u: &Su2LaurentUnitary) -> (LaurentPoly2, LaurentPoly2) {
        let h = |p: &LaurentPoly2| (p + &p.conj_reciprocal()).scale(c(0.5));
        (h(&u.p), h(&u.q))
    }

    #[test]
    fn completion_of_protocol_real_parts() {
        let spec = ProtocolSpec::from_bits(&[0, 1], vec![1.04, -0.28, 0.54]).unwrap();
        let (pr, qr) = real_parts(&build_unitary(&spec));
        let out = complete_mqsp_2d(&pr, &qr, 1, 1, DEFAULT_TOLERANCE).unwrap();
        assert!(verify_structure(&out.unitary, 2, 1).passed);
        assert!(out.factorization.residual < 1e-8);
    }

    #[test]
    fn real_parts_vanishing_on_torus_are_rejected() {
        // 1 - P~^2 - Q~^2 has an isolated zero near (-2.119, 2.417)
        let spec = ProtocolSpec::from_bits(&[0, 1], vec![0.3, 0.5, -0.2]).unwrap();
        let (pr, qr) = real_parts(&build_unitary(&spec));
        assert!(matches!(
            complete_mqsp_2d(&pr, &qr, 1, 1, DEFAULT_TOLERANCE),
            Err(Spectral2Error::NoConvergence { .. } | Spectral2Error::NotStrictlyPositive(_))
        ));
    }

    #[test]
    fn completion_rejects_wrong_parity() {
        let p = LaurentPoly2::cos_of(Var::A);
        assert!(matches!(
            complete_mqsp_2d(&p, &LaurentPoly2::zero(), 2, 0, DEFAULT_TOLERANCE),
            Err(Spectral2Error::ParityMismatch(_))
        ));
    }
}
