//! Degree-lowering steps and phase read-off for M-QSP unitaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laurent::{Cplx, LaurentPoly1, LaurentPoly2, Var};
use crate::protocol::{build_unitary, wrap_phase, Oracle, ProtocolSpec, Su2LaurentUnitary};

/// Default tolerance on the leading-slice proportionality mismatch.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Environment variable overriding [`DEFAULT_TOLERANCE`] in the CLI.
pub const TOLERANCE_ENV: &str = "MQSP_TOLERANCE";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeelError {
    #[error("nothing to peel: Q is zero")]
    NothingToPeel,
    #[error("degree in {0} is zero; cannot peel")]
    ZeroDegree(Var),
    #[error("leading slices in {var} not proportional (mismatch {mismatch:.3e})")]
    NotProportional { var: Var, mismatch: f64 },
    #[error("not an M-QSP unitary: {0}")]
    NotMqsp(String),
    #[error("rebuilt unitary differs from input by {0:.3e}")]
    RebuildMismatch(f64),
}

/// Proportionality of leading slices in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DirectionCheck {
    pub holds: bool,
    /// `ψ` with `P_d = e^{iψ} Q_d`, when the slices are comparable.
    pub phase: Option<f64>,
    pub mismatch: f64,
    pub degree: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConjectureReport {
    pub a: DirectionCheck,
    pub b: DirectionCheck,
}

impl ConjectureReport {
    pub fn get(&self, var: Var) -> &DirectionCheck {
        match var {
            Var::A => &self.a,
            Var::B => &self.b,
        }
    }

    pub fn holds(&self) -> bool {
        self.a.holds || self.b.holds
    }

    /// Smallest mismatch over both directions.
    pub fn best_mismatch(&self) -> f64 {
        self.a.mismatch.min(self.b.mismatch)
    }
}

fn sup(p: &LaurentPoly1) -> f64 {
    p.max_abs()
}

/// Least-squares `ψ` in `P_d ≈ e^{iψ} Q_d`.
fn slice_phase(ps: &LaurentPoly1, qs: &LaurentPoly1) -> f64 {
    qs.terms()
        .map(|(k, qk)| ps.coeff(k) * qk.conj())
        .sum::<Cplx>()
        .arg()
}

fn check_direction(u: &Su2LaurentUnitary, var: Var, tol: f64) -> DirectionCheck {
    if u.q.is_zero() {
        return DirectionCheck {
            holds: true,
            phase: Some(0.0),
            mismatch: 0.0,
            degree: 0,
        };
    }
    let d =
        u.p.max_exponent(var)
            .into_iter()
            .chain(u.q.max_exponent(var))
            .max()
            .unwrap_or(0);
    let ps = u.p.slice(var, d);
    let qs = u.q.slice(var, d);
    let fail = |mismatch| DirectionCheck {
        holds: false,
        phase: None,
        mismatch,
        degree: d,
    };
    if d < 1 || ps.is_zero() || qs.is_zero() {
        return fail(f64::INFINITY);
    }
    let psi = slice_phase(&ps, &qs);
    let rot = Cplx::from_polar(1.0, psi);
    let mismatch = sup(&(&ps - &qs.scale(rot))) / sup(&ps);
    DirectionCheck {
        holds: mismatch <= tol,
        phase: Some(psi),
        mismatch,
        degree: d,
    }
}

/// Tests whether the top slices of `P` and `Q` are proportional by a unimodular factor.
pub fn conjecture_check(u: &Su2LaurentUnitary, tol: f64) -> ConjectureReport {
    ConjectureReport {
        a: check_direction(u, Var::A, tol),
        b: check_direction(u, Var::B, tol),
    }
}

/// One peeled iterate: its phase and the remaining unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct PeelStep {
    pub phase: f64,
    pub reduced: Su2LaurentUnitary,
}

/// Removes the last iterate in `var` and its phase: `U' = U Z(−φ) A⁻¹`.
pub fn peel_once(u: &Su2LaurentUnitary, var: Var, tol: f64) -> Result<PeelStep, PeelError> {
    if u.q.is_zero() {
        return Err(PeelError::NothingToPeel);
    }
    let check = check_direction(u, var, tol);
    if check.degree < 1 {
        return Err(PeelError::ZeroDegree(var));
    }
    let psi = match (check.holds, check.phase) {
        (true, Some(psi)) => psi,
        _ => {
            return Err(PeelError::NotProportional {
                var,
                mismatch: check.mismatch,
            })
        }
    };
    let phi = peel_phase(psi);
    Ok(PeelStep {
        phase: phi,
        reduced: apply_peel(u, var, phi, check.degree),
    })
}

/// `U Z(−φ) A⁻¹` with powers of `var` at or beyond `d` dropped.
fn apply_peel(u: &Su2LaurentUnitary, var: Var, phi: f64, d: i32) -> Su2LaurentUnitary {
    let c = LaurentPoly2::cos_of(var);
    let s = LaurentPoly2::isin_of(var);
    let em = Cplx::from_polar(1.0, -phi);
    let ep = em.conj();
    let p_rot = u.p.scale(em);
    let q_rot = u.q.scale(ep);
    let mut p = &p_rot * &c - &q_rot * &s;
    let mut q = &q_rot * &c - &p_rot * &s;
    p.retain(|e, _| var.pick(e).abs() < d);
    q.retain(|e, _| var.pick(e).abs() < d);
    Su2LaurentUnitary::new(p, q)
}

/// What the next read-off stage must annihilate: the leading-slice mismatch in
/// one direction, or the constant term of `Q` once the degree is exhausted.
#[derive(Debug, Clone, Copy)]
enum NextStage {
    Slice { var: Var, degree: i32 },
    Constant,
}

impl NextStage {
    fn of(u: &Su2LaurentUnitary) -> Self {
        let best = [Var::A, Var::B]
            .into_iter()
            .map(|v| (v, check_direction(u, v, f64::INFINITY)))
            .filter(|(_, c)| c.degree >= 1 && c.mismatch.is_finite())
            .min_by(|x, y| x.1.mismatch.total_cmp(&y.1.mismatch));
        match best {
            Some((var, c)) => NextStage::Slice {
                var,
                degree: c.degree,
            },
            None => NextStage::Constant,
        }
    }

    fn residual(self, u: &Su2LaurentUnitary, support: &[i32]) -> Vec<Cplx> {
        match self {
            NextStage::Constant => vec![u.q.coeff(0, 0)],
            NextStage::Slice { var, degree } => {
                let ps = u.p.slice(var, degree);
                let qs = u.q.slice(var, degree);
                let rot = Cplx::from_polar(1.0, slice_phase(&ps, &qs));
                support
                    .iter()
                    .map(|&k| ps.coeff(k) - qs.coeff(k) * rot)
                    .collect()
            }
        }
    }

    fn support(self, u: &Su2LaurentUnitary) -> Vec<i32> {
        match self {
            NextStage::Constant => Vec::new(),
            NextStage::Slice { var, degree } => {
                let mut ks: Vec<i32> =
                    u.p.slice(var, degree)
                        .terms()
                        .chain(u.q.slice(var, degree).terms())
                        .map(|(k, _)| k)
                        .collect();
                ks.sort_unstable();
                ks.dedup();
                ks
            }
        }
    }
}

fn norm2(r: &[Cplx]) -> f64 {
    r.iter().map(|c| c.norm_sqr()).sum()
}

/// One Gauss-Newton step on `φ` against the next stage's residual.
///
/// A phase error `δ` in one peel shows up in the next leading slice scaled by the
/// inverse of that slice's size, so errors compound across peels without this.
/// The step is capped by the current slice mismatch, which bounds how far off `φ` can be.
fn refine_phase(
    u: &Su2LaurentUnitary,
    var: Var,
    phi: f64,
    d: i32,
    mismatch: f64,
) -> (f64, Su2LaurentUnitary) {
    const H: f64 = 1e-7;
    let base = apply_peel(u, var, phi, d);
    let stage = NextStage::of(&base);
    let support = stage.support(&base);
    let r0 = stage.residual(&base, &support);
    let r1 = stage.residual(&apply_peel(u, var, phi + H, d), &support);
    let jac: Vec<Cplx> = r1.iter().zip(&r0).map(|(a, b)| (a - b) / H).collect();
    let jj = norm2(&jac);
    if jj == 0.0 || !jj.is_finite() {
        return (phi, base);
    }
    let delta = -jac
        .iter()
        .zip(&r0)
        .map(|(j, r)| (j.conj() * r).re)
        .sum::<f64>()
        / jj;
    let cand = phi + delta;
    let refined = apply_peel(u, var, cand, d);
    if delta.abs() <= 10.0 * mismatch + 1e-14
        && norm2(&stage.residual(&refined, &support)) < norm2(&r0)
    {
        (cand, refined)
    } else {
        (phi, base)
    }
}

/// `φ = ψ/2` in `(−π/2, π/2]`.
fn peel_phase(psi: f64) -> f64 {
    let phi = wrap_phase(psi) / 2.0;
    if phi <= -std::f64::consts::FRAC_PI_2 {
        phi + std::f64::consts::PI
    } else {
        phi
    }
}

/// Preferred direction when both peel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    PreferA,
    PreferB,
}

/// One step of a read-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BranchRecord {
    pub step: usize,
    pub direction: Var,
    pub phase: f64,
    pub both_directions_possible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReadoffResult {
    pub spec: ProtocolSpec,
    pub residual: f64,
    pub branch_log: Vec<BranchRecord>,
}

impl ReadoffResult {
    pub fn steps(&self) -> usize {
        self.branch_log.len()
    }
}

/// Recovers a protocol from `(P, Q)` by repeated peeling.
pub fn readoff(p: &LaurentPoly2, q: &LaurentPoly2, tol: f64) -> Result<ReadoffResult, PeelError> {
    readoff_with(p, q, tol, TieBreak::default())
}

pub fn readoff_with(
    p: &LaurentPoly2,
    q: &LaurentPoly2,
    tol: f64,
    tie: TieBreak,
) -> Result<ReadoffResult, PeelError> {
    let input = Su2LaurentUnitary::new(p.clone(), q.clone());
    let mut u = input.clone();
    let mut log = Vec::new();
    let mut oracles = Vec::new();
    let mut phases = Vec::new();
    let phi0 = loop {
        let (da, db) = match (u.p.degree(), u.q.degree()) {
            (None, None) => return Err(PeelError::NotMqsp("P and Q vanish".into())),
            (pd, qd) => {
                let get = |v: Var| {
                    pd.map(|d| d.get(v))
                        .into_iter()
                        .chain(qd.map(|d| d.get(v)))
                        .max()
                        .unwrap_or(0)
                };
                (get(Var::A), get(Var::B))
            }
        };
        if (da, db) == (0, 0) {
            let scale = u.p.max_abs().max(u.q.max_abs());
            if u.q.max_abs() > tol * scale.max(1.0) {
                return Err(PeelError::NotMqsp("constant Q is nonzero".into()));
            }
            let p0 = u.p.coeff(0, 0);
            if (p0.norm() - 1.0).abs() > tol.sqrt() {
                return Err(PeelError::NotMqsp(format!(
                    "remaining constant has modulus {:.6}",
                    p0.norm()
                )));
            }
            break p0.arg();
        }
        if u.q.is_zero() {
            return Err(PeelError::NotMqsp(
                "Q vanished while P is not constant".into(),
            ));
        }
        let report = conjecture_check(&u, tol);
        let ok = |v: Var, dv: i32| report.get(v).holds && dv >= 1;
        let (a_ok, b_ok) = (ok(Var::A, da), ok(Var::B, db));
        let var = match (a_ok, b_ok, tie) {
            (true, true, TieBreak::PreferA) | (true, false, _) => Var::A,
            (true, true, TieBreak::PreferB) | (false, true, _) => Var::B,
            (false, false, _) => {
                return Err(PeelError::NotMqsp(format!(
                    "no direction peels (mismatch a {:.3e}, b {:.3e})",
                    report.a.mismatch, report.b.mismatch
                )))
            }
        };
        let step = peel_once(&u, var, tol)?;
        let check = report.get(var);
        let (phase, reduced) = refine_phase(&u, var, step.phase, check.degree, check.mismatch);
        log.push(BranchRecord {
            step: log.len(),
            direction: var,
            phase,
            both_directions_possible: a_ok && b_ok,
        });
        oracles.push(Oracle::from_var(var));
        phases.push(phase);
        u = reduced;
    };
    oracles.reverse();
    phases.push(phi0);
    phases.reverse();
    let spec = ProtocolSpec::new(oracles, phases).map_err(|e| PeelError::NotMqsp(e.to_string()))?;
    let residual = build_unitary(&spec).distance(&input);
    if residual > tol {
        return Err(PeelError::RebuildMismatch(residual));
    }
    Ok(ReadoffResult {
        spec,
        residual,
        branch_log: log,
    })
}

/// Draws a random protocol with `n` iterates and uniform phases.
pub fn random_spec<R: Rng>(rng: &mut R, n: usize) -> ProtocolSpec {
    let s = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                Oracle::A
            } else {
                Oracle::B
            }
        })
        .collect();
    let phases = (0..=n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    ProtocolSpec::new(s, phases).expect("valid by construction")
}

/// A scan trial whose leading slices were not proportional in either direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Counterexample {
    pub trial: usize,
    pub spec: ProtocolSpec,
    pub unitary: Su2LaurentUnitary,
    pub report: ConjectureReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanSummary {
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub pass_rate: Option<f64>,
    pub worst_mismatch: f64,
    pub counterexamples: Vec<Counterexample>,
}

/// Checks leading-slice proportionality on random built protocols.
pub fn conjecture_scan(n_max: usize, trials: usize, seed: u64, tol: f64) -> ScanSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<ProtocolSpec> = (0..trials)
        .map(|_| {
            let n = rng.random_range(0..=n_max);
            random_spec(&mut rng, n)
        })
        .collect();
    let results: Vec<(usize, ProtocolSpec, Su2LaurentUnitary, ConjectureReport)> = specs
        .into_par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let u = build_unitary(&spec);
            let r = conjecture_check(&u, tol);
            (i, spec, u, r)
        })
        .collect();
    let worst_mismatch = results
        .iter()
        .map(|r| r.3.best_mismatch())
        .fold(0.0, f64::max);
    let counterexamples: Vec<Counterexample> = results
        .into_iter()
        .filter(|r| !r.3.holds())
        .map(|(trial, spec, unitary, report)| Counterexample {
            trial,
            spec,
            unitary,
            report,
        })
        .collect();
    let failed = counterexamples.len();
    ScanSummary {
        n_max,
        trials,
        seed,
        passed: trials - failed,
        failed,
        pass_rate: (trials > 0).then(|| (trials - failed) as f64 / trials as f64),
        worst_mismatch,
        counterexamples,
    }
}
