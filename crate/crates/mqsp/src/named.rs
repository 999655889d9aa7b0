//! Named protocol families with closed forms, and the two-channel discrimination demo.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laurent::{Cplx, LaurentPoly2, Var};
use crate::protocol::{eval_unitary, Oracle, ProtocolSpec, Su2LaurentUnitary};

/// Largest iterate count accepted for a named family.
pub const MAX_ITERATES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NamedError {
    #[error("family size must satisfy 1 <= n and 2n <= {MAX_ITERATES}, got {0}")]
    BadSize(usize),
    #[error("unknown family {0:?}; expected trivial:N or xyz:N")]
    UnknownFamily(String),
    #[error("instance violates promise: {0}")]
    PromiseViolated(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChebyshevKind {
    First,
    Second,
}

/// `T_k(x)` or `U_k(x)` by the three-term recurrence; `U_{-1} = 0`.
pub fn chebyshev(kind: ChebyshevKind, degree: i32, x: f64) -> f64 {
    if degree < 0 {
        return 0.0;
    }
    let (mut prev, mut cur) = match kind {
        ChebyshevKind::First => (1.0, x),
        ChebyshevKind::Second => (1.0, 2.0 * x),
    };
    if degree == 0 {
        return prev;
    }
    for _ in 1..degree {
        (prev, cur) = (cur, 2.0 * x * cur - prev);
    }
    cur
}

/// The same recurrence with a Laurent polynomial argument.
pub fn chebyshev_poly(kind: ChebyshevKind, degree: i32, x: &LaurentPoly2) -> LaurentPoly2 {
    if degree < 0 {
        return LaurentPoly2::zero();
    }
    let two_x = x.scale(Cplx::new(2.0, 0.0));
    let mut prev = LaurentPoly2::one();
    let mut cur = match kind {
        ChebyshevKind::First => x.clone(),
        ChebyshevKind::Second => two_x.clone(),
    };
    if degree == 0 {
        return prev;
    }
    for _ in 1..degree {
        let next = &two_x * &cur - &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// A protocol together with its independently derived closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedProtocol {
    pub spec: ProtocolSpec,
    pub closed_form: Su2LaurentUnitary,
}

fn check_size(n: usize) -> Result<(), NamedError> {
    if n == 0 || 2 * n > MAX_ITERATES {
        return Err(NamedError::BadSize(n));
    }
    Ok(())
}

fn alternating(n: usize, phases: Vec<f64>) -> ProtocolSpec {
    let s = (0..2 * n)
        .map(|k| if k % 2 == 0 { Oracle::B } else { Oracle::A })
        .collect();
    ProtocolSpec::new(s, phases).expect("valid family")
}

/// `s = [0,1]^n` with all phases zero.
///
/// Closed form from the angle-addition identities
/// `P = T_n(x_a)T_n(x_b) − sin θa sin θb U_{n−1}(x_a)U_{n−1}(x_b)` and
/// `Q = i[sin θa U_{n−1}(x_a)T_n(x_b) + T_n(x_a) sin θb U_{n−1}(x_b)]`.
pub fn trivial_protocol(n: usize) -> Result<NamedProtocol, NamedError> {
    check_size(n)?;
    let spec = alternating(n, vec![0.0; 2 * n + 1]);
    let d = n as i32;
    let mut t = Vec::new();
    let mut u = Vec::new();
    let mut is = Vec::new();
    for v in [Var::A, Var::B] {
        let x = LaurentPoly2::cos_of(v);
        t.push(chebyshev_poly(ChebyshevKind::First, d, &x));
        u.push(chebyshev_poly(ChebyshevKind::Second, d - 1, &x));
        is.push(LaurentPoly2::isin_of(v));
    }
    let p = &t[0] * &t[1] + &is[0] * &u[0] * &is[1] * &u[1];
    let q = &is[0] * &u[0] * &t[1] + &t[0] * &is[1] * &u[1];
    Ok(NamedProtocol {
        spec,
        closed_form: Su2LaurentUnitary::new(p, q),
    })
}

/// Phases `(−1)^k π/4`, alternating `Y`- and `X`-type rotations.
///
/// With `w = cos θa cos θb` the built unitary is `(B_y A)^n Z(π/4)`, so
/// `P = e^{iπ/4}[T_n(w) + (i/4)(a − 1/a)(b − 1/b)U_{n−1}(w)]` and
/// `Q = e^{−iπ/4}(1/4)[(a − 1/a)(b + 1/b) + i(a + 1/a)(b − 1/b)]U_{n−1}(w)`.
pub fn xyz_protocol(n: usize) -> Result<NamedProtocol, NamedError> {
    check_size(n)?;
    let phases = (0..=2 * n)
        .map(|k| if k % 2 == 0 { FRAC_PI_4 } else { -FRAC_PI_4 })
        .collect();
    let spec = alternating(n, phases);
    let (xa, xb) = (LaurentPoly2::cos_of(Var::A), LaurentPoly2::cos_of(Var::B));
    let (sa, sb) = (LaurentPoly2::isin_of(Var::A), LaurentPoly2::isin_of(Var::B));
    let w = &xa * &xb;
    let t = chebyshev_poly(ChebyshevKind::First, n as i32, &w);
    let u = chebyshev_poly(ChebyshevKind::Second, n as i32 - 1, &w);
    let i = Cplx::new(0.0, 1.0);
    let p = (t + (&sa * &sb * &u).scale(i)).scale(Cplx::from_polar(1.0, FRAC_PI_4));
    let q = ((&sa * &xb + (&xa * &sb).scale(i)) * &u).scale(Cplx::from_polar(1.0, -FRAC_PI_4));
    Ok(NamedProtocol {
        spec,
        closed_form: Su2LaurentUnitary::new(p, q),
    })
}

/// A named family and size, written `trivial:N` or `xyz:N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Trivial(usize),
    Xyz(usize),
}

impl Family {
    pub fn build(self) -> Result<NamedProtocol, NamedError> {
        match self {
            Family::Trivial(n) => trivial_protocol(n),
            Family::Xyz(n) => xyz_protocol(n),
        }
    }
}

impl FromStr for Family {
    type Err = NamedError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NamedError::UnknownFamily(s.to_string());
        let (name, n) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        match name.trim().to_ascii_lowercase().as_str() {
            "trivial" => Ok(Family::Trivial(n)),
            "xyz" => Ok(Family::Xyz(n)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Trivial(n) => write!(f, "trivial:{n}"),
            Family::Xyz(n) => write!(f, "xyz:{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    One,
    Two,
}

/// Promise: case one lies in `{(0, ±π/2), (±π/2, 0)}`, case two on `4cos²θa cos²θb = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiscriminationInstance {
    pub case: Case,
    pub theta_a: f64,
    pub theta_b: f64,
}

/// Tolerance on the promise conditions.
pub const PROMISE_TOL: f64 = 1e-12;

/// Iterate count of the discriminating protocol.
pub const DISCRIMINATION_N: usize = 3;

impl DiscriminationInstance {
    pub fn case_one_points() -> [(f64, f64); 4] {
        [
            (0.0, FRAC_PI_2),
            (0.0, -FRAC_PI_2),
            (FRAC_PI_2, 0.0),
            (-FRAC_PI_2, 0.0),
        ]
    }

    pub fn validate(&self) -> Result<(), NamedError> {
        let (ta, tb) = (self.theta_a, self.theta_b);
        match self.case {
            Case::One => {
                let hit = Self::case_one_points()
                    .iter()
                    .any(|&(a, b)| (a - ta).abs() <= PROMISE_TOL && (b - tb).abs() <= PROMISE_TOL);
                if !hit {
                    return Err(NamedError::PromiseViolated(format!(
                        "({ta}, {tb}) is not one of the four case-one points"
                    )));
                }
            }
            Case::Two => {
                let g = 4.0 * ta.cos().powi(2) * tb.cos().powi(2) - 1.0;
                if g.abs() > PROMISE_TOL {
                    return Err(NamedError::PromiseViolated(format!(
                        "4cos^2(a)cos^2(b) - 1 = {g:.3e} at ({ta}, {tb})"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Discrimination {
    pub decision: Case,
    pub queries: usize,
    pub transition_prob: f64,
}

/// Runs the `n = 3` XYZ protocol at the instance's angles and thresholds `|P|²` at ½.
pub fn discriminate(instance: &DiscriminationInstance) -> Result<Discrimination, NamedError> {
    instance.validate()?;
    let spec = xyz_protocol(DISCRIMINATION_N)?.spec;
    let u = eval_unitary(&spec, instance.theta_a, instance.theta_b);
    let transition_prob = u[(0, 0)].norm_sqr();
    Ok(Discrimination {
        decision: if transition_prob > 0.5 {
            Case::Two
        } else {
            Case::One
        },
        queries: spec.len(),
        transition_prob,
    })
}

/// Seeded points on the case-two curve, covering both sign branches.
pub fn sample_case_two(count: usize, seed: u64) -> Vec<DiscriminationInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            // |cos θa| ≥ ½ on [−π/3, π/3] and its shift by π
            let mut ta = rng.random_range(-PI / 3.0..=PI / 3.0);
            if rng.random_bool(0.5) {
                ta = crate::protocol::wrap_phase(ta + PI);
            }
            let target = 1.0 / (2.0 * ta.cos());
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let mut tb = (sign * target).clamp(-1.0, 1.0).acos();
            if rng.random_bool(0.5) {
                tb = -tb;
            }
            DiscriminationInstance {
                case: Case::Two,
                theta_a: ta,
                theta_b: tb,
            }
        })
        .collect()
}
