//! State-independent uncertainty bounds for a pair of projective observables.
//!
//! The overlap characteristic `c = max ‖Π(x)Λ(z)‖∞` and `η = arccos c` feed
//! two kinds of bounds:
//!
//! * the minimised bounds `B̄_{α,β}` built on the parametric sum
//!   `D_α(θ) = ⌊1/cos²θ⌋ cos^{2α}θ + (1 - ⌊1/cos²θ⌋ cos²θ)^α`, minimised over
//!   `θ ∈ [0, η]`;
//! * Maassen–Uffink type bounds `ln_μ(c⁻²)` and `-2 ln c` for conjugate
//!   orders `1/α + 1/β = 2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::entropy::{alpha_log_unchecked, functionals, near_one, EntropyFunctional, Family};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMatrix};
use crate::optim::golden_section;
use crate::quantum::ProjectiveObservable;

/// Tolerance on `1/α + 1/β = 2`.
pub const CONJUGATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCharacteristic {
    pub c: f64,
    pub eta: f64,
    /// `‖Π(x)Λ(z)‖∞` indexed `[x][z]`.
    pub pair_norms: Vec<Vec<f64>>,
}

// `‖PQ‖∞ = ‖QP‖∞`; taking the larger computed value makes the result
// independent of the argument order down to the last bit.
fn pair_norm(p: &CMatrix, q: &CMatrix) -> Result<f64> {
    Ok(spectral_norm(&(p * q))?.max(spectral_norm(&(q * p))?))
}

pub fn overlap(
    x: &ProjectiveObservable,
    z: &ProjectiveObservable,
) -> Result<OverlapCharacteristic> {
    if x.dim() != z.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observables of dimension {} and {}",
            x.dim(),
            z.dim()
        )));
    }
    let pair_norms = x
        .branches()
        .iter()
        .map(|bx| {
            z.branches()
                .iter()
                .map(|bz| pair_norm(&bx.projector, &bz.projector))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let c = pair_norms
        .iter()
        .flatten()
        .copied()
        .fold(0.0f64, f64::max)
        .min(1.0);
    Ok(OverlapCharacteristic {
        c,
        eta: c.acos(),
        pair_norms,
    })
}

/// Relative distance of `1/cos²θ` from an integer below which the crossing is
/// treated as exact.
const BREAKPOINT_SNAP: f64 = 1e-13;

// `(⌊1/cos²θ⌋, 1 - ⌊1/cos²θ⌋ cos²θ)`, with roundoff at an integer crossing
// resolved to the crossing itself so the remainder is exactly zero there.
fn split(cos2: f64) -> (f64, f64) {
    let inv = 1.0 / cos2;
    let nearest = inv.round();
    if (inv - nearest).abs() <= BREAKPOINT_SNAP * nearest {
        return (nearest, 0.0);
    }
    let k = inv.floor();
    (k, (1.0 - k * cos2).max(0.0))
}

/// `D_α(θ)` for `θ ∈ [0, π/2)`.
pub fn parametric_sum(theta: f64, alpha: f64) -> Result<f64> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "angle {theta} outside [0, pi/2)"
        )));
    }
    if !(alpha >= 0.0) || alpha.is_infinite() {
        return Err(Error::InvalidArgument(format!("order {alpha}")));
    }
    let cos2 = theta.cos().powi(2);
    if !(cos2 > 0.0) {
        return Err(Error::InvalidArgument(format!("cos^2 of {theta} vanishes")));
    }
    Ok(parametric_sum_cos2(cos2, alpha))
}

fn pow0(p: f64, alpha: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p.powf(alpha)
    }
}

fn parametric_sum_cos2(cos2: f64, alpha: f64) -> f64 {
    let (k, rest) = split(cos2);
    k * pow0(cos2, alpha) + pow0(rest, alpha)
}

// `f(D_α(θ))/(1-α)` written in terms of cos²θ, with the Shannon limit near
// α = 1.
fn bound_term(cos2: f64, alpha: f64, f: &dyn EntropyFunctional) -> f64 {
    if near_one(alpha) {
        let (k, rest) = split(cos2);
        let xlnx = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
        f.slope_at_one() * -(k * xlnx(cos2) + xlnx(rest))
    } else {
        f.apply(parametric_sum_cos2(cos2, alpha)) / (1.0 - alpha)
    }
}

/// The two-term objective minimised by [`bbar_bound`], at angle `theta`.
pub fn bbar_objective(
    theta: f64,
    eta: f64,
    alpha: f64,
    beta: f64,
    f: &dyn EntropyFunctional,
) -> f64 {
    let c1 = theta.cos().powi(2);
    let c2 = (eta - theta).cos().powi(2);
    bound_term(c1, alpha, f) + bound_term(c2, beta, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundId {
    #[serde(rename = "B_T")]
    BTsallis,
    #[serde(rename = "B_R")]
    BRenyi,
    #[serde(rename = "MU_T")]
    MuTsallis,
    #[serde(rename = "MU_R")]
    MuRenyi,
    #[serde(rename = "STND")]
    Stnd,
    #[serde(rename = "STND_R1")]
    StndRenyi,
}

impl BoundId {
    pub fn name(self) -> &'static str {
        match self {
            BoundId::BTsallis => "B_T",
            BoundId::BRenyi => "B_R",
            BoundId::MuTsallis => "MU_T",
            BoundId::MuRenyi => "MU_R",
            BoundId::Stnd => "STND",
            BoundId::StndRenyi => "STND_R1",
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub id: BoundId,
    pub value: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmin_theta: Option<f64>,
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "overlap characteristic {c} outside (0, 1]"
        )));
    }
    Ok(())
}

fn check_order(name: &str, a: f64) -> Result<()> {
    if !(a >= 0.0) || a.is_infinite() {
        return Err(Error::InvalidArgument(format!(
            "{name} = {a} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// Points in `[0, η]` where either term of the objective changes piece.
fn breakpoints(eta: f64, c: f64) -> Vec<f64> {
    let kmax = (1.0 / (c * c)).floor() as usize;
    let mut pts = vec![0.0, eta];
    for k in 2..=kmax.max(1) {
        let t = (1.0 / (k as f64).sqrt()).acos();
        if t > 0.0 && t < eta {
            pts.push(t);
            pts.push(eta - t);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

const SCAN_POINTS: usize = 48;

/// Minimum over `θ ∈ [0, η]` of the two-term objective for functional `f`.
///
/// The objective is smooth between the breakpoints of `⌊1/cos²θ⌋` and
/// `⌊1/cos²(η-θ)⌋`; each piece is scanned coarsely and refined by golden
/// section around the best scan point, and every breakpoint is evaluated.
pub fn bbar_minimum(
    c: f64,
    alpha: f64,
    beta: f64,
    f: &dyn EntropyFunctional,
) -> Result<(f64, f64)> {
    check_c(c)?;
    check_order("alpha", alpha)?;
    check_order("beta", beta)?;
    let eta = c.acos();
    let obj = |t: f64| bbar_objective(t, eta, alpha, beta, f);
    let pts = breakpoints(eta, c);
    let mut best = (0.0, obj(0.0));
    for &t in &pts {
        let v = obj(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let h = (b - a) / SCAN_POINTS as f64;
        let mut scan_best = (a, obj(a));
        for i in 1..=SCAN_POINTS {
            let t = if i == SCAN_POINTS {
                b
            } else {
                a + h * i as f64
            };
            let v = obj(t);
            if v < scan_best.1 {
                scan_best = (t, v);
            }
        }
        let lo = (scan_best.0 - h).max(a);
        let hi = (scan_best.0 + h).min(b);
        let refined = golden_section(obj, lo, hi, 1e-13, 200);
        for cand in [scan_best, refined] {
            if cand.1 < best.1 {
                best = cand;
            }
        }
    }
    Ok(best)
}

/// `B̄_{α,β}` for the Tsallis or Rényi family.
pub fn bbar_bound(c: f64, alpha: f64, beta: f64, family: Family) -> Result<BoundValue> {
    let id = match family {
        Family::Tsallis => BoundId::BTsallis,
        Family::Renyi => BoundId::BRenyi,
        Family::Shannon => {
            return Err(Error::InvalidArgument(
                "minimised bounds are defined for the Tsallis and Renyi families".into(),
            ))
        }
    };
    let f = functionals().for_family(family)?;
    let (theta, value) = bbar_minimum(c, alpha, beta, f)?;
    Ok(BoundValue {
        id,
        value,
        alpha,
        beta,
        mu: None,
        c,
        argmin_theta: Some(theta),
    })
}

pub fn is_conjugate(alpha: f64, beta: f64) -> bool {
    alpha > 0.0 && beta > 0.0 && (1.0 / alpha + 1.0 / beta - 2.0).abs() <= CONJUGATE_TOL
}

/// The order conjugate to `alpha` under `1/α + 1/β = 2`, when it exists.
pub fn conjugate_order(alpha: f64) -> Option<f64> {
    (alpha > 0.5 && alpha.is_finite()).then(|| alpha / (2.0 * alpha - 1.0))
}

/// Maassen–Uffink type bounds: `ln_μ(c⁻²)` (Tsallis, `μ = max{α, β}`) and
/// `-2 ln c` (Rényi).
pub fn mu_bounds(c: f64, alpha: f64, beta: f64) -> Result<(BoundValue, BoundValue)> {
    check_c(c)?;
    if !is_conjugate(alpha, beta) {
        return Err(Error::ConstraintViolation(format!(
            "1/alpha + 1/beta = {} but must equal 2",
            1.0 / alpha + 1.0 / beta
        )));
    }
    let mu = alpha.max(beta);
    let t = BoundValue {
        id: BoundId::MuTsallis,
        value: alpha_log_unchecked(1.0 / (c * c), mu),
        alpha,
        beta,
        mu: Some(mu),
        c,
        argmin_theta: None,
    };
    let r = BoundValue {
        id: BoundId::MuRenyi,
        value: -2.0 * c.ln(),
        mu: Some(mu),
        ..t.clone()
    };
    Ok((t, r))
}

/// `-2 ln c`, the Shannon-order bound.
pub fn stnd_bound(c: f64) -> Result<BoundValue> {
    check_c(c)?;
    Ok(BoundValue {
        id: BoundId::Stnd,
        value: -2.0 * c.ln(),
        alpha: 1.0,
        beta: 1.0,
        mu: Some(1.0),
        c,
        argmin_theta: None,
    })
}
