//! Decision rules on a joint distribution and the bounds tying conditional
//! entropies to the error probability.

use serde::{Deserialize, Serialize};

use crate::entropy::{
    alpha_log_unchecked, binary_tsallis, cond_renyi, cond_shannon, cond_tsallis_second, near_one,
    Family, JointDistribution,
};
use crate::error::{Error, Result};

/// Guess for `X` given each value of `Y`, as row indices of the joint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub guess: Vec<usize>,
}

impl DecisionRule {
    pub fn new(guess: Vec<usize>) -> Self {
        Self { guess }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            guess: (0..n).collect(),
        }
    }

    pub fn constant(ny: usize, x: usize) -> Self {
        Self { guess: vec![x; ny] }
    }

    /// Every rule from `ny` outcomes into `nx` guesses, in lexicographic order.
    pub fn enumerate(nx: usize, ny: usize) -> impl Iterator<Item = DecisionRule> {
        let total = (nx as u64).pow(ny as u32);
        (0..total).map(move |mut code| {
            let mut guess = vec![0; ny];
            for g in guess.iter_mut() {
                *g = (code % nx as u64) as usize;
                code /= nx as u64;
            }
            DecisionRule { guess }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub p_error: f64,
    pub p_success: f64,
    pub rule: DecisionRule,
}

/// Maximum a posteriori rule. Ties go to the smallest row index; columns with
/// `p(y) = 0` guess row 0.
pub fn standard_decision(j: &JointDistribution) -> ErrorReport {
    let guess: Vec<usize> = (0..j.ny())
        .map(|y| {
            let mut best = 0;
            for x in 1..j.nx() {
                if j.get(x, y) > j.get(best, y) {
                    best = x;
                }
            }
            best
        })
        .collect();
    report(j, DecisionRule { guess })
}

// Both probabilities are summed directly so that an error-free rule reports
// exactly zero error.
fn report(j: &JointDistribution, rule: DecisionRule) -> ErrorReport {
    let mut p_success = 0.0;
    let mut p_error = 0.0;
    for x in 0..j.nx() {
        for (y, &g) in rule.guess.iter().enumerate() {
            if g == x {
                p_success += j.get(x, y);
            } else {
                p_error += j.get(x, y);
            }
        }
    }
    ErrorReport {
        p_error,
        p_success,
        rule,
    }
}

pub fn error_of_rule(j: &JointDistribution, rule: &DecisionRule) -> Result<ErrorReport> {
    if rule.guess.len() != j.ny() {
        return Err(Error::LabelMismatch(format!(
            "rule covers {} outcomes, joint has {}",
            rule.guess.len(),
            j.ny()
        )));
    }
    if let Some(&bad) = rule.guess.iter().find(|&&x| x >= j.nx()) {
        return Err(Error::LabelMismatch(format!(
            "guess {bad} outside {} input values",
            j.nx()
        )));
    }
    Ok(report(j, rule.clone()))
}

/// Identifies one error-probability bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionBound {
    /// `-ln(1 - p̂_e)` (Shannon, Rényi).
    NegLogSuccess,
    /// `ln_α(1/(1 - p̂_e))` (Tsallis, `α ≤ 2`).
    AlphaLogSuccess,
    /// `2 ln_α(2) p̂_e`.
    LinearAlphaLogTwo,
    /// `d ln_α(d)/(d-1) p̂_e` (Tsallis, `α > 2`).
    LinearDimension,
    /// `2 ln 2 p̂_e` (binary Rényi, `α ≤ 1`).
    LinearLnTwo,
    /// `h₁(p_e) + p_e ln(d-1)`.
    Fano,
    /// `h_α(p_e) + p_e^α ln_α(d-1)` (Tsallis, `α < 1`).
    TsallisFanoBelowOne,
    /// `h_α(p_e) + p_e ln_α(d-1)` (Tsallis, `α > 1`).
    TsallisFanoAboveOne,
    /// `ln((1-p̂_e)^α + (d-1)^{1-α} p̂_e^α)/(1-α)` (Rényi, `α < 1`).
    RenyiSubunit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub id: DecisionBound,
    pub value: f64,
}

/// The conditional entropy that the bounds of `family` refer to.
pub fn bounded_entropy(j: &JointDistribution, alpha: f64, family: Family) -> Result<f64> {
    match family {
        Family::Shannon => Ok(cond_shannon(j)),
        Family::Tsallis => cond_tsallis_second(j, alpha),
        Family::Renyi => cond_renyi(j, alpha),
    }
}

fn entry(id: DecisionBound, value: f64) -> BoundEntry {
    BoundEntry { id, value }
}

/// Every lower bound on the conditional entropy that applies to
/// `(family, alpha, |Ω_X|)`, evaluated at the standard-decision error.
/// Out-of-range combinations simply contribute nothing.
pub fn lower_bounds(j: &JointDistribution, alpha: f64, family: Family) -> Vec<BoundEntry> {
    let pe = standard_decision(j).p_error.clamp(0.0, 1.0);
    lower_bounds_for_error(pe, j.nx(), alpha, family)
}

pub fn lower_bounds_for_error(pe: f64, d: usize, alpha: f64, family: Family) -> Vec<BoundEntry> {
    if !(alpha > 0.0) {
        return Vec::new();
    }
    let ps = 1.0 - pe;
    let mut out = Vec::new();
    match family {
        Family::Shannon => {
            out.push(entry(DecisionBound::NegLogSuccess, -ps.ln()));
            out.push(entry(
                DecisionBound::LinearAlphaLogTwo,
                2.0 * 2f64.ln() * pe,
            ));
        }
        Family::Renyi => {
            out.push(entry(DecisionBound::NegLogSuccess, -ps.ln()));
            if d == 2 {
                if alpha >= 1.0 {
                    let l2 = if alpha.is_infinite() {
                        1.0
                    } else {
                        alpha_log_unchecked(2.0, alpha)
                    };
                    out.push(entry(DecisionBound::LinearAlphaLogTwo, 2.0 * l2 * pe));
                }
                if alpha <= 1.0 {
                    out.push(entry(DecisionBound::LinearLnTwo, 2.0 * 2f64.ln() * pe));
                }
            }
        }
        Family::Tsallis => {
            if alpha.is_infinite() {
                return out;
            }
            let linear_two = 2.0 * alpha_log_unchecked(2.0, alpha) * pe;
            if alpha <= 2.0 {
                out.push(entry(
                    DecisionBound::AlphaLogSuccess,
                    alpha_log_unchecked(1.0 / ps, alpha),
                ));
                out.push(entry(DecisionBound::LinearAlphaLogTwo, linear_two));
            } else {
                if d >= 2 {
                    let df = d as f64;
                    out.push(entry(
                        DecisionBound::LinearDimension,
                        df * alpha_log_unchecked(df, alpha) / (df - 1.0) * pe,
                    ));
                }
                if d == 2 {
                    out.push(entry(DecisionBound::LinearAlphaLogTwo, linear_two));
                }
            }
        }
    }
    out
}

// `p ln_α(d-1)` with the convention that the term vanishes when `p = 0`
// (in particular whenever `d = 1`).
fn scaled_alpha_log(p: f64, dm1: f64, alpha: f64) -> f64 {
    if p == 0.0 || dm1 < 1.0 {
        0.0
    } else {
        p * alpha_log_unchecked(dm1, alpha)
    }
}

fn fano_value(pe: f64, d: usize) -> f64 {
    let h = binary_tsallis(pe.clamp(0.0, 1.0), 1.0).unwrap_or(0.0);
    h + scaled_alpha_log(pe, d as f64 - 1.0, 1.0)
}

/// Fano-type upper bounds for `rule`. The Rényi bound below order one is only
/// valid for the standard decision; other rules are rejected there.
pub fn fano_upper_bounds(
    j: &JointDistribution,
    alpha: f64,
    family: Family,
    rule: &DecisionRule,
) -> Result<Vec<BoundEntry>> {
    let report = error_of_rule(j, rule)?;
    let pe = report.p_error.clamp(0.0, 1.0);
    let d = j.nx();
    let dm1 = d as f64 - 1.0;
    let mut out = Vec::new();
    if !(alpha > 0.0) {
        return Ok(out);
    }
    match family {
        Family::Shannon => out.push(entry(DecisionBound::Fano, fano_value(pe, d))),
        Family::Tsallis => {
            if alpha.is_infinite() {
                return Ok(out);
            }
            if near_one(alpha) {
                out.push(entry(DecisionBound::Fano, fano_value(pe, d)));
            } else {
                let h = binary_tsallis(pe, alpha)?;
                if alpha < 1.0 {
                    let t = scaled_alpha_log(pe.powf(alpha), dm1, alpha);
                    out.push(entry(DecisionBound::TsallisFanoBelowOne, h + t));
                } else {
                    let t = scaled_alpha_log(pe, dm1, alpha);
                    out.push(entry(DecisionBound::TsallisFanoAboveOne, h + t));
                }
            }
        }
        Family::Renyi => {
            if alpha >= 1.0 || near_one(alpha) {
                out.push(entry(DecisionBound::Fano, fano_value(pe, d)));
            } else {
                let standard = standard_decision(j).p_error;
                if (standard - report.p_error).abs() > 1e-12 {
                    return Err(Error::RuleMismatch {
                        rule_error: report.p_error,
                        standard_error: standard,
                    });
                }
                let tail = if pe == 0.0 || d < 2 {
                    0.0
                } else {
                    dm1.powf(1.0 - alpha) * pe.powf(alpha)
                };
                let value = ((1.0 - pe).powf(alpha) + tail).ln() / (1.0 - alpha);
                out.push(entry(DecisionBound::RenyiSubunit, value));
            }
        }
    }
    Ok(out)
}
