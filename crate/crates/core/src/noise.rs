//! The two correlation experiments run through an instrument, and the noise
//! and disturbance measures built from them.
//!
//! Both experiments feed eigenstates chosen with probability `d_x/d` (the
//! normalised projector `Π(x)/d_x`). Joint tables are oriented so that the
//! conditional entropy is always of the input eigenvalue given the recorded
//! data: rows are `x` (resp. `z`), columns the instrument outcome `m`
//! (resp. the final reading `z′`).

use serde::{Deserialize, Serialize};

use crate::correction::{
    search_correction, CorrectionProblem, CorrectionSearchResult, SearchConfig,
};
use crate::decision::{error_of_rule, DecisionRule};
use crate::entropy::{conditional_entropy, EntropyOrder, Family, JointDistribution};
use crate::error::{Error, Result};
use crate::linalg::{fidelity, CMatrix, DensityMatrix, Hermitian};
use crate::quantum::{Channel, ProjectiveObservable, QuantumInstrument};

/// Checks that `order` may be used for noise or disturbance in dimension `d`:
/// Rényi orders must lie in `(0, 1]`, or `(0, 2]` for a qubit.
pub fn check_order(order: EntropyOrder, d: usize) -> Result<()> {
    let a = order.alpha();
    if order.family() == Family::Renyi {
        let top = if d == 2 { 2.0 } else { 1.0 };
        if !(a > 0.0 && a <= top) {
            return Err(Error::OrderOutOfRange {
                family: "Renyi",
                alpha: a,
                dim: d,
            });
        }
    }
    Ok(())
}

fn check_dims(obs: &ProjectiveObservable, m: &QuantumInstrument) -> Result<()> {
    if obs.dim() != m.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "observable of dimension {} against instrument input {}",
            obs.dim(),
            m.dim_in()
        )));
    }
    Ok(())
}

/// `p(x, m) = Tr(Φ^(m)(Π(x))) / d`; rows `x`, columns `m`.
pub fn noise_joint(x: &ProjectiveObservable, m: &QuantumInstrument) -> Result<JointDistribution> {
    check_dims(x, m)?;
    let d = x.dim() as f64;
    let effects = m.effects();
    let mut data = Vec::with_capacity(x.len() * effects.len());
    for b in x.branches() {
        for e in &effects {
            data.push((e * &b.projector).trace().re / d);
        }
    }
    JointDistribution::new(x.len(), effects.len(), data)
}

/// Information-theoretic noise: the conditional entropy of `X` given the
/// instrument outcome.
pub fn noise(x: &ProjectiveObservable, m: &QuantumInstrument, order: EntropyOrder) -> Result<f64> {
    check_order(order, x.dim())?;
    Ok(conditional_entropy(&noise_joint(x, m)?, order))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseExperiment {
    pub x: ProjectiveObservable,
    pub instrument: QuantumInstrument,
    pub joint: JointDistribution,
}

impl NoiseExperiment {
    pub fn new(x: &ProjectiveObservable, m: &QuantumInstrument) -> Result<Self> {
        Ok(Self {
            joint: noise_joint(x, m)?,
            x: x.clone(),
            instrument: m.clone(),
        })
    }

    pub fn noise(&self, order: EntropyOrder) -> Result<f64> {
        check_order(order, self.x.dim())?;
        Ok(conditional_entropy(&self.joint, order))
    }
}

/// `p(z, z′) = Tr(Λ(z′) Ψ(Φ_M(Λ(z)))) / d`; rows `z`, columns `z′`.
///
/// `psi` acts on the output-plus-flag space of `m` (output index slow) and
/// returns to the input space.
pub fn disturbance_joint(
    z: &ProjectiveObservable,
    m: &QuantumInstrument,
    psi: &Channel,
) -> Result<JointDistribution> {
    check_dims(z, m)?;
    if psi.dim_in() != m.flag_dim() || psi.dim_out() != z.dim() {
        return Err(Error::DimensionMismatch(format!(
            "correction maps {} -> {}, expected {} -> {}",
            psi.dim_in(),
            psi.dim_out(),
            m.flag_dim(),
            z.dim()
        )));
    }
    let d = z.dim() as f64;
    let n = z.len();
    let mut data = Vec::with_capacity(n * n);
    for bz in z.branches() {
        let out = psi.apply(&m.flag_map_operator(&bz.projector)?)?;
        for bzp in z.branches() {
            data.push((&bzp.projector * &out).trace().re / d);
        }
    }
    JointDistribution::new(n, n, data)
}

/// Information-theoretic disturbance, reported as the best value found by the
/// correction search. The true minimum over all corrections can only be
/// smaller.
pub fn disturbance(
    z: &ProjectiveObservable,
    m: &QuantumInstrument,
    order: EntropyOrder,
    search: &SearchConfig,
) -> Result<CorrectionSearchResult> {
    check_order(order, z.dim())?;
    let problem = CorrectionProblem::new(z, m, order)?;
    search_correction(&problem, search)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisturbanceExperiment {
    pub z: ProjectiveObservable,
    pub instrument: QuantumInstrument,
    pub correction: Channel,
    pub joint: JointDistribution,
}

impl DisturbanceExperiment {
    pub fn new(z: &ProjectiveObservable, m: &QuantumInstrument, psi: &Channel) -> Result<Self> {
        Ok(Self {
            joint: disturbance_joint(z, m, psi)?,
            z: z.clone(),
            instrument: m.clone(),
            correction: psi.clone(),
        })
    }

    pub fn disturbance_value(&self, order: EntropyOrder) -> Result<f64> {
        check_order(order, self.z.dim())?;
        Ok(conditional_entropy(&self.joint, order))
    }

    /// `Ψ∘Φ_M(A)`.
    pub fn corrected(&self, a: &CMatrix) -> Result<CMatrix> {
        self.correction
            .apply(&self.instrument.flag_map_operator(a)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorFidelity {
    /// Probability that the final reading differs from the input eigenvalue.
    pub q_error: f64,
    /// `(1/d) Σ_z F(Ψ∘Φ_M(|z⟩⟨z|), |z⟩⟨z|)`.
    pub avg_fidelity: f64,
}

/// Error of reading `z′` as the estimate of `z`, and the average fidelity of
/// the corrected eigenstates. Needs a non-degenerate `Z`.
pub fn error_and_fidelity(dist: &DisturbanceExperiment) -> Result<ErrorFidelity> {
    if !dist.z.is_nondegenerate() {
        return Err(Error::DegenerateObservable);
    }
    let n = dist.z.len();
    let q_error = error_of_rule(&dist.joint, &DecisionRule::identity(n))?.p_error;
    let mut total = 0.0;
    for b in dist.z.branches() {
        let out = dist.corrected(&b.projector)?;
        let rho = DensityMatrix::new(Hermitian::symmetrized(&out).into_matrix())?;
        let target = DensityMatrix::new(b.projector.clone())?;
        total += fidelity(&rho, &target)?;
    }
    Ok(ErrorFidelity {
        q_error,
        avg_fidelity: total / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::discard_flag;
    use crate::entropy::alpha_log;
    use std::f64::consts::LN_2;

    fn qubit_pair() -> (ProjectiveObservable, ProjectiveObservable) {
        (
            ProjectiveObservable::fourier(2),
            ProjectiveObservable::computational(2),
        )
    }

    #[test]
    fn noise_joint_examples() {
        let (x, z) = qubit_pair();
        let j = noise_joint(&x, &QuantumInstrument::projective(&x)).unwrap();
        assert!((j.get(0, 0) - 0.5).abs() < 1e-12 && j.get(0, 1).abs() < 1e-12);
        let j = noise_joint(&x, &QuantumInstrument::projective(&z)).unwrap();
        assert!(j.data().iter().all(|p| (p - 0.25).abs() < 1e-12));
        let n = noise(
            &x,
            &QuantumInstrument::projective(&z),
            EntropyOrder::shannon(),
        )
        .unwrap();
        assert!((n - LN_2).abs() < 1e-12);
    }

    #[test]
    fn trivial_instrument_gives_maximal_noise() {
        let x = ProjectiveObservable::fourier(3);
        let m = QuantumInstrument::trivial(3);
        let r = noise(&x, &m, EntropyOrder::renyi(0.5).unwrap()).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-12);
        let t = noise(&x, &m, EntropyOrder::tsallis(2.5).unwrap()).unwrap();
        assert!((t - alpha_log(3.0, 2.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn renyi_order_range() {
        let x = ProjectiveObservable::fourier(3);
        let m = QuantumInstrument::trivial(3);
        assert!(matches!(
            noise(&x, &m, EntropyOrder::renyi(1.5).unwrap()),
            Err(Error::OrderOutOfRange { dim: 3, .. })
        ));
        let x2 = ProjectiveObservable::fourier(2);
        assert!(noise(
            &x2,
            &QuantumInstrument::trivial(2),
            EntropyOrder::renyi(1.5).unwrap()
        )
        .is_ok());
        assert!(noise(
            &x2,
            &QuantumInstrument::trivial(2),
            EntropyOrder::renyi(2.5).unwrap()
        )
        .is_err());
    }

    #[test]
    fn disturbance_joint_examples() {
        let (x, z) = qubit_pair();
        let m = QuantumInstrument::projective(&z);
        let j = disturbance_joint(&z, &m, &discard_flag(&m).unwrap()).unwrap();
        assert!((j.get(0, 0) - 0.5).abs() < 1e-12 && (j.get(1, 1) - 0.5).abs() < 1e-12);

        let m = QuantumInstrument::projective(&x);
        let j = disturbance_joint(&z, &m, &discard_flag(&m).unwrap()).unwrap();
        assert!(j.data().iter().all(|p| (p - 0.25).abs() < 1e-12));

        let id = QuantumInstrument::trivial(2);
        let j = disturbance_joint(&z, &id, &discard_flag(&id).unwrap()).unwrap();
        assert!(j.get(0, 1).abs() < 1e-12);
        assert!(disturbance_joint(&z, &id, &Channel::identity(3)).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let z = ProjectiveObservable::computational(2);
        let m = QuantumInstrument::trivial(2);
        let perfect = DisturbanceExperiment::new(&z, &m, &Channel::identity(2)).unwrap();
        let ef = error_and_fidelity(&perfect).unwrap();
        assert!(ef.q_error.abs() < 1e-12 && (ef.avg_fidelity - 1.0).abs() < 1e-9);

        let dep =
            DisturbanceExperiment::new(&z, &m, &Channel::depolarizing(2, 1.0).unwrap()).unwrap();
        let ef = error_and_fidelity(&dep).unwrap();
        assert!((ef.q_error - 0.5).abs() < 1e-12 && (ef.avg_fidelity - 0.5).abs() < 1e-9);

        let deg = ProjectiveObservable::new(2, vec![(1.0, crate::linalg::identity(2))]).unwrap();
        let e = DisturbanceExperiment::new(&deg, &m, &Channel::identity(2)).unwrap();
        assert!(matches!(
            error_and_fidelity(&e),
            Err(Error::DegenerateObservable)
        ));
    }
}
