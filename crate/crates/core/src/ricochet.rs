//! Cross-check of the noise and disturbance experiments through a maximally
//! entangled reference copy.
//!
//! The instrument outcome `m` and the corrected reading `z′` together form
//! one measurement `U = (m, z′)` on the input, with POVM elements
//! `Π(u) = Φ^(m)†(Ψ_m†(Λ(z′)))` where `Ψ_m(σ) = Ψ(σ ⊗ |m⟩⟨m|)`. Its joint
//! statistics with `X` and `Z` are computed directly on the system and again
//! as local measurements on `|Φ⁺⟩`, where the reference half carries the
//! transposed projectors (computational basis).

use serde::{Deserialize, Serialize};

use crate::bounds::{bbar_bound, overlap};
use crate::entropy::{conditional_entropy, EntropyOrder, Family, JointDistribution};
use crate::error::{Error, Result};
use crate::linalg::{
    identity, kron, max_abs_diff, max_entangled, outer, partial_trace, CMatrix, Keep, C64,
};
use crate::noise::{check_order, disturbance_joint, noise_joint};
use crate::quantum::{Channel, ProjectiveObservable, QuantumInstrument};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub dim: usize,
    /// `max |Σ_u Π(u) - 1|`.
    pub povm_residual: f64,
    /// `p(u, x)` directly vs. through the entangled state.
    pub ux_discrepancy: f64,
    /// `p(u, z)` directly vs. through the entangled state.
    pub uz_discrepancy: f64,
    /// `p(x|u)` and `p(z|u)` vs. traces against the reference ensemble.
    pub conditional_discrepancy: f64,
    /// `Σ_{z′} p((m, z′), x)` vs. the noise joint `p(x, m)`.
    pub noise_marginal_discrepancy: f64,
    /// `Σ_m p((m, z′), z)` vs. the disturbance joint `p(z, z′)`.
    pub disturbance_marginal_discrepancy: f64,
    pub c: f64,
    /// Overlap characteristic of the transposed observables.
    pub c_transposed: f64,
    /// `p(x, u)`: rows `x`, column `m · |Z| + z′`.
    pub joint_xu: JointDistribution,
    /// `p(z, u)`, same column layout.
    pub joint_zu: JointDistribution,
}

impl ConsistencyReport {
    /// Largest probability discrepancy in the report.
    pub fn max_discrepancy(&self) -> f64 {
        [
            self.povm_residual,
            self.ux_discrepancy,
            self.uz_discrepancy,
            self.conditional_discrepancy,
            self.noise_marginal_discrepancy,
            self.disturbance_marginal_discrepancy,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64, overlap_tol: f64) -> bool {
        self.max_discrepancy() < tol && (self.c - self.c_transposed).abs() <= overlap_tol
    }
}

/// POVM of the combined measurement `U = (m, z′)`, ordered `m · |Z| + z′`.
pub fn combined_povm(
    z: &ProjectiveObservable,
    m: &QuantumInstrument,
    psi: &Channel,
) -> Result<Vec<CMatrix>> {
    if psi.dim_in() != m.flag_dim() || psi.dim_out() != z.dim() || m.dim_in() != z.dim() {
        return Err(Error::DimensionMismatch(format!(
            "instrument {}->{}x{}, correction {}->{}, observable {}",
            m.dim_in(),
            m.dim_out(),
            m.n_outcomes(),
            psi.dim_in(),
            psi.dim_out(),
            z.dim()
        )));
    }
    let (dout, n) = (m.dim_out(), m.n_outcomes());
    let pulled: Vec<CMatrix> = z
        .branches()
        .iter()
        .map(|b| psi.apply_adjoint(&b.projector))
        .collect::<Result<_>>()?;
    let mut povm = Vec::with_capacity(n * z.len());
    for k in 0..n {
        for big in &pulled {
            // flag block (k, k) of Ψ†(Λ(z′))
            let block = CMatrix::from_fn(dout, dout, |i, j| big[(i * n + k, j * n + k)]);
            povm.push(m.branch_adjoint(k, &block)?);
        }
    }
    Ok(povm)
}

fn entangled_expectation(phi: &CMatrix, a: &CMatrix, b: &CMatrix) -> f64 {
    (phi * kron(a, b)).trace().re
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Runs the entangled-state cross-check for `(X, Z, M, Ψ)`.
pub fn ricochet_oracle(
    x: &ProjectiveObservable,
    z: &ProjectiveObservable,
    m: &QuantumInstrument,
    psi: &Channel,
) -> Result<ConsistencyReport> {
    let d = x.dim();
    if z.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "observables of dimension {d} and {}",
            z.dim()
        )));
    }
    let povm = combined_povm(z, m, psi)?;
    let nu = povm.len();
    let total = povm.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e);
    let povm_residual = max_abs_diff(&total, &identity(d));

    let phi = outer(&max_entangled(d));
    let inv_d = 1.0 / d as f64;
    let one = identity(d);

    let mut conditional_discrepancy: f64 = 0.0;
    let mut tables = Vec::new();
    let mut discrepancies = Vec::new();
    for obs in [x, z] {
        let mut direct = Vec::with_capacity(obs.len() * nu);
        let mut via_state = Vec::with_capacity(obs.len() * nu);
        for b in obs.branches() {
            let bt = b.projector.transpose();
            for e in &povm {
                direct.push((e * &b.projector).trace().re * inv_d);
                via_state.push(entangled_expectation(&phi, e, &bt));
            }
        }
        discrepancies.push(max_diff(&direct, &via_state));
        // ensemble on the reference half
        for (u, e) in povm.iter().enumerate() {
            let marked = kron(e, &one) * &phi;
            let pu = marked.trace().re;
            if pu <= 1e-12 {
                continue;
            }
            let rho_c = partial_trace(&marked, (d, d), Keep::B)? / C64::new(pu, 0.0);
            for (k, b) in obs.branches().iter().enumerate() {
                let from_ensemble = (b.projector.transpose() * &rho_c).trace().re;
                let from_joint = direct[k * nu + u] / pu;
                conditional_discrepancy =
                    conditional_discrepancy.max((from_ensemble - from_joint).abs());
            }
        }
        tables.push(JointDistribution::new(obs.len(), nu, direct)?);
    }
    let joint_zu = tables.pop().expect("two tables");
    let joint_xu = tables.pop().expect("two tables");

    // marginals against the forward experiments
    let nz = z.len();
    let n = m.n_outcomes();
    let nj = noise_joint(x, m)?;
    let mut coarse_x = vec![0.0; x.len() * n];
    for xi in 0..x.len() {
        for u in 0..nu {
            coarse_x[xi * n + u / nz] += joint_xu.get(xi, u);
        }
    }
    let dj = disturbance_joint(z, m, psi)?;
    let mut coarse_z = vec![0.0; nz * nz];
    for zi in 0..nz {
        for u in 0..nu {
            coarse_z[zi * nz + u % nz] += joint_zu.get(zi, u);
        }
    }

    let c = overlap(x, z)?.c;
    let c_transposed = overlap(&x.transposed(), &z.transposed())?.c;
    Ok(ConsistencyReport {
        dim: d,
        povm_residual,
        ux_discrepancy: discrepancies[0],
        uz_discrepancy: discrepancies[1],
        conditional_discrepancy,
        noise_marginal_discrepancy: max_diff(&coarse_x, nj.data()),
        disturbance_marginal_discrepancy: max_diff(&coarse_z, dj.data()),
        c,
        c_transposed,
        joint_xu,
        joint_zu,
    })
}

/// The entropic chain behind the trade-off: conditioning on the finer `U`
/// can only lower both entropies, and their sum is bounded below.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProofChain {
    pub x_given_u: f64,
    pub z_given_u: f64,
    pub noise: f64,
    pub disturbance: f64,
    pub bound: f64,
}

impl ProofChain {
    pub fn holds(&self, slack: f64) -> bool {
        self.x_given_u <= self.noise + slack
            && self.z_given_u <= self.disturbance + slack
            && self.x_given_u + self.z_given_u >= self.bound - slack
    }
}

#[allow(clippy::too_many_arguments)]
pub fn proof_chain(
    report: &ConsistencyReport,
    x: &ProjectiveObservable,
    z: &ProjectiveObservable,
    m: &QuantumInstrument,
    psi: &Channel,
    alpha: f64,
    beta: f64,
    family: Family,
) -> Result<ProofChain> {
    let oa = EntropyOrder::new(family, alpha)?;
    let ob = EntropyOrder::new(family, beta)?;
    check_order(oa, x.dim())?;
    check_order(ob, z.dim())?;
    let bound_family = if family == Family::Shannon {
        Family::Renyi
    } else {
        family
    };
    Ok(ProofChain {
        x_given_u: conditional_entropy(&report.joint_xu, oa),
        z_given_u: conditional_entropy(&report.joint_zu, ob),
        noise: conditional_entropy(&noise_joint(x, m)?, oa),
        disturbance: conditional_entropy(&disturbance_joint(z, m, psi)?, ob),
        bound: bbar_bound(report.c, alpha, beta, bound_family)?.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::{discard_flag, reprepare_channel};
    use crate::sampling::{random_channel, random_instrument, random_observable, rng_from_seed};

    #[test]
    fn trivial_qubit_instrument() {
        let x = ProjectiveObservable::fourier(2);
        let z = ProjectiveObservable::computational(2);
        let m = QuantumInstrument::trivial(2);
        let r = ricochet_oracle(&x, &z, &m, &discard_flag(&m).unwrap()).unwrap();
        assert!(r.max_discrepancy() < 1e-12, "{r:?}");
        assert!((r.c - r.c_transposed).abs() < 1e-12);
    }

    #[test]
    fn projective_measurement_with_repreparation() {
        let x = ProjectiveObservable::fourier(2);
        let z = ProjectiveObservable::computational(2);
        let m = QuantumInstrument::projective(&x);
        let z_proj: Vec<CMatrix> = z.branches().iter().map(|b| b.projector.clone()).collect();
        let psi = reprepare_channel(&z_proj, 2, &[0, 1]).unwrap();
        let r = ricochet_oracle(&x, &z, &m, &psi).unwrap();
        assert!(r.max_discrepancy() < 1e-9, "{r:?}");
    }

    #[test]
    fn random_qutrit_instance_and_chain() {
        let mut rng = rng_from_seed(17);
        let x = random_observable(3, &[1, 1, 1], &mut rng).unwrap();
        let z = random_observable(3, &[2, 1], &mut rng).unwrap();
        let m = random_instrument(3, 3, 2, 2, &mut rng).unwrap();
        let psi = random_channel(6, 3, 3, &mut rng).unwrap();
        let r = ricochet_oracle(&x, &z, &m, &psi).unwrap();
        assert!(r.passed(1e-9, 1e-12), "{r:?}");
        for (a, b, fam) in [(0.5, 2.0, Family::Tsallis), (0.7, 1.0, Family::Renyi)] {
            let chain = proof_chain(&r, &x, &z, &m, &psi, a, b, fam).unwrap();
            assert!(chain.holds(1e-9), "{chain:?}");
        }
    }
}
