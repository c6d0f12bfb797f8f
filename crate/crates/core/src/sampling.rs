//! Seeded random quantum objects for the certification harness.
//!
//! Every sampler takes an explicit seed (or RNG) so parallel sweeps can
//! partition seed space; nothing here touches a global generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::entropy::{JointDistribution, ProbVector};
use crate::error::{Error, Result};
use crate::linalg::{outer, CMatrix, CVector, DensityMatrix, Hermitian, C64};
use crate::quantum::{Channel, InstrumentBranch, ProjectiveObservable, QuantumInstrument};

pub type SampleRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a stream index into an independent seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finaliser over the combined words
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // fill column by column so the draw order does not depend on storage
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Modified Gram–Schmidt on the columns of `a`. Fails if a column is
/// numerically dependent on the previous ones.
pub fn orthonormalize_columns(a: &CMatrix) -> Result<CMatrix> {
    let mut q = a.clone();
    for j in 0..q.ncols() {
        for k in 0..j {
            let proj: C64 = q.column(k).dotc(&q.column(j));
            let qk = q.column(k).into_owned();
            let mut cj = q.column_mut(j);
            cj -= qk * proj;
        }
        let n = q.column(j).norm();
        if !(n > 1e-12) {
            return Err(Error::NumericalFailure(
                "linearly dependent columns in orthonormalisation".into(),
            ));
        }
        let mut cj = q.column_mut(j);
        cj /= C64::new(n, 0.0);
    }
    Ok(q)
}

/// Haar-random isometry with `cols` orthonormal columns in dimension `rows`.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<CMatrix> {
    if cols == 0 || rows < cols {
        return Err(Error::InvalidArgument(format!(
            "no isometry from dimension {cols} into {rows}"
        )));
    }
    // Gram–Schmidt of a Ginibre matrix is Haar distributed
    loop {
        if let Ok(q) = orthonormalize_columns(&ginibre(rows, cols, rng)) {
            return Ok(q);
        }
    }
}

pub fn sample_haar_unitary(d: usize, seed: u64) -> Result<CMatrix> {
    haar_isometry(d, d, &mut rng_from_seed(seed))
}

/// Random instrument obtained by splitting a Haar isometry from the input into
/// output ⊗ environment ⊗ outcome register.
pub fn random_instrument<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    n_outcomes: usize,
    kraus_per_outcome: usize,
    rng: &mut R,
) -> Result<QuantumInstrument> {
    if dim_in == 0 || dim_out == 0 || n_outcomes == 0 || kraus_per_outcome == 0 {
        return Err(Error::InvalidArgument(
            "instrument shape must be positive".into(),
        ));
    }
    let rows = dim_out * kraus_per_outcome * n_outcomes;
    if rows < dim_in {
        return Err(Error::InvalidArgument(format!(
            "{n_outcomes} outcomes x {kraus_per_outcome} Kraus operators into dimension {dim_out} cannot hold a {dim_in}-dimensional input"
        )));
    }
    let v = haar_isometry(rows, dim_in, rng)?;
    let branches = (0..n_outcomes)
        .map(|m| InstrumentBranch {
            label: m.to_string(),
            kraus: (0..kraus_per_outcome)
                .map(|e| {
                    let start = (m * kraus_per_outcome + e) * dim_out;
                    v.rows(start, dim_out).into_owned()
                })
                .collect(),
        })
        .collect();
    QuantumInstrument::new(dim_in, dim_out, branches)
}

pub fn sample_random_instrument(
    dims: (usize, usize),
    n_outcomes: usize,
    kraus_per_outcome: usize,
    seed: u64,
) -> Result<QuantumInstrument> {
    random_instrument(
        dims.0,
        dims.1,
        n_outcomes,
        kraus_per_outcome,
        &mut rng_from_seed(seed),
    )
}

/// Random channel with `n_kraus` Kraus operators (Stinespring isometry split).
pub fn random_channel<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Result<Channel> {
    let inst = random_instrument(dim_in, dim_out, 1, n_kraus, rng)?;
    Channel::new(dim_in, dim_out, inst.branches()[0].kraus.clone())
}

/// Observable with Haar-random eigenbasis; `profile` lists the degeneracies
/// (eigenvalue `k` gets label `k`).
pub fn random_observable<R: Rng + ?Sized>(
    d: usize,
    profile: &[usize],
    rng: &mut R,
) -> Result<ProjectiveObservable> {
    if profile.is_empty() || profile.contains(&0) || profile.iter().sum::<usize>() != d {
        return Err(Error::InvalidArgument(format!(
            "degeneracy profile {profile:?} does not partition dimension {d}"
        )));
    }
    let u = haar_isometry(d, d, rng)?;
    let mut col = 0;
    let branches = profile
        .iter()
        .enumerate()
        .map(|(k, &deg)| {
            let p = (col..col + deg).fold(CMatrix::zeros(d, d), |acc, c| {
                let v: CVector = u.column(c).into_owned();
                acc + outer(&v)
            });
            col += deg;
            (k as f64, Hermitian::symmetrized(&p).into_matrix())
        })
        .collect();
    ProjectiveObservable::new(d, branches)
}

pub fn sample_random_observable(
    d: usize,
    profile: &[usize],
    seed: u64,
) -> Result<ProjectiveObservable> {
    random_observable(d, profile, &mut rng_from_seed(seed))
}

/// Random probability vector of length `n`, uniform on the simplex; with
/// probability 1/4 some entries are zeroed to exercise sparse supports.
pub fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ProbVector {
    let mut p: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    if n > 1 && rng.random_bool(0.25) {
        let keep = rng.random_range(0..n);
        for (i, v) in p.iter_mut().enumerate() {
            if i != keep && rng.random_bool(0.5) {
                *v = 0.0;
            }
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    ProbVector::new(p).expect("normalised draw")
}

pub fn random_joint<R: Rng + ?Sized>(nx: usize, ny: usize, rng: &mut R) -> JointDistribution {
    let p = random_probabilities(nx * ny, rng);
    JointDistribution::new(nx, ny, p.probs().to_vec()).expect("normalised draw")
}

/// Mixed state `G G† / Tr(G G†)` from a square Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    let w = &g * g.adjoint();
    let t = w.trace().re;
    DensityMatrix::new(Hermitian::symmetrized(&(w / C64::new(t, 0.0))).into_matrix())
        .expect("Wishart matrix normalised to a state")
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Hermitian {
    Hermitian::symmetrized(&ginibre(d, d, rng))
}
