//! Dense complex linear algebra for small systems.
//!
//! Everything here is a thin layer over `nalgebra` dynamic matrices with the
//! tolerance policy used throughout the crate: structural checks (Hermiticity,
//! trace, positivity) at [`STRUCTURAL_TOL`], decomposition residuals at
//! [`DECOMPOSITION_TOL`].

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const STRUCTURAL_TOL: f64 = 1e-10;
pub const DECOMPOSITION_TOL: f64 = 1e-9;

const EIG_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 10_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// `|v><v|`
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn basis_vector(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = C64::new(1.0, 0.0);
    v
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff on mismatched shapes");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// A square matrix equal to its conjugate transpose within [`STRUCTURAL_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    pub fn new(m: CMatrix) -> Result<Self> {
        require_square(&m)?;
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        if !is_finite(&m) {
            return Err(Error::NonFinite);
        }
        let dev = hermiticity_deviation(&m);
        if dev > STRUCTURAL_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self(m))
    }

    /// Symmetrises `m` as `(m + m†)/2` without checking.
    pub fn symmetrized(m: &CMatrix) -> Self {
        Self((m + m.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// Positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Hermitian);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = Hermitian::new(m)?;
        let tr = h.matrix().trace();
        if (tr.re - 1.0).abs() > STRUCTURAL_TOL || tr.im.abs() > STRUCTURAL_TOL {
            return Err(Error::TraceNotOne(tr.re));
        }
        let min = eigh(&h)?.values[0];
        if min < -STRUCTURAL_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self(h))
    }

    /// `1/d`, the completely mixed state.
    pub fn maximally_mixed(d: usize) -> Self {
        Self(Hermitian(identity(d) / C64::new(d as f64, 0.0)))
    }

    /// `|v><v|` for a vector normalised on the way in.
    pub fn pure(v: &CVector) -> Result<Self> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let u = v / C64::new(n, 0.0);
        Ok(Self(Hermitian::symmetrized(&outer(&u))))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn as_hermitian(&self) -> &Hermitian {
        &self.0
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.values.len();
        let diag = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(self.values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &self.vectors * diag * self.vectors.adjoint()
    }
}

pub fn eigh(m: &Hermitian) -> Result<Eigh> {
    let d = m.dim();
    let sym = Hermitian::symmetrized(m.matrix()).into_matrix();
    let eig = SymmetricEigen::try_new(sym, EIG_EPS, MAX_SWEEPS)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(d, d, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok(Eigh { values, vectors })
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(m.clone(), false, false, EIG_EPS, MAX_SWEEPS)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `‖m‖∞`, the largest singular value.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Schatten 1-norm: sum of singular values.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Subsystem kept by [`partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of an operator on `H_A ⊗ H_B` (A is the slow index).
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), keep: Keep) -> Result<CMatrix> {
    let (da, db) = dims;
    let n = da * db;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over {da}x{db} needs a {n}x{n} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let out = match keep {
        Keep::A => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Keep::B => CMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    };
    Ok(out)
}

/// Square root of a PSD matrix, with roundoff-negative eigenvalues clipped.
pub fn sqrt_psd(m: &Hermitian) -> Result<CMatrix> {
    let e = eigh(m)?;
    let d = e.values.len();
    let min = e.values.first().copied().unwrap_or(0.0);
    if min < -STRUCTURAL_TOL {
        return Err(Error::NotPositive(min));
    }
    let roots = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(e.values[i].max(0.0).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(&e.vectors * roots * e.vectors.adjoint())
}

/// Uhlmann fidelity `‖√ρ √ω‖₁²`. When either state is pure this reduces to
/// `⟨ψ|σ|ψ⟩`, which avoids square roots of roundoff-level eigenvalues.
pub fn fidelity(rho: &DensityMatrix, omega: &DensityMatrix) -> Result<f64> {
    if rho.dim() != omega.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between {}-dim and {}-dim states",
            rho.dim(),
            omega.dim()
        )));
    }
    for (pure, other) in [(omega, rho), (rho, omega)] {
        if let Some(v) = pure_vector(pure)? {
            let f = (v.adjoint() * other.matrix() * &v)[(0, 0)].re;
            return Ok(f.clamp(0.0, 1.0));
        }
    }
    let a = sqrt_psd(rho.as_hermitian())?;
    let b = sqrt_psd(omega.as_hermitian())?;
    let t = trace_norm(&(a * b))?;
    Ok((t * t).clamp(0.0, 1.0))
}

// The state vector of a rank-one density matrix.
fn pure_vector(rho: &DensityMatrix) -> Result<Option<CVector>> {
    let e = eigh(rho.as_hermitian())?;
    let d = e.values.len();
    let top = e.values[d - 1];
    if (top - 1.0).abs() <= STRUCTURAL_TOL {
        Ok(Some(e.vectors.column(d - 1).into_owned()))
    } else {
        Ok(None)
    }
}

/// Maximally entangled vector `d^{-1/2} Σ_n |n>|n>` in the computational basis.
pub fn max_entangled(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for n in 0..d {
        v[n * d + n] = amp;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> CMatrix {
        let d = values.len();
        CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                c(values[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    #[test]
    fn eigh_identity_and_diagonal() {
        let e = eigh(&Hermitian::new(identity(2)).unwrap()).unwrap();
        assert_eq!(e.values.len(), 2);
        assert!((e.values[0] - 1.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);

        let e = eigh(&Hermitian::new(diag(&[3.0, -1.0])).unwrap()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12);
        assert!((e.values[1] - 3.0).abs() < 1e-12);
        // eigenvector for -1 is |1>, for 3 is |0>
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((e.vectors[(0, 1)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_rejects_non_square_and_non_hermitian() {
        assert!(matches!(
            Hermitian::new(zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        let mut m = identity(2);
        m[(0, 1)] = c(0.0, 1.0);
        assert!(matches!(Hermitian::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn norms_of_simple_matrices() {
        assert!((spectral_norm(&identity(3)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&zeros(3, 3)).unwrap(), 0.0);
        assert!((trace_norm(&identity(4)).unwrap() - 4.0).abs() < 1e-12);
        assert!((trace_norm(&diag(&[2.0, -3.0])).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_projector_product() {
        let a = basis_vector(2, 0);
        let s = 1.0 / 2f64.sqrt();
        let b = CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]);
        let overlap = a.dotc(&b).norm();
        let m = outer(&a) * outer(&b);
        assert!((spectral_norm(&m).unwrap() - overlap).abs() < 1e-9);
        assert!((overlap - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_max_entangled_is_mixed() {
        let phi = outer(&max_entangled(2));
        let r = partial_trace(&phi, (2, 2), Keep::A).unwrap();
        assert!(max_abs_diff(&r, &(identity(2) * c(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product() {
        let ra = diag(&[0.25, 0.75]);
        let mut rb = diag(&[0.5, 0.2, 0.3]);
        rb[(0, 2)] = c(0.1, 0.05);
        rb[(2, 0)] = c(0.1, -0.05);
        let p = kron(&ra, &rb);
        assert!(max_abs_diff(&partial_trace(&p, (2, 3), Keep::A).unwrap(), &ra) < 1e-10);
        assert!(max_abs_diff(&partial_trace(&p, (2, 3), Keep::B).unwrap(), &rb) < 1e-10);
        assert!(matches!(
            partial_trace(&p, (3, 3), Keep::A),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn fidelity_cases() {
        let mixed = DensityMatrix::maximally_mixed(2);
        let zero = DensityMatrix::pure(&basis_vector(2, 0)).unwrap();
        let one = DensityMatrix::pure(&basis_vector(2, 1)).unwrap();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-9);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-9);
        // √(1/2·1)·|0><0| has the single singular value 1/√2
        assert!((fidelity(&mixed, &zero).unwrap() - 0.5).abs() < 1e-9);
        assert!((fidelity(&mixed, &zero).unwrap() - fidelity(&zero, &mixed).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(matches!(
            DensityMatrix::new(identity(2)),
            Err(Error::TraceNotOne(_))
        ));
        assert!(matches!(
            DensityMatrix::new(diag(&[1.5, -0.5])),
            Err(Error::NotPositive(_))
        ));
        assert!(DensityMatrix::new(diag(&[0.3, 0.7])).is_ok());
    }
}
