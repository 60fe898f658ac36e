//! Ensemble states of the three-level atom.

use crate::linalg3::{eigenvalues3, Complex, Mat3C, Vec3C};
use crate::{Error, Result};

/// Default tolerance for accepting user-supplied density matrices.
pub const INPUT_TOL: f64 = 1e-8;

/// A 3×3 Hermitian, unit-trace, positive semidefinite matrix.
///
/// Construction through [`DensityMatrix3::new`] validates those properties to
/// [`INPUT_TOL`]; [`DensityMatrix3::from_raw`] skips validation for
/// intermediate results such as unnormalized subensemble states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix3(pub Mat3C);

impl DensityMatrix3 {
    pub fn new(m: Mat3C) -> Result<Self> {
        let rho = DensityMatrix3(m);
        rho.validate(INPUT_TOL, INPUT_TOL)?;
        Ok(rho)
    }

    pub const fn from_raw(m: Mat3C) -> Self {
        DensityMatrix3(m)
    }

    /// `|ψ⟩⟨ψ|` for the normalized direction of `psi`.
    pub fn pure(psi: &Vec3C) -> Result<Self> {
        let unit = psi.normalized().ok_or(Error::InvalidParameter {
            name: "psi",
            reason: "state vector must be nonzero and finite",
        })?;
        Ok(DensityMatrix3(unit.outer(&unit)))
    }

    /// `|k⟩⟨k|` for atomic level `k` in `1..=3`.
    pub fn level(k: usize) -> Self {
        let v = Vec3C::level(k);
        DensityMatrix3(v.outer(&v))
    }

    /// The ground state `|1⟩⟨1|`.
    pub fn ground() -> Self {
        Self::level(1)
    }

    /// Diagonal mixture with the given populations (not validated).
    pub fn diagonal(p: [f64; 3]) -> Self {
        DensityMatrix3(Mat3C::diag(p.map(|x| Complex::new(x, 0.0))))
    }

    pub fn matrix(&self) -> &Mat3C {
        &self.0
    }

    /// Element `ρ_ij` with 1-based level indices.
    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.0 .0[i - 1][j - 1]
    }

    /// Population `ρ_kk` of level `k` (1-based).
    pub fn population(&self, k: usize) -> f64 {
        self.get(k, k).re
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).max_abs()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * 0.5;
        eigenvalues3(&h)
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// Check trace and Hermiticity to `tol` and eigenvalues `≥ -neg_tol`.
    pub fn validate(&self, tol: f64, neg_tol: f64) -> Result<()> {
        if !self.0.is_finite() {
            return Err(Error::InvalidDensity {
                defect: "non-finite entry",
                magnitude: f64::NAN,
            });
        }
        let herm = self.hermiticity_defect();
        if herm > tol {
            return Err(Error::InvalidDensity {
                defect: "not Hermitian",
                magnitude: herm,
            });
        }
        let drift = (self.trace() - 1.0).abs();
        if drift > tol {
            return Err(Error::InvalidDensity {
                defect: "trace differs from one",
                magnitude: drift,
            });
        }
        let min = self.min_eigenvalue();
        if min < -neg_tol {
            return Err(Error::InvalidDensity {
                defect: "negative eigenvalue",
                magnitude: min,
            });
        }
        Ok(())
    }

    /// Divide by the trace. Returns `None` when the trace vanishes.
    pub fn normalized(&self) -> Option<Self> {
        let t = self.trace();
        if t > 0.0 && t.is_finite() {
            Some(DensityMatrix3(self.0 * (1.0 / t)))
        } else {
            None
        }
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &Mat3C) -> Self {
        DensityMatrix3(*u * self.0 * u.adjoint())
    }

    /// Column-stacked 9-vector, see [`crate::linalg3::vec_index`].
    pub fn vectorize(&self) -> [Complex; 9] {
        self.0.vectorize()
    }

    pub fn unvectorize(v: &[Complex; 9]) -> Self {
        DensityMatrix3(Mat3C::unvectorize(v))
    }

    /// Weighted sum `a ρ + b σ`.
    pub fn mix(a: f64, rho: &Self, b: f64, sigma: &Self) -> Self {
        DensityMatrix3(rho.0 * a + sigma.0 * b)
    }

    /// True if the state has no weight or coherence on level 3 beyond `tol`.
    pub fn supported_on_lower_pair(&self, tol: f64) -> bool {
        (0..3).all(|k| self.0 .0[2][k].norm() <= tol && self.0 .0[k][2].norm() <= tol)
    }
}

impl Default for DensityMatrix3 {
    fn default() -> Self {
        Self::ground()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg3::c;

    #[test]
    fn pure_states_are_valid() {
        let psi = Vec3C::new(c(1.0, 0.0), c(0.0, 1.0), c(0.5, -0.5));
        let rho = DensityMatrix3::pure(&psi).unwrap();
        rho.validate(1e-12, 1e-12).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut m = Mat3C::identity();
        assert!(DensityMatrix3::new(m).is_err());
        m = DensityMatrix3::diagonal([1.5, -0.5, 0.0]).0;
        assert!(matches!(
            DensityMatrix3::new(m),
            Err(Error::InvalidDensity {
                defect: "negative eigenvalue",
                ..
            })
        ));
        let mut m = DensityMatrix3::ground().0;
        m.0[0][1] = c(0.1, 0.0);
        assert!(DensityMatrix3::new(m).is_err());
    }

    #[test]
    fn zero_vector_has_no_pure_state() {
        assert!(DensityMatrix3::pure(&Vec3C::zeros()).is_err());
    }
}
