//! Physical parameter bundle shared across the solver and the certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{EmbeddingConstants, Grid};

/// Viscosity, Voigt length, delay horizon, first Stokes eigenvalue, and the
/// inequality constants the certificate formulas consume.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Kinematic viscosity `nu > 0`.
    pub nu: f64,
    /// Voigt regularization length `alpha > 0`.
    pub alpha: f64,
    /// Delay horizon `h > 0`: histories live on `[-h, 0]`.
    pub h: f64,
    /// Smallest nonzero Stokes eigenvalue of the box.
    pub lambda1: f64,
    /// Embedding/inequality constants (validated separately).
    pub constants: EmbeddingConstants,
}

impl PhysicalParams {
    /// Parameters on a given grid with the box-default constants.
    pub fn on_grid(nu: f64, alpha: f64, h: f64, grid: Grid) -> Result<PhysicalParams> {
        let p = PhysicalParams {
            nu,
            alpha,
            h,
            lambda1: grid.lambda1(),
            constants: EmbeddingConstants::torus_defaults(alpha, grid.lambda1()),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("alpha", self.alpha),
            ("h", self.h),
            ("lambda1", self.lambda1),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Voigt mass multiplier `1 + alpha^2 |kappa|^2` for one mode.
    pub fn voigt_mass(&self, kappa_sq: f64) -> f64 {
        1.0 + self.alpha * self.alpha * kappa_sq
    }
}
