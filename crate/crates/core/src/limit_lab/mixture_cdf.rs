//! Distribution function of the normal variance mixture `N(0, X)`.

use crate::error::Result;
use crate::limit_lab::ks::DistributionFunction;
use crate::mixing::{MixingDistribution, MixingKind};
use crate::quadrature::{Quadrature, DEFAULT_ABS_TOL};
use crate::special::normal_cdf;

/// `F(z) = E[Φ(z/√X) 1{X>0}] + P{X=0} 1{z≥0}`.
///
/// Finite sums for degenerate and discrete mixings, adaptive quadrature
/// against the density for gamma and lognormal. The atom at zero is kept
/// apart from the continuous part so the jump at `z = 0` is exactly
/// `P{X = 0}`.
pub struct NormalVarianceMixtureCdf {
    mixing: MixingDistribution,
    quadrature: Quadrature,
    ln_density: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl std::fmt::Debug for NormalVarianceMixtureCdf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NormalVarianceMixtureCdf")
            .field("mixing", &self.mixing)
            .field("tolerance", &self.quadrature.abs_tol)
            .finish()
    }
}

impl NormalVarianceMixtureCdf {
    pub fn new(mixing: MixingDistribution) -> Self {
        Self::with_tolerance(mixing, DEFAULT_ABS_TOL)
    }

    pub fn with_tolerance(mixing: MixingDistribution, tolerance: f64) -> Self {
        let ln_density = match mixing.kind() {
            MixingKind::ZeroInflated { base, .. } => base.ln_density_fn(),
            _ => mixing.ln_density_fn(),
        };
        NormalVarianceMixtureCdf {
            mixing,
            quadrature: Quadrature::with_tolerance(tolerance),
            ln_density,
        }
    }

    pub fn mixing(&self) -> &MixingDistribution {
        &self.mixing
    }

    pub fn tolerance(&self) -> f64 {
        self.quadrature.abs_tol
    }

    /// Size of the atom of the limit law at `z`: `P{X=0}` at zero, else 0.
    pub fn jump(&self, z: f64) -> f64 {
        if z == 0.0 {
            self.mixing.prob_zero()
        } else {
            0.0
        }
    }

    /// `E[Φ(z/√X) 1{X>0}]`, the continuous part.
    pub fn continuous_part(&self, z: f64) -> Result<f64> {
        let positive_mass = 1.0 - self.mixing.prob_zero();
        if z == 0.0 {
            return Ok(0.5 * positive_mass);
        }
        if z.is_infinite() {
            return Ok(if z > 0.0 { positive_mass } else { 0.0 });
        }
        // The continuous part is symmetric about zero; integrate the lower
        // tail, where values are small, and reflect.
        let lower = self.lower_tail(-z.abs())?;
        Ok(if z < 0.0 {
            lower
        } else {
            positive_mass - lower
        })
    }

    fn lower_tail(&self, z: f64) -> Result<f64> {
        debug_assert!(z < 0.0);
        match self.mixing.kind() {
            MixingKind::ZeroInflated { p, base } => Ok((1.0 - p)
                * Self::lower_tail_of(base, self.ln_density.as_deref(), &self.quadrature, z)?),
            _ => Self::lower_tail_of(
                &self.mixing,
                self.ln_density.as_deref(),
                &self.quadrature,
                z,
            ),
        }
    }

    fn lower_tail_of(
        mixing: &MixingDistribution,
        ln_density: Option<&(dyn Fn(f64) -> f64 + Send + Sync)>,
        q: &Quadrature,
        z: f64,
    ) -> Result<f64> {
        match (mixing.kind(), ln_density) {
            (MixingKind::Degenerate { value }, _) => Ok(positive_phi(z, *value)),
            (MixingKind::Discrete { atoms }, _) => {
                Ok(atoms.iter().map(|&(v, p)| p * positive_phi(z, v)).sum())
            }
            (_, Some(ln_f)) => q.integrate_half_line("normal variance mixture cdf", |x| {
                let d = ln_f(x);
                if d == f64::NEG_INFINITY {
                    0.0
                } else {
                    d.exp() * normal_cdf(z / x.sqrt())
                }
            }),
            _ => unreachable!("zero-inflated bases are degenerate, discrete or have a density"),
        }
    }
}

/// `Φ(z/√v) 1{v>0}`.
fn positive_phi(z: f64, v: f64) -> f64 {
    if v > 0.0 {
        normal_cdf(z / v.sqrt())
    } else {
        0.0
    }
}

impl DistributionFunction for NormalVarianceMixtureCdf {
    fn cdf(&self, z: f64) -> Result<f64> {
        let atom = if z >= 0.0 {
            self.mixing.prob_zero()
        } else {
            0.0
        };
        Ok(self.continuous_part(z)? + atom)
    }

    fn cdf_left(&self, z: f64) -> Result<f64> {
        let atom = if z > 0.0 {
            self.mixing.prob_zero()
        } else {
            0.0
        };
        Ok(self.continuous_part(z)? + atom)
    }

    fn cdf_both(&self, z: f64) -> Result<(f64, f64)> {
        let c = self.continuous_part(z)?;
        let p0 = self.mixing.prob_zero();
        let left = if z > 0.0 { c + p0 } else { c };
        let right = if z >= 0.0 { c + p0 } else { c };
        Ok((left, right))
    }
}
