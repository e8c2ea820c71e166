//! The mixed Poisson law `MPo(ρX)` and its multivariate extension.
//!
//! `P{Y = ℓ} = ρ^ℓ / ℓ! · E(X^ℓ e^{-ρX})`. Given `X = x`, `Y` is
//! Poisson(ρx); [`CoupledSample`] keeps that pair together so statistics
//! can be centered by the same `X` that generated `Y`.

use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{assoc_stirling2_row, binomial, stirling2_row};
use crate::error::{Error, Result};
use crate::mixing::{MixingDistribution, MixingKind, PROBABILITY_SUM_TOL};
use crate::sampling::sample_poisson;
use crate::special::ln_factorial;

/// One draw `(x, y)` with `y | x ~ Poisson(ρx)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledSample {
    pub x: f64,
    pub y: u64,
}

/// A row of a pmf table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub count: u64,
    pub pmf: f64,
    pub cumulative: f64,
}

/// `ln P{Poisson(mean) = k}`.
pub fn ln_poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * mean.ln() - mean - ln_factorial(k)
}

fn to_f64(v: &num_bigint::BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    mixing: MixingDistribution,
    rho: f64,
}

/// `MPo(ρX)` for a catalogue mixing distribution and scale `ρ ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct MixedPoissonModel {
    mixing: MixingDistribution,
    rho: f64,
}

impl TryFrom<ModelRecord> for MixedPoissonModel {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        MixedPoissonModel::new(r.mixing, r.rho)
    }
}

impl From<MixedPoissonModel> for ModelRecord {
    fn from(m: MixedPoissonModel) -> Self {
        ModelRecord {
            mixing: m.mixing,
            rho: m.rho,
        }
    }
}

impl MixedPoissonModel {
    pub fn new(mixing: MixingDistribution, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::param(
                "rho",
                format!("must be finite and >= 0, got {rho}"),
            ));
        }
        Ok(MixedPoissonModel { mixing, rho })
    }

    pub fn mixing(&self) -> &MixingDistribution {
        &self.mixing
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Same mixing at a different scale.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        MixedPoissonModel::new(self.mixing.clone(), rho)
    }

    /// `P{Y = ℓ}`, evaluated as `exp(ℓ ln ρ - ln ℓ! + ln E(X^ℓ e^{-ρX}))`.
    pub fn pmf(&self, l: u64) -> Result<f64> {
        if self.rho == 0.0 {
            return Ok(if l == 0 { 1.0 } else { 0.0 });
        }
        let l32 = u32::try_from(l).map_err(|_| Error::param("count", "exceeds u32 range"))?;
        let ln_e = self.mixing.ln_laplace_weighted_moment(l32, self.rho)?;
        Ok((l as f64 * self.rho.ln() - ln_factorial(l) + ln_e).exp())
    }

    /// Rows `ℓ = 0..=max_count` with running cumulative sums.
    pub fn pmf_table(&self, max_count: u64) -> Result<Vec<PmfRow>> {
        let mut cumulative = 0.0;
        (0..=max_count)
            .map(|count| {
                let pmf = self.pmf(count)?;
                cumulative += pmf;
                Ok(PmfRow {
                    count,
                    pmf,
                    cumulative,
                })
            })
            .collect()
    }

    /// `⌈ρμ₁ + 20·√E(Y²)⌉`: a count past which the remaining mass is negligible.
    pub fn normalization_horizon(&self) -> u64 {
        (self.rho * self.mixing.mean() + 20.0 * self.raw_moment(2).sqrt()).ceil() as u64
    }

    pub fn sample_coupled<R: Rng + ?Sized>(&self, rng: &mut R) -> CoupledSample {
        let x = self.mixing.sample(rng);
        let y = sample_poisson(self.rho * x, rng);
        CoupledSample { x, y }
    }

    /// `E(Y(Y-1)···(Y-s+1)) = ρ^s μ_s`.
    pub fn factorial_moment(&self, s: u32) -> f64 {
        self.rho.powi(s as i32) * self.mixing.moment(s)
    }

    /// `E(Y^s) = Σ_j {s j} ρ^j μ_j`.
    pub fn raw_moment(&self, s: u32) -> f64 {
        stirling2_row(s as usize)
            .iter()
            .enumerate()
            .map(|(j, c)| to_f64(c) * self.factorial_moment(j as u32))
            .sum()
    }

    /// `m_s = E((Y - ρX)^s) = Σ_k S₂(s, k) ρ^k μ_k`.
    pub fn centered_moment(&self, s: u32) -> f64 {
        assoc_stirling2_row(s as usize)
            .iter()
            .enumerate()
            .filter(|(_, c)| !num_traits::Zero::is_zero(*c))
            .map(|(k, c)| to_f64(c) * self.factorial_moment(k as u32))
            .sum()
    }

    /// `E(X^a Y^b)`, by conditioning on `X`: `E(X^a T_b(ρX))`.
    pub fn cross_moment(&self, a: u32, b: u32) -> f64 {
        stirling2_row(b as usize)
            .iter()
            .enumerate()
            .map(|(j, c)| to_f64(c) * self.rho.powi(j as i32) * self.mixing.moment(a + j as u32))
            .sum()
    }

    /// `E((Y - ρX)^s)` expanded binomially over cross moments. A second,
    /// independent route to [`centered_moment`](Self::centered_moment).
    pub fn centered_moment_by_expansion(&self, s: u32) -> f64 {
        (0..=s)
            .map(|i| {
                let c = to_f64(&binomial(s as usize, i as usize));
                c * (-self.rho).powi((s - i) as i32) * self.cross_moment(s - i, i)
            })
            .sum()
    }
}

/// Joint law of the mixing vector `(X₁, …, X_m)`.
///
/// Config schema:
///
/// ```json
/// {"kind": "independent", "components": [{"kind": "gamma", "shape": 2, "rate": 1}, {"kind": "degenerate", "value": 1}]}
/// {"kind": "comonotone", "mixing": {"kind": "gamma", "shape": 2, "rate": 1}}
/// {"kind": "table", "atoms": [[[1.0, 2.0], 0.5], [[0.0, 3.0], 0.5]]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JointMixing {
    Independent {
        components: Vec<MixingDistribution>,
    },
    /// One draw of `X` copied into every coordinate.
    Comonotone {
        mixing: MixingDistribution,
    },
    Table {
        atoms: Vec<(Vec<f64>, f64)>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiRecord {
    joint_mixing: JointMixing,
    rhos: Vec<f64>,
}

/// Multivariate `MPo` with scales `ρ_j > 0`; given the mixing vector the
/// coordinates are independent Poisson(ρ_j X_j).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultiRecord", into = "MultiRecord")]
pub struct MultiMixedPoissonModel {
    joint: JointMixing,
    rhos: Vec<f64>,
}

impl TryFrom<MultiRecord> for MultiMixedPoissonModel {
    type Error = Error;

    fn try_from(r: MultiRecord) -> Result<Self> {
        MultiMixedPoissonModel::new(r.joint_mixing, r.rhos)
    }
}

impl From<MultiMixedPoissonModel> for MultiRecord {
    fn from(m: MultiMixedPoissonModel) -> Self {
        MultiRecord {
            joint_mixing: m.joint,
            rhos: m.rhos,
        }
    }
}

impl MultiMixedPoissonModel {
    pub fn new(joint: JointMixing, rhos: Vec<f64>) -> Result<Self> {
        let m = rhos.len();
        if m < 2 {
            return Err(Error::param(
                "rhos",
                format!("need dimension >= 2, got {m}"),
            ));
        }
        if let Some(r) = rhos.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::param(
                "rhos",
                format!("scales must be finite and > 0, got {r}"),
            ));
        }
        let joint = match joint {
            JointMixing::Independent { components } => {
                if components.len() != m {
                    return Err(Error::param(
                        "components",
                        format!("{} components for {m} scales", components.len()),
                    ));
                }
                JointMixing::Independent { components }
            }
            JointMixing::Comonotone { mixing } => JointMixing::Comonotone { mixing },
            JointMixing::Table { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::param("atoms", "need at least one atom"));
                }
                for (v, p) in &atoms {
                    if v.len() != m {
                        return Err(Error::param(
                            "atoms",
                            format!("atom of length {} for {m} scales", v.len()),
                        ));
                    }
                    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                        return Err(Error::param("atoms", "values must be finite and >= 0"));
                    }
                    if !(p.is_finite() && *p > 0.0) {
                        return Err(Error::param("atoms", "probabilities must be > 0"));
                    }
                }
                let total: f64 = atoms.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
                    return Err(Error::param(
                        "atoms",
                        format!("probabilities sum to {total}, not 1"),
                    ));
                }
                JointMixing::Table {
                    atoms: atoms.into_iter().map(|(v, p)| (v, p / total)).collect(),
                }
            }
        };
        Ok(MultiMixedPoissonModel { joint, rhos })
    }

    pub fn dimension(&self) -> usize {
        self.rhos.len()
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rhos
    }

    pub fn joint_mixing(&self) -> &JointMixing {
        &self.joint
    }

    /// Law of `X_j` alone.
    pub fn marginal_mixing(&self, j: usize) -> Result<MixingDistribution> {
        match &self.joint {
            JointMixing::Independent { components } => Ok(components[j].clone()),
            JointMixing::Comonotone { mixing } => Ok(mixing.clone()),
            JointMixing::Table { atoms } => {
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (v, p) in atoms {
                    match merged.iter_mut().find(|(x, _)| *x == v[j]) {
                        Some(slot) => slot.1 += p,
                        None => merged.push((v[j], *p)),
                    }
                }
                MixingDistribution::discrete(merged)
            }
        }
    }

    /// Coordinate `j` as a univariate model.
    pub fn marginal(&self, j: usize) -> Result<MixedPoissonModel> {
        MixedPoissonModel::new(self.marginal_mixing(j)?, self.rhos[j])
    }

    pub fn sample_mixing_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.joint {
            JointMixing::Independent { components } => {
                components.iter().map(|c| c.sample(rng)).collect()
            }
            JointMixing::Comonotone { mixing } => vec![mixing.sample(rng); self.dimension()],
            JointMixing::Table { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v.clone();
                    }
                }
                atoms.last().map(|(v, _)| v.clone()).unwrap_or_default()
            }
        }
    }

    /// Draw the mixing vector jointly, then each `y_j ~ Poisson(ρ_j x_j)`
    /// independently given it.
    pub fn sample_coupled_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<CoupledSample> {
        let xs = self.sample_mixing_vector(rng);
        xs.into_iter()
            .zip(&self.rhos)
            .map(|(x, rho)| CoupledSample {
                x,
                y: sample_poisson(rho * x, rng),
            })
            .collect()
    }

    fn atoms_pmf(&self, atoms: &[(Vec<f64>, f64)], counts: &[u64]) -> f64 {
        atoms
            .iter()
            .map(|(v, p)| {
                let ln: f64 = v
                    .iter()
                    .zip(&self.rhos)
                    .zip(counts)
                    .map(|((x, rho), &k)| ln_poisson_pmf(rho * x, k))
                    .sum();
                p * ln.exp()
            })
            .sum()
    }

    /// Joint pmf. Supported for discrete tables, independent components, and
    /// comonotone mixing with a degenerate or discrete law.
    pub fn pmf(&self, counts: &[u64]) -> Result<f64> {
        if counts.len() != self.dimension() {
            return Err(Error::param(
                "counts",
                format!("expected {} counts", self.dimension()),
            ));
        }
        match &self.joint {
            JointMixing::Independent { .. } => (0..self.dimension())
                .map(|j| self.marginal(j)?.pmf(counts[j]))
                .product(),
            JointMixing::Table { atoms } => Ok(self.atoms_pmf(atoms, counts)),
            JointMixing::Comonotone { mixing } => match mixing.kind() {
                MixingKind::Degenerate { value } => {
                    let atoms = [(vec![*value; self.dimension()], 1.0)];
                    Ok(self.atoms_pmf(&atoms, counts))
                }
                MixingKind::Discrete { atoms } => {
                    let atoms: Vec<_> = atoms
                        .iter()
                        .map(|(v, p)| (vec![*v; self.dimension()], *p))
                        .collect();
                    Ok(self.atoms_pmf(&atoms, counts))
                }
                _ => Err(Error::Unsupported(format!(
                    "joint pmf for comonotone {mixing} needs continuous multivariate quadrature"
                ))),
            },
        }
    }
}
