//! Catalogue of mixing distributions `X` for `MPo(ρX)`.
//!
//! Each entry provides exact moments `μ_s = E(X^s)`, the Laplace-weighted
//! moments `E(X^ℓ e^{-ρX})` that make up the mixed Poisson pmf, and a
//! sampler driven by a caller-owned generator.
//!
//! Gamma is parameterized by shape `α` and **rate** `β` (density
//! `β^α x^{α-1} e^{-βx} / Γ(α)`), so `MPo(ρ·Gamma(α, β))` is negative
//! binomial with success probability `β / (β + ρ)`.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::special::{ln_gamma, log_sum_exp};

/// Tolerance for discrete atom probabilities summing to one.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// Parameters of a catalogue entry. This is also the config-file schema:
///
/// ```json
/// {"kind": "degenerate", "value": 1.0}
/// {"kind": "gamma", "shape": 2.0, "rate": 1.0}
/// {"kind": "discrete", "atoms": [[0.0, 0.3], [2.0, 0.7]]}
/// {"kind": "zero_inflated", "p": 0.3, "base": {"kind": "gamma", "shape": 2.0, "rate": 1.0}}
/// {"kind": "lognormal", "location": 0.0, "scale": 0.5}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixingKind {
    Degenerate {
        value: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// `(value, probability)` pairs.
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
    ZeroInflated {
        p: f64,
        base: Box<MixingDistribution>,
    },
    #[serde(rename = "lognormal")]
    LogNormal {
        location: f64,
        scale: f64,
    },
}

/// A validated mixing distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixingKind", into = "MixingKind")]
pub struct MixingDistribution {
    kind: MixingKind,
    moment_determinate: bool,
}

fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be finite, got {v}")))
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if finite(name, v)? > 0.0 {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<f64> {
    if finite(name, v)? >= 0.0 {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be nonnegative, got {v}")))
    }
}

impl MixingDistribution {
    pub fn degenerate(value: f64) -> Result<Self> {
        MixingKind::Degenerate { value }.try_into()
    }

    /// Gamma with shape `α` and rate `β`.
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        MixingKind::Gamma { shape, rate }.try_into()
    }

    /// Finite distribution on `(value, probability)` atoms. Probabilities are
    /// renormalized when their sum is within 1e-12 of one, otherwise rejected.
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        MixingKind::Discrete { atoms }.try_into()
    }

    /// Atom of mass `p` at zero mixed with `base`, which must put no mass at zero.
    pub fn zero_inflated(p: f64, base: MixingDistribution) -> Result<Self> {
        MixingKind::ZeroInflated {
            p,
            base: Box::new(base),
        }
        .try_into()
    }

    pub fn lognormal(location: f64, scale: f64) -> Result<Self> {
        MixingKind::LogNormal { location, scale }.try_into()
    }

    pub fn kind(&self) -> &MixingKind {
        &self.kind
    }

    /// Curated: whether the moment sequence determines the law. Lognormal is
    /// the catalogue's non-determinate member.
    pub fn is_moment_determinate(&self) -> bool {
        self.moment_determinate
    }

    /// `P{X = 0}`.
    pub fn prob_zero(&self) -> f64 {
        match &self.kind {
            MixingKind::Degenerate { value } => f64::from(u8::from(*value == 0.0)),
            MixingKind::Discrete { atoms } => atoms
                .iter()
                .filter(|(v, _)| *v == 0.0)
                .map(|(_, p)| p)
                .sum(),
            MixingKind::ZeroInflated { p, .. } => *p,
            MixingKind::Gamma { .. } | MixingKind::LogNormal { .. } => 0.0,
        }
    }

    /// `μ_s = E(X^s)`.
    pub fn moment(&self, s: u32) -> f64 {
        if s == 0 {
            return 1.0;
        }
        match &self.kind {
            MixingKind::Degenerate { value } => value.powi(s as i32),
            MixingKind::Gamma { shape, rate } => {
                (0..s).map(|i| (shape + f64::from(i)) / rate).product()
            }
            MixingKind::Discrete { atoms } => atoms.iter().map(|(v, p)| p * v.powi(s as i32)).sum(),
            MixingKind::ZeroInflated { p, base } => (1.0 - p) * base.moment(s),
            MixingKind::LogNormal { location, scale } => {
                let s = f64::from(s);
                (s * location + 0.5 * s * s * scale * scale).exp()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.moment(1);
        (self.moment(2) - m1 * m1).max(0.0)
    }

    /// Draw from the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            MixingKind::Degenerate { value } => *value,
            MixingKind::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng),
            MixingKind::Discrete { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                atoms.last().map(|(v, _)| *v).unwrap_or(0.0)
            }
            MixingKind::ZeroInflated { p, base } => {
                let u: f64 = rng.random();
                if u < *p {
                    0.0
                } else {
                    base.sample(rng)
                }
            }
            MixingKind::LogNormal { location, scale } => LogNormal::new(*location, *scale)
                .expect("validated lognormal parameters")
                .sample(rng),
        }
    }

    /// Log-density with normalizing constants precomputed (`-inf` off the
    /// support); `None` for entries without a density.
    pub fn ln_density_fn(&self) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        match self.kind {
            MixingKind::Gamma { shape, rate } => {
                let ln_norm = shape * rate.ln() - ln_gamma(shape);
                Some(Box::new(move |x: f64| {
                    if x > 0.0 {
                        ln_norm + (shape - 1.0) * x.ln() - rate * x
                    } else {
                        f64::NEG_INFINITY
                    }
                }))
            }
            MixingKind::LogNormal { location, scale } => {
                let ln_norm = -scale.ln() - 0.5 * (2.0 * PI).ln();
                Some(Box::new(move |x: f64| {
                    if x > 0.0 {
                        let z = (x.ln() - location) / scale;
                        ln_norm - x.ln() - 0.5 * z * z
                    } else {
                        f64::NEG_INFINITY
                    }
                }))
            }
            _ => None,
        }
    }

    /// `ln E(X^ℓ e^{-ρX})` by adaptive quadrature against the density.
    ///
    /// The integrand is evaluated in log space and rescaled by its peak when
    /// that peak would under- or overflow; the absolute tolerance then
    /// applies to the rescaled integral.
    pub fn ln_laplace_weighted_moment_by_quadrature(
        &self,
        l: u32,
        rho: f64,
        q: &Quadrature,
    ) -> Result<f64> {
        let Some(ln_f) = self.ln_density_fn() else {
            return Err(Error::Unsupported(format!(
                "quadrature needs a density; {self} has none"
            )));
        };
        let l = f64::from(l);
        let ln_integrand = |x: f64| {
            let lf = ln_f(x);
            if lf == f64::NEG_INFINITY {
                lf
            } else {
                l * x.ln() - rho * x + lf
            }
        };
        const GRID: usize = 4096;
        let peak = (1..GRID)
            .map(|i| {
                let u = i as f64 / GRID as f64;
                ln_integrand(u / (1.0 - u))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if peak == f64::NEG_INFINITY {
            return Ok(peak);
        }
        let shift = if peak < 0.0 {
            peak
        } else if peak > 300.0 {
            peak - 300.0
        } else {
            0.0
        };
        let integral = q.integrate_half_line("laplace-weighted moment", |x| {
            (ln_integrand(x) - shift).exp()
        })?;
        Ok(shift + integral.ln())
    }

    pub fn laplace_weighted_moment_by_quadrature(
        &self,
        l: u32,
        rho: f64,
        q: &Quadrature,
    ) -> Result<f64> {
        Ok(self
            .ln_laplace_weighted_moment_by_quadrature(l, rho, q)?
            .exp())
    }

    /// `E(X^ℓ e^{-ρX})`. Closed form except for lognormal, which uses
    /// adaptive quadrature at absolute tolerance 1e-10.
    pub fn laplace_weighted_moment(&self, l: u32, rho: f64) -> Result<f64> {
        let rho = nonnegative("rho", rho)?;
        Ok(match &self.kind {
            MixingKind::Degenerate { value } => value.powi(l as i32) * (-rho * value).exp(),
            MixingKind::Gamma { shape, rate } => {
                let scale = rate + rho;
                let rising: f64 = (0..l).map(|i| (shape + f64::from(i)) / scale).product();
                rising * (rate / scale).powf(*shape)
            }
            MixingKind::Discrete { atoms } => atoms
                .iter()
                .map(|(v, p)| p * v.powi(l as i32) * (-rho * v).exp())
                .sum(),
            MixingKind::ZeroInflated { p, base } => {
                let atom = if l == 0 { *p } else { 0.0 };
                atom + (1.0 - p) * base.laplace_weighted_moment(l, rho)?
            }
            MixingKind::LogNormal { .. } => {
                self.laplace_weighted_moment_by_quadrature(l, rho, &Quadrature::default())?
            }
        })
    }

    /// `ln E(X^ℓ e^{-ρX})`, evaluated without forming the (possibly
    /// under- or overflowing) moment itself where a closed form exists.
    pub fn ln_laplace_weighted_moment(&self, l: u32, rho: f64) -> Result<f64> {
        let rho = nonnegative("rho", rho)?;
        let lf = f64::from(l);
        let ln_power = |v: f64| if l == 0 { 0.0 } else { lf * v.ln() };
        Ok(match &self.kind {
            MixingKind::Degenerate { value } => ln_power(*value) - rho * value,
            MixingKind::Gamma { shape, rate } => {
                let scale = rate + rho;
                ln_gamma(shape + lf) - ln_gamma(*shape) + shape * (rate / scale).ln()
                    - lf * scale.ln()
            }
            MixingKind::Discrete { atoms } => {
                let terms: Vec<f64> = atoms
                    .iter()
                    .map(|(v, p)| p.ln() + ln_power(*v) - rho * v)
                    .collect();
                log_sum_exp(&terms)
            }
            MixingKind::ZeroInflated { p, base } => {
                let atom = if l == 0 { p.ln() } else { f64::NEG_INFINITY };
                log_sum_exp(&[
                    atom,
                    (1.0 - p).ln() + base.ln_laplace_weighted_moment(l, rho)?,
                ])
            }
            MixingKind::LogNormal { .. } => {
                self.ln_laplace_weighted_moment_by_quadrature(l, rho, &Quadrature::default())?
            }
        })
    }
}

impl TryFrom<MixingKind> for MixingDistribution {
    type Error = Error;

    fn try_from(kind: MixingKind) -> Result<Self> {
        let (kind, moment_determinate) = match kind {
            MixingKind::Degenerate { value } => {
                nonnegative("value", value)?;
                (MixingKind::Degenerate { value }, true)
            }
            MixingKind::Gamma { shape, rate } => {
                positive("shape", shape)?;
                positive("rate", rate)?;
                (MixingKind::Gamma { shape, rate }, true)
            }
            MixingKind::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::param("atoms", "need at least one atom"));
                }
                for &(v, p) in &atoms {
                    nonnegative("atom value", v)?;
                    positive("atom probability", p)?;
                }
                let total: f64 = atoms.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
                    return Err(Error::param(
                        "atoms",
                        format!("probabilities sum to {total}, not 1"),
                    ));
                }
                let atoms = atoms.into_iter().map(|(v, p)| (v, p / total)).collect();
                (MixingKind::Discrete { atoms }, true)
            }
            MixingKind::ZeroInflated { p, base } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::param("p", format!("must lie in (0, 1), got {p}")));
                }
                if base.prob_zero() > 0.0 {
                    return Err(Error::param("base", "must put no mass at zero"));
                }
                let determinate = base.is_moment_determinate();
                (MixingKind::ZeroInflated { p, base }, determinate)
            }
            MixingKind::LogNormal { location, scale } => {
                finite("location", location)?;
                positive("scale", scale)?;
                (MixingKind::LogNormal { location, scale }, false)
            }
        };
        Ok(MixingDistribution {
            kind,
            moment_determinate,
        })
    }
}

impl From<MixingDistribution> for MixingKind {
    fn from(d: MixingDistribution) -> Self {
        d.kind
    }
}

impl fmt::Display for MixingDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MixingKind::Degenerate { value } => write!(f, "degenerate({value})"),
            MixingKind::Gamma { shape, rate } => write!(f, "gamma({shape}, {rate})"),
            MixingKind::Discrete { atoms } => {
                f.write_str("discrete[")?;
                for (i, (v, p)) in atoms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "({v}, {p})")?;
                }
                f.write_str("]")
            }
            MixingKind::ZeroInflated { p, base } => write!(f, "zero_inflated({p}, {base})"),
            MixingKind::LogNormal { location, scale } => {
                write!(f, "lognormal({location}, {scale})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn catalogue() -> Vec<MixingDistribution> {
        vec![
            MixingDistribution::degenerate(1.0).unwrap(),
            MixingDistribution::degenerate(2.5).unwrap(),
            MixingDistribution::gamma(2.0, 1.0).unwrap(),
            MixingDistribution::gamma(0.7, 3.0).unwrap(),
            MixingDistribution::discrete(vec![(0.0, 0.3), (2.0, 0.7)]).unwrap(),
            MixingDistribution::discrete(vec![(1.0, 0.5), (4.0, 0.5)]).unwrap(),
            MixingDistribution::zero_inflated(0.3, MixingDistribution::gamma(2.0, 1.0).unwrap())
                .unwrap(),
            MixingDistribution::lognormal(0.0, 0.5).unwrap(),
        ]
    }

    #[test]
    fn moment_examples() {
        assert_eq!(MixingDistribution::degenerate(1.0).unwrap().moment(7), 1.0);
        assert_eq!(MixingDistribution::gamma(2.0, 1.0).unwrap().moment(2), 6.0);
        let d = MixingDistribution::discrete(vec![(0.0, 0.3), (2.0, 0.7)]).unwrap();
        assert!((d.moment(3) - 5.6).abs() < 1e-12);
        let z =
            MixingDistribution::zero_inflated(0.3, MixingDistribution::gamma(2.0, 1.0).unwrap())
                .unwrap();
        assert_eq!(z.moment(0), 1.0);
        assert!((z.moment(2) - 0.7 * 6.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_weighted_examples() {
        let d = MixingDistribution::degenerate(1.0).unwrap();
        assert_eq!(d.laplace_weighted_moment(0, 0.0).unwrap(), 1.0);
        let g = MixingDistribution::gamma(2.0, 1.0).unwrap();
        assert!((g.laplace_weighted_moment(0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let b = MixingDistribution::discrete(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(b.laplace_weighted_moment(1, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn laplace_at_zero_rate_is_the_moment() {
        for d in catalogue() {
            for s in 0..=8 {
                let lw = d.laplace_weighted_moment(s, 0.0).unwrap();
                let m = d.moment(s);
                assert!(
                    (lw - m).abs() <= 1e-10 * m.max(1.0),
                    "{d} s={s}: {lw} vs {m}"
                );
            }
        }
    }

    #[test]
    fn laplace_is_nonincreasing_in_rho() {
        let rhos = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];
        for d in catalogue() {
            for l in 0..=5 {
                let vals: Vec<f64> = rhos
                    .iter()
                    .map(|&r| d.laplace_weighted_moment(l, r).unwrap())
                    .collect();
                for w in vals.windows(2) {
                    assert!(w[1] <= w[0] * (1.0 + 1e-12), "{d} l={l}: {vals:?}");
                }
            }
        }
    }

    #[test]
    fn gamma_closed_form_matches_quadrature() {
        let q = Quadrature::default();
        for (shape, rate) in [(2.0, 1.0), (3.5, 2.0), (1.0, 0.5)] {
            let g = MixingDistribution::gamma(shape, rate).unwrap();
            for rho in [0.5, 1.0, 10.0] {
                for l in 0..=6 {
                    let closed = g.laplace_weighted_moment(l, rho).unwrap();
                    let numeric = g.laplace_weighted_moment_by_quadrature(l, rho, &q).unwrap();
                    assert!(
                        (closed - numeric).abs() < 1e-9,
                        "({shape},{rate}) rho={rho} l={l}"
                    );
                }
            }
        }
    }

    #[test]
    fn ln_laplace_matches_direct() {
        for d in catalogue() {
            for rho in [0.0, 1.0, 7.5] {
                for l in 0..=6 {
                    let direct = d.laplace_weighted_moment(l, rho).unwrap();
                    let via_ln = d.ln_laplace_weighted_moment(l, rho).unwrap().exp();
                    assert!(
                        (direct - via_ln).abs() <= 1e-12 * direct.max(1e-300),
                        "{d} rho={rho} l={l}"
                    );
                }
            }
        }
    }

    #[test]
    fn determinacy_metadata() {
        for d in catalogue() {
            let expect = !matches!(d.kind(), MixingKind::LogNormal { .. });
            assert_eq!(d.is_moment_determinate(), expect, "{d}");
        }
        let z = MixingDistribution::zero_inflated(
            0.2,
            MixingDistribution::lognormal(0.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(!z.is_moment_determinate());
    }

    #[test]
    fn constructor_validation() {
        assert!(MixingDistribution::degenerate(-1.0).is_err());
        assert!(MixingDistribution::gamma(0.0, 1.0).is_err());
        assert!(MixingDistribution::gamma(1.0, f64::NAN).is_err());
        assert!(MixingDistribution::discrete(vec![]).is_err());
        assert!(MixingDistribution::discrete(vec![(1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(MixingDistribution::discrete(vec![(-1.0, 1.0)]).is_err());
        let base = MixingDistribution::discrete(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!(MixingDistribution::zero_inflated(0.3, base).is_err());
        let base = MixingDistribution::degenerate(1.0).unwrap();
        assert!(MixingDistribution::zero_inflated(1.0, base.clone()).is_err());
        assert!(MixingDistribution::zero_inflated(0.3, base).is_ok());
        assert!(MixingDistribution::lognormal(0.0, 0.0).is_err());
    }

    #[test]
    fn discrete_renormalizes_tiny_drift() {
        let d = MixingDistribution::discrete(vec![(1.0, 0.5 + 4e-13), (2.0, 0.5)]).unwrap();
        let MixingKind::Discrete { atoms } = d.kind() else {
            unreachable!()
        };
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_schema_round_trip_and_strictness() {
        let json =
            r#"{"kind":"zero_inflated","p":0.3,"base":{"kind":"gamma","shape":2.0,"rate":1.0}}"#;
        let d: MixingDistribution = serde_json::from_str(json).unwrap();
        assert_eq!(d.prob_zero(), 0.3);
        let back: MixingDistribution =
            serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);

        let ln: MixingDistribution =
            serde_json::from_str(r#"{"kind":"lognormal","location":0,"scale":1}"#).unwrap();
        assert!(!ln.is_moment_determinate());

        let err =
            serde_json::from_str::<MixingDistribution>(r#"{"kind":"gamma","shape":2,"rat":1}"#)
                .unwrap_err()
                .to_string();
        assert!(err.contains("rat"), "{err}");
        assert!(serde_json::from_str::<MixingDistribution>(
            r#"{"kind":"gamma","shape":-2,"rate":1}"#
        )
        .is_err());
    }

    #[test]
    fn deterministic_samplers() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let three = MixingDistribution::degenerate(3.0).unwrap();
        let zero = MixingDistribution::discrete(vec![(0.0, 1.0)]).unwrap();
        for _ in 0..100 {
            assert_eq!(three.sample(&mut rng), 3.0);
            assert_eq!(zero.sample(&mut rng), 0.0);
        }
    }

    #[test]
    fn gamma_sample_mean_in_clt_band() {
        let g = MixingDistribution::gamma(2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mean = (0..n).map(|_| g.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!(
            (mean - 2.0).abs() <= 3.0 * (2.0 / n as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn empirical_moments_within_four_standard_errors() {
        let n = 100_000;
        for (i, d) in catalogue().into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            for s in 1..=3 {
                let vals: Vec<f64> = xs.iter().map(|x| x.powi(s)).collect();
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let exact = d.moment(s as u32);
                assert!(
                    (mean - exact).abs() <= 4.0 * se + 1e-12,
                    "{d} s={s}: {mean} vs {exact} (se {se})"
                );
            }
        }
    }
}
