//! Exact combinatorial counts and the centered Poisson moment polynomials.
//!
//! Everything here is computed with arbitrary-precision integers. The
//! centered moments `m_s(x) = E((P - x)^s)` of `P ~ Poisson(x)` are built
//! three independent ways (recurrence, associated Stirling closed form,
//! alternating Touchard sum) so they can be checked against each other, and
//! [`enumerate_partitions_min_block`] is a brute-force set-partition oracle
//! for the Stirling-type counts.

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact nonnegative count.
pub type BigCount = BigUint;

/// Largest set size accepted by the exhaustive partition oracle.
pub const ENUMERATION_LIMIT: usize = 14;

/// Polynomial in `x` with exact integer coefficients, lowest degree first.
///
/// The zero polynomial has no coefficients; otherwise the last coefficient
/// is nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntPolynomial {
    coefficients: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(mut coefficients: Vec<BigInt>) -> Self {
        while coefficients.last().is_some_and(Zero::is_zero) {
            coefficients.pop();
        }
        IntPolynomial { coefficients }
    }

    pub fn zero() -> Self {
        IntPolynomial::default()
    }

    pub fn one() -> Self {
        IntPolynomial::new(vec![BigInt::one()])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        IntPolynomial::new(vec![BigInt::zero(), BigInt::one()])
    }

    pub fn from_counts(counts: impl IntoIterator<Item = BigCount>) -> Self {
        IntPolynomial::new(counts.into_iter().map(BigInt::from).collect())
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    /// Coefficient of `x^k` (zero beyond the degree).
    pub fn coefficient(&self, k: usize) -> BigInt {
        self.coefficients.get(k).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn leading_coefficient(&self) -> Option<&BigInt> {
        self.coefficients.last()
    }

    /// Multiply by `x^n`.
    pub fn shift(&self, n: usize) -> Self {
        if self.is_zero() {
            return IntPolynomial::zero();
        }
        let mut c = vec![BigInt::zero(); n];
        c.extend(self.coefficients.iter().cloned());
        IntPolynomial::new(c)
    }

    pub fn scale(&self, factor: &BigInt) -> Self {
        IntPolynomial::new(self.coefficients.iter().map(|c| c * factor).collect())
    }

    /// Exact evaluation at an integer point.
    pub fn eval_int(&self, x: &BigInt) -> BigInt {
        self.coefficients
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    /// Floating-point evaluation by Horner's rule.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }
}

impl Add for &IntPolynomial {
    type Output = IntPolynomial;

    fn add(self, rhs: &IntPolynomial) -> IntPolynomial {
        let n = self.coefficients.len().max(rhs.coefficients.len());
        IntPolynomial::new(
            (0..n)
                .map(|k| self.coefficient(k) + rhs.coefficient(k))
                .collect(),
        )
    }
}

impl Mul for &IntPolynomial {
    type Output = IntPolynomial;

    fn mul(self, rhs: &IntPolynomial) -> IntPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return IntPolynomial::zero();
        }
        let mut c = vec![BigInt::zero(); self.coefficients.len() + rhs.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            for (j, b) in rhs.coefficients.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        IntPolynomial::new(c)
    }
}

/// Ascending powers, e.g. `x + 25x^2 + 15x^3`; the zero polynomial prints `0`.
impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coefficients.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let magnitude = c.abs();
            if first {
                if c.sign() == Sign::Minus {
                    f.write_str("-")?;
                }
            } else if c.sign() == Sign::Minus {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            first = false;
            let unit = magnitude.is_one();
            match k {
                0 => write!(f, "{magnitude}")?,
                _ if !unit => write!(f, "{magnitude}")?,
                _ => {}
            }
            match k {
                0 => {}
                1 => f.write_str("x")?,
                _ => write!(f, "x^{k}")?,
            }
        }
        Ok(())
    }
}

pub fn binomial(n: usize, k: usize) -> BigCount {
    if k > n {
        return BigCount::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigCount::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Row `s` of the Stirling numbers of the second kind, indices `j = 0..=s`.
pub fn stirling2_row(s: usize) -> Vec<BigCount> {
    let mut row = vec![BigCount::one()];
    for n in 1..=s {
        let mut next = vec![BigCount::zero(); n + 1];
        for (j, slot) in next.iter_mut().enumerate().skip(1) {
            let stay = row.get(j).map(|v| v * j).unwrap_or_default();
            *slot = stay + &row[j - 1];
        }
        row = next;
    }
    row
}

/// Number of partitions of an `s`-set into `j` nonempty blocks.
pub fn stirling2(s: usize, j: usize) -> BigCount {
    if j > s {
        return BigCount::zero();
    }
    stirling2_row(s).swap_remove(j)
}

/// Row `s` of the associated Stirling numbers `S₂(s, k)`, indices `k = 0..=s`.
///
/// Uses `S₂(n, k) = k·S₂(n-1, k) + (n-1)·S₂(n-2, k-1)`: element `n` either
/// joins one of the `k` blocks of a valid partition of the first `n-1`
/// elements, or forms a fresh pair with one of them.
pub fn assoc_stirling2_row(s: usize) -> Vec<BigCount> {
    let mut rows: Vec<Vec<BigCount>> = Vec::with_capacity(s + 1);
    for n in 0..=s {
        let mut row = vec![BigCount::zero(); n + 1];
        if n == 0 {
            row[0] = BigCount::one();
        }
        for (k, slot) in row.iter_mut().enumerate().skip(1) {
            let mut v = BigCount::zero();
            if let Some(prev) = n.checked_sub(1).and_then(|m| rows[m].get(k)) {
                v += prev * k;
            }
            if n >= 2 {
                if let Some(prev) = rows[n - 2].get(k - 1) {
                    v += prev * (n - 1);
                }
            }
            *slot = v;
        }
        rows.push(row);
    }
    rows.pop().unwrap_or_default()
}

/// Number of partitions of an `s`-set into `k` blocks, each of size at least two.
pub fn assoc_stirling2(s: usize, k: usize) -> BigCount {
    if k > s {
        return BigCount::zero();
    }
    assoc_stirling2_row(s).swap_remove(k)
}

/// `S₂(s, k)` from the chain-product representation
/// `Σ_{0 = j₁ ≪ … ≪ j_{k+1} = s} Π_ℓ C(j_{ℓ+1} - 1, j_ℓ)` with `a ≪ b ⇔ a < b - 1`.
///
/// Independent of [`assoc_stirling2`]; kept as a cross-check.
pub fn assoc_stirling2_chain_product(s: usize, k: usize) -> BigCount {
    // ways[j]: weighted count of chains of the current length ending at j.
    let mut ways = vec![BigCount::zero(); s + 1];
    ways[0] = BigCount::one();
    for _ in 0..k {
        let mut next = vec![BigCount::zero(); s + 1];
        for (j, slot) in next.iter_mut().enumerate() {
            for (i, w) in ways.iter().enumerate().take(j.saturating_sub(1)) {
                if !w.is_zero() {
                    *slot += w * binomial(j - 1, i);
                }
            }
        }
        ways = next;
    }
    ways.swap_remove(s)
}

fn visit_partitions(
    remaining: usize,
    sizes: &mut Vec<usize>,
    max_blocks: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    if remaining == 0 {
        visit(sizes);
        return;
    }
    // Next element joins an existing block or opens a new one (restricted growth).
    for b in 0..sizes.len() {
        sizes[b] += 1;
        visit_partitions(remaining - 1, sizes, max_blocks, visit);
        sizes[b] -= 1;
    }
    if sizes.len() < max_blocks {
        sizes.push(1);
        visit_partitions(remaining - 1, sizes, max_blocks, visit);
        sizes.pop();
    }
}

fn check_enumeration_size(s: usize) -> Result<()> {
    if s > ENUMERATION_LIMIT {
        return Err(Error::SizeLimit {
            s,
            max: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Brute-force count of partitions of `{1..s}` into exactly `k` blocks, every
/// block holding at least `min_size` elements. Rejects `s > 14`.
pub fn enumerate_partitions_min_block(s: usize, k: usize, min_size: usize) -> Result<BigCount> {
    check_enumeration_size(s)?;
    if min_size == 0 {
        return Err(Error::param("min_size", "must be positive"));
    }
    let mut count: u64 = 0;
    visit_partitions(s, &mut Vec::with_capacity(s), k, &mut |sizes| {
        if sizes.len() == k && sizes.iter().all(|&b| b >= min_size) {
            count += 1;
        }
    });
    Ok(BigCount::from(count))
}

/// Brute-force count of all set partitions of an `s`-set (the Bell number).
pub fn enumerate_all_partitions(s: usize) -> Result<BigCount> {
    check_enumeration_size(s)?;
    let mut count: u64 = 0;
    visit_partitions(s, &mut Vec::with_capacity(s), usize::MAX, &mut |_| {
        count += 1
    });
    Ok(BigCount::from(count))
}

/// `(2m-1)!! = 1·3·5···(2m-1)`, equal to 1 at `m = 0`.
pub fn double_factorial_odd(m: usize) -> BigCount {
    (1..=m).fold(BigCount::one(), |acc, i| acc * (2 * i - 1))
}

/// `x (x-1) ··· (x-s+1)`, equal to 1 at `s = 0`.
pub fn falling_factorial(x: f64, s: u32) -> f64 {
    (0..s).fold(1.0, |acc, i| acc * (x - f64::from(i)))
}

/// Touchard polynomial `T_s(x) = Σ_ℓ {s ℓ} x^ℓ` (raw moments of Poisson(x)).
pub fn touchard_poly(s: usize) -> IntPolynomial {
    IntPolynomial::from_counts(stirling2_row(s))
}

/// `m_s(x)` for `s = 0..=max_order` via
/// `m_s(x) = x Σ_{k=0}^{s-2} C(s-1, k) m_k(x)`, `m_0 = 1`, `m_1 = 0`.
pub fn centered_poisson_moments_by_recurrence(max_order: usize) -> Vec<IntPolynomial> {
    let mut m = vec![IntPolynomial::one()];
    if max_order >= 1 {
        m.push(IntPolynomial::zero());
    }
    for s in 2..=max_order {
        let mut sum = IntPolynomial::zero();
        for (k, mk) in m.iter().enumerate().take(s - 1) {
            sum = &sum + &mk.scale(&BigInt::from(binomial(s - 1, k)));
        }
        m.push(sum.shift(1));
    }
    m
}

pub fn centered_poisson_moment_recurrence(s: usize) -> IntPolynomial {
    centered_poisson_moments_by_recurrence(s).swap_remove(s)
}

/// `m_s(x) = Σ_k S₂(s, k) x^k`.
pub fn centered_poisson_moment_closed(s: usize) -> IntPolynomial {
    IntPolynomial::from_counts(assoc_stirling2_row(s))
}

/// `m_s(x) = Σ_k C(s, k) (-1)^{s-k} T_k(x) x^{s-k}`.
pub fn centered_poisson_moment_touchard(s: usize) -> IntPolynomial {
    let mut acc = IntPolynomial::zero();
    for k in 0..=s {
        let mut c = BigInt::from(binomial(s, k));
        if (s - k) % 2 == 1 {
            c = -c;
        }
        acc = &acc + &touchard_poly(k).shift(s - k).scale(&c);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(v: u64) -> BigCount {
        BigCount::from(v)
    }

    fn poly(c: &[i64]) -> IntPolynomial {
        IntPolynomial::new(c.iter().map(|&v| BigInt::from(v)).collect())
    }

    #[test]
    fn stirling2_examples() {
        assert_eq!(stirling2(0, 0), count(1));
        assert_eq!(stirling2(3, 2), count(3));
        assert_eq!(stirling2(4, 2), count(7));
        assert_eq!(stirling2(3, 5), count(0));
        assert_eq!(stirling2(5, 0), count(0));
    }

    #[test]
    fn stirling2_exceeds_u64_without_overflow() {
        // {64 2} = 2^63 - 1; {64 3} is well past u64.
        assert_eq!(stirling2(64, 2), count((1u64 << 63) - 1));
        assert!(stirling2(64, 3) > count(u64::MAX));
    }

    #[test]
    fn assoc_stirling2_examples() {
        assert_eq!(assoc_stirling2(2, 1), count(1));
        assert_eq!(assoc_stirling2(4, 2), count(3));
        assert_eq!(assoc_stirling2(6, 3), count(15));
        assert_eq!(assoc_stirling2(5, 2), count(10));
        assert_eq!(assoc_stirling2(1, 1), count(0));
        assert_eq!(assoc_stirling2(0, 0), count(1));
    }

    #[test]
    fn chain_product_matches_recurrence() {
        for s in 0..=20 {
            for k in 0..=s {
                assert_eq!(
                    assoc_stirling2_chain_product(s, k),
                    assoc_stirling2(s, k),
                    "S2({s},{k})"
                );
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_partitions_min_block(4, 2, 1).unwrap(), count(7));
        assert_eq!(enumerate_partitions_min_block(4, 2, 2).unwrap(), count(3));
        assert_eq!(enumerate_partitions_min_block(5, 5, 2).unwrap(), count(0));
        assert_eq!(enumerate_partitions_min_block(0, 0, 2).unwrap(), count(1));
    }

    #[test]
    fn enumeration_rejects_large_sets() {
        assert_eq!(
            enumerate_partitions_min_block(15, 3, 1),
            Err(Error::SizeLimit { s: 15, max: 14 })
        );
        assert!(enumerate_all_partitions(15).is_err());
        assert!(enumerate_partitions_min_block(4, 2, 0).is_err());
    }

    #[test]
    fn oracle_agrees_with_recurrences_up_to_ten() {
        for s in 0..=10 {
            for k in 0..=s {
                assert_eq!(
                    stirling2(s, k),
                    enumerate_partitions_min_block(s, k, 1).unwrap()
                );
                assert_eq!(
                    assoc_stirling2(s, k),
                    enumerate_partitions_min_block(s, k, 2).unwrap()
                );
            }
        }
    }

    #[test]
    fn stirling_row_sums_are_bell_numbers() {
        for s in 0..=10 {
            let row_sum: BigCount = stirling2_row(s).into_iter().sum();
            assert_eq!(row_sum, enumerate_all_partitions(s).unwrap(), "s = {s}");
        }
    }

    #[test]
    fn double_factorial_examples() {
        assert_eq!(double_factorial_odd(0), count(1));
        assert_eq!(double_factorial_odd(2), count(3));
        assert_eq!(double_factorial_odd(4), count(105));
    }

    #[test]
    fn falling_factorial_examples() {
        assert_eq!(falling_factorial(5.0, 0), 1.0);
        assert_eq!(falling_factorial(4.0, 2), 12.0);
        assert_eq!(falling_factorial(2.0, 4), 0.0);
    }

    #[test]
    fn falling_factorial_is_ratio_of_factorials() {
        let fact = |n: u64| (1..=n).product::<u64>() as f64;
        for n in 0..=12u32 {
            for s in 0..=n {
                let expected = fact(u64::from(n)) / fact(u64::from(n - s));
                assert_eq!(falling_factorial(f64::from(n), s), expected, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn touchard_examples() {
        assert_eq!(touchard_poly(0), poly(&[1]));
        assert_eq!(touchard_poly(2), poly(&[0, 1, 1]));
        assert_eq!(touchard_poly(3), poly(&[0, 1, 3, 1]));
    }

    #[test]
    fn centered_moment_examples() {
        assert_eq!(centered_poisson_moment_recurrence(2), poly(&[0, 1]));
        assert_eq!(centered_poisson_moment_recurrence(4), poly(&[0, 1, 3]));
        assert_eq!(centered_poisson_moment_recurrence(6), poly(&[0, 1, 25, 15]));

        assert_eq!(centered_poisson_moment_closed(3), poly(&[0, 1]));
        assert_eq!(centered_poisson_moment_closed(4), poly(&[0, 1, 3]));
        assert_eq!(centered_poisson_moment_closed(5), poly(&[0, 1, 10]));

        assert!(centered_poisson_moment_touchard(1).is_zero());
        assert_eq!(centered_poisson_moment_touchard(2), poly(&[0, 1]));
        assert_eq!(centered_poisson_moment_touchard(4), poly(&[0, 1, 3]));
    }

    #[test]
    fn three_constructions_agree() {
        let rec = centered_poisson_moments_by_recurrence(20);
        for (s, r) in rec.iter().enumerate() {
            assert_eq!(r, &centered_poisson_moment_closed(s), "closed, s = {s}");
            assert_eq!(r, &centered_poisson_moment_touchard(s), "touchard, s = {s}");
        }
    }

    #[test]
    fn degree_and_leading_coefficient_law() {
        for s in 2..=20 {
            let m = centered_poisson_moment_recurrence(s);
            assert_eq!(m.degree(), Some(s / 2), "s = {s}");
            if s % 2 == 0 {
                let lead = m.leading_coefficient().unwrap();
                assert_eq!(lead, &BigInt::from(double_factorial_odd(s / 2)));
            }
        }
    }

    #[test]
    fn display_format() {
        assert_eq!(IntPolynomial::zero().to_string(), "0");
        assert_eq!(poly(&[0, 1, 25, 15]).to_string(), "x + 25x^2 + 15x^3");
        assert_eq!(poly(&[1]).to_string(), "1");
        assert_eq!(poly(&[-2, 0, -1, 3]).to_string(), "-2 - x^2 + 3x^3");
    }

    #[test]
    fn evaluation() {
        let p = poly(&[0, 1, 3]);
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(2.0), 14.0);
        assert_eq!(p.eval_int(&BigInt::from(2)), BigInt::from(14));
        assert_eq!(poly(&[7, 1]).eval(0.0), 7.0);
    }

    #[test]
    fn touchard_evaluates_poisson_raw_moments() {
        // E(P^s) for P ~ Poisson(x), summed directly from the pmf.
        let x: f64 = 2.5;
        for s in 0..=6 {
            let mut direct = 0.0;
            let mut p = (-x).exp();
            for l in 0..200 {
                if l > 0 {
                    p *= x / l as f64;
                }
                direct += p * (l as f64).powi(s as i32);
            }
            let t = touchard_poly(s).eval(x);
            assert!((t - direct).abs() <= 1e-10 * direct.max(1.0), "s = {s}");
        }
    }
}
