//! Sample means with standard errors.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// `s / √N` with the unbiased sample standard deviation `s`.
    pub std_error: f64,
}

/// Two-pass mean and standard error of `f` over `items`.
pub fn estimate_mean<T>(items: &[T], f: impl Fn(&T) -> f64) -> MeanEstimate {
    let n = items.len();
    assert!(n >= 2, "need at least two observations");
    let mean = items.iter().map(&f).sum::<f64>() / n as f64;
    let ss: f64 = items
        .iter()
        .map(|t| {
            let d = f(t) - mean;
            d * d
        })
        .sum();
    MeanEstimate {
        mean,
        std_error: (ss / (n - 1) as f64 / n as f64).sqrt(),
    }
}

/// Pearson correlation of two equally long series.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}
