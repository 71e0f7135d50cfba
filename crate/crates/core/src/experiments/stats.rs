use statrs::distribution::{ContinuousCDF, Normal};

const TIE_TOL: f64 = 1e-12;

/// Wilcoxon signed-rank test on paired samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// Sum of ranks of positive differences `x − y`.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Number of non-zero differences.
    pub n: usize,
}

/// Signed-rank test with zero differences dropped and tied ranks averaged.
/// Exact null distribution for `n ≤ 25`, normal approximation with
/// continuity and tie correction above that. No non-zero differences gives
/// `p = 1`.
pub fn wilcoxon_signed_rank(xs: &[f64], ys: &[f64]) -> Wilcoxon {
    assert_eq!(xs.len(), ys.len(), "paired samples must have equal length");
    let mut diffs: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| x - y)
        .filter(|d| d.abs() > TIE_TOL)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Wilcoxon {
            statistic: 0.0,
            p_value: 1.0,
            n,
        };
    }
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    // Doubled ranks stay integral under averaging.
    let mut ranks2 = vec![0u64; n];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (diffs[j].abs() - diffs[i].abs()).abs() <= TIE_TOL {
            j += 1;
        }
        let r2 = (i + 1 + j) as u64; // 2 × mean of ranks i+1..=j
        ranks2[i..j].iter_mut().for_each(|r| *r = r2);
        ties.push(j - i);
        i = j;
    }
    let w2: u64 = ranks2
        .iter()
        .zip(&diffs)
        .filter(|(_, &d)| d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let total2: u64 = ranks2.iter().sum();
    let statistic = w2 as f64 / 2.0;

    let p_value = if n <= 25 {
        // counts[s] = number of sign patterns with doubled positive-rank sum s.
        let mut counts = vec![0f64; total2 as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &ranks2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                let c = counts[s];
                if c != 0.0 {
                    counts[s + r] += c;
                }
            }
            reach += r;
        }
        // |2s − total| ≥ |2w − total| in doubled units.
        let dev = (2 * w2 as i64 - total2 as i64).abs();
        let extreme: f64 = counts
            .iter()
            .enumerate()
            .filter(|(s, _)| (2 * *s as i64 - total2 as i64).abs() >= dev)
            .map(|(_, c)| c)
            .sum();
        extreme / 2f64.powi(n as i32)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_corr: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_corr;
        let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
        2.0 * (1.0 - Normal::standard().cdf(z))
    };
    Wilcoxon {
        statistic,
        p_value: p_value.clamp(0.0, 1.0),
        n,
    }
}

/// Per-bin densities of two samples over shared bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramDiff {
    /// `bins + 1` bin edges.
    pub edges: Vec<f64>,
    pub density_a: Vec<f64>,
    pub density_b: Vec<f64>,
    /// `density_a − density_b`.
    pub difference: Vec<f64>,
}

/// Bins both samples on `range` (the pooled min/max when `None`); values
/// outside the range fall into the end bins.
pub fn histogram_difference(
    a: &[f64],
    b: &[f64],
    bins: usize,
    range: Option<(f64, f64)>,
) -> HistogramDiff {
    assert!(bins > 0, "at least one bin");
    let (lo, hi) = range.unwrap_or_else(|| {
        let pooled = a.iter().chain(b);
        let lo = pooled.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = pooled.copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            (lo, hi)
        } else {
            (0.0, 1.0)
        }
    });
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let density = |xs: &[f64]| {
        let mut d = vec![0.0; bins];
        if xs.is_empty() {
            return d;
        }
        for &x in xs {
            let i = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            d[i] += 1.0;
        }
        let scale = 1.0 / (xs.len() as f64 * width);
        d.iter_mut().for_each(|v| *v *= scale);
        d
    };
    let density_a = density(a);
    let density_b = density(b);
    let difference = density_a
        .iter()
        .zip(&density_b)
        .map(|(x, y)| x - y)
        .collect();
    HistogramDiff {
        edges,
        density_a,
        density_b,
        difference,
    }
}

/// Mean, sample standard deviation, min and max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Summary {
            mean,
            std: var.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}
