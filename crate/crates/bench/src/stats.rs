//! Chi-square tests on category counts.

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Minimum expected count for a category to stand alone; sparser categories
/// are pooled into one bin.
pub const MIN_EXPECTED: f64 = 5.0;

fn finish(statistic: f64, bins: usize, df: usize) -> ChiSquare {
    if bins < 2 || df == 0 {
        return ChiSquare {
            statistic,
            df: 0,
            p_value: 1.0,
        };
    }
    let dist = ChiSquared::new(df as f64).expect("positive df");
    ChiSquare {
        statistic,
        df,
        p_value: dist.sf(statistic),
    }
}

/// Goodness of fit of `counts` to `probs`.
pub fn goodness_of_fit(counts: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(counts.len(), probs.len());
    let n = counts.iter().sum::<u64>() as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    for (&o, &p) in counts.iter().zip(probs) {
        let e = p * n;
        if e < MIN_EXPECTED {
            po += o as f64;
            pe += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pe > 0.0 {
        cells.push((po, pe));
    }
    let stat = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    finish(stat, cells.len(), cells.len().saturating_sub(1))
}

/// Test that two samples over the same categories come from one law.
pub fn homogeneity(a: &[u64], b: &[u64]) -> ChiSquare {
    assert_eq!(a.len(), b.len());
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let n = na + nb;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pa, mut pb) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        if col * na.min(nb) / n < MIN_EXPECTED {
            pa += x as f64;
            pb += y as f64;
        } else {
            bins.push((x as f64, y as f64));
        }
    }
    if pa + pb > 0.0 {
        bins.push((pa, pb));
    }
    let stat = bins
        .iter()
        .map(|&(x, y)| {
            let col = x + y;
            let (ea, eb) = (col * na / n, col * nb / n);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    finish(stat, bins.len(), bins.len().saturating_sub(1))
}
