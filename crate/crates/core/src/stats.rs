//! Histograms and goodness-of-fit tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::quadrature::Rule;

/// Uniform-bin histogram on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram {
            lo,
            hi,
            counts: vec![0; bins.max(1)],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn from_samples<I: IntoIterator<Item = f64>>(lo: f64, hi: f64, bins: usize, samples: I) -> Self {
        let mut h = Self::new(lo, hi, bins);
        for x in samples {
            h.add(x);
        }
        h
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn add(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            // the closed upper edge belongs to the last bin
            if x == self.hi {
                *self.counts.last_mut().unwrap() += 1;
            } else {
                self.overflow += 1;
            }
        } else {
            let i = (((x - self.lo) / self.width()) as usize).min(self.bins() - 1);
            self.counts[i] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        (
            self.lo + i as f64 * self.width(),
            self.lo + (i + 1) as f64 * self.width(),
        )
    }

    /// Probability density per bin, normalized by all recorded samples.
    pub fn density(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / (n * self.width())).collect()
    }
}

/// Square 2D histogram on `[lo, hi)²`, row-major with `y` as the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    pub counts: Vec<u64>,
    pub outside: u64,
}

impl Histogram2D {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        let bins = bins.max(1);
        Histogram2D {
            lo,
            hi,
            bins,
            counts: vec![0; bins * bins],
            outside: 0,
        }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn add(&mut self, x: f64, y: f64) {
        let w = self.width();
        if x < self.lo || y < self.lo || x >= self.hi || y >= self.hi {
            self.outside += 1;
            return;
        }
        let ix = (((x - self.lo) / w) as usize).min(self.bins - 1);
        let iy = (((y - self.lo) / w) as usize).min(self.bins - 1);
        self.counts[iy * self.bins + ix] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.bins + ix]
    }

    /// Counts divided by total samples and bin area.
    pub fn density(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        let a = self.width() * self.width();
        self.counts.iter().map(|&c| c as f64 / (n * a)).collect()
    }

    /// Fraction of samples per bin.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Pearson chi-square goodness-of-fit result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins after merging sparse neighbours.
    pub cells: usize,
}

impl ChiSquare {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Tests observed counts against bin probabilities. Adjacent bins are merged
/// until each cell expects at least five events; probability mass outside
/// the bins forms one more cell when it carries counts or expectation.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], outside_count: u64) -> ChiSquare {
    let n = counts.iter().sum::<u64>() + outside_count;
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probs) {
        obs += *c as f64;
        exp += p * nf;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if obs > 0.0 || exp > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => cells.push((obs, exp)),
        }
    }
    let outside_p = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    if outside_count > 0 || outside_p * nf >= 5.0 {
        cells.push((outside_count as f64, outside_p * nf));
    }
    let statistic: f64 = cells
        .iter()
        .map(|(o, e)| {
            if *e > 0.0 {
                (o - e).powi(2) / e
            } else if *o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = if statistic.is_finite() {
        ChiSquared::new(dof as f64)
            .map(|d| 1.0 - d.cdf(statistic))
            .unwrap_or(0.0)
    } else {
        0.0
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
        cells: cells.len(),
    }
}

/// Integral of `f` over each histogram bin by Gauss-Legendre.
pub fn bin_probabilities<F: Fn(f64) -> f64>(hist: &Histogram, f: F, order: usize) -> Vec<f64> {
    (0..hist.bins())
        .map(|i| {
            let (a, b) = hist.edges(i);
            Rule::legendre(order, a, b).integrate(&f)
        })
        .collect()
}

/// Sample mean and its standard error.
pub fn mean_and_standard_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_binning() {
        let h = Histogram::from_samples(0.0, 1.0, 4, [0.1, 0.3, 0.3, 0.99, 1.0, 1.5, -0.1]);
        assert_eq!(h.counts, vec![1, 2, 0, 2]);
        assert_eq!((h.underflow, h.overflow), (1, 1));
        assert_eq!(h.total(), 7);
    }

    #[test]
    fn exact_match_has_unit_p_value() {
        let r = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4], 0);
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.dof, 3);
    }

    #[test]
    fn gross_mismatch_fails() {
        let r = chi_square_gof(&[100, 0, 0, 0], &[0.25; 4], 0);
        assert!(!r.passes(0.01));
    }

    #[test]
    fn sparse_bins_are_merged() {
        let r = chi_square_gof(&[1, 2, 40, 50, 3, 4], &[0.01, 0.02, 0.4, 0.5, 0.03, 0.04], 0);
        assert!(r.cells < 6);
    }

    #[test]
    fn bin_probabilities_sum() {
        let h = Histogram::new(0.0, 2.0, 10);
        let p = bin_probabilities(&h, |x| 0.5 * x, 4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
