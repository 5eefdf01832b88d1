//! Summary statistics for defect counts: batch-means errors, Poisson and
//! normality goodness-of-fit, and a pairwise independence check.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error from non-overlapping batch means.
    pub se: f64,
    pub batches: usize,
}

pub fn batch_means(xs: &[f64]) -> Result<MeanEstimate> {
    let n = xs.len();
    if n < 4 {
        return Err(Error::InsufficientSamples { have: n, need: 4 });
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let batches = ((n as f64).sqrt() as usize).clamp(2, 50);
    let size = n / batches;
    let bm: Vec<f64> = (0..batches).map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let bmean = bm.iter().sum::<f64>() / batches as f64;
    let bvar = bm.iter().map(|x| (x - bmean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    // never report less than the i.i.d. error
    let se = (bvar / batches as f64).max(variance / n as f64).sqrt();
    Ok(MeanEstimate { n, mean, variance, se, batches })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    pub label: String,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonGof {
    pub mean: f64,
    pub bins: Vec<GofBin>,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Minimum expected count per bin after pooling.
const MIN_EXPECTED: f64 = 5.0;

/// Chi-square test of `counts` against Poisson(`mu`), pooling both tails.
pub fn poisson_gof(counts: &[u32], mu: f64) -> Result<PoissonGof> {
    let n = counts.len();
    if n == 0 {
        return Err(Error::InsufficientSamples { have: 0, need: 1 });
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("Poisson mean must be positive, got {mu}")));
    }
    let pois = Poisson::new(mu).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let nf = n as f64;
    let kmax = counts.iter().copied().max().unwrap_or(0) as u64;
    let mut hist = vec![0u64; kmax as usize + 1];
    for &c in counts {
        hist[c as usize] += 1;
    }
    // fine bins 0..=top, the last one open-ended
    let top = kmax.max(mu.ceil() as u64 + 1);
    let mut fine: Vec<(u64, u64, f64)> = (0..=top)
        .map(|k| {
            let e = if k == top { nf * pois.sf(k - 1) } else { nf * pois.pmf(k) };
            (k, hist.get(k as usize).copied().unwrap_or(0), e)
        })
        .collect();
    if top == 0 {
        fine[0].2 = nf;
    }
    // pool from the right, then from the left
    while fine.len() > 1 && fine.last().unwrap().2 < MIN_EXPECTED {
        let (_, o, e) = fine.pop().unwrap();
        let last = fine.last_mut().unwrap();
        last.1 += o;
        last.2 += e;
    }
    let mut bins: Vec<(u64, u64, u64, f64)> = Vec::new();
    let (mut lo, mut o_acc, mut e_acc) = (0u64, 0u64, 0f64);
    for (i, &(k, o, e)) in fine.iter().enumerate() {
        o_acc += o;
        e_acc += e;
        if e_acc >= MIN_EXPECTED || i + 1 == fine.len() {
            bins.push((lo, k, o_acc, e_acc));
            lo = k + 1;
            o_acc = 0;
            e_acc = 0.0;
        }
    }
    // a short final left-pooled bin joins its neighbour
    if bins.len() > 1 && bins.last().unwrap().3 < MIN_EXPECTED {
        let (_, hi, o, e) = bins.pop().unwrap();
        let last = bins.last_mut().unwrap();
        last.1 = hi;
        last.2 += o;
        last.3 += e;
    }
    let last_hi = bins.last().map(|b| b.1).unwrap_or(0);
    let gof_bins: Vec<GofBin> = bins
        .iter()
        .map(|&(lo, hi, o, e)| {
            let label = if hi == last_hi {
                format!(">={lo}")
            } else if lo == hi {
                format!("{lo}")
            } else {
                format!("{lo}-{hi}")
            };
            GofBin { label, observed: o, expected: e }
        })
        .collect();
    let chi2: f64 = gof_bins.iter().map(|b| (b.observed as f64 - b.expected).powi(2) / b.expected).sum();
    let df = gof_bins.len() - 1;
    let p_value = chi2_sf(chi2, df);
    Ok(PoissonGof { mean: mu, bins: gof_bins, chi2, df, p_value })
}

/// Upper tail of the chi-square distribution; `df = 0` means nothing was tested.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map(|c| c.sf(x)).unwrap_or(f64::NAN)
}

/// Chi-square test of observed category counts against exact probabilities.
pub fn chi2_against(observed: &[u64], probs: &[f64]) -> Result<(f64, usize, f64)> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::InvalidParameter("observed and expected categories differ".into()));
    }
    let n: u64 = observed.iter().sum();
    let chi2: f64 = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = n as f64 * p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let df = observed.len() - 1;
    Ok((chi2, df, chi2_sf(chi2, df)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityDiag {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub jarque_bera: Option<f64>,
    pub p_value: Option<f64>,
}

pub fn jarque_bera(xs: &[f64]) -> NormalityDiag {
    let n = xs.len();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf.max(1.0);
    let m = |p: i32| xs.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / nf.max(1.0);
    let (m2, m3, m4) = (m(2), m(3), m(4));
    if n < 3 || m2 <= 0.0 {
        return NormalityDiag {
            n,
            mean,
            variance: m2,
            skewness: None,
            excess_kurtosis: None,
            jarque_bera: None,
            p_value: None,
        };
    }
    let s = m3 / m2.powf(1.5);
    let k = m4 / (m2 * m2) - 3.0;
    let jb = nf / 6.0 * (s * s + k * k / 4.0);
    NormalityDiag {
        n,
        mean,
        variance: m2,
        skewness: Some(s),
        excess_kurtosis: Some(k),
        jarque_bera: Some(jb),
        p_value: Some(chi2_sf(jb, 2)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceDiag {
    pub type_a: String,
    pub type_b: String,
    pub correlation: Option<f64>,
    /// 2×2 presence/absence table.
    pub table: [[u64; 2]; 2],
    pub chi2: Option<f64>,
    pub p_value: Option<f64>,
}

pub fn independence(type_a: &str, a: &[u32], type_b: &str, b: &[u32]) -> IndependenceDiag {
    let n = a.len().min(b.len());
    let mut table = [[0u64; 2]; 2];
    for i in 0..n {
        table[(a[i] > 0) as usize][(b[i] > 0) as usize] += 1;
    }
    let fa: Vec<f64> = a[..n].iter().map(|&x| x as f64).collect();
    let fb: Vec<f64> = b[..n].iter().map(|&x| x as f64).collect();
    let correlation = pearson(&fa, &fb);
    let nf = n as f64;
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let mut chi2 = 0.0;
    let mut ok = n > 0;
    for (r, row) in table.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            let e = rows[r] as f64 * cols[c] as f64 / nf;
            if e < MIN_EXPECTED {
                ok = false;
            } else {
                chi2 += (o as f64 - e).powi(2) / e;
            }
        }
    }
    IndependenceDiag {
        type_a: type_a.into(),
        type_b: type_b.into(),
        correlation,
        table,
        chi2: ok.then_some(chi2),
        p_value: ok.then(|| chi2_sf(chi2, 1)),
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() < 2 {
        return None;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::Poisson as P;

    fn poisson_sample(mu: f64, n: usize, seed: u64) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = P::new(mu).unwrap();
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut k = 0u64;
                while p.cdf(k) < u {
                    k += 1;
                }
                k as u32
            })
            .collect()
    }

    #[test]
    fn gof_accepts_and_rejects() {
        let xs = poisson_sample(0.5, 5000, 1);
        let good = poisson_gof(&xs, 0.5).unwrap();
        assert!(good.p_value > 0.01, "{good:?}");
        let total: u64 = good.bins.iter().map(|b| b.observed).sum();
        assert_eq!(total, 5000);
        assert!(good.bins.iter().all(|b| b.expected >= MIN_EXPECTED));
        let bad = poisson_gof(&xs, 0.8).unwrap();
        assert!(bad.p_value < 1e-6);
    }

    #[test]
    fn gof_all_zero_with_tiny_mean() {
        let g = poisson_gof(&[0; 200], 1e-6).unwrap();
        assert_eq!(g.df, 0);
        assert_eq!(g.p_value, 1.0);
        assert!(poisson_gof(&[], 1.0).is_err());
    }

    #[test]
    fn batch_means_iid() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i % 2) as f64).collect();
        let m = batch_means(&xs).unwrap();
        assert!((m.mean - 0.5).abs() < 1e-12);
        assert!(m.se >= (0.25f64 / 10_000.0).sqrt() * 0.99);
        assert!(batch_means(&[1.0]).is_err());
    }

    #[test]
    fn normality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..4000).map(|_| (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0).collect();
        let j = jarque_bera(&xs);
        assert!(j.p_value.unwrap() > 0.01);
        let skewed: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        assert!(jarque_bera(&skewed).p_value.unwrap() < 1e-6);
        assert!(jarque_bera(&[1.0; 10]).p_value.is_none());
    }

    #[test]
    fn independence_table() {
        let a = poisson_sample(1.0, 4000, 5);
        let b = poisson_sample(1.0, 4000, 6);
        let ind = independence("a", &a, "b", &b);
        assert!(ind.p_value.unwrap() > 0.01);
        let dep = independence("a", &a, "a", &a);
        assert!(dep.p_value.unwrap() < 1e-6);
        assert!((dep.correlation.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_category_test() {
        let (c, df, p) = chi2_against(&[100, 100, 100], &[1.0 / 3.0; 3]).unwrap();
        assert_eq!((c, df), (0.0, 2));
        assert!((p - 1.0).abs() < 1e-12);
    }
}
