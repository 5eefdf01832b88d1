//! Monte Carlo sampling of the hard-core model with defect extraction and
//! statistical comparison against polymer-census predictions.

mod chain;
mod defects;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chain::{default_burn_in, glauber_run, glauber_snapshots, ChainConfig, ChainState, Snapshot, StartState};
pub use defects::{defect_side, extract_defects, report_from_members, DefectReport};
pub use stats::{
    batch_means, chi2_against, chi2_sf, independence, jarque_bera, poisson_gof, GofBin, IndependenceDiag, MeanEstimate,
    NormalityDiag, PoissonGof,
};

use crate::asymptotics::{rat_to_f64_lossy, type_means};
use crate::clusters::{ClusterOptions, ClusterSet, Observable};
use crate::error::{Error, Result};
use crate::hypercube::{Dim, Parity};
use crate::polymers::{Census, DefectType};
use crate::symbolic::{rat_to_string, Rat};

/// Below this many snapshots statistics are refused.
pub const MIN_SAMPLES: usize = 30;
/// Types with `m_T` at most this get a Poisson goodness-of-fit test.
pub const POISSON_MAX_MEAN: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub chain: u32,
    pub step: u64,
    pub size: u64,
    pub odd: u64,
    pub even: u64,
    pub report: DefectReport,
}

pub fn collect_samples(cfg: &ChainConfig, chain: u32) -> Result<Vec<SampleRecord>> {
    let mut out = Vec::new();
    glauber_run(cfg, |s| {
        out.push(SampleRecord {
            chain,
            step: s.step_count(),
            size: s.size(),
            odd: s.odd(),
            even: s.even(),
            report: extract_defects(s)?,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Independent chains on streams `0..chains`, concatenated in chain order.
pub fn run_chains(cfg: &ChainConfig, chains: u32) -> Result<Vec<SampleRecord>> {
    let per: Vec<Vec<SampleRecord>> = (0..chains)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.stream = i as u64;
            collect_samples(&c, i)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeSummary {
    pub label: String,
    /// `n_T`, when the type is in the census.
    pub n_t: Option<String>,
    pub w_t: Option<String>,
    /// `m_T = n_T w_T`.
    pub m_t: Option<String>,
    pub m_t_f64: Option<f64>,
    pub estimate: MeanEstimate,
    pub var_mean_ratio: Option<f64>,
    /// `(mean − m_T)/SE`.
    pub z_score: Option<f64>,
    pub poisson: Option<PoissonGof>,
    /// Truncated cluster-expansion value of `E X_T`, when supplied.
    pub cluster_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectSummary {
    pub d: u32,
    pub lambda: String,
    pub samples: usize,
    pub odd_side_fraction: f64,
    pub size: MeanEstimate,
    pub types: Vec<TypeSummary>,
    pub gamma_size: NormalityDiag,
    pub gamma_nbhd: NormalityDiag,
    pub independence: Option<IndependenceDiag>,
    pub warnings: Vec<String>,
}

impl DefectSummary {
    pub fn get(&self, label: &str) -> Option<&TypeSummary> {
        self.types.iter().find(|t| t.label == label)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("summary serialises")
    }

    /// Attaches cluster-expansion means keyed by type label.
    pub fn with_cluster_means(mut self, means: &BTreeMap<String, Rat>) -> Self {
        for t in &mut self.types {
            t.cluster_mean = means.get(&t.label).map(rat_to_f64_lossy);
        }
        self
    }
}

pub fn defect_statistics(records: &[SampleRecord], census: &Census, lambda: &Rat) -> Result<DefectSummary> {
    if records.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { have: records.len(), need: MIN_SAMPLES });
    }
    if census.d == 0 || records.iter().any(|r| r.size != r.odd + r.even) {
        return Err(Error::InvalidParameter("inconsistent sample records".into()));
    }
    let mut warnings = Vec::new();
    if records.len() < 1000 {
        warnings.push(format!("only {} samples; at least 1000 are recommended", records.len()));
    }
    let means = type_means(census, lambda);
    let mut all: BTreeSet<DefectType> = means.keys().cloned().collect();
    for r in records {
        all.extend(r.report.defects.keys().cloned());
    }
    let mut types = Vec::new();
    let mut columns: BTreeMap<DefectType, Vec<u32>> = BTreeMap::new();
    for t in &all {
        let xs: Vec<u32> = records.iter().map(|r| r.report.count(t)).collect();
        let fx: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        let estimate = batch_means(&fx)?;
        let entry = census.get(t);
        let m = means.get(t);
        let mf = m.map(rat_to_f64_lossy);
        let poisson = match mf {
            Some(mu) if mu > 0.0 && mu <= POISSON_MAX_MEAN => Some(poisson_gof(&xs, mu)?),
            _ => None,
        };
        types.push(TypeSummary {
            label: t.label(),
            n_t: entry.map(|e| e.count.to_string()),
            w_t: m.zip(entry).map(|(m, e)| {
                rat_to_string(&(m / Rat::from_integer(num_bigint::BigInt::from(e.count.clone()))))
            }),
            m_t: m.map(rat_to_string),
            m_t_f64: mf,
            var_mean_ratio: (estimate.mean > 0.0).then(|| estimate.variance / estimate.mean),
            z_score: mf.and_then(|mu| (estimate.se > 0.0).then(|| (estimate.mean - mu) / estimate.se)),
            estimate,
            poisson,
            cluster_mean: None,
        });
        columns.insert(*t, xs);
    }
    let size: Vec<f64> = records.iter().map(|r| r.size as f64).collect();
    let gs: Vec<f64> = records.iter().map(|r| r.report.total_size as f64).collect();
    let gn: Vec<f64> = records.iter().map(|r| r.report.nbhd_total as f64).collect();
    // the two census types with the largest means
    let mut ranked: Vec<(&DefectType, f64)> = means.iter().map(|(t, m)| (t, rat_to_f64_lossy(m))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let independence = (ranked.len() >= 2).then(|| {
        let (a, b) = (ranked[0].0, ranked[1].0);
        stats::independence(&a.label(), &columns[a], &b.label(), &columns[b])
    });
    let odd = records.iter().filter(|r| r.report.side == Parity::Odd).count();
    Ok(DefectSummary {
        d: census.d,
        lambda: rat_to_string(lambda),
        samples: records.len(),
        odd_side_fraction: odd as f64 / records.len() as f64,
        size: batch_means(&size)?,
        types,
        gamma_size: jarque_bera(&gs),
        gamma_nbhd: jarque_bera(&gn),
        independence,
        warnings,
    })
}

/// `Σ_{‖Γ‖ ≤ k} w(Γ) · #{polymers of type T in Γ}`, the truncated expansion of `E X_T`.
pub fn cluster_type_means(d: Dim, lambda: &Rat, k: u32, types: &[DefectType]) -> Result<BTreeMap<String, Rat>> {
    let set = ClusterSet::enumerate(d, k, ClusterOptions { keep_records: true, ..Default::default() })?;
    let mut out = BTreeMap::new();
    for t in types {
        let mut s = Rat::from_integer(0.into());
        for j in 1..=k {
            s += set.cluster_sum(j, &Observable::TypeCount(*t, 1))?.value(lambda)?;
        }
        out.insert(t.label(), s);
    }
    Ok(out)
}

/// CSV rows: step, sizes, defect side, `‖Γ‖`, `|N(Γ)|`, then one column per observed type.
pub fn write_csv(records: &[SampleRecord], out: impl Write) -> Result<()> {
    let types: BTreeSet<DefectType> = records.iter().flat_map(|r| r.report.defects.keys().cloned()).collect();
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
    let mut header: Vec<String> =
        ["chain", "step", "size", "odd", "even", "side", "gamma_size", "gamma_nbhd"].iter().map(|s| s.to_string()).collect();
    header.extend(types.iter().map(|t| t.label()));
    w.write_record(&header).map_err(io)?;
    for r in records {
        let mut row = vec![
            r.chain.to_string(),
            r.step.to_string(),
            r.size.to_string(),
            r.odd.to_string(),
            r.even.to_string(),
            format!("{:?}", r.report.side).to_lowercase(),
            r.report.total_size.to_string(),
            r.report.nbhd_total.to_string(),
        ];
        row.extend(types.iter().map(|t| r.report.count(t).to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiag {
    pub start: StartState,
    pub size: MeanEstimate,
    pub defects: MeanEstimate,
    /// Mean of `(|I∩E| − |I∩O|)/N`.
    pub magnetisation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoChainDiag {
    pub chains: [ChainDiag; 2],
    /// Standardised difference of the mean sizes.
    pub size_gap_z: f64,
    /// Standardised difference of the mean defect counts.
    pub defect_gap_z: f64,
}

/// Chains from the two ground states; after burn-in their defect statistics should agree.
pub fn two_chain_diagnostic(cfg: &ChainConfig) -> Result<TwoChainDiag> {
    let n = (1u64 << (cfg.d - 1)) as f64;
    let run = |start: StartState, stream: u64| -> Result<ChainDiag> {
        let mut c = cfg.clone();
        c.start = start;
        c.stream = stream;
        let recs = collect_samples(&c, stream as u32)?;
        let size: Vec<f64> = recs.iter().map(|r| r.size as f64).collect();
        let def: Vec<f64> = recs.iter().map(|r| r.report.num_defects() as f64).collect();
        let mag = recs.iter().map(|r| (r.even as f64 - r.odd as f64) / n).sum::<f64>() / recs.len().max(1) as f64;
        Ok(ChainDiag { start, size: batch_means(&size)?, defects: batch_means(&def)?, magnetisation: mag })
    };
    let a = run(StartState::EvenFull, 0)?;
    let b = run(StartState::OddFull, 1)?;
    let z = |x: &MeanEstimate, y: &MeanEstimate| {
        let se = (x.se * x.se + y.se * y.se).sqrt();
        if se > 0.0 {
            (x.mean - y.mean) / se
        } else {
            0.0
        }
    };
    Ok(TwoChainDiag { size_gap_z: z(&a.size, &b.size), defect_gap_z: z(&a.defects, &b.defects), chains: [a, b] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::hardcore_exact;
    use crate::polymers::census;
    use crate::symbolic::rat;

    #[test]
    fn q2_stationary_distribution() {
        let d = Dim::new(2).unwrap();
        let cfg = ChainConfig {
            d: 2,
            lambda: rat(1, 1),
            steps: 1_000_000,
            burn_in: 1000,
            thin: 20,
            seed: 11,
            stream: 0,
            start: StartState::Empty,
        };
        let exact = hardcore_exact(d, &rat(1, 1)).unwrap();
        let states = exact.states().unwrap().to_vec();
        assert_eq!(states.len(), 7);
        let mut obs = vec![0u64; 7];
        for s in glauber_snapshots(&cfg).unwrap() {
            let i = states.iter().position(|&x| Some(x) == s.mask).expect("state is independent");
            obs[i] += 1;
        }
        let probs: Vec<f64> = states.iter().map(|&s| rat_to_f64_lossy(&exact.probability(s))).collect();
        let (_, _, p) = chi2_against(&obs, &probs).unwrap();
        assert!(p > 0.01, "p = {p}, counts {obs:?}");
    }

    #[test]
    fn q3_mean_size() {
        let cfg = ChainConfig {
            d: 3,
            lambda: rat(1, 1),
            steps: 400_000,
            burn_in: 1000,
            thin: 16,
            seed: 5,
            stream: 0,
            start: StartState::Empty,
        };
        let exact = hardcore_exact(Dim::new(3).unwrap(), &rat(1, 1)).unwrap();
        let xs: Vec<f64> = glauber_snapshots(&cfg).unwrap().iter().map(|s| s.size as f64).collect();
        let m = batch_means(&xs).unwrap();
        let e = rat_to_f64_lossy(&exact.expected_size);
        assert!((m.mean - e).abs() < 3.0 * m.se, "{} vs {e} (se {})", m.mean, m.se);
    }

    #[test]
    fn statistics_shape_and_errors() {
        let cfg = ChainConfig::with_samples(6, rat(2, 1), 200, 3);
        let recs = collect_samples(&cfg, 0).unwrap();
        assert_eq!(recs.len(), 200);
        let cen = census(Dim::new(6).unwrap(), 2).unwrap();
        let s = defect_statistics(&recs, &cen, &rat(2, 1)).unwrap();
        assert!(s.get(&DefectType::singleton().label()).is_some());
        assert!(!s.warnings.is_empty());
        assert!(defect_statistics(&recs[..10], &cen, &rat(2, 1)).is_err());
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 201);
        assert!(text.starts_with("chain,step,size,odd,even,side,gamma_size,gamma_nbhd"));
    }

    #[test]
    fn huge_fugacity_has_no_defects() {
        let cfg = ChainConfig::with_samples(5, rat(1000, 1), 100, 9);
        let recs = collect_samples(&cfg, 0).unwrap();
        let cen = census(Dim::new(5).unwrap(), 1).unwrap();
        let s = defect_statistics(&recs, &cen, &rat(1000, 1)).unwrap();
        let t = s.get(&DefectType::singleton().label()).unwrap();
        assert!(t.estimate.mean < 0.05);
        assert!(t.m_t_f64.unwrap() < 1e-10);
    }

    #[test]
    fn chains_are_reproducible() {
        let cfg = ChainConfig::with_samples(5, rat(1, 1), 50, 21);
        let a = run_chains(&cfg, 3).unwrap();
        let b = run_chains(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 150);
        assert_eq!(a[0].chain, 0);
        assert_eq!(a[149].chain, 2);
    }

    #[test]
    fn two_chains_agree_on_defects() {
        let cfg = ChainConfig::with_samples(6, rat(2, 1), 400, 13);
        let diag = two_chain_diagnostic(&cfg).unwrap();
        assert!(diag.chains[0].magnetisation > 0.5);
        assert!(diag.chains[1].magnetisation < -0.5);
        assert!(diag.defect_gap_z.abs() < 4.0, "{diag:?}");
    }
}
