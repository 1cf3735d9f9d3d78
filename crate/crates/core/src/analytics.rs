//! Evaluation statistics: relative coverage, Vargha–Delaney A12, the
//! Mann–Whitney U-test and aggregation of A/B campaigns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::generation::Mode;
use crate::search::TimelinePoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("coverage {cov} lies outside [{min}, {max}]")]
    OutOfRange { cov: f64, min: f64, max: f64 },
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// `100 * (cov - min) / (max - min)`, or 100 when `min == max`.
pub fn relative_coverage(cov: f64, min: f64, max: f64) -> Result<f64, StatsError> {
    if !(min <= cov && cov <= max) {
        return Err(StatsError::OutOfRange { cov, min, max });
    }
    if min == max {
        return Ok(100.0);
    }
    Ok(100.0 * (cov - min) / (max - min))
}

fn check(xs: &[f64]) -> Result<(), StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Probability that an observation of `xs` exceeds one of `ys`, ties
/// counting half.
pub fn vargha_delaney_a12(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check(xs)?;
    check(ys)?;
    let mut ys = ys.to_vec();
    ys.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &x in xs {
        let below = ys.partition_point(|&y| y < x);
        let not_above = ys.partition_point(|&y| y <= x);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (xs.len() * ys.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UTest {
    /// U statistic of `xs`.
    pub u: f64,
    pub p: f64,
    pub significant: bool,
    pub exact: bool,
}

/// Midranks of the pooled sample and the tie group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = rank;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Number of rank assignments giving each value of U, for sample sizes
/// `n` and `m` without ties.
fn u_distribution(n: usize, m: usize) -> Vec<f64> {
    // table[i][j][u]: ways for i x-values and j y-values.
    let max_u = n * m;
    let mut table = vec![vec![Vec::<f64>::new(); m + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=m {
            let mut counts = vec![0.0; i * j + 1];
            if i == 0 || j == 0 {
                counts[0] = 1.0;
            } else {
                // The largest value is an x (beating all j ys) or a y.
                for (u, c) in table[i - 1][j].iter().enumerate() {
                    counts[u + j] += c;
                }
                for (u, c) in table[i][j - 1].iter().enumerate() {
                    counts[u] += c;
                }
            }
            table[i][j] = counts;
        }
    }
    let out = std::mem::take(&mut table[n][m]);
    debug_assert_eq!(out.len(), max_u + 1);
    out
}

fn u_statistic(xs: &[f64], ys: &[f64]) -> (f64, Vec<usize>) {
    let n = xs.len();
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rx: f64 = ranks[..n].iter().sum();
    (rx - (n * (n + 1)) as f64 / 2.0, ties)
}

/// Exact two-sided p-value, `None` when the samples contain ties.
pub fn exact_p_value(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, StatsError> {
    check(xs)?;
    check(ys)?;
    let (u, ties) = u_statistic(xs, ys);
    if ties.iter().any(|&t| t > 1) {
        return Ok(None);
    }
    let dist = u_distribution(xs.len(), ys.len());
    let total: f64 = dist.iter().sum();
    let k = u.round() as usize;
    let lower = dist[..=k].iter().sum::<f64>() / total;
    let upper = dist[k..].iter().sum::<f64>() / total;
    Ok(Some((2.0 * lower.min(upper)).min(1.0)))
}

/// Two-sided p-value from the normal approximation with tie and continuity
/// correction. A degenerate variance (all values tied) gives 1.
pub fn normal_p_value(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check(xs)?;
    check(ys)?;
    let (u, ties) = u_statistic(xs, ys);
    let nf = xs.len() as f64;
    let mf = ys.len() as f64;
    let big_n = nf + mf;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / (big_n * (big_n - 1.0));
    let var = nf * mf / 12.0 * ((big_n + 1.0) - tie_term);
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((u - nf * mf / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok((2.0 * (1.0 - normal.cdf(z))).min(1.0))
}

/// Two-sided Mann–Whitney U-test. Exact when the pooled sample has at most
/// 24 tie-free values, otherwise the normal approximation.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64], alpha: f64) -> Result<UTest, StatsError> {
    check(xs)?;
    check(ys)?;
    let (u, _) = u_statistic(xs, ys);
    let exact = if xs.len() + ys.len() <= 24 {
        exact_p_value(xs, ys)?
    } else {
        None
    };
    let (p, exact) = match exact {
        Some(p) => (p, true),
        None => (normal_p_value(xs, ys)?, false),
    };
    Ok(UTest {
        u,
        p,
        significant: p < alpha,
        exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComplianceCounts {
    pub generated: usize,
    pub compliant: usize,
    pub non_compliant: usize,
}

impl ComplianceCounts {
    pub fn add(&mut self, other: &ComplianceCounts) {
        self.generated += other.generated;
        self.compliant += other.compliant;
        self.non_compliant += other.non_compliant;
    }
}

/// One search run of one module in one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub module: String,
    pub mode: Mode,
    pub seed: u64,
    pub coverage: f64,
    pub covered: usize,
    pub total: usize,
    pub iterations: u64,
    pub evaluations: u64,
    pub compliance: ComplianceCounts,
    /// APIs with a quarantined crashing test case.
    #[serde(default)]
    pub quarantined: Vec<String>,
    pub timeline: Vec<TimelineSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineSample {
    pub elapsed_s: f64,
    pub iteration: u64,
    pub covered: usize,
    pub total: usize,
}

impl From<TimelinePoint> for TimelineSample {
    fn from(p: TimelinePoint) -> Self {
        TimelineSample {
            elapsed_s: p.elapsed_s,
            iteration: p.iteration,
            covered: p.covered,
            total: p.total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Better,
    Equal,
    Worse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSummary {
    pub module: String,
    pub runs: usize,
    pub mean_coverage_constrained: f64,
    pub mean_coverage_unconstrained: f64,
    pub mean_relative_coverage_constrained: f64,
    pub mean_relative_coverage_unconstrained: f64,
    pub a12: f64,
    /// `None` when a mode has fewer than two runs.
    pub p_value: Option<f64>,
    pub significant: Option<bool>,
    pub verdict: Verdict,
    pub compliance_constrained: ComplianceCounts,
    pub compliance_unconstrained: ComplianceCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub module: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineMedian {
    pub second: u64,
    pub constrained: f64,
    pub unconstrained: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub modules: Vec<ModuleSummary>,
    pub excluded: Vec<Excluded>,
    pub better: usize,
    pub better_significant: usize,
    pub equal: usize,
    pub worse: usize,
    pub worse_significant: usize,
    pub mean_a12: f64,
    pub mean_relative_coverage_constrained: f64,
    pub mean_relative_coverage_unconstrained: f64,
    pub compliance_constrained: ComplianceCounts,
    pub compliance_unconstrained: ComplianceCounts,
    /// Median coverage fraction over all runs on a one-second grid.
    pub timeline: Vec<TimelineMedian>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Coverage fraction of a run at time `t`: the last sample at or before `t`.
pub fn coverage_at(timeline: &[TimelineSample], t: f64) -> f64 {
    let mut value = 0.0;
    for p in timeline {
        if p.elapsed_s <= t {
            value = if p.total == 0 {
                1.0
            } else {
                p.covered as f64 / p.total as f64
            };
        } else {
            break;
        }
    }
    value
}

fn timeline_medians(runs: &[&RunRecord]) -> Vec<TimelineMedian> {
    let horizon = runs
        .iter()
        .flat_map(|r| r.timeline.iter().map(|p| p.elapsed_s))
        .fold(0.0_f64, f64::max)
        .ceil() as u64;
    (0..=horizon)
        .map(|s| {
            let t = s as f64;
            let at = |mode: Mode| {
                let mut v: Vec<f64> = runs
                    .iter()
                    .filter(|r| r.mode == mode)
                    .map(|r| coverage_at(&r.timeline, t))
                    .collect();
                median(&mut v)
            };
            TimelineMedian {
                second: s,
                constrained: at(Mode::Constrained),
                unconstrained: at(Mode::Unconstrained),
            }
        })
        .collect()
}

/// Aggregates A/B runs. The constrained mode is the treatment.
pub fn summarize(records: &[RunRecord], alpha: f64) -> Summary {
    let mut by_module: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_module.entry(&r.module).or_default().push(r);
    }
    let mut modules = Vec::new();
    let mut excluded = Vec::new();
    let mut included: Vec<&RunRecord> = Vec::new();
    let mut compliance_constrained = ComplianceCounts::default();
    let mut compliance_unconstrained = ComplianceCounts::default();

    for (module, runs) in by_module {
        let mut runs = runs;
        runs.sort_by_key(|r| (r.mode, r.seed));
        let cov = |mode: Mode| -> Vec<f64> {
            runs.iter()
                .filter(|r| r.mode == mode)
                .map(|r| r.coverage)
                .collect()
        };
        let (xs, ys) = (cov(Mode::Constrained), cov(Mode::Unconstrained));
        if xs.is_empty() || ys.is_empty() {
            let missing = if xs.is_empty() {
                Mode::Constrained
            } else {
                Mode::Unconstrained
            };
            excluded.push(Excluded {
                module: module.to_string(),
                reason: format!("no {missing} runs"),
            });
            continue;
        }
        let a12 = vargha_delaney_a12(&xs, &ys).expect("non-empty finite samples");
        let (p_value, significant) = if xs.len() >= 2 && ys.len() >= 2 {
            let t = mann_whitney_u(&xs, &ys, alpha).expect("non-empty finite samples");
            (Some(t.p), Some(t.significant))
        } else {
            (None, None)
        };
        let lo = xs.iter().chain(&ys).copied().fold(f64::INFINITY, f64::min);
        let hi = xs
            .iter()
            .chain(&ys)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let rel = |v: &[f64]| {
            mean(
                &v.iter()
                    .map(|&c| relative_coverage(c, lo, hi).expect("within min and max"))
                    .collect::<Vec<_>>(),
            )
        };
        let counts = |mode: Mode| {
            let mut c = ComplianceCounts::default();
            for r in runs.iter().filter(|r| r.mode == mode) {
                c.add(&r.compliance);
            }
            c
        };
        let verdict = if a12 > 0.5 {
            Verdict::Better
        } else if a12 < 0.5 {
            Verdict::Worse
        } else {
            Verdict::Equal
        };
        let cc = counts(Mode::Constrained);
        let cu = counts(Mode::Unconstrained);
        compliance_constrained.add(&cc);
        compliance_unconstrained.add(&cu);
        included.extend(runs.iter().copied());
        modules.push(ModuleSummary {
            module: module.to_string(),
            runs: runs.len(),
            mean_coverage_constrained: mean(&xs),
            mean_coverage_unconstrained: mean(&ys),
            mean_relative_coverage_constrained: rel(&xs),
            mean_relative_coverage_unconstrained: rel(&ys),
            a12,
            p_value,
            significant,
            verdict,
            compliance_constrained: cc,
            compliance_unconstrained: cu,
        });
    }

    let count = |v: Verdict, sig: bool| {
        modules
            .iter()
            .filter(|m| m.verdict == v && (!sig || m.significant == Some(true)))
            .count()
    };
    Summary {
        better: count(Verdict::Better, false),
        better_significant: count(Verdict::Better, true),
        equal: count(Verdict::Equal, false),
        worse: count(Verdict::Worse, false),
        worse_significant: count(Verdict::Worse, true),
        mean_a12: mean(&modules.iter().map(|m| m.a12).collect::<Vec<_>>()),
        mean_relative_coverage_constrained: mean(
            &modules
                .iter()
                .map(|m| m.mean_relative_coverage_constrained)
                .collect::<Vec<_>>(),
        ),
        mean_relative_coverage_unconstrained: mean(
            &modules
                .iter()
                .map(|m| m.mean_relative_coverage_unconstrained)
                .collect::<Vec<_>>(),
        ),
        compliance_constrained,
        compliance_unconstrained,
        timeline: timeline_medians(&included),
        modules,
        excluded,
    }
}
