//! Detection metrics: confusion counts, rates, F1, and the ROC sweep.
//!
//! Aggregates come in two conventions, both reported: micro rates pool the
//! raw counts across every sample; macro rates first average per-group, the
//! way per-attack benchmark tables usually do, then derive precision and F1
//! using the pooled class sizes. The two disagree whenever group sizes are
//! uneven, so reports label which is which.

use serde::{Deserialize, Serialize};

use crate::detector::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn malicious(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn benign(&self) -> usize {
        self.fp + self.tn
    }
}

/// TPR/FPR/precision/F1 under one aggregation convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRates {
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub f1: f64,
}

/// F1 from precision and recall; 0 when undefined.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Micro-style rates straight from pooled counts.
pub fn rates_from_counts(counts: &ConfusionCounts) -> Option<AggregateRates> {
    if counts.malicious() == 0 || counts.benign() == 0 {
        return None;
    }
    let tpr = counts.tp as f64 / counts.malicious() as f64;
    let fpr = counts.fp as f64 / counts.benign() as f64;
    let flagged = counts.tp + counts.fp;
    let precision = if flagged == 0 {
        0.0
    } else {
        counts.tp as f64 / flagged as f64
    };
    Some(AggregateRates {
        tpr,
        fpr,
        precision,
        f1: f1_score(precision, tpr),
    })
}

/// Flag rate of one (group, label) slice: TPR for malicious groups, FPR for
/// benign groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: String,
    pub label: Label,
    pub total: usize,
    pub flagged: usize,
    pub rate: f64,
}

/// How often each branch fired per class; useful for reading ablations and
/// for auditing the visual branch's false-positive budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BranchCounts {
    pub vsi_flagged_benign: usize,
    pub vsi_flagged_malicious: usize,
    pub text_flagged_benign: usize,
    pub text_flagged_malicious: usize,
}

/// One operating point plus the area under the full curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (fpr, tpr) pairs, nondecreasing in both coordinates.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Corpus-level evaluation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    /// Pooled-count rates; absent when the corpus has a single label.
    pub micro: Option<AggregateRates>,
    /// Group-averaged rates; absent when the corpus has a single label.
    #[serde(rename = "macro")]
    pub macro_rates: Option<AggregateRates>,
    pub per_group: Vec<GroupMetrics>,
    pub branch: BranchCounts,
    /// Visual-score ROC over the corpus; present when scores were computed
    /// for both labels.
    pub roc: Option<RocCurve>,
    pub warnings: Vec<String>,
}

impl MetricsReport {
    /// Human-readable table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("group            label      flagged/total   rate\n");
        for g in &self.per_group {
            out.push_str(&format!(
                "{:<16} {:<10} {:>7}/{:<7} {:.4}  ({})\n",
                g.group,
                g.label.to_string(),
                g.flagged,
                g.total,
                g.rate,
                match g.label {
                    Label::Benign => "FPR",
                    Label::Malicious => "TPR",
                }
            ));
        }
        out.push_str(&format!(
            "counts: TP={} FP={} TN={} FN={}\n",
            self.counts.tp, self.counts.fp, self.counts.tn, self.counts.fn_
        ));
        if let Some(m) = &self.micro {
            out.push_str(&format!(
                "micro (pooled counts): TPR={:.4} FPR={:.4} precision={:.4} F1={:.4}\n",
                m.tpr, m.fpr, m.precision, m.f1
            ));
        }
        if let Some(m) = &self.macro_rates {
            out.push_str(&format!(
                "macro (group-averaged): TPR={:.4} FPR={:.4} precision={:.4} F1={:.4}\n",
                m.tpr, m.fpr, m.precision, m.f1
            ));
        }
        if let Some(roc) = &self.roc {
            out.push_str(&format!("visual-score AUC: {:.4}\n", roc.auc));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

/// ROC of the "score < τ" rule with τ swept over every observed score (plus a
/// final point for τ above the maximum). AUC by the trapezoidal rule.
///
/// Low scores indicate the positive (malicious) class.
pub fn roc_sweep(benign_scores: &[f64], malicious_scores: &[f64]) -> Result<RocCurve> {
    if benign_scores.is_empty() || malicious_scores.is_empty() {
        return Err(Error::invalid_input(
            "roc sweep needs nonempty benign and malicious score sets",
        ));
    }
    if benign_scores
        .iter()
        .chain(malicious_scores)
        .any(|s| !s.is_finite())
    {
        return Err(Error::invalid_input("roc sweep scores must be finite"));
    }

    let mut thresholds: Vec<f64> = benign_scores
        .iter()
        .chain(malicious_scores)
        .copied()
        .collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    thresholds.dedup();

    let frac_below = |scores: &[f64], t: f64| {
        scores.iter().filter(|&&s| s < t).count() as f64 / scores.len() as f64
    };

    let mut points = Vec::with_capacity(thresholds.len() + 2);
    points.push((0.0, 0.0));
    for &t in &thresholds {
        points.push((frac_below(benign_scores, t), frac_below(malicious_scores, t)));
    }
    points.push((1.0, 1.0));

    let mut auc = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok(RocCurve { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    /// Probability a malicious score falls below a benign one, ties half.
    fn pairwise_auc_oracle(benign: &[f64], malicious: &[f64]) -> f64 {
        let mut total = 0.0;
        for &m in malicious {
            for &b in benign {
                if m < b {
                    total += 1.0;
                } else if m == b {
                    total += 0.5;
                }
            }
        }
        total / (benign.len() * malicious.len()) as f64
    }

    #[test]
    fn hand_example_counts() {
        let counts = ConfusionCounts {
            tp: 8,
            fn_: 2,
            fp: 1,
            tn: 9,
        };
        let rates = rates_from_counts(&counts).unwrap();
        assert!((rates.tpr - 0.8).abs() < 1e-12);
        assert!((rates.fpr - 0.1).abs() < 1e-12);
        assert!((rates.precision - 8.0 / 9.0).abs() < 1e-12);
        assert!((rates.f1 - 0.8421052631578947).abs() < 1e-10);
    }

    #[test]
    fn f1_zero_when_undefined() {
        assert_eq!(f1_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn separable_scores_give_auc_one() {
        let benign = [10.0, 11.0, 12.0];
        let malicious = [1.0, 2.0, 3.0];
        let roc = roc_sweep(&benign, &malicious).unwrap();
        assert!((roc.auc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_distributions_give_half() {
        let scores = [1.0, 2.0, 3.0, 4.0];
        let roc = roc_sweep(&scores, &scores).unwrap();
        assert!((roc.auc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interleaved_hand_case_matches_oracle() {
        let benign = [2.0, 4.0];
        let malicious = [1.0, 3.0];
        let roc = roc_sweep(&benign, &malicious).unwrap();
        assert!((roc.auc - 0.75).abs() < 1e-12);
        assert!((roc.auc - pairwise_auc_oracle(&benign, &malicious)).abs() < 1e-12);
    }

    #[test]
    fn sweep_equals_pairwise_oracle_on_random_sets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let nb = rng.random_range(1..120);
            let nm = rng.random_range(1..120);
            // Coarse grid to force plenty of ties.
            let benign: Vec<f64> = (0..nb).map(|_| rng.random_range(0..30) as f64).collect();
            let malicious: Vec<f64> = (0..nm).map(|_| rng.random_range(0..30) as f64).collect();
            let roc = roc_sweep(&benign, &malicious).unwrap();
            let oracle = pairwise_auc_oracle(&benign, &malicious);
            assert!(
                (roc.auc - oracle).abs() < 1e-9,
                "sweep {} vs oracle {oracle}",
                roc.auc
            );
            assert!(roc.auc >= 0.0 && roc.auc <= 1.0);
            for pair in roc.points.windows(2) {
                assert!(pair[1].0 >= pair[0].0 && pair[1].1 >= pair[0].1);
            }
        }
    }

    #[test]
    fn empty_side_rejected() {
        assert!(roc_sweep(&[], &[1.0]).is_err());
        assert!(roc_sweep(&[1.0], &[]).is_err());
    }
}
