//! Benchmark harness: corpus ingestion, detection metrics, robustness
//! sweeps, and per-stage latency profiling.

mod manifest;
mod metrics;
pub mod synth;

pub use manifest::{decode_image, encode_png, load_manifest, save_manifest, ManifestEntry};
pub use metrics::{
    f1_score, rates_from_counts, roc_sweep, AggregateRates, BranchCounts, ConfusionCounts,
    GroupMetrics, MetricsReport, RocCurve,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{decide_with, AblationToggles, CalibrationArtifact, DetectorOptions, Label};
use crate::error::{Error, Result};
use crate::imaging::{add_gaussian_noise, NoiseSpec, Screenshot};
use crate::textsignals::{RuleSet, TextExtractor};

/// A decoded, labeled corpus member.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub image: Screenshot,
    pub label: Label,
    pub group: String,
}

/// Everything needed to run the detector over a corpus.
pub struct EvalConfig<'a> {
    pub calib: &'a CalibrationArtifact,
    pub rules: &'a RuleSet,
    pub engine: &'a dyn TextExtractor,
    pub toggles: AblationToggles,
    pub opts: DetectorOptions,
    /// Worker bound for corpus evaluation; 0 picks the rayon default.
    pub workers: usize,
}

impl<'a> EvalConfig<'a> {
    pub fn new(
        calib: &'a CalibrationArtifact,
        rules: &'a RuleSet,
        engine: &'a dyn TextExtractor,
    ) -> Self {
        Self {
            calib,
            rules,
            engine,
            toggles: AblationToggles::default(),
            opts: DetectorOptions::default(),
            workers: 0,
        }
    }

    pub fn with_toggles(mut self, toggles: AblationToggles) -> Self {
        self.toggles = toggles;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

struct Outcome {
    label: Label,
    flagged: bool,
    vsi_flagged: bool,
    text_flagged: bool,
    score: Option<f64>,
    group: String,
}

/// Run the detector over in-memory items and reduce to a metrics report.
/// Output ordering is deterministic regardless of worker count.
pub fn evaluate_items(items: &[CorpusItem], cfg: &EvalConfig) -> Result<MetricsReport> {
    if items.is_empty() {
        return Err(Error::invalid_input("corpus is empty"));
    }

    let run = |item: &CorpusItem| -> Result<Outcome> {
        let verdict = decide_with(
            &item.image,
            cfg.calib,
            cfg.rules,
            cfg.engine,
            cfg.toggles,
            &cfg.opts,
        )?;
        Ok(Outcome {
            label: item.label,
            flagged: verdict.is_malicious(),
            vsi_flagged: verdict.vsi.map(|v| v.flagged).unwrap_or(false),
            text_flagged: !verdict.cue_matches.is_empty() || verdict.text_presence_flag,
            score: verdict.vsi.map(|v| v.score),
            group: item.group.clone(),
        })
    };

    let outcomes: Vec<Outcome> = if cfg.workers == 1 {
        items.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::invalid_input(format!("cannot build worker pool: {e}")))?;
        pool.install(|| items.par_iter().map(run).collect::<Result<_>>())?
    };

    Ok(reduce(&outcomes))
}

/// Decode a manifest's images and evaluate them.
pub fn evaluate_corpus(entries: &[ManifestEntry], cfg: &EvalConfig) -> Result<MetricsReport> {
    let items = entries
        .iter()
        .map(|e| {
            Ok(CorpusItem {
                image: decode_image(&e.image_path)?,
                label: e.label,
                group: e.group.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_items(&items, cfg)
}

fn reduce(outcomes: &[Outcome]) -> MetricsReport {
    let mut counts = ConfusionCounts::default();
    let mut branch = BranchCounts::default();
    let mut benign_scores = Vec::new();
    let mut malicious_scores = Vec::new();

    for o in outcomes {
        match (o.label, o.flagged) {
            (Label::Malicious, true) => counts.tp += 1,
            (Label::Malicious, false) => counts.fn_ += 1,
            (Label::Benign, true) => counts.fp += 1,
            (Label::Benign, false) => counts.tn += 1,
        }
        match o.label {
            Label::Benign => {
                branch.vsi_flagged_benign += o.vsi_flagged as usize;
                branch.text_flagged_benign += o.text_flagged as usize;
                if let Some(s) = o.score {
                    benign_scores.push(s);
                }
            }
            Label::Malicious => {
                branch.vsi_flagged_malicious += o.vsi_flagged as usize;
                branch.text_flagged_malicious += o.text_flagged as usize;
                if let Some(s) = o.score {
                    malicious_scores.push(s);
                }
            }
        }
    }

    // Per-(group, label) slices, benign first, each alphabetical.
    let mut keys: Vec<(String, Label)> = Vec::new();
    for o in outcomes {
        let key = (o.group.clone(), o.label);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort_by(|a, b| {
        let rank = |l: &Label| matches!(l, Label::Malicious) as u8;
        (rank(&a.1), &a.0).cmp(&(rank(&b.1), &b.0))
    });
    let per_group: Vec<GroupMetrics> = keys
        .into_iter()
        .map(|(group, label)| {
            let slice: Vec<&Outcome> = outcomes
                .iter()
                .filter(|o| o.group == group && o.label == label)
                .collect();
            let total = slice.len();
            let flagged = slice.iter().filter(|o| o.flagged).count();
            GroupMetrics {
                group,
                label,
                total,
                flagged,
                rate: flagged as f64 / total as f64,
            }
        })
        .collect();

    let mut warnings = Vec::new();
    let micro = rates_from_counts(&counts);
    if micro.is_none() {
        warnings.push(
            "corpus contains a single label; aggregate rates and F1 omitted".to_string(),
        );
    }

    let macro_rates = micro.map(|_| {
        let mean_rate = |label: Label| {
            let rates: Vec<f64> = per_group
                .iter()
                .filter(|g| g.label == label)
                .map(|g| g.rate)
                .collect();
            rates.iter().sum::<f64>() / rates.len() as f64
        };
        let tpr = mean_rate(Label::Malicious);
        let fpr = mean_rate(Label::Benign);
        // Precision under macro rates, scaled by the pooled class sizes.
        let est_tp = tpr * counts.malicious() as f64;
        let est_fp = fpr * counts.benign() as f64;
        let precision = if est_tp + est_fp == 0.0 {
            0.0
        } else {
            est_tp / (est_tp + est_fp)
        };
        AggregateRates {
            tpr,
            fpr,
            precision,
            f1: f1_score(precision, tpr),
        }
    });

    let roc = if !benign_scores.is_empty() && !malicious_scores.is_empty() {
        roc_sweep(&benign_scores, &malicious_scores).ok()
    } else {
        None
    };

    MetricsReport {
        counts,
        micro,
        macro_rates,
        per_group,
        branch,
        roc,
        warnings,
    }
}

/// One row of a noise-robustness sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub sigma: f64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub seed: u64,
    pub rows: Vec<RobustnessRow>,
}

/// Deterministic per-image noise seed: one stream per (corpus seed, sigma
/// index, image index), independent of platform hashing.
fn derive_seed(seed: u64, sigma_index: usize, image_index: usize) -> u64 {
    let mut z = seed
        ^ (sigma_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (image_index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Evaluate the corpus under each noise level. The σ = 0 row is the
/// unperturbed evaluation, byte for byte.
pub fn robustness_sweep(
    items: &[CorpusItem],
    sigmas: &[f64],
    seed: u64,
    cfg: &EvalConfig,
) -> Result<RobustnessReport> {
    let mut rows = Vec::with_capacity(sigmas.len());
    for (si, &sigma) in sigmas.iter().enumerate() {
        let spec_check = NoiseSpec::new(sigma, 0)?;
        let perturbed: Vec<CorpusItem> = items
            .iter()
            .enumerate()
            .map(|(i, item)| CorpusItem {
                image: add_gaussian_noise(
                    &item.image,
                    &NoiseSpec {
                        sigma: spec_check.sigma,
                        seed: derive_seed(seed, si, i),
                    },
                ),
                label: item.label,
                group: item.group.clone(),
            })
            .collect();
        rows.push(RobustnessRow {
            sigma,
            metrics: evaluate_items(&perturbed, cfg)?,
        });
    }
    Ok(RobustnessReport { seed, rows })
}

/// Mean per-stage wall-clock cost over a corpus.
///
/// Stage means exclude the first image when more than one is available; the
/// first pass pays one-off costs (engine spawn, page cache) that per-image
/// averages would misstate. `total_mean_secs` is the sum of the stage means
/// and `proportions` are each stage's share of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub vsi_mean_secs: f64,
    pub extraction_mean_secs: f64,
    pub matching_mean_secs: f64,
    pub total_mean_secs: f64,
    /// Shares of (vsi, extraction, matching) in the total.
    pub proportions: [f64; 3],
    pub first_image_secs: Option<f64>,
    pub images_timed: usize,
}

impl TimingReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("stage        mean seconds   share\n");
        out.push_str(&format!(
            "vsi          {:>12.6}   {:>5.1}%\n",
            self.vsi_mean_secs,
            self.proportions[0] * 100.0
        ));
        out.push_str(&format!(
            "cpr+ocr      {:>12.6}   {:>5.1}%\n",
            self.extraction_mean_secs,
            self.proportions[1] * 100.0
        ));
        out.push_str(&format!(
            "apd          {:>12.6}   {:>5.1}%\n",
            self.matching_mean_secs,
            self.proportions[2] * 100.0
        ));
        out.push_str(&format!("total        {:>12.6}\n", self.total_mean_secs));
        if let Some(first) = self.first_image_secs {
            out.push_str(&format!(
                "first image  {first:>12.6}   (excluded from means)\n"
            ));
        }
        out.push_str(&format!("images timed: {}\n", self.images_timed));
        out
    }
}

/// Profile per-stage latency, single-threaded to keep timings honest.
pub fn profile_runtime(items: &[CorpusItem], cfg: &EvalConfig) -> Result<TimingReport> {
    if items.is_empty() {
        return Err(Error::invalid_input("corpus is empty"));
    }
    let mut timings = Vec::with_capacity(items.len());
    for item in items {
        let verdict = decide_with(
            &item.image,
            cfg.calib,
            cfg.rules,
            cfg.engine,
            cfg.toggles,
            &cfg.opts,
        )?;
        timings.push(verdict.branch_timings);
    }

    let (first_image_secs, timed) = if timings.len() >= 2 {
        (Some(timings[0].total_secs), &timings[1..])
    } else {
        (None, &timings[..])
    };
    let n = timed.len() as f64;
    let vsi = timed.iter().map(|t| t.vsi_secs).sum::<f64>() / n;
    let extraction = timed.iter().map(|t| t.extraction_secs).sum::<f64>() / n;
    let matching = timed.iter().map(|t| t.matching_secs).sum::<f64>() / n;
    let total = vsi + extraction + matching;
    let proportions = if total > 0.0 {
        [vsi / total, extraction / total, matching / total]
    } else {
        [0.0; 3]
    };
    Ok(TimingReport {
        vsi_mean_secs: vsi,
        extraction_mean_secs: extraction,
        matching_mean_secs: matching,
        total_mean_secs: total,
        proportions,
        first_image_secs,
        images_timed: timed.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::synth::{generate, SynthSpec};
    use super::*;
    use crate::detector::calibrate_threshold;
    use crate::imaging::vsi_score;
    use crate::textsignals::GlyphExtractor;

    fn small_spec() -> SynthSpec {
        SynthSpec {
            benign_embed: 6,
            benign_screenshot: 6,
            overlay: 4,
            popup: 3,
            washed: 3,
            content: 2,
            concealed: 2,
            width: 320,
            height: 240,
            ..SynthSpec::default()
        }
    }

    fn calibrated_artifact() -> CalibrationArtifact {
        let benign = super::synth::generate_benign(30, 1234, 320, 240);
        let scores: Vec<f64> = benign.iter().map(|b| vsi_score(b).unwrap().score).collect();
        calibrate_threshold(&scores, 0.05).unwrap().to_artifact()
    }

    #[test]
    fn full_pipeline_separates_the_synthetic_corpus() {
        let calib = calibrated_artifact();
        let rules = RuleSet::default_rules();
        let engine = GlyphExtractor::default();
        let cfg = EvalConfig::new(&calib, &rules, &engine);
        let items = generate(&small_spec());
        let report = evaluate_items(&items, &cfg).unwrap();
        let micro = report.micro.unwrap();
        assert!(micro.tpr >= 0.9, "low TPR: {micro:?}\n{}", report.render_table());
        assert!(micro.fpr <= 0.1, "high FPR: {micro:?}\n{}", report.render_table());
        assert!(report.roc.is_some());
    }

    #[test]
    fn single_label_corpus_warns_and_keeps_groups() {
        let calib = calibrated_artifact();
        let rules = RuleSet::default_rules();
        let engine = GlyphExtractor::default();
        let cfg = EvalConfig::new(&calib, &rules, &engine);
        let items: Vec<CorpusItem> = generate(&small_spec())
            .into_iter()
            .filter(|i| i.label == Label::Benign)
            .collect();
        let report = evaluate_items(&items, &cfg).unwrap();
        assert!(report.micro.is_none());
        assert!(!report.warnings.is_empty());
        assert!(!report.per_group.is_empty());
    }

    #[test]
    fn evaluation_is_order_deterministic_across_worker_counts() {
        let calib = calibrated_artifact();
        let rules = RuleSet::default_rules();
        let engine = GlyphExtractor::default();
        let items = generate(&small_spec());
        let serial = evaluate_items(&items, &EvalConfig::new(&calib, &rules, &engine).with_workers(1)).unwrap();
        let parallel =
            evaluate_items(&items, &EvalConfig::new(&calib, &rules, &engine).with_workers(4)).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn sigma_zero_row_is_bit_identical_to_direct_evaluation() {
        let calib = calibrated_artifact();
        let rules = RuleSet::default_rules();
        let engine = GlyphExtractor::default();
        let cfg = EvalConfig::new(&calib, &rules, &engine);
        let items = generate(&small_spec());
        let direct = evaluate_items(&items, &cfg).unwrap();
        let sweep = robustness_sweep(&items, &[0.0], 42, &cfg).unwrap();
        assert_eq!(sweep.rows[0].metrics, direct);
    }

    #[test]
    fn sweep_is_reproducible_under_fixed_seed() {
        let calib = calibrated_artifact();
        let rules = RuleSet::default_rules();
        let engine = GlyphExtractor::default();
        let cfg = EvalConfig::new(&calib, &rules, &engine);
        let items: Vec<CorpusItem> = generate(&small_spec()).into_iter().take(10).collect();
        let a = robustness_sweep(&items, &[0.0, 25.0], 9, &cfg).unwrap();
        let b = robustness_sweep(&items, &[0.0, 25.0], 9, &cfg).unwrap();
        assert_eq!(a, b);
        let json_a = serde_json::to_string(&a).unwrap();
        let json_b = serde_json::to_string(&b).unwrap();
        assert_eq!(json_a, json_b);
    }

    #[test]
    fn negative_sigma_rejected() {
        let calib = calibrated_artifact();
        let rules = RuleSet::default_rules();
        let engine = GlyphExtractor::default();
        let cfg = EvalConfig::new(&calib, &rules, &engine);
        let items = generate(&small_spec());
        assert!(robustness_sweep(&items, &[-1.0], 1, &cfg).is_err());
    }

    #[test]
    fn profiling_reports_consistent_stage_shares() {
        let calib = calibrated_artifact();
        let rules = RuleSet::default_rules();
        let engine = GlyphExtractor::default();
        let cfg = EvalConfig::new(&calib, &rules, &engine);
        let items: Vec<CorpusItem> = generate(&small_spec()).into_iter().take(6).collect();
        let report = profile_runtime(&items, &cfg).unwrap();
        assert_eq!(report.images_timed, 5);
        assert!(report.first_image_secs.is_some());
        let share_sum: f64 = report.proportions.iter().sum();
        assert!((share_sum - 1.0).abs() < 0.01);
        let stage_sum =
            report.vsi_mean_secs + report.extraction_mean_secs + report.matching_mean_secs;
        assert!((stage_sum - report.total_mean_secs).abs() < 1e-12);
    }
}
