//! Threshold calibration and branch fusion.
//!
//! The visual threshold τ is the empirical lower-tail quantile of benign
//! stability scores at a false-positive budget α: with scores sorted
//! ascending and k = ⌊α·n⌋, τ = s_(k+1), so the fraction of benign scores
//! strictly below τ never exceeds α. τ is always one of the observed scores,
//! never interpolated, which keeps the guarantee exact on the calibration set
//! itself.
//!
//! Fusion is a logical OR of the two branches: an input is malicious when its
//! score falls below τ or any action cue matches. Either branch alone keeps
//! its recall; the benign budget is governed by α plus the rule set's own
//! false-alarm rate. The OR rule is isolated here so alternatives can be
//! swapped without touching the branches.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imaging::{vsi_score, Screenshot};
use crate::reversal::ReversalConfig;
use crate::textsignals::{
    extract_text, match_patterns, CueMatch, RuleSet, TextCandidateSet, TextExtractor,
};

/// Reference threshold from calibrating on the original evaluation corpus at
/// α = 0.05. Only meaningful under that corpus and gradient operator; treat
/// it as a documented default and recalibrate on a representative benign set.
pub const DEFAULT_TAU: f64 = 4450.0;

/// Default false-positive budget.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Calibration sets smaller than this make the ⌊α·n⌋ quantile degenerate at
/// the usual budgets (k = 0 for n < 20 at α = 0.05).
pub const MIN_CALIBRATION_SCORES: usize = 20;

/// Outcome of calibrating τ on a benign corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub tau: f64,
    pub alpha: f64,
    /// Sorted ascending; the scores the quantile was taken from.
    pub benign_scores: Vec<f64>,
    /// Empirical P(score < τ) on the calibration set.
    pub achieved_fpr: f64,
}

impl CalibrationResult {
    pub fn benign_count(&self) -> usize {
        self.benign_scores.len()
    }

    pub fn to_artifact(&self) -> CalibrationArtifact {
        CalibrationArtifact {
            tau: self.tau,
            alpha: Some(self.alpha),
            benign_count: Some(self.benign_count()),
            achieved_fpr: Some(self.achieved_fpr),
            score_digest: Some(score_digest(&self.benign_scores)),
            created_unix_secs: Some(
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            ),
            tool: format!("shotguard {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

/// The persisted calibration reference: everything a deployment needs to
/// apply and audit a threshold, without the raw scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationArtifact {
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benign_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved_fpr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_unix_secs: Option<u64>,
    pub tool: String,
}

impl CalibrationArtifact {
    /// Artifact for a manually supplied τ (no calibration data behind it).
    pub fn manual(tau: f64) -> Self {
        Self {
            tau,
            alpha: None,
            benign_count: None,
            achieved_fpr: None,
            score_digest: None,
            created_unix_secs: None,
            tool: "manual-override".into(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::Serialization(format!("calibration artifact does not parse: {e}"))
        })
    }
}

/// SHA-256 over the little-endian bit patterns of the sorted scores.
fn score_digest(sorted_scores: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for s in sorted_scores {
        hasher.update(s.to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(2 + digest.len() * 2);
    hex.push_str("sha256:");
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// The quantile rule alone, without the statistical-floor check. Exposed for
/// oracle tests and callers that knowingly work with tiny score sets.
pub fn quantile_threshold(scores: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid_input(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::Calibration("no benign scores supplied".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Calibration("benign scores must be finite".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = sorted.len();
    let k = (alpha * n as f64).floor() as usize;
    let tau = sorted[k.min(n - 1)];
    let below = sorted.iter().take_while(|&&s| s < tau).count();
    Ok((tau, below as f64 / n as f64))
}

/// Calibrate τ so the benign false-positive rate stays within α.
pub fn calibrate_threshold(benign_scores: &[f64], alpha: f64) -> Result<CalibrationResult> {
    if benign_scores.len() < MIN_CALIBRATION_SCORES {
        return Err(Error::Calibration(format!(
            "need at least {MIN_CALIBRATION_SCORES} benign scores, got {}",
            benign_scores.len()
        )));
    }
    let (tau, achieved_fpr) = quantile_threshold(benign_scores, alpha)?;
    let mut sorted = benign_scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    Ok(CalibrationResult {
        tau,
        alpha,
        benign_scores: sorted,
        achieved_fpr,
    })
}

/// Branch toggles for ablation runs. All-on reproduces [`decide`] exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationToggles {
    /// Visual branch: score-versus-τ flagging.
    pub use_vsi: bool,
    /// Contrast-polarity reversal: when off, only the original view is read.
    pub use_cpr: bool,
    /// Action-oriented matching: when off, any extracted text longer than a
    /// small floor flags, with no rule evidence.
    pub use_apd: bool,
}

impl Default for AblationToggles {
    fn default() -> Self {
        Self {
            use_vsi: true,
            use_cpr: true,
            use_apd: true,
        }
    }
}

/// Knobs that rarely change between calls.
#[derive(Debug, Clone)]
pub struct DetectorOptions {
    pub reversal: ReversalConfig,
    /// Propagate extraction failures instead of degrading to a visual-only
    /// verdict. Off by default: a pre-action guard that errors on an OCR
    /// outage would block all agent traffic.
    pub fail_closed: bool,
    /// Merged-text length that counts as "textual content present" for the
    /// rule-free ablation (use_apd = false).
    pub text_presence_floor: usize,
}

impl Default for DetectorOptions {
    fn default() -> Self {
        Self {
            reversal: ReversalConfig::default(),
            fail_closed: false,
            text_presence_floor: 10,
        }
    }
}

/// Binary outcome of a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Benign => write!(f, "benign"),
            Label::Malicious => write!(f, "malicious"),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benign" => Ok(Label::Benign),
            "malicious" => Ok(Label::Malicious),
            other => Err(Error::invalid_input(format!(
                "label must be 'benign' or 'malicious', got '{other}'"
            ))),
        }
    }
}

/// Visual-branch evidence: the score, the τ it was compared against, and the
/// resulting flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsiEvidence {
    pub flagged: bool,
    pub score: f64,
    pub tau: f64,
}

/// Wall-clock cost of each stage of one detection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BranchTimings {
    pub vsi_secs: f64,
    /// Reversal plus both extraction passes.
    pub extraction_secs: f64,
    pub matching_secs: f64,
    pub total_secs: f64,
}

/// Fused decision with per-branch evidence.
///
/// `label` is malicious exactly when the visual flag fired or at least one
/// cue matched, so a malicious verdict always carries evidence. `degraded`
/// records that text extraction was unavailable and the decision came from
/// the visual branch alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub vsi: Option<VsiEvidence>,
    pub cue_matches: Vec<CueMatch>,
    /// True when the ablation-free text branch flagged without rules
    /// (use_apd = false) — kept separate from rule evidence.
    pub text_presence_flag: bool,
    pub degraded: bool,
    pub branch_timings: BranchTimings,
}

impl Verdict {
    pub fn is_malicious(&self) -> bool {
        self.label == Label::Malicious
    }
}

/// Full-pipeline decision: visual flag OR any cue match.
pub fn decide(
    img: &Screenshot,
    calib: &CalibrationArtifact,
    rules: &RuleSet,
    engine: &dyn TextExtractor,
) -> Result<Verdict> {
    decide_with(img, calib, rules, engine, AblationToggles::default(), &DetectorOptions::default())
}

/// [`decide`] with branch toggles; all-on is bit-identical to `decide`.
pub fn decide_ablated(
    img: &Screenshot,
    calib: &CalibrationArtifact,
    rules: &RuleSet,
    engine: &dyn TextExtractor,
    toggles: AblationToggles,
) -> Result<Verdict> {
    decide_with(img, calib, rules, engine, toggles, &DetectorOptions::default())
}

/// Fully parameterized decision path.
pub fn decide_with(
    img: &Screenshot,
    calib: &CalibrationArtifact,
    rules: &RuleSet,
    engine: &dyn TextExtractor,
    toggles: AblationToggles,
    opts: &DetectorOptions,
) -> Result<Verdict> {
    let started = Instant::now();

    let mut vsi = None;
    let mut vsi_secs = 0.0;
    if toggles.use_vsi {
        let t0 = Instant::now();
        let report = vsi_score(img)?;
        vsi_secs = t0.elapsed().as_secs_f64();
        vsi = Some(VsiEvidence {
            flagged: report.score < calib.tau,
            score: report.score,
            tau: calib.tau,
        });
    }

    let t1 = Instant::now();
    let mut degraded = false;
    let candidates = if toggles.use_cpr {
        extract_text(img, engine, &opts.reversal)
    } else {
        // Reversal disabled: read only the original rendering.
        engine
            .extract(img)
            .map(|frags| TextCandidateSet::from_views(frags, Vec::new()))
    };
    let candidates = match candidates {
        Ok(set) => set,
        Err(e) if e.is_extraction_failure() && !opts.fail_closed => {
            degraded = true;
            // A timeout may still have produced one view's fragments.
            if let Error::ExtractionTimeout { partial, .. } = e {
                TextCandidateSet::from_fragments(partial)
            } else {
                TextCandidateSet::empty()
            }
        }
        Err(e) => return Err(e),
    };
    let extraction_secs = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let mut cue_matches = Vec::new();
    let mut text_presence_flag = false;
    if toggles.use_apd {
        cue_matches = match_patterns(&candidates, rules);
    } else {
        text_presence_flag = candidates.merged_text().len() >= opts.text_presence_floor;
    }
    let matching_secs = t2.elapsed().as_secs_f64();

    let visual_flag = vsi.map(|v| v.flagged).unwrap_or(false);
    let textual_flag = !cue_matches.is_empty() || text_presence_flag;
    let label = if visual_flag || textual_flag {
        Label::Malicious
    } else {
        Label::Benign
    };

    Ok(Verdict {
        label,
        vsi,
        cue_matches,
        text_presence_flag,
        degraded,
        branch_timings: BranchTimings {
            vsi_secs,
            extraction_secs,
            matching_secs,
            total_secs: started.elapsed().as_secs_f64(),
        },
    })
}
