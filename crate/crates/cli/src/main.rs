//! Command-line front end: calibrate, detect, bench, perturb, profile,
//! rules, synth.
//!
//! Exit codes are a stable contract for shell-level agent wrappers:
//! 0 benign/success, 2 malicious, 1 runtime error, 64 usage error. A wrapper
//! can gate an agent action on `shotguard detect page.png` without parsing
//! any output.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shotguard::bench::{
    self, evaluate_corpus, load_manifest, profile_runtime, robustness_sweep, synth, CorpusItem,
    EvalConfig,
};
use shotguard::detector::{
    calibrate_threshold, decide_with, AblationToggles, CalibrationArtifact, DetectorOptions,
    Verdict, DEFAULT_ALPHA, DEFAULT_TAU,
};
use shotguard::imaging::vsi_score;
use shotguard::reversal::{ReversalConfig, DEFAULT_GAMMA};
use shotguard::textsignals::{
    load_ruleset, GlyphExtractor, NullExtractor, RuleSet, TesseractConfig, TesseractExtractor,
    TextExtractor,
};
use shotguard::Error;

const EXIT_BENIGN: u8 = 0;
const EXIT_RUNTIME: u8 = 1;
const EXIT_MALICIOUS: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "shotguard",
    version,
    about = "Screenshot-level prompt injection detection and benchmarking",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the visual threshold on a directory of benign screenshots
    Calibrate(CalibrateArgs),
    /// Decide whether one screenshot carries an injection payload
    Detect(DetectArgs),
    /// Evaluate a labeled corpus and report detection metrics
    Bench(BenchArgs),
    /// Re-evaluate a corpus under increasing Gaussian noise
    Perturb(PerturbArgs),
    /// Profile per-stage latency over a corpus
    Profile(ProfileArgs),
    /// Rule file utilities
    Rules(RulesCmd),
    /// Generate the synthetic benchmark corpus
    Synth(SynthArgs),
}

#[derive(Args)]
struct EngineArgs {
    /// Text extraction engine: tesseract | tesseract-alt | builtin | none
    #[arg(long, default_value = "tesseract", value_parser = ["tesseract", "tesseract-alt", "builtin", "none"])]
    engine: String,

    /// OCR executable path
    #[arg(long, env = "SHOTGUARD_OCR_CMD")]
    ocr_cmd: Option<PathBuf>,

    /// OCR language pack
    #[arg(long, env = "SHOTGUARD_OCR_LANG", default_value = "eng")]
    ocr_lang: String,

    /// Per-invocation OCR timeout in seconds
    #[arg(long, env = "SHOTGUARD_OCR_TIMEOUT_SECS", default_value_t = 20.0)]
    ocr_timeout_secs: f64,
}

impl EngineArgs {
    fn build(&self) -> Box<dyn TextExtractor> {
        let tesseract = |base: TesseractConfig| {
            let mut cfg = base
                .with_language(self.ocr_lang.clone())
                .with_timeout(std::time::Duration::from_secs_f64(self.ocr_timeout_secs));
            if let Some(cmd) = &self.ocr_cmd {
                cfg = cfg.with_executable(cmd.clone());
            }
            cfg
        };
        match self.engine.as_str() {
            "tesseract" => Box::new(TesseractExtractor::new(tesseract(TesseractConfig::standard()))),
            "tesseract-alt" => {
                Box::new(TesseractExtractor::new(tesseract(TesseractConfig::alternative())))
            }
            "builtin" => Box::new(GlyphExtractor::default()),
            _ => Box::new(NullExtractor),
        }
    }
}

#[derive(Args)]
struct ThresholdArgs {
    /// Calibration artifact produced by `calibrate`
    #[arg(long, conflicts_with = "tau")]
    calibration: Option<PathBuf>,

    /// Explicit threshold override (default when neither flag is given)
    #[arg(long)]
    tau: Option<f64>,
}

impl ThresholdArgs {
    fn artifact(&self) -> Result<CalibrationArtifact, Error> {
        match (&self.calibration, self.tau) {
            (Some(path), _) => CalibrationArtifact::load(path),
            (None, Some(tau)) => Ok(CalibrationArtifact::manual(tau)),
            (None, None) => Ok(CalibrationArtifact::manual(DEFAULT_TAU)),
        }
    }
}

#[derive(Args)]
struct DetectorArgs {
    /// Rule file (default: built-in rule set)
    #[arg(long)]
    rules: Option<PathBuf>,

    /// Near-white reversal threshold
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,

    /// Skip the visual (score) branch
    #[arg(long)]
    no_vsi: bool,

    /// Skip contrast reversal: read only the original view
    #[arg(long)]
    no_cpr: bool,

    /// Replace rule matching with a bare text-presence check
    #[arg(long)]
    no_apd: bool,

    /// Error out when text extraction is unavailable instead of degrading
    /// to a visual-only verdict
    #[arg(long)]
    fail_closed: bool,
}

impl DetectorArgs {
    fn ruleset(&self) -> Result<RuleSet, Error> {
        match &self.rules {
            Some(path) => load_ruleset(path),
            None => Ok(RuleSet::default_rules()),
        }
    }

    fn toggles(&self) -> AblationToggles {
        AblationToggles {
            use_vsi: !self.no_vsi,
            use_cpr: !self.no_cpr,
            use_apd: !self.no_apd,
        }
    }

    fn options(&self) -> Result<DetectorOptions, Error> {
        Ok(DetectorOptions {
            reversal: ReversalConfig::new(self.gamma)?,
            fail_closed: self.fail_closed,
            ..DetectorOptions::default()
        })
    }
}

#[derive(Args)]
struct CalibrateArgs {
    /// Directory of benign screenshots (png/jpg)
    benign_dir: PathBuf,

    /// False-positive budget
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,

    /// Where to write the calibration artifact
    #[arg(long, default_value = "calibration.json")]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Screenshot to analyze
    image: PathBuf,

    #[command(flatten)]
    threshold: ThresholdArgs,

    #[command(flatten)]
    detector: DetectorArgs,

    #[command(flatten)]
    engine: EngineArgs,

    /// Also write the verdict as JSON ("-" for stdout)
    #[arg(long)]
    json: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Corpus manifest (csv: path,label,group)
    manifest: PathBuf,

    #[command(flatten)]
    threshold: ThresholdArgs,

    #[command(flatten)]
    detector: DetectorArgs,

    #[command(flatten)]
    engine: EngineArgs,

    /// Worker bound for corpus evaluation (0 = automatic)
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Write the metrics report as JSON
    #[arg(long)]
    out: Option<PathBuf>,

    /// Export ROC points as CSV (fpr,tpr)
    #[arg(long)]
    roc_out: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    /// Corpus manifest (csv: path,label,group)
    manifest: PathBuf,

    /// Noise levels to sweep
    #[arg(long, value_delimiter = ',', required = true)]
    sigmas: Vec<f64>,

    /// Noise RNG seed
    #[arg(long, default_value_t = 7)]
    seed: u64,

    #[command(flatten)]
    threshold: ThresholdArgs,

    #[command(flatten)]
    detector: DetectorArgs,

    #[command(flatten)]
    engine: EngineArgs,

    /// Worker bound for corpus evaluation (0 = automatic)
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Write the sweep report as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Corpus manifest (csv: path,label,group)
    manifest: PathBuf,

    #[command(flatten)]
    threshold: ThresholdArgs,

    #[command(flatten)]
    detector: DetectorArgs,

    #[command(flatten)]
    engine: EngineArgs,

    /// Write the timing report as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RulesCmd {
    #[command(subcommand)]
    action: RulesAction,
}

#[derive(Subcommand)]
enum RulesAction {
    /// Validate a rule file
    Check {
        /// Rule file to validate
        file: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for images and manifest
    dir: PathBuf,

    #[arg(long, default_value_t = 7)]
    seed: u64,

    #[arg(long, default_value_t = 480)]
    width: usize,

    #[arg(long, default_value_t = 320)]
    height: usize,

    #[arg(long, default_value_t = 24)]
    benign_embed: usize,

    #[arg(long, default_value_t = 24)]
    benign_screenshot: usize,

    #[arg(long, default_value_t = 12)]
    overlay: usize,

    #[arg(long, default_value_t = 12)]
    popup: usize,

    #[arg(long, default_value_t = 12)]
    washed: usize,

    #[arg(long, default_value_t = 8)]
    content: usize,

    #[arg(long, default_value_t = 8)]
    concealed: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Calibrate(args) => run_calibrate(args),
        Command::Detect(args) => run_detect(args),
        Command::Bench(args) => run_bench(args),
        Command::Perturb(args) => run_perturb(args),
        Command::Profile(args) => run_profile(args),
        Command::Rules(cmd) => run_rules(cmd),
        Command::Synth(args) => run_synth(args),
    }
}

fn collect_images(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn run_calibrate(args: CalibrateArgs) -> Result<u8, Error> {
    let paths = collect_images(&args.benign_dir)?;
    if paths.is_empty() {
        return Err(Error::invalid_input(format!(
            "no png/jpg images in {}",
            args.benign_dir.display()
        )));
    }
    let mut scores = Vec::with_capacity(paths.len());
    for path in &paths {
        let img = bench::decode_image(path)?;
        scores.push(vsi_score(&img)?.score);
    }
    let result = calibrate_threshold(&scores, args.alpha)?;
    let artifact = result.to_artifact();
    artifact.save(&args.out)?;
    println!(
        "calibrated on {} images: tau={:.6} alpha={} achieved_fpr={:.4}",
        result.benign_count(),
        result.tau,
        result.alpha,
        result.achieved_fpr
    );
    println!("wrote {}", args.out.display());
    Ok(EXIT_BENIGN)
}

fn print_verdict(verdict: &Verdict) {
    println!("verdict: {}", verdict.label);
    if let Some(vsi) = &verdict.vsi {
        println!(
            "vsi: score={:.3} tau={:.3} flagged={}",
            vsi.score, vsi.tau, vsi.flagged
        );
    }
    for m in &verdict.cue_matches {
        println!(
            "cue: {} rule={} view={} span=\"{}\"",
            m.category, m.rule_id, m.source_view, m.matched_span
        );
    }
    if verdict.text_presence_flag {
        println!("cue: text-presence (rule matching disabled)");
    }
    if verdict.degraded {
        println!("degraded: text extraction unavailable, visual branch only");
    }
    let t = &verdict.branch_timings;
    println!(
        "timing: vsi={:.4}s extraction={:.4}s matching={:.4}s total={:.4}s",
        t.vsi_secs, t.extraction_secs, t.matching_secs, t.total_secs
    );
}

fn run_detect(args: DetectArgs) -> Result<u8, Error> {
    let img = bench::decode_image(&args.image)?;
    let calib = args.threshold.artifact()?;
    let rules = args.detector.ruleset()?;
    let engine = args.engine.build();
    let verdict = decide_with(
        &img,
        &calib,
        &rules,
        engine.as_ref(),
        args.detector.toggles(),
        &args.detector.options()?,
    )?;

    print_verdict(&verdict);
    if let Some(target) = &args.json {
        let json = serde_json::to_string_pretty(&verdict)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        if target == "-" {
            println!("{json}");
        } else {
            std::fs::write(target, json + "\n")?;
        }
    }
    Ok(if verdict.is_malicious() {
        EXIT_MALICIOUS
    } else {
        EXIT_BENIGN
    })
}

fn load_corpus(manifest: &Path) -> Result<Vec<CorpusItem>, Error> {
    let entries = load_manifest(manifest)?;
    entries
        .iter()
        .map(|e| {
            Ok(CorpusItem {
                image: bench::decode_image(&e.image_path)?,
                label: e.label,
                group: e.group.clone(),
            })
        })
        .collect()
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), Error> {
    let json =
        serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    std::fs::write(path, json + "\n")?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<u8, Error> {
    let entries = load_manifest(&args.manifest)?;
    let calib = args.threshold.artifact()?;
    let rules = args.detector.ruleset()?;
    let engine = args.engine.build();
    let cfg = EvalConfig {
        calib: &calib,
        rules: &rules,
        engine: engine.as_ref(),
        toggles: args.detector.toggles(),
        opts: args.detector.options()?,
        workers: args.workers,
    };
    let report = evaluate_corpus(&entries, &cfg)?;
    print!("{}", report.render_table());
    if let Some(out) = &args.out {
        write_json(&report, out)?;
    }
    if let Some(roc_out) = &args.roc_out {
        match &report.roc {
            Some(roc) => {
                let mut text = String::from("fpr,tpr\n");
                for (fpr, tpr) in &roc.points {
                    text.push_str(&format!("{fpr},{tpr}\n"));
                }
                std::fs::write(roc_out, text)?;
                println!("wrote {}", roc_out.display());
            }
            None => eprintln!("warning: no ROC available (visual scores missing for one label)"),
        }
    }
    Ok(EXIT_BENIGN)
}

fn run_perturb(args: PerturbArgs) -> Result<u8, Error> {
    let items = load_corpus(&args.manifest)?;
    let calib = args.threshold.artifact()?;
    let rules = args.detector.ruleset()?;
    let engine = args.engine.build();
    let cfg = EvalConfig {
        calib: &calib,
        rules: &rules,
        engine: engine.as_ref(),
        toggles: args.detector.toggles(),
        opts: args.detector.options()?,
        workers: args.workers,
    };
    let report = robustness_sweep(&items, &args.sigmas, args.seed, &cfg)?;
    println!("sigma     TPR      FPR      F1  (micro)");
    for row in &report.rows {
        match &row.metrics.micro {
            Some(m) => println!(
                "{:<8} {:.4}   {:.4}   {:.4}",
                row.sigma, m.tpr, m.fpr, m.f1
            ),
            None => println!("{:<8} (single-label corpus)", row.sigma),
        }
    }
    if let Some(out) = &args.out {
        write_json(&report, out)?;
    }
    Ok(EXIT_BENIGN)
}

fn run_profile(args: ProfileArgs) -> Result<u8, Error> {
    let items = load_corpus(&args.manifest)?;
    let calib = args.threshold.artifact()?;
    let rules = args.detector.ruleset()?;
    let engine = args.engine.build();
    let cfg = EvalConfig {
        calib: &calib,
        rules: &rules,
        engine: engine.as_ref(),
        toggles: args.detector.toggles(),
        opts: args.detector.options()?,
        workers: 1,
    };
    let report = profile_runtime(&items, &cfg)?;
    print!("{}", report.render_table());
    if let Some(out) = &args.out {
        write_json(&report, out)?;
    }
    Ok(EXIT_BENIGN)
}

fn run_rules(cmd: RulesCmd) -> Result<u8, Error> {
    match cmd.action {
        RulesAction::Check { file } => {
            let rules = load_ruleset(&file)?;
            println!(
                "ok: {} rules across {} categories",
                rules.len(),
                rules.categories().len()
            );
            Ok(EXIT_BENIGN)
        }
    }
}

fn run_synth(args: SynthArgs) -> Result<u8, Error> {
    let spec = synth::SynthSpec {
        seed: args.seed,
        width: args.width,
        height: args.height,
        benign_embed: args.benign_embed,
        benign_screenshot: args.benign_screenshot,
        overlay: args.overlay,
        popup: args.popup,
        washed: args.washed,
        content: args.content,
        concealed: args.concealed,
    };
    if spec.total() == 0 {
        return Err(Error::invalid_input("corpus spec totals zero images"));
    }
    std::fs::create_dir_all(&args.dir)?;
    let manifest = synth::write_corpus(&args.dir, &spec)?;
    println!("wrote {} images", spec.total());
    println!("manifest: {}", manifest.display());
    Ok(EXIT_BENIGN)
}
