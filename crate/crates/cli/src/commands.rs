use std::fs;
use std::path::{Path, PathBuf};

use sonobiometry::backend::{default_phantom_spec, FixtureScorer, FrameScorer, PhantomScorer, PhantomSpec};
use sonobiometry::ingest::load_study;
use sonobiometry::par::Exec;
use sonobiometry::pipeline::{
    analyze_study_with, evaluate_backend, frames_csv, load_truth_dir, EvalError, PipelineError,
};

use crate::args::{AnalyzeArgs, EvaluateArgs, PhantomArgs};
use crate::{Failure, Progress};

/// File name of the serialized phantom spec inside a phantom study.
pub const PHANTOM_SPEC_FILE: &str = "phantom.json";

fn read_phantom_spec(path: &Path) -> Result<PhantomSpec, Failure> {
    let path = if path.is_dir() {
        path.join(PHANTOM_SPEC_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Opens `fixture:DIR` or `phantom:SPEC`, where SPEC is `default`, a
/// phantom.json file or a directory holding one.
fn open_backend(spec: &str, seed: u64) -> Result<Box<dyn FrameScorer>, Failure> {
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| Failure::Usage(format!("backend {spec:?} must be fixture:DIR or phantom:SPEC")))?;
    match kind {
        "fixture" => Ok(Box::new(
            FixtureScorer::open(arg).map_err(|e| Failure::Input(e.to_string()))?,
        )),
        "phantom" => {
            let spec = if arg == "default" {
                default_phantom_spec()
            } else {
                read_phantom_spec(Path::new(arg))?
            };
            let (scorer, _) = PhantomScorer::new(spec, seed).map_err(|e| Failure::Input(e.to_string()))?;
            Ok(Box::new(scorer))
        }
        other => Err(Failure::Usage(format!(
            "unknown backend kind {other:?}; use fixture or phantom"
        ))),
    }
}

pub fn write_output(path: &PathBuf, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn analyze(args: &AnalyzeArgs, progress: &Progress) -> Result<(), Failure> {
    let cfg = args.config.resolve()?;
    let scorer = open_backend(&args.backend, args.seed)?;
    let seq = load_study(&args.input).map_err(|e| Failure::Input(e.to_string()))?;
    progress.say(&format!(
        "analyzing {} frames of {}",
        seq.frames.len(),
        seq.meta.study_id
    ));
    let analysis = analyze_study_with(&seq, scorer.as_ref(), &cfg, Exec::Parallel).map_err(|e| match e {
        PipelineError::AllFramesFailed(_) => Failure::Empty(e.to_string()),
        PipelineError::BadConfig(e) => Failure::Usage(e.to_string()),
    })?;
    let report = &analysis.report;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_output(&args.output, &report.to_json())?;
    if let Some(path) = &args.frames_csv {
        write_output(path, &frames_csv(&analysis))?;
    }
    if report.selection.is_empty() {
        return Err(Failure::Empty("no standard plane selected".into()));
    }
    progress.say(&format!(
        "selected {} of 3 parts; report written to {}",
        report.selection.winners().count(),
        args.output.display()
    ));
    Ok(())
}

pub fn phantom(args: &PhantomArgs, progress: &Progress) -> Result<(), Failure> {
    let mut spec = match &args.spec {
        Some(path) => read_phantom_spec(path)?,
        None => default_phantom_spec(),
    };
    if let Some(sigma) = args.noise {
        spec = spec.with_noise(sigma);
    }
    let (scorer, _) = PhantomScorer::new(spec, args.seed).map_err(|e| Failure::Input(e.to_string()))?;
    fs::create_dir_all(&args.out).map_err(|e| Failure::Input(format!("{}: {e}", args.out.display())))?;
    scorer
        .write_study(&args.out)
        .map_err(|e| Failure::Input(e.to_string()))?;
    let spec_json = serde_json::to_string_pretty(scorer.spec()).expect("spec serializes") + "\n";
    write_output(&args.out.join(PHANTOM_SPEC_FILE), &spec_json)?;
    progress.say(&format!(
        "wrote {} frames to {}",
        scorer.spec().frames.len(),
        args.out.display()
    ));
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs, progress: &Progress) -> Result<(), Failure> {
    let cfg = args.config.resolve()?;
    let scorer = open_backend(&args.backend, args.seed)?;
    let (spacing, frames) = load_truth_dir(&args.truth).map_err(|e| Failure::Input(e.to_string()))?;
    let report = evaluate_backend(scorer.as_ref(), &frames, spacing, &cfg, Exec::Parallel).map_err(|e| match e {
        EvalError::BadConfig(e) => Failure::Usage(e.to_string()),
        other => Failure::Input(other.to_string()),
    })?;
    let json = serde_json::to_string_pretty(&report).expect("metrics serialize") + "\n";
    write_output(&args.out, &json)?;
    progress.say(&format!(
        "evaluated {} frames: mean IoU {:.4}, mean Dice {:.4}",
        report.frame_count, report.mean_iou, report.mean_dice
    ));
    Ok(())
}
