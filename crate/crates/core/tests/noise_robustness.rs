use sonobiometry::backend::{default_phantom_spec, PhantomScorer};
use sonobiometry::biometry::{BodyPart, MeasureKind};
use sonobiometry::config::AnalysisConfig;
use sonobiometry::pipeline::analyze_study;

const SEEDS: u64 = 12;
const SIGMA: f64 = 0.2;

/// Errors in pixels of every winning measurement against the analytic value
/// of the frame it came from, pooled over seeds.
#[test]
fn noisy_masks_keep_95th_percentile_error_under_five_pixels() {
    let cfg = AnalysisConfig::default();
    let spec = default_phantom_spec().with_noise(SIGMA);
    let px_cm = spec.pixel_spacing_mm.row_mm / 10.0;
    let mut errors = Vec::new();
    for seed in 0..SEEDS {
        let (scorer, truth) = PhantomScorer::new(spec.clone(), seed).unwrap();
        let seq = scorer.frame_sequence().unwrap();
        let report = analyze_study(&seq, &scorer, &cfg).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(report.frames_failed, 0, "seed {seed}");
        for part in BodyPart::MEASURED {
            let winner = report
                .selection
                .get(part)
                .unwrap_or_else(|| panic!("seed {seed}: no {part}"));
            let t = truth.iter().find(|t| t.frame_index == winner.frame_index).unwrap();
            for m in std::iter::once(&winner.measurement).chain(&winner.companions) {
                let analytic = t.biometry.get(m.kind).unwrap();
                errors.push((m.kind, (m.value_cm - analytic).abs() / px_cm));
            }
        }
    }
    assert_eq!(errors.len(), 4 * SEEDS as usize);
    let mut all: Vec<f64> = errors.iter().map(|e| e.1).collect();
    all.sort_by(f64::total_cmp);
    let p95 = all[(0.95 * all.len() as f64).ceil() as usize - 1];
    for kind in [MeasureKind::HC, MeasureKind::BPD, MeasureKind::AC, MeasureKind::FL] {
        let worst = errors.iter().filter(|e| e.0 == kind).map(|e| e.1).fold(0.0, f64::max);
        println!("{kind:?}: worst {worst:.3} px");
    }
    println!("95th percentile {p95:.3} px over {} measurements", all.len());
    assert!(p95 < 5.0, "95th percentile error {p95} px");
    assert!(all.iter().any(|&e| e > 0.0), "noise left every measurement exact");
}
