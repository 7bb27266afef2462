mod common;

use std::fs;

use common::{code, dir_bytes, p, phantom, read_json, sonobio, stderr};
use serde_json::Value;

#[test]
fn version_reports_schema() {
    let out = sonobio(&["--version"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains(&format!("report schema {}", sonobiometry::pipeline::REPORT_SCHEMA)),
        "{text}"
    );
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&sonobio(&[])), 64);
    assert_eq!(code(&sonobio(&["frobnicate"])), 64);
    assert_eq!(code(&sonobio(&["analyze", "--input", "x"])), 64);
    assert_eq!(code(&sonobio(&["--threads", "0", "phantom", "--out", "x"])), 64);
    let out = sonobio(&[
        "analyze",
        "--input",
        "x",
        "--backend",
        "fixture:x",
        "--output",
        "r.json",
        "--gate-threshold",
        "1.5",
    ]);
    assert_eq!(code(&out), 64);
    assert!(stderr(&out).contains("gate_threshold"));
    let out = sonobio(&[
        "analyze",
        "--input",
        "x",
        "--backend",
        "onnx:model",
        "--output",
        "r.json",
    ]);
    assert_eq!(code(&out), 64);
}

#[test]
fn analyze_phantom_study_and_missing_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let study = tmp.path().join("study");
    assert_eq!(phantom(&study, 0, &[]), 0);
    let report = tmp.path().join("report.json");
    let csv = tmp.path().join("frames.csv");
    let out = sonobio(&[
        "analyze",
        "--input",
        p(&study),
        "--backend",
        &format!("fixture:{}", p(&study)),
        "--output",
        p(&report),
        "--frames-csv",
        p(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_json(&report);
    assert_eq!(r["schema"], 1);
    for part in ["head", "abdomen", "femur"] {
        assert!(r["selection"][part]["frame_index"].is_u64(), "{part}");
    }
    assert!(r["biometry"]["ga_weeks"].is_f64() && r["biometry"]["efw_g"].is_f64());
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 31);
    assert!(!out.stdout.is_empty());

    fs::remove_file(study.join("study.json")).unwrap();
    let out = sonobio(&[
        "analyze",
        "--input",
        p(&study),
        "--backend",
        &format!("fixture:{}", p(&study)),
        "--output",
        p(&report),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("study.json"));
}

#[test]
fn config_flags_override_file_which_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let study = tmp.path().join("study");
    assert_eq!(phantom(&study, 0, &[]), 0);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"gate_threshold": 0.8, "rdp_eps_rel": 0.02}"#).unwrap();
    let report = tmp.path().join("r.json");
    let out = sonobio(&[
        "analyze",
        "-q",
        "--input",
        p(&study),
        "--backend",
        "phantom:default",
        "--output",
        p(&report),
        "--config",
        p(&cfg),
        "--gate-threshold",
        "0.85",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let c = &read_json(&report)["config"];
    assert_eq!(c["gate_threshold"], 0.85);
    assert_eq!(c["rdp_eps_rel"], 0.02);
    assert_eq!(c["mask_threshold"], 0.6);

    fs::write(&cfg, r#"{"gate": 0.8}"#).unwrap();
    let out = sonobio(&[
        "analyze",
        "--input",
        p(&study),
        "--backend",
        "phantom:default",
        "--output",
        p(&report),
        "--config",
        p(&cfg),
    ]);
    assert_eq!(code(&out), 2);
    let out = sonobio(&[
        "analyze",
        "--input",
        p(&study),
        "--backend",
        "phantom:default",
        "--output",
        p(&report),
        "--ellipse-weights",
        "0.5,0.5,0.5",
    ]);
    assert_eq!(code(&out), 64);
}

#[test]
fn empty_selection_and_all_failed_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("bg.json");
    let mut spec = sonobiometry::backend::default_phantom_spec();
    for f in &mut spec.frames {
        f.part = sonobiometry::biometry::BodyPart::Background;
        f.shape = None;
        f.probs = [0.02, 0.02, 0.01, 0.95];
    }
    fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let study = tmp.path().join("bg");
    assert_eq!(
        code(&sonobio(&[
            "phantom",
            "-q",
            "--spec",
            p(&spec_path),
            "--out",
            p(&study)
        ])),
        0
    );
    let report = tmp.path().join("r.json");
    let out = sonobio(&[
        "analyze",
        "--input",
        p(&study),
        "--backend",
        &format!("fixture:{}", p(&study)),
        "--output",
        p(&report),
    ]);
    assert_eq!(code(&out), 3);
    let r = read_json(&report);
    assert_eq!(r["biometry"]["ga_weeks"], Value::Null);
    assert!(!r["warnings"].as_array().unwrap().is_empty());

    // A fixture whose frame indices match nothing in the study.
    let other = tmp.path().join("shifted");
    fs::create_dir(&other).unwrap();
    fs::write(
        other.join("scores.csv"),
        "frame_index,p_head,p_abdomen,p_femur,p_background\n500,0.95,0.02,0.02,0.01\n",
    )
    .unwrap();
    fs::copy(study.join("mask_000000.png"), other.join("mask_000500.png")).unwrap();
    let out = sonobio(&[
        "analyze",
        "--input",
        p(&study),
        "--backend",
        &format!("fixture:{}", p(&other)),
        "--output",
        p(&report),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn phantom_outputs_are_reproducible_and_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(phantom(&a, 4, &["--noise", "0.1"]), 0);
    assert_eq!(phantom(&b, 4, &["--noise", "0.1"]), 0);
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    for f in [
        "study.json",
        "scores.csv",
        "ground_truth.json",
        "phantom.json",
        "mask_000007.png",
        "truth_000007.png",
    ] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let c = tmp.path().join("c");
    assert_eq!(phantom(&c, 5, &["--noise", "0.1"]), 0);
    assert_ne!(
        fs::read(a.join("mask_000007.png")).unwrap(),
        fs::read(c.join("mask_000007.png")).unwrap()
    );

    let mut spec = sonobiometry::backend::default_phantom_spec();
    if let Some(sonobiometry::backend::Shape::Ellipse { cx, .. }) = spec.frames[7].shape.as_mut() {
        *cx = 5.0;
    }
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(
        code(&sonobio(&[
            "phantom",
            "--spec",
            p(&bad),
            "--out",
            p(&tmp.path().join("d"))
        ])),
        2
    );
    assert_eq!(phantom(&tmp.path().join("e"), 0, &["--noise", "0.7"]), 2);
}

fn write_ratings(path: &std::path::Path, rows: &[(&str, &str, u8, &str, f64)]) {
    let mut text = String::from("reader,case,reading,kind,value_cm\n");
    for (r, c, n, k, v) in rows {
        text.push_str(&format!("{r},{c},{n},{k},{v}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn agree_reports_statistics() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("ratings.csv");
    let values = [20.0, 22.5, 25.0, 19.0];
    let mut rows = Vec::new();
    for (c, v) in values.iter().enumerate() {
        let case = ["a", "b", "c", "d"][c];
        for reading in [1, 2] {
            rows.push(("FUVAI", case, reading, "HC", *v));
            rows.push(("ES1", case, reading, "HC", *v));
        }
    }
    write_ratings(&csv, &rows);
    let out_path = tmp.path().join("stats.json");
    let out = sonobio(&[
        "agree",
        "--ratings",
        p(&csv),
        "--reference",
        "FUVAI",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = read_json(&out_path);
    let hc = &s["kinds"][0];
    assert_eq!(hc["kind"], "HC");
    assert_eq!(hc["icc_reading_1"], 1.0);
    assert_eq!(hc["icc_reading_2"], 1.0);
    assert_eq!(hc["mae_cm"][1]["mae"], 0.0);
    assert_eq!(hc["intra_observer"][0]["mean_abs_diff"], 0.0);
    assert_eq!(hc["intra_observer"][0]["sd"], 0.0);
    assert_eq!(hc["anova"]["f"], 0.0);
    assert_eq!(hc["anova"]["p"], 1.0);

    write_ratings(&csv, &[("FUVAI", "a", 1, "HC", 20.0), ("FUVAI", "b", 1, "HC", 21.0)]);
    let out = sonobio(&[
        "agree",
        "--ratings",
        p(&csv),
        "--reference",
        "FUVAI",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("insufficient"));

    fs::write(&csv, "reader,case,kind,value_cm\nA,a,HC,1\n").unwrap();
    assert_eq!(
        code(&sonobio(&[
            "agree",
            "--ratings",
            p(&csv),
            "--reference",
            "A",
            "--out",
            p(&out_path)
        ])),
        2
    );
}

#[test]
fn agree_matches_library_on_hand_table() {
    use sonobiometry::agreement::{anova_oneway, icc, intra_observer, mae, read_ratings_csv, RatingKind, Reading};
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("ratings.csv");
    let data = [
        (
            "FUVAI",
            [20.1, 24.3, 18.7, 30.2, 26.4, 22.0],
            [20.1, 24.3, 18.7, 30.2, 26.4, 22.0],
        ),
        (
            "ES1",
            [20.4, 24.0, 19.2, 29.6, 26.9, 21.5],
            [20.6, 23.8, 19.0, 29.9, 27.1, 21.9],
        ),
        (
            "ES2",
            [19.8, 24.9, 18.5, 30.8, 26.0, 22.6],
            [19.9, 24.5, 18.9, 30.5, 26.2, 22.1],
        ),
    ];
    let mut rows = Vec::new();
    for (r, first, second) in &data {
        for c in 0..6 {
            let case = ["c1", "c2", "c3", "c4", "c5", "c6"][c];
            rows.push((*r, case, 1, "AC", first[c]));
            rows.push((*r, case, 2, "AC", second[c]));
        }
    }
    write_ratings(&csv, &rows);
    let out_path = tmp.path().join("stats.json");
    let out = sonobio(&[
        "agree",
        "--ratings",
        p(&csv),
        "--reference",
        "FUVAI",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = read_json(&out_path);
    let ac = &s["kinds"][0];

    let t = &read_ratings_csv(fs::File::open(&csv).unwrap()).unwrap()[&RatingKind::AC];
    assert_eq!(ac["icc_reading_1"].as_f64().unwrap(), icc(t, Reading::First).unwrap());
    assert_eq!(ac["icc_reading_2"].as_f64().unwrap(), icc(t, Reading::Second).unwrap());
    assert_eq!(
        ac["mae_cm"][2]["mae"].as_f64().unwrap(),
        mae(t, "FUVAI", "ES2").unwrap()
    );
    let (m, sd) = intra_observer(t, "ES1").unwrap();
    assert_eq!(ac["intra_observer"][1]["mean_abs_diff"].as_f64().unwrap(), m);
    assert_eq!(ac["intra_observer"][1]["sd"].as_f64().unwrap(), sd);
    let groups: Vec<Vec<f64>> = data.iter().map(|d| d.1.to_vec()).collect();
    let a = anova_oneway(&groups).unwrap();
    assert_eq!(ac["anova"]["f"].as_f64().unwrap(), a.f);
    assert_eq!(ac["anova"]["df"], serde_json::json!([2, 15]));

    let out = sonobio(&[
        "agree",
        "--ratings",
        p(&csv),
        "--reference",
        "FUVAI",
        "--out",
        p(&out_path),
        "--icc",
        "3,1",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(read_json(&out_path)["icc_variant"], "3,1");
}

#[test]
fn evaluate_perfect_noisy_and_mismatched() {
    let tmp = tempfile::tempdir().unwrap();
    let study = tmp.path().join("s");
    assert_eq!(phantom(&study, 0, &[]), 0);
    let perfect = tmp.path().join("perfect");
    fs::create_dir(&perfect).unwrap();
    fs::copy(study.join("scores.csv"), perfect.join("scores.csv")).unwrap();
    for i in 0..30 {
        fs::copy(
            study.join(format!("truth_{i:06}.png")),
            perfect.join(format!("mask_{i:06}.png")),
        )
        .unwrap();
    }
    let out_path = tmp.path().join("m.json");
    let out = sonobio(&[
        "evaluate",
        "--backend",
        &format!("fixture:{}", p(&perfect)),
        "--truth",
        p(&study),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = read_json(&out_path);
    assert_eq!(m["mean_iou"], 1.0);
    assert_eq!(m["mean_dice"], 1.0);
    for k in m["measurement_errors"].as_array().unwrap() {
        assert_eq!(k["mean_abs_error_mm"], 0.0);
    }
    for c in m["classification"]["per_class"].as_array().unwrap() {
        assert_eq!(c["f1"], 1.0);
    }

    let noisy = tmp.path().join("noisy");
    assert_eq!(phantom(&noisy, 3, &["--noise", "0.2"]), 0);
    let out = sonobio(&[
        "evaluate",
        "--backend",
        &format!("fixture:{}", p(&noisy)),
        "--truth",
        p(&noisy),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    let m = read_json(&out_path);
    assert!(m["mean_iou"].as_f64().unwrap() < 1.0 && m["mean_dice"].as_f64().unwrap() < 1.0);

    fs::remove_file(perfect.join("mask_000029.png")).unwrap();
    let scores = fs::read_to_string(perfect.join("scores.csv")).unwrap();
    let trimmed: Vec<&str> = scores.lines().take(30).collect();
    fs::write(perfect.join("scores.csv"), trimmed.join("\n") + "\n").unwrap();
    let out = sonobio(&[
        "evaluate",
        "--backend",
        &format!("fixture:{}", p(&perfect)),
        "--truth",
        p(&study),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("mismatch"));
}
