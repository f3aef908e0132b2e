use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gradrev::pose::{
    project, read_landmark_csv, read_pgm, rotate_model, test_card, write_landmark_csv, write_pgm, AffineCamera,
    LandmarkModel3D, LandmarkRecord, PoseSpec,
};

fn gradrev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradrev"))
        .args(args)
        .env("GRADREV_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small dataset so training finishes in well under a second.
fn small_data(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "gen-data",
        "--out",
        p(dir),
        "--seed",
        "4",
        "--classes",
        "4",
        "--target-per-class",
        "30",
    ];
    args.extend_from_slice(extra);
    let o = gradrev(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn gen_data_is_deterministic_and_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = gradrev(&["gen-data", "--out", p(&a), "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("seed: 7"), "{text}");
    assert!(
        text.lines()
            .any(|l| l.split_whitespace().collect::<Vec<_>>() == ["S", "10"]),
        "{text}"
    );
    assert!(
        text.lines()
            .any(|l| l.split_whitespace().collect::<Vec<_>>() == ["S_v", "60"]),
        "{text}"
    );
    assert!(
        text.lines()
            .any(|l| l.split_whitespace().collect::<Vec<_>>() == ["T_l", "30"]),
        "{text}"
    );

    gradrev(&["gen-data", "--out", p(&b), "--seed", "7"]);
    for file in ["samples.csv", "manifest.csv", "withheld_labels.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn gen_data_without_out_is_a_usage_error() {
    let o = gradrev(&["gen-data"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--out"), "{}", stderr(&o));
}

#[test]
fn unknown_mode_and_key_are_usage_errors() {
    let o = gradrev(&["train", "--mode", "bogus"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sspp-dan"), "{}", stderr(&o));
    let o = gradrev(&["gen-data", "--out", "/nonexistent-never", "--set", "data.colour=3"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn synth_writes_six_views_and_their_landmarks() {
    let tmp = tempfile::tempdir().unwrap();
    let gallery = tmp.path().join("gallery");
    let out = tmp.path().join("out");
    fs::create_dir_all(&gallery).unwrap();
    let model = LandmarkModel3D::bundled();
    let (card, lm) = test_card(64, 64, &model).unwrap();
    write_pgm(&gallery.join("ann.pgm"), &card).unwrap();
    let lm_file = tmp.path().join("lm.csv");
    write_landmark_csv(
        &lm_file,
        &[LandmarkRecord {
            image_name: "ann.pgm".into(),
            landmarks: lm,
        }],
    )
    .unwrap();

    let o = gradrev(&[
        "synth",
        "--gallery",
        p(&gallery),
        "--landmarks",
        p(&lm_file),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pgms: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "pgm"))
        .collect();
    assert_eq!(pgms.len(), 6);
    assert!(out.join("ann_yaw-45_pitch0.pgm").exists());
    assert!(out.join("ann_yaw15_pitch0.pgm").exists());

    // the camera of the card is known exactly
    let scale = 0.35 * 64.0 / 50.0;
    let camera = AffineCamera::new([[scale, 0.0, 0.0, 31.5], [0.0, -scale, 0.0, 31.5]]).unwrap();
    let records = read_landmark_csv(&out.join("landmarks.csv")).unwrap();
    assert_eq!(records.len(), 7);
    for r in records.iter().filter(|r| r.image_name != "ann.pgm") {
        let yaw: f64 = r.image_name["ann_yaw".len()..r.image_name.find("_pitch").unwrap()]
            .parse()
            .unwrap();
        let expect = project(&camera, &rotate_model(&model, &PoseSpec::yaw_only(yaw).unwrap()));
        for (a, b) in r.landmarks.points.iter().zip(&expect.points) {
            assert!(
                (a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9,
                "{}",
                r.image_name
            );
        }
    }
}

#[test]
fn synth_zero_pose_reproduces_gallery() {
    let tmp = tempfile::tempdir().unwrap();
    let gallery = tmp.path().join("gallery");
    let out = tmp.path().join("out");
    fs::create_dir_all(&gallery).unwrap();
    let model = LandmarkModel3D::bundled();
    let (card, lm) = test_card(48, 56, &model).unwrap();
    write_pgm(&gallery.join("bo.pgm"), &card).unwrap();
    let lm_file = tmp.path().join("lm.csv");
    write_landmark_csv(
        &lm_file,
        &[LandmarkRecord {
            image_name: "bo".into(),
            landmarks: lm,
        }],
    )
    .unwrap();
    let o = gradrev(&[
        "synth",
        "--gallery",
        p(&gallery),
        "--landmarks",
        p(&lm_file),
        "--out",
        p(&out),
        "--poses",
        "0,0,0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let original = read_pgm(&gallery.join("bo.pgm")).unwrap();
    let view = read_pgm(&out.join("bo_yaw0_pitch0.pgm")).unwrap();
    assert!(view.max_abs_diff(&original).unwrap() <= 1e-9);
}

#[test]
fn synth_missing_landmarks_fails_after_processing_the_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let gallery = tmp.path().join("gallery");
    let out = tmp.path().join("out");
    fs::create_dir_all(&gallery).unwrap();
    let model = LandmarkModel3D::bundled();
    let (card, lm) = test_card(64, 64, &model).unwrap();
    write_pgm(&gallery.join("a.pgm"), &card).unwrap();
    write_pgm(&gallery.join("b.pgm"), &card).unwrap();
    let lm_file = tmp.path().join("lm.csv");
    write_landmark_csv(
        &lm_file,
        &[LandmarkRecord {
            image_name: "a.pgm".into(),
            landmarks: lm,
        }],
    )
    .unwrap();
    let o = gradrev(&[
        "synth",
        "--gallery",
        p(&gallery),
        "--landmarks",
        p(&lm_file),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("b.pgm"), "{}", stderr(&o));
    assert!(out.join("a_yaw30_pitch0.pgm").exists());
}

#[test]
fn train_is_reproducible_and_eval_agrees() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_data(&data, &[]);
    let run = |dir: &Path| {
        let o = gradrev(&[
            "train",
            "--mode",
            "sspp-dan",
            "--data",
            p(&data),
            "--epochs",
            "3",
            "--seed",
            "2",
            "--out",
            p(dir),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a);
    run(&b);
    assert_eq!(
        fs::read(a.join("report.csv")).unwrap(),
        fs::read(b.join("report.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("model.json")).unwrap(),
        fs::read(b.join("model.json")).unwrap()
    );
    assert!(a.join("config.toml").exists());

    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "sspp-dan");

    let e = tmp.path().join("e");
    let o = gradrev(&[
        "eval",
        "--model",
        p(&a.join("model.json")),
        "--data",
        p(&data),
        "--out",
        p(&e),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let eval = fs::read_to_string(e.join("eval.csv")).unwrap();
    let eval_row: Vec<&str> = eval.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(eval_row[0], row[2], "eval accuracy matches training report");
}

#[test]
fn train_verbose_writes_loss_log() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_data(&data, &[]);
    let out = tmp.path().join("out");
    let o = gradrev(&[
        "train",
        "-v",
        "--mode",
        "dan",
        "--data",
        p(&data),
        "--epochs",
        "2",
        "--out",
        p(&out),
        "--set",
        "train.steps_per_epoch=4",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = fs::read_to_string(out.join("losses.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 8);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("domain_loss").is_some(), "{line}");
    }
    assert!(stderr(&o).contains("epoch"));
}

#[test]
fn matrix_emits_one_row_per_mode_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_data(&data, &[]);
    let out = tmp.path().join("m");
    let o = gradrev(&[
        "matrix",
        "--seeds",
        "1,2,3",
        "--data",
        p(&data),
        "--epochs",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "mode,seed,accuracy,domain_confusion,paper_reference");
    assert_eq!(lines.len(), 22);
    assert!(fs::read_to_string(out.join("summary.txt"))
        .unwrap()
        .contains("Semi-SSPP-DAN"));

    let o = gradrev(&["matrix", "--seeds", "1,x", "--data", p(&data), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn mode_without_its_split_names_the_split() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    // every target sample is labeled or held for test, so T is empty
    let o = gradrev(&[
        "gen-data",
        "--out",
        p(&data),
        "--classes",
        "4",
        "--target-per-class",
        "6",
        "--set",
        "data.test_fraction=1.0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = gradrev(&[
        "train",
        "--mode",
        "dan",
        "--data",
        p(&data),
        "--epochs",
        "1",
        "--out",
        p(&tmp.path().join("o")),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("split T "), "{}", stderr(&o));
}

#[test]
fn gradcheck_passes_and_catches_sign_flip() {
    let o = gradrev(&["gradcheck"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "{text}");
    assert!(rows.iter().all(|r| r.ends_with("ok")), "{text}");

    let o = gradrev(&["gradcheck", "--corrupt", "grl-sign"]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    let grl = text.lines().find(|l| l.starts_with("GRL")).unwrap();
    assert!(grl.ends_with("FAIL"), "{text}");
}

#[test]
fn synth_accepts_negative_pose_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let gallery = tmp.path().join("gallery");
    let out = tmp.path().join("out");
    fs::create_dir_all(&gallery).unwrap();
    let model = LandmarkModel3D::bundled();
    let (card, lm) = test_card(64, 64, &model).unwrap();
    write_pgm(&gallery.join("cy.pgm"), &card).unwrap();
    let lm_file = tmp.path().join("lm.csv");
    write_landmark_csv(
        &lm_file,
        &[LandmarkRecord {
            image_name: "cy.pgm".into(),
            landmarks: lm,
        }],
    )
    .unwrap();
    let o = gradrev(&[
        "synth",
        "--gallery",
        p(&gallery),
        "--landmarks",
        p(&lm_file),
        "--out",
        p(&out),
        "--poses",
        "-30,0,0",
        "--poses",
        "30,-10,0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("cy_yaw-30_pitch0.pgm").exists());
    assert!(out.join("cy_yaw30_pitch-10.pgm").exists());
    assert!(stdout(&o).contains("views: 2"), "{}", stdout(&o));
}
