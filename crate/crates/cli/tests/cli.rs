use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use optjam_cli::{run, sweep, Derived, ExperimentSpec, Manifest, Overrides, SweepParam};

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn into(dir: &Path) -> Overrides {
    Overrides {
        out: Some(dir.to_path_buf()),
        ..Overrides::default()
    }
}

fn csv_column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        run(&spec("gaussian_deviate.json"), &into(dir.path())).unwrap();
        run(&spec("laplace_worst_noise.json"), &into(dir.path())).unwrap();
    }
    for file in [
        "gaussian_deviate.json",
        "gaussian_deviate_exploit.csv",
        "laplace_worst_noise.json",
        "laplace_worst_noise_noise_density.csv",
    ] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let written = run(&spec("gaussian_saddle.json"), &into(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("gaussian_saddle.json")).unwrap();
    let loaded: Manifest = serde_json::from_str(&text).unwrap();
    let mut expected = written.clone();
    expected.spec.output_dir = None;
    assert_eq!(loaded, expected);
    assert_eq!(Derived::of(&loaded.spec.game, loaded.spec.strict_paper), loaded.derived);
    assert!((loaded.derived.saddle_cost - 2.0 / 3.0).abs() < 1e-15);
    let z = loaded.scalars.iter().find(|(k, _)| k == "z_score").unwrap().1;
    assert!(z.abs() < 4.0);
}

#[test]
fn gaussian_match_reports_gaussian_jammer() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&spec("gaussian_match.json"), &into(dir.path())).unwrap();
    assert_eq!(m.outputs["verdict"], "Matched");
    let v = m.scalars.iter().find(|(k, _)| k == "jammer_variance").unwrap().1;
    assert!((v - 1.0).abs() < 1e-6);
    assert!(dir.path().join("gaussian_match_jammer_density.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_optjam");
    let code = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    let s = |name: &str| spec(name).to_string_lossy().into_owned();
    assert_eq!(code(&["run", &s("rademacher_match.json")]), 0);
    let m: Manifest = serde_json::from_str(
        &fs::read_to_string(dir.path().join("rademacher_match.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m.outputs["verdict"], "NoMatch");
    assert!(m.outputs["reason"].as_str().is_some_and(|r| !r.is_empty()));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"name":"bad","task":"saddle","game":{"source":{"family":"gaussian","variance":1.0},"channel_noise":{"family":"gaussian","variance":1.0},"power_tx":1.0,"power_jam":1.0}}"#).unwrap();
    assert_eq!(code(&["run", bad.to_str().unwrap()]), 1, "missing seed");
    assert_eq!(code(&["run", "/nonexistent.json"]), 1);
    assert_eq!(code(&["sweep", &s("gaussian_match.json"), "--param", "gain", "--values", "1"]), 1);

    let mut wrong: ExperimentSpec =
        serde_json::from_str(&fs::read_to_string(spec("gaussian_saddle.json")).unwrap()).unwrap();
    wrong.name = "wrong_jammer".into();
    wrong.trials = 200_000;
    wrong.jammer = Some(optjam::DistributionModel::gaussian(0.2).unwrap());
    let path = dir.path().join("wrong.json");
    fs::write(&path, serde_json::to_string(&wrong).unwrap()).unwrap();
    assert_eq!(code(&["run", path.to_str().unwrap()]), 2, "saddle cost off J");
}

#[test]
fn power_jam_sweep_follows_saddle_formula() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sweep(&spec("gaussian_match.json"), SweepParam::PowerJam, &[0.1, 1.0, 10.0], &into(dir.path()))
        .unwrap();
    let p = csv_column(&csv, "sweep_power_jam");
    let j = csv_column(&csv, "saddle_cost");
    for (p, j) in p.iter().zip(&j) {
        assert_eq!(*j, (p + 1.0) / (2.0 + p));
    }
}

#[test]
fn beta_sweep_gaussianizes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sweep(&spec("laplace_asymptotic.json"), SweepParam::Beta, &[1.0, 4.0, 16.0, 64.0], &into(dir.path()))
        .unwrap();
    let d = csv_column(&csv, "gaussian_distance");
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn order_sweep_shrinks_expansion_gap() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sweep(&spec("uniform_mmse.json"), SweepParam::Order, &[2.0, 4.0, 6.0], &into(dir.path()))
        .unwrap();
    let gap = csv_column(&csv, "expansion_gap");
    assert!(gap.windows(2).all(|w| w[1] < w[0]), "{gap:?}");
}
