use std::fs;
use std::path::Path;
use std::process::Command;

fn volscreen(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_volscreen"))
        .args(args)
        .env("VOLSCREEN_THREADS", "1")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn csv_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().skip(1).filter(|l| !l.is_empty()).count()
}

const RECORDS: &str = "\
id,smiles,A,B,C,t_min_K,t_max_K
m1,CCCCCCCC,9.3,1400.0,-60.0,290.0,400.0
m2,CCCCCCCCCC,9.2,1600.0,-65.0,300.0,420.0
m3,CCCCCCCCCCCC,9.1,1800.0,-70.0,310.0,440.0
";

#[test]
fn build_dataset_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.csv");
    fs::write(&records, RECORDS).unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = volscreen(&[
        "build-dataset",
        "--records",
        records.to_str().unwrap(),
        "--samples",
        "4",
        "--folds",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(csv_rows(&out.join("dataset.csv")), 12);
    // every record spans the fixed temperature
    assert_eq!(csv_rows(&out.join("dataset_fixed.csv")), 3);
    assert!(out.join("build-dataset.manifest.json").exists());
}

#[test]
fn unknown_flag_is_usage_error() {
    let (code, _, err) = volscreen(&["screen", "--no-such-flag"]);
    assert_eq!(code, 1);
    assert!(err.contains("no-such-flag"));
    assert_eq!(volscreen(&["--help"]).0, 0);
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[nonsense]\nx = 1\n").unwrap();
    let (code, _, _) = volscreen(&["generate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn too_few_passes_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let screen = dir.path().join("screen.csv");
    fs::write(
        &screen,
        "smiles,log10vp_387K,std_387K,log10vp_300K,std_300K,verdict\n\
         CCCCCCCCCCCCCCCCCCCC,-9.0e0,0.0e0,-12.0e0,0.0e0,pass\n\
         CCCCCCCCCCCCCCCCCCCCC,-9.5e0,0.0e0,-12.5e0,0.0e0,pass\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = volscreen(&["embed-cluster", "--screen", screen.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn plot_has_one_circle_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("embedding.csv");
    let mut text = String::from("id,x,y,cluster\n");
    for i in 0..25 {
        let c = if i % 5 == 0 { -1 } else { i % 3 };
        text.push_str(&format!("m{i},{}.5e0,{}.25e0,{c}\n", i, 30 - i));
    }
    fs::write(&emb, text).unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = volscreen(&["plot", "--embedding", emb.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let svg = fs::read_to_string(out.join("chemspace.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<circle").count(), 25);
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let (code, _, err) =
            volscreen(&["generate", "--count", "40", "--seed", "11", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        fs::read(out.join("generated.smi")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 40);
}

#[test]
#[ignore = "full desk-scale pipeline; several minutes"]
fn desk_pipeline_under_ten_minutes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk.toml");
    let out = dir.path().join("out");
    let start = std::time::Instant::now();
    let (code, stdout, err) = volscreen(&["run", "--config", cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(start.elapsed().as_secs() < 600, "took {:?}", start.elapsed());
    assert!(stdout.contains("records            120"), "{stdout}");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let screen = &summary["screen"];
    assert!(screen["passed"].as_u64() <= screen["stage1_survivors"].as_u64());
    assert!(screen["stage1_survivors"].as_u64() <= screen["candidates"].as_u64());
}
