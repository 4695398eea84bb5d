use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use admiral::game::StateId;
use admiral::tabular::load_tables;

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/presets")
}

fn admiral(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admiral"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn files_with(dir: &Path, suffix: &str) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(suffix))
        .collect();
    v.sort();
    v
}

const DM: &str = r#"
format_version = 1
name = "dm"
learner = "dm"
advisors = ["grade1"]
episodes = 30
seeds = [1, 2]

[environment]
kind = "grid_maze"

[dm]
alpha = 0.1
beta = 0.9
epsilon = { start = 0.1, end = 0.0, horizon = 30 }
epsilon_prime = { start = 0.5, end = 0.0, horizon = 30 }
"#;

#[test]
fn train_writes_one_csv_and_one_table_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dm.toml", DM);
    let out = dir.path().join("out");
    let o = admiral(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_with(&out, ".csv"), ["dm-seed1.csv", "dm-seed2.csv"]);
    assert_eq!(files_with(&out, ".qtable"), ["dm-seed1.qtable", "dm-seed2.qtable"]);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dm.toml", DM);
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = admiral(&[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seeds",
            "9",
        ]);
        assert!(o.status.success());
        csvs.push(std::fs::read(out.join("dm-seed9.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn seeds_flag_replaces_the_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dm.toml", DM);
    let out = dir.path().join("out");
    let o = admiral(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "7,8,11",
    ]);
    assert!(o.status.success());
    assert_eq!(files_with(&out, ".csv"), ["dm-seed11.csv", "dm-seed7.csv", "dm-seed8.csv"]);
}

#[test]
fn unknown_advisor_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &DM.replace("\"grade1\"", "\"grade7\""));
    let o = admiral(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("advisors"), "{err}");
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &DM.replace("alpha = 0.1", "alpha = 0.1\ngamma = 0.5"));
    let o = admiral(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn duplicate_seeds_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dm.toml", DM);
    let o = admiral(&["train", "--config", cfg.to_str().unwrap(), "--seeds", "3,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_config_exits_1() {
    let o = admiral(&["train", "--config", "/nonexistent/admiral.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn golden_demo_preset_reproduces_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = presets().join("golden_demo.toml");
    let o = admiral(&["train", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tables = load_tables(&dir.path().join("golden-demo-seed0.qtable")).unwrap();
    let q = tables[0].get(StateId(0), &[0, 0]).unwrap();
    assert!((q - 2.3445).abs() < 1e-12, "{q}");
}

#[test]
fn offline_rows_preset_reports_the_normalised_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = presets().join("offline_rows.toml");
    let o = admiral(&[
        "evaluate-advisor",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("evaluation.csv")).unwrap();
    let eps: Vec<&str> = report.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(eps, ["0.8", "0.7", "0.4", "0"]);
}

#[test]
fn oracle_against_a_table_from_another_game_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let demo = presets().join("golden_demo.toml");
    let o = admiral(&["train", "--config", demo.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let reference = dir.path().join("golden-demo-seed0.qtable");
    let cfg = write(
        dir.path(),
        "oracle.toml",
        &format!(
            r#"
format_version = 1
name = "maze"
seeds = [0]
episodes = 1

[environment]
kind = "grid_maze"

[oracle]
target = "nash"
reference = "{}"
"#,
            reference.display()
        ),
    );
    let o = admiral(&["oracle", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn maze_oracle_prints_a_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "oracle.toml",
        r#"
format_version = 1
name = "maze"
seeds = [0]
episodes = 1

[environment]
kind = "grid_maze"

[oracle]
target = "nash"
"#,
    );
    let o = admiral(&["oracle", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let line = text.lines().find(|l| l.starts_with("bellman residual")).expect(&text);
    let r: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(r < 1e-8, "{r}");
    assert!(dir.path().join("maze-oracle.qtable").exists());
}

#[test]
fn plot_draws_the_training_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dm.toml", DM);
    let out = dir.path().join("runs");
    assert!(admiral(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status
        .success());
    let plot = write(
        dir.path(),
        "plot.toml",
        r#"
format_version = 1
name = "plot"

[plot]
file = "dm.svg"
series = [{ label = "grade1", csv = ["runs/dm-seed1.csv", "runs/dm-seed2.csv"] }]
"#,
    );
    let o = admiral(&["plot", "--config", plot.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(dir.path().join("dm.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("grade1"));
}

#[test]
fn plot_without_series_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let plot = write(dir.path(), "plot.toml", "format_version = 1\nname = \"p\"\n[plot]\nseries = []\n");
    let o = admiral(&["plot", "--config", plot.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
