use std::path::Path;

use admiral::harness::{Command, ExperimentConfig};

fn load(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn every_preset_validates_for_its_command() {
    let cases = [
        ("golden_demo.toml", Command::Train),
        ("advisor_sweep.toml", Command::EvaluateAdvisor),
        ("mse_ae.toml", Command::Train),
        ("mse_ae.toml", Command::Oracle),
        ("mse_dm.toml", Command::Train),
        ("mse_dm.toml", Command::Oracle),
        ("dm_sweep.toml", Command::Pipeline),
        ("bad_advice.toml", Command::Train),
        ("adaptive.toml", Command::EvaluateAdvisor),
        ("neural_maze.toml", Command::Train),
        ("offline_rows.toml", Command::EvaluateAdvisor),
    ];
    for (file, command) in cases {
        load(file)
            .validate_for(command)
            .unwrap_or_else(|e| panic!("{file} for {command:?}: {e}"));
    }
}

#[test]
fn every_experiment_file_is_covered() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    for entry in std::fs::read_dir(dir).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name == "grid_maze.toml" {
            continue;
        }
        load(&name);
    }
}
