#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lg4nmr_lab::config::ExperimentConfig;

/// Two protons 1.8 Å apart with distinct shifts.
pub const PAIR_XYZ: &str = "# two protons\n0 0 0 3.66\n1.8 0 0 1.19\n";

/// Short two-spin run that finishes in well under a second.
pub fn small_config_text(output: &Path) -> String {
    format!(
        r#"[sample]
geometry = "pair.xyz"

[rf]
rabi_hz = 150e3
n_blocks = 24

[noise]
enabled = true

[analysis]
svg = true

[run]
seed = 5
steps_per_segment = 24
output_dir = "{}"
engine = "both"
"#,
        output.display()
    )
}

/// Writes geometry and config into `dir` and returns the config path.
pub fn write_small_experiment(dir: &Path) -> PathBuf {
    std::fs::write(dir.join("pair.xyz"), PAIR_XYZ).unwrap();
    let cfg = dir.join("small.cfg");
    std::fs::write(&cfg, small_config_text(&dir.join("out"))).unwrap();
    cfg
}

pub fn small_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig::load(&write_small_experiment(dir)).unwrap()
}
