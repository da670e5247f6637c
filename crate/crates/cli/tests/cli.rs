mod common;

use causalcast_core::{load_csv, CausalGraph};
use chrono::NaiveDate;
use common::*;

fn ok(args: &[&str]) -> String {
    let o = causalcast(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[data]\ndaily = \"nowhere/daily.csv\"\n").unwrap();
    let o = causalcast(&["preprocess", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[data]: "), "{err}");
    assert!(err.contains("nowhere/daily.csv"));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[discovery]\nmethods = [\"lingam\"]\n").unwrap();
    let o = causalcast(&["discover", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[config]: unknown discovery method"));

    let o = causalcast(&["train", "--variant", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    let o = causalcast(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = causalcast(&["synth", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_closed_form_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        r#"
[synth]
rows = 5
[synth.spec]
n_vars = 1
names = ["x"]
initial = [1.0]
start = "2000-01-01"
cadence = "monthly"
[[synth.spec.mechanisms]]
effect = 0
noise_std = 0.0
parents = [{ cause = 0, lag = 1, coef = 0.5 }]
"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    ok(&["synth", "--config", c]);
    let first = snapshot(&dir.path().join("out"));
    ok(&["synth", "--config", c]);
    assert_eq!(first, snapshot(&dir.path().join("out")));
    let frame = load_csv(dir.path().join("out/synth/frame.csv"), &[]).unwrap();
    assert_eq!(frame.column(0).to_vec(), vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    let truth = std::fs::read_to_string(dir.path().join("out/synth/truth.edges")).unwrap();
    let g = CausalGraph::parse_edge_list(&truth, vec!["x".into()]).unwrap();
    assert_eq!(g.len(), 1);
}

#[test]
fn small_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let daily = dir.path().join("daily.csv");
    write_table_one_daily(&daily, NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(), 2200, 1);
    let out = dir.path().join("out");
    let cfg = dir.path().join("c.toml");
    write_small_config(&cfg, &daily, &out);
    std::fs::write(
        &cfg,
        std::fs::read_to_string(&cfg).unwrap().replace("seed = 3", "seed = 3\nhorizons = [1, 2]"),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let pre = ok(&["preprocess", "--config", c]);
    assert!(pre.contains("daily: 2200 rows x 11 variables"), "{pre}");
    assert!(pre.contains("monthly:"));
    let disc = ok(&["discover", "--config", c]);
    assert_eq!(disc.lines().count(), 4, "{disc}");
    ok(&["train", "--config", c, "--variant", "pcmci_monthly"]);
    // Other variants are untrained, so a full evaluate lists what is missing.
    let o = causalcast(&["evaluate", "--config", c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(vanilla_daily, 1)"));
    let table = ok(&["evaluate", "--config", c, "--variant", "pcmci_monthly"]);
    assert!(table.contains("| pcmci_monthly | R² |"), "{table}");
    assert!(out.join("reports/monthly_pcmci_monthly.json").exists());
    assert!(out.join("reports/monthly_pcmci_monthly_r2.svg").exists());
    let fc = ok(&["forecast", "--config", c, "--variant", "pcmci_monthly"]);
    assert_eq!(fc.lines().count(), 2);
}
