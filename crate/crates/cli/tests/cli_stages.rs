//! Subcommand wiring: staged execution, dependency errors, exit codes, and
//! the synth round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corrnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrnet"))
        .args(args)
        .output()
        .expect("spawn corrnet")
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/pipeline.toml")
}

fn run_args(config: &Path, out: &Path, sub: &str) -> Vec<String> {
    vec![
        "--config".into(),
        config.to_string_lossy().into_owned(),
        "--out".into(),
        out.to_string_lossy().into_owned(),
        sub.into(),
    ]
}

fn invoke(config: &Path, out: &Path, sub: &str) -> Output {
    let args = run_args(config, out, sub);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    corrnet(&args)
}

#[test]
fn staged_subcommands_chain_and_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = bundled_config();

    assert!(invoke(&cfg, &out, "ingest-check").status.success());
    assert!(out.join("windows/full/panel.csv").is_file());
    assert!(!out.join("windows/full/correlation.csv").exists());

    assert!(invoke(&cfg, &out, "rmt").status.success());
    assert!(out.join("windows/full/rmt.json").is_file());
    assert!(out.join("windows/full/eigenvalue_hist.csv").is_file());

    assert!(invoke(&cfg, &out, "graph").status.success());
    assert!(out.join("windows/full/mst_edges.csv").is_file());

    assert!(invoke(&cfg, &out, "communities").status.success());
    assert!(out.join("windows/full/communities.csv").is_file());
    assert!(out.join("windows/full/mst.dot").is_file());

    assert!(invoke(&cfg, &out, "report").status.success());
    assert!(out.join("windows/full/report.csv").is_file());
}

#[test]
fn missing_prior_stage_names_the_required_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = bundled_config();

    let result = invoke(&cfg, &out, "communities");
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("run `corrnet ingest-check` first"),
        "stderr: {stderr}"
    );

    // With the panel present but no MST, the error names `graph`.
    assert!(invoke(&cfg, &out, "ingest-check").status.success());
    let result = invoke(&cfg, &out, "communities");
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("run `corrnet graph` first"),
        "stderr: {stderr}"
    );
}

#[test]
fn config_errors_exit_with_code_one() {
    let result = corrnet(&["run"]);
    assert_eq!(result.status.code(), Some(1));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "price_file = \"missing.csv\"\n").unwrap();
    let result = corrnet(&["--config", bad.to_str().unwrap(), "run"]);
    assert_eq!(result.status.code(), Some(1), "config without windows");

    std::fs::write(
        &bad,
        "price_file = \"nope.csv\"\n[[windows]]\nid = \"w\"\nstart = \"2019-01-01\"\nend = \"2019-02-01\"\n",
    )
    .unwrap();
    let result = corrnet(&["--config", bad.to_str().unwrap(), "run"]);
    assert_eq!(result.status.code(), Some(1), "missing price file");
}

#[test]
fn partial_failure_exits_three_and_leaves_good_windows_intact() {
    let tmp = tempfile::tempdir().unwrap();
    let panel = tmp.path().join("panel.csv");
    let status = corrnet(&[
        "synth",
        "--seed",
        "5",
        "--assets",
        "12",
        "--days",
        "60",
        "--factors",
        "1",
        "--output",
        panel.to_str().unwrap(),
    ]);
    assert!(status.status.success());

    // Second window extends past the panel's last date -> range error.
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        format!(
            "price_file = {panel:?}\n\
             [[windows]]\nid = \"good\"\nstart = \"2019-01-01\"\nend = \"2019-03-02\"\n\
             [[windows]]\nid = \"bad\"\nstart = \"2019-01-01\"\nend = \"2019-12-31\"\n",
            panel = panel.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let result = invoke(&cfg, &out, "run");
    assert_eq!(result.status.code(), Some(3));
    assert!(out.join("windows/good/report.csv").is_file());
    assert!(!out.join("windows/bad/panel.csv").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["windows"].as_array().unwrap().len(), 1);
    let failures = manifest["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0]["window_id"], "bad");
}

#[test]
fn synth_output_round_trips_through_ingest_check() {
    let tmp = tempfile::tempdir().unwrap();
    let panel = tmp.path().join("synthetic.csv");
    let result = corrnet(&[
        "synth",
        "--seed",
        "7",
        "--assets",
        "20",
        "--days",
        "100",
        "--factors",
        "2",
        "--output",
        panel.to_str().unwrap(),
    ]);
    assert!(result.status.success());

    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        format!(
            "price_file = {panel:?}\n\
             [[windows]]\nid = \"w\"\nstart = \"2019-01-01\"\nend = \"2019-04-11\"\n",
            panel = panel.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let result = invoke(&cfg, &out, "ingest-check");
    assert!(result.status.success());
    let ingest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("windows/w/ingest.json")).unwrap())
            .unwrap();
    assert_eq!(ingest["n_assets"].as_u64(), Some(20));
    assert_eq!(ingest["n_days"].as_u64(), Some(100));

    // Same seed, same arguments: identical bytes.
    let panel2 = tmp.path().join("synthetic2.csv");
    let result = corrnet(&[
        "synth",
        "--seed",
        "7",
        "--assets",
        "20",
        "--days",
        "100",
        "--factors",
        "2",
        "--output",
        panel2.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert_eq!(
        std::fs::read(&panel).unwrap(),
        std::fs::read(&panel2).unwrap()
    );
}

/// The MP overlay emitted into the eigenvalue histogram integrates to ~1 by
/// the trapezoid rule over bin midpoints (grid resolution pins the residual
/// below 1e-2).
#[test]
fn emitted_mp_overlay_integrates_to_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = bundled_config();
    assert!(invoke(&cfg, &out, "ingest-check").status.success());
    assert!(invoke(&cfg, &out, "rmt").status.success());

    let text = std::fs::read_to_string(out.join("windows/full/eigenvalue_hist.csv")).unwrap();
    let mut mids = Vec::new();
    let mut density = Vec::new();
    let mut count_total = 0_u64;
    let mut count_excl = 0_u64;
    let mut lambda1_flags = 0_u64;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let left: f64 = fields[0].parse().unwrap();
        let right: f64 = fields[1].parse().unwrap();
        mids.push(0.5 * (left + right));
        count_total += fields[2].parse::<u64>().unwrap();
        count_excl += fields[3].parse::<u64>().unwrap();
        density.push(fields[4].parse::<f64>().unwrap());
        lambda1_flags += fields[5].parse::<u64>().unwrap();
    }
    assert_eq!(count_total, 20, "counts conserve the spectrum size");
    assert_eq!(count_excl, 19, "excluding lambda_1 drops exactly one");
    assert_eq!(lambda1_flags, 1, "exactly one bin holds lambda_1");

    let mut integral = 0.0;
    for k in 0..mids.len() - 1 {
        integral += 0.5 * (density[k] + density[k + 1]) * (mids[k + 1] - mids[k]);
    }
    assert!(
        (integral - 1.0).abs() < 1e-2,
        "trapezoid integral {integral}"
    );
}

/// Histogram bin counts in the correlation export sum to N(N-1)/2.
#[test]
fn corr_hist_counts_conserve() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = bundled_config();
    assert!(invoke(&cfg, &out, "ingest-check").status.success());
    assert!(invoke(&cfg, &out, "rmt").status.success());
    let text = std::fs::read_to_string(out.join("windows/full/corr_hist.csv")).unwrap();
    let total: u64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 20 * 19 / 2);
}

/// `--seed` overrides the config seed and is echoed into the stage summary.
#[test]
fn seed_override_reaches_louvain() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = bundled_config();
    assert!(invoke(&cfg, &out, "ingest-check").status.success());
    assert!(invoke(&cfg, &out, "rmt").status.success());
    assert!(invoke(&cfg, &out, "graph").status.success());

    let result = corrnet(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
        "communities",
    ]);
    assert!(result.status.success());
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("windows/full/communities.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["seed"].as_u64(), Some(5));
}

/// The worker limit changes scheduling only: a one-worker run produces the
/// same bytes as the default all-cores run.
#[test]
fn worker_limit_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let panel = tmp.path().join("panel.csv");
    assert!(corrnet(&[
        "synth",
        "--seed",
        "3",
        "--assets",
        "15",
        "--days",
        "80",
        "--factors",
        "1",
        "--output",
        panel.to_str().unwrap(),
    ])
    .status
    .success());

    let mk_cfg = |workers: usize| {
        let path = tmp.path().join(format!("cfg{workers}.toml"));
        std::fs::write(
            &path,
            format!(
                "price_file = {panel:?}\nmax_workers = {workers}\n\
                 [[windows]]\nid = \"a\"\nstart = \"2019-01-01\"\nend = \"2019-02-20\"\n\
                 [[windows]]\nid = \"b\"\nstart = \"2019-02-01\"\nend = \"2019-03-22\"\n",
                panel = panel.to_str().unwrap()
            ),
        )
        .unwrap();
        path
    };
    let out_serial = tmp.path().join("serial");
    let out_parallel = tmp.path().join("parallel");
    assert!(invoke(&mk_cfg(1), &out_serial, "run").status.success());
    assert!(invoke(&mk_cfg(0), &out_parallel, "run").status.success());

    for window in ["a", "b"] {
        for name in [
            "correlation.csv",
            "mst_edges.csv",
            "communities.csv",
            "report.csv",
        ] {
            let lhs = std::fs::read(out_serial.join("windows").join(window).join(name)).unwrap();
            let rhs = std::fs::read(out_parallel.join("windows").join(window).join(name)).unwrap();
            assert_eq!(
                lhs, rhs,
                "windows/{window}/{name} differs across worker limits"
            );
        }
    }
}
