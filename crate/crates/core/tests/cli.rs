mod common;

use common::{dataset_path, json, refcast, stdout};
use refcast::cli::ClassStats;
use refcast::sample_data;
use refcast::sim::SimResult;
use refcast::ForecastReport;

fn data() -> String {
    dataset_path().display().to_string()
}

#[test]
fn stats_rail_cost() {
    let out = refcast(&["stats", "--data", &data(), "--type", "rail", "--measure", "cost"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
    let v = json(&out);
    assert_eq!(v["n"], 58);
    assert!((v["mean"].as_f64().unwrap() - 44.7).abs() < 0.05);
    assert!((v["sd"].as_f64().unwrap() - 38.4).abs() < 0.05);
}

#[test]
fn stats_rail_traffic() {
    let v = json(&refcast(&["stats", "--data", &data(), "--type", "rail", "--measure", "traffic"]));
    assert!((v["mean"].as_f64().unwrap() + 51.4).abs() < 0.05);
    assert!((v["share_outside_band"].as_f64().unwrap() - 0.84).abs() <= 1.0 / 25.0);
}

#[test]
fn stats_optional_sections() {
    let args = ["stats", "--data", &data(), "--type", "rail", "--ci-level", "0.9", "--reps", "300", "--versus", "road"];
    let a = refcast(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, refcast(&args).stdout);
    let v = json(&a);
    let (lo, hi) = (v["mean_ci"]["lower"].as_f64().unwrap(), v["mean_ci"]["upper"].as_f64().unwrap());
    assert!(lo < 44.7 && 44.7 < hi);
    assert_eq!(v["separation"]["versus"], "road/cost");
    assert_eq!(v["separation"]["method"], "mann_whitney_u_normal_tie_corrected");
    assert!(v["separation"]["p_value"].as_f64().unwrap() < 0.01);
}

#[test]
fn payloads_round_trip() {
    let stats = stdout(&refcast(&["stats", "--data", &data(), "--bundled", "--ci-level", "0.95", "--reps", "100"]));
    let parsed: Vec<ClassStats> = serde_json::from_str(&stats).unwrap();
    assert_eq!(parsed.len(), 6);
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", stats);

    let report = stdout(&refcast(&["uplift", "--data", &data(), "--type", "road", "--risk", "0.2", "--base", "90"]));
    let parsed: ForecastReport = serde_json::from_str(&report).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", report);

    let cfg = common::config_path("zero_bias.conf").display().to_string();
    let sim = stdout(&refcast(&["simulate", "--config", &cfg]));
    let parsed: SimResult = serde_json::from_str(&sim).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", sim);
}

#[test]
fn missing_dataset_is_a_data_error() {
    let out = refcast(&["stats", "--data", "/definitely/not/here.csv", "--type", "rail"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn malformed_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut text = std::fs::read_to_string(dataset_path()).unwrap();
    text.push_str("XX-1,bad,rail,UK,2000,1999,10,11,MUSD,,,\n");
    std::fs::write(&path, text).unwrap();
    let out = refcast(&["stats", "--data", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("year order"));
}

#[test]
fn usage_errors() {
    for args in [
        vec!["uplift", "--data", &data(), "--type", "rail", "--risk", "0", "--base", "4000"],
        vec!["uplift", "--data", &data(), "--type", "rail", "--risk", "1.5", "--base", "4000"],
        vec!["uplift", "--data", &data(), "--type", "rail", "--risk", "0.5", "--base", "-1"],
        vec!["stats", "--data", &data(), "--type", "canal"],
        vec!["curve", "--data", &data(), "--grid", "0.5,0.1"],
        vec!["curve", "--data", &data(), "--histogram", "--bin-width", "0"],
        vec!["stats"],
        vec!["launch"],
    ] {
        let out = refcast(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn empty_class_is_a_data_error() {
    let out = refcast(&[
        "uplift",
        "--data",
        &data(),
        "--type",
        "other",
        "--measure",
        "traffic",
        "--risk",
        "0.5",
        "--base",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn uk_rail_uplift_anchors() {
    for (risk, pct, amount) in [("0.5", 40.0, 1600.0), ("0.1", 68.0, 2720.0)] {
        let out = refcast(&[
            "uplift",
            "--data",
            &data(),
            "--type",
            "rail",
            "--region",
            "UK",
            "--risk",
            risk,
            "--base",
            "4000",
        ]);
        let v = json(&out);
        assert_eq!(v["uplift_pct"].as_f64(), Some(pct));
        assert_eq!(v["uplift_amount"].as_f64(), Some(amount));
        assert_eq!(v["adjusted_estimate"].as_f64(), Some(4000.0 + amount));
        assert_eq!(v["clamped"], false);
    }
}

#[test]
fn clamp_at_full_risk() {
    let v =
        json(&refcast(&["uplift", "--data", &data(), "--type", "road", "--risk", "1.0", "--base", "500", "--clamp"]));
    assert_eq!(v["uplift_pct"].as_f64(), Some(0.0));
    assert_eq!(v["clamped"], true);
    let v = json(&refcast(&["uplift", "--data", &data(), "--type", "road", "--risk", "1.0", "--base", "500"]));
    assert!(v["uplift_pct"].as_f64().unwrap() < 0.0);
}

#[test]
fn delay_adds_to_uplift() {
    let v = json(&refcast(&[
        "uplift",
        "--data",
        &data(),
        "--type",
        "rail",
        "--region",
        "UK",
        "--risk",
        "0.5",
        "--base",
        "4000",
        "--delay-years",
        "2",
    ]));
    assert!((v["uplift_pct"].as_f64().unwrap() - 49.28).abs() < 1e-9);
}

#[test]
fn small_class_warning_goes_to_stderr() {
    let out = refcast(&["uplift", "--data", &data(), "--type", "other", "--risk", "0.5", "--base", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(serde_json::from_slice::<ForecastReport>(&out.stdout).is_ok());
}

#[test]
fn curve_csv_rows() {
    let out = refcast(&["curve", "--data", &data(), "--type", "rail", "--region", "UK", "--grid", "0.1,0.5"]);
    assert_eq!(stdout(&out), "acceptable_risk,uplift_pct\n0.1,68\n0.5,40\n");
}

fn attr<'a>(svg: &'a str, element: &str, name: &str) -> &'a str {
    let start = svg.find(element).unwrap();
    let key = format!("{name}=\"");
    let at = start + svg[start..].find(&key).unwrap() + key.len();
    let end = at + svg[at..].find('"').unwrap();
    &svg[at..end]
}

fn numbers(s: &str) -> Vec<f64> {
    s.split([' ', ',']).filter(|t| !t.is_empty()).map(|t| t.parse().unwrap()).collect()
}

#[test]
fn svg_curve_decodes_to_csv_values() {
    for class in [["--type", "rail"], ["--type", "road"]] {
        let base = ["curve", "--data", &data(), class[0], class[1]];
        let csv = stdout(&refcast(&base));
        let svg = stdout(&refcast(&[&base[..], &["--format", "svg"]].concat()));
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("Acceptable risk") && svg.contains("percent"));
        let plot = numbers(attr(&svg, "<polyline", "data-plot"));
        let xr = numbers(attr(&svg, "<polyline", "data-x-range"));
        let yr = numbers(attr(&svg, "<polyline", "data-y-range"));
        let pts = numbers(attr(&svg, "<polyline", "points"));
        let rows: Vec<(f64, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(pts.len(), 2 * rows.len());
        for (pair, (risk, uplift)) in pts.chunks(2).zip(rows) {
            let x = xr[0] + (pair[0] - plot[0]) / plot[2] * (xr[1] - xr[0]);
            let y = yr[1] - (pair[1] - plot[1]) / plot[3] * (yr[1] - yr[0]);
            assert!((x - risk).abs() <= 0.005 * (xr[1] - xr[0]));
            assert!((y - uplift).abs() <= 0.005 * (yr[1] - yr[0]));
        }
    }
}

#[test]
fn histogram_markers_follow_region_groups() {
    let one = stdout(&refcast(&[
        "curve",
        "--data",
        &data(),
        "--type",
        "rail",
        "--region",
        "UK",
        "--histogram",
        "--format",
        "svg",
    ]));
    assert_eq!(one.matches("class=\"mean-marker\"").count(), 1);
    let two = stdout(&refcast(&["curve", "--data", &data(), "--type", "rail", "--histogram", "--format", "svg"]));
    assert_eq!(two.matches("class=\"mean-marker\"").count(), 2);
    assert!(two.contains(r#"viewBox="0 0 800 500""#));

    let csv = stdout(&refcast(&["curve", "--data", &data(), "--type", "rail", "--histogram", "--bin-width", "25"]));
    let total: usize = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 58);
    assert!(csv.lines().skip(1).all(|l| {
        let f: Vec<&str> = l.split(',').collect();
        f[2].parse::<f64>().unwrap() - f[1].parse::<f64>().unwrap() == 25.0
    }));
}

#[test]
fn sample_data_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = refcast(&["make-sample-data", "--seed", "3781", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes, std::fs::read(dataset_path()).unwrap());
    assert_eq!(stdout(&refcast(&["make-sample-data"])).as_bytes(), &bytes[..]);
}

#[test]
fn unwritable_output_is_a_data_error() {
    let out = refcast(&["make-sample-data", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn other_seeds_keep_class_targets() {
    let targets = [
        (["rail", "cost"], sample_data::RAIL_COST),
        (["bridge_tunnel", "cost"], sample_data::BRIDGE_TUNNEL_COST),
        (["road", "cost"], sample_data::ROAD_COST),
        (["rail", "traffic"], sample_data::RAIL_TRAFFIC),
        (["road", "traffic"], sample_data::ROAD_TRAFFIC),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut previous: Option<Vec<u8>> = None;
    for seed in ["1", "2", "99"] {
        let path = dir.path().join(format!("s{seed}.csv"));
        let p = path.to_str().unwrap();
        assert_eq!(refcast(&["make-sample-data", "--seed", seed, "--out", p]).status.code(), Some(0));
        let bytes = std::fs::read(&path).unwrap();
        assert_ne!(previous.as_ref(), Some(&bytes));
        previous = Some(bytes);
        for ([t, m], target) in &targets {
            let v = json(&refcast(&["stats", "--data", p, "--type", t, "--measure", m]));
            assert_eq!(v["n"].as_u64(), Some(target.n as u64));
            assert!((v["mean"].as_f64().unwrap() - target.mean).abs() < 0.05, "seed {seed} {t}/{m}");
            assert!((v["sd"].as_f64().unwrap() - target.sd).abs() < 0.05, "seed {seed} {t}/{m}");
        }
        let uk = ["curve", "--data", p, "--type", "rail", "--region", "UK", "--grid", "0.1,0.5"];
        assert_eq!(stdout(&refcast(&uk)), "acceptable_risk,uplift_pct\n0.1,68\n0.5,40\n");
        let v = json(&refcast(&["stats", "--data", p, "--type", "rail", "--measure", "traffic"]));
        assert!((v["share_outside_band"].as_f64().unwrap() - 0.84).abs() <= 1.0 / 25.0);
    }
}

#[test]
fn simulate_bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "n_candidates = 3\nbudget = many\n").unwrap();
    let out = refcast(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert_eq!(refcast(&["simulate", "--config", "/no/such.conf"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_trial_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("trials.csv");
    let cfg = common::config_path("zero_bias.conf").display().to_string();
    let out = refcast(&["simulate", "--config", &cfg, "--trials-csv", table.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 201);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
}
