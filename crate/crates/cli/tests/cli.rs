use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dcbus() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dcbus"));
    c.env_remove("DCBUS_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    dcbus().args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// `key = value` lines of a design report.
fn report(out: &Output) -> HashMap<String, String> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn num(r: &HashMap<String, String>, key: &str) -> f64 {
    r[key].parse().unwrap()
}

fn csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

/// Numeric rows of a CSV whose columns are all numbers.
fn numeric(path: &Path) -> (String, Vec<Vec<f64>>) {
    let (header, rows) = csv(path);
    let rows = rows
        .into_iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

/// Significant digits in a formatted number.
fn sig_digits(v: &str) -> usize {
    let mantissa = v.split(['e', 'E']).next().unwrap();
    mantissa.replace(['-', '.'], "").trim_start_matches('0').len()
}

#[test]
fn design_from_harmonic_target() {
    let r = report(&run(&[
        "design",
        "--scheme",
        "improved",
        "--phase-margin",
        "45",
        "--target-i3",
        "2",
    ]));
    assert!((num(&r, "f_n_hz") / 12.93 - 1.0).abs() < 0.005);
    assert!((num(&r, "i3_pct") - 2.0).abs() < 1e-6);
    let r = report(&run(&[
        "design",
        "--scheme",
        "conventional",
        "--phase-margin",
        "45",
        "--target-i3",
        "2",
    ]));
    assert!((num(&r, "f_n_hz") / 4.75 - 1.0).abs() < 0.005);
    assert_eq!(r["t_f_s"], "none");
}

#[test]
fn beta_and_bandwidth_entry_gives_the_same_design() {
    let a = report(&run(&[
        "design",
        "--scheme",
        "improved",
        "--phase-margin",
        "45",
        "--target-i3",
        "2",
    ]));
    let b = report(&run(&[
        "design",
        "--scheme",
        "improved",
        "--beta",
        "5.828",
        "--bandwidth-hz",
        "12.93",
    ]));
    for key in ["k_p_a_per_v", "t_i_s", "t_f_s"] {
        assert!((num(&a, key) / num(&b, key) - 1.0).abs() < 0.005, "{key}");
    }
}

#[test]
fn design_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = run(&[
        "design",
        "--scheme",
        "improved",
        "--phase-margin",
        "45",
        "--target-i3",
        "2",
        "--plant",
        configs().join("plant_reference.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(fs::read_to_string(out.join("design.txt"))
        .unwrap()
        .contains("scheme = improved"));
    let (header, rows) = csv(&out.join("metrics.csv"));
    assert_eq!(header, "design_id,i3_pct,thd_pct,dvmax_v,itae_vs2,settle_s,q_var");
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "improved");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_with_2() {
    let cases: [&[&str]; 4] = [
        &["design", "--scheme", "improved", "--xi", "0.7", "--bandwidth-hz", "10"],
        &[
            "design",
            "--scheme",
            "improved",
            "--phase-margin",
            "45",
            "--beta",
            "5.8",
            "--bandwidth-hz",
            "10",
        ],
        &["design", "--scheme", "improved", "--phase-margin", "45"],
        &[
            "design",
            "--scheme",
            "sideways",
            "--phase-margin",
            "45",
            "--bandwidth-hz",
            "10",
        ],
    ];
    for args in cases {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
    let o = dcbus()
        .env("DCBUS_PRECISION", "zero")
        .args([
            "design",
            "--scheme",
            "improved",
            "--phase-margin",
            "45",
            "--bandwidth-hz",
            "10",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreachable_target_exits_with_3() {
    let o = run(&[
        "design",
        "--scheme",
        "improved",
        "--phase-margin",
        "45",
        "--target-i3",
        "90",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not bracketed"));
}

#[test]
fn simulate_design_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("design2.toml");
    let nl = dir.path().join("nl");
    let li = dir.path().join("lin");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        nl.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, t) = csv(&nl.join("transient.csv"));
    assert_eq!(header, "scenario,peak_dev_v,settle_s");
    let peak: f64 = t[0][1].parse().unwrap();
    let settle: f64 = t[0][2].parse().unwrap();
    assert!((peak / 23.1 - 1.0).abs() < 0.10, "{peak}");
    assert!((settle / 0.07 - 1.0).abs() < 0.30, "{settle}");

    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        li.to_str().unwrap(),
        "--linear",
    ]);
    assert!(o.status.success());
    let (header, a) = numeric(&nl.join("trace.csv"));
    let (_, b) = numeric(&li.join("trace.csv"));
    assert_eq!(header, "t,v_o,i_p_ref,v_s,i_s,i_o,p_o");
    assert_eq!(a.len(), 30000);
    // after the saturated startup the two models stay within 2 V
    let worst = a
        .iter()
        .zip(&b)
        .filter(|(r, _)| r[0] >= 0.1)
        .map(|(r, s)| (r[1] - s[1]).abs())
        .fold(0.0, f64::max);
    assert!(worst < 2.0, "{worst}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    let text = "name = \"short\"\n[design]\nscheme = \"conventional\"\nphase_margin_deg = 45.0\nbandwidth_hz = 4.75\n\
                [simulation]\nt_end = 0.5\n[[events]]\ntime = 0.2\nresistor_ohms = 166.67\n";
    fs::write(&cfg, text).unwrap();
    let mut digests = Vec::new();
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])
        .status
        .success());
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        digests.push(m["config_digest"].as_str().unwrap().to_string());
        traces.push(fs::read(out.join("trace.csv")).unwrap());
    }
    assert_eq!(digests[0], digests[1]);
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn zero_length_run_has_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(
        &cfg,
        "[design]\nscheme = \"improved\"\nbeta = 5.828\nbandwidth_hz = 12.93\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(out.join("trace.csv")).unwrap(),
        "t,v_o,i_p_ref,v_s,i_s,i_o,p_o\n"
    );
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["outputs"][0]["path"], "trace.csv");
}

#[test]
fn divergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("overload.toml");
    fs::write(
        &cfg,
        "[gains]\nk_p = 0.2\nt_i = 0.03\n[simulation]\nt_end = 1.0\n[[events]]\ntime = 0.0\nconstant_power_w = 50000.0\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged after t ="));
}

#[test]
fn sweep_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let o = run(&[
        "sweep",
        "--curve",
        "i3",
        "--scheme",
        "improved",
        "--phase-margin",
        "45",
        "--f-min-hz",
        "2.93",
        "--f-max-hz",
        "22.93",
        "--points",
        "11",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = numeric(&dir.path().join("i3.csv"));
    assert_eq!(h, "f_n_hz,i3_pct");
    let at = rows.iter().find(|r| (r[0] - 12.93).abs() < 1e-6).unwrap();
    assert!((at[1] - 2.0).abs() < 0.02, "{}", at[1]);

    let o = run(&[
        "sweep",
        "--curve",
        "dvmax",
        "--scheme",
        "conventional",
        "--phase-margin",
        "45",
        "--f-min-hz",
        "0.75",
        "--f-max-hz",
        "20.75",
        "--points",
        "21",
        "--out",
        out,
    ]);
    assert!(o.status.success());
    let (h, rows) = numeric(&dir.path().join("dvmax.csv"));
    assert_eq!(h, "f_n_hz,dvmax_v,settle_s");
    let at = rows.iter().find(|r| (r[0] - 4.75).abs() < 1e-6).unwrap();
    assert!((at[1] / 43.2 - 1.0).abs() < 0.05, "{}", at[1]);

    let o = run(&[
        "sweep",
        "--curve",
        "itae",
        "--scheme",
        "conventional",
        "--phase-margin",
        "45",
        "--f-min-hz",
        "4.75",
        "--f-max-hz",
        "4.75",
        "--points",
        "1",
        "--out",
        out,
    ]);
    assert!(o.status.success());
    let (_, rows) = numeric(&dir.path().join("itae.csv"));
    assert!((rows[0][1] / 0.35 - 1.0).abs() < 0.10);

    let o = run(&[
        "sweep",
        "--curve",
        "robustness",
        "--scheme",
        "improved",
        "--phase-margin",
        "45",
        "--target-i3",
        "2",
        "--points",
        "7",
        "--out",
        out,
    ]);
    assert!(o.status.success());
    let (h, rows) = numeric(&dir.path().join("robustness.csv"));
    assert_eq!(h, "v_scale,pm_deg,wc_rad_s");
    assert!((rows[6][1] - 44.4).abs() < 0.5);
    assert!((rows[3][1] - 45.0).abs() < 1e-6);

    let o = run(&[
        "sweep",
        "--curve",
        "i3",
        "--scheme",
        "improved",
        "--phase-margin",
        "45",
        "--bandwidth-hz",
        "10",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bode_and_precision_override() {
    let dir = tempfile::tempdir().unwrap();
    let bode = |precision: Option<&str>, name: &str| -> String {
        let out = dir.path().join(name);
        let mut c = dcbus();
        if let Some(p) = precision {
            c.env("DCBUS_PRECISION", p);
        }
        let o = c
            .args([
                "bode",
                "--scheme",
                "improved",
                "--beta",
                "5.828",
                "--bandwidth-hz",
                "12.93",
                "--f-min-hz",
                "0.1",
                "--f-max-hz",
                "1000",
                "--points-per-decade",
                "10",
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out.join("bode.csv")).unwrap()
    };
    let full = bode(None, "full");
    let short = bode(Some("4"), "short");
    assert_eq!(full.lines().next(), Some("freq_hz,mag_db,phase_deg"));
    assert_eq!(full.lines().count(), 42);
    assert_ne!(full, short);
    let cells: Vec<&str> = short.lines().skip(1).flat_map(|l| l.split(',')).collect();
    assert!(cells.iter().all(|v| sig_digits(v) <= 4), "{short}");
    assert!(full
        .lines()
        .skip(1)
        .flat_map(|l| l.split(','))
        .any(|v| sig_digits(v) > 4));
}
