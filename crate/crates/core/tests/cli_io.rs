use dissext::commands::*;
use dissext::config::*;

const SHIRLEY: &str = r#"
[scenario]
name = "shirley"
gamma = 2.0
rho = "0.5+0.375i"
phi = "x^2 - x"
"#;

#[test]
fn minimal_config_runs_check() {
    let cfg = parse_config(SHIRLEY).unwrap();
    let (code, report) = run_check(&cfg).unwrap();
    assert_eq!(code, EXIT_DISSIPATIVE);
    assert!((report.margin - 35.0 / 192.0).abs() < 1e-10);
    assert_eq!(report.schema_version, SCHEMA_VERSION);

    let cfg = parse_config(&SHIRLEY.replace("x^2 - x", "0")).unwrap();
    assert_eq!(run_check(&cfg).unwrap().0, EXIT_NOT_DISSIPATIVE);

    let cfg = parse_config("[scenario]\nname = \"konzert\"\ngamma = 0.25\nell = \"1\"\n").unwrap();
    let (code, report) = run_check(&cfg).unwrap();
    assert_eq!(code, EXIT_DISSIPATIVE);
    assert!(report.margin.abs() < 1e-10);
}

#[test]
fn config_errors_are_located() {
    let e = parse_config("[scenario]\nname = \"konzert\"\ngamma = 0.7\nell = \"1\"\n").unwrap_err();
    assert!(e.message.contains("0 < gamma < 1/2"), "{}", e.message);
    assert_eq!(e.line, 3);
    let e = parse_config("").unwrap_err();
    assert!(e.message.contains("scenario"), "{}", e.message);
    let e = parse_config(&SHIRLEY.replace("x^2 - x", "x^2 -* x")).unwrap_err();
    assert_eq!(e.line, 6);
    assert!(e.column > 1);
}

#[test]
fn complex_literals_round_trip() {
    for text in ["0.5+0.375i", "1/2 + 3i/8", "-2i", "inf", "3"] {
        let r = parse_complex(text).unwrap();
        assert_eq!(parse_complex(&format_complex(r)).unwrap(), r, "{text}");
    }
    assert!(parse_complex("1 +").is_err());
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = parse_config(SHIRLEY).unwrap();
    assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn sweep_grid_is_complete() {
    let cfg = parse_config(SHIRLEY).unwrap();
    let axes = SweepConfig { re: [-1.0, 1.0], im: [-0.5, 0.5], step: 0.25 };
    let out = run_sweep(&cfg, &axes).unwrap();
    assert_eq!((out.axes.re_count, out.axes.im_count), (9, 5));
    assert_eq!(out.points.len(), 45);
    assert!(out.points.iter().all(|p| p.margin.is_finite()));
    assert_eq!(out.points[1].im_rho, -0.5);
    assert_eq!(out.points[9].re_rho, -1.0);
    let csv = out.to_csv();
    assert_eq!(csv.lines().count(), 46);
    assert_eq!(run_sweep(&cfg, &axes).unwrap().to_csv(), csv);
    let bad = SweepConfig { step: 0.0, ..axes };
    assert!(run_sweep(&cfg, &bad).is_err());
}

#[test]
fn oracle_command_reports_agreement() {
    let cfg = parse_config(&format!("{SHIRLEY}\n[oracle]\nmeshes = [32, 64]\ntol = 1e-5\n")).unwrap();
    let (code, out) = run_oracle(&cfg).unwrap();
    assert_eq!(code, 0);
    assert_eq!(out.report.agreement, Some(true));
    let json: serde_json::Value = serde_json::from_str(&to_json(&out)).unwrap();
    assert_eq!(json["verdict"]["criterion"], "strict_pos_5_3");
}
