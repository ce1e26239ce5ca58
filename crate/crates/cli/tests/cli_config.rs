use std::fs;

use curlheat::harness::{ScheduleVariant, Summary};
use curlheat::solver::Scheme;
use curlheat_cli::{parse_config, parse_config_with, run, CliError, Command, RunConfig};

#[test]
fn minimal_chain_line() {
    let cfg = parse_config("command=chain p0=2 steps=3").unwrap();
    assert_eq!(cfg.command, Command::Chain);
    assert_eq!(cfg.p0, 2.0);
    assert_eq!(cfg.steps, 3);
    assert_eq!(cfg.alpha, RunConfig::new(Command::Chain).alpha);
}

#[test]
fn sections_comments_and_lists() {
    let text = "\
# a solve run
command = solve
seed = 4

[problem]
scheme = be
n = 9
t_final = 0.25

[norms]
q = 2, 4, 10
";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.command, Command::Solve);
    assert_eq!(cfg.seed, 4);
    assert_eq!(cfg.scheme, Scheme::BackwardEuler);
    assert_eq!(cfg.n, 9);
    assert_eq!(cfg.q, vec![2.0, 4.0, 10.0]);
}

#[test]
fn out_of_range_alpha_names_key_and_line() {
    let err = parse_config("command=chain\n[norms]\nalpha=1.5\n").unwrap_err();
    match &err {
        CliError::Config { line, key, .. } => {
            assert_eq!(*line, 3);
            assert_eq!(key, "alpha");
        }
        other => panic!("unexpected error {other:?}"),
    }
    let msg = err.to_string();
    assert!(msg.contains("alpha") && msg.contains("line 3"), "{msg}");
}

#[test]
fn unknown_key_reports_line() {
    let err = parse_config("command=solve\n\nbogus=1\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 3") && msg.contains("bogus"), "{msg}");
}

#[test]
fn missing_command_is_an_error() {
    assert!(matches!(parse_config("seed=1").unwrap_err(), CliError::Missing { .. }));
}

#[test]
fn radii_must_be_ordered() {
    assert!(parse_config("command=chain\n[probe]\nr=1.0\nr0=0.5\n").is_err());
}

#[test]
fn overrides_win_and_are_reported_as_command_line() {
    let over = vec![("problem.n".to_string(), "33".to_string()), ("schedule".to_string(), "decreasing".to_string())];
    let cfg = parse_config_with("command=solve\n[problem]\nn=9\n", &over).unwrap();
    assert_eq!(cfg.n, 33);
    assert_eq!(cfg.schedule, ScheduleVariant::Decreasing);
    let bad = vec![("alpha".to_string(), "0".to_string())];
    let msg = parse_config_with("command=solve", &bad).unwrap_err().to_string();
    assert!(msg.contains("command line"), "{msg}");
}

#[test]
fn echo_round_trips() {
    let cfg = parse_config("command=probe-estimate seed=9\n[probe]\nlambda=3\nschedule=decreasing\n[study]\ncharts=sphere\n").unwrap();
    let again = parse_config(&cfg.to_text()).unwrap();
    assert_eq!(cfg, again);
    for c in Command::ALL {
        let d = RunConfig::new(c);
        assert_eq!(parse_config(&d.to_text()).unwrap(), d);
    }
}

#[test]
fn chain_run_writes_exponents() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = parse_config("command=chain p0=2 steps=3").unwrap();
    cfg.out = tmp.path().to_path_buf();
    let outcome = run(&cfg).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    let text = fs::read_to_string(tmp.path().join("chain.txt")).unwrap();
    assert_eq!(text, "2\n10/3\n10\nHölder(α<1/2)\n");
    let summary: Summary = serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary.all_passed());
    assert!(tmp.path().join("config.txt").exists());
}

#[test]
fn flat_geometry_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = parse_config("command=verify-geometry\n[study]\nresolutions=9,17\ncharts=flat\nfields=poly,trig\n").unwrap();
    cfg.out = tmp.path().to_path_buf();
    let outcome = run(&cfg).unwrap();
    assert!(outcome.summary.all_passed(), "{}", outcome.summary.text());
    let csv = fs::read_to_string(tmp.path().join("geometry.csv")).unwrap();
    assert!(csv.starts_with("label,metric,h,dt,value,order\n"));
}

#[test]
fn unknown_chart_is_rejected_at_run_time() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(Command::VerifyGeometry);
    cfg.charts = vec!["torus".into()];
    cfg.out = tmp.path().to_path_buf();
    assert!(run(&cfg).is_err());
}
