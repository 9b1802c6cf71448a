use std::fs;
use std::process::Command;

use aoi_cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("aoi").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

const ERLANG: [&str; 8] = [
    "--lambda1",
    "1",
    "--lambda2",
    "0",
    "--mu",
    "1",
    "--alpha",
    "1",
];

fn with(extra: &[&'static str]) -> Vec<&'static str> {
    let mut v = extra.to_vec();
    v.extend(ERLANG);
    v
}

#[test]
fn mgf_golden() {
    let (code, out, _) = call(&with(&["mgf", "--policy", "preemptive", "--s", "-1,0,1.5"]));
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "s,method,value\n\
         -1,closed_form,0.125\n\
         -1,shs_engine,0.125\n\
         0,closed_form,1\n\
         0,shs_engine,1\n\
         1.5,closed_form,ERR_DOMAIN\n\
         1.5,shs_engine,ERR_DOMAIN\n"
    );
}

#[test]
fn mgf_replace_has_no_closed_form() {
    let (code, out, _) = call(&with(&[
        "mgf",
        "--policy",
        "blocking",
        "--sink-handoff",
        "replace",
        "--s=-1",
    ]));
    assert_eq!(code, 0);
    assert!(out.contains("-1,closed_form,NA\n"));
}

#[test]
fn moments_golden() {
    let (code, out, _) = call(&with(&["moments", "--policy", "preemptive", "-m", "2"]));
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "order,method,value\n\
         1,closed_form,3\n\
         1,shs_engine,3\n\
         2,closed_form,12\n\
         2,shs_engine,12\n\
         std,closed_form,1.73205080757\n\
         std,shs_engine,1.73205080757\n"
    );
    let (_, out, _) = call(&with(&["moments", "-m", "0"]));
    assert_eq!(out, "order,method,value\n0,closed_form,1\n0,shs_engine,1\n");
    let (_, out, _) = call(&with(&["moments", "--policy", "blocking", "-m", "1"]));
    assert!(out.contains("1,closed_form,") && out.contains("1,shs_engine,"));
    let (code, _, err) = call(&with(&["moments", "-m", "9"]));
    assert_eq!(code, 1, "{err}");
}

#[test]
fn sweep_header_and_rows() {
    let (code, out, _) = call(&["sweep"]);
    assert_eq!(code, 0);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(
        lines[0],
        "policy,method,lambda1,lambda2,mu,alpha,rho1,mean_aoi,std_aoi,ci95_mean"
    );
    assert_eq!(lines.len(), 81);
    assert!(lines[1]
        .starts_with("preemptive,closed_form,0.238095238095,4.7619047619,1,1,0.238095238095,"));
    assert!(lines[1].ends_with(','));
    let (_, again, _) = call(&["sweep"]);
    assert_eq!(out, again);
}

#[test]
fn usage_errors_exit_1() {
    let (code, _, err) = call(&[
        "validate",
        "--policy",
        "preemptive",
        "--lambda1",
        "1",
        "--mu",
        "1",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("--alpha"), "{err}");
    assert_eq!(call(&with(&["mgf", "--policy", "fifo", "--s=-1"])).0, 1);
    assert_eq!(call(&with(&["mgf"])).0, 1);
    assert_eq!(
        call(&[
            "mgf",
            "--lambda1",
            "-1",
            "--mu",
            "1",
            "--alpha",
            "1",
            "--s=-1"
        ])
        .0,
        1
    );
    assert_eq!(call(&with(&["mgf", "--source", "2", "--s=-1"])).0, 1);
    assert_eq!(call(&["frobnicate"]).0, 1);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn validate_exit_codes_and_discrepancy_section() {
    let (code, out, _) = call(&with(&["validate", "--policy", "blocking"]));
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("DISC-2"));
    assert!(out.contains("sum of entries at s=0"));
    let (code, out, _) = call(&with(&["validate", "--format", "json"]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["known_discrepancies"][0]["id"], "DISC-1");
}

#[test]
fn validate_with_simulation() {
    let (code, out, _) = call(&with(&[
        "validate",
        "--sim",
        "--replications",
        "4",
        "--horizon",
        "20000",
        "--seed",
        "3",
    ]));
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("[simulation]"));
}

#[test]
fn simulate_is_deterministic_and_echoes_policy() {
    let args = with(&[
        "simulate",
        "--policy",
        "blocking",
        "--sink-handoff",
        "drop",
        "--replications",
        "2",
        "--horizon",
        "2000",
        "--seed",
        "11",
    ]);
    let (code, a, _) = call(&args);
    assert_eq!(code, 0);
    assert_eq!(a, call(&args).1);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for key in [
        "mean",
        "second_moment",
        "std",
        "ci95_mean",
        "mgf",
        "seed",
        "replications",
        "horizon",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["policy"]["kind"], "blocking");
    assert_eq!(v["policy"]["sink_handoff"], "drop");
    assert_eq!(v["mgf"][0]["s"], -1.0);
    assert!(v["mgf"][0].get("ci95").is_some());
    assert_eq!(call(&with(&["simulate", "--replications", "0"])).0, 1);
}

#[test]
fn model_export_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let p = path.to_str().unwrap();
    let params = [
        "--lambda1",
        "0.7",
        "--lambda2",
        "1.3",
        "--mu",
        "2",
        "--alpha",
        "0.5",
    ];
    let mut export = vec!["model", "export", "--policy", "preemptive", "--out", p];
    export.extend(params);
    assert_eq!(call(&export).0, 0);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["states"].as_array().unwrap().len(), 9);
    assert_eq!(doc["transitions"].as_array().unwrap().len(), 27);

    let (code, out, _) = call(&["model", "solve", p, "-m", "2"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    let mut moments = vec!["moments", "-m", "2"];
    moments.extend(params);
    let (_, csv, _) = call(&moments);
    for k in 1..=2 {
        let engine_row = csv
            .lines()
            .find(|l| l.starts_with(&format!("{k},shs_engine,")))
            .unwrap();
        let from_solve = report["moments"][k].as_f64().unwrap();
        assert_eq!(
            engine_row.rsplit(',').next().unwrap(),
            aoi_cli::csv::fmt_num(from_solve)
        );
    }
}

#[test]
fn model_solve_rejects_bad_documents() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"states": ["a", "b"], "age_dim": 1, "aoi_component": 0,
            "transitions": [{"id": 0, "from": 0, "to": 1, "rate": 1.0, "reset": [[2]]},
                            {"id": 1, "from": 1, "to": 0, "rate": 1.0, "reset": [[0]]}]}"#,
    )
    .unwrap();
    let (code, _, err) = call(&["model", "solve", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("reset map entry (0, 0) is 2"), "{err}");
    fs::write(&bad, "{\n  \"states\": [\"a\"],\n  \"age_dim\": 1,,\n}").unwrap();
    let (code, _, err) = call(&["model", "solve", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_aoi");
    let ok = Command::new(bin)
        .args(with(&["mgf", "--s=-1"]))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("s,method,value\n"));
    let bad = Command::new(bin)
        .args(["mgf", "--lambda1", "1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
