use std::process::{Command, Output};

fn alignppl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alignppl"))
        .args(args)
        .env_remove("ALIGNPPL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).expect("json output")
}

fn without_time(mut j: serde_json::Value) -> serde_json::Value {
    j.as_object_mut().unwrap().remove("wallMs");
    j
}

#[test]
fn analyze_table_lists_fig4_flags() {
    let o = alignppl(&["analyze", "--model", "fig4"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for n in ["t2", "t3", "t4", "t5"] {
        let row = out.lines().find(|l| l.split_whitespace().next() == Some(n)).unwrap();
        assert!(row.contains("unaligned"), "{row}");
    }
    let a1 = out.lines().find(|l| l.starts_with("a1 ")).unwrap();
    assert!(a1.contains(" aligned") && a1.contains("stoch"), "{a1}");
}

#[test]
fn analyze_json_with_constraints() {
    let j = json(&alignppl(&["analyze", "--model", "geometric", "--format", "json", "--dump-constraints"]));
    assert_eq!(j["program"], "geometric");
    assert_eq!(j["binders"]["x"]["unaligned"], true);
    assert!(!j["constraints"].as_array().unwrap().is_empty());
}

#[test]
fn smc_is_reproducible_and_thread_independent() {
    let args = ["smc", "--aligned", "--model", "fig6b", "-n", "2000", "--seed", "5"];
    let a = without_time(json(&alignppl(&args)));
    let b = without_time(json(&alignppl(&args)));
    assert_eq!(a, b);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "4"]);
    assert_eq!(a, without_time(json(&alignppl(&threaded))));
    assert_eq!(a["method"], "aligned-smc");
    assert_eq!(a["particles"], 2000);
    assert_eq!(a["samples"].as_array().unwrap().len(), 2000);
    assert!(a["logZ"].is_number());
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_alignppl"));
        c.args(["smc", "--unaligned", "--model", "geometric", "-n", "500", "--format", "summary"]);
        match env {
            Some(s) => c.env("ALIGNPPL_SEED", s),
            None => c.env_remove("ALIGNPPL_SEED"),
        };
        json(&c.output().unwrap())
    };
    assert_eq!(run(None)["seed"], 1);
    assert_eq!(run(Some("42"))["seed"], 42);
}

#[test]
fn mcmc_summary_reports_acceptance() {
    let j = json(&alignppl(&[
        "mcmc", "--lightweight", "--model", "fig6b", "--steps", "2000", "--burn", "0.5", "--format", "summary",
    ]));
    assert_eq!(j["method"], "lightweight-mcmc");
    assert_eq!(j["steps"], 2000);
    let r = j["acceptanceRate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&r));
    assert!(j.get("samples").is_none());
}

#[test]
fn csv_and_histogram_outputs() {
    let o = alignppl(&["mcmc", "--aligned", "--model", "lda", "--steps", "500", "--format", "csv"]);
    let text = stdout(&o);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap(), vec!["index", "value", "logWeight"]);
    assert_eq!(rows.records().count(), 450);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hist.csv");
    let o = alignppl(&[
        "mcmc", "--aligned", "--model", "lda", "--steps", "500", "--format", "hist", "--field", "theta1", "--bins", "5",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let mut r = csv::Reader::from_path(&path).unwrap();
    let counts: usize = r.records().map(|x| x.unwrap()[2].parse::<usize>().unwrap()).sum();
    assert_eq!(counts, 450);
}

#[test]
fn check_align_verdicts() {
    let j = json(&alignppl(&["check-align", "--model", "geometric", "--runs", "200"]));
    assert_eq!(j["verdict"], "consistent");
    let o = alignppl(&["check-align", "--model", "geometric", "--runs", "200", "--names", "x"]);
    assert_eq!(o.status.code(), Some(3));
    let j: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["verdict"], "violation");
    assert_eq!(j["witness"].as_array().unwrap().len(), 2);
}

#[test]
fn oracle_of_fig6a() {
    let j = json(&alignppl(&["oracle", "--model", "fig6a"]));
    assert!((j["logZ"].as_f64().unwrap() - 10f64.ln()).abs() < 1e-12);
    assert!((j["posterior"]["true"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let o = alignppl(&["oracle", "--model", "geometric", "--max-trace-len", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let j = json(&alignppl(&["oracle", "--model", "geometric", "--max-trace-len", "40", "--truncate"]));
    assert!((j["logZ"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-4);
}

#[test]
fn bench_rows() {
    let j = json(&alignppl(&[
        "bench", "--model", "fig6a", "--methods", "aligned-smc,unaligned-smc", "-R", "1", "--warmup", "0", "-n", "200",
    ]));
    let rows = j["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["stddevMs"], 0.0);
    assert_eq!(rows[0]["speedup"], 1.0);
    let o = alignppl(&[
        "bench", "--model", "fig6b", "--methods", "aligned-mcmc,lightweight-mcmc", "-R", "2", "--steps", "300", "--format",
        "csv",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn model_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coin.appl");
    std::fs::write(&path, "let c = assume (Bernoulli 0.3) in c").unwrap();
    let j = json(&alignppl(&["oracle", "--model", path.to_str().unwrap()]));
    assert!((j["posterior"]["true"].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(alignppl(&["smc", "--model", "fig4"]).status.code(), Some(1), "method flag required");
    assert_eq!(alignppl(&["smc", "--aligned", "--unaligned", "--model", "fig4"]).status.code(), Some(1));
    assert_eq!(alignppl(&["mcmc", "--aligned", "--model", "fig4", "--g", "2"]).status.code(), Some(1));
    assert_eq!(alignppl(&["smc", "--aligned", "--model", "no/such/model"]).status.code(), Some(2));
    assert_eq!(alignppl(&["oracle", "--model", "aircraft"]).status.code(), Some(2), "continuous draws");
    assert_eq!(alignppl(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.appl");
    std::fs::write(&path, "let x = in x").unwrap();
    let o = alignppl(&["analyze", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected"));
}

#[test]
fn debug_events_are_json_lines() {
    let o = alignppl(&["smc", "--aligned", "--model", "fig6a", "-n", "10", "--debug", "--format", "summary"]);
    let err = String::from_utf8(o.stderr).unwrap();
    let events: Vec<serde_json::Value> = err.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events.first().unwrap()["event"], "loaded");
    assert_eq!(events.last().unwrap()["event"], "finished");
}
