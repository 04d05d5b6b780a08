use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_coherence-lab"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    if let Some(s) = stdin {
        pipe.write_all(s.as_bytes()).unwrap();
    }
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = run(args, None);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn ratio(v: &Value) -> f64 {
    let (n, d) = v.as_str().unwrap().split_once('/').unwrap();
    // Long rationals: compare leading digits only.
    let scale = n.trim_start_matches('-').len().max(d.len()).saturating_sub(15) as i32;
    let f = |s: &str| s.parse::<f64>().unwrap() / 10f64.powi(scale);
    f(n) / f(d)
}

#[test]
fn beam_margin_from_gallery() {
    let r = report(&["gallery", "example-4.4", "--delta", "1/10"]);
    assert_eq!(r["schema"], "coherence-lab/report/v1");
    assert_eq!(r["delta"], "1/10");
    let enc = &r["results"]["beam"]["dutch_book"]["margin"]["enclosure"];
    let (lo, hi) = (ratio(&enc["lo"]), ratio(&enc["hi"]));
    let want = 0.1 * 0.5 * std::f64::consts::LN_2;
    assert!(lo <= want + 1e-15 && want - 1e-15 <= hi, "[{lo}, {hi}]");
    assert!(hi - lo <= 1e-5);
    assert!((lo - 0.034657).abs() < 1e-6);
    assert_eq!(r["results"]["beam"]["report"]["indicator_cancellation"], true);
    for c in r["results"]["claims"].as_array().unwrap() {
        assert_eq!(c["pass"], true, "{c}");
    }
}

#[test]
fn two_event_book() {
    let r = report(&["coherence", data("two_events.json").to_str().unwrap()]);
    let f = &r["results"]["finite"];
    assert_eq!(f["verdict"], "Incoherent");
    let book = &f["dutch_book"];
    assert_eq!(book["margin"]["exact"], "1/5");
    assert_eq!(book["portfolio"]["coeffs"]["finite"], serde_json::json!(["1/1", "1/1"]));
    assert_eq!(book["portfolio"]["events"]["list"], serde_json::json!(["A", "B"]));
    assert_eq!(r["results"]["trichotomy"]["agree"], true);
}

#[test]
fn boundary_portfolios() {
    let r = report(&["classify", data("boundary.json").to_str().unwrap()]);
    let res = r["results"].as_array().unwrap();
    let verdict = |i: usize, s: &str| res[i]["systems"][s]["verdict"].as_str().unwrap().to_string();
    assert_eq!(res[0]["name"], "alternating-harmonic");
    assert_eq!((verdict(0, "S2"), verdict(0, "S2A")), ("In".into(), "Out".into()));
    assert_eq!(res[1]["name"], "ones");
    assert_eq!((verdict(1, "S2B"), verdict(1, "S2")), ("In".into(), "Out".into()));
    assert_eq!(res[0]["portfolio"]["prefix"].as_array().unwrap().len(), 20);
}

#[test]
fn prefix_flag_limits_displayed_bets() {
    let r = report(&["classify", "--prefix", "3", data("boundary.json").to_str().unwrap()]);
    let shown = &r["results"][0]["portfolio"]["prefix"];
    assert_eq!(shown.as_array().unwrap().len(), 3);
    assert_eq!(shown[1]["coeff"], "1/2");
    assert_eq!(shown[1]["member"], 2);
}

#[test]
fn echoed_instances_round_trip() {
    let cases: Vec<Vec<String>> = vec![
        vec!["coherence".into(), data("two_events.json").display().to_string()],
        vec!["classify".into(), data("boundary.json").display().to_string()],
        vec!["additivity".into(), data("coin.json").display().to_string()],
        vec!["additivity".into(), data("chain_additivity.json").display().to_string()],
        vec!["synthesize".into(), data("synth.json").display().to_string()],
    ];
    for args in cases {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = report(&a);
        let echo = serde_json::to_string(&first["instance"]).unwrap();
        let out = run(&[a[0], "-"], Some(&echo));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let second: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(first, second, "{args:?}");
    }
}

#[test]
fn gallery_echo_resolves_to_the_same_instance() {
    for name in ["example-2.4", "example-4.3"] {
        let g = report(&["gallery", name]);
        let echo = serde_json::to_string(&g["instance"]).unwrap();
        let c = run(&["classify", "-"], Some(&echo));
        assert!(c.status.success(), "{name}: {}", String::from_utf8_lossy(&c.stderr));
        let c: Value = serde_json::from_slice(&c.stdout).unwrap();
        assert_eq!(c["instance"], g["instance"]);
        for (p, q) in c["results"].as_array().unwrap().iter().zip(g["results"]["portfolios"].as_array().unwrap()) {
            assert_eq!(p["name"], q["name"]);
            assert_eq!(p["systems"], q["systems"]);
            assert_eq!(p["portfolio"], q["portfolio"]);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let coin = data("coin.json");
    let args = ["dutch-book", "--seed", "7", coin.to_str().unwrap()];
    let a = run(&args, None);
    let b = run(&args, None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["dutch-book", "--seed", "8", coin.to_str().unwrap()], None);
    assert_ne!(a.stdout, c.stdout, "the seed drives the sampled outcomes");
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(r["seed"], 7);
    let samples = r["results"]["rearrangement"]["sampled_balances"].as_array().unwrap();
    assert!(!samples.is_empty());
    for s in samples {
        assert_eq!(s["certified_loss"], true, "{s}");
        assert_eq!(s["consistent_with_margin"], true, "{s}");
    }
}

#[test]
fn parse_errors_exit_nonzero_with_position() {
    let out = run(&["coherence", "-"], Some("{\n  \"space\": {\"kind\": \"finite\", \"outcomes\": [\"a\"]},\n  \"prices\": {\"events\": {\"A\": 0.5}}\n}"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("column"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unresolved_names_exit_nonzero() {
    let out = run(&["coherence", "-"], Some(r#"{"space": {"kind": "finite", "outcomes": ["a"]}, "prices": {"events": {"A": "1/2"}}}"#));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown event"));
    let out = run(&["gallery", "example-9.9"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn engine_limits_stay_inside_the_report() {
    let g = report(&["gallery", "example-2.4"]);
    let echo = serde_json::to_string(&g["instance"]).unwrap();
    let out = run(&["dutch-book", "-"], Some(&echo));
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    for p in r["results"]["portfolios"].as_array().unwrap() {
        assert_eq!(p["book"]["verdict"], "Undetermined");
    }
}

#[test]
fn additivity_failure_yields_a_book() {
    let r = report(&["additivity", data("chain_additivity.json").to_str().unwrap()]);
    assert_eq!(r["results"]["check"]["verdict"], "Fails");
    assert_eq!(r["results"]["check"]["gap"]["exact"], "1/10");
    assert_eq!(r["results"]["book"]["margin"]["exact"], "1/10");
    let r = report(&["additivity", data("coin.json").to_str().unwrap()]);
    assert_eq!(r["results"]["check"]["verdict"], "Holds");
}

#[test]
fn synthesized_balance_matches_target() {
    let r = report(&["synthesize", data("synth.json").to_str().unwrap()]);
    assert_eq!(r["results"]["expectation"], "0/1");
    for s in r["results"]["sampled_balances"].as_array().unwrap() {
        assert_eq!(s["matches"], true, "{s}");
    }
    let a = report(&["atoms", data("synth.json").to_str().unwrap()]);
    assert_eq!(a["results"]["field_size"], 4);
    assert_eq!(a["results"]["p_finite"]["p_finite"], true);
}
