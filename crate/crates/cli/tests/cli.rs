use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ghz-distill");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("GHZ_DISTILL_OUTPUT_DIR")
        .output()
        .expect("spawn")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn column(csv: &str, idx: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn keyed(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn white_input_converges_under_alternation() {
    let csv = stdout(&["iterate", "--schedule", "alternating", "--input", "white:0.4", "--steps", "8"]);
    assert_eq!(csv.lines().next().unwrap(), "step,fidelity,success_prob,min_inputs,expected_inputs");
    let f = column(&csv, 1);
    assert_eq!(f.len(), 8);
    assert!(*f.last().unwrap() > 0.999);
    let min_inputs: Vec<u64> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(min_inputs, (1..=8).map(|n| 4u64.pow(n)).collect::<Vec<_>>());
}

#[test]
fn odd_step_of_u3_has_fidelity_one_eighth() {
    let csv = stdout(&["iterate", "--schedule", "uniform", "--u3-n", "0", "--input", "ghz", "--steps", "1", "--record-odd"]);
    let f = column(&csv, 1);
    assert_eq!(f.len(), 2);
    assert!((f[0] - 0.125).abs() < 1e-12);
    assert!((f[1] - 1.0).abs() < 1e-12);
}

#[test]
fn tree_convention_reports_one_sixteenth() {
    let csv = stdout(&["iterate", "--schedule", "uniform", "--input", "ghz", "--steps", "1", "--success", "tree"]);
    assert!((column(&csv, 2)[0] - 1.0 / 16.0).abs() < 1e-12);
}

#[test]
fn white_input_above_threshold_does_not_converge() {
    let csv = stdout(&["iterate", "--schedule", "alternating", "--input", "white:0.9", "--steps", "10"]);
    assert!(column(&csv, 1).iter().all(|&f| f < 0.999));
}

#[test]
fn verify_exit_status_follows_conditions() {
    let ok = run(&["verify", "u1", "--conditions", "all"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(&["verify", "u2", "--conditions", "eq8"]);
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8(bad.stdout).unwrap();
    let failing: Vec<f64> = text
        .lines()
        .filter(|l| l.ends_with(",FAIL"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!failing.is_empty() && failing.iter().all(|&r| r > 1e-10));
    assert_eq!(run(&["verify", "u2", "--conditions", "eq7"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "u3:0", "--conditions", "eq7"]).status.code(), Some(1));
    assert_eq!(run(&["verify", "u3:0", "--conditions", "eq6"]).status.code(), Some(0));
}

#[test]
fn verify_reads_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("u.txt");
    // CNOT-X in |keep,flag> order
    fs::write(&good, "0 1 0 0\n1 0 0 0\n0 0 1 0\n0 0 0 1\n").unwrap();
    let out = run(&["verify", good.to_str().unwrap(), "--conditions", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 0 0\n0 1 0 0\n").unwrap();
    assert_eq!(run(&["verify", bad.to_str().unwrap()]).status.code(), Some(2));
    let junk = dir.path().join("junk.txt");
    fs::write(&junk, "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 x\n").unwrap();
    assert_eq!(run(&["verify", junk.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn first_order_examples() {
    let w = stdout(&["first-order", "--unitary", "u1", "--m", "white", "--h", "1e-4"]);
    assert!(keyed(&w, "max_deviation") < 1e-6);
    let c = stdout(&["first-order", "--unitary", "u1", "--m", "coherent", "--h", "1e-4"]);
    assert!(keyed(&c, "response_max_norm") < 1e-6);
    let b = stdout(&["first-order", "--unitary", "u2", "--m", "block", "--seed", "4"]);
    assert!(keyed(&b, "response_max_norm") < 1e-6);
    let r = stdout(&["first-order", "--unitary", "u1", "--m", "random", "--seed", "11"]);
    assert!(keyed(&r, "max_deviation") < 1e-6);
}

#[test]
fn thresholds_from_the_command_line() {
    let coh = stdout(&["threshold", "--family", "coherent", "--resolution", "1e-3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&coh).unwrap();
    assert!((v["threshold"].as_f64().unwrap() - 0.38).abs() <= 0.02, "{coh}");
    assert_eq!(v["family"], "coherent[1,6]");
    assert_eq!(v["rule"], "F > 0.999 within 60 steps");
    let csv = stdout(&["threshold", "--family", "coherent:1,6", "--resolution", "1e-3"]);
    assert!(csv.lines().nth(1).unwrap().starts_with("\"coherent[1,6]\","), "{csv}");
    let pm = stdout(&["threshold", "--family", "pm", "--input", "mix:0.8:0.025", "--resolution", "1e-3"]);
    assert!((column(&pm, 1)[0] - 0.13).abs() <= 0.01, "{pm}");
    let bracket = run(&["threshold", "--family", "white", "--lo", "0.9", "--hi", "1.0"]);
    assert_eq!(bracket.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["iterate", "--input", "random:0.01", "--seed", "7", "--steps", "5", "--pm", "0.01", "--pg", "0.01"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = run(&["iterate", "--input", "random:0.01", "--seed", "8", "--steps", "5", "--pm", "0.01", "--pg", "0.01"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn json_mirrors_csv() {
    let base = ["iterate", "--input", "coherent:0.2", "--steps", "4", "--pm", "0.02"];
    let csv = stdout(&base);
    let mut args = base.to_vec();
    args.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&args)).unwrap();
    let rows = json.as_array().unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for (row, line) in rows.iter().zip(csv.lines().skip(1)) {
        for (key, cell) in header.iter().zip(line.split(',')) {
            assert_eq!(row[key].as_f64().unwrap(), cell.parse::<f64>().unwrap(), "{key}");
        }
    }
    assert_eq!(rows.len(), 4);
}

#[test]
fn output_dir_env_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(BIN)
        .args(["iterate", "--input", "white:0.2", "--steps", "2", "--output", "sub/out.csv"])
        .env("GHZ_DISTILL_OUTPUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.path().join("sub/out.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn custom_matrix_matches_builtin_white_noise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let mut text = String::new();
    for i in 0..8 {
        let row: Vec<String> = (0..8)
            .map(|j| {
                let ghz = if (i == 0 || i == 7) && (j == 0 || j == 7) { 0.5 } else { 0.0 };
                let id = if i == j { 0.125 } else { 0.0 };
                format!("{}+0i", id - ghz)
            })
            .collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    let custom = stdout(&["iterate", "--input", &format!("custom:{}:0.3", path.display()), "--steps", "3"]);
    let white = stdout(&["iterate", "--input", "white:0.3", "--steps", "3"]);
    for (a, b) in column(&custom, 1).iter().zip(column(&white, 1)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["iterate", "--input", "white:2"]).status.code(), Some(2));
    assert_eq!(run(&["iterate", "--input", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["iterate", "--input", "ghz", "--pm", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["iterate", "--input", "ghz", "--steps", "0"]).status.code(), Some(2));
    assert_eq!(run(&["iterate", "--bogus"]).status.code(), Some(2));
    let zero = run(&["iterate", "--input", "ghz", "--pm", "1", "--steps", "2"]);
    assert_eq!(zero.status.code(), Some(3));
    assert!(!zero.stderr.is_empty());
}

#[test]
fn decompositions_check_out() {
    for u in ["u1", "u2", "u3:0", "u3:1", "u3:-2"] {
        let text = stdout(&["decompose", u]);
        assert!(keyed(&text, "residual") < 1e-12, "{u}");
    }
    assert_eq!(run(&["decompose", "u7"]).status.code(), Some(2));
}
