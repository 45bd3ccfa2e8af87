//! End-to-end tests driving the compiled binary.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_maxcorr"));
    // keep the ambient environment from steering thread counts
    cmd.env_remove("MAXCORR_THREADS");
    cmd
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).expect("write fixture");
    path
}

fn line_csv(n: usize) -> String {
    let mut s = String::from("x,y\n");
    for i in 1..=n {
        s.push_str(&format!("{i},{i}\n"));
    }
    s
}

#[test]
fn test_combined_on_a_perfect_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "line.csv", &line_csv(50));
    let out = run(bin().args(["test", "--input"]).arg(&input));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    // I_n = max(|S|, sqrt(5/2) xi) with S = 1 and xi = 48/51
    let expected = (2.5f64).sqrt() * 48.0 / 51.0;
    let statistic = json["statistic"].as_f64().unwrap();
    assert!((statistic - expected).abs() < 1e-12);
    assert!(json["p_value"].as_f64().unwrap() < 1e-10);
    assert_eq!(json["method"], "combined");
    assert_eq!(json["p_source"], "asymptotic");
}

#[test]
fn test_exact_chatterjee_on_three_monotone_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "three.csv", "x,y\n0.1,0.5\n0.2,0.7\n0.3,0.9\n");
    let out = run(bin()
        .args([
            "test",
            "--method",
            "chatterjee",
            "--pvalues",
            "exact",
            "--input",
        ])
        .arg(&input));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(json["xi"]["rational"], "1/4");
    assert_eq!(json["xi"]["value"], 0.25);
    assert_eq!(json["p_value"]["rational"], "1/3");
    assert_eq!(json["p_source"], "exact");
}

#[test]
fn malformed_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "bad.csv", "x,y\n1.0,banana\n");
    let out = run(bin().args(["test", "--input"]).arg(&input));
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("banana"), "stderr: {}", out.stderr);
}

#[test]
fn missing_header_is_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "headerless.csv", "1.0,2.0\n3.0,4.0\n");
    let out = run(bin().args(["test", "--input"]).arg(&input));
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("header"), "stderr: {}", out.stderr);
}

#[test]
fn missing_file_exits_2() {
    let out = run(bin().args(["test", "--input", "/nonexistent/nowhere.csv"]));
    assert_eq!(out.code, 2);
}

#[test]
fn ties_are_reported_with_group_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "tied.csv", "x,y\n1,5\n1,6\n2,7\n3,8\n");
    let out = run(bin().args(["test", "--input"]).arg(&input));
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("tie"), "stderr: {}", out.stderr);
    // random tie breaking turns the same input into a clean run
    let out = run(bin()
        .args([
            "test",
            "--tie-policy",
            "random-break",
            "--seed",
            "3",
            "--input",
        ])
        .arg(&input));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
}

#[test]
fn small_n_warning_lands_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "small.csv", &line_csv(10));
    let out = run(bin().args(["test", "--input"]).arg(&input));
    assert_eq!(out.code, 0);
    assert!(out.stderr.contains("n = 10 < 30"), "stderr: {}", out.stderr);
    // permutation mode has no such caveat
    let out = run(bin()
        .args([
            "test",
            "--pvalues",
            "permutation",
            "--permutations",
            "99",
            "--input",
        ])
        .arg(&input));
    assert_eq!(out.code, 0);
    assert!(!out.stderr.contains("< 30"), "stderr: {}", out.stderr);
}

fn sinusoid_matrix(rows: usize, t: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("id");
    for i in 0..t {
        s.push_str(&format!(",{i}"));
    }
    s.push('\n');
    for r in 0..rows {
        s.push_str(&format!("row{r}"));
        for i in 0..t {
            let noise: f64 = rng.random::<f64>() - 0.5;
            let v = (2.0 * PI * i as f64 / 12.0).sin() + 0.2 * noise;
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

#[test]
fn screen_single_sinusoid_row_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "wave.csv", &sinusoid_matrix(1, 48, 11));
    let out = run(bin()
        .args(["screen", "--method", "combined", "--input"])
        .arg(&input));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let mut lines = out.stdout.lines();
    assert_eq!(
        lines.next().unwrap(),
        "id,spearman,xi,combined,p_raw,p_adjusted,rejected"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("row0,"));
    assert!(row.ends_with(",true"), "row: {row}");
    assert!(out.stderr.contains("rejections:"), "stderr: {}", out.stderr);
}

#[test]
fn screen_empty_matrix_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "empty.csv", "id,0,1,2\n");
    let out = run(bin().args(["screen", "--input"]).arg(&input));
    assert_eq!(out.code, 2);
    assert!(
        out.stderr.contains("no data rows"),
        "stderr: {}",
        out.stderr
    );
}

#[test]
fn screen_ragged_row_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(
        dir.path(),
        "ragged.csv",
        "id,0,1,2\na,1.0,2.0,3.0\nb,4.0,5.0\n",
    );
    let out = run(bin().args(["screen", "--input"]).arg(&input));
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("row 2"), "stderr: {}", out.stderr);
}

#[test]
fn screen_duplicate_ids_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(
        dir.path(),
        "dup.csv",
        "id,0,1,2\na,1.0,2.0,3.0\na,4.0,5.0,6.0\n",
    );
    let out = run(bin().args(["screen", "--input"]).arg(&input));
    assert_eq!(out.code, 2);
    assert!(
        out.stderr.contains("duplicate id"),
        "stderr: {}",
        out.stderr
    );
}

#[test]
fn screen_non_numeric_header_requires_x_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(
        dir.path(),
        "named.csv",
        "id,early,mid,late\na,1.0,2.0,3.0\nb,3.0,1.0,2.0\n",
    );
    let out = run(bin().args(["screen", "--input"]).arg(&input));
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("--x-file"), "stderr: {}", out.stderr);
    let x_file = write_file(dir.path(), "x.csv", "x\n0\n10\n20\n");
    let out = run(bin()
        .args(["screen", "--input"])
        .arg(&input)
        .arg("--x-file")
        .arg(&x_file));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert_eq!(out.stdout.lines().count(), 3);
}

#[test]
fn screen_output_is_deterministic_and_order_preserving() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "mat.csv", &sinusoid_matrix(12, 30, 7));
    let first = run(bin()
        .args([
            "screen",
            "--pvalues",
            "permutation",
            "--permutations",
            "299",
            "--seed",
            "5",
        ])
        .arg("--input")
        .arg(&input));
    assert_eq!(first.code, 0, "stderr: {}", first.stderr);
    for threads in ["1", "4"] {
        let again = run(bin()
            .args([
                "screen",
                "--pvalues",
                "permutation",
                "--permutations",
                "299",
                "--seed",
                "5",
            ])
            .args(["--threads", threads])
            .arg("--input")
            .arg(&input));
        assert_eq!(again.code, 0);
        assert_eq!(again.stdout, first.stdout, "threads = {threads}");
    }
    let ids: Vec<&str> = first
        .stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    let expected: Vec<String> = (0..12).map(|r| format!("row{r}")).collect();
    assert_eq!(ids, expected);
}

#[test]
fn power_emits_one_csv_row() {
    let out = run(bin().args([
        "power",
        "--scenario",
        "linear",
        "--n",
        "40",
        "--test",
        "spearman",
        "--runs",
        "200",
        "--seed",
        "3",
    ]));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let mut lines = out.stdout.lines();
    assert_eq!(lines.next().unwrap(), "scenario,n,test,alpha,runs,power,se");
    let row = lines.next().unwrap();
    assert!(
        row.starts_with("linear,40,spearman,0.05,200,"),
        "row: {row}"
    );
    assert!(lines.next().is_none());
}

#[test]
fn bias_emits_one_csv_row() {
    let out = run(bin().args([
        "bias",
        "--n",
        "12",
        "--runs",
        "100",
        "--permutations",
        "1000",
        "--seed",
        "2",
    ]));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let mut lines = out.stdout.lines();
    assert_eq!(lines.next().unwrap(), "n,runs,permutations,mean_bias");
    assert!(lines.next().unwrap().starts_with("12,100,1000,"));
}

#[test]
fn nulljoint_row_count_matches_replicates() {
    let out = run(bin().args([
        "nulljoint",
        "--n",
        "10",
        "--replicates",
        "1000",
        "--seed",
        "1",
    ]));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "replicate,sqrt_n_S,sqrt_n_xi");
    assert_eq!(lines.len(), 1001);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[1000].starts_with("1000,"));
}

#[test]
fn extremal_case1_examples() {
    let out = run(bin().args(["extremal", "--case", "1", "--n", "5"]));
    assert_eq!(out.code, 0);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(json["ranks"], serde_json::json!([5, 3, 1, 2, 4]));
    assert_eq!(json["xi"], 0.125);
    assert_eq!(json["abs_spearman"], 0.3);
    let out = run(bin().args(["extremal", "--case", "1", "--n", "4"]));
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("odd"), "stderr: {}", out.stderr);
}

#[test]
fn extremal_case2_anchors() {
    let out = run(bin().args(["extremal", "--case", "2", "--m", "40", "--p", "20"]));
    assert_eq!(out.code, 0);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!((json["xi"].as_f64().unwrap() - 0.058).abs() < 0.0005);
    assert!((json["abs_spearman"].as_f64().unwrap() - 0.7535).abs() < 0.0005);
    assert_eq!(json["n"], 100);
}

#[test]
fn extremal_flag_validation() {
    let out = run(bin().args(["extremal", "--case", "1"]));
    assert_eq!(out.code, 2);
    let out = run(bin().args(["extremal", "--case", "3", "--n", "5"]));
    assert_eq!(out.code, 2);
    let out = run(bin().args(["extremal", "--case", "2", "--m", "1"]));
    assert_eq!(out.code, 2);
}

#[test]
fn oracle_reports_pass_for_known_identities() {
    for args in [
        ["oracle", "--n", "3", "--check", "table1"],
        ["oracle", "--n", "7", "--check", "lemma1"],
        ["oracle", "--n", "5", "--check", "rank-moments"],
        ["oracle", "--n", "4", "--check", "agreement"],
    ] {
        let out = run(bin().args(args));
        assert_eq!(out.code, 0, "args {args:?} stderr: {}", out.stderr);
        assert!(out.stdout.contains("PASS"), "args {args:?}");
        assert!(!out.stdout.contains("FAIL"), "args {args:?}");
    }
}

#[test]
fn oracle_rank_moment_identities_listed() {
    let out = run(bin().args(["oracle", "--n", "5", "--check", "rank-moments"]));
    let body = out.stdout;
    assert!(body.contains("\"Cov[R1, R2]\",5,-1/2,-1/2,PASS"));
    assert!(body.contains("Var[R1],5,2,2,PASS"));
    assert!(body.contains("\"Cov[R1, min(R1, R2)]\",5,3/4,3/4,PASS"));
    assert!(body.contains("\"Cov[R1, min(R2, R3)]\",5,-1/2,-1/2,PASS"));
}

#[test]
fn oracle_rejects_n_above_8() {
    let out = run(bin().args(["oracle", "--n", "9", "--check", "lemma1"]));
    assert_eq!(out.code, 2);
}

#[test]
fn oracle_divergence_search_reports_a_witness() {
    let out = run(bin().args([
        "oracle",
        "--n",
        "6",
        "--check",
        "divergence",
        "--epsilon",
        "-1/10",
    ]));
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert!(out.stdout.contains("ranks="), "stdout: {}", out.stdout);
    let out = run(bin().args([
        "oracle",
        "--n",
        "4",
        "--check",
        "divergence",
        "--epsilon",
        "1/0",
    ]));
    assert_eq!(out.code, 2);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let via_stdout =
        run(bin().args(["nulljoint", "--n", "8", "--replicates", "50", "--seed", "9"]));
    let path = dir.path().join("result.csv");
    let via_file = run(bin()
        .args([
            "nulljoint",
            "--n",
            "8",
            "--replicates",
            "50",
            "--seed",
            "9",
            "--out",
        ])
        .arg(&path));
    assert_eq!(via_file.code, 0);
    assert!(via_file.stdout.is_empty());
    assert_eq!(fs::read_to_string(&path).unwrap(), via_stdout.stdout);
}

#[test]
fn threads_env_is_honored_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "line.csv", &line_csv(40));
    let baseline = run(bin()
        .args([
            "test",
            "--pvalues",
            "permutation",
            "--permutations",
            "500",
            "--seed",
            "8",
        ])
        .arg("--input")
        .arg(&input));
    assert_eq!(baseline.code, 0);
    let with_env = run(bin()
        .env("MAXCORR_THREADS", "2")
        .args([
            "test",
            "--pvalues",
            "permutation",
            "--permutations",
            "500",
            "--seed",
            "8",
        ])
        .arg("--input")
        .arg(&input));
    assert_eq!(with_env.code, 0);
    assert_eq!(with_env.stdout, baseline.stdout);
    let invalid = run(bin()
        .env("MAXCORR_THREADS", "lots")
        .args(["nulljoint", "--n", "5"]));
    assert_eq!(invalid.code, 2);
    assert!(invalid.stderr.contains("MAXCORR_THREADS"));
}
