// Process-level contract of the skgen binary: exit codes, stream
// discipline, environment overrides, and the sweep CSV surface.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skgen"))
}

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary launches")
}

#[test]
fn help_is_exit_zero_on_stdout() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in [
        "capacity",
        "lower-bound",
        "multi-letter",
        "simulate",
        "check-degraded",
        "quantize",
        "mi-bound",
        "sweep",
    ] {
        assert!(text.contains(sub), "help missing {sub}");
    }
    let sub_help = run(&["simulate", "--help"]);
    assert_eq!(sub_help.status.code(), Some(0));
}

#[test]
fn usage_errors_are_exit_one() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());

    let bad_value = run(&["mi-bound", "--gamma-param", "oops", "--x-size", "2", "--y-size", "2"]);
    assert_eq!(bad_value.status.code(), Some(1));
}

#[test]
fn spec_and_domain_errors_are_exit_two() {
    let missing = run(&["capacity", "/no/such/file.toml"]);
    assert_eq!(missing.status.code(), Some(2));
    let err = String::from_utf8(missing.stderr).unwrap();
    assert!(err.starts_with("error:"), "stderr was: {err}");

    let dir = std::env::temp_dir().join("skgen_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("negative_mass.toml");
    std::fs::write(
        &bad,
        "x_size = 2\ny_size = 2\nz_size = 2\n\n[[state]]\nlabel = \"s\"\njoint = [1.5, -0.5, 0, 0, 0, 0, 0, 0]\n",
    )
    .unwrap();
    let invalid = run(&["capacity", bad.to_str().unwrap()]);
    assert_eq!(invalid.status.code(), Some(2));
}

#[test]
fn budget_errors_are_exit_three() {
    // identity preprocessing on a uniform binary source at n = 100
    // wants 2^105 codebook rows
    let out = run(&[
        "simulate",
        &data("bsc_cascade.toml"),
        "--n",
        "100",
        "--trials",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("exceeds"), "stderr was: {err}");
}

#[test]
fn memory_guard_env_is_honored() {
    let args = [
        "simulate",
        &data("bsc_cascade.toml"),
        "--n",
        "12",
        "--trials",
        "10",
        "--seed",
        "17",
    ];
    let ok = bin().args(args).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let starved = bin()
        .args(args)
        .env("SKGEN_MEMORY_GUARD_SYMBOLS", "1000")
        .output()
        .unwrap();
    assert_eq!(starved.status.code(), Some(3));
    let err = String::from_utf8(starved.stderr).unwrap();
    assert!(
        err.contains("SKGEN_MEMORY_GUARD_SYMBOLS"),
        "guard error should name the override: {err}"
    );
}

#[test]
fn documents_are_stable_across_runs() {
    let args = ["capacity", &data("bsc_cascade.toml")];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("value = 0.0382394080746\n"));
    assert!(text.lines().all(|l| l.is_empty() || l.contains(" = ")));
}

#[test]
fn sweep_prints_table_or_writes_csv() {
    let base = [
        "sweep",
        &data("security_anchor.toml"),
        "--axis",
        "n",
        "--values",
        "4,6",
        "--trials",
        "50",
        "--seed",
        "2",
        "--key-size",
        "2",
        "--zeta",
        "0.08",
        "--sigma",
        "0.12",
        "--vartheta",
        "0.25",
    ];
    let inline = run(&base);
    assert_eq!(inline.status.code(), Some(0));
    let text = String::from_utf8(inline.stdout).unwrap();
    assert!(text.contains("points = 2"));
    let header = "axis,value,n,gamma,trials,k,key_rate,public_rate,error_max,worst_ci_high,leakage_max,uniformity_max,error_ok";
    assert!(text.contains(header));
    assert_eq!(text.lines().filter(|l| l.starts_with("n,")).count(), 2);

    let dir = std::env::temp_dir().join("skgen_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let csv_path = dir.join("sweep.csv");
    let mut with_file: Vec<&str> = base.to_vec();
    let path_str = csv_path.to_str().unwrap().to_string();
    with_file.push("--csv");
    with_file.push(&path_str);
    let filed = run(&with_file);
    assert_eq!(filed.status.code(), Some(0));
    let filed_text = String::from_utf8(filed.stdout).unwrap();
    assert!(!filed_text.contains(header), "CSV should go to the file");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with(header));
    assert_eq!(csv.lines().count(), 3);
}
