use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigidity-lab")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn status(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    assert!(first.starts_with('#'), "{first}");
    rest.to_string()
}

#[test]
fn cf_prints_digits_and_denominators() {
    let o = lab(&["cf", "--real", "0.6180339887", "--depth", "8"]);
    assert_eq!(status(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("[0; 1, 1, 1, 1, 1, 1, 1, 1]"), "{out}");
    let csv = stdout(&lab(&["cf", "--real", "0.6180339887", "--depth", "8", "--format", "csv"]));
    let last = csv.lines().last().unwrap();
    assert_eq!(last, "8,1,34,34,21");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.cfg");
    fs::write(&empty, "# nothing here\n").unwrap();
    assert_eq!(status(&lab(&["--config", empty.to_str().unwrap()])), 2);
    let unknown = dir.path().join("unknown.cfg");
    fs::write(&unknown, "command = cf\nreal = 0.5\nwidth = 3\n").unwrap();
    assert_eq!(status(&lab(&["--config", unknown.to_str().unwrap()])), 2);
    assert_eq!(status(&lab(&[])), 2);
    assert_eq!(status(&lab(&["cf", "--depth", "many", "--digits", "1,2"])), 2);
    assert_eq!(status(&lab(&["cf", "--digits", "1,2", "--format", "xml"])), 2);
    assert_eq!(status(&lab(&["match", "--preset", "nonexistent"])), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# golden ratio\ncommand = cf\ndigits = 1,1,1,1,1,1\ndepth = 6\nformat = csv\n").unwrap();
    let o = lab(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(status(&o), 0);
    assert_eq!(stdout(&o).lines().last().unwrap(), "6,1,13,13,8");
    let o = lab(&["--config", cfg.to_str().unwrap(), "cf", "--depth", "3"]);
    assert_eq!(stdout(&o).lines().last().unwrap(), "3,1,3,3,2");
    assert_eq!(status(&lab(&["--config", cfg.to_str().unwrap(), "ostrowski"])), 2);
}

#[test]
fn module_errors_exit_with_one() {
    // paper-faithful constants reject this epsilon
    let o = lab(&["match", "--preset", "acceptance-bounded", "--mode", "paper", "--trials", "2"]);
    assert_eq!(status(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
    assert_eq!(status(&lab(&["trichotomy", "--y", "0.1", "--y-prime", "0.2", "--n", "5"])), 1);
}

#[test]
fn every_command_honors_seed_out_and_format() {
    let runs: &[&[&str]] = &[
        &["cf", "--digits", "1,2,3"],
        &["ostrowski", "--n", "100"],
        &["dk-audit", "--samples", "200", "--max-index", "6"],
        &["flow-orbit", "--horizon", "5"],
        &["trichotomy", "--y", "0.5", "--y-prime", "0.5000001", "--n", "3"],
        &["match", "--preset", "acceptance-bounded", "--trials", "10"],
        &["lift", "--preset", "acceptance-bounded", "--trial", "1"],
        &["coboundary", "--max-harmonic", "5"],
        &["joining", "--horizon", "200", "--samples", "2"],
    ];
    let dir = tempfile::tempdir().unwrap();
    for args in runs {
        let mut bodies = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{}-{rep}", args[0]));
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--seed", "11", "--format", "csv", "--out", out.to_str().unwrap()]);
            let o = lab(&full);
            assert_eq!(status(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            let file = body(&out.join(format!("{}.csv", args[0])));
            assert_eq!(stdout(&o), file, "{args:?}");
            assert!(out.join(format!("{}-summary.txt", args[0])).exists());
            bodies.push(file);
        }
        assert_eq!(bodies[0], bodies[1], "{args:?} is not deterministic");
    }
}

#[test]
fn seed_changes_sampled_output() {
    let a = stdout(&lab(&["joining", "--horizon", "100", "--samples", "2", "--seed", "1", "--format", "csv"]));
    let b = stdout(&lab(&["joining", "--horizon", "100", "--samples", "2", "--seed", "2", "--format", "csv"]));
    assert_ne!(a, b);
}

#[test]
fn thread_cap_is_honored() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_rigidity-lab"))
            .args(["match", "--preset", "acceptance-bounded", "--trials", "8", "--format", "csv"])
            .env("RIGIDITY_LAB_THREADS", threads)
            .env("RUST_LOG", "error")
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(status(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(status(&run("0")), 2);
    assert_eq!(status(&run("lots")), 2);
}

#[test]
fn acceptance_preset_meets_rates() {
    let o = lab(&["match", "--preset", "acceptance-unbounded", "--trials", "40", "--seed", "3"]);
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("window success"));
}
