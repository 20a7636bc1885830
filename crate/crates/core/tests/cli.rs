use std::path::Path;
use std::process::Command;

fn cltlab(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cltlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Small runs of every subcommand.
pub const RUNS: &[&[&str]] = &[
    &["verify-frechet", "--trials", "3"],
    &["coeffs", "--kmax", "4", "--kinds", "tau1,tau2,beta2,alpha2,gamma2_tilde", "--mc-samples", "2000"],
    &["wasserstein", "--reps", "500", "--ns", "16,32,...,128"],
    &["delta", "--reps", "400", "--ns", "8,32"],
    &["delta", "--reps", "200", "--ns", "8,16", "--field", "--model", "iid:uniform", "--f", "psi:p=2,q=2", "--m", "2", "--grid", "0:1:16"],
    &["rate", "--reps", "400", "--ns", "8,16,...,64", "--model", "three-state"],
    &["bound", "--reps", "400", "--ns", "8,16,...,64", "--model", "two-state:a=0.75"],
    &["empirical", "--reps", "50", "--n", "40"],
    &["empirical", "--reps", "50", "--n", "40", "--model", "iid:normal", "--grid", "-3:3:24"],
    &["lsv-tau", "--n-mc", "4000", "--ks", "1,2,...,8", "--bins", "16"],
];

#[test]
fn every_csv_is_reproduced_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in RUNS.iter().enumerate() {
        let first = format!("run{i}.csv");
        let mut a: Vec<&str> = args.to_vec();
        a.extend(["--out", &first]);
        let (code, _, err) = cltlab(dir.path(), &a);
        assert_eq!(code, 0, "{args:?}: {err}");
        let manifest = format!("run{i}.manifest.toml");
        let second = format!("again{i}.csv");
        let (code, _, err) = cltlab(dir.path(), &[args[0], "--config", &manifest, "--out", &second, "--jobs", "2"]);
        assert_eq!(code, 0, "rerun of {args:?}: {err}");
        let x = std::fs::read(dir.path().join(&first)).unwrap();
        let y = std::fs::read(dir.path().join(&second)).unwrap();
        assert!(x == y, "{args:?}: rerun differs");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(cltlab(d, &["no-such-command"]).0, 2);
    assert_eq!(cltlab(d, &["delta", "--unknown-flag", "3"]).0, 2);
    assert_eq!(cltlab(d, &["delta", "--model", "iid:cauchy"]).0, 2);
    std::fs::write(d.join("bad.toml"), "reps = 10\nnot_a_key = 1\n").unwrap();
    assert_eq!(cltlab(d, &["delta", "--config", "bad.toml"]).0, 2);
    std::fs::write(d.join("broken.toml"), "reps = = 1").unwrap();
    assert_eq!(cltlab(d, &["delta", "--config", "broken.toml"]).0, 2);
    // Library errors carry the module name.
    let (code, _, err) = cltlab(d, &["verify-frechet", "--p", "1.5"]);
    assert_eq!(code, 1);
    assert!(err.contains("frechet"), "{err}");
    let (code, _, err) = cltlab(d, &["delta", "--reps", "10"]);
    assert_eq!(code, 1, "{err}");
    assert_eq!(cltlab(d, &["--help"]).0, 0);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.toml"), "kmax = 3\nkinds = \"tau1\"\n").unwrap();
    let (code, _, err) = cltlab(d, &["coeffs", "--config", "c.toml", "--kmax", "5", "--out", "c.csv"]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(d.join("c.csv")).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 5);
    let manifest = std::fs::read_to_string(d.join("c.manifest.toml")).unwrap();
    assert!(manifest.contains("kmax = 5") && manifest.contains("subcommand = \"coeffs\""));
}

#[test]
fn plot_script_is_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = cltlab(dir.path(), &["coeffs", "--kmax", "3", "--out", "k.csv", "--plot-script"]);
    assert_eq!(code, 0, "{err}");
    let py = std::fs::read_to_string(dir.path().join("k.plot.py")).unwrap();
    assert!(py.contains("k.csv") && py.contains("matplotlib"));
}
