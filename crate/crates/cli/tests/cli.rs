use std::fs;
use std::process::Command;

fn sewing() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sewing"))
}

#[test]
fn list_shows_the_registry() {
    let out = sewing().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("qv-brownian"));
    assert!(text.contains("poisson-counterexample"));
    assert!(text.lines().count() >= 12);
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "experiment = \"qv-brownian\"\nseed = [").unwrap();
    let out = sewing().arg("run").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    fs::write(&bad, "experiment = \"qv-brownian\"\nseed = 1\n[params]\nlevel = 1\n").unwrap();
    let out = sewing().arg("run").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(&bad, "experiment = \"no-such\"\nseed = 1\n").unwrap();
    let out = sewing().arg("run").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "experiment = \"qv-brownian\"\nseed = 7\nn_paths = 50\n[params]\nlevel = 6\n").unwrap();
    let mut dirs = Vec::new();
    for workers in ["1", "3"] {
        let out = sewing()
            .args(["--workers", workers, "run"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        let line = text.lines().find(|l| l.starts_with("output: ")).unwrap();
        dirs.push(std::path::PathBuf::from(&line[8..]));
    }
    let names = |d: &std::path::Path| {
        let mut v: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
        v.sort();
        v
    };
    assert_eq!(names(&dirs[0]), names(&dirs[1]));
    for n in names(&dirs[0]) {
        assert_eq!(fs::read(dirs[0].join(&n)).unwrap(), fs::read(dirs[1].join(&n)).unwrap(), "{n:?}");
    }
    assert!(dirs[0].join("summary.json").exists());
    assert!(dirs[0].join("manifest.txt").exists());
}

#[test]
fn failing_criterion_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "experiment = \"qv-brownian\"\nseed = 7\nn_paths = 20\n[params]\nlevel = 6\nmean_tol = 0.0\n").unwrap();
    let out = sewing().arg("run").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn describe_prints_the_statement() {
    let out = sewing().args(["describe", "fbm-conditional"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("statement:"));
    assert_eq!(sewing().args(["describe", "nope"]).output().unwrap().status.code(), Some(2));
}
