use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use arealaw_cli::{DIVISIBILITY_HEADER, ENSEMBLE_HEADER, TRACE_HEADER};

fn arealaw(args: &[&str], cfg: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_arealaw"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(cfg) = cfg {
        cmd.arg("--config").arg(cfg);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn report_value(dir: &Path, key: &str) -> String {
    let text = std::fs::read_to_string(dir.join("report.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("{key} missing from report:\n{text}"))
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn decoupled_spin_boson_has_constant_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sb.toml",
        "kind = \"spin-boson\"\n[grid]\nt-max = 8.0\nsteps = 40\n[spin-boson]\nomega = 1.0\nbeta = 1.3\neta = 0.0\n",
    );
    let out = dir.path().join("out");
    let run = arealaw(&["spinboson"], Some(&cfg), &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), TRACE_HEADER.join(","));
    let s: Vec<f64> = column(&trace, "S_nats").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(s.len(), 40);
    assert!(s.iter().all(|v| (v - s[0]).abs() <= 1e-10));
    let table = std::fs::read_to_string(out.join("spinboson.csv")).unwrap();
    let oracle: Vec<f64> = column(&table, "S_oracle").iter().map(|v| v.parse().unwrap()).collect();
    assert!(oracle.iter().all(|v| (v - oracle[0]).abs() <= 1e-10));
    assert_eq!(report_value(&out, "verdict"), "constant-factor-mismatch");
}

#[test]
fn trivial_environment_is_divisible_with_zero_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.toml",
        "kind = \"generic-bipartite\"\nseed = 3\n[grid]\nt-max = 3.0\nsteps = 30\n\
         [model]\ndim-a = 3\ndim-e = 1\nrandom = true\n[state]\nrandom = true\n",
    );
    let out = dir.path().join("out");
    let run = arealaw(&["simulate"], Some(&cfg), &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(report_value(&out, "divisibility_verdict"), "divisible");
    let rate: f64 = report_value(&out, "rate_at_zero").parse().unwrap();
    assert!(rate.abs() <= 1e-8, "{rate}");
    assert_eq!(report_value(&out, "bound_rhs"), "0e0");
    assert_eq!(report_value(&out, "bound_satisfied"), "true");
    let div = std::fs::read_to_string(out.join("divisibility.csv")).unwrap();
    assert_eq!(div.lines().next().unwrap(), DIVISIBILITY_HEADER.join(","));
    assert!(column(&div, "verdict").iter().all(|v| v == "divisible"));
    // no two-level spectrum for a three-level system
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(column(&trace, "sigma11").iter().all(String::is_empty));
}

#[test]
fn ensemble_rows_are_finite() {
    for start in ["product", "entangled"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            "e.toml",
            &format!("kind = \"bound-ensemble\"\nseed = 20\n[ensemble]\ncount = 100\nstart = \"{start}\"\n"),
        );
        let out = dir.path().join("out");
        let run = arealaw(&["bound"], Some(&cfg), &out);
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
        let csv = std::fs::read_to_string(out.join("ensemble.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), ENSEMBLE_HEADER.join(","));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 100);
        for (k, row) in rows.iter().enumerate() {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(fields[0].parse::<u64>().unwrap(), 20 + k as u64);
            for f in &fields[1..] {
                assert!(f.parse::<f64>().unwrap().is_finite(), "{row}");
            }
        }
        assert_eq!(report_value(&out, "bound_satisfied"), "100");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.toml",
        "kind = \"generic-bipartite\"\nseed = 8\n[model]\ndim-a = 2\ndim-e = 3\nrandom = true\n[state]\nrandom = true\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(arealaw(&["simulate", "--steps", "60"], Some(&cfg), out).status.code(), Some(0));
        assert_eq!(arealaw(&["bound", "--seed", "5"], None, &out.join("ens")).status.code(), Some(0));
    }
    for f in ["trace.csv", "divisibility.csv", "report.txt", "ens/ensemble.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    arealaw(&["zassenhaus", "--seed", "1"], None, &a);
    arealaw(&["zassenhaus", "--seed", "2"], None, &b);
    assert_ne!(std::fs::read(a.join("zassenhaus.csv")).unwrap(), std::fs::read(b.join("zassenhaus.csv")).unwrap());
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let typo = write_config(dir.path(), "typo.toml", "kind = \"spin-boson\"\n[grid]\nt-max = 1.0\nstep = 4\n");
    let run = arealaw(&["spinboson"], Some(&typo), &out);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("line 4") && err.contains("step"), "{err}");

    let missing = dir.path().join("nope.toml");
    assert_eq!(arealaw(&["simulate"], Some(&missing), &out).status.code(), Some(2));

    let wrong_kind = write_config(dir.path(), "k.toml", "kind = \"zassenhaus-scan\"\nseed = 1\n");
    assert_eq!(arealaw(&["spinboson"], Some(&wrong_kind), &out).status.code(), Some(2));

    let unseeded = write_config(dir.path(), "u.toml", "[model]\ndim-a = 2\ndim-e = 2\nrandom = true\n");
    let run = arealaw(&["simulate"], Some(&unseeded), &out);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("seed"));

    let not_hermitian = write_config(dir.path(), "h.toml", "[model]\ndim-a = 2\ndim-e = 1\nh-a = [[0, 1, 1.0, 0.0]]\n");
    assert_eq!(arealaw(&["simulate"], Some(&not_hermitian), &out).status.code(), Some(2));

    assert_eq!(arealaw(&["spinboson", "--steps", "1"], None, &out).status.code(), Some(2));
    assert_eq!(arealaw(&["bound"], None, &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unusable_scan_exits_with_three() {
    // order-4 errors fall below the floating-point floor on all but the largest time
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "z.toml",
        "kind = \"zassenhaus-scan\"\n[zassenhaus]\ndim = 2\norders = [4]\nt-min = 1e-5\nt-max = 1e-2\npoints = 4\n\
         a = [[0, 0, 1, 0], [1, 1, -1, 0]]\nb = [[0, 1, 1, 0], [1, 0, 1, 0]]\n",
    );
    let run = arealaw(&["zassenhaus"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn env_commuting_divisibility_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.toml",
        "kind = \"divisibility\"\nseed = 4\n[grid]\nt-max = 2.5\n\
         [model]\ndim-a = 2\ndim-e = 3\nrandom = true\nenv-commuting = true\n\
         [divisibility]\nenv-weights = [[2, 2, 1, 0]]\n",
    );
    let out = dir.path().join("out");
    assert_eq!(arealaw(&["divisibility"], Some(&cfg), &out).status.code(), Some(0));
    assert_eq!(report_value(&out, "divisibility_verdict"), "divisible");
    assert_eq!(report_value(&out, "commutator_class"), "E-commuting");
    let csv = std::fs::read_to_string(out.join("divisibility.csv")).unwrap();
    assert_eq!(column(&csv, "split_time"), ["6.25e-1", "1.25e0", "1.875e0"]);
}

#[test]
fn shipped_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cases = [
        ("simulate", "qubit_env_qubit.toml"),
        ("simulate", "trivial_env.toml"),
        ("divisibility", "env_commuting.toml"),
        ("spinboson", "spin_boson.toml"),
        ("bound", "bound_ensemble.toml"),
        ("zassenhaus", "zassenhaus.toml"),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file) in cases {
        let run = arealaw(&[cmd], Some(&root.join(file)), &dir.path().join(file));
        assert_eq!(run.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&run.stderr));
    }
}
