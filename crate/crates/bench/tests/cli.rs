use std::path::Path;
use std::process::{Command, Output};

fn kryrom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kryrom")).args(args).output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn every_subcommand_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str], &str); 5] = [
        ("fom-timing", &["--levels", "2..3"], "fom-timing.csv"),
        ("rom-accuracy", &["--levels", "3..4"], "rom-accuracy.csv"),
        ("convergence", &["--levels", "2..3"], "convergence.csv"),
        ("decay", &["--levels", "4"], "decay.csv"),
        ("exactness", &["--levels", "3"], "exactness.csv"),
    ];
    for (cmd, extra, table) in cases {
        let out_dir = dir.path().join(cmd);
        let mut args = vec![cmd, "--out"];
        let o = out_arg(&out_dir);
        args.push(&o);
        args.extend_from_slice(extra);
        let res = kryrom(&args);
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
        let csv = read(&out_dir.join(table));
        assert!(csv.lines().count() >= 2, "{cmd}: {csv}");
        let manifest: serde_json::Value =
            serde_json::from_str(&read(&out_dir.join(format!("{cmd}_manifest.json")))).unwrap();
        assert_eq!(manifest["experiment"], cmd);
        assert!(manifest["timings"]["wall_seconds"].as_f64().unwrap() >= 0.0);
        assert!(manifest["versions"]["kryrom"].is_string());
        let first_level = &manifest["levels"][0];
        assert!(first_level["mesh_size"].as_f64().unwrap() > first_level["grid_spacing"].as_f64().unwrap());
    }
}

#[test]
fn decay_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let res = kryrom(&["decay", "--out", &out_arg(dir.path()), "--levels", "5", "--ell", "8"]);
    assert!(res.status.success());
    let csv = read(&dir.path().join("decay.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue,theorem_bound,ratio"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "experiment = rom-accuracy\nlevels = 3..5\nell = 10\ntol = 1e-14\n").unwrap();
    let res = kryrom(&["rom-accuracy", "--config", &out_arg(&cfg), "--levels", "4", "--out", &out_arg(dir.path())]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = read(&dir.path().join("rom-accuracy.csv"));
    assert_eq!(csv.lines().count(), 2, "flag should override the file's level range");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "4");
    assert_eq!(row[3], "6");
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("rom-accuracy_manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["levels"], "4..4");
}

#[test]
fn mesh_and_trajectory_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let res = kryrom(&["rom-accuracy", "--levels", "2", "--out", &out_arg(dir.path()), "--mesh-dump", "--trajectory"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mesh = read(&dir.path().join("mesh_level2.txt"));
    assert!(mesh.starts_with("# dim=2 level=2 vertices=25 cells=32"));
    let traj = read(&dir.path().join("trajectory_level2.csv"));
    assert_eq!(traj.lines().next(), Some("n,t_n,l2_norm"));
    // four steps of size 1/4 plus the initial state
    assert_eq!(traj.lines().count(), 6);
}

#[test]
fn tables_are_reproducible_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |p: &Path| -> Vec<String> {
        read(p)
            .lines()
            .map(|l| {
                let cells: Vec<&str> = l.split(',').collect();
                // drop the timing column
                cells[..cells.len() - 1].join(",")
            })
            .collect()
    };
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let res = kryrom(&["convergence", "--levels", "2..3", "--out", &out_arg(&out)]);
        assert!(res.status.success());
        tables.push(strip(&out.join("convergence.csv")));
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn failures_are_labelled_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let res = kryrom(&["decay", "--levels", "5..2", "--out", &out_arg(dir.path())]);
    assert_eq!(res.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("config failed") && msg.contains("levels"), "{msg}");

    let res = kryrom(&["fom-timing", "--dim", "3", "--levels", "11", "--out", &out_arg(dir.path())]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("assembly failed"));

    let res = kryrom(&["rom-accuracy", "--source", "manufactured", "--levels", "2", "--out", &out_arg(dir.path())]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("basis failed"));

    let res = kryrom(&["convergence", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("config failed: cannot read"));

    let res = kryrom(&["no-such-experiment"]);
    assert!(!res.status.success());
}
