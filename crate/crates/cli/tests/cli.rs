use flatflow_core::bundled;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn flatflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatflow")).args(args).arg("--out").arg(out).output().unwrap()
}

fn surfaces(dir: &Path) -> (PathBuf, PathBuf) {
    let l3 = dir.join("l3.surf");
    let oct = dir.join("octagon.surf");
    std::fs::write(&l3, bundled::L3_SURF).unwrap();
    std::fs::write(&oct, bundled::OCTAGON_SURF).unwrap();
    (l3, oct)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn validate_accepts_both_bundled_surfaces() {
    let dir = tempfile::tempdir().unwrap();
    let (l3, oct) = surfaces(dir.path());
    for s in [&l3, &oct] {
        let o = flatflow(&["validate", s.to_str().unwrap()], &dir.path().join("v"));
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("1 singular, chi = -2"));
    }
    let (h, _) = read_csv(&dir.path().join("v/cones.csv"));
    assert_eq!(h, ["cone_id", "angle", "k", "corners", "seed"]);
    assert!(std::fs::read_to_string(dir.path().join("v/meta.toml")).unwrap().contains("surface_sha256"));
}

#[test]
fn exit_codes_separate_usage_and_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (l3, _) = surfaces(dir.path());
    let out = dir.path().join("o");
    assert_eq!(flatflow(&["frobnicate"], &out).status.code(), Some(2));
    assert_eq!(flatflow(&["saddles", l3.to_str().unwrap()], &out).status.code(), Some(2));
    let neg = flatflow(&["saddles", l3.to_str().unwrap(), "--max-length=-1"], &out);
    assert_eq!(neg.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&neg.stderr).starts_with("UsageError"));

    let bad = dir.path().join("bad.surf");
    std::fs::write(&bad, "polygons = [[[0, 0], [1, 0]]\n").unwrap();
    let o = flatflow(&["validate", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("SyntaxError"));

    let missing = flatflow(&["validate", dir.path().join("nope.surf").to_str().unwrap()], &out);
    assert_eq!(missing.status.code(), Some(1));

    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "exponent_multiplier = 0.9\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_flatflow"))
        .args(["--config", cfg.to_str().unwrap(), "validate", l3.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(flatflow(&["--help"], &out).status.code(), Some(0));
}

#[test]
fn saddles_table_matches_the_known_count() {
    let dir = tempfile::tempdir().unwrap();
    let (l3, _) = surfaces(dir.path());
    let out = dir.path().join("s");
    let o = flatflow(&["saddles", l3.to_str().unwrap(), "--max-length", "4"], &out);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = read_csv(&out.join("saddles.csv"));
    assert_eq!(h, ["start_id", "end_id", "hol_x", "hol_y", "length", "seed"]);
    assert_eq!(rows.len(), 48);
    let lengths: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(lengths.windows(2).all(|w| w[0] <= w[1]));

    let o = flatflow(&["cylinders", l3.to_str().unwrap(), "--max-length", "2"], &out);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = read_csv(&out.join("cylinders.csv"));
    assert_eq!(h, ["circumference", "height", "modulus", "dir_x", "dir_y", "bottom", "top", "seed"]);
    assert!(!rows.is_empty());

    let o = flatflow(&["report", out.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv(&out.join("summary.csv"));
    assert_eq!(rows[1], ["saddles.csv", "48", "0"]);
}

#[test]
fn seeded_flow_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (_, oct) = surfaces(dir.path());
    let args = ["flow", oct.to_str().unwrap(), "--samples", "300", "--radius", "7", "--arcs", "30", "--seed", "3"];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = flatflow(&args, &a);
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stderr));
    let ob = Command::new(env!("CARGO_BIN_EXE_flatflow")).args(args).arg("--out").arg(&b).env("FLATFLOW_THREADS", "3").output().unwrap();
    assert_eq!(ob.status.code(), Some(0));
    assert_eq!(oa.stdout, ob.stdout);
    for f in ["counts.csv", "freq.csv", "meta.toml"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (h, rows) = read_csv(&a.join("freq.csv"));
    assert_eq!(h, ["arc_id", "l", "l_ext", "passes", "total_len", "lambda_hat", "ci_half", "seed"]);
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r[7] == "3"));
}
