//! The end-to-end CLI pipeline shared by the determinism checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

pub type Snapshot = (Vec<(PathBuf, Vec<u8>)>, Vec<String>);

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().into(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

/// Runs every subcommand once and snapshots the files and stdout it leaves behind.
pub fn pipeline(bin: &str, threads: &str) -> Snapshot {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("d1.csv"), "x,y\n0,0.3\n0.5,-1\n1,0.7\n2,2\n").unwrap();
    fs::write(d.join("d2.csv"), "0,0,1\n1,0,0\n0,1,-1\n1,1,0.5\n").unwrap();
    let steps: &[&[&str]] = &[
        &["generate", "sawtooth", "--w", "3", "--k", "2", "--out", "saw.json"],
        &["generate", "sawtooth", "--w", "3", "--k", "2", "--emit", "pwl", "--out", "saw_pwl.json"],
        &["generate", "zonotope-family", "--n", "2", "--m", "3", "--w", "2", "--k", "1", "--seed", "5", "--out", "zf.json"],
        &["generate", "random-pwl", "--pieces", "7", "--seed", "11", "--out", "rp.json"],
        &["generate", "random-zonotope", "--n", "2", "--m", "4", "--seed", "2", "--out", "rz.json"],
        &["build", "rp.json", "--out", "rp_net.json"],
        &["build", "rz.json", "--out", "rz_net.json"],
        &["count", "saw.json", "--lo", "0", "--hi", "1", "--sawtooth", "3,2", "--cells", "saw_cells.jsonl", "--summary", "saw.csv", "--out", "saw_count.txt"],
        &["count", "zf.json", "--lo", "-1", "--hi", "1", "--zonotope-family", "2,3,2,1", "--cells", "zf_cells.jsonl", "--summary", "zf.csv", "--out", "zf_count.txt"],
        &["count", "rz_net.json", "--lo", "-2", "--hi", "2", "--out", "rz_count.txt"],
        &["verify", "rp_net.json", "--lo", "-100", "--hi", "100", "--out", "rp_verify.txt"],
        &["train", "d1.csv", "--width", "2", "--out", "t1.json", "--net-out", "t1_net.json"],
        &["train", "d1.csv", "--width", "2", "--method", "global", "--out", "t1g.json"],
        &["train", "d2.csv", "--width", "2", "--out", "t2.json", "--net-out", "t2_net.json"],
        &["train", "d2.csv", "--width", "1", "--loss", "hinge", "--verify", "--out", "t2h.json"],
        &["sample", "saw.json", "--points", "33", "--out", "saw_sample.csv"],
        &["sample", "zf.json", "--lo", "-1", "--hi", "1", "--points", "9", "--out", "zf_sample.csv"],
        &["sample", "rz.json", "--lo", "-1", "--hi", "1", "--points", "5", "--exact", "--out", "rz_sample.csv"],
    ];
    let mut logs = Vec::new();
    for step in steps {
        let mut args = vec!["--threads", threads];
        args.extend_from_slice(step);
        let out = Command::new(bin).current_dir(d).args(&args).output().expect("binary runs");
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        logs.push(String::from_utf8(out.stdout).expect("utf-8"));
    }
    (tree(d), logs)
}
