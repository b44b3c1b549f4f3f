use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gpbm::gabor::GaborParams;
use gpbm::synth::{textured_face, translate};
use gpbm::{load_index, make_kernel, save_pgm};

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    /// Three identities in 200x180 frames, each with a gallery image and a
    /// slightly shifted probe image, plus defaults-only config.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        let mut gallery = String::new();
        let mut probes = String::new();
        let mut eyes = String::from("# id lx ly rx ry\n");
        for i in 0..3u64 {
            let face = textured_face(70 + i, 200, 180);
            save_pgm(&face, p.join(format!("g{i}.pgm"))).unwrap();
            save_pgm(&translate(&face, -2, 3), p.join(format!("p{i}.pgm"))).unwrap();
            gallery.push_str(&format!("id{i} g{i}.pgm g{i}.pgm\n"));
            probes.push_str(&format!("id{i} p{i}.pgm p{i}.pgm\n"));
            eyes.push_str(&format!("g{i}.pgm 65 75 125 75\np{i}.pgm 68 73 128 73\n"));
        }
        fs::write(p.join("gallery.txt"), gallery).unwrap();
        fs::write(p.join("probes.txt"), probes).unwrap();
        fs::write(p.join("eyes.txt"), eyes).unwrap();
        fs::write(p.join("gpbm.conf"), "# library defaults\n").unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_gpbm"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    fn encode(&self) -> Output {
        self.run(&[
            "encode", "--list", "gallery.txt", "--eyes", "eyes.txt", "--config", "gpbm.conf",
            "--out", "gallery.idx",
        ])
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn encode_writes_index() {
    let fx = Fixture::new();
    let out = fx.encode();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("entries: 3"));
    assert!(stdout(&out).contains("fingerprint: "));
    let index = load_index(fx.path("gallery.idx")).unwrap();
    let ids: Vec<_> = index.entries().iter().map(|e| e.image_id.as_str()).collect();
    assert_eq!(ids, ["g0.pgm", "g1.pgm", "g2.pgm"]);
}

#[test]
fn encode_missing_eyes_names_image() {
    let fx = Fixture::new();
    fs::write(fx.path("eyes.txt"), "g0.pgm 65 75 125 75\ng2.pgm 65 75 125 75\n").unwrap();
    let out = fx.encode();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("MissingEyes") && err.contains("g1.pgm"), "{err}");
}

#[test]
fn encode_rejects_oversized_blocks() {
    let fx = Fixture::new();
    fs::write(fx.path("gpbm.conf"), "block_h = 151\n").unwrap();
    let out = fx.encode();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("BlockLargerThanImage"));
}

#[test]
fn match_self_is_zero_with_full_report() {
    let fx = Fixture::new();
    let out = fx.run(&[
        "match", "--a", "g0.pgm", "--b", "g0.pgm", "--eyes", "eyes.txt", "--config", "gpbm.conf",
        "--report", "report.csv",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "0.000000");
    let report = read(&fx.path("report.csv"));
    let records = report
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("dist,"))
        .count();
    assert_eq!(records, 35);
    assert!(report.ends_with("dist,0.000000\n"));
}

#[test]
fn match_distinguishes_identities() {
    let fx = Fixture::new();
    let dist = |a: &str, b: &str| -> f64 {
        let out = fx.run(&[
            "match", "--a", a, "--b", b, "--eyes", "eyes.txt", "--config", "gpbm.conf",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        stdout(&out).trim().parse().unwrap()
    };
    assert!(dist("p1.pgm", "g1.pgm") < dist("p1.pgm", "g0.pgm"));
}

#[test]
fn match_requires_config_flag() {
    let fx = Fixture::new();
    let out = fx.run(&["match", "--a", "g0.pgm", "--b", "g0.pgm", "--eyes", "eyes.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("UsageError"));
}

#[test]
fn identify_self_and_top_k() {
    let fx = Fixture::new();
    assert!(fx.encode().status.success());
    let out = fx.run(&[
        "identify", "--index", "gallery.idx", "--probes", "gallery.txt", "--eyes", "eyes.txt",
        "--top-k", "1", "--out", "ranks.csv",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = read(&fx.path("ranks.csv"));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "probe_id,rank,identity,image_id,dist");
    assert_eq!(rows.len(), 4);
    for (i, row) in rows[1..].iter().enumerate() {
        assert_eq!(*row, format!("g{i}.pgm,1,id{i},g{i}.pgm,0.000000000"));
    }
}

#[test]
fn identify_empty_probe_list() {
    let fx = Fixture::new();
    assert!(fx.encode().status.success());
    fs::write(fx.path("none.txt"), "# nothing\n").unwrap();
    let out = fx.run(&[
        "identify", "--index", "gallery.idx", "--probes", "none.txt", "--eyes", "eyes.txt",
        "--out", "ranks.csv",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(read(&fx.path("ranks.csv")), "probe_id,rank,identity,image_id,dist\n");
}

#[test]
fn identify_detects_parameter_mismatch() {
    let fx = Fixture::new();
    assert!(fx.encode().status.success());
    fs::write(fx.path("other.conf"), "search_r = 5\n").unwrap();
    let out = fx.run(&[
        "identify", "--index", "gallery.idx", "--probes", "probes.txt", "--eyes", "eyes.txt",
        "--out", "ranks.csv", "--config", "other.conf",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("FingerprintMismatch"));
}

#[test]
fn eval_reports_rank1_and_cmc() {
    let fx = Fixture::new();
    assert!(fx.encode().status.success());
    for list in ["gallery.txt", "probes.txt"] {
        let out = fx.run(&[
            "eval", "--index", "gallery.idx", "--probes", list, "--config", "gpbm.conf",
            "--eyes", "eyes.txt", "--cmc", "cmc.csv", "--max-rank", "3",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stdout(&out).contains("rank-1: 100.0%"), "{}", stdout(&out));
        assert_eq!(
            read(&fx.path("cmc.csv")),
            "k,rate\n1,1.000000\n2,1.000000\n3,1.000000\n"
        );
    }
}

#[test]
fn eval_unknown_identity_fails() {
    let fx = Fixture::new();
    assert!(fx.encode().status.success());
    fs::write(fx.path("strangers.txt"), "id0 p0.pgm p0.pgm\nnobody p1.pgm p1.pgm\n").unwrap();
    let out = fx.run(&[
        "eval", "--index", "gallery.idx", "--probes", "strangers.txt", "--config", "gpbm.conf",
        "--eyes", "eyes.txt", "--cmc", "cmc.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("UnknownIdentity") && err.contains("p1.pgm"), "{err}");
}

#[test]
fn outputs_are_deterministic() {
    let fx = Fixture::new();
    assert!(fx.encode().status.success());
    let first = fs::read(fx.path("gallery.idx")).unwrap();
    assert!(fx.encode().status.success());
    assert_eq!(first, fs::read(fx.path("gallery.idx")).unwrap());

    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = fx.run(&[
            "eval", "--index", "gallery.idx", "--probes", "probes.txt", "--config", "gpbm.conf",
            "--eyes", "eyes.txt", "--cmc", "cmc.csv", "--results", "res.csv",
        ]);
        assert!(out.status.success());
        outputs.push((read(&fx.path("cmc.csv")), read(&fx.path("res.csv"))));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn kernel_dump_matches_library() {
    let fx = Fixture::new();
    let out = fx.run(&["kernel-dump", "--config", "gpbm.conf", "--u", "2", "--out", "k.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = read(&fx.path("k.csv"));
    let kernel = make_kernel(&GaborParams::default(), 2).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 36);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let (r, c): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let re: f64 = f[2].parse().unwrap();
        let im: f64 = f[3].parse().unwrap();
        let t = kernel.tap(r, c);
        assert!((re - t.re).abs() < 1e-12 && (im - t.im).abs() < 1e-12);
    }
}

#[test]
fn kernel_dump_rejects_bad_orientation() {
    let fx = Fixture::new();
    let out = fx.run(&["kernel-dump", "--config", "gpbm.conf", "--u", "8", "--out", "k.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("OutOfRange"));
}
