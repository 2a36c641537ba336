use std::path::Path;
use std::process::{Command, Output};

use fuzzyseg::imageio::{encode_pgm, read_mask};
use fuzzyseg::{match_clusters, BinaryMask};

fn fuzzyseg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuzzyseg"))
        .args(args)
        .current_dir(dir)
        .env("FUZZYSEG_THREADS", "0")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn small_phantom(dir: &Path, noise: &str) {
    let out = fuzzyseg(
        dir,
        &[
            "phantom", "--width", "32", "--height", "24", "--disk", "10,12,6", "--rect", "20,6,8,12", "--noise", noise,
            "--output", "img.pgm", "--mask", "mask.pgm",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn segment_noiseless_phantom_matches_mask() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_phantom(d, "none");
    // pcm is left out: when fcm lands exactly on two gray levels the spread is zero
    for algo in ["fcm", "mfcm", "fpcm"] {
        let out = fuzzyseg(
            d,
            &["segment", "--algo", algo, "--clusters", "2", "--input", "img.pgm", "--output", "labels.pgm"],
        );
        assert_eq!(out.status.code(), Some(0), "{algo}: {}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        assert_eq!(value(&text, "algo"), algo);
        assert_eq!(value(&text, "converged"), "true");
        assert!(value(&text, "iterations").parse::<usize>().unwrap() >= 1);
        value(&text, "objective").parse::<f64>().unwrap();

        let labels = read_mask(d.join("labels.pgm")).unwrap();
        let gt = read_mask(d.join("mask.pgm")).unwrap();
        let as_labels: Vec<usize> = labels.bits().iter().map(|&b| b as usize).collect();
        let object = match_clusters(&as_labels, &gt, 2).unwrap();
        let seg = BinaryMask::from_labels(32, 24, &as_labels, &object).unwrap();
        let wrong = seg.bits().iter().zip(gt.bits()).filter(|(a, b)| a != b).count();
        // the non-local term smears boundary pixels on a shape this small
        assert!(wrong <= 32, "{algo}: {wrong} pixels disagree");
        if algo != "mfcm" {
            assert_eq!(wrong, 0, "{algo}");
        }
    }
}

#[test]
fn membership_csv_has_one_row_per_pixel() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_phantom(d, "gaussian:0.1");
    let out = fuzzyseg(
        d,
        &[
            "segment", "--algo", "fpcm", "--clusters", "3", "--input", "img.pgm", "--output", "l.pgm", "--membership", "u.csv",
        ],
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(d.join("u.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("pixel,c0,c1,c2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 32 * 24);
    for (k, row) in rows.iter().enumerate() {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[0], k.to_string());
        let sum: f64 = fields[1..].iter().map(|f| f.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-8);
    }
    let labels = std::fs::read(d.join("l.pgm")).unwrap();
    let levels: std::collections::BTreeSet<u8> = labels[labels.len() - 32 * 24..].iter().copied().collect();
    assert!(levels.iter().all(|l| [0, 127, 255].contains(l)), "{levels:?}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_phantom(d, "none");
    let code = |args: &[&str]| fuzzyseg(d, args).status.code();

    assert_eq!(code(&["segment", "--clusters", "1", "--input", "img.pgm", "--output", "o.pgm"]), Some(2));
    assert_eq!(code(&["segment", "--m", "1", "--input", "img.pgm", "--output", "o.pgm"]), Some(2));
    assert_eq!(code(&["segment", "--algo", "kmeans", "--input", "img.pgm", "--output", "o.pgm"]), Some(2));
    assert_eq!(code(&["segment", "--input", "img.pgm"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["--help"]), Some(0));

    assert_eq!(code(&["segment", "--input", "missing.pgm", "--output", "o.pgm"]), Some(4));
    std::fs::write(d.join("deep.pgm"), b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0").unwrap();
    assert_eq!(code(&["segment", "--input", "deep.pgm", "--output", "o.pgm"]), Some(4));
    std::fs::write(d.join("short.pgm"), b"P5\n4 4\n255\n\0\0").unwrap();
    assert_eq!(code(&["segment", "--input", "short.pgm", "--output", "o.pgm"]), Some(4));

    // two exact gray levels: the possibilistic scale collapses to zero
    let exact: Vec<u8> = (0..40).map(|k| if k % 8 < 4 { 51 } else { 204 }).collect();
    std::fs::write(d.join("exact.pgm"), encode_pgm(8, 5, &exact)).unwrap();
    assert_eq!(code(&["segment", "--algo", "pcm", "--input", "exact.pgm", "--output", "o.pgm"]), Some(3));

    std::fs::write(d.join("blank.pgm"), encode_pgm(8, 5, &[0; 40])).unwrap();
    assert_eq!(code(&["evaluate", "--seg", "mask.pgm", "--gt", "blank.pgm"]), Some(2));
    assert_eq!(code(&["phantom", "--width", "8", "--height", "8", "--disk", "4,4,9", "--output", "a.pgm", "--mask", "b.pgm"]), Some(2));
    assert_eq!(code(&["benchmark", "--seeds", "3-1"]), Some(2));

    let bad = Command::new(env!("CARGO_BIN_EXE_fuzzyseg"))
        .args(["phantom", "--output", "a.pgm", "--mask", "b.pgm"])
        .current_dir(d)
        .env("FUZZYSEG_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn evaluate_prints_report_and_appends_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("gt.pgm"), encode_pgm(4, 1, &[255, 255, 0, 0])).unwrap();
    std::fs::write(d.join("seg.pgm"), encode_pgm(4, 1, &[0, 200, 128, 127])).unwrap();
    for _ in 0..2 {
        let out = fuzzyseg(d, &["evaluate", "--seg", "seg.pgm", "--gt", "gt.pgm", "--csv", "eval.csv", "--label", "mine"]);
        assert!(out.status.success());
        assert_eq!(
            stdout(&out),
            "similarity=50.0000\nfalse_positive_ratio=50.0000\nfalse_negative_ratio=50.0000\ntp=1\nfp=1\nfn=1\ntn=1\n"
        );
    }
    assert_eq!(
        std::fs::read_to_string(d.join("eval.csv")).unwrap(),
        "algo,similarity,fpr,fnr,tp,fp,fn,tn\nmine,50.0000,50.0000,50.0000,1,1,1,1\nmine,50.0000,50.0000,50.0000,1,1,1,1\n"
    );
    let out = fuzzyseg(d, &["evaluate", "--seg", "seg.pgm", "--gt", "gt.pgm", "--index", "jaccard"]);
    assert!(value(&stdout(&out), "similarity").starts_with("33.33"));
}

#[test]
fn phantom_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("spec.txt"),
        "# one disk\nwidth=20\nheight=20\nbackground=0.1\nobject=0.9\ndisk=10,10,3\nnoise=none\nseed=4\n",
    )
    .unwrap();
    let out = fuzzyseg(d, &["phantom", "--spec", "spec.txt", "--output", "img.png", "--mask", "mask.pgm"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // lattice points with x² + y² ≤ 9
    assert_eq!(value(&text, "object_pixels"), "29");
    assert_eq!(value(&text, "seed"), "4");
    let image = fuzzyseg::imageio::read_gray(d.join("img.png")).unwrap();
    let levels: std::collections::BTreeSet<u8> = image.to_u8().into_iter().collect();
    assert_eq!(levels.len(), 2);
    assert_eq!(read_mask(d.join("mask.pgm")).unwrap().count(), 29);

    let help = stdout(&fuzzyseg(d, &["phantom", "--help"]));
    for key in ["width=N", "disk=CX,CY,R", "rect=X,Y,W,H", "noise=none", "seed=N"] {
        assert!(help.contains(key), "help lacks {key}");
    }
}

#[test]
fn benchmark_rows_and_noiseless_scores() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = fuzzyseg(
        d,
        &[
            "benchmark", "--width", "40", "--height", "32", "--disk", "12,16,7", "--disk", "29,16,6", "--noise", "none",
            "--algos", "fcm,mfcm,fpcm", "--seeds", "1-3", "--csv", "bench.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("bench.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 3 + 3);
    for row in &rows {
        let similarity: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        // the non-local window is wide relative to these disks
        let floor = if row.starts_with("mfcm") { 85.0 } else { 99.5 };
        assert!(similarity >= floor, "{row}");
    }
    assert!(rows.contains(&"fcm/mean,100.0000,0.0000,0.0000,262,0,0,1018"), "{csv}");
    let text = stdout(&out);
    for algo in ["fcm", "mfcm", "fpcm"] {
        value(&text, &format!("{algo}.similarity"));
    }

    let out = fuzzyseg(
        d,
        &["benchmark", "--width", "24", "--height", "24", "--disk", "12,12,5", "--algos", "fcm", "--seeds", "2,5"],
    );
    let printed = stdout(&out);
    assert_eq!(printed.lines().count(), 1 + 2 + 1);
    assert!(printed.lines().nth(2).unwrap().starts_with("fcm/seed=5,"));
}
