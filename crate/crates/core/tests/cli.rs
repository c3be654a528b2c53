use std::path::Path;
use std::process::{Command, Output};

use fbrewire::io::{read_pgm, read_signal, write_pgm, write_signal};
use fbrewire::metrics::Metrics;
use fbrewire::phantom;

fn fbrewire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbrewire"))
        .args(args)
        .output()
        .expect("spawn fbrewire")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn image_round_trip_is_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_pgm(&input, &phantom::shapes(64, 64).unwrap()).unwrap();
    for fb in ["haar", "d4", "bior53"] {
        let bands = dir.path().join(fb);
        let o = fbrewire(&[
            "analyze",
            s(&input),
            "--filterbank",
            fb,
            "--depth",
            "3",
            "--out",
            s(&bands),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let out = dir.path().join(format!("{fb}.pgm"));
        let o = fbrewire(&[
            "synthesize",
            s(&bands.join("manifest.json")),
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(
            std::fs::read(&input).unwrap(),
            std::fs::read(&out).unwrap(),
            "{fb}"
        );
    }
}

#[test]
fn signal_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    let x: Vec<f64> = (0..32).map(|n| (n as f64 * 0.37).sin() * 10.0).collect();
    write_signal(&input, &x).unwrap();
    let bands = dir.path().join("bands");
    assert_eq!(
        code(&fbrewire(&[
            "analyze",
            s(&input),
            "--filterbank",
            "d4",
            "--depth",
            "2",
            "--out",
            s(&bands)
        ])),
        0
    );
    assert!(bands.join("band_00.txt").exists() && bands.join("band_11.txt").exists());
    let out = dir.path().join("y.txt");
    assert_eq!(
        code(&fbrewire(&[
            "synthesize",
            s(&bands.join("manifest.json")),
            "--out",
            s(&out)
        ])),
        0
    );
    let y = read_signal(&out).unwrap();
    let err = x
        .iter()
        .zip(y.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    write_signal(&input, &[1.0; 12]).unwrap();
    let out = dir.path().join("o");
    // 12 samples do not support three levels.
    assert_eq!(
        code(&fbrewire(&[
            "analyze",
            s(&input),
            "--depth",
            "3",
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&fbrewire(&[
            "analyze",
            s(&input),
            "--filterbank",
            "nope",
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&fbrewire(&[
            "analyze",
            s(&input),
            "--depth",
            "x",
            "--out",
            s(&out)
        ])),
        2
    );

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 2 zebra\n").unwrap();
    assert_eq!(code(&fbrewire(&["analyze", s(&bad), "--out", s(&out)])), 3);
    let bad_pgm = dir.path().join("bad.pgm");
    std::fs::write(&bad_pgm, b"P5\n4 4\n255\n\x00").unwrap();
    assert_eq!(
        code(&fbrewire(&[
            "despeckle",
            s(&bad_pgm),
            "--sigma",
            "0.3",
            "--out",
            s(&out)
        ])),
        3
    );
}

#[test]
fn corrupted_filterbank_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fbrewire::filterbank::FilterbankPair::haar().to_spec();
    let mut json: serde_json::Value = serde_json::to_value(&spec).unwrap();
    // Perturb one synthesis tap.
    let tap = &mut json["h1"]["taps"][0];
    *tap = serde_json::json!(tap.as_f64().unwrap() + 0.01);
    let path = dir.path().join("broken.json");
    std::fs::write(&path, json.to_string()).unwrap();
    let o = fbrewire(&["validate", "--only", "1", "--filterbank", s(&path)]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("criterion  1 FAIL"));
}

#[test]
fn validate_subset() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = fbrewire(&["validate", "--only", "3,6", "--report", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let ids: Vec<u64> = r["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![3, 6]);
    assert_eq!(code(&fbrewire(&["validate", "--only", "12"])), 2);
}

#[test]
fn noiseless_interpolation_keeps_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.pgm");
    let x = phantom::shapes(32, 32).unwrap();
    write_pgm(&input, &x).unwrap();
    let out = dir.path().join("out.pgm");
    let o = fbrewire(&[
        "interpolate",
        s(&input),
        "--sigma",
        "0",
        "--depth",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let y = read_pgm(&out).unwrap();
    for r in 0..16 {
        for c in 0..16 {
            assert_eq!(y.get(2 * r, 2 * c), x.get(2 * r, 2 * c));
        }
    }
}

#[test]
fn restoration_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.pgm");
    write_pgm(&input, &phantom::shapes(32, 32).unwrap()).unwrap();
    let run = |k: usize| {
        let out = dir.path().join(format!("o{k}.pgm"));
        let report = dir.path().join(format!("r{k}.json"));
        let o = fbrewire(&[
            "despeckle",
            s(&input),
            "--sigma",
            "0.3",
            "--seed",
            "9",
            "--depth",
            "2",
            "--out",
            s(&out),
            "--report",
            s(&report),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let m: Metrics = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        (std::fs::read(&out).unwrap(), m)
    };
    let (a, ma) = run(0);
    let (b, mb) = run(1);
    assert_eq!(a, b);
    assert!(ma.same_values(&mb));
    assert!(ma.mse_out < ma.mse_in);
}

#[test]
fn rewire_report_for_a_step() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("step.txt");
    let x: Vec<f64> = (0..32).map(|n| if n < 13 { 0.0 } else { 1.0 }).collect();
    write_signal(&input, &x).unwrap();
    let report = dir.path().join("r.json");
    let o = fbrewire(&[
        "rewire-report",
        s(&input),
        "--depth",
        "2",
        "--report",
        s(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["complement"]["name"], "haar~");
    assert!(r["ross_max_error"].as_f64().unwrap() < 1e-12);
    assert!(r["aliasing_max_error"].as_f64().unwrap() < 1e-12);
    assert!(r["scs"]["square_max_error"].as_f64().unwrap() < 1e-9);
}
