use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ilwc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilwc"))
        .args(args)
        .env_remove("ILWC_PARAMS")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn encode_decode_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (0..5000u32).map(|i| (i * 31 % 251) as u8).collect();
    fs::write(&input, &data).unwrap();
    for seg in ["2", "4", "8"] {
        let enc = dir.path().join(format!("c{seg}.ilwc"));
        let dec = dir.path().join(format!("d{seg}.bin"));
        let o = ilwc(&["encode", "--segment", seg, "--input", s(&input), "--output", s(&enc)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let o = ilwc(&["decode", "--input", s(&enc), "--output", s(&dec)]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(fs::read(&dec).unwrap(), data);
    }
}

#[test]
fn strict_decode_reports_codeword_index() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    fs::write(&input, [0x37u8, 0x37, 0x37]).unwrap();
    let enc = dir.path().join("c.ilwc");
    ilwc(&["encode", "--segment", "4", "--input", s(&input), "--output", s(&enc)]);
    let mut bytes = fs::read(&enc).unwrap();
    // codeword 3 is 00111 (weight 3) at payload bits 15..20; clear its last one
    // at payload bit 19, i.e. byte 2 bit 3.
    bytes[16 + 2] &= !0b0001_0000;
    fs::write(&enc, &bytes).unwrap();
    let out = dir.path().join("out.bin");
    let o = ilwc(&["decode", "--input", s(&enc), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("codeword index 3"), "{err}");

    let o = ilwc(&["decode", "--lenient", "--input", s(&enc), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&out).unwrap().len(), 3);
    let sidecar: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out.bin.errors.json")).unwrap()).unwrap();
    assert_eq!(sidecar[0]["codeword_index"], 3);
    assert_eq!(sidecar[0]["weight"], 2);
}

#[test]
fn model_key_value_output() {
    let o = ilwc(&["model", "--ispp-dv", "3.5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().any(|l| l == "n_steps=16"));
    assert!(out.lines().all(|l| l.contains('=')));
    let o = ilwc(&["model", "--ispp-dv", "2.25"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("n_steps=10\n"));

    let o = ilwc(&["model", "--field-before", "1.8212", "--field-after", "1.2151"]);
    let out = String::from_utf8(o.stdout).unwrap();
    let v: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("relative_field_change="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - 0.3328).abs() < 1e-4);
}

#[test]
fn model_cell_error_needs_explicit_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let o = ilwc(&["model", "--cer-vth", "1.5"]);
    assert_eq!(o.status.code(), Some(4));
    let params = dir.path().join("p.txt");
    fs::write(&params, "alpha1 = 0\nbeta1 = 1\nalpha2 = 0\nbeta2 = 0\n").unwrap();
    let o = ilwc(&["model", "--params", s(&params), "--cer-vth", "1.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "cell_error_rate=0\n");

    // environment default
    let o = Command::new(env!("CARGO_BIN_EXE_ilwc"))
        .args(["model", "--cer-vth", "1.5"])
        .env("ILWC_PARAMS", &params)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ilwc(&[]).status.code(), Some(1));
    assert_eq!(ilwc(&["model"]).status.code(), Some(1));
    assert_eq!(ilwc(&["encode", "--segment", "6", "--input", "a", "--output", "b"]).status.code(), Some(1));
    assert_eq!(ilwc(&["--help"]).status.code(), Some(0));

    let missing = dir.path().join("missing");
    let out = dir.path().join("o");
    assert_eq!(
        ilwc(&["encode", "--segment", "4", "--input", s(&missing), "--output", s(&out)]).status.code(),
        Some(2)
    );

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "no_such_key = 1\n").unwrap();
    let o = ilwc(&["model", "--params", s(&bad), "--ispp-dv", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(o.stdout.is_empty());

    // never overwrite the input
    let input = dir.path().join("in");
    fs::write(&input, b"abc").unwrap();
    let o = ilwc(&["encode", "--segment", "4", "--input", s(&input), "--output", s(&input)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read(&input).unwrap(), b"abc");

    // not a container
    let o = ilwc(&["decode", "--input", s(&input), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir_all(corpus.join("nested")).unwrap();
    fs::write(corpus.join("a.jpg"), vec![0x5Au8; 4096]).unwrap();
    fs::write(corpus.join("nested/b.jpg"), vec![0x01u8; 2048]).unwrap();
    fs::write(corpus.join("c.txt"), b"ignored").unwrap();

    let json_out = dir.path().join("r.json");
    let o = ilwc(&[
        "analyze", "--format", "json", "--output", s(&json_out), "--recursive", "--ext", "jpg", "--jobs", "2",
        s(&corpus),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&json_out).unwrap()).unwrap();
    assert_eq!(v["files"].as_array().unwrap().len(), 2);
    assert_eq!(v["configurations"], serde_json::json!([2, 4, 8]));

    let csv_out = dir.path().join("r.csv");
    let o = ilwc(&[
        "analyze", "--format", "csv", "--segment", "4,8", "--output", s(&csv_out), "--recursive", s(&corpus),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&csv_out).unwrap();
    assert_eq!(text.lines().count(), 3 * 3 + 1);
    for config in ["uncoded", "4", "8"] {
        let hist = dir.path().join(format!("r.csv.hist-{config}.csv"));
        assert!(hist.exists(), "{}", hist.display());
    }

    let o = ilwc(&["analyze", "--output", s(&json_out), s(&dir.path().join("void"))]);
    assert_eq!(o.status.code(), Some(2));
}
