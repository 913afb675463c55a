use std::path::Path;
use std::process::{Command, Output};

fn hsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsum"))
        .args(args)
        .env_remove("HSUM_FORMAT")
        .output()
        .expect("spawn hsum")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let o = hsum(&full);
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)))
}

#[test]
fn analyze_examples() {
    let r = json(&["analyze", "--builtin", "toy"]);
    assert_eq!(r["delta"], 4);
    assert_eq!(r["anti_crooked"], false);

    let r = json(&["analyze", "--power", "3", "--m", "3"]);
    assert_eq!(r["apn"], true);
    assert_eq!(r["crooked"], true);

    let r = json(&["analyze", "--power", "49", "--m", "6"]);
    assert_eq!(r["permutation"], false);
    assert_eq!(r["no_coset_image"], true);

    let r = json(&["analyze", "--power", "38", "--m", "6"]);
    assert_eq!(r["anti_crooked"], true);
}

#[test]
fn analyze_files_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let sbox = dir.path().join("g.sbox");
    std::fs::write(&sbox, "m=3 n=3\n0 6 3 7 4 1 5 2\n").unwrap();
    let r = json(&["analyze", sbox.to_str().unwrap()]);
    assert_eq!(r["delta"], 4);

    let spec = dir.path().join("f.json");
    std::fs::write(
        &spec,
        r#"{"field": {"m": 3, "modulus": "1011"}, "kind": "univariate", "coeffs": [0, 2, 2, 7, 4, 2, 7]}"#,
    )
    .unwrap();
    let r = json(&["analyze", spec.to_str().unwrap()]);
    assert_eq!(r["delta"], 4);
    assert_eq!(r["anti_crooked"], false);

    std::fs::write(&sbox, "m=3 n=3\n0 6 3 7 4 1 5 zz\n").unwrap();
    let o = hsum(&["analyze", sbox.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");

    let o = hsum(&["analyze", "/nonexistent/file"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn encrypt_decrypt_round_trip() {
    for pt in ["00", "05", "3f"] {
        let ct = hsum(&["encrypt", "--key", "2a", "--pt", pt]);
        assert!(ct.status.success());
        let ct = stdout(&ct).trim().to_string();
        assert_eq!(ct.len(), 2);
        let back = hsum(&["decrypt", "--key", "2a", "--ct", &ct, "--rounds", "20"]);
        assert_eq!(stdout(&back).trim(), pt);
    }
    assert_eq!(
        hsum(&["encrypt", "--key", "zz", "--pt", "00"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hsum(&["encrypt", "--key", "00", "--pt", "00", "--rounds", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn env_selects_format() {
    let o = Command::new(env!("CARGO_BIN_EXE_hsum"))
        .args(["encrypt", "--key", "01", "--pt", "02"])
        .env("HSUM_FORMAT", "json")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["input"], "02");
}

#[test]
fn hidden_verify_and_search() {
    let r = json(&["hidden-verify"]);
    assert_eq!(r["nilpotency_index"], 3);
    assert_eq!(r["U_basis"][0], "010");

    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("t.txt");
    std::fs::write(&spec, "3\n100010011|100\n").unwrap();
    let o = hsum(&["hidden-verify", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let r = json(&["hidden-search"]);
    assert_eq!(r["count"], 1);
    assert_eq!(r["contains_toy_sum"], true);
    let r = json(&["hidden-search", "--brick-power", "6"]);
    assert_eq!(r["count"], 0);
}

#[test]
fn attack_reports() {
    for mode in ["cp", "cpcc"] {
        let r = json(&[
            "attack", "--mode", mode, "--rounds", "100", "--key", "random", "--seed", "9",
        ]);
        assert_eq!(r["enc_queries"], 7);
        assert_eq!(r["dec_queries"], if mode == "cp" { 0 } else { 7 });
        assert_eq!(r["mismatches"], 0);
        assert_eq!(r["verified_blocks"], 64);
    }
    let r = json(&[
        "attack",
        "--schedule",
        "custom",
        "--key",
        "15",
        "--spot-checks",
        "all",
    ]);
    assert_eq!(r["passed"], true);
}

#[test]
fn cipher_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"bricks": ["builtin:toy", "builtin:toy"], "mixing": "builtin:toy", "rounds": 5}"#,
    )
    .unwrap();
    let a = hsum(&[
        "encrypt",
        "--cipher",
        cfg.to_str().unwrap(),
        "--key",
        "11",
        "--pt",
        "22",
    ]);
    let b = hsum(&["encrypt", "--rounds", "5", "--key", "11", "--pt", "22"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

fn write_corrupted_lambda(path: &Path) {
    // first row of the toy mixing layer with its last bit flipped; still invertible
    let rows = ["011011", "010000", "111010", "010111", "000010", "010110"];
    std::fs::write(path, rows.join("\n")).unwrap();
}

#[test]
fn reproduce_detects_corrupted_mixing() {
    let dir = tempfile::tempdir().unwrap();
    let lambda = dir.path().join("lambda.txt");
    write_corrupted_lambda(&lambda);
    let o = hsum(&[
        "reproduce",
        "--only",
        "12,13,14",
        "--mixing",
        lambda.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    for id in ["12", "13", "14"] {
        assert!(
            out.lines()
                .any(|l| l.starts_with("FAIL") && l[5..].trim_start().starts_with(id)),
            "{out}"
        );
    }
}

#[test]
fn reproduce_with_100_rounds() {
    let o = hsum(&["reproduce", "--only", "12,13", "--rounds", "100"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn output_is_deterministic() {
    let args = [
        "--json",
        "attack",
        "--key",
        "random",
        "--seed",
        "3",
        "--schedule",
        "custom",
    ];
    assert_eq!(hsum(&args).stdout, hsum(&args).stdout);
    let args = ["reproduce", "--only", "9,13"];
    assert_eq!(hsum(&args).stdout, hsum(&args).stdout);
}
