//! End-to-end checks of the binary: exit codes and reproducible output.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cfmimo"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cfmimo-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn bad_config_exits_with_code_2() {
    let cfg = write_config("bad.toml", "m = 4\nk = 3\ntau = 2\n");
    let out = bin().args(["scenario", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let cfg = write_config("unknown-key.toml", "emitters = 4\n");
    let out = bin().args(["scenario", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_is_reproducible_byte_for_byte() {
    let cfg = write_config("desk.toml", "m = 10\nk = 3\ntau = 3\n");
    let out_a = tmp("sweep-a.csv");
    let out_b = tmp("sweep-b.csv");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args(["sweep", "--grid", "1,2", "--realizations", "2", "--seed", "9", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn validate_succeeds_on_desk_scenario() {
    let cfg = write_config("val.toml", "m = 6\nk = 2\ntau = 2\nxi_t = 0.9\nxi_r = 0.9\n");
    let out = tmp("validation.csv");
    let status = bin()
        .args(["validate", "--draws", "120000", "--seed", "4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("quantity,ue,closed_form"));
    assert!(!text.contains(",false\n"), "some pairing failed");
}

#[test]
fn limits_requires_single_user() {
    let cfg = write_config("multi.toml", "m = 4\nk = 2\ntau = 2\n");
    let out = bin().args(["limits", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
