//! End-to-end CLI integration: sample -> decode -> fit -> report, exit
//! codes, and reproducibility of artifacts.

use std::path::Path;
use std::process::Command;

fn surfmem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_surfmem"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn base_config(out: &Path, seed: u64) -> String {
    format!(
        "[experiment]\ndistance=3\nbasis=Z\nrounds=4,8\nbitstrings=zeros,ones\nshots=1500\n\n[noise]\np=0.002\n\n[decoder]\nkind=mwpm\n\n[run]\nseed={seed}\nout={}\n",
        out.display()
    )
}

#[test]
fn pipeline_roundtrip_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("artifacts");
    let cfg = write_config(dir.path(), "run.cfg", &base_config(&out, 7));

    let status = surfmem().args(["sample", "--config"]).arg(&cfg).status().unwrap();
    assert!(status.success());
    let batches: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "qsht"))
        .collect();
    assert_eq!(batches.len(), 4, "2 rounds x 2 bitstrings");

    // Same config + seed resamples to identical bytes.
    let first: Vec<(std::path::PathBuf, Vec<u8>)> = batches
        .iter()
        .map(|e| (e.path(), std::fs::read(e.path()).unwrap()))
        .collect();
    assert!(surfmem().args(["sample", "--config"]).arg(&cfg).status().unwrap().success());
    for (path, bytes) in &first {
        assert_eq!(&std::fs::read(path).unwrap(), bytes, "resample changed {path:?}");
    }

    let output = surfmem().args(["decode", "--config"]).arg(&cfg).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("rounds    4"), "{stdout}");

    let output = surfmem().args(["fit", "--config"]).arg(&cfg).output().unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("eps_L"));

    let output = surfmem().args(["report", "--config"]).arg(&cfg).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(out.join("report_fidelity.svg").exists());

    let output = surfmem().args(["dem-dump", "--config"]).arg(&cfg).output().unwrap();
    assert!(output.status.success());
}

#[test]
fn decode_without_batches_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty");
    let cfg = write_config(dir.path(), "run.cfg", &base_config(&out, 9));
    let output = surfmem().args(["decode", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "{}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "[experiment]\ndistance=4\nshots=10\n");
    let output = surfmem().args(["sample", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn seed_override_changes_digest_and_decode_refuses_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("artifacts");
    let cfg = write_config(dir.path(), "run.cfg", &base_config(&out, 7));
    assert!(surfmem().args(["sample", "--config"]).arg(&cfg).status().unwrap().success());
    // Decoding under a different seed looks for differently-named batches.
    let output = surfmem()
        .args(["decode", "--seed", "8", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn nn_train_and_decode_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("artifacts");
    let cfg_text = format!(
        "[experiment]\ndistance=3\nbasis=Z\nrounds=2,4\nbitstrings=zeros\nshots=600\n\n[noise]\np=0.003\n\n[decoder]\nkind=nn\nmodel={}\n\n[train]\nmax_epochs=2\nbatch_size=128\ndropout=0.05\nseed=3\n\n[run]\nseed=5\nout={}\n",
        out.join("model.qnnm").display(),
        out.display()
    );
    let cfg = write_config(dir.path(), "nn.cfg", &cfg_text);
    let output = surfmem().args(["train", "--config"]).arg(&cfg).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    // The pipeline writes its own model name; point the decoder at it.
    let model_path = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.path().extension().is_some_and(|x| x == "qnnm"))
        .unwrap()
        .path();
    let history = model_path.with_extension("history.csv");
    assert!(history.exists());
    let cfg_text = cfg_text.replace(
        &format!("model={}", out.join("model.qnnm").display()),
        &format!("model={}", model_path.display()),
    );
    let cfg = write_config(dir.path(), "nn2.cfg", &cfg_text);
    assert!(surfmem().args(["sample", "--config"]).arg(&cfg).status().unwrap().success());
    let output = surfmem().args(["decode", "--config"]).arg(&cfg).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn oracle_check_passes() {
    let output = surfmem().arg("oracle-check").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count() >= 5, "{stdout}");
    assert!(!stdout.contains("[FAIL]"));
}
