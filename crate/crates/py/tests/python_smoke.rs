use std::path::Path;
use std::process::Command;

/// Runs the Python smoke script against the shared library cargo just built.
#[test]
fn python_smoke_script() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let script = manifest.join("python").join("smoke_test.py");
    let Ok(out) = Command::new("python3").arg(&script).output() else {
        eprintln!("python3 not available; skipping");
        return;
    };
    let stdout = String::from_utf8_lossy(&out.stdout);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "smoke test failed\nstdout: {stdout}\nstderr: {stderr}");
    assert!(stdout.contains("smoke test passed"));
}
