//! Compiles and runs a small C program against the generated header and
//! the built shared library, exercising the ABI from the other side.

use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    // the library lands in target/<profile>/deps when building tests and in
    // target/<profile> on a plain build; check both
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    for dir in [deps, deps.parent().unwrap()] {
        if dir.join("libplda_ffi.so").exists() || dir.join("libplda_ffi.a").exists() {
            return dir.to_path_buf();
        }
    }
    panic!("libplda_ffi not found next to {}", exe.display());
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include "plda.h"

int main(void) {
    double data[40];
    for (int i = 0; i < 40; i++) data[i] = (double)(i % 5);

    PldaSeries *series = NULL;
    if (plda_series_from_data(data, 40, 1, &series) != PLDA_STATUS_OK) return 1;
    if (plda_series_len(series) != 40 || plda_series_dim(series) != 1) return 2;

    PldaSeries *bad = NULL;
    if (plda_series_from_data(data, 0, 1, &bad) != PLDA_STATUS_INVALID_ARGUMENT) return 3;
    printf("expected failure: %s\n", plda_last_error());

    double scores[4] = {0.9, 0.1, 0.8, 0.2};
    unsigned char labels[4] = {1, 0, 1, 0};
    double f1 = 0.0, th = 0.0;
    if (plda_best_f1(scores, labels, 4, false, &f1, &th) != PLDA_STATUS_OK) return 4;
    if (f1 != 1.0 || th != 0.8) return 5;

    plda_series_free(series);
    plda_series_free(NULL);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    assert!(include.join("plda.h").exists(), "header was not generated");

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();

    let lib_dir = target_dir();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&lib_dir)
        .args(["-lplda_ffi", "-lm", "-lpthread", "-ldl"])
        .status()
        .expect("cc not available");
    assert!(status.success(), "C compilation failed");

    let out = Command::new(&bin)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "smoke test exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("expected failure"));
}
