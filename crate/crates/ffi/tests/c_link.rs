//! Compiles a C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "perihelia.h"

int main(void) {
    double masses[1] = {1.0};
    PeriMassSystem *ms = NULL;
    if (peri_mass_system_new(1.0, masses, 1, 0.01, &ms) != PERI_STATUS_OK) return 10;
    double d[6] = {0.5, 0.8, 1.0, 0.3, 1.2, 2.0};
    double state[6], back[6];
    if (peri_delaunay_map(ms, d, 6, state, 6) != PERI_STATUS_OK) return 11;
    if (peri_delaunay_map_inverse(ms, state, 6, back, 6) != PERI_STATUS_OK) return 12;
    for (int i = 0; i < 6; i++) if (fabs(back[i] - d[i]) > 1e-10) return 13;
    double zeta;
    if (peri_solve_kepler(2.0, 0.0, &zeta) != PERI_STATUS_DOMAIN_VIOLATION) return 14;
    char msg[128];
    if (peri_last_error_message(msg, sizeof msg) == 0) return 15;
    peri_mass_system_free(ms);
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libperihelia_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler runs");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
