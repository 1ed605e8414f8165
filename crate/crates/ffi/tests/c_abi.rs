use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "golgol.h"

int main(void) {
    const char *rle = "x = 3, y = 3, rule = B3/S23\nbo$2bo$3o!\n";
    GolWorld *w = NULL;
    if (golgol_world_from_rle((const uint8_t *)rle, strlen(rle), &w) != GOL_STATUS_OK) return 1;
    GolTorus *t = NULL;
    if (golgol_torus_from_world(w, 8, 8, &t) != GOL_STATUS_OK) return 2;
    golgol_torus_step(t, 32);
    if (golgol_torus_population(t) != 5 || !golgol_torus_get(t, 1, 0)) return 3;
    if (golgol_torus_new(1, 1, &t) != GOL_STATUS_INVALID_ARGUMENT) return 4;
    printf("%s\n", golgol_last_error());
    if (golgol_next_cell_check() != GOL_STATUS_OK) return 5;
    golgol_world_free(w);
    return 0;
}
"#;

/// `<target>/<profile>/deps`, where the test binary and the fresh static library live.
fn deps_dir() -> PathBuf {
    std::env::current_exe().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = deps_dir().join("libgolgol_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let dir = tempfile_dir();
    let src = dir.join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.join("main");
    let st = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler named cc");
    assert!(st.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).contains("at least 3x3"));
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("golgol-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
