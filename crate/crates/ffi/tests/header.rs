use std::path::Path;
use std::process::Command;

/// The generated header must compile as C and declare every exported symbol.
#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/shl.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "shl_last_error_message",
        "shl_string_free",
        "shl_spec_new",
        "shl_spec_free",
        "shl_spec_evaluate",
        "shl_spec_big_f",
        "shl_spec_big_f_inv",
        "shl_spec_beta",
        "shl_spec_classify_json",
        "shl_profile_build",
        "shl_profile_free",
        "shl_profile_radius",
        "shl_profile_eval",
        "shl_demo_run_json",
    ] {
        assert!(text.contains(&format!("{sym}(")), "{sym} missing from header");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match Command::new(&cc).args(["-fsyntax-only", "-std=c99", "-Wall", "-Werror", "-x", "c"]).arg(&header).status() {
        Ok(s) => assert!(s.success(), "{cc} rejected the header"),
        Err(e) => eprintln!("skipping C syntax check: {cc} unavailable ({e})"),
    }
}
