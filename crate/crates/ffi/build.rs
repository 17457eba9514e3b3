use std::env;
use std::path::PathBuf;

use cbindgen::{Config, Language, Style};

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    let config = Config {
        language: Language::C,
        include_guard: Some("FREEBOUND_H".into()),
        cpp_compat: true,
        documentation: true,
        style: Style::Type,
        usize_is_size_t: true,
        ..Default::default()
    };
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .with_header("/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */")
        .generate()
        .expect("header generation")
        .write_to_file(crate_dir.join("include/freebound.h"));
}
