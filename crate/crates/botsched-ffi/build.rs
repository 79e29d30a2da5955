fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file("cbindgen.toml")
        .expect("cbindgen.toml must parse");
    cbindgen::generate_with_config(&crate_dir, config)
        .expect("header generation must succeed")
        .write_to_file(format!("{crate_dir}/include/botsched.h"));
}
