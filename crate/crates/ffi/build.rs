use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let config = match cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")) {
        Ok(c) => c,
        Err(e) => panic!("reading cbindgen.toml: {e}"),
    };
    match cbindgen::generate_with_config(&crate_dir, config) {
        // Only touches the file when the contents change.
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include/heat_rigidity.h"));
        }
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
