use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(PathBuf::from(&crate_dir).join("cbindgen.toml"))
        .expect("failed to read cbindgen.toml");
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            let header = PathBuf::from(&crate_dir).join("include").join("uframe.h");
            std::fs::create_dir_all(header.parent().unwrap()).unwrap();
            bindings.write_to_file(&header);
            let out = PathBuf::from(env::var("OUT_DIR").unwrap()).join("uframe.h");
            bindings.write_to_file(out);
        }
        Err(err) => {
            // keep builds working while the FFI surface is being edited
            println!("cargo:warning=cbindgen failed: {err}");
        }
    }
}
