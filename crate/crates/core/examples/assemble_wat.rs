//! Assemble a WAT module, validate it, and round-trip the binary.
//!
//! ```text
//! cargo run --example assemble_wat [file.wat]
//! ```

use sentinel::wat::{decode_module, encode_module, parse_wat, validate_module};

const DEFAULT: &str = r#"(module
  (memory (export "memory") 1 65537)
  (func $rotr (export "rotr") (param i64 i64) (result i64)
    local.get 0
    local.get 1
    i64.rotr)
  (func (export "lanes") (param i32) (result i32)
    (i32x4.extract_lane 2 (i32x4.splat (local.get 0)))))"#;

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => DEFAULT.to_string(),
    };
    let module = match parse_wat(&text) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("parse error: {e}");
            std::process::exit(1);
        }
    };

    let report = validate_module(&module);
    if report.is_valid() {
        println!("valid");
    }
    for v in &report.violations {
        println!("violation: {v}");
    }

    let bytes = encode_module(&module).expect("encodable");
    println!("{} bytes", bytes.len());
    for chunk in bytes.chunks(16) {
        let hex: Vec<String> = chunk.iter().map(|b| format!("{b:02x}")).collect();
        println!("  {}", hex.join(" "));
    }

    let decoded = decode_module(&bytes).expect("decodable");
    let again = encode_module(&decoded).expect("re-encodable");
    println!("round trip identical: {}", again == bytes);
}
