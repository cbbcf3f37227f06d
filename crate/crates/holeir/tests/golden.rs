//! The fixture corpus under `tests/golden/` is stored in canonical form:
//! parsing a file and printing the module must reproduce the file byte
//! for byte, and every fixture must pass the verifier.

use std::fs;
use std::path::PathBuf;

use holeir::textio;
use holeir::verifier;

fn fixtures() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut out = Vec::new();
    for entry in fs::read_dir(&dir).expect("fixture directory exists") {
        let path = entry.expect("readable directory entry").path();
        if path.extension().is_some_and(|e| e == "ll") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let text = fs::read_to_string(&path).expect("readable fixture");
            out.push((name, text));
        }
    }
    out.sort();
    assert!(!out.is_empty(), "no .ll fixtures under tests/golden");
    out
}

fn parse(name: &str, text: &str) -> holeir::ir::Module {
    match textio::parse_module(text) {
        Ok(m) => m,
        Err(diags) => {
            let lines: String = diags.iter().map(|d| format!("  {d}\n")).collect();
            panic!("{name} does not parse:\n{lines}");
        }
    }
}

#[test]
fn fixtures_print_back_byte_exact() {
    for (name, text) in fixtures() {
        let printed = textio::print_module(&parse(&name, &text));
        assert_eq!(printed, text, "{name} is not in canonical form");
    }
}

#[test]
fn fixtures_round_trip_to_a_fixpoint() {
    for (name, text) in fixtures() {
        let once = textio::print_module(&parse(&name, &text));
        let twice = textio::print_module(&parse(&name, &once));
        assert_eq!(twice, once, "{name}: second round trip diverged");
    }
}

#[test]
fn fixtures_pass_the_verifier() {
    for (name, text) in fixtures() {
        let m = parse(&name, &text);
        let diags = verifier::verify(&m);
        let lines: String = diags.iter().map(|d| format!("  {d}\n")).collect();
        assert!(diags.is_empty(), "{name} has verifier findings:\n{lines}");
    }
}
