//! Shared inputs for the benches.

use polyqtt::frontend::{load, LoadOptions, Loaded};

pub fn corpus(name: &str) -> String {
    let path = format!("{}/../../corpus/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {}", path, e))
}

pub fn loaded(name: &str) -> Loaded {
    load(&corpus(name), LoadOptions::default()).unwrap_or_else(|d| panic!("{}", d))
}
