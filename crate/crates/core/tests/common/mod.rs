#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

/// Whitespace-separated numeric rows, `#` comments skipped.
pub fn read_table(name: &str) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|t| t.parse().expect("number")).collect())
        .collect()
}

/// Default-model kernel, built once per test binary.
pub fn default_kernel() -> &'static marchenko::kernel::KernelRep {
    static K: std::sync::OnceLock<marchenko::kernel::KernelRep> = std::sync::OnceLock::new();
    K.get_or_init(|| marchenko::kernel::KernelRep::build(&marchenko::MorseModel::default(), &Default::default()).expect("default kernel builds"))
}
