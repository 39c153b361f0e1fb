//! Bundled IR programs used by tests, benches and `--init`.

pub const LEAK: &str = include_str!("../corpus/leak.ir");
pub const CLEAN: &str = include_str!("../corpus/clean.ir");
pub const LOOP: &str = include_str!("../corpus/loop.ir");
pub const BRANCH: &str = include_str!("../corpus/branch.ir");
pub const SCRUB: &str = include_str!("../corpus/scrub.ir");
pub const PASSTHROUGH: &str = include_str!("../corpus/passthrough.ir");
pub const TWO_METHOD: &str = include_str!("../corpus/two-method.ir");
pub const OVERWRITE: &str = include_str!("../corpus/overwrite.ir");
pub const MIX: &str = include_str!("../corpus/mix.ir");

/// Default taint configuration in the `<role> <name>` file format.
pub const TAINT_CONFIG: &str = include_str!("../corpus/taint.cfg");

/// Every corpus program as `(file name, source)`.
pub const PROGRAMS: [(&str, &str); 9] = [
    ("leak.ir", LEAK),
    ("clean.ir", CLEAN),
    ("loop.ir", LOOP),
    ("branch.ir", BRANCH),
    ("scrub.ir", SCRUB),
    ("passthrough.ir", PASSTHROUGH),
    ("two-method.ir", TWO_METHOD),
    ("overwrite.ir", OVERWRITE),
    ("mix.ir", MIX),
];

pub fn get(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".ir").unwrap_or(name);
    PROGRAMS
        .iter()
        .find(|(file, _)| file.strip_suffix(".ir") == Some(name))
        .map(|(_, src)| *src)
}
