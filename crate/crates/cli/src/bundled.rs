//! Problem specs shipped with the binary.

use std::path::Path;

pub const SPECS: &[(&str, &str)] = &[
    ("unbounded", include_str!("../specs/unbounded.json")),
    ("convexity", include_str!("../specs/convexity.json")),
    ("clamp1d", include_str!("../specs/clamp1d.json")),
    ("a0coercive", include_str!("../specs/a0coercive.json")),
    ("a1coercive", include_str!("../specs/a1coercive.json")),
    ("ball", include_str!("../specs/ball.json")),
    ("drifting_ball", include_str!("../specs/drifting_ball.json")),
    ("strip", include_str!("../specs/strip.json")),
];

/// Resolves `examples/unbounded.json`, `unbounded.json` or `unbounded` to a
/// bundled spec.
pub fn lookup(arg: &str) -> Option<(&'static str, &'static str)> {
    let stem = Path::new(arg).file_stem()?.to_str()?;
    SPECS.iter().find(|(n, _)| *n == stem).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sweepvel::spec_file::SpecFile;

    #[test]
    fn every_bundled_spec_is_valid() {
        for (name, text) in SPECS {
            let spec = SpecFile::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            spec.to_problem().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn lookup_by_stem() {
        assert_eq!(lookup("examples/unbounded.json").unwrap().0, "unbounded");
        assert_eq!(lookup("clamp1d").unwrap().0, "clamp1d");
        assert!(lookup("nope.json").is_none());
    }
}
