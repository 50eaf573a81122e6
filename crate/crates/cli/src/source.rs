use std::path::Path;

use bdlab_core::{ConstructionConfig, Rank, Result};

/// Bundled fixtures addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("desk-strict", include_str!("../../../configs/desk-strict.toml")),
    ("desk-relaxed", include_str!("../../../configs/desk-relaxed.toml")),
];

/// Resolves `source` as a bundled name first, then as a path; `horizon`
/// overrides the configured horizon.
pub fn load_config(source: &str, horizon: Option<Rank>) -> Result<ConstructionConfig> {
    let cfg = match BUNDLED.iter().find(|(name, _)| *name == source) {
        Some((_, text)) => ConstructionConfig::from_toml_str(text)?,
        None => ConstructionConfig::from_path(Path::new(source))?,
    };
    match horizon {
        Some(h) => cfg.with_horizon(h),
        None => Ok(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        let s = load_config("desk-strict", None).unwrap();
        assert!(s.is_strict());
        assert_eq!(s.horizon, 4);
        let r = load_config("desk-relaxed", Some(3)).unwrap();
        assert_eq!((r.k, r.horizon), (3, 3));
    }

    #[test]
    fn unknown_path_is_an_error() {
        assert!(load_config("/nonexistent/config.toml", None).is_err());
    }
}
