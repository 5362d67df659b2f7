//! Configurations shipped with the binary.

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;

pub const PRESETS: &[(&str, &str)] = &[
    ("constant-e05", include_str!("../presets/constant-e05.cfg")),
    ("constant-e09", include_str!("../presets/constant-e09.cfg")),
    ("monotone", include_str!("../presets/monotone.cfg")),
    ("viscoelastic-a012", include_str!("../presets/viscoelastic-a012.cfg")),
    ("viscoelastic-selfsim", include_str!("../presets/viscoelastic-selfsim.cfg")),
];

pub fn preset_text(name: &str) -> Result<&'static str, CliError> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Usage(format!("unknown preset `{name}` (known: {})", known.join(", ")))
    })
}

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    parse_config(preset_text(name)?)
}
