//! Built-in scenario presets. Each one also ships as a config file under
//! `presets/` at the repository root; the embedded copies let the binary
//! resolve preset names from any working directory.

pub const PRESETS: &[(&str, &str)] = &[
    ("ht-vs-hajek", include_str!("../../../presets/ht-vs-hajek.conf")),
    ("miss-exposure", include_str!("../../../presets/miss-exposure.conf")),
    ("unit-vs-cluster", include_str!("../../../presets/unit-vs-cluster.conf")),
    ("miss-ties", include_str!("../../../presets/miss-ties.conf")),
    ("hier-group", include_str!("../../../presets/hier-group.conf")),
    ("hier-tract", include_str!("../../../presets/hier-tract.conf")),
    ("hier-toy", include_str!("../../../presets/hier-toy.conf")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
