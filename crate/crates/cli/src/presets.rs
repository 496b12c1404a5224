//! Experiment configurations shipped with the binary.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.json")),
    ("fig4", include_str!("../presets/fig4.json")),
    ("fig5", include_str!("../presets/fig5.json")),
    ("fig6", include_str!("../presets/fig6.json")),
    ("fig7a", include_str!("../presets/fig7a.json")),
    ("fig7a_10pct", include_str!("../presets/fig7a_10pct.json")),
    ("fig7b", include_str!("../presets/fig7b.json")),
    ("iid_control", include_str!("../presets/iid_control.json")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
