//! The named example programs, embedded at build time.

macro_rules! entry {
    ($name:literal, $ext:literal) => {
        (
            $name,
            include_str!(concat!("../../../corpus/", $name, ".", $ext)),
        )
    };
}

/// `(name, source)` for every cpGCL program in the corpus.
pub const PROGRAMS: &[(&str, &str)] = &[
    entry!("p_obs1", "cpgcl"),
    entry!("p_obs2", "cpgcl"),
    entry!("p_div", "cpgcl"),
    entry!("p_andiv", "cpgcl"),
    entry!("p_nondet", "cpgcl"),
    entry!("abort_coin", "cpgcl"),
    entry!("example1", "cpgcl"),
    entry!("example2", "cpgcl"),
    entry!("example3_pre", "cpgcl"),
    entry!("example3", "cpgcl"),
    entry!("two_coins_pre", "cpgcl"),
    entry!("two_coins", "cpgcl"),
    entry!("crowds", "cpgcl"),
];

/// `(name, source)` for explicit models.
pub const MODELS: &[(&str, &str)] = &[entry!("context_min", "rmdp")];

pub fn program(name: &str) -> Option<&'static str> {
    PROGRAMS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn model(name: &str) -> Option<&'static str> {
    MODELS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
