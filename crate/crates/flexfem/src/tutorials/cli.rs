pub const APP_NAMES: [&str; 9] = [
    "tutorial01", "tutorial02", "tutorial03", "tutorial04",
    "tutorial05", "tutorial06", "tutorial07", "transmission", "mesh-info",
];

pub fn cli_main(_argv: &[String]) -> i32 { todo!() }
