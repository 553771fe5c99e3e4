pub mod bench;
pub mod cbr;
pub mod cdf;
pub mod grid;
pub mod hatsga;
pub mod ingest;
pub mod native;
pub mod orchestrator;
pub mod powerflow;
pub mod store;

/// IEEE test systems shipped with the crate.
pub mod builtin {
    use crate::cdf::parse_cdf;
    use crate::grid::Network;

    pub const NAMES: [&str; 5] = ["ieee14", "ieee30", "ieee57", "ieee118", "ieee300"];

    pub fn cdf_text(name: &str) -> Option<&'static str> {
        Some(match name {
            "ieee14" => include_str!("../data/ieee14.cdf"),
            "ieee30" => include_str!("../data/ieee30.cdf"),
            "ieee57" => include_str!("../data/ieee57.cdf"),
            "ieee118" => include_str!("../data/ieee118.cdf"),
            "ieee300" => include_str!("../data/ieee300.cdf"),
            _ => return None,
        })
    }

    pub fn network(name: &str) -> Option<Network> {
        cdf_text(name).map(|t| parse_cdf(t).expect("bundled files parse"))
    }
}
