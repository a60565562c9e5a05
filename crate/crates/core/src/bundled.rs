//! Small reference instances shipped with the crate.

use crate::error::Result;
use crate::instance::{Caps, Hamiltonian};

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../data/instances/", $name, ".json")))),*]
    };
}

pub const INSTANCES: &[(&str, &str)] = bundle!(
    "hypercube_4",
    "ghz_chain_6",
    "planted_defect_6_3",
    "random_covering_6_3",
    "random_8_2",
    "frustrated_7_2",
    "compiled_swap",
    "mixed_locality_5",
);

pub fn instances() -> Result<Vec<(&'static str, Hamiltonian)>> {
    let caps = Caps::default();
    INSTANCES
        .iter()
        .map(|&(name, text)| Hamiltonian::from_json(text, &caps).map(|h| (name, h)))
        .collect()
}

pub fn instance(name: &str) -> Option<Hamiltonian> {
    INSTANCES
        .iter()
        .find(|(n, _)| *n == name)
        .and_then(|(_, text)| Hamiltonian::from_json(text, &Caps::default()).ok())
}
