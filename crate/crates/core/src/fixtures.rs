//! Bundled example systems.
//!
//! * `example2`: a 2×2 hydrodynamic system in (t, x, y) with a double wave
//! * `example3`: the scalar equation u_t + x u u_x + y u² u_y = 0
//! * `brownian`: u_t = (1 + β²x²) u_xx as a first-order system
//! * `trautman`: the Klein-Gordon type wave equation as a first-order system

use thiserror::Error;

use crate::expr::DomainBox;
use crate::system::{FileError, QuasilinearSystem, SystemError, SystemFile};

pub const NAMES: [&str; 4] = ["example2", "example3", "brownian", "trautman"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}` (known: example2, example3, brownian, trautman)")]
    Unknown(String),
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Raw TOML text of a fixture.
pub fn source(name: &str) -> Result<&'static str, FixtureError> {
    Ok(match name {
        "example2" => include_str!("../fixtures/example2.toml"),
        "example3" => include_str!("../fixtures/example3.toml"),
        "brownian" => include_str!("../fixtures/brownian.toml"),
        "trautman" => include_str!("../fixtures/trautman.toml"),
        other => return Err(FixtureError::Unknown(other.to_string())),
    })
}

pub fn file(name: &str) -> Result<SystemFile, FixtureError> {
    Ok(SystemFile::from_toml(source(name)?)?)
}

pub fn system(name: &str) -> Result<QuasilinearSystem, FixtureError> {
    Ok(file(name)?.to_system()?)
}

pub fn domain(name: &str) -> Result<DomainBox, FixtureError> {
    Ok(file(name)?.domain_box())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_load() {
        for n in NAMES {
            let s = system(n).unwrap();
            assert!(s.p() >= 2, "{n}");
            assert!(!domain(n).unwrap().is_empty());
        }
        assert!(matches!(system("nope"), Err(FixtureError::Unknown(_))));
    }
}
