//! Solution drivers: direct extensive-form MIP, Benders decomposition, and
//! the sample average approximation loop that calls either.

mod benders;
mod extensive;
mod saa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use benders::{
    solve_benders, BendersOptions, BendersOutcome, BendersState, BendersStatus, Cut, CutKind, CutMode, TraceEntry,
};
pub use extensive::{solve_deterministic, solve_extensive, ExtensiveOptions, ExtensiveSolution};
pub use saa::{solve_saa, ReplicationRecord, SaaOptions, SaaResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    #[default]
    Benders,
    Extensive,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Benders => "benders",
            SolveMethod::Extensive => "extensive",
        })
    }
}

impl FromStr for SolveMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "benders" => Ok(SolveMethod::Benders),
            "extensive" => Ok(SolveMethod::Extensive),
            other => Err(Error::InvalidArgument(format!("unknown solve method `{other}`"))),
        }
    }
}
