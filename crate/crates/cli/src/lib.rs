//! Configuration, commands, run manifests and acceptance checks behind the
//! `pluri` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

pub mod commands;
pub mod config;
pub mod criteria;
pub mod output;

pub use config::{Loaded, RunConfig};

/// Why a command failed; decides the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or input (exit 2).
    Config(anyhow::Error),
    /// Non-convergence, dropped mass and other numerical aborts (exit 3).
    Numerical(anyhow::Error),
    /// Acceptance criteria that failed, by number (exit 4).
    Acceptance(Vec<u32>),
    /// Writing outputs failed (exit 1).
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Acceptance(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    pub fn config(e: pluri::Error) -> Self {
        Failure::Config(e.into())
    }
}

impl From<pluri::Error> for Failure {
    fn from(e: pluri::Error) -> Self {
        use pluri::Error as E;
        match e {
            E::NonConvergence { .. } | E::DroppedMass { .. } | E::TermCap { .. } | E::SymbolicBudget { .. } => {
                Failure::Numerical(e.into())
            }
            E::Io(_) => Failure::Io(e.into()),
            _ => Failure::Config(e.into()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e:#}"),
            Failure::Acceptance(ids) => write!(f, "acceptance criteria failed: {ids:?}"),
            Failure::Io(e) => write!(f, "i/o error: {e:#}"),
        }
    }
}

impl std::error::Error for Failure {}
