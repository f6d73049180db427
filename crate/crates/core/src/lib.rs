//! Exact combinatorics of torus-equivariant sheaves on smooth toric Deligne-Mumford stacks.

pub mod abgrp;
pub mod chartglue;
pub mod cli;
pub mod error;
pub mod genfun;
pub mod intlinalg;
pub mod modstab;
pub mod sheafrep;
pub mod stackyfan;

pub use error::{Error, Result};
