//! Nielsen moves on marked tuples, isometries of regular trees and density
//! certificates for finitely generated subgroups of `PSL_2` over local
//! fields.

pub mod bttree;
pub mod density;
pub mod error;
pub mod experiments;
pub mod group;
pub mod localfield;
pub mod nielsen;
pub mod prg;
pub mod psl2;
pub mod treeaut;

pub use error::{Error, Result};
