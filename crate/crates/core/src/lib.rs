//! Upgrade analysis for proxy-based upgradable contracts.
//!
//! The crate reconstructs a proxy's implementation history from archival
//! state and analyzes each upgrade for interface breakage, broken historical
//! calls, storage-layout collisions, initialization exposure and syntax-level
//! code changes.

pub mod abi;
pub mod chain;
pub mod compat;
pub mod history;
pub mod init_risk;
pub mod intent;
pub mod primitives;
pub mod report;
pub mod storage;
pub mod usage;

pub use primitives::{Address, BlockNumber, Selector, TxHash};
