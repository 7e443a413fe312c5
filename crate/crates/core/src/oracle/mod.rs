//! Independent reference computations used to cross-check the closed forms.

pub mod fock;
pub mod transfer;

pub use fock::{build_operator, ordered_vev, vev_product, FockTruncation};
pub use transfer::{transfer_green, TransferGreen};
