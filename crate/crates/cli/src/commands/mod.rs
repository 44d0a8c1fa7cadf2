mod cluster;
mod mbqc;
mod oracle;
mod sweep;

pub use cluster::cluster;
pub use mbqc::{default_mbqc_section, mbqc};
pub use oracle::oracle_verify;
pub use sweep::gamma_sweep;
