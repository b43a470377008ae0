pub mod channel;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod multiport;
pub mod optimizer;
