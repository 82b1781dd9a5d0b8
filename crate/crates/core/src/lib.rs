pub mod mdp;
pub mod transport;
pub mod metric;
pub mod approximation;
pub mod bounds;
pub mod practical;
pub mod experiments;
