pub mod coupling;
pub mod forms;
pub mod linalg;
pub mod permutation;
pub mod scattering;
pub mod filters;
pub mod sweep;
pub mod document;
pub mod random;
pub mod cli;
