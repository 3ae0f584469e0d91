pub mod bounds;
pub mod cli;
pub mod coupling;
pub mod decomposition;
pub mod distributions;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod regenerative;
pub mod sampling;
pub mod stats;
