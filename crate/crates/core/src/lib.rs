pub mod polynomial;
pub mod model;
pub mod bounds;
pub mod bundled;
pub mod checker;
pub mod synth;
pub mod montecarlo;
