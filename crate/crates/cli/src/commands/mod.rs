pub mod eval;
pub mod gradcheck;
pub mod plot;
pub mod predict;
pub mod synth;
pub mod train;
