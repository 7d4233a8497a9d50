pub mod evaluate;
pub mod explain;
pub mod serve;
pub mod synth;
pub mod train;
