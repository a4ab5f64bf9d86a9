pub mod ir;
pub mod convert;
pub mod analysis;
pub mod render;
