pub mod augment;
pub mod eval;
pub mod filter;
pub mod fuse;
pub mod pipeline;
pub mod robustbench;
pub mod split;
