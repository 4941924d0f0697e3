pub mod accounting;
pub mod bounds;
pub mod gf2;
pub mod optimizer;
pub mod protocol;
pub mod prob;
