pub mod analysis;
pub mod dists;
pub mod error;
pub mod eval;
pub mod inference;
pub mod intrinsic;
pub mod lang;
pub mod models;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod value;
