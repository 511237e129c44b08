pub mod bounds;
pub mod constraints;
pub mod driver;
pub mod graphs;
pub mod parse;
pub mod processors;
pub mod recsolve;
pub mod term;
pub mod smt;
pub mod synthesis;
pub mod system;
