pub mod cli;
pub mod emit;
pub mod schema;
