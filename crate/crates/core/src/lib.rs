pub mod config;
pub mod constants;
mod dd;
pub mod dynamics;
pub mod gaussian;
pub mod meanfield;
pub mod params;
pub mod steadystate;
pub mod sweep;
#[cfg(test)]
mod testutil;
pub mod validate;
