#![no_std]
extern crate alloc;

pub mod field;
pub mod mpoly;
pub mod ratfunc;
pub mod scalar;
pub mod upoly;
pub mod linalg;
pub mod tower;
pub mod series;
pub mod bivar;
pub mod algebraicity;
pub mod blowup;
pub mod multivar;
pub mod valuation;
