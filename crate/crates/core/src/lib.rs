pub mod rational;
pub mod spaces;
pub mod lp;
pub mod measures;
pub mod functors;
pub mod logic;
pub mod models;
pub mod semantics;
pub mod deduction;
