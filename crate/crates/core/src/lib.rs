//! Sequential BIT* motion planning for a differential-drive robot among
//! static and constant-twist dynamic obstacles, with a velocity-obstacle
//! baseline and a deterministic fixed-step simulator to compare them.

pub mod bitstar;
pub mod control;
pub mod dovs;
pub mod geometry;
pub mod replan;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod trajectory;
pub mod world;
