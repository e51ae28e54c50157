//! File formats: XYZ / extended-XYZ structures and trajectories, plus the
//! JSON report bundle and CSV tables written by the command-line tool.

pub mod report;
pub mod xyz;

pub use xyz::{parse_traj, parse_xyz, write_traj, write_xyz};
