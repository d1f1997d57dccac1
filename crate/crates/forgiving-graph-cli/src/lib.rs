//! Host-side companion to the `forgiving-graph` core: trace file
//! format, report rendering, and the replay driver used by the `fgraph`
//! binary and the test suites.

pub mod report;
pub mod runner;
pub mod trace;
