pub mod model;
pub mod oracle;
pub mod planner;
pub mod trace_io;
