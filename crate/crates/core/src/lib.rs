//! Dual-scale aerial navigation: a deterministic simulator plus an agent
//! built on a schematic cognitive map and a hierarchical scene graph.

pub mod agent;
pub mod eval;
pub mod exec;
pub mod geometry;
pub mod hsg;
pub mod perception;
pub mod query;
pub mod scm;
pub mod vocab;
pub mod world;
