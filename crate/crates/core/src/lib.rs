//! Architecture maps from dependency graphs.
//!
//! A member-level dependency graph is clustered into features, each feature
//! is laid out as a city block whose buildings (classes) are ordered by
//! dependency level, and the blocks are arranged along a street hierarchy
//! that mirrors how features relate. Keywords, package patterns, dependency
//! links and arbitrary per-class metrics are overlaid on the resulting map.

pub mod annotate;
pub mod block;
pub mod cluster;
pub mod feature_tree;
pub mod graph;
pub mod pipeline;
pub mod render;
pub mod street;
pub mod synth;
