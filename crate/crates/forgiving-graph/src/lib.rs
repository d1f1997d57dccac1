//! Self-healing overlay network simulation core.
//!
//! An adversary repeatedly deletes or inserts single nodes in a connected
//! graph. After every deletion the surviving processors run a distributed
//! repair that replaces the deleted node with a reconstruction tree (a
//! *half-full tree* over its surviving neighbors), keeping the graph
//! connected while bounding degree growth, stretch and repair cost.
//!
//! The crate is `no_std` + `alloc`; everything here is deterministic value
//! computation. File formats, the CLI and report generation live in the
//! companion `forgiving-graph-cli` crate.
//!
//! Modules:
//! - [`haft`]: half-full trees (construction, strip, merge) — the
//!   non-distributed oracle for reconstruction-tree shapes.
//! - [`protocol`]: per-processor edge records, reconstruction trees and the
//!   repair algorithm driven over simulated messages.
//! - [`netsim`]: round-based message transport with cost accounting and the
//!   per-recovery message/round bound checks.
//! - [`adversary`]: seeded generation of attack traces.
//! - [`metrics`]: degree/stretch measurement against the insert-only graph.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adversary;
pub mod haft;
pub mod metrics;
pub mod netsim;
pub mod protocol;
