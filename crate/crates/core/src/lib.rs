//! Markov blanket and parent discovery for a target variable from several
//! discrete datasets, each produced under an unknown intervention.

pub mod dataset;
pub mod family;
pub mod graph;
pub mod network;
pub mod sampling;
pub mod ci;
pub mod discovery;
pub mod fixtures;
pub mod theorem;
pub mod metrics;
pub mod io;
pub mod realworld;
pub mod benchmark;
