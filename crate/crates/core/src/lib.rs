//! Noun-pair similarity dataset construction from a wordnet-style knowledge
//! base and a text corpus.

pub mod align;
pub mod config;
pub mod corpus;
pub mod dataset;
pub mod embedding;
pub mod eval;
pub mod features;
pub mod fixture;
pub mod kb;
pub mod manifest;
pub mod pipeline;
pub mod walker;
