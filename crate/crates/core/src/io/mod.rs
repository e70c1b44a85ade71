//! Shared readers for the text and binary formats used by the pipeline.

pub mod ply;
