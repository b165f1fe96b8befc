//! Entity-weighted hybrid document re-ranking.
//!
//! The pipeline retrieves candidates with BM25+RM3, ranks the entities
//! linked in those candidates per query, builds a query-specific document
//! embedding from the entity ranking and the passage text, and scores each
//! candidate through query/document interaction vectors.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod embeddings;
pub mod entity_ranking;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod retrieval;
pub mod synthetic;
pub mod training;
pub mod trec;

pub use error::{Error, Result};
