//! Finite multi-sorted structures with total function tables, and the
//! closure/embedding machinery built on them.

pub mod embedding;
pub mod signature;
pub mod structure;

pub use embedding::{
    automorphisms, embeds, find_embeddings, find_isomorphism, gdcl, is_embedding, is_isomorphism,
    isomorphic, qftp_equal, Embedding, EmbeddingSearch,
};
pub use signature::{FuncDecl, FuncId, RelDecl, RelId, SigEmbedding, Signature, SortId};
pub use structure::{ElemId, FinStructure, Violation};
