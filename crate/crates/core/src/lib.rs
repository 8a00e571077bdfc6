//! Compression of tree-structured adaptive-mesh-refinement data.
//!
//! Each refinement level is turned into dense arrays by a pre-processing
//! strategy chosen from its density, the arrays are compressed by an
//! error-bounded codec, and everything is stored in one archive together
//! with the metadata needed to put the levels back.

pub mod akdtree;
pub mod amr;
pub mod archive;
pub mod bench;
pub mod codec;
pub mod datagen;
pub mod error;
pub mod grid;
pub mod gsp;
pub mod io;
pub mod metrics;
pub mod opst;
pub mod pipeline;
pub mod strategy;
pub mod subblock;

pub use amr::{AmrDataset, LevelGrid};
pub use archive::CompressedArchive;
pub use codec::{BoundMode, ErrorBound};
pub use error::{Error, Result};
pub use grid::{BlockMask, Field3, Tensor, ValueType};
pub use pipeline::{compress_dataset, decompress_dataset, CompressionConfig, StrategyChoice};
pub use strategy::StrategyTag;
