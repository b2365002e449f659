//! Hierarchical clustering from triplet and quadruplet comparisons.
//!
//! Comparisons are turned into additive similarities (AddS3, AddS4) and
//! clustered with average linkage; any dendrogram can be scored by its
//! comparison revenue, which coincides with the Dasgupta revenue of the
//! additive similarity.

pub mod comparisons;
pub mod dendrogram;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod linkage;
pub mod objective;
pub mod oracle;
pub mod planted;
pub mod similarity;

pub use comparisons::{Comparison, ComparisonSet, Quadruplet, QuadrupletSet, Triplet, TripletSet};
pub use dendrogram::{Dendrogram, LcaSizeMatrix};
pub use error::{Error, Result};
pub use evaluation::{aari, ari, cut_top, Partition};
pub use linkage::{adds3_average_linkage, adds4_average_linkage, average_linkage};
pub use objective::{dcost, drev, qrev, trev};
pub use planted::{planted_similarity, PlantedParams};
pub use similarity::{adds3, adds4, cosine, SimilarityMatrix};
