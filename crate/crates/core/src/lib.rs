//! Feature extraction, per-class statistics, topic models, tree ensembles
//! and Shapley attributions for studying misleading vaccination tweets.

pub mod affect;
pub mod cli;
pub mod corpus;
pub mod explain;
pub mod learn;
pub mod lexicon;
pub mod seed;
pub mod stats;
pub mod syntax;
pub mod topics;
