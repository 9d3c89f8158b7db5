pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod neuralnet;
pub mod text;
