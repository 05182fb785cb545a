//! Arrival trajectory processing, CDO adherence labelling, tree ensembles
//! with exact TreeSHAP attributions and a fuzzy rule classifier.

pub mod cli;
pub mod features;
pub mod fexai;
pub mod forest;
pub mod geo;
pub mod ingest;
pub mod matrix;
pub mod shapley;
pub mod synth;
