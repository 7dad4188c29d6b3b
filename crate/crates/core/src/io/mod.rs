//! Files: CSV datasets, model and joint-table files, similarity-network
//! configurations, and seeded sampling.

mod config;
mod data;
mod files;
mod sample;

pub use config::{EdgeConfig, ResolvedSimnet, SimnetConfig};
pub use data::{load_csv, load_csv_with_schema, read_csv, read_csv_with_schema, write_csv, Recoded};
pub use files::{
    load_joint, load_model, model_from_text, model_to_text, save_joint, save_model, write_atomic, JointFile, ModelFile,
    Provenance, FORMAT_VERSION,
};
pub use sample::{sample, GENERATOR};
