use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::DiscreteModel;
use crate::tables::{Dataset, Schema, VarId};

/// The generator behind [`sample`], recorded in model provenance.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.3)";

/// `n` ancestral samples over the model's variables (in ascending id
/// order); `schema` is the schema the model was learned over.
pub fn sample(model: &dyn DiscreteModel, schema: &Schema, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let vars: Vec<VarId> = model.variables();
    let sub = schema.select(&vars)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut full = vec![0usize; schema.len()];
    let rows = (0..n)
        .map(|_| {
            model.sample_into(&mut rng, &mut full);
            vars.iter().map(|&v| full[v]).collect()
        })
        .collect();
    Dataset::new(sub, rows)
}
