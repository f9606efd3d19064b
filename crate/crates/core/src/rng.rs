use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used across the workspace. ChaCha output is platform independent,
/// so a seed pins every downstream artifact.
pub type LabRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for a sub-task (episode, cell, expert, ...).
pub fn derive(seed: u64, stream: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
