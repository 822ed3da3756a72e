//! Replicate fan-out. Results come back ordered by replicate index, so any
//! reduction over them is independent of the rayon pool size.

use rayon::prelude::*;

use crate::stream::{derive_stream, StreamRng};

pub fn replicates<R, F>(seed: u64, tag: &str, reps: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut StreamRng) -> R + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_stream(seed, i as u64, tag);
            f(i, &mut rng)
        })
        .collect()
}
