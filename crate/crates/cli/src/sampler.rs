//! Random k-shallow lines, as a sanity check on the exact evaluator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use shallow_lab::geom::{frac, side_of_line, Line, Point};
use shallow_lab::partition::KPartition;
use shallow_lab::Side;

/// Best crossing count among `samples` random lines with at most `k` points
/// strictly below and none on the line. Each line passes near two random
/// sites (points or triangle vertices).
pub fn best_sampled(points: &[Point], partition: &KPartition, k: usize, samples: u64, seed: u64) -> usize {
    let sites: Vec<&Point> = points
        .iter()
        .chain(partition.triangles.iter().flat_map(|t| t.vertices().iter()))
        .collect();
    const CHUNK: u64 = 4096;
    (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ chunk.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut best = 0;
            for _ in 0..count {
                let (i, j) = (rng.gen_range(0..sites.len()), rng.gen_range(0..sites.len()));
                let a = jitter(&mut rng, sites[i]);
                let b = jitter(&mut rng, sites[j]);
                let Some(line) = Line::through(&a, &b) else { continue };
                let mut below = 0;
                let mut on = false;
                for p in points {
                    match side_of_line(&line, p) {
                        Side::Below => below += 1,
                        Side::On => on = true,
                        Side::Above => {}
                    }
                }
                if on || below > k {
                    continue;
                }
                let crossed = partition.triangles.iter().filter(|t| t.intersects(&line)).count();
                best = best.max(crossed);
            }
            best
        })
        .max()
        .unwrap_or(0)
}

fn jitter(rng: &mut ChaCha8Rng, p: &Point) -> Point {
    let scale = 1i64 << rng.gen_range(4..40);
    let dx = frac(rng.gen_range(-1000..=1000), scale);
    let dy = frac(rng.gen_range(-1000..=1000), scale);
    Point::new(&p.x + dx, &p.y + dy)
}
