//! Input builders shared by the benchmarks.

use grfkit::rng::Pcg32;
use grfkit::BinaryMask;

/// Random mask with roughly `density` foreground.
pub fn random_mask(seed: u64, width: usize, height: usize, density: f64) -> BinaryMask {
    let mut rng = Pcg32::from_seed(seed);
    BinaryMask::from_fn(width, height, |_, _| rng.next_f64() < density).expect("non-empty size")
}

/// Filled disc, the usual shape of a segmentation target.
pub fn disc_mask(width: usize, height: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
    BinaryMask::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        dx * dx + dy * dy <= r * r
    })
    .expect("non-empty size")
}
