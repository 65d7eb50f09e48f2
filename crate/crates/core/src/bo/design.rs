//! Initial designs on the unit cube.

use crate::rng::RandomStream;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Halton point `i` (starting at 1) in `dim` dimensions.
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton design supports up to {} dimensions", PRIMES.len());
    PRIMES[..dim].iter().map(|&b| radical_inverse(i, b)).collect()
}

/// `n` Halton points with a random Cranley-Patterson shift.
pub fn initial_design(n: usize, dim: usize, stream: &mut RandomStream) -> Vec<Vec<f64>> {
    let shift: Vec<f64> = (0..dim).map(|_| stream.uniform()).collect();
    (1..=n as u64)
        .map(|i| {
            halton(i, dim)
                .iter()
                .zip(&shift)
                .map(|(h, s)| (h + s).fract())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_base_two_and_three() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(halton(3, 1), vec![0.75]);
    }

    #[test]
    fn shifted_design_fills_each_half() {
        let pts = initial_design(8, 3, &mut RandomStream::new(4, "design"));
        for d in 0..3 {
            let low = pts.iter().filter(|p| p[d] < 0.5).count();
            assert!((3..=5).contains(&low), "axis {d}: {low}");
            assert!(pts.iter().all(|p| (0.0..1.0).contains(&p[d])));
        }
    }
}
