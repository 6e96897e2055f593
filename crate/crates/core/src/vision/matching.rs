use rayon::prelude::*;

use super::features::Descriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub index_a: usize,
    pub index_b: usize,
    /// Hamming distance to the nearest descriptor in `b`.
    pub distance: u32,
    /// Hamming distance to the second nearest.
    pub second_distance: u32,
}

/// Two nearest neighbours of `q` in `b` as `(index, d1, d2)`. Ties keep the
/// lower index as nearest.
fn two_nearest(q: &Descriptor, b: &[Descriptor]) -> (usize, u32, u32) {
    let (mut best, mut d1, mut d2) = (0, u32::MAX, u32::MAX);
    for (j, cand) in b.iter().enumerate() {
        let d = q.hamming(cand);
        if d < d1 {
            d2 = d1;
            d1 = d;
            best = j;
        } else if d < d2 {
            d2 = d;
        }
    }
    (best, d1, d2)
}

/// Brute-force 2-NN matching with the ratio test: a query is kept iff
/// `distance < ratio * second_distance`. With fewer than two descriptors in
/// `b` nothing matches.
pub fn match_ratio(a: &[Descriptor], b: &[Descriptor], ratio: f64) -> Vec<Match> {
    if b.len() < 2 {
        return Vec::new();
    }
    a.par_iter()
        .enumerate()
        .filter_map(|(i, q)| {
            let (j, d1, d2) = two_nearest(q, b);
            ((d1 as f64) < ratio * d2 as f64).then_some(Match {
                index_a: i,
                index_b: j,
                distance: d1,
                second_distance: d2,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_desc(r: &mut impl Rng) -> Descriptor {
        Descriptor([r.random(), r.random(), r.random(), r.random()])
    }

    /// Flips the first `n` bits.
    fn flip(d: Descriptor, n: usize) -> Descriptor {
        let mut bits = d.0;
        for i in 0..n {
            bits[i / 64] ^= 1 << (i % 64);
        }
        Descriptor(bits)
    }

    #[test]
    fn identical_sets_match_their_twins() {
        let mut r = rng::stream(1, &[]);
        let a: Vec<_> = (0..40).map(|_| random_desc(&mut r)).collect();
        let m = match_ratio(&a, &a, 0.75);
        assert_eq!(m.len(), 40);
        for (i, mm) in m.iter().enumerate() {
            assert_eq!((mm.index_a, mm.index_b, mm.distance), (i, i, 0));
        }
    }

    #[test]
    fn duplicate_candidates_are_ambiguous() {
        let mut r = rng::stream(2, &[]);
        let d = random_desc(&mut r);
        let b = vec![d, random_desc(&mut r), d];
        let m = match_ratio(&[d], &b, 0.75);
        assert!(m.is_empty());
    }

    #[test]
    fn planted_pair_survives_noise() {
        let mut r = rng::stream(3, &[]);
        let q = random_desc(&mut r);
        // noise descriptors differ from the query in 128 random bits
        let mut b: Vec<Descriptor> = (0..30)
            .map(|_| {
                let mut bits = q.0;
                for i in rand::seq::index::sample(&mut r, 256, 128) {
                    bits[i / 64] ^= 1 << (i % 64);
                }
                Descriptor(bits)
            })
            .collect();
        let planted = flip(q, 20);
        b.insert(17, planted);
        for d in &b {
            let dist = q.hamming(d);
            assert!(dist == 20 || dist == 128, "{dist}");
        }
        let m = match_ratio(&[q], &b, 0.75);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].index_b, m[0].distance, m[0].second_distance), (17, 20, 128));
    }

    #[test]
    fn fewer_than_two_candidates() {
        let mut r = rng::stream(4, &[]);
        let d = random_desc(&mut r);
        assert!(match_ratio(&[d], &[d], 0.75).is_empty());
        assert!(match_ratio(&[d], &[], 0.75).is_empty());
    }
}
