use std::io::Write;

use super::surf::{Descriptor, Keypoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub prev: usize,
    pub next: usize,
    pub distance: f64,
}

/// Best and second-best distance from `d` into `set`.
fn nearest(d: &Descriptor, set: &[Descriptor]) -> (usize, f64, f64) {
    let (mut bi, mut best, mut second) = (0, f64::INFINITY, f64::INFINITY);
    for (i, o) in set.iter().enumerate() {
        let dist = d.distance(o);
        if dist < best {
            second = best;
            best = dist;
            bi = i;
        } else if dist < second {
            second = dist;
        }
    }
    (bi, best, second)
}

fn passes_ratio(best: f64, second: f64, ratio: f64) -> bool {
    if second.is_infinite() {
        return true;
    }
    second > 0.0 && best / second < ratio
}

/// Mutual nearest neighbours by Euclidean descriptor distance that pass the ratio test in
/// both directions. Pairs are one-to-one and sorted by `prev` index.
pub fn match_keypoints(prev: &[Descriptor], next: &[Descriptor], ratio: f64) -> Vec<Match> {
    if prev.is_empty() || next.is_empty() {
        return Vec::new();
    }
    let back: Vec<(usize, f64, f64)> = next.iter().map(|d| nearest(d, prev)).collect();
    let mut out = Vec::new();
    for (i, d) in prev.iter().enumerate() {
        let (j, best, second) = nearest(d, next);
        let (bi, bbest, bsecond) = back[j];
        if bi == i && passes_ratio(best, second, ratio) && passes_ratio(bbest, bsecond, ratio) {
            out.push(Match { prev: i, next: j, distance: best });
        }
    }
    out
}

/// Writes `frame,x_p,y_p,x_l,y_l,distance` rows, one per match.
pub fn write_matches_csv<W: Write>(
    out: &mut W,
    frame: usize,
    prev: &[Keypoint],
    next: &[Keypoint],
    pairs: &[Match],
) -> std::io::Result<()> {
    for m in pairs {
        let (p, l) = (&prev[m.prev], &next[m.next]);
        writeln!(out, "{frame},{:.3},{:.3},{:.3},{:.3},{:.6}", p.x, p.y, l.x, l.y, m.distance)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::surf::DESCRIPTOR_LEN;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(n: usize, seed: u64) -> Vec<Descriptor> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut d = [0.0; DESCRIPTOR_LEN];
                d.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
                let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                d.iter_mut().for_each(|v| *v /= n);
                Descriptor(d)
            })
            .collect()
    }

    #[test]
    fn identical_sets_pair_up() {
        let a = random_set(12, 1);
        let m = match_keypoints(&a, &a, 0.7);
        assert_eq!(m.len(), 12);
        assert!(m.iter().all(|p| p.prev == p.next && p.distance == 0.0));
    }

    #[test]
    fn duplicate_is_rejected() {
        let a = random_set(8, 2);
        let mut b = a.clone();
        b.push(a[3].clone());
        let m = match_keypoints(&b, &a, 0.7);
        assert!(m.iter().all(|p| p.next != 3));
        assert_eq!(m.len(), 7);
    }

    #[test]
    fn empty_side_gives_no_pairs() {
        assert!(match_keypoints(&[], &random_set(3, 3), 0.7).is_empty());
        assert!(match_keypoints(&random_set(3, 3), &[], 0.7).is_empty());
    }

    #[test]
    fn csv_rows() {
        let kp = |x, y| Keypoint { x, y, scale: 2.0, response: 1.0, orientation: 0.0, laplacian_positive: true, border_clipped: false };
        let mut buf = Vec::new();
        write_matches_csv(&mut buf, 4, &[kp(1.0, 2.0)], &[kp(3.0, 4.5)], &[Match { prev: 0, next: 0, distance: 0.25 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "4,1.000,2.000,3.000,4.500,0.250000\n");
    }

    proptest! {
        #[test]
        fn matching_is_symmetric_and_one_to_one(na in 1usize..15, nb in 1usize..15, seed in 0u64..500, noise in 0.0f64..0.3) {
            let a = random_set(na, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
            // perturbed copies of a prefix of `a`, plus fresh descriptors
            let mut b: Vec<Descriptor> = a.iter().take(nb).map(|d| {
                let mut v = d.0;
                v.iter_mut().for_each(|x| *x += rng.random_range(-noise..=noise) * 0.1);
                Descriptor(v)
            }).collect();
            b.extend(random_set(nb.saturating_sub(na), seed + 1000));
            let ab = match_keypoints(&a, &b, 0.7);
            let mut ba: Vec<(usize, usize)> = match_keypoints(&b, &a, 0.7).iter().map(|m| (m.next, m.prev)).collect();
            ba.sort();
            let ab_pairs: Vec<(usize, usize)> = ab.iter().map(|m| (m.prev, m.next)).collect();
            prop_assert_eq!(&ab_pairs, &ba);
            prop_assert!(ab.len() <= na.min(b.len()));
            let mut seen = std::collections::HashSet::new();
            prop_assert!(ab.iter().all(|m| seen.insert(m.next)));
        }
    }
}
