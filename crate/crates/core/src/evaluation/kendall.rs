//! Kendall rank correlation in O(T log T).

use crate::error::{Error, Result};

fn pairs(n: usize) -> u64 {
    (n as u64) * (n as u64).saturating_sub(1) / 2
}

/// Number of pairs within runs of equal values of an already-sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0;
    let mut run = 1usize;
    for i in 1..sorted.len() {
        if sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            total += pairs(run);
            run = 1;
        }
    }
    total + pairs(run)
}

/// Sort `v` ascending, returning the number of strict inversions removed.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// `C − D`, the concordant minus discordant pair count. Pairs tied in either
/// argument count as neither.
pub fn concordance(f: &[f64], y: &[f64]) -> Result<i64> {
    if f.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: y.len(),
        });
    }
    if f.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Domain("kendall tau of NaN values".into()));
    }
    let n = f.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(y[a].total_cmp(&y[b])));
    let fs: Vec<f64> = idx.iter().map(|&i| f[i]).collect();
    let joint: Vec<(f64, f64)> = idx.iter().map(|&i| (f[i], y[i])).collect();
    let f_ties = tied_pairs(&fs);
    let joint_ties = tied_pairs(&joint);
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count(&mut ys, &mut buf);
    let y_ties = tied_pairs(&ys);
    let total = pairs(n);
    Ok(total as i64 - f_ties as i64 - y_ties as i64 + joint_ties as i64 - 2 * discordant as i64)
}

/// Kendall's tau-a: `(C − D) / C(T, 2)`.
pub fn kendall_tau(f: &[f64], y: &[f64]) -> Result<f64> {
    if f.len() < 2 {
        return Err(Error::InsufficientData("kendall tau needs at least two values".into()));
    }
    Ok(concordance(f, y)? as f64 / pairs(f.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(f: &[f64], y: &[f64]) -> i64 {
        let mut s = 0i64;
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                let a = (f[i] - f[j]).signum() as i64 * (f[i] != f[j]) as i64;
                let b = (y[i] - y[j]).signum() as i64 * (y[i] != y[j]) as i64;
                s += a * b;
            }
        }
        s
    }

    #[test]
    fn identity_and_reversal() {
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 1.7).sin() * 10.0 + i as f64 * 0.01).collect();
        assert_eq!(kendall_tau(&y, &y).unwrap(), 1.0);
        let mut sorted = y.clone();
        sorted.sort_by(f64::total_cmp);
        let rev: Vec<f64> = sorted.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&rev, &sorted).unwrap(), -1.0);
    }

    #[test]
    fn random_pairs_match_pair_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            // small integer alphabet so ties are common
            let f: Vec<f64> = (0..200).map(|_| rng.random_range(0..20) as f64).collect();
            let y: Vec<f64> = (0..200).map(|_| rng.random_range(0..20) as f64).collect();
            assert_eq!(concordance(&f, &y).unwrap(), brute(&f, &y));
        }
    }

    #[test]
    fn errors() {
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_monotone_invariant(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..80)) {
            let f: Vec<f64> = v.iter().map(|p| p.0).collect();
            let y: Vec<f64> = v.iter().map(|p| p.1).collect();
            prop_assert_eq!(concordance(&f, &y).unwrap(), concordance(&y, &f).unwrap());
            prop_assert_eq!(concordance(&f, &y).unwrap(), brute(&f, &y));
            let g: Vec<f64> = f.iter().map(|x| x * x * x + 3.0 * x).collect();
            // strictly increasing transform keeps the ordering (ties included)
            prop_assert_eq!(concordance(&g, &y).unwrap(), concordance(&f, &y).unwrap());
        }
    }
}
