//! Spearman, Kendall tau-b and Pearson coefficients.
//!
//! Spearman and Kendall are computed from integer counts (doubled mid-ranks,
//! pair counts) so the only rounding happens in the final division.

use std::cmp::Ordering;

use super::EvalError;

fn check(x: &[f64], y: &[f64]) -> Result<(), EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooShort(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    check(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Twice the 1-based average rank of each value, as integers.
pub fn doubled_midranks(x: &[f64]) -> Vec<i64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end, averaged and doubled.
        let r = (start + 1 + end) as i64;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of integer vectors, exact up to the final division.
pub(crate) fn integer_pearson(x: &[i64], y: &[i64]) -> Result<f64, EvalError> {
    let n = x.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as i128, b as i128);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let num = n * sxy - sx * sy;
    let dx = n * sxx - sx * sx;
    let dy = n * syy - sy * sy;
    if dx == 0 || dy == 0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((num as f64 / ((dx * dy) as f64).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    check(x, y)?;
    integer_pearson(&doubled_midranks(x), &doubled_midranks(y))
}

/// Tie-corrected Kendall tau-b from its integer ingredients.
pub(crate) fn tau_b(concordant_minus_discordant: i128, n0: i128, ties_x: i128, ties_y: i128) -> Result<f64, EvalError> {
    let (dx, dy) = (n0 - ties_x, n0 - ties_y);
    if dx == 0 || dy == 0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((concordant_minus_discordant as f64 / ((dx * dy) as f64).sqrt()).clamp(-1.0, 1.0))
}

fn tied_pairs<T>(sorted: &[T], same: impl Fn(&T, &T) -> bool) -> i128 {
    let mut total = 0i128;
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || !same(&sorted[i], &sorted[start]) {
            let t = (i - start) as i128;
            total += t * (t - 1) / 2;
            start = i;
        }
    }
    total
}

/// Counts strict inversions while merge-sorting `v`.
fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> i128 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            inv += (mid - i) as i128;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    inv
}

/// Kendall tau-b in `O(n log n)`.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    check(x, y)?;
    let n = x.len() as i128;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let ties_x = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let ties_xy = tied_pairs(&pairs, |a, b| a == b);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let discordant = count_inversions(&mut ys, &mut buf);
    let ties_y = tied_pairs(&ys, |a, b| a == b);
    let n0 = n * (n - 1) / 2;
    tau_b(n0 - ties_x - ties_y + ties_xy - 2 * discordant, n0, ties_x, ties_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(spearman(&x, &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(kendall(&x, &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(kendall(&x, &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((kendall(&x, &[1.0, 3.0, 2.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((pearson(&x, &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            spearman(&[1.0, 1.0], &[1.0, 2.0]),
            Err(EvalError::ZeroVariance)
        ));
        assert!(matches!(
            kendall(&[1.0, 2.0], &[5.0, 5.0]),
            Err(EvalError::ZeroVariance)
        ));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(EvalError::TooShort(1))));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(EvalError::LengthMismatch(2, 1))
        ));
        assert!(matches!(
            pearson(&[1.0, f64::NAN], &[1.0, 2.0]),
            Err(EvalError::NonFinite)
        ));
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(doubled_midranks(&[10.0, 20.0, 10.0, 30.0]), vec![3, 6, 3, 8]);
    }

    proptest! {
        #[test]
        fn coefficients_are_bounded(v in prop::collection::vec((0i32..5, 0i32..5), 3..40)) {
            let x: Vec<f64> = v.iter().map(|p| f64::from(p.0)).collect();
            let y: Vec<f64> = v.iter().map(|p| f64::from(p.1)).collect();
            for f in [spearman, kendall, pearson] {
                if let Ok(r) = f(&x, &y) {
                    prop_assert!((-1.0..=1.0).contains(&r));
                }
            }
        }

        #[test]
        fn symmetric_in_arguments(v in prop::collection::vec((-20i32..20, -20i32..20), 2..60)) {
            let x: Vec<f64> = v.iter().map(|p| f64::from(p.0)).collect();
            let y: Vec<f64> = v.iter().map(|p| f64::from(p.1)).collect();
            if let (Ok(a), Ok(b)) = (kendall(&x, &y), kendall(&y, &x)) {
                prop_assert_eq!(a, b);
            }
            if let (Ok(a), Ok(b)) = (spearman(&x, &y), spearman(&y, &x)) {
                prop_assert_eq!(a, b);
            }
        }
    }
}
