use crate::codedesign::{node_perspective, DegreeDistribution};

use super::LdpcError;

/// Variable and check degree lists realizing `dd` at blocklength `n`.
///
/// Variable counts are `n·L_j` rounded by largest remainder so they sum to
/// `n`. The check count is the edge total over `d_c`, rounded; the
/// remainder is absorbed by raising or lowering single check degrees by one.
/// Variable degrees come out non-decreasing.
pub fn quantize_degrees(
    n: usize,
    dd: &DegreeDistribution,
) -> Result<(Vec<usize>, Vec<usize>), LdpcError> {
    if n < 100 {
        return Err(LdpcError::BlockTooShort(n));
    }
    let shares: Vec<(usize, f64)> = node_perspective(dd).into_iter().collect();
    let mut counts: Vec<usize> = shares
        .iter()
        .map(|&(_, l)| (n as f64 * l).floor() as usize)
        .collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    let frac = |i: usize| n as f64 * shares[i].1 - counts[i] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    let var: Vec<usize> = shares
        .iter()
        .zip(&counts)
        .flat_map(|(&(j, _), &c)| std::iter::repeat_n(j, c))
        .collect();
    let edges: usize = var.iter().sum();
    let dc = dd.dc();
    let m = (edges as f64 / dc as f64).round() as usize;
    if m == 0 {
        return Err(LdpcError::Unbalanced(format!(
            "{edges} edges cannot fill a degree-{dc} check"
        )));
    }
    let diff = edges as i64 - (m * dc) as i64;
    if diff.unsigned_abs() as usize > m || (diff < 0 && dc <= 2) {
        return Err(LdpcError::Unbalanced(format!(
            "{edges} edges over {m} checks of degree {dc}"
        )));
    }
    let mut check = vec![dc; m];
    for d in check.iter_mut().take(diff.unsigned_abs() as usize) {
        if diff > 0 {
            *d += 1;
        } else {
            *d -= 1;
        }
    }
    Ok((var, check))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_cycle_code() {
        let dd = DegreeDistribution::regular(2, 20).unwrap();
        let (v, c) = quantize_degrees(10000, &dd).unwrap();
        assert_eq!(v, vec![2; 10000]);
        assert_eq!(c, vec![20; 1000]);
    }

    #[test]
    fn odd_blocklength_balances() {
        let dd = DegreeDistribution::normalized(&[(2, 0.5), (3, 0.5)], 5).unwrap();
        let (v, c) = quantize_degrees(101, &dd).unwrap();
        assert_eq!(v.len(), 101);
        assert_eq!(v.iter().sum::<usize>(), c.iter().sum::<usize>());
        assert!(c.iter().all(|&d| d.abs_diff(5) <= 1));
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_short_blocks() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        assert_eq!(quantize_degrees(50, &dd), Err(LdpcError::BlockTooShort(50)));
    }
}
