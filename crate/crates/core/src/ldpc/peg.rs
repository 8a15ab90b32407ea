use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LdpcError, TannerGraph};

/// Progressive edge growth.
///
/// Variables are processed in non-decreasing degree order; the seed only
/// shuffles variables within a degree class. Each new edge of a variable
/// goes to a check as far away as possible in the current graph
/// (unreachable beats any finite depth). Ties go to checks still below
/// their target degree, then to the lowest current degree, then to the
/// lowest index. Target check degrees are therefore met only approximately
/// (typically within one).
pub fn peg_construct(
    var_degrees: &[usize],
    check_degrees: &[usize],
    seed: u64,
) -> Result<TannerGraph, LdpcError> {
    let n = var_degrees.len();
    let m = check_degrees.len();
    let ev: usize = var_degrees.iter().sum();
    let ec: usize = check_degrees.iter().sum();
    if ev != ec {
        return Err(LdpcError::Unbalanced(format!(
            "{ev} variable edges vs {ec} check edges"
        )));
    }
    if let Some(&d) = var_degrees.iter().find(|&&d| d > m) {
        return Err(LdpcError::Unbalanced(format!(
            "variable degree {d} exceeds {m} checks"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| var_degrees[v]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class in order.chunk_by_mut(|&a, &b| var_degrees[a] == var_degrees[b]) {
        class.shuffle(&mut rng);
    }

    let mut checks: Vec<Vec<u32>> = check_degrees
        .iter()
        .map(|&d| Vec::with_capacity(d))
        .collect();
    let mut vars: Vec<Vec<u32>> = var_degrees.iter().map(|&d| Vec::with_capacity(d)).collect();
    // Per-search stamps avoid clearing arrays between searches.
    let mut check_seen = vec![0u32; m];
    let mut var_seen = vec![0u32; n];
    let mut level_mark = vec![0u32; m];
    let mut stamp = 0u32;
    let mut frontier: Vec<u32> = Vec::new();
    let mut next: Vec<u32> = Vec::new();
    let mut level: Vec<u32> = Vec::new();

    for &v in &order {
        for _ in 0..var_degrees[v] {
            let total = m - vars[v].len();
            stamp += 1;
            var_seen[v] = stamp;
            frontier.clear();
            frontier.push(v as u32);
            let mut reached = 0;
            let mut exhausted = false;
            loop {
                // One level: frontier variables -> newly reached checks.
                level.clear();
                for &u in &frontier {
                    for &c in &vars[u as usize] {
                        if check_seen[c as usize] != stamp {
                            check_seen[c as usize] = stamp;
                            level_mark[c as usize] = stamp;
                            level.push(c);
                        }
                    }
                }
                if level.is_empty() {
                    exhausted = true;
                    break;
                }
                reached += level.iter().filter(|&&c| !vars[v].contains(&c)).count();
                if reached == total {
                    break;
                }
                for &c in &level {
                    level_mark[c as usize] = 0;
                }
                next.clear();
                for &c in &level {
                    for &u in &checks[c as usize] {
                        if var_seen[u as usize] != stamp {
                            var_seen[u as usize] = stamp;
                            next.push(u);
                        }
                    }
                }
                std::mem::swap(&mut frontier, &mut next);
            }
            // Unreachable checks if the search ran out of graph, otherwise
            // the checks first reached at the last level.
            let deepest = |c: usize| {
                if exhausted {
                    check_seen[c] != stamp
                } else {
                    level_mark[c] == stamp
                }
            };
            let pick = (0..m)
                .filter(|&c| !vars[v].contains(&(c as u32)) && deepest(c))
                .min_by_key(|&c| (checks[c].len() >= check_degrees[c], checks[c].len(), c))
                .expect("an open check exists");
            checks[pick].push(v as u32);
            vars[v].push(pick as u32);
        }
    }
    TannerGraph::from_checks(n, checks, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_regular_graph_is_valid() {
        let g = peg_construct(&[2; 8], &[4; 4], 1).unwrap();
        assert_eq!(g.var_degrees(), vec![2; 8]);
        assert_eq!(g.check_degrees(), vec![4; 4]);
    }

    #[test]
    fn deterministic_per_seed() {
        let var: Vec<usize> = (0..200).map(|i| if i < 120 { 2 } else { 3 }).collect();
        let chk = vec![6; 80];
        let a = peg_construct(&var, &chk, 9).unwrap();
        let b = peg_construct(&var, &chk, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.girth().unwrap() >= 6);
        assert!(a.check_degrees().iter().all(|&d| d.abs_diff(6) <= 1));
        assert_ne!(a, peg_construct(&var, &chk, 10).unwrap());
    }

    #[test]
    fn unbalanced_lists_are_rejected() {
        assert!(peg_construct(&[2, 2], &[3], 0).is_err());
    }
}
