use super::{LdpcError, TannerGraph};

/// Systematic encoder from the reduced row echelon form of `H`.
///
/// Non-pivot columns carry the message; each pivot column is the parity of
/// the message bits selected by its reduced row.
#[derive(Debug, Clone)]
pub struct EncoderState {
    n: usize,
    m: usize,
    /// Pivot column of each reduced row.
    pivots: Vec<usize>,
    /// Reduced rows, bit-packed, with pivot bits cleared.
    rows: Vec<Vec<u64>>,
    info: Vec<usize>,
}

const W: usize = 64;

fn get(row: &[u64], j: usize) -> bool {
    row[j / W] >> (j % W) & 1 == 1
}

impl EncoderState {
    pub fn new(g: &TannerGraph) -> Self {
        let (n, m) = (g.n(), g.m());
        let words = n.div_ceil(W);
        let mut h: Vec<Vec<u64>> = (0..m)
            .map(|c| {
                let mut row = vec![0u64; words];
                for &v in g.check_neighbors(c) {
                    row[v as usize / W] |= 1 << (v as usize % W);
                }
                row
            })
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..n {
            if r == m {
                break;
            }
            let Some(p) = (r..m).find(|&i| get(&h[i], col)) else {
                continue;
            };
            h.swap(r, p);
            let pivot = std::mem::take(&mut h[r]);
            let w0 = col / W;
            for row in h.iter_mut() {
                if !row.is_empty() && get(row, col) {
                    for (a, b) in row[w0..].iter_mut().zip(&pivot[w0..]) {
                        *a ^= b;
                    }
                }
            }
            h[r] = pivot;
            pivots.push(col);
            r += 1;
        }
        h.truncate(r);
        for (row, &p) in h.iter_mut().zip(&pivots) {
            row[p / W] &= !(1 << (p % W));
        }
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let info = (0..n).filter(|&j| !is_pivot[j]).collect();
        EncoderState {
            n,
            m,
            pivots,
            rows: h,
            info,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length `n − rank`.
    pub fn k(&self) -> usize {
        self.info.len()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Checks that are linear combinations of others.
    pub fn redundant_checks(&self) -> usize {
        self.m - self.rank()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// Codeword positions holding the message bits.
    pub fn info_positions(&self) -> &[usize] {
        &self.info
    }

    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>, LdpcError> {
        if msg.len() != self.k() {
            return Err(LdpcError::MessageLength {
                got: msg.len(),
                want: self.k(),
            });
        }
        let mut word = vec![0u8; self.n];
        let mut packed = vec![0u64; self.n.div_ceil(W)];
        for (&j, &b) in self.info.iter().zip(msg) {
            word[j] = b & 1;
            packed[j / W] |= u64::from(b & 1) << (j % W);
        }
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let ones: u32 = row
                .iter()
                .zip(&packed)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            word[p] = (ones & 1) as u8;
        }
        Ok(word)
    }

    /// Message bits of a codeword.
    pub fn extract(&self, word: &[u8]) -> Vec<u8> {
        self.info.iter().map(|&j| word[j]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::syndrome_ok;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hamming_code() {
        let g = TannerGraph::from_checks(
            7,
            vec![vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]],
            0,
        )
        .unwrap();
        let e = EncoderState::new(&g);
        assert_eq!((e.k(), e.rank()), (4, 3));
        for m in 0..16u8 {
            let msg: Vec<u8> = (0..4).map(|i| m >> i & 1).collect();
            let c = e.encode(&msg).unwrap();
            assert!(syndrome_ok(&g, &c));
            assert_eq!(e.extract(&c), msg);
        }
    }

    #[test]
    fn duplicate_check_enlarges_message() {
        let g = TannerGraph::from_checks(6, vec![vec![0, 1, 2], vec![2, 3, 4], vec![0, 1, 2]], 0)
            .unwrap();
        let e = EncoderState::new(&g);
        assert_eq!(e.k(), 6 - 3 + 1);
        assert_eq!(e.redundant_checks(), 1);
    }

    #[test]
    fn random_sparse_code_words_satisfy_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 300;
        let checks: Vec<Vec<u32>> = (0..150)
            .map(|_| {
                let mut row: Vec<u32> = (0..6).map(|_| rng.random_range(0..n as u32)).collect();
                row.sort_unstable();
                row.dedup();
                row
            })
            .collect();
        let g = TannerGraph::from_checks(n, checks, 0).unwrap();
        let e = EncoderState::new(&g);
        for _ in 0..100 {
            let msg: Vec<u8> = (0..e.k()).map(|_| rng.random_range(0..2)).collect();
            assert!(syndrome_ok(&g, &e.encode(&msg).unwrap()));
        }
        assert!(e.encode(&[0]).is_err());
    }
}
