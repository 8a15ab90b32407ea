//! Finite-length LDPC codes: degree quantization, progressive edge growth,
//! systematic GF(2) encoding and syndrome checks.

mod encoder;
mod graph;
mod peg;
mod quantize;

pub use encoder::EncoderState;
pub use graph::TannerGraph;
pub use peg::peg_construct;
pub use quantize::quantize_degrees;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdpcError {
    #[error("blocklength {0} too small (need at least 100)")]
    BlockTooShort(usize),
    #[error("degree lists cannot be balanced: {0}")]
    Unbalanced(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("malformed graph file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("message has {got} bits, encoder expects {want}")]
    MessageLength { got: usize, want: usize },
}

/// True iff every check of `g` is satisfied by `bits` (`0`/`1` values).
pub fn syndrome_ok(g: &TannerGraph, bits: &[u8]) -> bool {
    debug_assert_eq!(bits.len(), g.n());
    (0..g.m()).all(|c| {
        g.check_neighbors(c)
            .iter()
            .fold(0u8, |acc, &v| acc ^ bits[v as usize])
            & 1
            == 0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syndrome_of_zero_word_and_flip() {
        let g = TannerGraph::from_checks(6, vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 0]], 0)
            .unwrap();
        assert!(syndrome_ok(&g, &[0; 6]));
        let mut c = vec![1, 1, 0, 1, 1, 0];
        assert!(syndrome_ok(&g, &c));
        c[3] ^= 1;
        assert!(!syndrome_ok(&g, &c));
    }
}
