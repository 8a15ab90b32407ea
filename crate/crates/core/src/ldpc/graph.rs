use std::collections::VecDeque;
use std::fmt::Write as _;

use super::LdpcError;

/// Bipartite graph of an LDPC code with sorted adjacency on both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n: usize,
    seed: u64,
    checks: Vec<Vec<u32>>,
    vars: Vec<Vec<u32>>,
}

impl TannerGraph {
    /// Builds a graph from per-check variable lists. Rejects out-of-range
    /// indices and parallel edges.
    pub fn from_checks(n: usize, mut checks: Vec<Vec<u32>>, seed: u64) -> Result<Self, LdpcError> {
        let mut vars = vec![Vec::new(); n];
        for (c, row) in checks.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(LdpcError::InvalidGraph(format!(
                    "parallel edge at check {c}"
                )));
            }
            for &v in row.iter() {
                let slot = vars.get_mut(v as usize).ok_or_else(|| {
                    LdpcError::InvalidGraph(format!("variable {v} out of range at check {c}"))
                })?;
                slot.push(c as u32);
            }
        }
        Ok(TannerGraph {
            n,
            seed,
            checks,
            vars,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.checks.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edges(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }

    pub fn check_neighbors(&self, c: usize) -> &[u32] {
        &self.checks[c]
    }

    pub fn var_neighbors(&self, v: usize) -> &[u32] {
        &self.vars[v]
    }

    pub fn var_degrees(&self) -> Vec<usize> {
        self.vars.iter().map(Vec::len).collect()
    }

    pub fn check_degrees(&self) -> Vec<usize> {
        self.checks.iter().map(Vec::len).collect()
    }

    /// Whether two checks share two or more variables.
    pub fn has_four_cycle(&self) -> bool {
        let mut mark = vec![u32::MAX; self.m()];
        for (c, row) in self.checks.iter().enumerate() {
            for &v in row {
                for &d in &self.vars[v as usize] {
                    if d as usize == c {
                        continue;
                    }
                    if mark[d as usize] == c as u32 {
                        return true;
                    }
                    mark[d as usize] = c as u32;
                }
            }
        }
        false
    }

    /// Length of the shortest cycle, or `None` for a forest. BFS from every
    /// variable node, cut off once no shorter cycle can be found.
    pub fn girth(&self) -> Option<usize> {
        let total = self.n + self.m();
        let mut dist = vec![usize::MAX; total];
        let mut parent = vec![usize::MAX; total];
        let mut best = usize::MAX;
        let mut touched = Vec::new();
        for root in 0..self.n {
            let mut queue = VecDeque::from([root]);
            dist[root] = 0;
            touched.push(root);
            while let Some(u) = queue.pop_front() {
                if 2 * dist[u] + 1 >= best {
                    break;
                }
                let neighbors: Box<dyn Iterator<Item = usize>> = if u < self.n {
                    Box::new(self.vars[u].iter().map(|&c| self.n + c as usize))
                } else {
                    Box::new(self.checks[u - self.n].iter().map(|&v| v as usize))
                };
                for w in neighbors {
                    if w == parent[u] {
                        continue;
                    }
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        touched.push(w);
                        queue.push_back(w);
                    } else {
                        best = best.min(dist[u] + dist[w] + 1);
                    }
                }
            }
            for &t in &touched {
                dist[t] = usize::MAX;
                parent[t] = usize::MAX;
            }
            touched.clear();
        }
        (best != usize::MAX).then_some(best)
    }

    /// Plain-text form: a header `tanner <n> <m> <seed>` and one line of
    /// variable indices per check.
    pub fn to_text(&self) -> String {
        let mut s = format!("tanner {} {} {}\n", self.n, self.m(), self.seed);
        for row in &self.checks {
            let mut first = true;
            for v in row {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, LdpcError> {
        let mut lines = text.lines();
        let err = |line: usize, msg: &str| LdpcError::Parse {
            line,
            msg: msg.to_string(),
        };
        let header = lines.next().ok_or_else(|| err(1, "empty input"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "tanner" {
            return Err(err(1, "expected `tanner <n> <m> <seed>`"));
        }
        let n: usize = fields[1].parse().map_err(|_| err(1, "bad n"))?;
        let m: usize = fields[2].parse().map_err(|_| err(1, "bad m"))?;
        let seed: u64 = fields[3].parse().map_err(|_| err(1, "bad seed"))?;
        let mut checks = Vec::with_capacity(m);
        for (i, line) in lines.enumerate() {
            let row: Result<Vec<u32>, _> = line.split_whitespace().map(str::parse).collect();
            checks.push(row.map_err(|_| err(i + 2, "bad variable index"))?);
        }
        if checks.len() != m {
            return Err(err(
                m + 1,
                &format!("expected {m} check lines, found {}", checks.len()),
            ));
        }
        Self::from_checks(n, checks, seed)
    }
}
