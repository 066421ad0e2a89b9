//! Candidate point sets on `[a, b]`: equispaced, Chebyshev–Lobatto and
//! one-dimensional Halton (van der Corput, base 2) with forced endpoints.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, EpsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Equispaced,
    Chebyshev,
    Halton,
}

impl NodeKind {
    pub const ALL: [NodeKind; 3] = [NodeKind::Equispaced, NodeKind::Halton, NodeKind::Chebyshev];

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Equispaced => "equispaced",
            NodeKind::Chebyshev => "chebyshev",
            NodeKind::Halton => "halton",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeKind {
    type Err = EpsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equispaced" => Ok(NodeKind::Equispaced),
            "chebyshev" => Ok(NodeKind::Chebyshev),
            "halton" => Ok(NodeKind::Halton),
            other => invalid(format!("unknown node kind '{other}' (expected equispaced, chebyshev or halton)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub count: usize,
    pub a: f64,
    pub b: f64,
}

impl NodeSpec {
    pub fn new(kind: NodeKind, count: usize, a: f64, b: f64) -> Self {
        Self { kind, count, a, b }
    }

    /// On the default interval `[-1, 1]`.
    pub fn unit(kind: NodeKind, count: usize) -> Self {
        Self::new(kind, count, -1.0, 1.0)
    }

    pub fn generate(&self) -> Result<Vec<f64>> {
        generate(self)
    }
}

impl fmt::Display for NodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.count)
    }
}

/// Parses `kind:count`, on `[-1, 1]`.
impl FromStr for NodeSpec {
    type Err = EpsError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, count) = s
            .split_once(':')
            .ok_or_else(|| EpsError::InvalidInput(format!("node spec '{s}' must look like kind:count")))?;
        let count = count
            .trim()
            .parse::<usize>()
            .map_err(|e| EpsError::InvalidInput(format!("node count '{count}': {e}")))?;
        Ok(NodeSpec::unit(kind.trim().parse()?, count))
    }
}

/// Base-2 radical inverse of `i`.
pub fn van_der_corput(mut i: u64) -> f64 {
    let mut x = 0.0;
    let mut f = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            x += f;
        }
        i >>= 1;
        f *= 0.5;
    }
    x
}

pub fn generate(spec: &NodeSpec) -> Result<Vec<f64>> {
    let NodeSpec { kind, count: n, a, b } = *spec;
    if n < 2 {
        return invalid(format!("need at least 2 nodes, got {n}"));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return invalid(format!("interval [{a}, {b}] must satisfy a < b"));
    }
    let m = (n - 1) as f64;
    let mut xs: Vec<f64> = match kind {
        NodeKind::Equispaced => (0..n).map(|k| a + (b - a) * (k as f64 / m)).collect(),
        NodeKind::Chebyshev => {
            // −cos(πk/m) written as sin(π(2k − m)/(2m)): exact endpoints and
            // an exact midpoint for odd n
            let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
            (0..n)
                .map(|k| c + r * (std::f64::consts::PI * (2.0 * k as f64 - m) / (2.0 * m)).sin())
                .collect()
        }
        NodeKind::Halton => {
            let mut xs: Vec<f64> = (1..=(n - 2) as u64).map(|i| a + (b - a) * van_der_corput(i)).collect();
            xs.push(a);
            xs.push(b);
            xs.sort_by(f64::total_cmp);
            let before = xs.len();
            xs.dedup();
            if xs.len() != before {
                return invalid(format!("{} Halton points collided", before - xs.len()));
            }
            xs
        }
    };
    xs[0] = a;
    xs[n - 1] = b;
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid(format!("{kind} nodes with n = {n} are not strictly increasing in floating point"));
    }
    Ok(xs)
}
