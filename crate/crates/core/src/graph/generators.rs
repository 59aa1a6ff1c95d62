use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// `K_n` with a loop at every vertex: `P(x, y) = 1/n` for all `x, y`.
pub fn new_complete_with_loops(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameters("n must be at least 1".into()));
    }
    Ok(Graph::complete_with_loops(n))
}

/// The cycle `C_n` for odd `n >= 3`: connected, 2-regular, not bipartite.
pub fn new_odd_cycle(n: usize) -> Result<Graph> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidParameters(format!(
            "odd cycle needs odd n >= 3, got {n}"
        )));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &edges)
}

pub(super) fn torus_side(n: usize) -> Result<usize> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n || side < 3 || side.is_multiple_of(2) {
        return Err(Error::InvalidParameters(format!(
            "torus grid needs n = s*s with s odd and >= 3, got {n}"
        )));
    }
    Ok(side)
}

/// `side x side` grid with wrap-around, 4-regular. An odd side keeps it
/// non-bipartite.
pub fn new_torus_grid(side: usize) -> Result<Graph> {
    if side < 3 {
        return Err(Error::InvalidParameters(format!("torus side must be >= 3, got {side}")));
    }
    let n = side * side;
    let id = |r: usize, c: usize| (r % side) * side + (c % side);
    let mut edges = Vec::with_capacity(2 * n);
    for r in 0..side {
        for c in 0..side {
            edges.push((id(r, c), id(r, c + 1)));
            edges.push((id(r, c), id(r + 1, c)));
        }
    }
    Graph::from_edges(n, &edges)
}

pub(super) fn check_ring_params(cliques: usize, size: usize) -> Result<()> {
    if cliques < 3 || size < 3 {
        return Err(Error::InvalidParameters(format!(
            "ring of cliques needs >= 3 cliques of size >= 3, got {cliques} x {size}"
        )));
    }
    Ok(())
}

/// `cliques` copies of `K_size` arranged in a ring, kept `(size-1)`-regular:
/// inside clique `i` the edge between its local vertices 0 and 1 is removed,
/// and local vertex 1 of clique `i` is joined to local vertex 0 of clique `i+1`.
/// A deliberately poor expander.
pub fn new_ring_of_cliques(cliques: usize, size: usize) -> Result<Graph> {
    check_ring_params(cliques, size)?;
    let n = cliques * size;
    let mut edges = Vec::new();
    for c in 0..cliques {
        let base = c * size;
        for a in 0..size {
            for b in (a + 1)..size {
                if (a, b) != (0, 1) {
                    edges.push((base + a, base + b));
                }
            }
        }
        let next = ((c + 1) % cliques) * size;
        edges.push((base + 1, next));
    }
    Graph::from_edges(n, &edges)
}

pub(super) fn check_regular_params(n: usize, d: usize) -> Result<()> {
    if !(n * d).is_multiple_of(2) {
        return Err(Error::InvalidParameters(format!(
            "n*d must be even, got n={n}, d={d}"
        )));
    }
    if d < 3 || d >= n {
        return Err(Error::InvalidParameters(format!(
            "random regular graphs need 3 <= d < n, got n={n}, d={d}"
        )));
    }
    Ok(())
}

/// How much work a random regular graph took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularStats {
    /// Pairing attempts that got stuck and were restarted.
    pub stuck_restarts: u64,
    /// Complete simple graphs discarded for being disconnected or bipartite.
    pub regenerations: u64,
    /// Total attempts; attempt `a` uses sub-seed `seed ^ a`.
    pub attempts: u64,
}

/// Random simple `d`-regular graph on `n` vertices, deterministic in `seed`.
pub fn new_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    random_regular_with_stats(n, d, seed).map(|(g, _)| g)
}

/// Configuration model restricted to simple pairings.
///
/// Half-edges are paired one pair at a time; each pair is uniform among the
/// remaining pairs that create neither a loop nor a repeated edge. When no
/// such pair remains, the attempt is thrown away. Finished graphs that are
/// disconnected or bipartite are thrown away too. Attempt `a` draws from
/// sub-seed `seed ^ a`; the budget is `1000 * (1 + d^2/n)` attempts.
pub fn random_regular_with_stats(n: usize, d: usize, seed: u64) -> Result<(Graph, RegularStats)> {
    check_regular_params(n, d)?;
    let budget = (1000.0 * (1.0 + (d * d) as f64 / n as f64)).ceil() as u64;
    let mut stats = RegularStats {
        stuck_restarts: 0,
        regenerations: 0,
        attempts: 0,
    };
    for attempt in 0..budget {
        stats.attempts = attempt + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ attempt);
        let Some(adj) = try_pairing(n, d, &mut rng) else {
            stats.stuck_restarts += 1;
            continue;
        };
        let g = Graph::from_sorted_lists(adj, n * d / 2)?;
        if g.validate().is_ergodic() {
            return Ok((g, stats));
        }
        stats.regenerations += 1;
    }
    Err(Error::RetryBudgetExhausted {
        n,
        d,
        attempts: budget,
    })
}

fn try_pairing(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<u32>>> {
    let mut points: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(d); n];
    let suitable = |adj: &[Vec<u32>], u: u32, v: u32| u != v && !adj[u as usize].contains(&v);

    while !points.is_empty() {
        let len = points.len();
        let mut chosen = None;
        for _ in 0..64 {
            let i = rng.random_range(0..len);
            let j = rng.random_range(0..len - 1);
            let j = if j >= i { j + 1 } else { j };
            if suitable(&adj, points[i], points[j]) {
                chosen = Some((i, j));
                break;
            }
        }
        if chosen.is_none() {
            // Few points left: enumerate the suitable pairs and pick one.
            let pairs: Vec<(usize, usize)> = (0..len)
                .flat_map(|i| ((i + 1)..len).map(move |j| (i, j)))
                .filter(|&(i, j)| suitable(&adj, points[i], points[j]))
                .collect();
            if pairs.is_empty() {
                return None;
            }
            chosen = Some(pairs[rng.random_range(0..pairs.len())]);
        }
        let (i, j) = chosen.unwrap();
        let (u, v) = (points[i], points[j]);
        adj[u as usize].push(v);
        adj[v as usize].push(u);
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        points.swap_remove(hi);
        points.swap_remove(lo);
    }
    Some(adj)
}
