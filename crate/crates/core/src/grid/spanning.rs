use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Number of spanning trees of a multigraph on `n` vertices (matrix-tree theorem).
///
/// Takes the determinant of the Laplacian with the last row and column removed, using
/// fraction-free (Bareiss) elimination over big integers so the result is exact.
/// Self-loops are ignored; a disconnected graph yields zero.
pub fn spanning_tree_count(n: usize, edges: &[(usize, usize)]) -> BigUint {
    if n <= 1 {
        return BigUint::one();
    }
    let m = n - 1;
    let mut a: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); m]; m];
    for &(u, v) in edges {
        if u == v {
            continue;
        }
        if u < m {
            a[u][u] += 1;
        }
        if v < m {
            a[v][v] += 1;
        }
        if u < m && v < m {
            a[u][v] -= 1;
            a[v][u] -= 1;
        }
    }

    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..m {
        if a[k][k].is_zero() {
            match (k + 1..m).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    negate = !negate;
                }
                None => return BigUint::zero(),
            }
        }
        let (head, tail) = a.split_at_mut(k + 1);
        let pivot_row = &head[k];
        let pivot = &pivot_row[k];
        for row in tail.iter_mut() {
            let factor = row[k].clone();
            for j in k + 1..m {
                // Laplacian minors stay sparse for grid graphs; skip untouched zeros.
                if factor.is_zero() || pivot_row[j].is_zero() {
                    if !row[j].is_zero() {
                        row[j] = &row[j] * pivot / &prev;
                    }
                } else {
                    row[j] = (&row[j] * pivot - &factor * &pivot_row[j]) / &prev;
                }
            }
            row[k] = BigInt::zero();
        }
        prev = pivot.clone();
    }
    let det = if negate { -prev } else { prev };
    match det.sign() {
        Sign::Minus => BigUint::zero(),
        _ => det.magnitude().clone(),
    }
}
