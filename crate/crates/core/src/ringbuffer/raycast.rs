//! Voxel traversal between two voxel centres.
//!
//! Amanatides–Woo stepping done in exact integer arithmetic: the segment
//! between the centres of `a` and `b` crosses its `n`-th boundary along axis
//! `k` at parameter `(2n + 1) / (2|d_k|)`, so crossings are compared by
//! cross-multiplication. When several axes cross at the same parameter the
//! segment passes through an edge or corner and all of them are stepped at
//! once. The visited set is exactly the voxels whose interior the segment
//! meets, forming a 26-connected chain from `a` to `b`.

use super::Index3;

/// Calls `visit` for every voxel from `a` to `b`, both included, in order.
pub fn traverse(a: Index3, b: Index3, mut visit: impl FnMut(Index3)) {
    let d = b - a;
    let len = d.map(|v| v.abs());
    let step = d.map(|v| v.signum());
    let mut taken = [0i64; 3];
    let mut cur = a;
    visit(cur);
    while cur != b {
        // smallest (2 n_k + 1) / (2 len_k) over active axes
        let mut best: Option<(i64, i64)> = None;
        for k in 0..3 {
            if len[k] == 0 || taken[k] == len[k] {
                continue;
            }
            let cand = (2 * taken[k] + 1, len[k]);
            best = match best {
                Some((num, den)) if (num as i128) * (cand.1 as i128) <= (cand.0 as i128) * (den as i128) => {
                    Some((num, den))
                }
                _ => Some(cand),
            };
        }
        let (num, den) = best.expect("an axis is still active before reaching b");
        for k in 0..3 {
            if len[k] == 0 || taken[k] == len[k] {
                continue;
            }
            if (2 * taken[k] + 1) as i128 * den as i128 == num as i128 * len[k] as i128 {
                taken[k] += 1;
                cur[k] += step[k];
            }
        }
        visit(cur);
    }
}

pub fn raycast_indices(a: Index3, b: Index3) -> Vec<Index3> {
    let mut out = Vec::new();
    traverse(a, b, |x| out.push(x));
    out
}
