//! Exact Euclidean distance transform against an arbitrary integer point set.
//!
//! Runs on the half-spacing grid so boundary vertices and face midpoints are
//! all lattice points; squared distances stay integers end to end, which makes
//! the result reproducible by brute force bit for bit.

const INF: i64 = i64::MAX / 4;

/// Returns, for every node of the `fw` x `fh` fine grid, the minimum squared
/// distance to `sites` and the index of a realizing site (smallest index on
/// ties). Separable two-pass transform: a vertical seed sweep per column, then
/// an exact horizontal scan per row.
pub(crate) fn exact_edt(fw: usize, fh: usize, sites: &[[i64; 2]]) -> (Vec<i64>, Vec<u32>) {
    assert!(!sites.is_empty(), "need at least one boundary sample");
    // per column: squared vertical distance to nearest in-column site
    let mut col_sq = vec![INF; fw * fh];
    let mut col_arg = vec![u32::MAX; fw * fh];
    for (i, s) in sites.iter().enumerate() {
        let (x, y) = (s[0] as usize, s[1] as usize);
        debug_assert!(x < fw && y < fh);
        let idx = y * fw + x;
        if col_sq[idx] != 0 {
            col_sq[idx] = 0;
            col_arg[idx] = i as u32;
        }
    }
    for x in 0..fw {
        // downward then upward propagation of |dy|
        let mut best: Option<(i64, u32)> = None; // (seed row, site)
        for y in 0..fh {
            let idx = y * fw + x;
            if col_sq[idx] == 0 {
                best = Some((y as i64, col_arg[idx]));
            } else if let Some((sy, si)) = best {
                let dy = y as i64 - sy;
                col_sq[idx] = dy * dy;
                col_arg[idx] = si;
            }
        }
        let mut best: Option<(i64, u32)> = None;
        for y in (0..fh).rev() {
            let idx = y * fw + x;
            if col_sq[idx] == 0 && col_arg[idx] != u32::MAX {
                if sites[col_arg[idx] as usize][1] == y as i64 {
                    best = Some((y as i64, col_arg[idx]));
                }
            }
            if let Some((sy, si)) = best {
                let dy = y as i64 - sy;
                let cand = dy * dy;
                if cand < col_sq[idx] {
                    col_sq[idx] = cand;
                    col_arg[idx] = si;
                }
            }
        }
    }

    // per row: exact min over source columns
    let mut out_sq = vec![INF; fw * fh];
    let mut out_arg = vec![u32::MAX; fw * fh];
    for y in 0..fh {
        let row = y * fw;
        for x in 0..fw {
            let mut best = INF;
            let mut arg = u32::MAX;
            for xs in 0..fw {
                let g = col_sq[row + xs];
                if g >= INF {
                    continue;
                }
                let dx = x as i64 - xs as i64;
                let cand = dx * dx + g;
                if cand < best || (cand == best && col_arg[row + xs] < arg) {
                    best = cand;
                    arg = col_arg[row + xs];
                }
            }
            out_sq[row + x] = best;
            out_arg[row + x] = arg;
        }
    }
    (out_sq, out_arg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(fw: usize, fh: usize, sites: &[[i64; 2]]) -> Vec<i64> {
        let mut out = vec![INF; fw * fh];
        for y in 0..fh {
            for x in 0..fw {
                let mut best = INF;
                for s in sites {
                    let dx = x as i64 - s[0];
                    let dy = y as i64 - s[1];
                    best = best.min(dx * dx + dy * dy);
                }
                out[y * fw + x] = best;
            }
        }
        out
    }

    #[test]
    fn matches_brute_force_on_scattered_sites() {
        let sites = vec![[0, 0], [6, 2], [3, 7], [7, 7], [1, 5]];
        let (sq, arg) = exact_edt(9, 9, &sites);
        let expect = brute(9, 9, &sites);
        assert_eq!(sq, expect);
        for (i, &a) in arg.iter().enumerate() {
            let (x, y) = ((i % 9) as i64, (i / 9) as i64);
            let s = sites[a as usize];
            assert_eq!((x - s[0]).pow(2) + (y - s[1]).pow(2), sq[i]);
        }
    }

    #[test]
    fn single_site() {
        let (sq, _) = exact_edt(4, 3, &[[2, 1]]);
        assert_eq!(sq[1 * 4 + 2], 0);
        assert_eq!(sq[0], 4 + 1);
    }
}
