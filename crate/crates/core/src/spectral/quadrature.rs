//! Streaming evaluation of polynomials on uniform torus grids.
//!
//! A grid of resolution (M_1, …, M_d) is walked one last-axis line at a time.
//! Terms are grouped by their last exponent `e`, so a line costs one prefix
//! product per term plus one multiply-add per group and node. Nothing of size
//! ΠM_i is ever allocated.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::par::{self, CompensatedSum};
use crate::poly::LaurentPoly;

/// Coefficients sharing one last-axis exponent.
struct Group {
    last: i64,
    prefix_terms: Vec<(Vec<i64>, Complex64)>,
}

pub(crate) struct LineEvaluator {
    res: Vec<usize>,
    roots: Vec<Vec<Complex64>>,
    groups: Vec<Group>,
}

pub(crate) fn root_table(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|j| {
            let (s, c) = (TAU * j as f64 / m as f64).sin_cos();
            Complex64::new(c, -s)
        })
        .collect()
}

impl LineEvaluator {
    pub fn new(p: &LaurentPoly, res: &[usize]) -> Self {
        let d = p.dim();
        let roots = res.iter().map(|&m| root_table(m)).collect();
        let mut groups: Vec<Group> = Vec::new();
        for (k, c) in p.terms() {
            let last = k[d - 1];
            let prefix = k.as_slice()[..d - 1].to_vec();
            match groups.iter_mut().find(|g| g.last == last) {
                Some(g) => g.prefix_terms.push((prefix, *c)),
                None => groups.push(Group {
                    last,
                    prefix_terms: vec![(prefix, *c)],
                }),
            }
        }
        LineEvaluator {
            res: res.to_vec(),
            roots,
            groups,
        }
    }

    pub fn line_len(&self) -> usize {
        *self.res.last().unwrap()
    }

    /// Values p(e^{−it}) for t = 2π(prefix, j)/M, j = 0..M_d−1.
    pub fn line(&self, prefix: &[usize], out: &mut [Complex64]) {
        let d = self.res.len();
        let m_last = self.line_len() as i64;
        let last_roots = &self.roots[d - 1];
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for g in &self.groups {
            let mut q = Complex64::new(0.0, 0.0);
            for (exps, c) in &g.prefix_terms {
                let mut v = *c;
                for i in 0..d - 1 {
                    if exps[i] != 0 {
                        let m = self.res[i] as i64;
                        let idx = (prefix[i] as i64 * exps[i]).rem_euclid(m) as usize;
                        v *= self.roots[i][idx];
                    }
                }
                q += v;
            }
            if g.last == 0 {
                out.iter_mut().for_each(|x| *x += q);
            } else {
                for (j, x) in out.iter_mut().enumerate() {
                    let idx = (j as i64 * g.last).rem_euclid(m_last) as usize;
                    *x += q * last_roots[idx];
                }
            }
        }
    }
}

/// Iterates the line prefixes of a tile. With d ≥ 2 the tile fixes the first
/// coordinate; with d = 1 there is a single tile with an empty prefix.
pub(crate) struct TileLayout {
    pub res: Vec<usize>,
}

impl TileLayout {
    pub fn tiles(&self) -> usize {
        if self.res.len() >= 2 {
            self.res[0]
        } else {
            1
        }
    }

    /// Calls `f(prefix)` for every line in `tile`, in row-major order.
    pub fn for_each_prefix(&self, tile: usize, mut f: impl FnMut(&[usize])) {
        let d = self.res.len();
        if d == 1 {
            f(&[]);
            return;
        }
        let mut prefix = vec![0usize; d - 1];
        prefix[0] = tile;
        loop {
            f(&prefix);
            let mut i = d - 2;
            loop {
                if i == 0 {
                    return;
                }
                prefix[i] += 1;
                if prefix[i] < self.res[i] {
                    break;
                }
                prefix[i] = 0;
                i -= 1;
            }
        }
    }
}

/// Result of one quadrature pass.
#[derive(Clone, Copy, Debug)]
pub(crate) struct QuadraturePass {
    pub mean: f64,
    pub skipped: u64,
    pub nodes: u64,
}

/// Mean of |Θ/Φ|² over the grid. Nodes with |Φ| < `floor` contribute 0.
pub(crate) fn mean_ratio_squared(
    phi: &LaurentPoly,
    theta: &LaurentPoly,
    res: &[usize],
    floor: f64,
) -> QuadraturePass {
    let ev_phi = LineEvaluator::new(phi, res);
    let ev_theta = LineEvaluator::new(theta, res);
    let layout = TileLayout { res: res.to_vec() };
    let m = ev_phi.line_len();
    let tiles = par::map_indexed(layout.tiles(), |tile| {
        let mut a = vec![Complex64::new(0.0, 0.0); m];
        let mut b = vec![Complex64::new(0.0, 0.0); m];
        let mut sum = CompensatedSum::default();
        let mut skipped = 0u64;
        layout.for_each_prefix(tile, |prefix| {
            ev_phi.line(prefix, &mut a);
            ev_theta.line(prefix, &mut b);
            for (x, y) in a.iter().zip(&b) {
                let den = x.norm_sqr();
                if den.sqrt() < floor {
                    skipped += 1;
                } else {
                    sum.add(y.norm_sqr() / den);
                }
            }
        });
        (sum.value(), skipped)
    });
    let mut total = CompensatedSum::default();
    let mut skipped = 0;
    for (s, k) in tiles {
        total.add(s);
        skipped += k;
    }
    let nodes: u64 = res.iter().map(|&x| x as u64).product();
    QuadraturePass {
        mean: total.value() / nodes as f64,
        skipped,
        nodes,
    }
}

/// The `keep` smallest values of |p(e^{−it})| on the grid as
/// (modulus, flat node index), sorted ascending.
pub(crate) fn smallest_nodes(p: &LaurentPoly, res: &[usize], keep: usize) -> Vec<(f64, usize)> {
    let ev = LineEvaluator::new(p, res);
    let layout = TileLayout { res: res.to_vec() };
    let m = ev.line_len();
    let tile_nodes: usize = if res.len() == 1 {
        m
    } else {
        res[1..].iter().product()
    };
    let tiles = par::map_indexed(layout.tiles(), |tile| {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(keep + 1);
        let mut line_no = 0usize;
        layout.for_each_prefix(tile, |prefix| {
            ev.line(prefix, &mut buf);
            for (j, v) in buf.iter().enumerate() {
                let a = v.norm();
                if best.len() < keep || a < best[best.len() - 1].0 {
                    let flat = tile * tile_nodes + line_no * m + j;
                    let pos = best.partition_point(|&(b, _)| b <= a);
                    best.insert(pos, (a, flat));
                    best.truncate(keep);
                }
            }
            line_no += 1;
        });
        best
    });
    let mut all: Vec<(f64, usize)> = tiles.into_iter().flatten().collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    all.truncate(keep);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{eval_torus_grid, MultiIndex};

    #[test]
    fn streaming_matches_fft_grid() {
        let p = LaurentPoly::from_terms(
            3,
            [
                (MultiIndex::new(vec![0, 0, 0]), Complex64::new(1.0, 0.0)),
                (MultiIndex::new(vec![1, -2, 0]), Complex64::new(0.3, 0.1)),
                (MultiIndex::new(vec![0, 1, 3]), Complex64::new(-0.2, 0.0)),
                (MultiIndex::new(vec![2, 0, -1]), Complex64::new(0.0, 0.4)),
            ],
        )
        .unwrap();
        let res = [4, 6, 8];
        let grid = eval_torus_grid(&p, &res).unwrap();
        let ev = LineEvaluator::new(&p, &res);
        let layout = TileLayout { res: res.to_vec() };
        let mut buf = vec![Complex64::new(0.0, 0.0); 8];
        let mut flat = 0;
        for tile in 0..layout.tiles() {
            layout.for_each_prefix(tile, |prefix| {
                ev.line(prefix, &mut buf);
                for v in &buf {
                    assert!((v - grid.data()[flat]).norm() < 1e-13);
                    flat += 1;
                }
            });
        }
        assert_eq!(flat, 4 * 6 * 8);
    }

    #[test]
    fn smallest_node_indices_are_flat_row_major() {
        let p = LaurentPoly::from_terms(
            2,
            [
                (MultiIndex::new(vec![0, 0]), Complex64::new(1.0, 0.0)),
                (MultiIndex::new(vec![1, 0]), Complex64::new(-0.5, 0.0)),
                (MultiIndex::new(vec![0, 1]), Complex64::new(-0.5, 0.0)),
            ],
        )
        .unwrap();
        let best = smallest_nodes(&p, &[8, 16], 3);
        assert_eq!(best[0], (0.0, 0));
        let grid = eval_torus_grid(&p, &[8, 16]).unwrap();
        for (a, f) in best {
            assert!((grid.data()[f].norm() - a).abs() < 1e-14);
        }
    }
}
