//! Cube census written directly from the class definitions. Shares no code
//! with the library.

pub struct Oracle {
    /// Per cube `a + 2k b`, per well.
    pub sigma: Vec<Vec<f64>>,
    /// 1..=5 for T1..T5.
    pub class: Vec<u8>,
}

/// A 2D node-major field: node `(i, j)` holds `vals[m (i ny + j)..][..m]`.
pub struct Grid<'a> {
    pub vals: &'a [f64],
    pub ny: usize,
    pub m: usize,
    pub h: f64,
}

fn dist(u: &[f64], a: &[f64]) -> f64 {
    u.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `2k x 2k` cubes of `side` nodes centred on node `(ci, cj)`.
#[allow(clippy::too_many_arguments)]
pub fn brute_census(
    g: &Grid,
    wells: &[Vec<f64>],
    theta: f64,
    side: usize,
    k: usize,
    eps: f64,
    ci: usize,
    cj: usize,
) -> Oracle {
    let per = 2 * k;
    let (fi, fj) = (ci - k * side, cj - k * side);
    let vol = (side * side) as f64 * g.h * g.h;
    let mut sigma = vec![vec![0.0; wells.len()]; per * per];
    for b in 0..per {
        for a in 0..per {
            for (w, well) in wells.iter().enumerate() {
                let mut count = 0usize;
                for di in 0..side {
                    for dj in 0..side {
                        let i = fi + a * side + di;
                        let j = fj + b * side + dj;
                        let o = g.m * (i * g.ny + j);
                        if dist(&g.vals[o..o + g.m], well) < theta / 2.0 {
                            count += 1;
                        }
                    }
                }
                sigma[a + per * b][w] = count as f64 * g.h * g.h;
            }
        }
    }
    let big = (1.0 - 2.0 * eps) * vol;
    let small = eps * vol / (wells.len() - 1) as f64;
    let mut class = vec![0u8; per * per];
    for b in 0..per {
        for a in 0..per {
            let s = &sigma[a + per * b];
            let mut j0 = 0;
            for j in 0..s.len() {
                if s[j] > s[j0] {
                    j0 = j;
                }
            }
            class[a + per * b] = if a == 0 || b == 0 || a == per - 1 || b == per - 1 {
                1
            } else if s[j0] > big {
                let mut all = true;
                for nb in [b - 1, b, b + 1] {
                    for na in [a - 1, a, a + 1] {
                        all &= sigma[na + per * nb][j0] > big;
                    }
                }
                if all {
                    4
                } else {
                    5
                }
            } else if (0..s.len()).any(|j| j != j0 && s[j] >= small) {
                2
            } else {
                3
            };
        }
    }
    Oracle { sigma, class }
}
