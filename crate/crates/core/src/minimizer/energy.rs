//! Discrete energy and its gradient.
//!
//! `J_h(u) = sum_edges w_e h^(n-2) |u_a - u_b|^2 / 2 + sum_nodes w_v h^n W(u_v)`
//! where `w_v` are trapezoid node weights and `w_e = 1/2` for 2D edges that
//! run along the outer ring (1 otherwise). On uniform interior nodes the
//! gradient is `h^n (-Lap_h u + W_u(u))`.

use crate::exec::{chunked_map_sum, chunked_sum, Exec};
use crate::grid::{GridSpec, VectorField};
use crate::potential::{Potential, SingularityPolicy};

/// Which potential the energy integrates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialForm {
    Exact,
    /// Every well distance replaced by `sqrt(d^2 + eps^2)`.
    Smoothed(f64),
}

impl PotentialForm {
    pub fn from_policy(policy: SingularityPolicy) -> Self {
        match policy {
            SingularityPolicy::SubgradientZero => PotentialForm::Exact,
            SingularityPolicy::EpsilonSmoothing { eps_reg } => PotentialForm::Smoothed(eps_reg),
        }
    }

    #[inline]
    pub fn eval(self, p: &Potential, u: &[f64]) -> f64 {
        match self {
            PotentialForm::Exact => p.eval_w(u),
            PotentialForm::Smoothed(eps) => p.eval_w_smoothed(u, eps),
        }
    }
}

/// Calls `visit(neighbor, edge_weight)` for every edge at `idx`.
#[inline]
pub fn for_each_edge(spec: &GridSpec, idx: usize, mut visit: impl FnMut(usize, f64)) {
    let (i, j) = spec.unflatten(idx);
    let nx = spec.extents[0];
    if spec.n == 1 {
        if i > 0 {
            visit(idx - 1, 1.0);
        }
        if i + 1 < nx {
            visit(idx + 1, 1.0);
        }
        return;
    }
    let ny = spec.extents[1];
    let wx = if j == 0 || j + 1 == ny { 0.5 } else { 1.0 };
    let wy = if i == 0 || i + 1 == nx { 0.5 } else { 1.0 };
    if i > 0 {
        visit(idx - ny, wx);
    }
    if i + 1 < nx {
        visit(idx + ny, wx);
    }
    if j > 0 {
        visit(idx - 1, wy);
    }
    if j + 1 < ny {
        visit(idx + 1, wy);
    }
}

/// Edges from `idx` to its larger-index neighbours (each edge counted once).
#[inline]
fn for_each_forward_edge(spec: &GridSpec, idx: usize, mut visit: impl FnMut(usize, f64)) {
    let (i, j) = spec.unflatten(idx);
    let nx = spec.extents[0];
    if spec.n == 1 {
        if i + 1 < nx {
            visit(idx + 1, 1.0);
        }
        return;
    }
    let ny = spec.extents[1];
    if i + 1 < nx {
        visit(idx + ny, if j == 0 || j + 1 == ny { 0.5 } else { 1.0 });
    }
    if j + 1 < ny {
        visit(idx + 1, if i == 0 || i + 1 == nx { 0.5 } else { 1.0 });
    }
}

#[inline]
fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Coefficient `h^(n-2)` of the Dirichlet term.
#[inline]
pub fn coupling(spec: &GridSpec) -> f64 {
    spec.h.powi(spec.n as i32 - 2)
}

pub fn dirichlet_energy(f: &VectorField, exec: Exec) -> f64 {
    let spec = &f.spec;
    let k = 0.5 * coupling(spec);
    chunked_sum(exec, f.num_nodes(), |r| {
        let mut s = 0.0;
        for idx in r {
            let u = f.node(idx);
            for_each_forward_edge(spec, idx, |nb, w| s += w * sq_diff(u, f.node(nb)));
        }
        k * s
    })
}

pub fn potential_energy(f: &VectorField, p: &Potential, form: PotentialForm, exec: Exec) -> f64 {
    let spec = &f.spec;
    let hn = spec.cell_volume();
    chunked_sum(exec, f.num_nodes(), |r| {
        let mut s = 0.0;
        for idx in r {
            s += spec.node_weight(idx) * form.eval(p, f.node(idx));
        }
        hn * s
    })
}

/// Discrete energy with an explicit potential form and execution mode.
pub fn energy_with(f: &VectorField, p: &Potential, form: PotentialForm, exec: Exec) -> f64 {
    let spec = &f.spec;
    let k = 0.5 * coupling(spec);
    let hn = spec.cell_volume();
    chunked_sum(exec, f.num_nodes(), |r| {
        let (mut d, mut w) = (0.0, 0.0);
        for idx in r {
            let u = f.node(idx);
            for_each_forward_edge(spec, idx, |nb, we| d += we * sq_diff(u, f.node(nb)));
            w += spec.node_weight(idx) * form.eval(p, u);
        }
        k * d + hn * w
    })
}

/// `J(z) - J(x)` summed from local differences, which keeps small changes
/// accurate where the difference of two totals would lose them to rounding.
pub fn energy_change(x: &VectorField, z: &VectorField, p: &Potential, form: PotentialForm, exec: Exec) -> f64 {
    let spec = &x.spec;
    let k = 0.5 * coupling(spec);
    let hn = spec.cell_volume();
    chunked_sum(exec, x.num_nodes(), |r| {
        let (mut d, mut w) = (0.0, 0.0);
        for idx in r {
            let (ux, uz) = (x.node(idx), z.node(idx));
            if ux == uz {
                // only edges to changed forward neighbours contribute
                for_each_forward_edge(spec, idx, |nb, we| {
                    let (bx, bz) = (x.node(nb), z.node(nb));
                    if bx != bz {
                        d += we * edge_change(ux, bx, uz, bz);
                    }
                });
                continue;
            }
            for_each_forward_edge(spec, idx, |nb, we| {
                d += we * edge_change(ux, x.node(nb), uz, z.node(nb));
            });
            w += spec.node_weight(idx) * (form.eval(p, uz) - form.eval(p, ux));
        }
        k * d + hn * w
    })
}

/// `|uz - bz|^2 - |ux - bx|^2` as a product of sum and difference.
#[inline]
/// Same as [`energy_change`] when `x` and `z` differ only at nodes listed
/// in `nodes`; the cost is proportional to the list length.
pub fn energy_change_on(
    x: &VectorField,
    z: &VectorField,
    p: &Potential,
    form: PotentialForm,
    exec: Exec,
    nodes: &[usize],
) -> f64 {
    let spec = &x.spec;
    let k = 0.5 * coupling(spec);
    let hn = spec.cell_volume();
    chunked_sum(exec, nodes.len(), |r| {
        let (mut d, mut w) = (0.0, 0.0);
        for &idx in &nodes[r] {
            let (ux, uz) = (x.node(idx), z.node(idx));
            if ux == uz {
                continue;
            }
            for_each_edge(spec, idx, |nb, we| {
                let (bx, bz) = (x.node(nb), z.node(nb));
                // edges between two moved nodes are counted from the lower index
                if bx == bz || idx < nb {
                    d += we * edge_change(ux, bx, uz, bz);
                }
            });
            w += spec.node_weight(idx) * (form.eval(p, uz) - form.eval(p, ux));
        }
        k * d + hn * w
    })
}

fn edge_change(ux: &[f64], bx: &[f64], uz: &[f64], bz: &[f64]) -> f64 {
    let mut s = 0.0;
    for c in 0..ux.len() {
        let dx = ux[c] - bx[c];
        let dz = uz[c] - bz[c];
        s += (dz - dx) * (dz + dx);
    }
    s
}

/// Total discrete energy of the field.
pub fn energy(f: &VectorField, p: &Potential) -> f64 {
    energy_with(f, p, PotentialForm::Exact, Exec::default())
}

/// Gradient of the Dirichlet term at `idx` written into `out` (length `m`).
#[inline]
pub fn dirichlet_grad_at(f: &VectorField, idx: usize, k: f64, out: &mut [f64]) {
    out.fill(0.0);
    let u = f.node(idx);
    for_each_edge(&f.spec, idx, |nb, w| {
        for ((o, a), b) in out.iter_mut().zip(u).zip(f.node(nb)) {
            *o += k * w * (a - b);
        }
    });
}

/// Gradient of the discrete energy under `policy`, written into `out`
/// (`m` values per node; frozen nodes get zero). Returns the squared norm.
pub fn gradient_into(f: &VectorField, p: &Potential, policy: SingularityPolicy, exec: Exec, out: &mut [f64]) -> f64 {
    let spec = &f.spec;
    let m = f.m;
    let k = coupling(spec);
    let hn = spec.cell_volume();
    chunked_map_sum(exec, out, m, |r, chunk| {
        let mut wu = vec![0.0; m];
        let mut s = 0.0;
        for (local, idx) in r.enumerate() {
            let g = &mut chunk[local * m..(local + 1) * m];
            if f.dirichlet[idx] {
                g.fill(0.0);
                continue;
            }
            dirichlet_grad_at(f, idx, k, g);
            p.eval_grad_w(f.node(idx), policy, &mut wu);
            let lam = hn * spec.node_weight(idx);
            for (o, w) in g.iter_mut().zip(&wu) {
                *o += lam * w;
                s += *o * *o;
            }
        }
        s
    })
}

/// Gradient of the discrete energy as a field (same mask as `f`).
pub fn gradient(f: &VectorField, p: &Potential, policy: SingularityPolicy) -> VectorField {
    let mut out = VectorField::zeros(f.spec.clone(), f.m);
    out.dirichlet.clone_from(&f.dirichlet);
    gradient_into(f, p, policy, Exec::default(), &mut out.values);
    out
}

/// `y = A x` where `A` is the Hessian of the Dirichlet term restricted to
/// free nodes (frozen rows and columns act as zero).
pub fn apply_dirichlet_hessian(f: &VectorField, x: &[f64], exec: Exec, y: &mut [f64]) {
    let spec = &f.spec;
    let m = f.m;
    let k = coupling(spec);
    chunked_map_sum(exec, y, m, |r, chunk| {
        for (local, idx) in r.enumerate() {
            let o = &mut chunk[local * m..(local + 1) * m];
            o.fill(0.0);
            if f.dirichlet[idx] {
                continue;
            }
            let xi = &x[idx * m..(idx + 1) * m];
            for_each_edge(spec, idx, |nb, w| {
                let free = !f.dirichlet[nb];
                for c in 0..m {
                    let xb = if free { x[nb * m + c] } else { 0.0 };
                    o[c] += k * w * (xi[c] - xb);
                }
            });
        }
        0.0
    });
}

/// Deterministic dot product.
pub fn dot(exec: Exec, a: &[f64], b: &[f64], stride: usize) -> f64 {
    let nodes = a.len() / stride;
    chunked_sum(exec, nodes, |r| {
        let lo = r.start * stride;
        let hi = r.end * stride;
        a[lo..hi].iter().zip(&b[lo..hi]).map(|(x, y)| x * y).sum()
    })
}
