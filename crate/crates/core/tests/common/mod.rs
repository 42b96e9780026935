//! Reference solvers used as oracles by the integration tests. They share
//! no code with the library beyond the instance data types.

#![allow(dead_code)]

use capres::model::{generate_random, PriceStyle, RandomSpec, SourceStyle};
use capres::{Instance, Mat, Network};

const PIVOT_TOL: f64 = 1e-10;

pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Multipliers `y` of `A x = b` with `c − Aᵀy ≥ 0` at the optimum.
    pub duals: Vec<f64>,
}

/// Dense two-phase tableau simplex with Bland's rule for
/// `min cᵀx  s.t.  A x = b, x ≥ 0`. Returns `None` when infeasible.
pub fn solve_standard_lp(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<LpSolution> {
    let rows = a.len();
    let nv = c.len();
    let width = nv + rows + 1;
    let mut sign = vec![1.0; rows];
    let mut t = vec![vec![0.0; width]; rows];
    for i in 0..rows {
        sign[i] = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nv {
            t[i][j] = sign[i] * a[i][j];
        }
        t[i][nv + i] = 1.0;
        t[i][width - 1] = sign[i] * b[i];
    }
    let mut basis: Vec<usize> = (nv..nv + rows).collect();

    let phase1: Vec<f64> = (0..nv + rows).map(|j| if j < nv { 0.0 } else { 1.0 }).collect();
    run_phase(&mut t, &mut basis, &phase1, nv + rows);
    let infeas: f64 = basis.iter().zip(&t).filter(|(&bj, _)| bj >= nv).map(|(_, r)| r[width - 1]).sum();
    let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if infeas > 1e-9 * scale {
        return None;
    }
    // pivot remaining artificials out where possible
    for i in 0..rows {
        if basis[i] >= nv {
            if let Some(j) = (0..nv).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, rows));
    run_phase(&mut t, &mut basis, &phase2, nv);

    let mut x = vec![0.0; nv];
    for (i, &bj) in basis.iter().enumerate() {
        if bj < nv {
            x[bj] = t[i][width - 1];
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    let duals = (0..rows)
        .map(|i| {
            let yi: f64 = basis.iter().enumerate().map(|(r, &bj)| phase2[bj] * t[r][nv + i]).sum();
            sign[i] * yi
        })
        .collect();
    Some(LpSolution { x, value, duals })
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, col: usize) {
    let pv = t[r][col];
    for v in t[r].iter_mut() {
        *v /= pv;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[col];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
            }
        }
    }
    basis[r] = col;
}

fn run_phase(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) {
    let width = t[0].len();
    let rows = t.len();
    loop {
        let enter = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let z: f64 = cost[j] - (0..rows).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
            z < -1e-10
        });
        let Some(j) = enter else { return };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..rows {
            if t[i][j] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][j];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 || (ratio <= br + 1e-12 && basis[i] < basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        let (r, _) = best.expect("LP unbounded");
        pivot(t, basis, r, j);
    }
}

/// Optimal value of `min πᵀf  s.t.  A f + s = 0, 0 ≤ f ≤ c`, or `None` if
/// infeasible.
pub fn min_cost_flow_oracle(net: &Network<f64>, s: &[f64], price: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (n, m) = (net.node_count(), net.edge_count());
    let nv = 2 * m;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for j in 0..m {
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        row[m + j] = 1.0;
        a.push(row);
        b.push(net.capacity()[j]);
    }
    for i in 0..n - 1 {
        let mut row = vec![0.0; nv];
        for (j, e) in net.edges().iter().enumerate() {
            if e.head == i {
                row[j] += 1.0;
            }
            if e.tail == i {
                row[j] -= 1.0;
            }
        }
        a.push(row);
        b.push(-s[i]);
    }
    let mut c = price.to_vec();
    c.extend(std::iter::repeat_n(0.0, m));
    solve_standard_lp(&a, &b, &c).map(|sol| (sol.value, sol.x[..m].to_vec()))
}

pub struct CrOracle {
    pub value: f64,
    pub reservation: Vec<f64>,
    pub flows: Mat<f64>,
    /// Optimal scenario prices recovered from the LP duals.
    pub prices: Mat<f64>,
}

/// Solves the full capacity reservation LP over `(r, F)` densely.
pub fn cr_oracle(inst: &Instance<f64>) -> CrOracle {
    let net = inst.network();
    let (n, m, k) = (inst.node_count(), inst.edge_count(), inst.scenario_count());
    // variables: r, f (scenario-major), w (f + w = r), v (f + v = c)
    let nv = m + 3 * m * k;
    let f_idx = |c: usize, j: usize| m + c * m + j;
    let w_idx = |c: usize, j: usize| m + m * k + c * m + j;
    let v_idx = |c: usize, j: usize| m + 2 * m * k + c * m + j;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for c in 0..k {
        for j in 0..m {
            let mut row = vec![0.0; nv];
            row[f_idx(c, j)] = 1.0;
            row[w_idx(c, j)] = 1.0;
            row[j] = -1.0;
            a.push(row);
            b.push(0.0);
        }
    }
    for c in 0..k {
        for j in 0..m {
            let mut row = vec![0.0; nv];
            row[f_idx(c, j)] = 1.0;
            row[v_idx(c, j)] = 1.0;
            a.push(row);
            b.push(inst.capacity()[j]);
        }
    }
    for c in 0..k {
        let s = inst.source(c);
        for i in 0..n - 1 {
            let mut row = vec![0.0; nv];
            for (j, e) in net.edges().iter().enumerate() {
                if e.head == i {
                    row[f_idx(c, j)] += 1.0;
                }
                if e.tail == i {
                    row[f_idx(c, j)] -= 1.0;
                }
            }
            a.push(row);
            b.push(-s[i]);
        }
    }
    let mut cost = vec![0.0; nv];
    cost[..m].copy_from_slice(inst.price());
    let sol = solve_standard_lp(&a, &b, &cost).expect("oracle instance infeasible");

    let mut flows = Mat::zeros(m, k);
    let mut prices = Mat::zeros(m, k);
    for c in 0..k {
        for j in 0..m {
            flows.set(j, c, sol.x[f_idx(c, j)]);
            prices.set(j, c, (-sol.duals[c * m + j]).max(0.0));
        }
    }
    // edges with zero reservation may leave part of p unassigned; any split
    // of it keeps the prices optimal since those edges carry no flow
    for j in 0..m {
        let sum: f64 = prices.row(j).iter().sum();
        let deficit = inst.price()[j] - sum;
        if deficit > 0.0 {
            prices.set(j, 0, prices.get(j, 0) + deficit);
        }
    }
    CrOracle { value: sol.value, reservation: sol.x[..m].to_vec(), flows, prices }
}

/// Solves `A x = b` for a dense square system by Gaussian elimination with
/// partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Independent projection-based oracle for the flow prox:
/// Dykstra's alternating projections onto `{A f + s = 0}` and the box,
/// starting from `f̃ − π/ρ`.
pub fn prox_oracle(net: &Network<f64>, s: &[f64], price: &[f64], anchor: &[f64], rho: f64) -> Vec<f64> {
    let (n, m) = (net.node_count(), net.edge_count());
    let edges = net.edges();
    let apply = |f: &[f64]| {
        let mut out = vec![0.0; n];
        for (j, e) in edges.iter().enumerate() {
            out[e.head] += f[j];
            out[e.tail] -= f[j];
        }
        out
    };
    let mut lap = vec![vec![0.0; n - 1]; n - 1];
    for e in edges {
        for (u, su) in [(e.head, 1.0), (e.tail, -1.0)] {
            for (v, sv) in [(e.head, 1.0), (e.tail, -1.0)] {
                if u < n - 1 && v < n - 1 {
                    lap[u][v] += su * sv;
                }
            }
        }
    }
    let affine = |v: &[f64]| {
        let mut r = apply(v);
        for i in 0..n {
            r[i] += s[i];
        }
        r.pop();
        let mut lam = dense_solve(lap.clone(), r);
        lam.push(0.0);
        let mut out = v.to_vec();
        for (j, e) in edges.iter().enumerate() {
            out[j] -= lam[e.head] - lam[e.tail];
        }
        out
    };
    let cap = net.capacity();
    let mut x: Vec<f64> = anchor.iter().zip(price).map(|(f, p)| f - p / rho).collect();
    let mut p = vec![0.0; m];
    let mut q = vec![0.0; m];
    for _ in 0..200_000 {
        let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let y = affine(&xp);
        for j in 0..m {
            p[j] = xp[j] - y[j];
        }
        let yq: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let next: Vec<f64> = yq.iter().zip(cap).map(|(&v, &c)| v.clamp(0.0, c)).collect();
        for j in 0..m {
            q[j] = yq[j] - next[j];
        }
        let change = next.iter().zip(&x).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        let gap = next.iter().zip(&y).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        x = next;
        if change < 1e-14 && gap < 1e-12 {
            break;
        }
    }
    x
}

/// Small random instance with uniformly drawn prices.
pub fn tiny_instance(n: usize, m: usize, k: usize, discrete: bool, seed: u64) -> Instance<f64> {
    generate_random(&RandomSpec {
        nodes: n,
        edges: m,
        scenarios: k,
        sources: if discrete { SourceStyle::Discrete } else { SourceStyle::Continuous },
        prices: PriceStyle::Uniform,
        seed,
    })
    .unwrap()
}

/// `pᵀ max_k f^(k)`.
pub fn reservation_cost(price: &[f64], flows: &Mat<f64>) -> f64 {
    let r = flows.row_max();
    price.iter().zip(&r).map(|(a, b)| a * b).sum()
}
