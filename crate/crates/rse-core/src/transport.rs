//! Exact discrete optimal transport.
//!
//! Two solvers, both returning an optimal basic solution:
//! - a transportation simplex (network simplex on the bipartite graph) using
//!   u–v potentials, Dantzig pricing and a spanning-tree basis;
//! - a shortest-augmenting-path assignment solver for the equal-size,
//!   uniform-weight case, where optimal plans are permutations.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Optimal plan for supplies `a`, demands `b` and cost matrix `c` (`n × m`).
pub fn transport_simplex(a: &[f64], b: &[f64], c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, m) = (a.len(), b.len());
    if c.nrows() != n || c.ncols() != m {
        return Err(Error::DimensionMismatch { expected: n * m, got: c.nrows() * c.ncols() });
    }
    if n == 1 || m == 1 {
        return Ok(DMatrix::from_fn(n, m, |i, j| if n == 1 { b[j] } else { a[i] }));
    }

    // Northwest-corner start: exactly n + m − 1 basic cells, some possibly at zero flow.
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(n + m - 1);
    let mut flow: Vec<f64> = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = supply[i].min(demand[j]).max(0.0);
        cells.push((i, j));
        flow.push(x);
        supply[i] -= x;
        demand[j] -= x;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if j == m - 1 || (i < n - 1 && supply[i] <= demand[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }

    let scale = c.iter().fold(0.0_f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale;
    let nodes = n + m;
    let max_pivots = 50 * nodes * nodes + 1000;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut seen = vec![false; nodes];
    let mut parent_edge = vec![usize::MAX; nodes];
    let mut queue = VecDeque::with_capacity(nodes);

    for _ in 0..max_pivots {
        for list in adj.iter_mut() {
            list.clear();
        }
        for (k, &(r, s)) in cells.iter().enumerate() {
            adj[r].push(k);
            adj[n + s].push(k);
        }

        // Potentials u_i + v_j = c_ij on the basis tree, rooted at row 0.
        seen.iter_mut().for_each(|s| *s = false);
        queue.clear();
        queue.push_back(0);
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for &k in &adj[node] {
                let (r, s) = cells[k];
                let other = if node < n { n + s } else { r };
                if !seen[other] {
                    seen[other] = true;
                    if other >= n {
                        v[s] = c[(r, s)] - u[r];
                    } else {
                        u[r] = c[(r, s)] - v[s];
                    }
                    queue.push_back(other);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Numerical("transport basis is not a spanning tree".into()));
        }

        let mut best = -tol;
        let mut entering = None;
        for r in 0..n {
            for s in 0..m {
                let rc = c[(r, s)] - u[r] - v[s];
                if rc < best {
                    best = rc;
                    entering = Some((r, s));
                }
            }
        }
        let Some((er, es)) = entering else {
            let mut plan = DMatrix::zeros(n, m);
            for (k, &(r, s)) in cells.iter().enumerate() {
                plan[(r, s)] += flow[k].max(0.0);
            }
            return Ok(plan);
        };

        // Tree path from row `er` to column `es`.
        seen.iter_mut().for_each(|s| *s = false);
        queue.clear();
        queue.push_back(er);
        seen[er] = true;
        parent_edge[er] = usize::MAX;
        let target = n + es;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &k in &adj[node] {
                let (r, s) = cells[k];
                let other = if node < n { n + s } else { r };
                if !seen[other] {
                    seen[other] = true;
                    parent_edge[other] = k;
                    queue.push_back(other);
                }
            }
        }
        // Walking back from the column alternates −, +, −, … ending with − at row `er`.
        let mut path = Vec::new();
        let mut node = target;
        while node != er {
            let k = parent_edge[node];
            path.push(k);
            let (r, s) = cells[k];
            node = if node >= n { r } else { n + s };
        }
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 && flow[k] < theta {
                theta = flow[k];
                leave = k;
            }
        }
        let theta = theta.max(0.0);
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                flow[k] -= theta;
            } else {
                flow[k] += theta;
            }
        }
        cells[leave] = (er, es);
        flow[leave] = theta;
    }
    Err(Error::LimitExceeded(format!("transport simplex exceeded {max_pivots} pivots")))
}

/// Minimum-cost perfect matching on a square cost matrix; returns `col_of_row`.
pub fn assignment(c: &DMatrix<f64>) -> Result<Vec<usize>> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(Error::NotSquare(n, c.ncols()));
    }
    // Shortest augmenting paths with potentials (1-based, column 0 is a sentinel).
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            if !delta.is_finite() {
                return Err(Error::Numerical("assignment costs are not finite".into()));
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[p[j] - 1] = j - 1;
    }
    Ok(col_of_row)
}
