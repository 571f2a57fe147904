//! Exhaustive oracles for small instances. They share no search code with the
//! solvers they check.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;
use crate::spectral::eigensystem;

/// Largest vertex count accepted by [`brute_maxcut`].
pub const MAXCUT_VERTEX_LIMIT: usize = 24;
/// Largest subset exponent accepted by the enumeration oracles.
pub const SUBSET_LIMIT: usize = 24;

/// Maximum cut by enumerating the `2^(n−1)` bipartitions with vertex 0 fixed.
pub fn brute_maxcut(n: usize, edges: &[(usize, usize)]) -> Result<u64> {
    if n > MAXCUT_VERTEX_LIMIT {
        return Err(Error::LimitExceeded(format!("{n} vertices")));
    }
    if edges.iter().any(|&(a, b)| a >= n || b >= n) {
        return Err(Error::InvalidInput("edge endpoint out of range".into()));
    }
    if n <= 1 {
        return Ok(0);
    }
    let best = (0u32..1 << (n - 1))
        .map(|mask| {
            let side = |v: usize| v > 0 && (mask >> (v - 1)) & 1 == 1;
            edges.iter().filter(|&&(a, b)| side(a) != side(b)).count() as u64
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// Does keeping exactly the pairs `kept` leave the instance ill-posed?
///
/// Ill-posed means some vertex of `supp β` lies in a bipartite component of the
/// kept graph on `supp β` (loops count as odd cycles), or some zero coordinate
/// has no kept pair to `supp β`.
fn ill_posed(d: usize, star: &[bool], kept: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); d];
    let mut looped = vec![false; d];
    let mut linked = vec![false; d];
    for &(i, j) in kept {
        if i == j {
            looped[i] = true;
        } else {
            if star[i] && star[j] {
                adj[i].push(j);
                adj[j].push(i);
            }
            linked[i] |= star[j];
            linked[j] |= star[i];
        }
    }
    if (0..d).any(|k| !star[k] && !linked[k]) {
        return true;
    }
    let mut color = vec![u8::MAX; d];
    for s in 0..d {
        if !star[s] || color[s] != u8::MAX {
            continue;
        }
        color[s] = 0;
        let mut queue = VecDeque::from([s]);
        let mut odd = false;
        while let Some(v) = queue.pop_front() {
            odd |= looped[v];
            for &w in &adj[v] {
                if color[w] == u8::MAX {
                    color[w] = 1 - color[v];
                    queue.push_back(w);
                } else if color[w] == color[v] {
                    odd = true;
                }
            }
        }
        if !odd {
            return true;
        }
    }
    false
}

/// Matrix-completion `RSE²`: the least probability mass whose removal makes the
/// instance ill-posed, by enumerating every subset of the support pairs.
///
/// Pairs are undirected; an off-diagonal pair carries `P_ij + P_ji`. Removed
/// mass is summed in ascending order.
pub fn brute_mc_rse(p: &DMatrix<f64>, beta_star: &DVector<f64>) -> Result<f64> {
    let d = p.nrows();
    if p.ncols() != d || beta_star.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: beta_star.len() });
    }
    let star: Vec<bool> = beta_star.iter().map(|&b| b != 0.0).collect();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in i..d {
            if p[(i, j)] > 0.0 {
                pairs.push((i, j, if i == j { p[(i, j)] } else { p[(i, j)] + p[(j, i)] }));
            }
        }
    }
    if pairs.len() > SUBSET_LIMIT {
        return Err(Error::LimitExceeded(format!("{} support pairs", pairs.len())));
    }
    let mut best = f64::INFINITY;
    let mut kept = Vec::with_capacity(pairs.len());
    let mut removed = Vec::with_capacity(pairs.len());
    for mask in 0u32..1 << pairs.len() {
        kept.clear();
        removed.clear();
        for (k, &(i, j, m)) in pairs.iter().enumerate() {
            if (mask >> k) & 1 == 1 {
                kept.push((i, j));
            } else {
                removed.push(m);
            }
        }
        removed.sort_by(f64::total_cmp);
        let mass: f64 = removed.iter().fold(0.0, |s, x| s + x);
        if mass < best && ill_posed(d, &star, &kept) {
            best = mass;
        }
    }
    Ok(best)
}

/// Empirical phase-retrieval `RSE²`: each point moves either to `β★⊥` (cost
/// `w_i⟨x_i, β★/‖β★‖⟩²`) or to a shared hyperplane `v⊥`; for a fixed group `S`
/// of the latter the best `v` costs `λ_min(Σ_i∈S w_i x_i x_iᵀ)`.
pub fn brute_phase_rse_sq(e: &EmpiricalMeasure, beta_star: &DVector<f64>) -> Result<f64> {
    let n = e.len();
    if n > SUBSET_LIMIT {
        return Err(Error::LimitExceeded(format!("{n} support points")));
    }
    if beta_star.len() != e.dim() || beta_star.norm() == 0.0 {
        return Err(Error::InvalidInput("beta_star must be nonzero with matching dimension".into()));
    }
    let u = beta_star.normalize();
    let cost_beta: Vec<f64> = (0..n).map(|i| e.weights()[i] * e.point(i).dot(&u).powi(2)).collect();
    let d = e.dim();
    let mut best = f64::INFINITY;
    for mask in 0u32..1 << n {
        let mut sigma = DMatrix::zeros(d, d);
        let mut rest = 0.0;
        for i in 0..n {
            if (mask >> i) & 1 == 1 {
                let x = e.point(i);
                sigma += &x * x.transpose() * e.weights()[i];
            } else {
                rest += cost_beta[i];
            }
        }
        let lam = if mask == 0 { 0.0 } else { eigensystem(&sigma)?.lambda_min().max(0.0) };
        best = best.min(lam + rest);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_maxcuts() {
        assert_eq!(brute_maxcut(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(), 2);
        assert_eq!(brute_maxcut(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap(), 4);
        let k4: Vec<_> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
        assert_eq!(brute_maxcut(4, &k4).unwrap(), 4);
        assert_eq!(brute_maxcut(1, &[]).unwrap(), 0);
    }

    #[test]
    fn triangle_rse() {
        let s = 1.0 / 6.0;
        let p = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { s });
        let r = brute_mc_rse(&p, &DVector::from_element(3, 1.0)).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_coordinate_example() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.0]);
        let r = brute_mc_rse(&p, &DVector::from_column_slice(&[1.0, 0.0])).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phase_single_point() {
        let e = EmpiricalMeasure::from_rows(&[vec![1.0, 1.0]], None).unwrap();
        let r = brute_phase_rse_sq(&e, &DVector::from_column_slice(&[1.0, 0.0])).unwrap();
        assert!(r.abs() < 1e-14);
    }
}
