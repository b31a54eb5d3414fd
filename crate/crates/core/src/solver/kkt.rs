//! Newton-system assembly and solves for the interior-point loop.
//!
//! The Schur matrix `H = G' (W'W)^-1 G` is formed blockwise, exploiting the
//! sparsity of the constraint columns: PSD blocks via per-variable outer
//! products against the inverse NT point, the second-order cone via a cached
//! Gram matrix plus a rank-two correction, linear rows directly.

use super::cone::{svec_len, Cone, ConeSpec};
use super::scaling::{BlockScaling, Scaling};
use crate::linalg::regularized_cholesky;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::collections::HashMap;

/// Column-major sparse real matrix.
#[derive(Debug, Clone, Default)]
pub struct SparseCols {
    nrows: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl SparseCols {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            cols: vec![vec![]; ncols],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.cols.len());
        if val != 0.0 {
            self.cols[col].push((row, val));
        }
    }

    pub fn column(&self, col: usize) -> &[(usize, f64)] {
        &self.cols[col]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nrows);
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj != 0.0 {
                for &(r, v) in col {
                    out[r] += v * xj;
                }
            }
        }
        out
    }

    /// `M' y`.
    pub fn tr_mul_vec(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.cols.len());
        for (j, col) in self.cols.iter().enumerate() {
            let mut acc = 0.0;
            for &(r, v) in col {
                acc += v * y[r];
            }
            out[j] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.cols.len());
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                out[(r, j)] += v;
            }
        }
        out
    }
}

enum BlockData {
    Nonneg {
        /// per local row: (column, value) entries
        rows: Vec<Vec<(usize, f64)>>,
    },
    Soc {
        /// participating columns with their (local row, value) entries
        cols: Vec<(usize, Vec<(usize, f64)>)>,
        /// cached G_block' G_block as symmetric triplets (i <= j in col order)
        gram: Vec<(usize, usize, f64)>,
    },
    Psd {
        side: usize,
        /// participating columns with matrix-form triplets (p >= q, value)
        vars: Vec<(usize, Vec<(usize, usize, f64)>)>,
        /// per column: flat column-major index `q*n + p` with the inner
        /// product weight (off-diagonal entries carry weight 2)
        weights: Vec<Vec<(usize, f64)>>,
    },
}

/// Factored Newton-system solver for one conic problem.
pub struct KktSolver {
    blocks: Vec<BlockData>,
    a_dense: DMatrix<f64>,
    h: DMatrix<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    hinv_at: DMatrix<f64>,
    chol_y: Option<Cholesky<f64, Dyn>>,
    scratch_flat: Vec<f64>,
}

impl KktSolver {
    pub fn new(g: &SparseCols, a: &SparseCols, spec: &ConeSpec) -> Self {
        let dim = g.ncols();
        let offsets: Vec<(Cone, usize)> = spec.iter_offsets().collect();
        // split every column's entries into per-block local entries
        let mut per_block: Vec<Vec<(usize, Vec<(usize, f64)>)>> = vec![vec![]; offsets.len()];
        for j in 0..dim {
            let mut split: Vec<Vec<(usize, f64)>> = vec![vec![]; offsets.len()];
            for &(r, v) in g.column(j) {
                let bi = offsets
                    .partition_point(|&(_, off)| off <= r)
                    .checked_sub(1)
                    .expect("row before first block");
                split[bi].push((r - offsets[bi].1, v));
            }
            for (bi, entries) in split.into_iter().enumerate() {
                if !entries.is_empty() {
                    per_block[bi].push((j, entries));
                }
            }
        }
        let mut blocks = vec![];
        let mut max_side = 0usize;
        for ((cone, _), cols) in offsets.iter().zip(per_block.into_iter()) {
            match *cone {
                Cone::Nonneg(n) => {
                    let mut rows = vec![vec![]; n];
                    for (j, entries) in &cols {
                        for &(r, v) in entries {
                            rows[r].push((*j, v));
                        }
                    }
                    blocks.push(BlockData::Nonneg { rows });
                }
                Cone::Soc(n) => {
                    let mut rows: Vec<Vec<(usize, f64)>> = vec![vec![]; n];
                    for (j, entries) in &cols {
                        for &(r, v) in entries {
                            rows[r].push((*j, v));
                        }
                    }
                    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
                    for row in &rows {
                        for (ai, &(i, vi)) in row.iter().enumerate() {
                            for &(j, vj) in row.iter().skip(ai) {
                                let key = if i <= j { (i, j) } else { (j, i) };
                                *acc.entry(key).or_insert(0.0) += vi * vj;
                            }
                        }
                    }
                    let gram = acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
                    blocks.push(BlockData::Soc { cols, gram });
                }
                Cone::Psd(n) => {
                    max_side = max_side.max(n);
                    // local svec index -> (i, j) with i >= j
                    let mut coords = Vec::with_capacity(svec_len(n));
                    for q in 0..n {
                        for p in q..n {
                            coords.push((p, q));
                        }
                    }
                    let vars: Vec<(usize, Vec<(usize, usize, f64)>)> = cols
                        .into_iter()
                        .map(|(j, entries)| {
                            let trips = entries
                                .into_iter()
                                .map(|(k, v)| {
                                    let (p, q) = coords[k];
                                    let val = if p == q { v } else { v / super::cone::SQRT2 };
                                    (p, q, val)
                                })
                                .collect();
                            (j, trips)
                        })
                        .collect();
                    let weights = vars
                        .iter()
                        .map(|(_, trips)| {
                            trips
                                .iter()
                                .map(|&(p, q, val)| {
                                    let w = if p == q { val } else { 2.0 * val };
                                    (q * n + p, w)
                                })
                                .collect()
                        })
                        .collect();
                    blocks.push(BlockData::Psd {
                        side: n,
                        vars,
                        weights,
                    });
                }
            }
        }
        Self {
            blocks,
            a_dense: a.to_dense(),
            h: DMatrix::zeros(dim, dim),
            chol: None,
            hinv_at: DMatrix::zeros(0, 0),
            chol_y: None,
            scratch_flat: vec![0.0; (max_side * max_side).max(1)],
        }
    }

    /// Forms and factors `H = G'(W'W)^-1 G` (plus the equality Schur
    /// complement); `scaling` blocks must match the cone layout.
    pub fn factor(&mut self, scaling: &Scaling) -> Result<(), String> {
        self.h.fill(0.0);
        for (data, sc) in self.blocks.iter().zip(scaling.blocks.iter()) {
            match (data, sc) {
                (BlockData::Nonneg { rows }, BlockScaling::Nonneg { w }) => {
                    for (row, wi) in rows.iter().zip(w.iter()) {
                        let coef = 1.0 / (wi * wi);
                        for (ai, &(i, vi)) in row.iter().enumerate() {
                            for &(j, vj) in row.iter().skip(ai) {
                                let add = coef * vi * vj;
                                self.h[(i, j)] += add;
                                if i != j {
                                    self.h[(j, i)] += add;
                                }
                            }
                        }
                    }
                }
                (BlockData::Soc { cols, gram }, BlockScaling::Soc { beta, wbar, .. }) => {
                    // W^-2 = b2 Q(J wbar) = b2 (2qq' - J), so the block adds
                    // b2 (G'G + 2(G'q)(G'q)' - 2 t t') with t the first row of G
                    let b2 = beta.powi(-2);
                    for &(i, j, v) in gram {
                        self.h[(i, j)] += b2 * v;
                        if i != j {
                            self.h[(j, i)] += b2 * v;
                        }
                    }
                    let mut q = wbar.clone();
                    for k in 1..q.len() {
                        q[k] = -q[k];
                    }
                    let mut u = vec![0.0; cols.len()];
                    let mut t = vec![0.0; cols.len()];
                    for (k, (_, entries)) in cols.iter().enumerate() {
                        for &(r, val) in entries {
                            u[k] += val * q[r];
                            if r == 0 {
                                t[k] += val;
                            }
                        }
                    }
                    for (ki, &(i, _)) in cols.iter().enumerate() {
                        for (kj, &(j, _)) in cols.iter().enumerate() {
                            self.h[(i, j)] +=
                                b2 * (2.0 * u[ki] * u[kj] - 2.0 * t[ki] * t[kj]);
                        }
                    }
                }
                (
                    BlockData::Psd {
                        side,
                        vars,
                        weights,
                    },
                    BlockScaling::Psd { snt_inv, .. },
                ) => {
                    let n = *side;
                    let s = snt_inv.as_slice(); // column-major n x n, symmetric
                    let bflat = &mut self.scratch_flat;
                    let mut f = DMatrix::<f64>::zeros(n, n);
                    let mut tmp = DMatrix::<f64>::zeros(n, n);
                    let mut prod = DMatrix::<f64>::zeros(n, n);
                    for (kj, (j, trips_j)) in vars.iter().enumerate() {
                        // B = S^-1 F_j S^-1 into a flat column-major buffer;
                        // rank-one pieces for sparse F_j, two dense products
                        // once F_j has more than ~2n entries
                        if trips_j.len() > 2 * n {
                            for &(p, q, val) in trips_j {
                                f[(p, q)] = val;
                                f[(q, p)] = val;
                            }
                            tmp.gemm(1.0, &f, snt_inv, 0.0);
                            prod.gemm(1.0, snt_inv, &tmp, 0.0);
                            bflat[..n * n].copy_from_slice(prod.as_slice());
                            for &(p, q, _) in trips_j {
                                f[(p, q)] = 0.0;
                                f[(q, p)] = 0.0;
                            }
                        } else {
                            bflat[..n * n].fill(0.0);
                            for &(p, q, val) in trips_j {
                                // B += val (s_p s_q' + [p != q] s_q s_p')
                                let sp = &s[p * n..p * n + n];
                                let sq = &s[q * n..q * n + n];
                                for bcol in 0..n {
                                    let c1 = val * sq[bcol];
                                    let c2 = if p == q { 0.0 } else { val * sp[bcol] };
                                    let out = &mut bflat[bcol * n..bcol * n + n];
                                    for (a, o) in out.iter_mut().enumerate() {
                                        *o += c1 * sp[a] + c2 * sq[a];
                                    }
                                }
                            }
                        }
                        let bref = &bflat[..n * n];
                        for ((i, _), wts) in vars.iter().zip(weights.iter()).take(kj + 1) {
                            let mut acc = 0.0;
                            for &(idx, w) in wts {
                                acc += w * bref[idx];
                            }
                            self.h[(*i, *j)] += acc;
                            if i != j {
                                self.h[(*j, *i)] += acc;
                            }
                        }
                    }
                }
                _ => unreachable!("scaling blocks out of sync with cone layout"),
            }
        }
        let (chol, _reg) =
            regularized_cholesky(&self.h).ok_or_else(|| "Schur matrix factorization failed".to_string())?;
        if self.a_dense.nrows() > 0 {
            let mut hinv_at = self.a_dense.transpose();
            for mut col in hinv_at.column_iter_mut() {
                let solved = chol.solve(&col.clone_owned());
                col.copy_from(&solved);
            }
            let y = &self.a_dense * &hinv_at;
            let sym = (&y + y.transpose()) * 0.5;
            let (chol_y, _) = regularized_cholesky(&sym)
                .ok_or_else(|| "equality Schur complement factorization failed".to_string())?;
            self.hinv_at = hinv_at;
            self.chol_y = Some(chol_y);
        }
        self.chol = Some(chol);
        Ok(())
    }

    fn solve_once(&self, rx: &DVector<f64>, ry: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let chol = self.chol.as_ref().expect("factor before solve");
        if self.a_dense.nrows() == 0 {
            return (chol.solve(rx), DVector::zeros(0));
        }
        let chol_y = self.chol_y.as_ref().unwrap();
        let t = chol.solve(rx);
        let dy = chol_y.solve(&(&self.a_dense * &t - ry));
        let dx = chol.solve(&(rx - self.a_dense.transpose() * &dy));
        (dx, dy)
    }

    /// Solves the saddle system `H dx + A' dy = rx`, `A dx = ry` with one
    /// round of iterative refinement against the unregularized `H`.
    pub fn solve(&self, rx: &DVector<f64>, ry: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut dx, mut dy) = self.solve_once(rx, ry);
        let res_x = if self.a_dense.nrows() == 0 {
            rx - &self.h * &dx
        } else {
            rx - &self.h * &dx - self.a_dense.transpose() * &dy
        };
        let res_y = if self.a_dense.nrows() == 0 {
            DVector::zeros(0)
        } else {
            ry - &self.a_dense * &dx
        };
        let (ddx, ddy) = self.solve_once(&res_x, &res_y);
        dx += ddx;
        dy += ddy;
        (dx, dy)
    }
}
