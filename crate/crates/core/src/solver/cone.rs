//! Cone descriptions and the symmetric-cone primitives (scaled
//! vectorization, Jordan products, step lengths) used by the interior-point
//! loop.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// One cone block in the product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// Nonnegative orthant of the given length.
    Nonneg(usize),
    /// Second-order cone `{ (t, u) : ||u|| <= t }` of the given total length.
    Soc(usize),
    /// Real symmetric PSD cone of side `n`, stored as svec of length n(n+1)/2.
    Psd(usize),
}

impl Cone {
    /// Storage length of the block.
    pub fn len(&self) -> usize {
        match *self {
            Cone::Nonneg(n) => n,
            Cone::Soc(n) => n,
            Cone::Psd(n) => svec_len(n),
        }
    }

    /// Barrier degree of the block.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg(n) => n,
            Cone::Soc(_) => 1,
            Cone::Psd(n) => n,
        }
    }
}

/// Storage length of svec for side `n`.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// svec index of entry (i, j) with i >= j, column-major lower triangle.
pub fn svec_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i >= j && i < n);
    j * (2 * n - j + 1) / 2 + (i - j)
}

/// Inverse of svec: dense symmetric matrix from the scaled vector.
pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            if i == j {
                out[(i, j)] = v[k];
            } else {
                out[(i, j)] = v[k] / SQRT2;
                out[(j, i)] = v[k] / SQRT2;
            }
            k += 1;
        }
    }
    out
}

/// Scaled vectorization: `svec(X)' svec(Y) = tr(XY)` for symmetric X, Y.
pub fn svec_of(mat: &DMatrix<f64>) -> DVector<f64> {
    let n = mat.nrows();
    let mut out = DVector::zeros(svec_len(n));
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            out[k] = if i == j {
                mat[(i, j)]
            } else {
                SQRT2 * 0.5 * (mat[(i, j)] + mat[(j, i)])
            };
            k += 1;
        }
    }
    out
}

/// Product-cone layout: blocks with their storage offsets.
#[derive(Debug, Clone)]
pub struct ConeSpec {
    pub blocks: Vec<Cone>,
}

impl ConeSpec {
    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(Cone::len).sum()
    }

    pub fn degree(&self) -> usize {
        self.blocks.iter().map(Cone::degree).sum()
    }

    /// Iterates `(cone, offset)` pairs.
    pub fn iter_offsets(&self) -> impl Iterator<Item = (Cone, usize)> + '_ {
        let mut off = 0;
        self.blocks.iter().map(move |&c| {
            let item = (c, off);
            off += c.len();
            item
        })
    }

    /// The scaled identity element `e` of the product cone.
    pub fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.total_len());
        for (cone, off) in self.iter_offsets() {
            match cone {
                Cone::Nonneg(n) => {
                    for i in 0..n {
                        e[off + i] = 1.0;
                    }
                }
                Cone::Soc(_) => e[off] = 1.0,
                Cone::Psd(n) => {
                    for j in 0..n {
                        e[off + svec_index(j, j, n)] = 1.0;
                    }
                }
            }
        }
        e
    }

    /// Largest `theta` by which the point violates interiority:
    /// negative values mean `u` is safely interior.
    pub fn interior_violation(&self, u: &DVector<f64>) -> f64 {
        let mut theta = f64::NEG_INFINITY;
        for (cone, off) in self.iter_offsets() {
            let v = match cone {
                Cone::Nonneg(n) => -(0..n).map(|i| u[off + i]).fold(f64::INFINITY, f64::min),
                Cone::Soc(n) => {
                    let t = u[off];
                    let norm: f64 = (1..n).map(|i| u[off + i] * u[off + i]).sum::<f64>().sqrt();
                    norm - t
                }
                Cone::Psd(n) => {
                    let m = smat(&u.as_slice()[off..off + svec_len(n)], n);
                    -SymmetricEigen::new(m)
                        .eigenvalues
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min)
                }
            };
            theta = theta.max(v);
        }
        theta
    }

    /// Shifts `u` to `u + (1 + theta) e` when it is not safely interior.
    pub fn shift_to_interior(&self, u: &mut DVector<f64>) {
        let theta = self.interior_violation(u);
        if theta >= -1e-3 {
            let e = self.identity();
            *u += e * (1.0 + theta.max(0.0));
        }
    }

    /// Jordan product `u o v` of the product cone.
    pub fn jordan_product(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.total_len());
        for (cone, off) in self.iter_offsets() {
            match cone {
                Cone::Nonneg(n) => {
                    for i in 0..n {
                        out[off + i] = u[off + i] * v[off + i];
                    }
                }
                Cone::Soc(n) => {
                    let (u0, v0) = (u[off], v[off]);
                    let mut dot = 0.0;
                    for i in 0..n {
                        dot += u[off + i] * v[off + i];
                    }
                    out[off] = dot;
                    for i in 1..n {
                        out[off + i] = u0 * v[off + i] + v0 * u[off + i];
                    }
                }
                Cone::Psd(n) => {
                    let len = svec_len(n);
                    let a = smat(&u.as_slice()[off..off + len], n);
                    let b = smat(&v.as_slice()[off..off + len], n);
                    let prod = (&a * &b + &b * &a) * 0.5;
                    out.rows_mut(off, len).copy_from(&svec_of(&prod));
                }
            }
        }
        out
    }

    /// Largest `t >= 0` such that `u + t du` stays in the cone
    /// (`f64::INFINITY` when the ray never leaves). For PSD blocks the
    /// caller supplies the Cholesky factors of the current blocks.
    pub fn max_step(
        &self,
        u: &DVector<f64>,
        du: &DVector<f64>,
        psd_chols: &[Cholesky<f64, Dyn>],
    ) -> f64 {
        let mut step = f64::INFINITY;
        let mut psd_idx = 0;
        for (cone, off) in self.iter_offsets() {
            match cone {
                Cone::Nonneg(n) => {
                    for i in 0..n {
                        if du[off + i] < 0.0 {
                            step = step.min(-u[off + i] / du[off + i]);
                        }
                    }
                }
                Cone::Soc(n) => {
                    step = step.min(soc_max_step(
                        &u.as_slice()[off..off + n],
                        &du.as_slice()[off..off + n],
                    ));
                }
                Cone::Psd(n) => {
                    let len = svec_len(n);
                    let dm = smat(&du.as_slice()[off..off + len], n);
                    let l = psd_chols[psd_idx].l_dirty().lower_triangle();
                    psd_idx += 1;
                    // lambda_min of L^-1 dM L^-T bounds the step along dM
                    let w = l
                        .solve_lower_triangular(&dm)
                        .expect("positive-definite factor");
                    let wt = l
                        .solve_lower_triangular(&w.transpose())
                        .expect("positive-definite factor");
                    let sym = (&wt + wt.transpose()) * 0.5;
                    let lmin = SymmetricEigen::new(sym)
                        .eigenvalues
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min);
                    if lmin < 0.0 {
                        step = step.min(-1.0 / lmin);
                    }
                }
            }
        }
        step
    }
}

/// Largest feasible step inside one second-order cone.
fn soc_max_step(u: &[f64], du: &[f64]) -> f64 {
    // stay in { j(v) >= 0, v0 >= 0 } with j(v) = v0^2 - ||v1||^2
    let ju = jquad(u);
    let jdu = jquad(du);
    let cross = 2.0 * (u[0] * du[0] - dot_tail(u, du));
    let mut step = f64::INFINITY;
    // roots of jdu t^2 + cross t + ju = 0
    let roots = quadratic_roots(jdu, cross, ju);
    for r in roots {
        if r > 1e-300 && u[0] + r * du[0] >= -1e-300 {
            step = step.min(r);
        }
    }
    if du[0] < 0.0 {
        step = step.min(-u[0] / du[0]);
    }
    step
}

fn jquad(u: &[f64]) -> f64 {
    u[0] * u[0] - u[1..].iter().map(|x| x * x).sum::<f64>()
}

fn dot_tail(u: &[f64], v: &[f64]) -> f64 {
    u[1..].iter().zip(v[1..].iter()).map(|(a, b)| a * b).sum()
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-300 {
        if b.abs() < 1e-300 {
            return vec![];
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    // numerically stable pairing
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = vec![];
    if q.abs() > 0.0 {
        roots.push(c / q);
    }
    roots.push(q / a);
    roots
}
