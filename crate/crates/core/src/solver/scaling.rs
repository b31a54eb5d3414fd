//! Nesterov-Todd scalings for the product cone and the linear operators
//! (`W`, `W^T`, `W^-T`, `(W^T W)^-1`, Jordan division by the scaled point)
//! the predictor-corrector iteration applies through them.

use super::cone::{smat, svec_len, svec_of, Cone, ConeSpec};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub(crate) enum BlockScaling {
    Nonneg {
        /// w_i = sqrt(s_i / z_i)
        w: Vec<f64>,
    },
    Soc {
        beta: f64,
        /// Normalized NT point (J(wbar) = 1); `W^2 = beta^2 Q(wbar)`.
        wbar: DVector<f64>,
        /// Jordan square root of wbar; `W = beta Q(vq)`.
        vq: DVector<f64>,
    },
    Psd {
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        /// (R R^T)^-1, the inverse NT point
        snt_inv: DMatrix<f64>,
        lambda: DVector<f64>,
    },
}

pub(crate) struct Scaling {
    pub blocks: Vec<BlockScaling>,
    /// Scaled point lambda = W z = W^-T s over the full cone.
    pub lambda: DVector<f64>,
    /// Cholesky factors of the current PSD s-blocks (for step lengths).
    pub psd_chols_s: Vec<Cholesky<f64, Dyn>>,
    /// Cholesky factors of the current PSD z-blocks.
    pub psd_chols_z: Vec<Cholesky<f64, Dyn>>,
}

impl Scaling {
    /// The identity scaling (W = I); used only to factor the initialization
    /// system, so the scaled point and step-length factors stay empty.
    pub fn identity(spec: &ConeSpec) -> Self {
        let mut blocks = vec![];
        for (cone, _) in spec.iter_offsets() {
            match cone {
                Cone::Nonneg(n) => blocks.push(BlockScaling::Nonneg { w: vec![1.0; n] }),
                Cone::Soc(n) => {
                    let mut wbar = DVector::zeros(n);
                    wbar[0] = 1.0;
                    let vq = wbar.clone();
                    blocks.push(BlockScaling::Soc {
                        beta: 1.0,
                        wbar,
                        vq,
                    });
                }
                Cone::Psd(n) => {
                    blocks.push(BlockScaling::Psd {
                        r: DMatrix::identity(n, n),
                        rinv: DMatrix::identity(n, n),
                        snt_inv: DMatrix::identity(n, n),
                        lambda: DVector::from_element(n, 1.0),
                    });
                }
            }
        }
        Self {
            blocks,
            lambda: DVector::zeros(spec.total_len()),
            psd_chols_s: vec![],
            psd_chols_z: vec![],
        }
    }

    /// NT scaling of the strictly interior pair (s, z); `None` when a block
    /// is numerically on the boundary.
    pub fn compute(spec: &ConeSpec, s: &DVector<f64>, z: &DVector<f64>) -> Option<Self> {
        let mut blocks = vec![];
        let mut psd_chols_s = vec![];
        let mut psd_chols_z = vec![];
        for (cone, off) in spec.iter_offsets() {
            match cone {
                Cone::Nonneg(n) => {
                    let mut w = Vec::with_capacity(n);
                    for i in 0..n {
                        if s[off + i] <= 0.0 || z[off + i] <= 0.0 {
                            return None;
                        }
                        w.push((s[off + i] / z[off + i]).sqrt());
                    }
                    blocks.push(BlockScaling::Nonneg { w });
                }
                Cone::Soc(n) => {
                    let sb = s.rows(off, n).into_owned();
                    let zb = z.rows(off, n).into_owned();
                    let js = jquad(&sb);
                    let jz = jquad(&zb);
                    if js <= 0.0 || jz <= 0.0 || sb[0] <= 0.0 || zb[0] <= 0.0 {
                        return None;
                    }
                    let (sa, za) = (js.sqrt(), jz.sqrt());
                    let beta = (sa / za).sqrt();
                    let gamma = ((1.0 + sb.dot(&zb) / (sa * za)) * 0.5).sqrt();
                    let mut wbar = &sb / sa + jmul(&zb) / za;
                    wbar /= 2.0 * gamma;
                    // Jordan square root of wbar, J-unit by construction
                    let mut vq = wbar.clone();
                    vq[0] += 1.0;
                    vq /= (2.0 * vq[0]).sqrt();
                    blocks.push(BlockScaling::Soc { beta, wbar, vq });
                }
                Cone::Psd(n) => {
                    let len = svec_len(n);
                    let sm = smat(&s.as_slice()[off..off + len], n);
                    let zm = smat(&z.as_slice()[off..off + len], n);
                    let ls = Cholesky::new(sm)?;
                    let lz = Cholesky::new(zm)?;
                    let m = lz.l().transpose() * ls.l();
                    let svd = m.svd(true, true);
                    let u = svd.u.as_ref()?;
                    let vt = svd.v_t.as_ref()?;
                    if svd.singular_values.iter().any(|&sv| sv <= 0.0) {
                        return None;
                    }
                    let sig_inv_half =
                        DMatrix::from_diagonal(&svd.singular_values.map(|v| v.sqrt().recip()));
                    let r = ls.l() * vt.transpose() * &sig_inv_half;
                    let rinv = sig_inv_half * u.transpose() * lz.l().transpose();
                    let snt_inv = rinv.transpose() * &rinv;
                    blocks.push(BlockScaling::Psd {
                        r,
                        rinv,
                        snt_inv,
                        lambda: svd.singular_values.clone_owned(),
                    });
                    psd_chols_s.push(ls);
                    psd_chols_z.push(lz);
                }
            }
        }
        let mut out = Self {
            blocks,
            lambda: DVector::zeros(spec.total_len()),
            psd_chols_s,
            psd_chols_z,
        };
        out.lambda = out.apply_w(spec, z);
        Some(out)
    }

    fn dispatch(
        &self,
        spec: &ConeSpec,
        u: &DVector<f64>,
        mut f: impl FnMut(&BlockScaling, Cone, &[f64], &mut [f64]),
    ) -> DVector<f64> {
        let mut out = DVector::zeros(u.len());
        for ((cone, off), block) in spec.iter_offsets().zip(self.blocks.iter()) {
            let len = cone.len();
            let (src, dst) = (&u.as_slice()[off..off + len], &mut out.as_mut_slice()[off..off + len]);
            f(block, cone, src, dst);
        }
        out
    }

    /// `W u`.
    pub fn apply_w(&self, spec: &ConeSpec, u: &DVector<f64>) -> DVector<f64> {
        self.dispatch(spec, u, |block, cone, src, dst| match block {
            BlockScaling::Nonneg { w } => {
                for (d, (x, wi)) in dst.iter_mut().zip(src.iter().zip(w.iter())) {
                    *d = x * wi;
                }
            }
            BlockScaling::Soc { beta, vq, .. } => soc_apply(*beta, vq, src, dst),
            BlockScaling::Psd { r, .. } => {
                let n = psd_side(cone);
                let m = smat(src, n);
                let scaled = r.transpose() * m * r;
                dst.copy_from_slice(svec_of(&scaled).as_slice());
            }
        })
    }

    /// `W^T u` (differs from `W u` only on PSD blocks).
    pub fn apply_wt(&self, spec: &ConeSpec, u: &DVector<f64>) -> DVector<f64> {
        self.dispatch(spec, u, |block, cone, src, dst| match block {
            BlockScaling::Nonneg { w } => {
                for (d, (x, wi)) in dst.iter_mut().zip(src.iter().zip(w.iter())) {
                    *d = x * wi;
                }
            }
            BlockScaling::Soc { beta, vq, .. } => soc_apply(*beta, vq, src, dst),
            BlockScaling::Psd { r, .. } => {
                let n = psd_side(cone);
                let m = smat(src, n);
                let scaled = r * m * r.transpose();
                dst.copy_from_slice(svec_of(&scaled).as_slice());
            }
        })
    }

    /// `W^-T u`.
    pub fn apply_winv_t(&self, spec: &ConeSpec, u: &DVector<f64>) -> DVector<f64> {
        self.dispatch(spec, u, |block, cone, src, dst| match block {
            BlockScaling::Nonneg { w } => {
                for (d, (x, wi)) in dst.iter_mut().zip(src.iter().zip(w.iter())) {
                    *d = x / wi;
                }
            }
            BlockScaling::Soc { beta, vq, .. } => {
                let jv = jmul_slice(vq.as_slice());
                soc_apply(beta.recip(), &jv, src, dst);
            }
            BlockScaling::Psd { rinv, .. } => {
                let n = psd_side(cone);
                let m = smat(src, n);
                let scaled = rinv * m * rinv.transpose();
                dst.copy_from_slice(svec_of(&scaled).as_slice());
            }
        })
    }

    /// `(W^T W)^-1 u`.
    pub fn apply_wtw_inv(&self, spec: &ConeSpec, u: &DVector<f64>) -> DVector<f64> {
        self.dispatch(spec, u, |block, cone, src, dst| match block {
            BlockScaling::Nonneg { w } => {
                for (d, (x, wi)) in dst.iter_mut().zip(src.iter().zip(w.iter())) {
                    *d = x / (wi * wi);
                }
            }
            BlockScaling::Soc { beta, wbar, .. } => {
                // W^-2 = beta^-2 Q(J wbar)
                let q = jmul_slice(wbar.as_slice());
                soc_apply(beta.powi(-2), &q, src, dst);
            }
            BlockScaling::Psd { snt_inv, .. } => {
                let n = psd_side(cone);
                let m = smat(src, n);
                let scaled = snt_inv * m * snt_inv;
                dst.copy_from_slice(svec_of(&scaled).as_slice());
            }
        })
    }

    /// Jordan division by the scaled point: solves `lambda o u = d`.
    pub fn lambda_div(&self, spec: &ConeSpec, d: &DVector<f64>) -> DVector<f64> {
        let lam = &self.lambda;
        let mut out = DVector::zeros(d.len());
        for ((cone, off), block) in spec.iter_offsets().zip(self.blocks.iter()) {
            match cone {
                Cone::Nonneg(n) => {
                    for i in 0..n {
                        out[off + i] = d[off + i] / lam[off + i];
                    }
                }
                Cone::Soc(n) => {
                    let l0 = lam[off];
                    let mut l1d1 = 0.0;
                    let mut l1sq = 0.0;
                    for i in 1..n {
                        l1d1 += lam[off + i] * d[off + i];
                        l1sq += lam[off + i] * lam[off + i];
                    }
                    let u0 = (l0 * d[off] - l1d1) / (l0 * l0 - l1sq);
                    out[off] = u0;
                    for i in 1..n {
                        out[off + i] = (d[off + i] - u0 * lam[off + i]) / l0;
                    }
                }
                Cone::Psd(n) => {
                    let BlockScaling::Psd { lambda, .. } = block else {
                        unreachable!()
                    };
                    let len = svec_len(n);
                    let mut dm = smat(&d.as_slice()[off..off + len], n);
                    for p in 0..n {
                        for q in 0..n {
                            dm[(p, q)] *= 2.0 / (lambda[p] + lambda[q]);
                        }
                    }
                    out.rows_mut(off, len).copy_from(&svec_of(&dm));
                }
            }
        }
        out
    }
}

fn psd_side(cone: Cone) -> usize {
    match cone {
        Cone::Psd(n) => n,
        _ => unreachable!(),
    }
}

fn jquad(u: &DVector<f64>) -> f64 {
    u[0] * u[0] - u.rows(1, u.len() - 1).norm_squared()
}

/// Reflection J u = (u0, -u1).
fn jmul(u: &DVector<f64>) -> DVector<f64> {
    let mut out = -u.clone();
    out[0] = u[0];
    out
}

fn jmul_slice(u: &[f64]) -> DVector<f64> {
    let mut out = DVector::from_column_slice(u);
    for i in 1..out.len() {
        out[i] = -out[i];
    }
    out
}

/// Applies `scale * (2 g g^T - J)` to `src`.
fn soc_apply(scale: f64, g: &DVector<f64>, src: &[f64], dst: &mut [f64]) {
    let mut dot = 0.0;
    for (gi, xi) in g.iter().zip(src.iter()) {
        dot += gi * xi;
    }
    dst[0] = scale * (2.0 * g[0] * dot - src[0]);
    for i in 1..src.len() {
        dst[i] = scale * (2.0 * g[i] * dot + src[i]);
    }
}
