use super::{CompressionParams, ProxyCircle, RankRule, balance, col_id, hstack, row_id};
use crate::error::{Error, Result};
use crate::geometry::Panelization;
use crate::linalg::{CMat, Lu, frob, rows, submatrix, vstack};
use crate::point::Point;
use faer::MatRef;
use num_complex::Complex64 as C64;

/// Node indices of each corner set and of the remaining smooth part.
pub fn corner_split(pan: &Panelization) -> (Vec<Vec<usize>>, Vec<usize>) {
    let sets: Vec<Vec<usize>> = pan.corner_sets.iter().map(|c| c.nodes.clone()).filter(|v| !v.is_empty()).collect();
    (sets, pan.smooth_nodes())
}

/// Compressed inverse of `A0` with the refined corner unknowns eliminated
/// through per-corner interpolative decompositions.
pub struct CornerCompression {
    n: usize,
    pub corner_sets: Vec<Vec<usize>>,
    /// All corner indices, concatenated in set order.
    pub corner: Vec<usize>,
    pub smooth: Vec<usize>,
    pub ranks: Vec<usize>,
    /// Largest relative ID residual over all corner compressions.
    pub id_residual: f64,
    acc_inv: CMat,
    acc_inv_u: CMat,
    d_cc: CMat,
    v_star: CMat,
    compressed: Lu,
}

impl CornerCompression {
    pub fn build(a0: &CMat, pan: &Panelization, omega: f64, params: &CompressionParams) -> Result<Self> {
        params.validate()?;
        let n = a0.nrows();
        let (sets, smooth) = corner_split(pan);
        let corner: Vec<usize> = sets.iter().flatten().copied().collect();
        let nc = corner.len();
        let ns = smooth.len();

        let mut ranks = Vec::new();
        let mut u_blocks = Vec::new();
        let mut v_blocks = Vec::new();
        let mut bcs_rows = Vec::new();
        let mut bsc_cols = Vec::new();
        let mut id_residual: f64 = 0.0;
        for (k, set) in sets.iter().enumerate() {
            let pos = pan.corner_sets.iter().find(|c| c.nodes == *set).map(|c| c.position).unwrap_or(pan.nodes[set[0]]);
            let r0 = set.iter().map(|&i| (pan.nodes[i] - pos).norm()).fold(0.0, f64::max);
            let circle = ProxyCircle::full(pos, params.proxy_scale * r0, params.n_proxy);
            for (kk, other) in sets.iter().enumerate() {
                if kk != k && other.iter().any(|&i| circle.contains(pan.nodes[i])) {
                    return Err(Error::Config(format!("proxy circle of corner {k} overlaps the refined nodes of corner {kk}")));
                }
            }
            let (near, far): (Vec<usize>, Vec<usize>) = smooth.iter().partition(|&&i| circle.contains(pan.nodes[i]));
            let x: Vec<Point> = set.iter().map(|&i| pan.nodes[i]).collect();
            let nu: Vec<Point> = set.iter().map(|&i| pan.normals[i]).collect();
            let w: Vec<f64> = set.iter().map(|&i| pan.weights[i]).collect();

            // rows of A(c_k, s) against near columns and outgoing proxies
            let row_near = submatrix(a0.as_ref(), set, &near);
            let row_proxy = balance(circle.target_block(omega, &x, &nu), frob(submatrix(a0.as_ref(), set, &far).as_ref()));
            let row_m = hstack(&row_near, &row_proxy);
            // columns of A(s, c_k) against near rows and incoming proxies
            let col_near = submatrix(a0.as_ref(), &near, set);
            let col_proxy = balance(circle.source_block(omega, &x, &w), frob(submatrix(a0.as_ref(), &far, set).as_ref()));
            let col_m = vstack(&[col_near.as_ref(), col_proxy.as_ref()]);

            let rid = row_id(row_m.as_ref(), RankRule::Tolerance(params.eps));
            let cid = col_id(col_m.as_ref(), RankRule::Tolerance(params.eps));
            let l = rid.rank().max(cid.rank());
            let rid = if rid.rank() < l { row_id(row_m.as_ref(), RankRule::Fixed(l)) } else { rid };
            let cid = if cid.rank() < l { col_id(col_m.as_ref(), RankRule::Fixed(l)) } else { cid };
            id_residual = id_residual.max(rid.residual).max(cid.residual);
            ranks.push(l);
            let skel_r: Vec<usize> = rid.skel.iter().map(|&j| set[j]).collect();
            let skel_c: Vec<usize> = cid.skel.iter().map(|&j| set[j]).collect();
            bcs_rows.push(submatrix(a0.as_ref(), &skel_r, &smooth));
            bsc_cols.push(submatrix(a0.as_ref(), &smooth, &skel_c));
            u_blocks.push(rid.p);
            v_blocks.push(cid.p.transpose().to_owned());
        }
        let lt: usize = ranks.iter().sum();

        let mut u = CMat::zeros(nc, lt);
        let mut v_star = CMat::zeros(lt, nc);
        let (mut r0, mut c0) = (0, 0);
        for (ub, vb) in u_blocks.iter().zip(&v_blocks) {
            u.as_mut().submatrix_mut(r0, c0, ub.nrows(), ub.ncols()).copy_from(ub);
            v_star.as_mut().submatrix_mut(c0, r0, vb.nrows(), vb.ncols()).copy_from(vb);
            r0 += ub.nrows();
            c0 += ub.ncols();
        }

        let mut acc = submatrix(a0.as_ref(), &corner, &corner);
        if params.block_diagonal {
            let mut owner = Vec::with_capacity(nc);
            for (k, s) in sets.iter().enumerate() {
                owner.extend(std::iter::repeat_n(k, s.len()));
            }
            for j in 0..nc {
                for i in 0..nc {
                    if owner[i] != owner[j] {
                        acc[(i, j)] = C64::new(0.0, 0.0);
                    }
                }
            }
        }
        let (acc_inv, acc_inv_u, d_cc) = if nc > 0 {
            let acc_inv = Lu::new(acc.as_ref())?.inverse();
            let acc_inv_u = &acc_inv * &u;
            let s = &v_star * &acc_inv_u;
            let d_cc = Lu::new(s.as_ref())
                .map_err(|e| Error::Numerical(format!("singular V* A_cc^-1 U in corner compression: {e}")))?
                .inverse();
            (acc_inv, acc_inv_u, d_cc)
        } else {
            (CMat::zeros(0, 0), CMat::zeros(0, 0), CMat::zeros(0, 0))
        };

        let bcs = vstack(&bcs_rows.iter().map(|m| m.as_ref()).collect::<Vec<_>>());
        let bsc = if bsc_cols.is_empty() {
            CMat::zeros(ns, 0)
        } else {
            bsc_cols.iter().skip(1).fold(bsc_cols[0].clone(), |acc, b| hstack(&acc, b))
        };
        let ass = submatrix(a0.as_ref(), &smooth, &smooth);
        let m = lt + ns;
        let k = CMat::from_fn(m, m, |i, j| match (i < lt, j < lt) {
            (true, true) => d_cc[(i, j)],
            (true, false) => bcs[(i, j - lt)],
            (false, true) => bsc[(i - lt, j)],
            (false, false) => ass[(i - lt, j - lt)],
        });
        let compressed = Lu::new(k.as_ref())?;
        Ok(Self { n, corner_sets: sets, corner, smooth, ranks, id_residual, acc_inv, acc_inv_u, d_cc, v_star, compressed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Size of the compressed system: smooth nodes plus all corner ranks.
    pub fn n_compress(&self) -> usize {
        self.smooth.len() + self.ranks.iter().sum::<usize>()
    }

    /// Solves the compressed system and reconstructs the corner unknowns.
    pub fn solve_split(&self, f_c: MatRef<'_, C64>, f_s: MatRef<'_, C64>) -> (CMat, CMat) {
        let lt = self.d_cc.nrows();
        let m = f_s.ncols();
        if self.corner.is_empty() {
            return (CMat::zeros(0, m), self.compressed.solve(f_s));
        }
        let y = &self.acc_inv * f_c;
        let t = &self.v_star * &y;
        let ft = &self.d_cc * &t;
        let rhs = vstack(&[ft.as_ref(), f_s]);
        let sol = self.compressed.solve(rhs.as_ref());
        let qt = sol.as_ref().subrows(0, lt).to_owned();
        let q_s = sol.as_ref().subrows(lt, sol.nrows() - lt).to_owned();
        let q_c = y + &self.acc_inv_u * (&self.d_cc * (qt - t));
        (q_c, q_s)
    }

    pub fn solve(&self, f: MatRef<'_, C64>) -> CMat {
        let f_c = rows(f, &self.corner);
        let f_s = rows(f, &self.smooth);
        let (q_c, q_s) = self.solve_split(f_c.as_ref(), f_s.as_ref());
        let mut out = CMat::zeros(self.n, f.ncols());
        for (r, &i) in self.corner.iter().enumerate() {
            for j in 0..f.ncols() {
                out[(i, j)] = q_c[(r, j)];
            }
        }
        for (r, &i) in self.smooth.iter().enumerate() {
            for j in 0..f.ncols() {
                out[(i, j)] = q_s[(r, j)];
            }
        }
        out
    }
}
