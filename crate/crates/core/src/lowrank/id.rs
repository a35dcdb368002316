//! Interpolative decomposition from Householder QR with column pivoting.

#[cfg(feature = "parallel")]
use crate::exec;
use crate::linalg::CMat;
use faer::MatRef;
use num_complex::Complex64 as C64;

/// Row interpolative decomposition `M ~ P M(skel, :)`.
#[derive(Clone, Debug)]
pub struct RowId {
    /// Skeleton row indices, in pivot order.
    pub skel: Vec<usize>,
    /// Interpolation matrix, `m x rank`, equal to the identity on `skel`.
    pub p: CMat,
    /// `||R22||_F / ||M||_F` at termination.
    pub residual: f64,
}

impl RowId {
    pub fn rank(&self) -> usize {
        self.skel.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankRule {
    /// Smallest rank with `||R22||_F <= eps ||M||_F`.
    Tolerance(f64),
    Fixed(usize),
}

/// Row ID of `m` (rows are the candidates).
pub fn row_id(m: MatRef<'_, C64>, rule: RankRule) -> RowId {
    let (nr, nc) = (m.nrows(), m.ncols());
    // columns of M^T = rows of M
    let mut cols: Vec<Vec<C64>> = (0..nr).map(|i| (0..nc).map(|j| m[(i, j)]).collect()).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v.norm_sqr()).sum()).collect();
    let mut orig = norms.clone();
    let total: f64 = norms.iter().sum();
    let mut perm: Vec<usize> = (0..nr).collect();
    let kmax = nr.min(nc);
    let (tol2, fixed) = match rule {
        RankRule::Tolerance(eps) => (eps * eps * total, None),
        RankRule::Fixed(k) => (0.0, Some(k.min(kmax))),
    };
    let mut k = 0;
    loop {
        let rest: f64 = norms[k..].iter().sum();
        let done = match fixed {
            Some(f) => k >= f,
            None => k >= kmax || rest <= tol2 || total == 0.0,
        };
        if done {
            break;
        }
        let piv = k + norms[k..].iter().enumerate().fold(0, |b, (i, &v)| if v > norms[k + b] { i } else { b });
        cols.swap(k, piv);
        norms.swap(k, piv);
        orig.swap(k, piv);
        perm.swap(k, piv);

        // Householder reflector zeroing cols[k][k+1..]
        let x = &cols[k][k..];
        let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            break;
        }
        let phase = if x[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v: Vec<C64> = x.to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        cols[k][k] = alpha;
        cols[k][k + 1..].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        if vnorm2 > 0.0 {
            let (_, tail) = cols.split_at_mut(k + 1);
            let apply = |c: &mut Vec<C64>| {
                let s: C64 = v.iter().zip(&c[k..]).map(|(a, b)| a.conj() * b).sum::<C64>() * (2.0 / vnorm2);
                for (ci, vi) in c[k..].iter_mut().zip(&v) {
                    *ci -= s * vi;
                }
            };
            par_for_each(tail, apply);
        }
        for j in k + 1..nr {
            let t = cols[j][k].norm_sqr();
            norms[j] -= t;
            if norms[j] <= 1e-8 * orig[j] || norms[j] < 0.0 {
                norms[j] = cols[j][k + 1..].iter().map(|z| z.norm_sqr()).sum();
                orig[j] = norms[j];
            }
        }
        norms[k] = 0.0;
        k += 1;
    }
    let rank = k;
    let residual = if total > 0.0 {
        (cols[rank..].iter().map(|c| c[rank.min(c.len())..].iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() / total).sqrt()
    } else {
        0.0
    };
    // T = R11^{-1} R12 by back substitution, one column of R12 per dropped row
    let mut p = CMat::zeros(nr, rank);
    for (kk, &row) in perm[..rank].iter().enumerate() {
        p[(row, kk)] = C64::new(1.0, 0.0);
    }
    for (jj, &row) in perm[rank..].iter().enumerate() {
        let rhs = &cols[rank + jj];
        let mut t = vec![C64::new(0.0, 0.0); rank];
        for i in (0..rank).rev() {
            let mut s = rhs[i];
            for (kk, tk) in t.iter().enumerate().skip(i + 1) {
                s -= cols[kk][i] * tk;
            }
            t[i] = s / cols[i][i];
        }
        for (kk, tk) in t.into_iter().enumerate() {
            p[(row, kk)] = tk;
        }
    }
    RowId { skel: perm[..rank].to_vec(), p, residual }
}

fn par_for_each<F>(cols: &mut [Vec<C64>], f: F)
where
    F: Fn(&mut Vec<C64>) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec::is_parallel() && cols.len() > 64 {
        use rayon::prelude::*;
        cols.par_iter_mut().for_each(f);
        return;
    }
    cols.iter_mut().for_each(f);
}

/// Column ID `M ~ M(:, skel) Vt` with `Vt = P^T` from the row ID of `M^T`.
pub fn col_id(m: MatRef<'_, C64>, rule: RankRule) -> RowId {
    row_id(m.transpose(), rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, rows};

    fn noise(m: usize, n: usize, seed: u64) -> CMat {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(m, n, |_, _| C64::new(next(), next()))
    }

    fn low_rank(m: usize, n: usize, r: usize) -> CMat {
        &noise(m, r, 1) * &noise(r, n, 2)
    }

    #[test]
    fn recovers_exact_rank() {
        let m = low_rank(50, 50, 3);
        let id = row_id(m.as_ref(), RankRule::Tolerance(1e-13));
        assert_eq!(id.rank(), 3);
        let approx = &id.p * rows(m.as_ref(), &id.skel);
        assert!(frob((&approx - &m).as_ref()) <= 1e-12 * frob(m.as_ref()));
        for (k, &s) in id.skel.iter().enumerate() {
            for j in 0..id.rank() {
                let e = if j == k { 1.0 } else { 0.0 };
                assert!((id.p[(s, j)] - e).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn smooth_kernel_meets_tolerance() {
        let m = CMat::from_fn(200, 150, |i, j| {
            let x = i as f64 / 200.0;
            let y = 3.0 + j as f64 / 150.0;
            C64::new(1.0 / (y - x), (x * y).sin())
        });
        for eps in [1e-6, 1e-10, 1e-13] {
            let id = row_id(m.as_ref(), RankRule::Tolerance(eps));
            let approx = &id.p * rows(m.as_ref(), &id.skel);
            let err = frob((&approx - &m).as_ref()) / frob(m.as_ref());
            assert!(err <= 10.0 * eps, "eps {eps}: err {err} rank {}", id.rank());
            assert!(id.residual <= eps);
        }
    }

    #[test]
    fn fixed_rank_and_zero_matrix() {
        let m = low_rank(30, 20, 5);
        assert_eq!(row_id(m.as_ref(), RankRule::Fixed(3)).rank(), 3);
        assert_eq!(row_id(m.as_ref(), RankRule::Fixed(50)).rank(), 20);
        let z = CMat::zeros(10, 10);
        assert_eq!(row_id(z.as_ref(), RankRule::Tolerance(1e-13)).rank(), 0);
        let c = col_id(m.as_ref(), RankRule::Tolerance(1e-13));
        assert_eq!(c.rank(), 5);
        let eye = CMat::from_fn(6, 6, |i, j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        let id = row_id(eye.as_ref(), RankRule::Tolerance(1e-13));
        assert_eq!(id.rank(), 6);
        assert!(&id.p * rows(eye.as_ref(), &id.skel) == eye);
    }
}
