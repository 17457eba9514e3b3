//! Compressed sparse row matrices and Krylov solvers for the FEM systems.

/// Square CSR matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Builds from unsorted triplets, summing duplicates. The result does not
    /// depend on triplet order beyond floating-point summation order within a
    /// row, which follows a stable sort and is therefore deterministic.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(trip.len());
        let mut val: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *val.last_mut().expect("entry present") += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
        match r.binary_search(&j) {
            Ok(k) => self.val[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    /// Copy with `d[i]` added to each diagonal entry (diagonal must be stored).
    pub fn add_diag(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, di) in d.iter().enumerate() {
            let r = &out.col[out.row_ptr[i]..out.row_ptr[i + 1]];
            let k = r.binary_search(&i).expect("diagonal entry stored");
            out.val[out.row_ptr[i] + k] += di;
        }
        out
    }

    /// Principal submatrix on the rows/columns with `keep[i]`, plus the index map.
    pub fn submatrix(&self, keep: &[bool]) -> (Self, Vec<usize>) {
        let mut map = vec![usize::MAX; self.n];
        let mut idx = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                map[i] = idx.len();
                idx.push(i);
            }
        }
        let m = idx.len();
        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0);
        let mut col = Vec::new();
        let mut val = Vec::new();
        for &i in &idx {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = map[self.col[k]];
                if j != usize::MAX {
                    col.push(j);
                    val.push(self.val[k]);
                }
            }
            row_ptr.push(col.len());
        }
        (
            Self {
                n: m,
                row_ptr,
                col,
                val,
            },
            idx,
        )
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).all(|k| {
                let j = self.col[k];
                (self.val[k] - self.get(j, i)).abs() <= tol * self.val[k].abs().max(1.0)
            })
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Zero-fill incomplete Cholesky factor `L` (lower triangle, CSR) with `A ≈ L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Ic0 {
    l: Csr,
}

impl Ic0 {
    /// Factors `A`. On breakdown the diagonal is shifted by a growing multiple
    /// of itself and the factorization restarted.
    pub fn new(a: &Csr) -> Self {
        let mut shift = 0.0;
        loop {
            if let Some(l) = Self::try_factor(a, shift) {
                return Self { l };
            }
            shift = if shift == 0.0 { 1e-3 } else { shift * 4.0 };
        }
    }

    fn try_factor(a: &Csr, shift: f64) -> Option<Csr> {
        let n = a.n;
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::new();
        let mut val = Vec::new();
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col[k];
                if j <= i {
                    col.push(j);
                    let v = if j == i { a.val[k] * (1.0 + shift) } else { a.val[k] };
                    val.push(v);
                }
            }
            row_ptr[i + 1] = col.len();
        }
        let mut l = Csr {
            n,
            row_ptr,
            col,
            val,
        };
        // row-oriented IC(0): for each row i, for each stored j < i,
        // L_ij = (A_ij - sum_{k<j} L_ik L_jk) / L_jj
        for i in 0..n {
            let (s, e) = (l.row_ptr[i], l.row_ptr[i + 1]);
            for p in s..e {
                let j = l.col[p];
                let mut sum = l.val[p];
                // sparse dot of row i and row j over columns < j
                let (mut a_i, mut a_j) = (s, l.row_ptr[j]);
                let e_j = l.row_ptr[j + 1];
                while a_i < p && a_j < e_j {
                    let (ci, cj) = (l.col[a_i], l.col[a_j]);
                    if cj >= j {
                        break;
                    }
                    match ci.cmp(&cj) {
                        std::cmp::Ordering::Less => a_i += 1,
                        std::cmp::Ordering::Greater => a_j += 1,
                        std::cmp::Ordering::Equal => {
                            sum -= l.val[a_i] * l.val[a_j];
                            a_i += 1;
                            a_j += 1;
                        }
                    }
                }
                if j == i {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    l.val[p] = sum.sqrt();
                } else {
                    let djj = l.val[l.row_ptr[j + 1] - 1];
                    l.val[p] = sum / djj;
                }
            }
        }
        Some(l)
    }

    /// Solves `L Lᵀ z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let l = &self.l;
        let n = l.n;
        for i in 0..n {
            let mut s = r[i];
            let e = l.row_ptr[i + 1] - 1;
            for k in l.row_ptr[i]..e {
                s -= l.val[k] * z[l.col[k]];
            }
            z[i] = s / l.val[e];
        }
        for i in (0..n).rev() {
            let e = l.row_ptr[i + 1] - 1;
            z[i] /= l.val[e];
            let zi = z[i];
            for k in l.row_ptr[i]..e {
                z[l.col[k]] -= l.val[k] * zi;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovInfo {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for SPD `a`.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], pre: &Ic0, rtol: f64, max_iter: usize) -> KrylovInfo {
    let n = a.n;
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut it = 0;
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    while it < max_iter && rel > rtol {
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        rel = dot(&r, &r).sqrt() / bnorm;
    }
    KrylovInfo {
        iterations: it,
        rel_residual: rel,
        converged: rel <= rtol,
    }
}

/// Preconditioned MINRES for symmetric (possibly indefinite) `a` with an SPD
/// preconditioner. Convergence is measured in the preconditioner norm.
pub fn minres(a: &Csr, b: &[f64], x: &mut [f64], pre: &Ic0, rtol: f64, max_iter: usize) -> KrylovInfo {
    let n = a.n;
    let mut r1 = vec![0.0; n];
    a.matvec(x, &mut r1);
    for i in 0..n {
        r1[i] = b[i] - r1[i];
    }
    let mut y = vec![0.0; n];
    pre.apply(&r1, &mut y);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return KrylovInfo {
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut it = 0;
    let mut rel = 1.0;
    while it < max_iter {
        it += 1;
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        a.matvec(&v, &mut y);
        if it >= 2 {
            let c = beta / oldb;
            for i in 0..n {
                y[i] -= c * r1[i];
            }
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        for i in 0..n {
            y[i] -= c * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        pre.apply(&r2, &mut y);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        rel = phibar / beta1;
        if rel <= rtol || beta == 0.0 {
            break;
        }
    }
    KrylovInfo {
        iterations: it,
        rel_residual: rel,
        converged: rel <= rtol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = Csr::from_triplets(2, vec![(1, 0, 1.0), (0, 0, 2.0), (1, 0, 3.0), (1, 1, 1.0)]);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.mul(&[1.0, 1.0]), vec![2.0, 5.0]);
    }

    #[test]
    fn ic0_is_exact_for_tridiagonal() {
        // IC(0) of a tridiagonal matrix is its full Cholesky factor
        let a = laplace_1d(20, 0.1);
        let pre = Ic0::new(&a);
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut z = vec![0.0; 20];
        pre.apply(&b, &mut z);
        let r = a.mul(&z);
        for i in 0..20 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn pcg_and_minres_solve_spd() {
        let n = 200;
        let a = laplace_1d(n, 0.0);
        let pre = Ic0::new(&laplace_1d(n, 0.5));
        let b = vec![1.0; n];
        let mut x1 = vec![0.0; n];
        assert!(pcg(&a, &b, &mut x1, &pre, 1e-12, 1000).converged);
        let mut x2 = vec![0.0; n];
        assert!(minres(&a, &b, &mut x2, &pre, 1e-12, 1000).converged);
        for i in 0..n {
            assert!((x1[i] - x2[i]).abs() < 1e-6 * x1[i].abs().max(1.0));
        }
    }

    #[test]
    fn minres_handles_indefinite() {
        let n = 100;
        // 1D Laplacian minus a shift past its first eigenvalues
        let a = laplace_1d(n, -0.05);
        let pre = Ic0::new(&laplace_1d(n, 0.05));
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let mut x = vec![0.0; n];
        let info = minres(&a, &b, &mut x, &pre, 1e-12, 2000);
        assert!(info.converged, "{info:?}");
        let r = a.mul(&x);
        let err: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }
}
