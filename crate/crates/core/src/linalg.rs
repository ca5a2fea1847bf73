//! Cyclic banded linear systems.
//!
//! The semi-implicit step solves (a·I + dt·A) z = rhs with A a cyclic
//! pentadiagonal operator; periodic cubic splines solve a cyclic tridiagonal
//! system. Both reduce to a banded core plus a low-rank wrap-around
//! correction, handled with a banded LU and the Woodbury identity.

use crate::error::{Error, Result};

/// Cyclic banded matrix with half-bandwidth `hb`, stored by diagonals:
/// `band(d)[i] = M[i, (i + d - hb) mod n]` for `d in 0..=2*hb`.
#[derive(Clone, Debug)]
pub struct CyclicBanded {
    n: usize,
    hb: usize,
    bands: Vec<f64>,
}

impl CyclicBanded {
    pub fn new(n: usize, hb: usize) -> Self {
        assert!(hb >= 1 && n > 3 * hb, "need n > 3*hb, got n={n}, hb={hb}");
        CyclicBanded {
            n,
            hb,
            bands: vec![0.0; (2 * hb + 1) * n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, d: usize, i: usize) -> usize {
        d * self.n + i
    }

    /// Sets M[i, (i + off) mod n] for |off| <= hb.
    #[inline]
    pub fn set(&mut self, i: usize, off: isize, v: f64) {
        debug_assert!(off.unsigned_abs() <= self.hb);
        let d = (off + self.hb as isize) as usize;
        let k = self.idx(d, i);
        self.bands[k] = v;
    }

    #[inline]
    pub fn get(&self, i: usize, off: isize) -> f64 {
        let d = (off + self.hb as isize) as usize;
        self.bands[self.idx(d, i)]
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let (n, hb) = (self.n, self.hb);
        debug_assert!(x.len() == n && y.len() == n);
        for i in 0..n {
            let mut acc = 0.0;
            for d in 0..=2 * hb {
                let j = (i + n + d - hb) % n;
                acc += self.bands[self.idx(d, i)] * x[j];
            }
            y[i] = acc;
        }
    }

    /// Factors the matrix: banded LU of the acyclic core plus a Woodbury
    /// correction carrying the wrap-around entries.
    pub fn factor(&self) -> Result<CyclicBandedLu> {
        let (n, hb) = (self.n, self.hb);
        let mut core = self.bands.clone();

        // Collect wrap entries (row, col, val) and zero them in the core.
        let mut wrap_rows: Vec<usize> = Vec::new();
        let mut wraps: Vec<Vec<(usize, f64)>> = Vec::new();
        for i in (0..hb).chain(n - hb..n) {
            let mut entries = Vec::new();
            for d in 0..=2 * hb {
                let signed = i as isize + d as isize - hb as isize;
                if signed < 0 || signed >= n as isize {
                    let j = ((signed + n as isize) % n as isize) as usize;
                    let k = self.idx(d, i);
                    let v = core[k];
                    if v != 0.0 {
                        entries.push((j, v));
                        core[k] = 0.0;
                    }
                }
            }
            if !entries.is_empty() {
                wrap_rows.push(i);
                wraps.push(entries);
            }
        }

        let mut lu = CyclicBandedLu {
            n,
            hb,
            core,
            wrap_rows,
            wraps,
            z: Vec::new(),
            cap: Vec::new(),
            cap_piv: Vec::new(),
        };
        lu.factor_core()?;

        // Z = core^{-1} U, one column per wrap row; capacitance C = I + V^T Z.
        let m = lu.wrap_rows.len();
        let mut z = vec![0.0; m * n];
        for (k, &r) in lu.wrap_rows.iter().enumerate() {
            let col = &mut z[k * n..(k + 1) * n];
            col[r] = 1.0;
            lu.solve_core(col);
        }
        let mut cap = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                let mut acc = if a == b { 1.0 } else { 0.0 };
                for &(j, v) in &lu.wraps[a] {
                    acc += v * z[b * n + j];
                }
                cap[a * m + b] = acc;
            }
        }
        let piv = dense_lu_in_place(&mut cap, m)?;
        lu.z = z;
        lu.cap = cap;
        lu.cap_piv = piv;
        Ok(lu)
    }
}

/// Factored cyclic banded matrix; `solve` works in place on the right side.
pub struct CyclicBandedLu {
    n: usize,
    hb: usize,
    core: Vec<f64>,
    wrap_rows: Vec<usize>,
    wraps: Vec<Vec<(usize, f64)>>,
    z: Vec<f64>,
    cap: Vec<f64>,
    cap_piv: Vec<usize>,
}

impl CyclicBandedLu {
    #[inline]
    fn idx(&self, d: usize, i: usize) -> usize {
        d * self.n + i
    }

    /// Unpivoted banded LU in diagonal storage; no fill outside the band.
    fn factor_core(&mut self) -> Result<()> {
        let (n, hb) = (self.n, self.hb);
        for k in 0..n {
            let piv = self.core[self.idx(hb, k)];
            if !(piv.abs() > 1e-300) {
                return Err(Error::SingularSystem { row: k });
            }
            let imax = (k + hb).min(n - 1);
            for i in k + 1..=imax {
                let d_ik = (k + hb) as isize - i as isize;
                let l = self.core[self.idx(d_ik as usize, i)] / piv;
                self.core[self.idx(d_ik as usize, i)] = l;
                if l != 0.0 {
                    let jmax = (k + hb).min(n - 1);
                    for j in k + 1..=jmax {
                        let d_kj = j + hb - k;
                        let d_ij = (j + hb) as isize - i as isize;
                        if (0..=(2 * hb) as isize).contains(&d_ij) {
                            let ukj = self.core[self.idx(d_kj, k)];
                            let t = self.idx(d_ij as usize, i);
                            self.core[t] -= l * ukj;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn solve_core(&self, rhs: &mut [f64]) {
        let (n, hb) = (self.n, self.hb);
        // Forward: L has unit diagonal, multipliers stored below.
        for k in 0..n {
            let rk = rhs[k];
            let imax = (k + hb).min(n - 1);
            for i in k + 1..=imax {
                let d = k + hb - i;
                rhs[i] -= self.core[self.idx(d, i)] * rk;
            }
        }
        // Backward with U.
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            let jmax = (i + hb).min(n - 1);
            for j in i + 1..=jmax {
                let d = j + hb - i;
                acc -= self.core[self.idx(d, i)] * rhs[j];
            }
            rhs[i] = acc / self.core[self.idx(hb, i)];
        }
    }

    /// Solves the full cyclic system in place.
    pub fn solve(&self, rhs: &mut [f64]) {
        assert_eq!(rhs.len(), self.n);
        self.solve_core(rhs);
        let m = self.wrap_rows.len();
        if m == 0 {
            return;
        }
        let mut w = vec![0.0; m];
        for a in 0..m {
            let mut acc = 0.0;
            for &(j, v) in &self.wraps[a] {
                acc += v * rhs[j];
            }
            w[a] = acc;
        }
        dense_lu_solve(&self.cap, &self.cap_piv, &mut w);
        for (k, q) in w.iter().enumerate() {
            let col = &self.z[k * self.n..(k + 1) * self.n];
            for i in 0..self.n {
                rhs[i] -= q * col[i];
            }
        }
    }
}

/// Dense LU with partial pivoting for the small capacitance system.
fn dense_lu_in_place(a: &mut [f64], m: usize) -> Result<Vec<usize>> {
    let mut piv: Vec<usize> = (0..m).collect();
    for k in 0..m {
        let mut best = k;
        let mut bv = a[piv[k] * m + k].abs();
        for r in k + 1..m {
            let v = a[piv[r] * m + k].abs();
            if v > bv {
                best = r;
                bv = v;
            }
        }
        piv.swap(k, best);
        let pk = a[piv[k] * m + k];
        if !(pk.abs() > 1e-300) {
            return Err(Error::SingularSystem { row: k });
        }
        for r in k + 1..m {
            let l = a[piv[r] * m + k] / pk;
            a[piv[r] * m + k] = l;
            for c in k + 1..m {
                a[piv[r] * m + c] -= l * a[piv[k] * m + c];
            }
        }
    }
    Ok(piv)
}

fn dense_lu_solve(a: &[f64], piv: &[usize], b: &mut [f64]) {
    let m = piv.len();
    let mut y = vec![0.0; m];
    for k in 0..m {
        let mut acc = b[piv[k]];
        for c in 0..k {
            acc -= a[piv[k] * m + c] * y[c];
        }
        y[k] = acc;
    }
    for k in (0..m).rev() {
        let mut acc = y[k];
        for c in k + 1..m {
            acc -= a[piv[k] * m + c] * b[c];
        }
        b[k] = acc / a[piv[k] * m + k];
    }
}

/// y = T x for the cyclic tridiagonal operator with rows
/// (lo[i] at i-1, mid[i] at i, up[i] at i+1).
pub fn cyclic_tridiag_matvec(lo: &[f64], mid: &[f64], up: &[f64], x: &[f64], y: &mut [f64]) {
    let n = x.len();
    debug_assert!(lo.len() == n && mid.len() == n && up.len() == n && y.len() == n);
    y[0] = lo[0] * x[n - 1] + mid[0] * x[0] + up[0] * x[1];
    for i in 1..n - 1 {
        y[i] = lo[i] * x[i - 1] + mid[i] * x[i] + up[i] * x[i + 1];
    }
    y[n - 1] = lo[n - 1] * x[n - 2] + mid[n - 1] * x[n - 1] + up[n - 1] * x[0];
}

/// Builds a·I + b·T² as a cyclic pentadiagonal matrix, where T is the cyclic
/// tridiagonal operator above.
pub fn identity_plus_scaled_tridiag_squared(
    a: f64,
    b: f64,
    lo: &[f64],
    mid: &[f64],
    up: &[f64],
) -> CyclicBanded {
    let n = lo.len();
    let mut m = CyclicBanded::new(n, 2);
    for i in 0..n {
        let im1 = (i + n - 1) % n;
        let ip1 = (i + 1) % n;
        m.set(i, -2, b * lo[i] * lo[im1]);
        m.set(i, -1, b * (lo[i] * mid[im1] + mid[i] * lo[i]));
        m.set(
            i,
            0,
            a + b * (lo[i] * up[im1] + mid[i] * mid[i] + up[i] * lo[ip1]),
        );
        m.set(i, 1, b * (mid[i] * up[i] + up[i] * mid[ip1]));
        m.set(i, 2, b * up[i] * up[ip1]);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Small dense oracle used only by tests.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
                .unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for i in k + 1..n {
                let l = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= l * m[k][j];
                }
                x[i] -= l * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= m[i][j] * x[j];
            }
            x[i] = acc / m[i][i];
        }
        x
    }

    fn to_dense(cb: &CyclicBanded, n: usize, hb: usize) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for off in -(hb as isize)..=(hb as isize) {
                let j = ((i as isize + off + n as isize) % n as isize) as usize;
                a[i][j] += cb.get(i, off);
            }
        }
        a
    }

    fn rng_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random_system(n: usize, hb: usize, seed: u64) -> (CyclicBanded, Vec<f64>) {
        let mut r = rng_stream(seed);
        let mut m = CyclicBanded::new(n, hb);
        for i in 0..n {
            for off in -(hb as isize)..=(hb as isize) {
                m.set(i, off, r());
            }
            // Diagonal dominance keeps the unpivoted core safe.
            m.set(i, 0, 2.0 * (2 * hb + 1) as f64 + r());
        }
        let rhs: Vec<f64> = (0..n).map(|_| r()).collect();
        (m, rhs)
    }

    #[test]
    fn matches_dense_oracle() {
        for (n, hb, seed) in [(12usize, 1usize, 7u64), (23, 2, 8), (37, 3, 9), (16, 2, 10)] {
            let (m, rhs) = random_system(n, hb, seed);
            let lu = m.factor().unwrap();
            let mut x = rhs.clone();
            lu.solve(&mut x);
            let dense = to_dense(&m, n, hb);
            let xd = dense_solve(&dense, &rhs);
            for i in 0..n {
                assert!((x[i] - xd[i]).abs() < 1e-10, "n={n} hb={hb} i={i}");
            }
            let mut back = vec![0.0; n];
            m.matvec(&x, &mut back);
            for i in 0..n {
                assert!((back[i] - rhs[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tridiag_square_composition() {
        let n = 40;
        let mut r = rng_stream(3);
        let lo: Vec<f64> = (0..n).map(|_| r()).collect();
        let mid: Vec<f64> = (0..n).map(|_| r()).collect();
        let up: Vec<f64> = (0..n).map(|_| r()).collect();
        let x: Vec<f64> = (0..n).map(|_| r()).collect();
        let (a, b) = (0.7, 1.3);

        let m = identity_plus_scaled_tridiag_squared(a, b, &lo, &mid, &up);
        let mut y = vec![0.0; n];
        m.matvec(&x, &mut y);

        let mut t1 = vec![0.0; n];
        let mut t2 = vec![0.0; n];
        cyclic_tridiag_matvec(&lo, &mid, &up, &x, &mut t1);
        cyclic_tridiag_matvec(&lo, &mid, &up, &t1, &mut t2);
        for i in 0..n {
            let want = a * x[i] + b * t2[i];
            assert!((y[i] - want).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn solves_random_dominant_systems(n in 10usize..60, hb in 1usize..4, seed in 0u64..1000) {
            prop_assume!(n > 3 * hb);
            let (m, rhs) = random_system(n, hb, seed);
            let lu = m.factor().unwrap();
            let mut x = rhs.clone();
            lu.solve(&mut x);
            let mut back = vec![0.0; n];
            m.matvec(&x, &mut back);
            let scale = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            for i in 0..n {
                prop_assert!((back[i] - rhs[i]).abs() <= 1e-9 * scale);
            }
        }
    }
}
