//! Small dense linear-algebra helpers shared by the estimation and detection code.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
///
/// Column `k` of the returned matrix is the unit eigenvector of the `k`-th
/// smallest eigenvalue.
pub fn hermitian_eigh(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("hermitian matrix"));
    }
    let n = m.nrows();
    // symmetrize against rounding so the solver sees an exactly Hermitian input
    let h = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Roots of `sum_k coeffs[k] z^k` (lowest degree first) from the eigenvalues
/// of the companion matrix, each refined by a few Newton steps.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].norm() == 0.0 {
        hi -= 1;
    }
    if hi <= 1 {
        return Ok(Vec::new());
    }
    let mut lo = 0;
    while coeffs[lo].norm() == 0.0 {
        lo += 1;
    }
    let trimmed = &coeffs[lo..hi];
    let deg = trimmed.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    if deg == 0 {
        return Ok(roots);
    }
    let lead = trimmed[deg];
    let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -trimmed[i] / lead;
    }
    let eig = hessenberg_eigenvalues(comp)?;
    for z0 in eig.iter() {
        roots.push(polish_root(trimmed, *z0));
    }
    Ok(roots)
}

/// Eigenvalues of a complex upper Hessenberg matrix by single-shift QR
/// iteration with Wilkinson shifts and periodic exceptional shifts.
///
/// nalgebra's Schur iteration stalls on companion matrices whose roots share
/// a modulus (roots of unity being the classic case), hence this routine.
pub fn hessenberg_eigenvalues(mut h: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    balance(&mut h);
    let zero = Complex64::new(0.0, 0.0);
    let mut eig = vec![zero; n];
    if n == 0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let mut rot = vec![(zero, zero); n];
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= f64::EPSILON * diag || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = zero;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n.max(10) {
            return Err(Error::Singular("Hessenberg QR iteration did not converge".into()));
        }
        let mu = if iter.is_multiple_of(11) {
            let ang = iter as f64;
            h[(hi, hi)] + Complex64::from_polar(0.75 * h[(hi, hi - 1)].norm(), ang)
        } else {
            let (a, b, c, d) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
            let tr = 0.5 * (a + d);
            let disc = ((0.5 * (a - d)) * (0.5 * (a - d)) + b * c).sqrt();
            let (e1, e2) = (tr + disc, tr - disc);
            if (e1 - d).norm() <= (e2 - d).norm() { e1 } else { e2 }
        };
        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        for k in lo..hi {
            let (a, b) = (h[(k, k)], h[(k + 1, k)]);
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 { (Complex64::new(1.0, 0.0), zero) } else { (a / r, b / r) };
            rot[k] = (c, s);
            for j in k..=hi {
                let (x, y) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = c.conj() * x + s.conj() * y;
                h[(k + 1, j)] = -s * x + c * y;
            }
        }
        for k in lo..hi {
            let (c, s) = rot[k];
            for i in lo..=(k + 1) {
                let (x, y) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = x * c + y * s;
                h[(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    eig[0] = h[(0, 0)];
    Ok(eig)
}

// Diagonal similarity by powers of two so rows and columns have comparable norms.
fn balance(h: &mut DMatrix<Complex64>) {
    let n = h.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += h[(j, i)].norm();
                    r += h[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if (cc + rr) < 0.95 * s {
                done = false;
                for j in 0..n {
                    h[(i, j)] /= f;
                    h[(j, i)] *= f;
                }
            }
        }
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

// Newton refinement; a step is kept only when it is small and shrinks the
// residual, so a root of a cluster cannot jump onto a different root.
const POLISH_MAX_STEP: f64 = 1e-6;

fn polish_root(coeffs: &[Complex64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    let (mut p, mut dp) = horner(coeffs, z);
    for _ in 0..4 {
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !(step.norm() <= POLISH_MAX_STEP * z.norm().max(1.0)) {
            break;
        }
        let cand = z - step;
        let (pc, dpc) = horner(coeffs, cand);
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = cand;
        p = pc;
        dp = dpc;
    }
    z
}

/// Orthonormal basis of the column space of `a`, keeping left singular
/// vectors whose singular value exceeds `rel_tol * sigma_max`.
pub fn column_space_basis(a: &DMatrix<Complex64>, rel_tol: f64) -> DMatrix<Complex64> {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return DMatrix::zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return DMatrix::zeros(m, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rel_tol * smax)
        .collect();
    DMatrix::from_fn(m, keep.len(), |i, j| u[(i, keep[j])])
}

/// Moore-Penrose inverse of a real symmetric matrix; eigenvalues with
/// magnitude below `rel_tol` times the largest are treated as zero.
pub fn pinv_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = SymmetricEigen::new(sym);
    let lmax = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut scaled = eig.eigenvectors.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let inv = if lam.abs() > rel_tol * lmax && lmax > 0.0 { 1.0 / lam } else { 0.0 };
        scaled.column_mut(k).scale_mut(inv);
    }
    &scaled * eig.eigenvectors.transpose()
}

/// SplitMix64 finalizer, used to derive independent per-stream seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for stream `stream` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}
