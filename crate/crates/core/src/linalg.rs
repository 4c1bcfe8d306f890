//! Thin wrappers over LAPACK for the handful of dense factorizations the
//! crate needs.
//!
//! Hermitian eigenproblems go straight to the divide-and-conquer drivers
//! (`dsyevd` / `zheevd`). Matrices whose imaginary part is exactly zero take
//! the real driver, which is several times faster at the 4096-row end of the
//! dense guard.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{JobSvd, QR, SVDDC, SVD};
use num_complex::Complex64 as C64;
use std::os::raw::{c_char, c_int};

use crate::error::{Error, Result};

extern "C" {
    fn dgemm_(
        ta: *const c_char, tb: *const c_char, m: *const c_int, n: *const c_int, k: *const c_int,
        alpha: *const f64, a: *const f64, lda: *const c_int, b: *const f64, ldb: *const c_int,
        beta: *const f64, c: *mut f64, ldc: *const c_int,
    );
    fn zgemm_(
        ta: *const c_char, tb: *const c_char, m: *const c_int, n: *const c_int, k: *const c_int,
        alpha: *const C64, a: *const C64, lda: *const c_int, b: *const C64, ldb: *const c_int,
        beta: *const C64, c: *mut C64, ldc: *const c_int,
    );
}

/// Shapes `(m, n, k)` probed by [`blas_self_check`]. The first one trips the
/// AVX-512 DGEMM kernels of OpenBLAS 0.3.20.
const PROBE_SHAPES: [(usize, usize, usize); 5] = [(256, 5, 250), (128, 128, 128), (64, 3, 200), (200, 17, 64), (33, 257, 31)];

fn gemm_probe<T, F>(gemm: F, zero: T, make: impl Fn(usize, usize) -> T) -> Option<String>
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
    F: Fn(u8, u8, usize, usize, usize, &[T], usize, &[T], usize, &mut [T]),
    T: Into<C64>,
{
    for &(m, n, k) in &PROBE_SHAPES {
        for ta in *b"NT" {
            for tb in *b"NT" {
                let lda = if ta == b'N' { m } else { k };
                let ldb = if tb == b'N' { k } else { n };
                let a: Vec<T> = (0..m * k).map(|i| make(i, 13)).collect();
                let b: Vec<T> = (0..k * n).map(|i| make(i, 11)).collect();
                let mut c = vec![zero; m * n];
                gemm(ta, tb, m, n, k, &a, lda, &b, ldb, &mut c);
                let ga = |i: usize, p: usize| if ta == b'N' { a[i + p * lda] } else { a[p + i * lda] };
                let gb = |p: usize, j: usize| if tb == b'N' { b[p + j * ldb] } else { b[j + p * ldb] };
                for i in 0..m {
                    for j in 0..n {
                        let mut s = zero;
                        for p in 0..k {
                            s = s + ga(i, p) * gb(p, j);
                        }
                        let d: C64 = (c[i + j * m] - s).into();
                        if d.norm() > 1e-9 {
                            return Some(format!(
                                "gemm {}{} m={m} n={n} k={k} is off by {:.3e}",
                                ta as char,
                                tb as char,
                                d.norm()
                            ));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Checks the linked BLAS against naive products on a few shapes, once per
/// process. Some OpenBLAS builds return wrong GEMM results on AVX-512 CPUs;
/// `OPENBLAS_CORETYPE=Haswell` selects kernels that are correct.
pub fn blas_self_check() -> Result<()> {
    static CHECK: std::sync::OnceLock<Option<String>> = std::sync::OnceLock::new();
    let failure = CHECK.get_or_init(|| {
        let d = gemm_probe(
            |ta, tb, m, n, k, a: &[f64], lda, b: &[f64], ldb, c: &mut [f64]| {
                let (one, zero) = (1.0f64, 0.0f64);
                let (ta, tb) = (ta as c_char, tb as c_char);
                let (m, n, k, lda, ldb) = (m as c_int, n as c_int, k as c_int, lda as c_int, ldb as c_int);
                // SAFETY: buffer sizes follow from (m, n, k) and the leading dimensions.
                unsafe {
                    dgemm_(&ta, &tb, &m, &n, &k, &one, a.as_ptr(), &lda, b.as_ptr(), &ldb, &zero, c.as_mut_ptr(), &m)
                };
            },
            0.0f64,
            |i, p| ((i * 7919) % p) as f64 - (p / 2) as f64,
        );
        let z = gemm_probe(
            |ta, tb, m, n, k, a: &[C64], lda, b: &[C64], ldb, c: &mut [C64]| {
                let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
                let (ta, tb) = (ta as c_char, tb as c_char);
                let (m, n, k, lda, ldb) = (m as c_int, n as c_int, k as c_int, lda as c_int, ldb as c_int);
                // SAFETY: as above; Complex64 is repr(C) {re, im}.
                unsafe {
                    zgemm_(&ta, &tb, &m, &n, &k, &one, a.as_ptr(), &lda, b.as_ptr(), &ldb, &zero, c.as_mut_ptr(), &m)
                };
            },
            C64::new(0.0, 0.0),
            |i, p| C64::new(((i * 7919) % p) as f64 - 3.0, ((i * 31) % 5) as f64 - 2.0),
        );
        d.or(z)
    });
    match failure {
        None => Ok(()),
        Some(msg) => Err(Error::Numerical(format!(
            "linked BLAS fails a self-check ({msg}); for OpenBLAS set OPENBLAS_CORETYPE=Haswell"
        ))),
    }
}

pub(crate) fn is_real(a: &Array2<C64>) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

pub(crate) fn re(a: &Array2<C64>) -> Array2<f64> {
    a.mapv(|z| z.re)
}

pub(crate) fn complexify(a: &Array2<f64>) -> Array2<C64> {
    a.mapv(|x| C64::new(x, 0.0))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Only the lower triangle is read.
pub fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    blas_self_check()?;
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh needs a square matrix");
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    if is_real(a) {
        let mut buf: Vec<f64> = a.t().iter().map(|z| z.re).collect();
        let w = dsyevd(n, &mut buf, true)?;
        let v = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
        Ok((Array1::from(w), v.mapv(|x| C64::new(x, 0.0)).as_standard_layout().to_owned()))
    } else {
        let mut buf: Vec<C64> = a.t().iter().cloned().collect();
        let w = zheevd(n, &mut buf, true)?;
        let v = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
        Ok((Array1::from(w), v.as_standard_layout().to_owned()))
    }
}

/// Real symmetric eigen-decomposition, eigenvalues ascending.
pub fn eigh_real(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    blas_self_check()?;
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh_real needs a square matrix");
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let mut buf: Vec<f64> = a.t().iter().cloned().collect();
    let w = dsyevd(n, &mut buf, true)?;
    let v = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
    Ok((Array1::from(w), v))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &Array2<C64>) -> Result<Array1<f64>> {
    blas_self_check()?;
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigvalsh needs a square matrix");
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    if is_real(a) {
        let mut buf: Vec<f64> = a.t().iter().map(|z| z.re).collect();
        Ok(Array1::from(dsyevd(n, &mut buf, false)?))
    } else {
        let mut buf: Vec<C64> = a.t().iter().cloned().collect();
        Ok(Array1::from(zheevd(n, &mut buf, false)?))
    }
}

fn dsyevd(n: usize, a: &mut [f64], vectors: bool) -> Result<Vec<f64>> {
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let uplo = b'L' as c_char;
    let nn = n as c_int;
    let mut w = vec![0.0; n];
    let mut info: c_int = 0;
    let mut work_q = [0.0f64];
    let mut iwork_q = [0 as c_int];
    let query: c_int = -1;
    // SAFETY: buffers are sized per the LAPACK contract; the first call is a
    // workspace query that only writes work_q / iwork_q.
    unsafe {
        lapack_sys::dsyevd_(
            &jobz, &uplo, &nn, a.as_mut_ptr(), &nn, w.as_mut_ptr(),
            work_q.as_mut_ptr(), &query, iwork_q.as_mut_ptr(), &query, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    let lwork = work_q[0] as c_int;
    let liwork = iwork_q[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    // SAFETY: as above, with the queried workspace sizes.
    unsafe {
        lapack_sys::dsyevd_(
            &jobz, &uplo, &nn, a.as_mut_ptr(), &nn, w.as_mut_ptr(),
            work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    Ok(w)
}

fn zheevd(n: usize, a: &mut [C64], vectors: bool) -> Result<Vec<f64>> {
    type Z = lapack_sys::__BindgenComplex<f64>;
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let uplo = b'L' as c_char;
    let nn = n as c_int;
    let mut w = vec![0.0; n];
    let mut info: c_int = 0;
    let mut work_q = [C64::new(0.0, 0.0)];
    let mut rwork_q = [0.0f64];
    let mut iwork_q = [0 as c_int];
    let query: c_int = -1;
    // SAFETY: Complex64 is repr(C) {re, im}, identical to the bindgen type.
    unsafe {
        lapack_sys::zheevd_(
            &jobz, &uplo, &nn, a.as_mut_ptr() as *mut Z, &nn, w.as_mut_ptr(),
            work_q.as_mut_ptr() as *mut Z, &query, rwork_q.as_mut_ptr(), &query,
            iwork_q.as_mut_ptr(), &query, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    let lwork = work_q[0].re as c_int;
    let lrwork = rwork_q[0] as c_int;
    let liwork = iwork_q[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    // SAFETY: as above, with the queried workspace sizes.
    unsafe {
        lapack_sys::zheevd_(
            &jobz, &uplo, &nn, a.as_mut_ptr() as *mut Z, &nn, w.as_mut_ptr(),
            work.as_mut_ptr() as *mut Z, &lwork, rwork.as_mut_ptr(), &lrwork,
            iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    Ok(w)
}

/// Thin SVD `a = u · diag(s) · vh`, singular values descending.
pub fn svd(a: &Array2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    blas_self_check()?;
    let (m, n) = a.dim();
    let k = m.min(n);
    if k == 0 {
        return Ok((Array2::zeros((m, 0)), Array1::zeros(0), Array2::zeros((0, n))));
    }
    let split = |r: (Option<Array2<C64>>, Array1<f64>, Option<Array2<C64>>)| {
        let (u, s, vh) = r;
        (u.expect("u requested"), s, vh.expect("vh requested"))
    };
    match a.svddc(JobSvd::Some) {
        Ok(r) => {
            let (u, s, vh) = split(r);
            Ok((u.slice_move(ndarray::s![.., ..k]), s, vh.slice_move(ndarray::s![..k, ..])))
        }
        // gesdd occasionally fails to converge; gesvd is slower but sturdier.
        Err(_) => {
            let (u, s, vh) = a
                .svd(true, true)
                .map_err(|e| Error::Numerical(format!("svd: {e}")))?;
            let (u, vh) = (u.expect("u requested"), vh.expect("vh requested"));
            Ok((u.slice_move(ndarray::s![.., ..k]), s, vh.slice_move(ndarray::s![..k, ..])))
        }
    }
}

pub fn singular_values(a: &Array2<C64>) -> Result<Array1<f64>> {
    blas_self_check()?;
    if a.is_empty() {
        return Ok(Array1::zeros(0));
    }
    match a.svddc(JobSvd::None) {
        Ok((_, s, _)) => Ok(s),
        Err(_) => a
            .svd(false, false)
            .map(|(_, s, _)| s)
            .map_err(|e| Error::Numerical(format!("svd: {e}"))),
    }
}

/// Thin QR, `q` has orthonormal columns.
pub fn qr(a: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    blas_self_check()?;
    a.qr().map_err(|e| Error::Numerical(format!("qr: {e}")))
}

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Kronecker product with the first factor on the most significant index.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut blk = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            blk.zip_mut_with(b, |o, &x| *o = aij * x);
        }
    }
    out
}

/// `(I_left ⊗ g ⊗ I_right) · x` where `x` acts on `n` qubits and `g` on the
/// `m` qubits starting at offset `off` (qubit 0 most significant).
pub fn apply_left_local(g: &Array2<C64>, off: usize, m: usize, n: usize, x: &Array2<C64>) -> Array2<C64> {
    let dm = 1usize << m;
    assert_eq!(g.dim(), (dm, dm), "gate size does not match its window");
    assert!(off + m <= n, "gate outside operator window");
    let rows = x.nrows();
    assert_eq!(rows, 1usize << n, "operator size does not match n");
    let cols = x.ncols();
    let nl = 1usize << off;
    let inner = (rows / nl / dm) * cols;
    let xs = x.as_standard_layout();
    let flat = xs.as_slice().expect("standard layout");
    let mut out = Vec::with_capacity(rows * cols);
    for l in 0..nl {
        let blk = ndarray::ArrayView2::from_shape((dm, inner), &flat[l * dm * inner..(l + 1) * dm * inner])
            .expect("contiguous block");
        out.extend(g.dot(&blk).iter().cloned());
    }
    Array2::from_shape_vec((rows, cols), out).expect("shape")
}

/// `(I ⊗ g ⊗ I) · x · (I ⊗ g ⊗ I)†`.
pub fn conjugate_local(g: &Array2<C64>, off: usize, m: usize, n: usize, x: &Array2<C64>) -> Array2<C64> {
    let left = apply_left_local(g, off, m, n, x);
    adjoint(&apply_left_local(g, off, m, n, &adjoint(&left)))
}
