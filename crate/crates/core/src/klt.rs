//! Karhunen-Loeve characterization by singular spectrum analysis.
//!
//! A series `x` of length `N` is embedded in the `L x K` Hankel trajectory
//! matrix `U[i][j] = x[i + j]` (`K = N - L + 1`). Its lag covariance
//! `R = U U^H / K` is diagonalized as `R = Phi Lambda Phi^H`; the leading
//! columns of `Phi` span the signal's dominant temporal structure.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, shape, Error, Result};
use crate::signals::ComplexSeries;

pub type CMatrix = DMatrix<Complex64>;

/// Default relative eigenvalue cut: keep `lambda_j >= 0.01 lambda_0`.
pub const DEFAULT_TRUNCATION: f64 = 0.01;
/// Sweep limit handed to the Hermitian eigensolver.
pub const EIG_MAX_ITERATIONS: usize = 100_000;

/// Hankel trajectory matrix of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    u: CMatrix,
}

impl Trajectory {
    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }

    pub fn into_matrix(self) -> CMatrix {
        self.u
    }

    /// Window length `L`.
    pub fn l(&self) -> usize {
        self.u.nrows()
    }

    /// Number of lagged vectors `K`.
    pub fn k(&self) -> usize {
        self.u.ncols()
    }
}

fn check_window(n: usize, l: usize) -> Result<()> {
    if l < 2 || l > n / 2 {
        return Err(invalid(format!(
            "window length L={l} must satisfy 2 <= L <= N/2 = {}",
            n / 2
        )));
    }
    Ok(())
}

/// `U[i][j] = x[i + j]`, shape `L x (N - L + 1)`. Requires `2 <= L <= N/2`.
pub fn hankel_embed(x: &ComplexSeries, l: usize) -> Result<Trajectory> {
    check_window(x.len(), l)?;
    let s = x.samples();
    let k = s.len() - l + 1;
    Ok(Trajectory {
        u: CMatrix::from_fn(l, k, |i, j| s[i + j]),
    })
}

fn symmetrize(r: &mut CMatrix) {
    let n = r.nrows();
    for i in 0..n {
        r[(i, i)].im = 0.0;
        for j in i + 1..n {
            let v = (r[(i, j)] + r[(j, i)].conj()) * 0.5;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
    }
}

/// Sample lag covariance `U U^H / K`, made exactly Hermitian.
pub fn lag_covariance(traj: &Trajectory) -> CMatrix {
    let u = &traj.u;
    let mut r = u * u.adjoint();
    r /= Complex64::new(traj.k() as f64, 0.0);
    symmetrize(&mut r);
    r
}

/// The same matrix as `lag_covariance(hankel_embed(x, l))`, computed from the
/// series without forming the trajectory. The first row is a direct lagged
/// inner product; each further diagonal step adds the sample entering the
/// window and removes the one leaving it.
pub fn lag_covariance_from_series(x: &ComplexSeries, l: usize) -> Result<CMatrix> {
    check_window(x.len(), l)?;
    let s = x.samples();
    let k = s.len() - l + 1;
    let inv_k = 1.0 / k as f64;
    let mut r = CMatrix::zeros(l, l);
    for j in 0..l {
        let acc: Complex64 = (0..k).map(|t| s[t] * s[t + j].conj()).sum();
        r[(0, j)] = acc * inv_k;
    }
    for i in 0..l - 1 {
        for j in i..l - 1 {
            let delta = s[i + k] * s[j + k].conj() - s[i] * s[j].conj();
            r[(i + 1, j + 1)] = r[(i, j)] + delta * inv_k;
        }
    }
    for i in 0..l {
        r[(i, i)].im = 0.0;
        for j in i + 1..l {
            r[(j, i)] = r[(i, j)].conj();
        }
    }
    Ok(r)
}

/// Ordered eigenvectors `phi` (`L x M`) with eigenvalues `lambda`,
/// descending. `M = 0` is allowed and projects nothing out.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspace {
    phi: CMatrix,
    lambda: Vec<f64>,
    sample_rate: f64,
}

impl Eigenspace {
    pub fn new(phi: CMatrix, lambda: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if phi.ncols() != lambda.len() {
            return Err(shape(format!(
                "{} eigenvectors but {} eigenvalues",
                phi.ncols(),
                lambda.len()
            )));
        }
        if phi.ncols() > phi.nrows() {
            return Err(shape(format!(
                "M={} exceeds L={}",
                phi.ncols(),
                phi.nrows()
            )));
        }
        if lambda.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("eigenvalues must be sorted in descending order"));
        }
        if lambda.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("eigenvalues must be finite and non-negative"));
        }
        if !(sample_rate > 0.0) {
            return Err(invalid(format!(
                "sample_rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Self {
            phi,
            lambda,
            sample_rate,
        })
    }

    /// Empty eigenspace (`M = 0`) of window length `l`.
    pub fn empty(l: usize, sample_rate: f64) -> Result<Self> {
        Self::new(CMatrix::zeros(l, 0), Vec::new(), sample_rate)
    }

    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn l(&self) -> usize {
        self.phi.nrows()
    }

    pub fn m(&self) -> usize {
        self.phi.ncols()
    }

    /// First `m` columns.
    pub fn leading(&self, m: usize) -> Result<Self> {
        if m > self.m() {
            return Err(invalid(format!("requested {m} columns of {}", self.m())));
        }
        Ok(Self {
            phi: self.phi.columns(0, m).into_owned(),
            lambda: self.lambda[..m].to_vec(),
            sample_rate: self.sample_rate,
        })
    }

    /// Size in bytes of the serialized exchange artifact.
    pub fn exchange_size_bytes(&self) -> usize {
        16 + 8 * self.l() * self.m() + 8 * self.m()
    }
}

/// Hermitian eigendecomposition of a lag covariance.
///
/// Eigenpairs are sorted by descending eigenvalue (ties keep solver order)
/// and each eigenvector is rotated so its largest-magnitude entry (first one
/// on ties) is real and positive. Eigenvalues within `1e-9 ||R||_F` below
/// zero are clamped to zero; anything more negative is rejected, since a
/// covariance is positive semidefinite.
pub fn eig_hermitian(r: &CMatrix, sample_rate: f64) -> Result<Eigenspace> {
    if r.nrows() != r.ncols() {
        return Err(shape(format!(
            "matrix is {}x{}, expected square",
            r.nrows(),
            r.ncols()
        )));
    }
    let norm = r.norm();
    let asym = (r - r.adjoint()).norm();
    if asym > 1e-9 * norm {
        return Err(invalid(format!(
            "matrix is not Hermitian (||R - R^H||_F = {asym:.3e})"
        )));
    }
    let mut h = r.clone();
    symmetrize(&mut h);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, EIG_MAX_ITERATIONS).ok_or(
        Error::NonConvergence {
            iterations: EIG_MAX_ITERATIONS,
        },
    )?;

    let n = r.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let floor = -1e-9 * norm;
    let mut lambda = Vec::with_capacity(n);
    let mut phi = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let v = eig.eigenvalues[src];
        if v < floor {
            return Err(invalid(format!(
                "matrix is not positive semidefinite (eigenvalue {v:.3e})"
            )));
        }
        lambda.push(v.max(0.0));
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        let mut best = -1.0;
        for (i, c) in col.iter().enumerate() {
            let m = c.norm();
            if m > best {
                best = m;
                pivot = i;
            }
        }
        let p = col[pivot];
        let rot = if p.norm() > 0.0 {
            p.conj() / p.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            phi[(i, dst)] = col[i] * rot;
        }
    }
    Eigenspace::new(phi, lambda, sample_rate)
}

/// Keeps the leading eigenpairs with `lambda_j >= rel_threshold * lambda_0`,
/// always at least one. An empty eigenspace is returned unchanged.
pub fn truncate(es: &Eigenspace, rel_threshold: f64) -> Result<Eigenspace> {
    if !(rel_threshold > 0.0 && rel_threshold <= 1.0) {
        return Err(invalid(format!(
            "rel_threshold must lie in (0, 1], got {rel_threshold}"
        )));
    }
    if es.m() == 0 {
        return Ok(es.clone());
    }
    let cut = rel_threshold * es.lambda[0];
    let m = if es.lambda[0] <= 0.0 {
        1
    } else {
        es.lambda.iter().take_while(|&&v| v >= cut).count().max(1)
    };
    es.leading(m)
}

/// `z = phi^H U`, shape `M x K`.
pub fn principal_components(es: &Eigenspace, traj: &Trajectory) -> Result<CMatrix> {
    if es.l() != traj.l() {
        return Err(shape(format!(
            "eigenspace L={} but trajectory L={}",
            es.l(),
            traj.l()
        )));
    }
    Ok(es.phi.adjoint() * &traj.u)
}

/// Eigenspace of `x` at window `l`, truncated at `rel_threshold`.
pub fn characterize(x: &ComplexSeries, l: usize, rel_threshold: f64) -> Result<Eigenspace> {
    let r = lag_covariance_from_series(x, l)?;
    truncate(&eig_hermitian(&r, x.sample_rate())?, rel_threshold)
}

/// Writes the exchange format: `u32 L`, `u32 M`, `f64 sample_rate`, then
/// `phi` column-major as `f32` (re, im) pairs, then `M` eigenvalues as
/// `f64`, all little-endian.
pub fn write_eigenspace<W: Write>(es: &Eigenspace, mut w: W) -> Result<()> {
    let mut buf = Vec::with_capacity(es.exchange_size_bytes());
    buf.extend_from_slice(&(es.l() as u32).to_le_bytes());
    buf.extend_from_slice(&(es.m() as u32).to_le_bytes());
    buf.extend_from_slice(&es.sample_rate.to_le_bytes());
    // nalgebra storage is column-major
    for v in es.phi.iter() {
        buf.extend_from_slice(&(v.re as f32).to_le_bytes());
        buf.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    for v in &es.lambda {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_eigenspace<R: Read>(mut r: R) -> Result<Eigenspace> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(Error::Format("eigenspace header truncated".into()));
    }
    let l = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let rate = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let expected = 16 + 8 * l * m + 8 * m;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "eigenspace L={l} M={m} needs {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let body = &bytes[16..16 + 8 * l * m];
    let vals = body.chunks_exact(8).map(|c| {
        let re = f32::from_le_bytes(c[..4].try_into().unwrap());
        let im = f32::from_le_bytes(c[4..].try_into().unwrap());
        Complex64::new(re as f64, im as f64)
    });
    let phi = CMatrix::from_iterator(l, m, vals);
    let lambda = bytes[16 + 8 * l * m..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Eigenspace::new(phi, lambda, rate).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::signals::gen_circular_gaussian;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn series(v: &[f64]) -> ComplexSeries {
        ComplexSeries::new(v.iter().map(|&r| c(r, 0.0)).collect(), 1.0).unwrap()
    }

    fn random_psd(n: usize, seed: u64) -> CMatrix {
        let mut rng = rng_from_seed(seed);
        let a = CMatrix::from_fn(n, n, |_, _| {
            c(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        });
        &a * a.adjoint()
    }

    fn residual(r: &CMatrix, es: &Eigenspace) -> f64 {
        let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            es.m(),
            es.lambda().iter().map(|&v| c(v, 0.0)),
        ));
        (r - es.phi() * lam * es.phi().adjoint()).norm() / r.norm()
    }

    #[test]
    fn embed_small_case() {
        let t = hankel_embed(&series(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        let want = CMatrix::from_row_slice(
            2,
            3,
            &[
                c(1., 0.),
                c(2., 0.),
                c(3., 0.),
                c(2., 0.),
                c(3., 0.),
                c(4., 0.),
            ],
        );
        assert_eq!(t.matrix(), &want);
    }

    #[test]
    fn embed_shape_and_bounds() {
        let x = gen_circular_gaussian(4000, 1.0, 1.0, 1).unwrap();
        let t = hankel_embed(&x, 500).unwrap();
        assert_eq!((t.l(), t.k()), (500, 3501));
        assert!(hankel_embed(&x, 1).is_err());
        assert!(hankel_embed(&x, 2001).is_err());
        assert!(hankel_embed(&x, 2000).is_ok());
    }

    #[test]
    fn constant_series_has_rank_one_trajectory() {
        let x = series(&[2.5; 40]);
        let es = eig_hermitian(&lag_covariance(&hankel_embed(&x, 8).unwrap()), 1.0).unwrap();
        assert!((es.lambda()[0] - 8.0 * 6.25).abs() < 1e-9);
        assert!(es.lambda()[1..].iter().all(|&v| v < 1e-9));
    }

    #[test]
    fn zero_series_gives_zero_covariance() {
        let x = ComplexSeries::zeros(50, 1.0).unwrap();
        let r = lag_covariance(&hankel_embed(&x, 5).unwrap());
        assert_eq!(r.norm(), 0.0);
        let es = eig_hermitian(&r, 1.0).unwrap();
        assert_eq!(truncate(&es, 0.01).unwrap().m(), 1);
    }

    #[test]
    fn white_noise_covariance_is_identity() {
        let x = gen_circular_gaussian(100_000, 1.0, 1.0, 3).unwrap();
        let r = lag_covariance(&hankel_embed(&x, 8).unwrap());
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r[(i, j)] - c(want, 0.0)).norm() < 0.05);
            }
        }
    }

    #[test]
    fn exponential_covariance_is_rank_one() {
        let p: f64 = 2.0;
        let x = ComplexSeries::new(
            (0..600)
                .map(|n| Complex64::from_polar(p.sqrt(), 0.37 * n as f64))
                .collect(),
            1.0,
        )
        .unwrap();
        let es = eig_hermitian(&lag_covariance(&hankel_embed(&x, 10).unwrap()), 1.0).unwrap();
        assert!((es.lambda()[0] / (10.0 * p) - 1.0).abs() < 1e-6);
        assert!(es.lambda()[1] < 1e-9);
    }

    #[test]
    fn structured_covariance_matches_literal() {
        let x = gen_circular_gaussian(777, 1.0, 1.0, 5).unwrap();
        for l in [2, 17, 100, 388] {
            let a = lag_covariance(&hankel_embed(&x, l).unwrap());
            let b = lag_covariance_from_series(&x, l).unwrap();
            assert!((&a - &b).norm() / a.norm() < 1e-12, "L={l}");
        }
    }

    #[test]
    fn identity_and_diagonal() {
        let es = eig_hermitian(&CMatrix::identity(4, 4), 1.0).unwrap();
        assert!(es.lambda().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(residual(&CMatrix::identity(4, 4), &es) < 1e-12);

        let d =
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(3.0, 0.0)]));
        let es = eig_hermitian(&d, 1.0).unwrap();
        assert_eq!(es.lambda(), &[3.0, 1.0]);
        assert!((es.phi()[(1, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((es.phi()[(0, 1)] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn random_psd_reconstructs() {
        for seed in 0..5 {
            let r = random_psd(20, seed);
            let es = eig_hermitian(&r, 1.0).unwrap();
            assert!(residual(&r, &es) < 1e-10);
            let gram = es.phi().adjoint() * es.phi();
            assert!((gram - CMatrix::identity(20, 20)).norm() < 1e-9);
            assert!(es.lambda().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn phase_convention_is_applied() {
        let es = eig_hermitian(&random_psd(12, 9), 1.0).unwrap();
        for j in 0..12 {
            let col = es.phi().column(j);
            let (idx, _) = col.iter().enumerate().fold((0, -1.0), |acc, (i, v)| {
                if v.norm() > acc.1 {
                    (i, v.norm())
                } else {
                    acc
                }
            });
            assert!(col[idx].im.abs() < 1e-12 && col[idx].re > 0.0);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(3, 3);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            eig_hermitian(&m, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(eig_hermitian(&CMatrix::zeros(2, 3), 1.0).is_err());
        let neg = -CMatrix::identity(3, 3);
        assert!(eig_hermitian(&neg, 1.0).is_err());
    }

    fn with_lambda(lambda: &[f64]) -> Eigenspace {
        let n = lambda.len();
        Eigenspace::new(CMatrix::identity(n, n), lambda.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(
            truncate(&with_lambda(&[10.0, 5.0, 0.05]), 0.01)
                .unwrap()
                .m(),
            2
        );
        assert_eq!(
            truncate(&with_lambda(&[10.0, 5.0, 0.1]), 0.01).unwrap().m(),
            3
        );
        assert_eq!(
            truncate(&with_lambda(&[1.0, 0.0, 0.0]), 0.01).unwrap().m(),
            1
        );
        assert_eq!(truncate(&with_lambda(&[0.0, 0.0]), 0.01).unwrap().m(), 1);
        assert!(truncate(&with_lambda(&[1.0]), 0.0).is_err());
        assert!(truncate(&with_lambda(&[1.0]), 1.5).is_err());
        let empty = Eigenspace::empty(4, 1.0).unwrap();
        assert_eq!(truncate(&empty, 0.01).unwrap().m(), 0);
    }

    #[test]
    fn real_tone_needs_two_directions() {
        let x = series(&(0..400).map(|n| (0.3 * n as f64).cos()).collect::<Vec<_>>());
        assert_eq!(characterize(&x, 20, 0.01).unwrap().m(), 2);
    }

    #[test]
    fn principal_components_cases() {
        let x = gen_circular_gaussian(60, 1.0, 1.0, 2).unwrap();
        let t = hankel_embed(&x, 6).unwrap();
        let ident = Eigenspace::new(CMatrix::identity(6, 6), vec![1.0; 6], 1.0).unwrap();
        assert_eq!(&principal_components(&ident, &t).unwrap(), t.matrix());
        let first = ident.leading(1).unwrap();
        let z = principal_components(&first, &t).unwrap();
        assert_eq!(z.row(0), t.matrix().row(0));

        let es = eig_hermitian(&lag_covariance(&t), 1.0).unwrap();
        let z = principal_components(&es, &t).unwrap();
        assert!((z.norm() - t.matrix().norm()).abs() < 1e-10);

        let other = Eigenspace::empty(5, 1.0).unwrap();
        assert!(principal_components(&other, &t).is_err());
    }

    #[test]
    fn eigenvalue_sum_is_trace() {
        let x = gen_circular_gaussian(300, 2.0, 1.0, 8).unwrap();
        let r = lag_covariance_from_series(&x, 30).unwrap();
        let es = eig_hermitian(&r, 1.0).unwrap();
        let trace: f64 = (0..30).map(|i| r[(i, i)].re).sum();
        let sum: f64 = es.lambda().iter().sum();
        assert!((sum - trace).abs() < 1e-9 * trace);
    }

    #[test]
    fn exchange_round_trip() {
        let x = gen_circular_gaussian(200, 1.0, 5e3, 8).unwrap();
        let es = characterize(&x, 10, 0.5).unwrap();
        let mut buf = Vec::new();
        write_eigenspace(&es, &mut buf).unwrap();
        assert_eq!(buf.len(), es.exchange_size_bytes());
        let back = read_eigenspace(&buf[..]).unwrap();
        assert_eq!((back.l(), back.m(), back.sample_rate()), (10, es.m(), 5e3));
        assert_eq!(back.lambda(), es.lambda());
        assert!((back.phi() - es.phi()).norm() < 1e-6);
        assert!(read_eigenspace(&buf[..buf.len() - 1]).is_err());

        let empty = Eigenspace::empty(7, 1.0).unwrap();
        let mut buf = Vec::new();
        write_eigenspace(&empty, &mut buf).unwrap();
        assert_eq!(read_eigenspace(&buf[..]).unwrap(), empty);
    }
}
