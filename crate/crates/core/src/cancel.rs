//! Orthogonal-complement projection and inverse-KLT reconstruction.
//!
//! Given the interference eigenspace `Phi_R` (shared by the transmitter) and
//! the telescope's own eigenspace `Phi_T`, the cleaned trajectory is
//!
//! ```text
//! P       = I - Phi_R (Phi_R^H Phi_R)^-1 Phi_R^H
//! U_hat   = (P Phi_T)(Phi_T^H U_T)
//! ```
//!
//! and the series is recovered by averaging `U_hat` along anti-diagonals.

use nalgebra::{Cholesky, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::klt::{
    eig_hermitian, hankel_embed, lag_covariance, lag_covariance_from_series, principal_components,
    truncate, CMatrix, Eigenspace, DEFAULT_TRUNCATION,
};
use crate::signals::ComplexSeries;

/// Gram matrices at or above this condition number are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    p: CMatrix,
}

impl Projector {
    pub fn identity(l: usize) -> Self {
        Self {
            p: CMatrix::identity(l, l),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.p
    }

    pub fn l(&self) -> usize {
        self.p.nrows()
    }

    pub fn apply(&self, v: &CMatrix) -> Result<CMatrix> {
        if v.nrows() != self.l() {
            return Err(shape(format!(
                "projector is {}x{0}, operand has {} rows",
                self.l(),
                v.nrows()
            )));
        }
        Ok(&self.p * v)
    }
}

/// Condition number of a Hermitian positive definite matrix, or infinity if
/// it is singular.
fn hermitian_condition(g: &CMatrix) -> f64 {
    let ev = SymmetricEigen::new(g.clone()).eigenvalues;
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `P = I - Phi (Phi^H Phi)^-1 Phi^H`. The Gram system is solved by
/// Cholesky rather than inverted, so a `Phi_R` whose columns drifted from
/// orthonormality (e.g. after the `f32` exchange format) still yields an
/// exact projector onto the complement of its span.
pub fn orth_complement(phi_r: &Eigenspace) -> Result<Projector> {
    let l = phi_r.l();
    if phi_r.m() == 0 {
        return Ok(Projector::identity(l));
    }
    let phi = phi_r.phi();
    let gram = phi.adjoint() * phi;
    let cond = hermitian_condition(&gram);
    if !(cond < MAX_GRAM_CONDITION) {
        return Err(Error::IllConditioned { condition: cond });
    }
    let chol = Cholesky::new(gram).ok_or(Error::IllConditioned { condition: cond })?;
    let x = chol.solve(&phi.adjoint());
    let mut p = CMatrix::identity(l, l) - phi * x;
    for i in 0..l {
        p[(i, i)].im = 0.0;
        for j in i + 1..l {
            let v = (p[(i, j)] + p[(j, i)].conj()) * 0.5;
            p[(i, j)] = v;
            p[(j, i)] = v.conj();
        }
    }
    Ok(Projector { p })
}

/// `Phi_hat = P Phi_T`; columns are left unnormalized.
pub fn project_eigenspace(p: &Projector, phi_t: &Eigenspace) -> Result<CMatrix> {
    p.apply(phi_t.phi())
}

/// `U_hat = Phi_hat z`.
pub fn reconstruct_trajectory(phi_hat: &CMatrix, z: &CMatrix) -> Result<CMatrix> {
    if phi_hat.ncols() != z.nrows() {
        return Err(shape(format!(
            "cannot multiply {}x{} by {}x{}",
            phi_hat.nrows(),
            phi_hat.ncols(),
            z.nrows(),
            z.ncols()
        )));
    }
    Ok(phi_hat * z)
}

/// Averages each anti-diagonal `i + j = n` of an `L x K` matrix (`L <= K`)
/// into sample `n` of a series of length `L + K - 1`.
pub fn diagonal_average(uhat: &CMatrix, sample_rate: f64) -> Result<ComplexSeries> {
    let (l, k) = uhat.shape();
    if l == 0 || l > k {
        return Err(invalid(format!(
            "diagonal averaging needs 1 <= L <= K, got {l}x{k}"
        )));
    }
    let n = l + k - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..k {
        for i in 0..l {
            out[i + j] += uhat[(i, j)];
        }
    }
    for (idx, v) in out.iter_mut().enumerate() {
        let count = (idx + 1).min(l).min(n - idx);
        *v /= count as f64;
    }
    ComplexSeries::new(out, sample_rate)
}

/// How the cancellation is evaluated. Both routes compute the same series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Materializes the trajectory and every intermediate matrix.
    #[default]
    Literal,
    /// Works from the series directly; see [`cancel_structured`].
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CancelOptions {
    /// Truncate `Phi_T` with the same rule as `Phi_R` before projecting.
    pub truncate_phi_t: bool,
    pub threshold: f64,
    pub route: Route,
}

impl Default for CancelOptions {
    fn default() -> Self {
        Self {
            truncate_phi_t: false,
            threshold: DEFAULT_TRUNCATION,
            route: Route::Literal,
        }
    }
}

/// Cancellation result with the telescope-side subspace size.
#[derive(Debug, Clone, PartialEq)]
pub struct CancelOutput {
    pub reconstructed: ComplexSeries,
    /// Number of `Phi_T` columns used.
    pub m_t: usize,
}

/// Cancellation with default options: untruncated `Phi_T`, literal route.
pub fn cancel_pipeline(x_t: &ComplexSeries, phi_r: &Eigenspace, l: usize) -> Result<ComplexSeries> {
    Ok(cancel_with(x_t, phi_r, l, &CancelOptions::default())?.reconstructed)
}

pub fn cancel_with(
    x_t: &ComplexSeries,
    phi_r: &Eigenspace,
    l: usize,
    opts: &CancelOptions,
) -> Result<CancelOutput> {
    if phi_r.l() != l {
        return Err(shape(format!(
            "Phi_R has L={} but window is {l}",
            phi_r.l()
        )));
    }
    if x_t.len() <= 2 * l {
        return Err(invalid(format!(
            "series length {} must exceed 2L = {}",
            x_t.len(),
            2 * l
        )));
    }
    match opts.route {
        Route::Literal => cancel_literal(x_t, phi_r, l, opts),
        Route::Structured => cancel_structured(x_t, phi_r, l, opts),
    }
}

fn telescope_eigenspace(r: &CMatrix, rate: f64, opts: &CancelOptions) -> Result<Eigenspace> {
    let es = eig_hermitian(r, rate)?;
    if opts.truncate_phi_t {
        truncate(&es, opts.threshold)
    } else {
        Ok(es)
    }
}

fn cancel_literal(
    x_t: &ComplexSeries,
    phi_r: &Eigenspace,
    l: usize,
    opts: &CancelOptions,
) -> Result<CancelOutput> {
    let traj = hankel_embed(x_t, l)?;
    let phi_t = telescope_eigenspace(&lag_covariance(&traj), x_t.sample_rate(), opts)?;
    let z = principal_components(&phi_t, &traj)?;
    let p = orth_complement(phi_r)?;
    let phi_hat = project_eigenspace(&p, &phi_t)?;
    let uhat = reconstruct_trajectory(&phi_hat, &z)?;
    let averaged = diagonal_average(&uhat, x_t.sample_rate())?;
    Ok(CancelOutput {
        reconstructed: ComplexSeries::with_center(
            averaged.into_samples(),
            x_t.sample_rate(),
            x_t.center_freq(),
        )?,
        m_t: phi_t.m(),
    })
}

/// Same result as the literal route without forming the `L x K` trajectory.
///
/// With `A = P Phi_T Phi_T^H` the cleaned trajectory is `A U`. For samples
/// whose anti-diagonal is complete (`L - 1 <= n <= K - 1`) the average
/// collapses to an FIR filter over the series,
/// `out[n] = (1/L) sum_d c_d x[n + d]` with `c_d = sum_{m - i = d} A[i][m]`.
/// The `2(L - 1)` edge samples come from the columns of `A U` they touch.
pub fn cancel_structured(
    x_t: &ComplexSeries,
    phi_r: &Eigenspace,
    l: usize,
    opts: &CancelOptions,
) -> Result<CancelOutput> {
    let r = lag_covariance_from_series(x_t, l)?;
    let phi_t = telescope_eigenspace(&r, x_t.sample_rate(), opts)?;
    let p = orth_complement(phi_r)?;
    let a = project_eigenspace(&p, &phi_t)? * phi_t.phi().adjoint();

    let x = x_t.samples();
    let n = x.len();
    let k = n - l + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); n];

    // c[d + L - 1] for d in -(L-1)..=(L-1)
    let mut c = vec![Complex64::new(0.0, 0.0); 2 * l - 1];
    for i in 0..l {
        for m in 0..l {
            c[m + l - 1 - i] += a[(i, m)];
        }
    }
    let inv_l = 1.0 / l as f64;
    for (idx, o) in out.iter_mut().enumerate().take(k).skip(l - 1) {
        let base = idx + 1 - l;
        let acc: Complex64 = c
            .iter()
            .zip(&x[base..base + 2 * l - 1])
            .map(|(c, v)| c * v)
            .sum();
        *o = acc * inv_l;
    }

    // columns of A U feeding the incomplete anti-diagonals
    let column = |j: usize| -> Vec<Complex64> {
        let seg = &x[j..j + l];
        (0..l)
            .map(|i| (0..l).map(|m| a[(i, m)] * seg[m]).sum())
            .collect()
    };
    let head = (l - 1).min(k);
    for j in 0..head {
        let col = column(j);
        for (i, v) in col.into_iter().enumerate() {
            if i + j < l - 1 {
                out[i + j] += v;
            }
        }
    }
    for j in k.saturating_sub(l - 1)..k {
        let col = column(j);
        for (i, v) in col.into_iter().enumerate() {
            if i + j > k - 1 {
                out[i + j] += v;
            }
        }
    }
    for idx in (0..l - 1).chain(k..n) {
        let count = (idx + 1).min(l).min(n - idx);
        out[idx] /= count as f64;
    }

    Ok(CancelOutput {
        reconstructed: ComplexSeries::with_center(out, x_t.sample_rate(), x_t.center_freq())?,
        m_t: phi_t.m(),
    })
}
