#pragma once

#include "drda/types.hpp"

namespace drda {

// ---------------------------------------------------------------------------
// Dense symmetric matrix helpers
// ---------------------------------------------------------------------------

/// (m + mᵀ) / 2.
Matrix symmetrize(const Matrix& m);

/// Largest |m(i,j) - m(j,i)|.
double asymmetry(const Matrix& m);

double min_eigenvalue(const Matrix& m);

/// Cholesky succeeds.
bool is_positive_definite(const Matrix& m);

/// log det of a positive definite matrix via Cholesky.
/// Throws NumericError("covariance not positive definite") otherwise.
double logdet_pd(const Matrix& m);

/// Inverse of a positive definite matrix via Cholesky, symmetrized.
Matrix inverse_pd(const Matrix& m);

/// Principal square root of a symmetric PSD matrix. Eigenvalues down to
/// -1e-10 (relative to the spectral radius) are clamped to zero; anything
/// more negative, or an asymmetry above 1e-9, is an error.
Matrix psd_sqrt(const Matrix& m);

/// Inverse principal square root of a symmetric positive definite matrix.
Matrix pd_inv_sqrt(const Matrix& m);

// ---------------------------------------------------------------------------
// Moments and divergences
// ---------------------------------------------------------------------------

/// Population (1/N) mean and covariance of the joint vector (x, y).
MomentPair empirical_moments(const Dataset& data);

/// Throws NumericError if the pair violates the MomentPair invariants
/// (dimension mismatch, asymmetry > 1e-12 relative, eigenvalue < -1e-10).
void validate(const MomentPair& m);

/// KL-type divergence of a from b:
///   (b.mean - a.mean)ᵀ b.cov⁻¹ (b.mean - a.mean) + tr(a.cov b.cov⁻¹)
///     - log det(a.cov b.cov⁻¹) - p.
/// Asymmetric; a is the "moving" argument.
double kl_divergence(const MomentPair& a, const MomentPair& b);

/// Squared 2-Wasserstein distance between Gaussians with the given moments.
double wasserstein_divergence(const MomentPair& a, const MomentPair& b);

double divergence(DivergenceKind kind, const MomentPair& a, const MomentPair& b);

/// cov + jitter * I.
MomentPair regularize(const MomentPair& m, double jitter);

/// 1e-8 * tr(cov) / p, the jitter used when a covariance fails Cholesky.
double default_jitter(const MomentPair& m);

/// Returns m unchanged when its covariance is positive definite, otherwise
/// regularize(m, default_jitter(m)), escalating by 10x until Cholesky passes.
/// `applied` receives the total jitter added (0 when none).
MomentPair ensure_positive_definite(const MomentPair& m, double* applied = nullptr);

}  // namespace drda
