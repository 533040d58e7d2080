#include "drda/moments.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace drda {

Matrix MomentPair::second_moment() const {
    return symmetrize(cov + mean * mean.transpose());
}

std::string to_string(DivergenceKind kind) {
    return kind == DivergenceKind::KlType ? "KL" : "WASS";
}

Vector augment(const Vector& beta) {
    Vector w(beta.size() + 1);
    w.head(beta.size()) = beta;
    w(beta.size()) = -1.0;
    return w;
}

Matrix symmetrize(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

double asymmetry(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

bool is_positive_definite(const Matrix& m) {
    if (m.rows() != m.cols() || !m.allFinite()) return false;
    Eigen::LLT<Matrix> llt(symmetrize(m));
    return llt.info() == Eigen::Success;
}

double logdet_pd(const Matrix& m) {
    Eigen::LLT<Matrix> llt(symmetrize(m));
    if (llt.info() != Eigen::Success || !m.allFinite()) {
        throw NumericError("covariance not positive definite");
    }
    const Matrix& l = llt.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
    return 2.0 * acc;
}

Matrix inverse_pd(const Matrix& m) {
    Eigen::LLT<Matrix> llt(symmetrize(m));
    if (llt.info() != Eigen::Success || !m.allFinite()) {
        throw NumericError("covariance not positive definite");
    }
    return symmetrize(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

Matrix psd_sqrt(const Matrix& m) {
    if (m.rows() != m.cols()) throw NumericError("psd_sqrt: matrix not square");
    if (asymmetry(m) > 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
        throw NumericError("psd_sqrt: matrix not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    if (es.info() != Eigen::Success) throw NumericError("psd_sqrt: eigendecomposition failed");
    Vector ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-10 * scale) {
        throw NumericError("psd_sqrt: matrix has a negative eigenvalue");
    }
    ev = ev.cwiseMax(0.0).cwiseSqrt();
    const Matrix& v = es.eigenvectors();
    return symmetrize(v * ev.asDiagonal() * v.transpose());
}

Matrix pd_inv_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0.0) {
        throw NumericError("matrix not positive definite");
    }
    const Vector ev = es.eigenvalues().cwiseSqrt().cwiseInverse();
    const Matrix& v = es.eigenvectors();
    return symmetrize(v * ev.asDiagonal() * v.transpose());
}

MomentPair empirical_moments(const Dataset& data) {
    if (data.empty()) throw DataError("empty dataset");
    const Eigen::Index d = data.features();
    const Eigen::Index p = d + 1;
    const double n = static_cast<double>(data.size());

    Vector mean = Vector::Zero(p);
    Matrix second = Matrix::Zero(p, p);
    Vector z(p);
    for (const auto& row : data.rows) {
        if (row.x.size() != d) throw DataError("rows have inconsistent feature counts");
        z.head(d) = row.x;
        z(d) = row.y;
        mean += z;
        second.selfadjointView<Eigen::Lower>().rankUpdate(z);
    }
    mean /= n;
    second = second.selfadjointView<Eigen::Lower>();
    Matrix cov = second / n - mean * mean.transpose();
    return {mean, symmetrize(cov)};
}

void validate(const MomentPair& m) {
    if (m.cov.rows() != m.cov.cols() || m.cov.rows() != m.mean.size()) {
        throw NumericError("moment pair dimension mismatch");
    }
    if (!m.mean.allFinite() || !m.cov.allFinite()) throw NumericError("moment pair not finite");
    const double scale = std::max(1.0, m.cov.cwiseAbs().maxCoeff());
    if (asymmetry(m.cov) > 1e-12 * scale) throw NumericError("covariance not symmetric");
    if (min_eigenvalue(m.cov) < -1e-10 * scale) throw NumericError("covariance not positive semidefinite");
}

double kl_divergence(const MomentPair& a, const MomentPair& b) {
    if (a.dim() != b.dim()) throw NumericError("moment pair dimension mismatch");
    const Eigen::Index p = a.dim();
    Eigen::LLT<Matrix> lb(symmetrize(b.cov));
    if (lb.info() != Eigen::Success) throw NumericError("covariance not positive definite");
    const double logdet_a = logdet_pd(a.cov);
    const double logdet_b = logdet_pd(b.cov);

    const Vector diff = b.mean - a.mean;
    const double quad = diff.dot(lb.solve(diff));
    // tr(a.cov b.cov⁻¹)
    const double trace = lb.solve(a.cov).trace();
    const double value = quad + trace - (logdet_a - logdet_b) - static_cast<double>(p);
    return std::max(value, 0.0);
}

double wasserstein_divergence(const MomentPair& a, const MomentPair& b) {
    if (a.dim() != b.dim()) throw NumericError("moment pair dimension mismatch");
    const Matrix root_b = psd_sqrt(b.cov);
    const Matrix cross = psd_sqrt(symmetrize(root_b * a.cov * root_b));
    const double value = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
    return std::max(value, 0.0);
}

double divergence(DivergenceKind kind, const MomentPair& a, const MomentPair& b) {
    return kind == DivergenceKind::KlType ? kl_divergence(a, b) : wasserstein_divergence(a, b);
}

MomentPair regularize(const MomentPair& m, double jitter) {
    if (jitter < 0.0) throw NumericError("jitter must be nonnegative");
    MomentPair out = m;
    out.cov.diagonal().array() += jitter;
    return out;
}

double default_jitter(const MomentPair& m) {
    const double p = static_cast<double>(m.dim());
    const double tr = m.cov.trace();
    return 1e-8 * (tr > 0.0 ? tr : 1.0) / p;
}

MomentPair ensure_positive_definite(const MomentPair& m, double* applied) {
    if (applied) *applied = 0.0;
    if (is_positive_definite(m.cov)) return m;
    double jitter = default_jitter(m);
    for (int attempt = 0; attempt < 12; ++attempt, jitter *= 10.0) {
        MomentPair out = regularize(m, jitter);
        if (is_positive_definite(out.cov)) {
            if (applied) *applied = jitter;
            return out;
        }
    }
    throw NumericError("covariance could not be regularized to positive definite");
}

}  // namespace drda
