#include "drda/baselines.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace drda {

namespace {

Vector solve_normal_equations(const Matrix& a, const Vector& b) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) throw NumericError("singular normal equations");
    return llt.solve(b);
}

void accumulate(const Sample& s, double weight, Matrix& a, Vector& b) {
    a.selfadjointView<Eigen::Lower>().rankUpdate(s.x, weight);
    b += weight * s.y * s.x;
}

Matrix full_symmetric(const Matrix& lower) {
    return lower.selfadjointView<Eigen::Lower>();
}

Eigen::Index check_features(const Dataset& data) {
    const Eigen::Index d = data.features();
    for (const auto& s : data.rows) {
        if (s.x.size() != d) throw DataError("ragged feature rows");
    }
    return d;
}

// Euclidean projection onto the probability simplex (sort-based).
Vector project_simplex(const Vector& v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumsum += u[k];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0);
}

}  // namespace

Expert ridge(const Dataset& data, double eta) {
    if (data.empty()) throw DataError("empty dataset");
    if (eta < 0.0) throw ConfigError("ridge penalty must be nonnegative");
    const Eigen::Index d = check_features(data);
    Matrix a = Matrix::Zero(d, d);
    Vector b = Vector::Zero(d);
    for (const auto& s : data.rows) accumulate(s, 1.0, a, b);
    const double n = static_cast<double>(data.size());
    Matrix sys = full_symmetric(a) / n;
    sys.diagonal().array() += eta;
    return {solve_normal_equations(sys, b / n), "ridge"};
}

Expert convex_combination(const Expert& beta_s, const Expert& beta_t, double lambda) {
    if (beta_s.beta.size() != beta_t.beta.size()) throw NumericError("expert length mismatch");
    return {lambda * beta_s.beta + (1.0 - lambda) * beta_t.beta, "CC lambda=" + std::to_string(lambda)};
}

Schedule schedule(double a, double b, int k, ScheduleKind kind) {
    if (k < 2) throw ConfigError("schedule needs at least two points");
    Schedule s;
    s.kind = kind;
    s.values.resize(static_cast<std::size_t>(k));
    s.values.front() = a;
    if (kind == ScheduleKind::Linear) {
        for (int i = 1; i < k; ++i) s.values[i] = a + (b - a) * static_cast<double>(i) / (k - 1);
    } else {
        // e^i / sum e^i evaluated as e^(i - (K-1)) / sum e^(i - (K-1)) to avoid overflow.
        double denom = 0.0;
        for (int i = 1; i < k; ++i) denom += std::exp(static_cast<double>(i - (k - 1)));
        for (int i = 1; i < k; ++i) {
            s.values[i] = s.values[i - 1] - (a - b) * std::exp(static_cast<double>(i - (k - 1))) / denom;
        }
    }
    s.values.back() = b;
    return s;
}

double gaussian_kernel(const Sample& u, const Sample& v, double h) {
    const double dy = u.y - v.y;
    return std::exp(-((u.x - v.x).squaredNorm() + dy * dy) / (h * h));
}

double rws_objective(const Dataset& source, const Dataset& target, double h, const Vector& alpha) {
    double total = 0.0;
    for (const auto& t : target.rows) {
        double inner = 0.0;
        for (std::size_t l = 0; l < source.size(); ++l) inner += alpha(l) * gaussian_kernel(t, source.rows[l], h);
        if (!(inner > 0.0)) return -std::numeric_limits<double>::infinity();
        total += std::log(inner);
    }
    return total;
}

KernelWeights rws_weights(const Dataset& source, const Dataset& target, double h, const RwsOptions& opts) {
    if (source.empty() || target.empty()) throw DataError("empty dataset");
    if (source.features() != target.features()) throw DataError("source and target feature counts differ");
    if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
    const Eigen::Index ns = static_cast<Eigen::Index>(source.size());
    const Eigen::Index nt = static_cast<Eigen::Index>(target.size());

    Matrix kss(ns, ns);
    for (Eigen::Index i = 0; i < ns; ++i) {
        for (Eigen::Index l = 0; l <= i; ++l) kss(i, l) = kss(l, i) = gaussian_kernel(source.rows[i], source.rows[l], h);
    }
    const Vector colsum = kss.colwise().sum().transpose();

    // alpha_l = N_S q_l / colsum_l puts the equality constraint on the simplex in q;
    // the objective becomes sum_j log((A q)_j) with A_jl = N_S K(t_j, s_l) / colsum_l.
    Matrix a(nt, ns);
    for (Eigen::Index j = 0; j < nt; ++j) {
        for (Eigen::Index l = 0; l < ns; ++l) {
            a(j, l) = static_cast<double>(ns) * gaussian_kernel(target.rows[j], source.rows[l], h) / colsum(l);
        }
        if (!(a.row(j).sum() > 0.0)) throw NumericError("degenerate bandwidth");
    }

    auto objective = [&](const Vector& q) {
        const Vector aq = a * q;
        if ((aq.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
        return aq.array().log().sum();
    };
    auto gradient = [&](const Vector& q) {
        const Vector aq = a * q;
        return Vector(a.transpose() * aq.cwiseInverse());
    };

    Vector q = Vector::Constant(ns, 1.0 / static_cast<double>(ns));
    double fq = objective(q);
    double step = 1.0 / std::max(1.0, gradient(q).norm());
    KernelWeights out;
    out.bandwidth = h;
    for (; out.iterations < opts.max_iters; ++out.iterations) {
        const Vector g = gradient(q);
        if ((project_simplex(q + g) - q).norm() <= opts.tol) {
            out.converged = true;
            break;
        }
        // Backtracking on the projected arc; the quadratic model is the usual
        // sufficient-ascent test for projected gradient steps.
        step *= 2.0;
        bool moved = false;
        for (int ls = 0; ls < 80; ++ls, step *= 0.5) {
            const Vector trial = project_simplex(q + step * g);
            const Vector delta = trial - q;
            const double ft = objective(trial);
            if (std::isfinite(ft) && ft >= fq + g.dot(delta) - delta.squaredNorm() / (2.0 * step)) {
                moved = delta.squaredNorm() > 0.0;
                q = trial;
                fq = ft;
                break;
            }
        }
        if (!moved) break;
    }

    out.alpha = static_cast<double>(ns) * q.cwiseQuotient(colsum);
    out.weights = kss * out.alpha;
    out.objective = fq;
    return out;
}

Expert weighted_ridge(const Dataset& source, const Dataset& target, const Vector& weights, double eta) {
    if (static_cast<Eigen::Index>(source.size()) != weights.size()) throw DataError("weight count differs from source rows");
    if (eta < 0.0) throw ConfigError("ridge penalty must be nonnegative");
    if ((weights.array() < 0.0).any()) throw DataError("weights must be nonnegative");
    const Eigen::Index d = std::max(source.features(), target.features());
    if (d == 0) throw DataError("empty dataset");
    Matrix a = Matrix::Zero(d, d);
    Vector b = Vector::Zero(d);
    for (const auto& s : target.rows) {
        if (s.x.size() != d) throw DataError("ragged feature rows");
        accumulate(s, 1.0, a, b);
    }
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source.rows[i].x.size() != d) throw DataError("ragged feature rows");
        accumulate(source.rows[i], weights(static_cast<Eigen::Index>(i)), a, b);
    }
    Matrix sys = full_symmetric(a);
    sys.diagonal().array() += eta;
    return {solve_normal_equations(sys, b), "weighted ridge"};
}

Expert sequential_ridge(const Dataset& train, const std::vector<Sample>& prefix, double eta) {
    Dataset all = train;
    all.rows.insert(all.rows.end(), prefix.begin(), prefix.end());
    return ridge(all, eta);
}

}  // namespace drda
