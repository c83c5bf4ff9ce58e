#include "svf/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "svf/error.hpp"

namespace svf {

namespace {

constexpr double kRidge = 1e-10;
constexpr double kSupportThreshold = 1e-6;

// Square-root factor A with A'A = S.
Eigen::MatrixXd seminorm_factor(const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols()) throw Error(ErrorCode::DimensionMismatch, "seminorm matrix must be square");
    if (!s.allFinite()) throw Error(ErrorCode::Validation, "seminorm matrix has non-finite entries");
    const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const Eigen::VectorXd lam = es.eigenvalues();
    const double tol = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    if (lam.minCoeff() < -tol) throw Error(ErrorCode::Validation, "seminorm matrix is not positive semidefinite");
    const Eigen::VectorXd root = lam.cwiseMax(0.0).cwiseSqrt();
    return root.asDiagonal() * es.eigenvectors().transpose();
}

// min ||m y - b|| subject to sum(y) = 1 over the columns in `free`; minimum-norm
// solution. Returns the y entries in the order of `free`.
Eigen::VectorXd solve_face(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, const std::vector<Eigen::Index>& free) {
    const Eigen::Index k = static_cast<Eigen::Index>(free.size());
    if (k == 1) return Eigen::VectorXd::Ones(1);
    Eigen::MatrixXd mf(m.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) mf.col(j) = m.col(free[static_cast<std::size_t>(j)]);

    // Orthonormal basis of {x : 1'x = 0} from a QR factorization of the ones vector.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
    const Eigen::MatrixXd ones_col = ones;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones_col);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
    const Eigen::MatrixXd null = q.rightCols(k - 1);

    const Eigen::VectorXd y0 = ones / static_cast<double>(k);
    const Eigen::MatrixXd lhs = mf * null;
    const Eigen::VectorXd rhs = b - mf * y0;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(lhs);
    cod.setThreshold(1e-13);
    const Eigen::VectorXd z = cod.solve(rhs);
    return y0 + null * z;
}

}  // namespace

void VolatilityProfile::validate() const {
    const auto p = target.size();
    if (donors.rows() != p)
        throw Error(ErrorCode::DimensionMismatch, "donor profile has " + std::to_string(donors.rows()) +
                                                      " rows but the target has " + std::to_string(p));
    if (donors.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "profile needs at least one donor");
    if (p == 0) throw Error(ErrorCode::DimensionMismatch, "profile needs at least one covariate");
    if (!covariate_names.empty() && static_cast<Eigen::Index>(covariate_names.size()) != p)
        throw Error(ErrorCode::DimensionMismatch, "covariate names do not match the profile rows");
    if (!donor_names.empty() && static_cast<Eigen::Index>(donor_names.size()) != donors.cols())
        throw Error(ErrorCode::DimensionMismatch, "donor names do not match the profile columns");
    if (!target.allFinite() || !donors.allFinite())
        throw Error(ErrorCode::Validation, "profile has missing or non-finite entries");
}

VolatilityProfile VolatilityProfile::without(std::optional<std::size_t> donor,
                                             std::optional<std::size_t> covariate) const {
    const bool has_raw = raw_target.size() == target.size() && raw_donors.rows() == donors.rows() &&
                         raw_donors.cols() == donors.cols();
    const Eigen::VectorXd& src_t = has_raw ? raw_target : target;
    const Eigen::MatrixXd& src_d = has_raw ? raw_donors : donors;
    const Eigen::Index p = src_t.size(), n = src_d.cols();
    if (donor && static_cast<Eigen::Index>(*donor) >= n)
        throw Error(ErrorCode::DimensionMismatch, "donor index out of range");
    if (covariate && static_cast<Eigen::Index>(*covariate) >= p)
        throw Error(ErrorCode::DimensionMismatch, "covariate index out of range");

    std::vector<Eigen::Index> rows, cols;
    for (Eigen::Index i = 0; i < p; ++i)
        if (!covariate || static_cast<Eigen::Index>(*covariate) != i) rows.push_back(i);
    for (Eigen::Index j = 0; j < n; ++j)
        if (!donor || static_cast<Eigen::Index>(*donor) != j) cols.push_back(j);

    VolatilityProfile out;
    out.target.resize(static_cast<Eigen::Index>(rows.size()));
    out.donors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.target[static_cast<Eigen::Index>(r)] = src_t[rows[r]];
        for (std::size_t c = 0; c < cols.size(); ++c)
            out.donors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = src_d(rows[r], cols[c]);
    }
    if (!covariate_names.empty())
        for (auto r : rows) out.covariate_names.push_back(covariate_names[static_cast<std::size_t>(r)]);
    if (!donor_names.empty())
        for (auto c : cols) out.donor_names.push_back(donor_names[static_cast<std::size_t>(c)]);
    return out;
}

VolatilityProfile standardize(const VolatilityProfile& profile) {
    profile.validate();
    VolatilityProfile out = profile;
    const bool has_raw = profile.raw_target.size() == profile.target.size() &&
                         profile.raw_donors.rows() == profile.donors.rows() &&
                         profile.raw_donors.cols() == profile.donors.cols();
    if (!has_raw) {
        out.raw_target = profile.target;
        out.raw_donors = profile.donors;
    }
    const Eigen::Index p = profile.target.size();
    const Eigen::Index n = profile.donors.cols();
    const double events = static_cast<double>(n + 1);
    out.constant_rows.assign(static_cast<std::size_t>(p), false);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double mean = (profile.target[i] + profile.donors.row(i).sum()) / events;
        double ss = (profile.target[i] - mean) * (profile.target[i] - mean);
        double scale = std::abs(profile.target[i]);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = profile.donors(i, j) - mean;
            ss += d * d;
            scale = std::max(scale, std::abs(profile.donors(i, j)));
        }
        const double sd = std::sqrt(ss / (events - 1.0));
        if (!(sd > 1e-14 * scale) || sd == 0.0) {
            out.target[i] = 0.0;
            out.donors.row(i).setZero();
            out.constant_rows[static_cast<std::size_t>(i)] = true;
            continue;
        }
        out.target[i] = (profile.target[i] - mean) / sd;
        for (Eigen::Index j = 0; j < n; ++j) out.donors(i, j) = (profile.donors(i, j) - mean) / sd;
    }
    out.standardized = true;
    return out;
}

double seminorm(const Eigen::VectorXd& x, const std::optional<Eigen::MatrixXd>& s) {
    if (!s) return x.norm();
    if (s->rows() != x.size() || s->cols() != x.size())
        throw Error(ErrorCode::DimensionMismatch, "seminorm matrix does not match the vector length");
    return std::sqrt(std::max(0.0, x.dot(*s * x)));
}

WeightSolution solve_weights(const VolatilityProfile& profile, const std::optional<Eigen::MatrixXd>& seminorm_matrix) {
    profile.validate();
    const Eigen::Index p = profile.target.size();
    const Eigen::Index n = profile.donors.cols();
    if (seminorm_matrix && (seminorm_matrix->rows() != p || seminorm_matrix->cols() != p))
        throw Error(ErrorCode::DimensionMismatch, "seminorm matrix must be p x p");

    Eigen::MatrixXd m = profile.donors;
    Eigen::VectorXd b = profile.target;
    if (seminorm_matrix) {
        const Eigen::MatrixXd a = seminorm_factor(*seminorm_matrix);
        m = a * profile.donors;
        b = a * profile.target;
    }

    // Ridge rows sqrt(eps) I make the face problems strictly convex.
    const double col_scale = std::max(1.0, m.squaredNorm() / static_cast<double>(n));
    const double ridge = std::sqrt(kRidge * col_scale);
    Eigen::MatrixXd m_aug(p + n, n);
    m_aug.topRows(p) = m;
    m_aug.bottomRows(n) = ridge * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b_aug = Eigen::VectorXd::Zero(p + n);
    b_aug.head(p) = b;

    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    std::vector<bool> in_free(static_cast<std::size_t>(n), true);
    const double grad_tol = 1e-13 * std::max(1.0, (m_aug.transpose() * b_aug).lpNorm<Eigen::Infinity>() + col_scale);

    const int max_iter = 50 * static_cast<int>(n) + 100;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<Eigen::Index> free;
        for (Eigen::Index j = 0; j < n; ++j)
            if (in_free[static_cast<std::size_t>(j)]) free.push_back(j);
        const Eigen::VectorXd y = solve_face(m_aug, b_aug, free);

        bool feasible = true;
        for (Eigen::Index k = 0; k < y.size(); ++k)
            if (y[k] < 0.0) feasible = false;

        if (feasible) {
            pi.setZero();
            for (std::size_t k = 0; k < free.size(); ++k) pi[free[k]] = y[static_cast<Eigen::Index>(k)];
            // KKT: every donor off the face must have gradient >= the face multiplier.
            const Eigen::VectorXd g = m_aug.transpose() * (m_aug * pi - b_aug);
            double lambda = 0.0;
            for (auto j : free) lambda += g[j];
            lambda /= static_cast<double>(free.size());
            Eigen::Index enter = -1;
            double most = -grad_tol;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (in_free[static_cast<std::size_t>(j)]) continue;
                const double reduced = g[j] - lambda;
                if (reduced < most) {
                    most = reduced;
                    enter = j;
                }
            }
            if (enter < 0) break;
            in_free[static_cast<std::size_t>(enter)] = true;
            continue;
        }

        // Move toward y until the first free weight hits zero, then drop it.
        double step = 1.0;
        Eigen::Index leave = -1;
        for (std::size_t k = 0; k < free.size(); ++k) {
            const double yk = y[static_cast<Eigen::Index>(k)];
            const double cur = pi[free[k]];
            if (yk < 0.0) {
                const double t = cur / (cur - yk);
                if (t < step) {
                    step = t;
                    leave = free[k];
                }
            }
        }
        for (std::size_t k = 0; k < free.size(); ++k)
            pi[free[k]] += step * (y[static_cast<Eigen::Index>(k)] - pi[free[k]]);
        if (leave >= 0) {
            pi[leave] = 0.0;
            in_free[static_cast<std::size_t>(leave)] = false;
        }
        for (auto j : free)
            if (pi[j] <= 0.0) {
                pi[j] = 0.0;
                in_free[static_cast<std::size_t>(j)] = false;
            }
        if (std::none_of(in_free.begin(), in_free.end(), [](bool f) { return f; })) {
            Eigen::Index best;
            pi.maxCoeff(&best);
            in_free[static_cast<std::size_t>(best)] = true;
        }
    }

    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();

    WeightSolution sol;
    sol.weights = pi;
    const Eigen::VectorXd resid = profile.target - profile.donors * pi;
    sol.objective = seminorm(resid, seminorm_matrix);
    for (Eigen::Index j = 0; j < n; ++j)
        if (pi[j] > kSupportThreshold) sol.active_support.push_back(static_cast<std::size_t>(j));

    Eigen::MatrixXd aff(p + 1, n);
    aff.topRows(p) = m;
    aff.row(p).setOnes();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(aff);
    lu.setThreshold(1e-10);
    sol.unique_hint = lu.rank() == n;
    return sol;
}

double aggregate_shock(const Eigen::VectorXd& weights, const Eigen::VectorXd& donor_effects) {
    if (weights.size() != donor_effects.size())
        throw Error(ErrorCode::DimensionMismatch, "weights and donor effects differ in length");
    return weights.dot(donor_effects);
}

double aggregate_shock(const WeightSolution& weights, const Eigen::VectorXd& donor_effects) {
    return aggregate_shock(weights.weights, donor_effects);
}

double mean_shock(const Eigen::VectorXd& donor_effects) {
    if (donor_effects.size() == 0) throw Error(ErrorCode::DimensionMismatch, "no donor effects to average");
    return donor_effects.mean();
}

OlsContrast ols_contrast(const VolatilityProfile& profile, const Eigen::VectorXd& donor_effects) {
    profile.validate();
    if (donor_effects.size() != profile.donors.cols())
        throw Error(ErrorCode::DimensionMismatch, "one effect per donor is required");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(profile.donors.transpose());
    OlsContrast out;
    out.coefficients = cod.solve(donor_effects);
    out.implied_adjustment = profile.target.dot(out.coefficients);
    return out;
}

std::vector<double> singular_value_shares(const Eigen::MatrixXd& donors) {
    if (donors.size() == 0) return {};
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(donors);
    const Eigen::VectorXd sv = svd.singularValues();
    const double total = sv.squaredNorm();
    std::vector<double> shares(static_cast<std::size_t>(sv.size()), 0.0);
    if (total <= 0.0) return shares;
    for (Eigen::Index i = 0; i < sv.size(); ++i) shares[static_cast<std::size_t>(i)] = sv[i] * sv[i] / total;
    return shares;
}

}  // namespace svf
