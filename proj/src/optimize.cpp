#include "svf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace svf::optim {

namespace {

double step_for(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

struct Simplex {
    std::vector<Eigen::VectorXd> x;
    std::vector<double> f;

    void order() {
        std::vector<std::size_t> idx(f.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        std::vector<Eigen::VectorXd> x2;
        std::vector<double> f2;
        for (auto i : idx) {
            x2.push_back(x[i]);
            f2.push_back(f[i]);
        }
        x.swap(x2);
        f.swap(f2);
    }

    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 1; i < x.size(); ++i) d = std::max(d, (x[i] - x[0]).lpNorm<Eigen::Infinity>());
        return d;
    }
};

Result run_nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opts,
                       int& evals) {
    const Eigen::Index n = x0.size();
    Simplex s;
    s.x.push_back(x0);
    s.f.push_back(f(x0));
    ++evals;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd xi = x0;
        xi[i] += step_for(x0[i], opts.initial_step);
        s.x.push_back(xi);
        s.f.push_back(f(xi));
        ++evals;
    }

    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return f(x);
    };

    Result r;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        s.order();
        const double fbest = s.f.front(), fworst = s.f.back();
        if (std::isfinite(fworst) &&
            std::abs(fworst - fbest) <= opts.ftol * (1.0 + std::abs(fbest)) &&
            s.diameter() <= opts.xtol) {
            r.converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) centroid += s.x[static_cast<std::size_t>(i)];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd& worst = s.x.back();
        Eigen::VectorXd xr = centroid + (centroid - worst);
        const double fr = eval(xr);
        const double fsecond = s.f[s.f.size() - 2];

        if (fr < fbest) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst);
            const double fe = eval(xe);
            if (fe < fr) {
                s.x.back() = xe;
                s.f.back() = fe;
            } else {
                s.x.back() = xr;
                s.f.back() = fr;
            }
            continue;
        }
        if (fr < fsecond) {
            s.x.back() = xr;
            s.f.back() = fr;
            continue;
        }
        // Contraction, outside if the reflection improved on the worst vertex.
        const bool outside = fr < fworst;
        Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                     : Eigen::VectorXd(centroid + 0.5 * (worst - centroid));
        const double fc = eval(xc);
        if (fc < (outside ? fr : fworst)) {
            s.x.back() = xc;
            s.f.back() = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for (std::size_t i = 1; i < s.x.size(); ++i) {
            s.x[i] = s.x[0] + 0.5 * (s.x[i] - s.x[0]);
            s.f[i] = eval(s.x[i]);
        }
    }
    s.order();
    r.x = s.x.front();
    r.value = s.f.front();
    r.iterations = it;
    return r;
}

}  // namespace

Result nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
    int evals = 0;
    Result best = run_nelder_mead(f, x0, opts, evals);
    int total_iters = best.iterations;
    for (int k = 0; k < opts.restarts && best.converged; ++k) {
        Result again = run_nelder_mead(f, best.x, opts, evals);
        total_iters += again.iterations;
        const bool moved = again.value < best.value - opts.ftol * (1.0 + std::abs(best.value));
        if (again.value <= best.value) best = again;
        if (!moved) break;
    }
    best.iterations = total_iters;
    best.evaluations = evals;
    return best;
}

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                 int* evaluations) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step_for(x[i], rel_step);
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        const double fp = f(xp), fm = f(xm);
        if (evaluations) *evaluations += 2;
        if (std::isfinite(fp) && std::isfinite(fm)) {
            g[i] = (fp - fm) / (2.0 * h);
        } else {
            // One-sided fallback next to the boundary of the feasible region.
            const double f0 = f(x);
            if (evaluations) ++*evaluations;
            g[i] = std::isfinite(fp) ? (fp - f0) / h : std::isfinite(fm) ? (f0 - fm) / h
                                                                          : std::numeric_limits<double>::quiet_NaN();
        }
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return g;
}

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd hess(n, n);
    const double f0 = f(x);
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) h[i] = step_for(x[i], rel_step);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            Eigen::VectorXd y = x;
            double v;
            if (i == j) {
                y[i] = x[i] + h[i];
                const double fp = f(y);
                y[i] = x[i] - h[i];
                const double fm = f(y);
                v = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
            } else {
                auto at = [&](double si, double sj) {
                    Eigen::VectorXd z = x;
                    z[i] += si * h[i];
                    z[j] += sj * h[j];
                    return f(z);
                };
                v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h[i] * h[j]);
            }
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

Result bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& opts) {
    Result r;
    int evals = 0;
    Eigen::VectorXd x = x0;
    double fx = f(x);
    ++evals;
    r.x = x;
    r.value = fx;
    if (!std::isfinite(fx)) {
        r.evaluations = evals;
        return r;
    }
    const Eigen::Index n = x.size();
    Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g = numeric_gradient(f, x, opts.fd_step, &evals);

    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        if (!g.allFinite()) break;
        if (g.lpNorm<Eigen::Infinity>() <= opts.gtol) {
            r.converged = true;
            break;
        }
        Eigen::VectorXd dir = -inv_h * g;
        double slope = g.dot(dir);
        if (slope >= 0.0) {
            inv_h.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
        }
        double t = 1.0;
        double ft = std::numeric_limits<double>::infinity();
        Eigen::VectorXd xt;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            xt = x + t * dir;
            ft = f(xt);
            ++evals;
            if (std::isfinite(ft) && ft <= fx + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;

        Eigen::VectorXd gt = numeric_gradient(f, xt, opts.fd_step, &evals);
        const Eigen::VectorXd sk = xt - x;
        const Eigen::VectorXd yk = gt - g;
        const double sy = sk.dot(yk);
        if (sy > 1e-12 * sk.norm() * yk.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
            inv_h = (id - rho * sk * yk.transpose()) * inv_h * (id - rho * yk * sk.transpose()) +
                    rho * sk * sk.transpose();
        }
        const bool stalled = std::abs(fx - ft) <= 1e-15 * (1.0 + std::abs(fx));
        x = xt;
        fx = ft;
        g = gt;
        if (stalled) {
            r.converged = g.allFinite() && g.lpNorm<Eigen::Infinity>() <= std::sqrt(opts.gtol);
            break;
        }
    }
    r.x = x;
    r.value = fx;
    r.iterations = it;
    r.evaluations = evals;
    return r;
}

}  // namespace svf::optim
