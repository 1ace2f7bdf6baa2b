// SPDX-License-Identifier: Apache-2.0
#include "lhsz/anova.hpp"

#include "lhsz/errors.hpp"
#include "lhsz/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace lhsz {
namespace {

constexpr std::size_t chunk_size = 4096;

enum class Tag : std::uint64_t { outer = 1, inner = 2, grand_for_effect = 3 };

StreamKey derived_key(const StreamKey& seed, Tag tag, std::uint64_t a, std::uint64_t b = 0) {
    return StreamKey{seed.master_seed,
                     combine_ids({seed.replication_index, seed.column_index,
                                  static_cast<std::uint64_t>(seed.purpose), static_cast<std::uint64_t>(tag), a, b}),
                     0, Purpose::oracle};
}

// Running mean and (co)variance, merged in a fixed order.
struct Moments {
    std::size_t count = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd m2;  // full covariance numerator when `full`, else diagonal in column 0
    bool full = true;

    Moments(std::size_t p, bool full_cov) : mean(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))), full(full_cov) {
        const auto ip = static_cast<Eigen::Index>(p);
        m2 = full ? Eigen::MatrixXd::Zero(ip, ip) : Eigen::MatrixXd::Zero(ip, 1);
    }

    void add(const Eigen::Ref<const Eigen::VectorXd>& x) {
        ++count;
        const Eigen::VectorXd delta = x - mean;
        mean += delta / static_cast<double>(count);
        if (full) {
            m2.noalias() += delta * (x - mean).transpose();
        } else {
            m2.col(0).array() += delta.array() * (x - mean).array();
        }
    }

    void merge(const Moments& o) {
        if (o.count == 0) return;
        if (count == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(count);
        const double nb = static_cast<double>(o.count);
        const double n = na + nb;
        const Eigen::VectorXd delta = o.mean - mean;
        mean += delta * (nb / n);
        if (full) {
            m2 += o.m2 + delta * delta.transpose() * (na * nb / n);
        } else {
            m2.col(0) += o.m2.col(0) + (delta.array().square() * (na * nb / n)).matrix();
        }
        count += o.count;
    }

    /// Unbiased covariance (full) or variances (diagonal).
    Eigen::MatrixXd covariance() const {
        if (count < 2) return Eigen::MatrixXd::Zero(m2.rows(), m2.cols());
        return m2 / static_cast<double>(count - 1);
    }
};

void draw_point(Stream& s, std::span<double> x, double& aux, bool uses_aux) {
    for (auto& v : x) v = s.next_uniform();
    aux = uses_aux ? s.next_uniform() : 0.0;
}

void evaluate_checked(const VectorField& f, std::span<const double> x, double aux, std::span<double> out) {
    f.eval(x, aux, out);
    for (double v : out) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::non_finite_value, "field '" + f.label + "' returned a non-finite value");
        }
    }
}

void validate_field(const VectorField& f) {
    if (f.d == 0 || f.q == 0 || !f.eval) {
        throw Error(ErrorKind::invalid_argument, "vector field needs d >= 1, q >= 1 and an evaluator");
    }
}

std::size_t chunk_count(std::size_t n) { return (n + chunk_size - 1) / chunk_size; }

// Welford over IID points of the outer stream; shared by grand_mean and the
// outer pass so both see the same points.
Moments outer_moments(const VectorField& f, std::size_t n, const StreamKey& seed, bool full_cov) {
    const std::size_t chunks = chunk_count(n);
    std::vector<Moments> parts(chunks, Moments(f.q, full_cov));
    parallel_for(chunks, [&](std::size_t c) {
        Stream s(derived_key(seed, Tag::outer, c));
        std::vector<double> x(f.d);
        Eigen::VectorXd y(static_cast<Eigen::Index>(f.q));
        const std::size_t end = std::min(n, (c + 1) * chunk_size);
        double aux = 0.0;
        for (std::size_t i = c * chunk_size; i < end; ++i) {
            draw_point(s, x, aux, f.uses_auxiliary);
            evaluate_checked(f, x, aux, {y.data(), f.q});
            parts[c].add(y);
        }
    });
    Moments total(f.q, full_cov);
    for (const auto& p : parts) total.merge(p);
    return total;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index q) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), q, q);
}

}  // namespace

VectorField promote_auxiliary(const VectorField& f) {
    if (!f.uses_auxiliary) return f;
    VectorField g;
    g.label = f.label + "+aux";
    g.d = f.d + 1;
    g.q = f.q;
    g.uses_auxiliary = false;
    g.eval = [inner = f.eval, d = f.d](std::span<const double> x, double, std::span<double> out) {
        inner(x.first(d), x[d], out);
    };
    return g;
}

MeanEstimate grand_mean(const VectorField& f, std::size_t n_mc, const StreamKey& seed) {
    validate_field(f);
    if (n_mc < 2) throw Error(ErrorKind::invalid_argument, "grand_mean: n_mc must be >= 2");
    const Moments m = outer_moments(f, n_mc, seed, false);
    MeanEstimate out;
    out.mean = m.mean;
    out.standard_error = (m.covariance().col(0).array() / static_cast<double>(n_mc)).sqrt().matrix();
    out.samples = n_mc;
    return out;
}

void MainEffectTable::interpolate(double x, std::span<double> out) const {
    const auto K = values.rows();
    const double s = x * static_cast<double>(K) - 0.5;
    Eigen::Index k = static_cast<Eigen::Index>(std::floor(s));
    k = std::clamp<Eigen::Index>(k, 0, K - 2);
    const double w = s - static_cast<double>(k);
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        out[static_cast<std::size_t>(c)] = (1.0 - w) * values(k, c) + w * values(k + 1, c);
    }
}

MainEffectTable main_effect(const VectorField& f, std::size_t j, std::size_t bins, std::size_t inner,
                            const StreamKey& seed, const Eigen::VectorXd& grand) {
    validate_field(f);
    if (j >= f.d) throw Error(ErrorKind::invalid_argument, "main_effect: coordinate out of range");
    if (bins < 2 || inner < 2) throw Error(ErrorKind::invalid_argument, "main_effect: need bins >= 2 and inner >= 2");
    if (static_cast<std::size_t>(grand.size()) != f.q) {
        throw Error(ErrorKind::invalid_argument, "main_effect: grand mean has wrong length");
    }
    const auto q = static_cast<Eigen::Index>(f.q);
    MainEffectTable table;
    table.coordinate = j;
    table.inner = inner;
    table.values.resize(static_cast<Eigen::Index>(bins), q);
    table.noise.resize(static_cast<Eigen::Index>(bins), q * q);

    parallel_for(bins, [&](std::size_t k) {
        Stream s(derived_key(seed, Tag::inner, j, k));
        const double mid = (static_cast<double>(k) + 0.5) / static_cast<double>(bins);
        std::vector<double> x(f.d);
        Eigen::VectorXd y(q);
        Moments m(f.q, true);
        double aux = 0.0;
        for (std::size_t r = 0; r < inner; ++r) {
            draw_point(s, x, aux, f.uses_auxiliary);
            x[j] = mid;
            evaluate_checked(f, x, aux, {y.data(), f.q});
            m.add(y);
        }
        const auto row = static_cast<Eigen::Index>(k);
        table.values.row(row) = (m.mean - grand).transpose();
        table.noise.row(row) = vec(m.covariance() / static_cast<double>(inner)).transpose();
    });
    return table;
}

MainEffectTable main_effect(const VectorField& f, std::size_t j, std::size_t bins, std::size_t inner,
                            const StreamKey& seed) {
    const auto g = grand_mean(f, bins * inner, derived_key(seed, Tag::grand_for_effect, j));
    return main_effect(f, j, bins, inner, seed, g.mean);
}

Eigen::VectorXd DecompositionReport::remainder(std::span<const double> x, std::span<const double> value) const {
    const auto q = G.size();
    Eigen::VectorXd rem = Eigen::Map<const Eigen::VectorXd>(value.data(), q) - G;
    Eigen::VectorXd eff(q);
    for (const auto& t : main_effects) {
        t.interpolate(x[t.coordinate], {eff.data(), static_cast<std::size_t>(q)});
        rem -= eff;
    }
    return rem;
}

DecompositionReport remainder_covariance(const VectorField& f, std::size_t outer, std::size_t bins,
                                         std::size_t inner, const StreamKey& seed, DecompositionOptions options) {
    validate_field(f);
    if (outer < 100) throw Error(ErrorKind::invalid_argument, "remainder_covariance: outer must be >= 100");
    if (bins < 2 || inner < 2) {
        throw Error(ErrorKind::invalid_argument, "remainder_covariance: need bins >= 2 and inner >= 2");
    }
    const auto q = static_cast<Eigen::Index>(f.q);
    const auto qq = q * q;
    const double N = static_cast<double>(outer);

    DecompositionReport rep;
    rep.mc_sizes = {outer, bins, inner};

    const MeanEstimate g = grand_mean(f, outer, seed);
    rep.G = g.mean;
    rep.G_standard_error = g.standard_error;

    rep.main_effects.reserve(f.d);
    for (std::size_t j = 0; j < f.d; ++j) rep.main_effects.push_back(main_effect(f, j, bins, inner, seed, rep.G));

    // A_j by the midpoint rule with the expected noise term removed; the
    // variance of each A_j entry feeds the residual's standard error.
    Eigen::MatrixXd sum_A = Eigen::MatrixXd::Zero(q, q);
    Eigen::MatrixXd var_A = Eigen::MatrixXd::Zero(q, q);
    const double K = static_cast<double>(bins);
    for (const auto& t : rep.main_effects) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(q, q);
        for (Eigen::Index k = 0; k < t.values.rows(); ++k) {
            const Eigen::VectorXd v = t.values.row(k).transpose();
            const Eigen::MatrixXd nk = unvec(t.noise.row(k).transpose(), q);
            A += v * v.transpose() - nk;
            for (Eigen::Index a = 0; a < q; ++a) {
                for (Eigen::Index b = 0; b < q; ++b) {
                    var_A(a, b) += (v(a) * v(a) * nk(b, b) + v(b) * v(b) * nk(a, a) + 2.0 * v(a) * v(b) * nk(a, b) +
                                    nk(a, a) * nk(b, b) + nk(a, b) * nk(a, b)) /
                                   (K * K);
                }
            }
        }
        A /= K;
        rep.main_effect_cov.push_back(A);
        sum_A += A;
    }

    // Outer pass over the same points as grand_mean.
    const std::size_t chunks = chunk_count(outer);
    struct Part {
        Moments rr, w;
        Eigen::VectorXd ff, noise;
    };
    std::vector<Part> parts(chunks, Part{Moments(static_cast<std::size_t>(qq), false),
                                         Moments(static_cast<std::size_t>(qq), false), Eigen::VectorXd::Zero(qq),
                                         Eigen::VectorXd::Zero(qq)});
    Eigen::MatrixXd rems(static_cast<Eigen::Index>(outer), q);
    parallel_for(chunks, [&](std::size_t c) {
        Stream s(derived_key(seed, Tag::outer, c));
        std::vector<double> x(f.d);
        Eigen::VectorXd y(q), eff(q);
        Eigen::MatrixXd C(q, q);
        Part& part = parts[c];
        double aux = 0.0;
        const std::size_t end = std::min(outer, (c + 1) * chunk_size);
        for (std::size_t i = c * chunk_size; i < end; ++i) {
            draw_point(s, x, aux, f.uses_auxiliary);
            evaluate_checked(f, x, aux, {y.data(), f.q});
            const Eigen::VectorXd centered = y - rep.G;
            Eigen::VectorXd rem = centered;
            C.setZero();
            for (const auto& t : rep.main_effects) {
                t.interpolate(x[t.coordinate], {eff.data(), f.q});
                rem -= eff;
                const auto Kt = static_cast<Eigen::Index>(t.bins());
                const double sgrid = x[t.coordinate] * static_cast<double>(Kt) - 0.5;
                const Eigen::Index k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(sgrid)), 0, Kt - 2);
                const double w = sgrid - static_cast<double>(k);
                C += (1.0 - w) * (1.0 - w) * unvec(t.noise.row(k).transpose(), q) +
                     w * w * unvec(t.noise.row(k + 1).transpose(), q);
            }
            const Eigen::MatrixXd cc = centered * centered.transpose();
            const Eigen::MatrixXd rr = rem * rem.transpose();
            part.rr.add(vec(rr));
            part.w.add(vec(cc - rr));
            part.ff += vec(cc);
            part.noise += vec(C);
            rems.row(static_cast<Eigen::Index>(i)) = rem.transpose();
        }
    });
    Moments rr(static_cast<std::size_t>(qq), false), w(static_cast<std::size_t>(qq), false);
    Eigen::VectorXd ff = Eigen::VectorXd::Zero(qq), noise = Eigen::VectorXd::Zero(qq);
    for (const auto& p : parts) {
        rr.merge(p.rr);
        w.merge(p.w);
        ff += p.ff;
        noise += p.noise;
    }
    ff /= N;
    noise /= N;

    const Eigen::MatrixXd noise_mean = unvec(noise, q);
    // Relative error of the noise estimate itself (inner sample covariances).
    const double noise_rel = std::sqrt(2.0 / static_cast<double>(inner - 1));

    rep.R = unvec(rr.mean, q) - noise_mean;
    rep.R = 0.5 * (rep.R + rep.R.transpose());
    rep.full_cov = unvec(ff, q);
    rep.residual = unvec(w.mean, q) + noise_mean - sum_A;

    const Eigen::MatrixXd rr_var = unvec(rr.covariance().col(0), q) / N;
    const Eigen::MatrixXd w_var = unvec(w.covariance().col(0), q) / N;
    const Eigen::MatrixXd noise_var = (noise_mean * noise_rel).array().square().matrix();
    rep.standard_errors = (rr_var + noise_var).array().sqrt().matrix();
    rep.residual_standard_errors = (w_var + noise_var + 2.0 * var_A).array().sqrt().matrix();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rep.R);
    rep.min_eigenvalue = eig.eigenvalues()(0);
    const Eigen::VectorXd v = eig.eigenvectors().col(0);
    const Eigen::VectorXd proj = (rems * v).array().square().matrix();
    const double proj_mean = proj.mean();
    const double proj_var = (proj.array() - proj_mean).square().sum() / (N - 1.0);
    const double se_min = std::sqrt(proj_var / N + std::pow(v.dot(noise_mean * v) * noise_rel, 2));
    rep.psd_tolerance = 1e-8 * rep.R.trace() + 3.0 * se_min;

    if (options.check_orthogonality) {
        for (Eigen::Index a = 0; a < q; ++a) {
            for (Eigen::Index b = 0; b < q; ++b) {
                const double r = std::abs(rep.residual(a, b));
                const double se = rep.residual_standard_errors(a, b);
                const double floor = 1e-12 * (1.0 + std::abs(rep.full_cov(a, b)));
                if (r > 10.0 * se + floor) {
                    throw Error(ErrorKind::degenerate_decomposition,
                                "orthogonality residual exceeds 10 standard errors; refine the bin grid");
                }
            }
        }
    }
    return rep;
}

}  // namespace lhsz
