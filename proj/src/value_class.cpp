#include "cps/value_class.hpp"

#include <algorithm>
#include <cmath>

#include "cps/logsumexp.hpp"

namespace cps {

void QFunctionClass::validate() const {
    if (horizon <= 0) throw ValidationError("class horizon must be positive");
    if (static_cast<int>(members.size()) != horizon)
        throw ValidationError("class members must have one level per step");
    if (static_cast<int>(prior.size()) != horizon)
        throw ValidationError("class prior must have one vector per step");
    const std::size_t table_len = static_cast<std::size_t>(num_states) * num_actions;
    for (int h = 0; h < horizon; ++h) {
        const auto& level = members[static_cast<std::size_t>(h)];
        const auto& p = prior[static_cast<std::size_t>(h)];
        if (level.empty()) throw ValidationError("members[h=" + std::to_string(h) + "] is empty");
        if (p.size() != level.size())
            throw ValidationError("prior[h=" + std::to_string(h) +
                                  "] length does not match member count");
        double psum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] <= 0.0)
                throw ValidationError("prior[h=" + std::to_string(h) + "][i=" +
                                      std::to_string(i) + "] must be positive");
            psum += p[i];
        }
        if (std::abs(psum - 1.0) > 1e-12)
            throw ValidationError("prior[h=" + std::to_string(h) + "] sums to " +
                                  std::to_string(psum) + ", expected 1");
        for (std::size_t i = 0; i < level.size(); ++i) {
            if (level[i].size() != table_len)
                throw ValidationError("members[h=" + std::to_string(h) + "][i=" +
                                      std::to_string(i) + "] has wrong table size");
            for (double v : level[i])
                if (v < 0.0)
                    throw ValidationError("members[h=" + std::to_string(h) + "][i=" +
                                          std::to_string(i) + "] has a negative value");
        }
    }
}

QFunctionClass make_uniform_prior_class(
    int horizon, int num_states, int num_actions,
    std::vector<std::vector<std::vector<double>>> members) {
    QFunctionClass cls;
    cls.horizon = horizon;
    cls.num_states = num_states;
    cls.num_actions = num_actions;
    cls.members = std::move(members);
    cls.prior.resize(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        std::size_t n = cls.members[static_cast<std::size_t>(h)].size();
        cls.prior[static_cast<std::size_t>(h)].assign(n, 1.0 / static_cast<double>(n));
    }
    return cls;
}

std::vector<std::vector<std::vector<double>>> bellman_images(const TabularMdp& mdp,
                                                             const QFunctionClass& cls) {
    const int H = cls.horizon;
    std::vector<std::vector<std::vector<double>>> images(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        const int n_next = cls.size(h + 1);
        images[static_cast<std::size_t>(h)].resize(static_cast<std::size_t>(n_next));
        for (int j = 0; j < n_next; ++j) {
            const std::vector<double>& f_next =
                (h + 1 < H) ? cls.table(h + 1, j) : std::vector<double>{};
            images[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)] =
                bellman_apply(mdp, h, f_next);
        }
    }
    return images;
}

DeterministicPolicy greedy_policy(const QFunctionClass& cls, const MemberIndexTuple& f) {
    DeterministicPolicy p = make_policy(cls.horizon, cls.num_states);
    for (int h = 0; h < cls.horizon; ++h) {
        int i = f[static_cast<std::size_t>(h)];
        for (int x = 0; x < cls.num_states; ++x) {
            int best_a = 0;
            double best = cls.value(h, i, x, 0);
            for (int a = 1; a < cls.num_actions; ++a) {
                double v = cls.value(h, i, x, a);
                if (v > best) {
                    best = v;
                    best_a = a;
                }
            }
            p.action(h, x) = best_a;
        }
    }
    return p;
}

std::vector<double> residual_table(const TabularMdp& mdp, const QFunctionClass& cls, int h,
                                   int member, int next_member) {
    const std::vector<double>& f_next =
        (h + 1 < cls.horizon) ? cls.table(h + 1, next_member) : std::vector<double>{};
    std::vector<double> target = bellman_apply(mdp, h, f_next);
    const std::vector<double>& f = cls.table(h, member);
    for (std::size_t idx = 0; idx < target.size(); ++idx) target[idx] = f[idx] - target[idx];
    return target;
}

double bellman_residual(const TabularMdp& mdp, const QFunctionClass& cls,
                        const MemberIndexTuple& f, int h, int x, int a) {
    int j = (h + 1 < cls.horizon) ? f[static_cast<std::size_t>(h + 1)] : 0;
    std::vector<double> res = residual_table(mdp, cls, h, f[static_cast<std::size_t>(h)], j);
    return res[static_cast<std::size_t>(x * cls.num_actions + a)];
}

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

AssumptionReport check_assumptions(const TabularMdp& mdp, const QFunctionClass& cls,
                                   double tol) {
    AssumptionReport rep;
    const int H = cls.horizon;

    // Boundedness: values in [0, b-1] for b = boundedness_b(cls), so the only
    // failure modes are negative or non-finite entries.
    rep.bounded = true;
    for (int h = 0; h < H; ++h) {
        for (int i = 0; i < cls.size(h); ++i) {
            bool flagged = false;
            for (double v : cls.table(h, i)) {
                if (flagged) break;
                if (v < 0.0 || !std::isfinite(v)) {
                    rep.bounded = false;
                    flagged = true;
                    rep.violations.push_back("value outside [0, b-1] in member (h=" +
                                             std::to_string(h) + ", i=" + std::to_string(i) +
                                             ")");
                }
            }
        }
    }

    // Realizability: stagewise match of Q* within tol in sup norm.
    ValueTables vt = optimal_values(mdp);
    rep.realizable = true;
    rep.realizable_witness.assign(static_cast<std::size_t>(H), -1);
    const int S = mdp.num_states, A = mdp.num_actions;
    for (int h = 0; h < H; ++h) {
        std::vector<double> qstar(static_cast<std::size_t>(S) * A);
        for (int x = 0; x < S; ++x)
            for (int a = 0; a < A; ++a)
                qstar[static_cast<std::size_t>(x * A + a)] = vt.q_at(h, x, a, S, A);
        int found = -1;
        for (int i = 0; i < cls.size(h); ++i) {
            if (sup_diff(cls.table(h, i), qstar) <= tol) {
                found = i;
                break;
            }
        }
        rep.realizable_witness[static_cast<std::size_t>(h)] = found;
        if (found < 0) {
            rep.realizable = false;
            rep.violations.push_back("no member matches Q* at h=" + std::to_string(h));
        }
    }

    // Completeness: every T*_h f^{h+1} has a match in F_h within tol.
    rep.complete = true;
    auto images = bellman_images(mdp, cls);
    for (int h = 0; h < H; ++h) {
        for (int j = 0; j < cls.size(h + 1); ++j) {
            const auto& img = images[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)];
            bool found = false;
            for (int i = 0; i < cls.size(h); ++i) {
                if (sup_diff(cls.table(h, i), img) <= tol) {
                    found = true;
                    break;
                }
            }
            if (!found) {
                rep.complete = false;
                rep.violations.push_back("no member of F_" + std::to_string(h + 1) +
                                         " matches T* image of next-step member " +
                                         std::to_string(j));
            }
        }
    }
    return rep;
}

std::vector<std::vector<double>> cover_masses(const TabularMdp& mdp,
                                              const QFunctionClass& cls, double epsilon) {
    auto images = bellman_images(mdp, cls);
    const int H = cls.horizon;
    std::vector<std::vector<double>> masses(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        const int n_next = cls.size(h + 1);
        masses[static_cast<std::size_t>(h)].assign(static_cast<std::size_t>(n_next), 0.0);
        for (int j = 0; j < n_next; ++j) {
            const auto& img = images[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)];
            double mass = 0.0;
            for (int i = 0; i < cls.size(h); ++i)
                if (sup_diff(cls.table(h, i), img) <= epsilon)
                    mass += cls.prior[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)];
            masses[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)] = mass;
        }
    }
    return masses;
}

double kappa(const QFunctionClass& cls, double epsilon, const TabularMdp& mdp) {
    auto masses = cover_masses(mdp, cls, epsilon);
    double total = 0.0;
    for (int h = 0; h < cls.horizon; ++h) {
        double worst = 0.0;
        for (int j = 0; j < cls.size(h + 1); ++j) {
            double m = masses[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)];
            if (m <= 0.0) throw EmptyCoverSet(h, j);
            worst = std::max(worst, -std::log(m));
        }
        total += worst;
    }
    return total;
}

std::vector<double> kappa_alpha(const QFunctionClass& cls, double alpha, double epsilon,
                                const TabularMdp& mdp) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("kappa_alpha requires alpha in (0,1)");
    auto masses = cover_masses(mdp, cls, epsilon);
    const double expo = -alpha / (1.0 - alpha);
    std::vector<double> out(static_cast<std::size_t>(cls.horizon), 0.0);
    for (int h = 0; h < cls.horizon; ++h) {
        const int n_next = cls.size(h + 1);
        std::vector<double> log_terms(static_cast<std::size_t>(n_next));
        for (int j = 0; j < n_next; ++j) {
            double m = masses[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)];
            if (m <= 0.0) throw EmptyCoverSet(h, j);
            // next-level prior: p_0^{h+1}, point mass at the zero function for h = H-1
            double lp = (h + 1 < cls.horizon) ? cls.log_prior(h + 1, j) : 0.0;
            log_terms[static_cast<std::size_t>(j)] = lp + expo * std::log(m);
        }
        out[static_cast<std::size_t>(h)] = (1.0 - alpha) * log_sum_exp(log_terms);
    }
    return out;
}

std::vector<double> kappa_alpha_limit(const QFunctionClass& cls, double epsilon,
                                      const TabularMdp& mdp) {
    auto masses = cover_masses(mdp, cls, epsilon);
    std::vector<double> out(static_cast<std::size_t>(cls.horizon), 0.0);
    for (int h = 0; h < cls.horizon; ++h) {
        double worst = 0.0;
        for (int j = 0; j < cls.size(h + 1); ++j) {
            double m = masses[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)];
            if (m <= 0.0) throw EmptyCoverSet(h, j);
            worst = std::max(worst, -std::log(m));
        }
        out[static_cast<std::size_t>(h)] = worst;
    }
    return out;
}

double boundedness_b(const QFunctionClass& cls) {
    double max_val = 0.0;
    for (int h = 0; h < cls.horizon; ++h) {
        for (int i = 0; i < cls.size(h); ++i) {
            for (double v : cls.table(h, i)) {
                if (v < 0.0)
                    throw NegativeValue("member (h=" + std::to_string(h) + ", i=" +
                                        std::to_string(i) + ") has a negative value");
                max_val = std::max(max_val, v);
            }
        }
    }
    return std::max(1.0, 1.0 + max_val);
}

}  // namespace cps
