#include "cps/complexity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace cps {

ResidualSequenceRecord record_residuals(const TabularMdp& mdp, const QFunctionClass& cls,
                                        const std::vector<MemberIndexTuple>& f_sequence) {
    const int T = static_cast<int>(f_sequence.size());
    const int H = cls.horizon;
    const int SA = mdp.num_state_actions();
    ResidualSequenceRecord rec;
    rec.T = T;
    rec.H = H;
    rec.mean_resid.assign(static_cast<std::size_t>(T) * H, 0.0);
    rec.cross.assign(static_cast<std::size_t>(H) * (static_cast<std::size_t>(T) * (T - 1) / 2),
                     0.0);

    // occupancy per episode and residual tables per (episode, h)
    std::vector<std::vector<double>> occ(static_cast<std::size_t>(T));
    std::vector<std::vector<std::vector<double>>> res(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const auto& f = f_sequence[static_cast<std::size_t>(t)];
        occ[static_cast<std::size_t>(t)] = occupancy_measures(mdp, greedy_policy(cls, f));
        res[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(H));
        for (int h = 0; h < H; ++h) {
            int j = (h + 1 < H) ? f[static_cast<std::size_t>(h + 1)] : 0;
            res[static_cast<std::size_t>(t)][static_cast<std::size_t>(h)] =
                residual_table(mdp, cls, h, f[static_cast<std::size_t>(h)], j);
        }
    }
    for (int t = 0; t < T; ++t) {
        for (int h = 0; h < H; ++h) {
            const auto& r = res[static_cast<std::size_t>(t)][static_cast<std::size_t>(h)];
            double m = 0.0;
            for (int k = 0; k < SA; ++k)
                m += occ[static_cast<std::size_t>(t)][static_cast<std::size_t>(h * SA + k)] *
                     r[static_cast<std::size_t>(k)];
            rec.mean_resid[static_cast<std::size_t>(t) * H + h] = m;
            const std::size_t base =
                static_cast<std::size_t>(h) * (static_cast<std::size_t>(T) * (T - 1) / 2) +
                static_cast<std::size_t>(t) * (t - 1) / 2;
            for (int s = 0; s < t; ++s) {
                double c = 0.0;
                for (int k = 0; k < SA; ++k) {
                    double g = r[static_cast<std::size_t>(k)];
                    c += occ[static_cast<std::size_t>(s)]
                            [static_cast<std::size_t>(h * SA + k)] *
                         g * g;
                }
                rec.cross[base + static_cast<std::size_t>(s)] = c;
            }
        }
    }
    return rec;
}

DcCheck dc_inequality_check(const ResidualSequenceRecord& record, double mu, double K) {
    if (mu <= 0.0) throw ValidationError("mu must be positive");
    DcCheck out;
    out.mu = mu;
    out.K = K;
    for (int t = 0; t < record.T; ++t)
        for (int h = 0; h < record.H; ++h) out.lhs += record.mean_at(t, h);
    double cross_sum = 0.0;
    for (double c : record.cross) cross_sum += c;
    out.rhs = mu * cross_sum + K / (4.0 * mu);
    out.satisfied = out.lhs <= out.rhs;
    return out;
}

double dc_bound_linear(int d, int H, int T) {
    return 2.0 * d * H * (1.0 + std::log(2.0 * H * T));
}

double dc_bound_glm(int d, int H, int T, double k, double K_lip) {
    return dc_bound_linear(d, H, T) * (K_lip * K_lip) / (k * k);
}

double dc_bound_from_be(int be_dim, int H, int T, double mu) {
    return (1.0 + 4.0 * mu + std::log(static_cast<double>(T))) * H * be_dim;
}

namespace {

constexpr double kDedupTol = 1e-12;

bool tables_equal(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > kDedupTol) return false;
    return true;
}

int push_if_new(std::vector<std::vector<double>>& pool, std::vector<double> v) {
    for (const auto& q : pool)
        if (tables_equal(q, v)) return -1;
    pool.push_back(std::move(v));
    return static_cast<int>(pool.size()) - 1;
}

// Greedy action per state for one member table, lowest-index ties.
std::vector<int> action_slice(const QFunctionClass& cls, int h, int i) {
    std::vector<int> out(static_cast<std::size_t>(cls.num_states), 0);
    for (int x = 0; x < cls.num_states; ++x) {
        double best = cls.value(h, i, x, 0);
        for (int a = 1; a < cls.num_actions; ++a) {
            double v = cls.value(h, i, x, a);
            if (v > best) {
                best = v;
                out[static_cast<std::size_t>(x)] = a;
            }
        }
    }
    return out;
}

// Distinct step-h state-action occupancy measures over greedy policies of all
// member tuples. State distributions are propagated level by level with
// deduplication, so only distinct prefixes are ever expanded.
std::vector<std::vector<double>> measures_at_step(const TabularMdp& mdp,
                                                  const QFunctionClass& cls, int h) {
    const int S = mdp.num_states, A = mdp.num_actions;
    std::vector<std::vector<double>> dists;
    {
        std::vector<double> d0(static_cast<std::size_t>(S), 0.0);
        d0[static_cast<std::size_t>(mdp.initial_state)] = 1.0;
        dists.push_back(std::move(d0));
    }
    for (int lvl = 0; lvl < h; ++lvl) {
        std::vector<std::vector<int>> slices;
        for (int i = 0; i < cls.size(lvl); ++i) {
            auto s = action_slice(cls, lvl, i);
            bool seen = false;
            for (const auto& q : slices)
                if (q == s) {
                    seen = true;
                    break;
                }
            if (!seen) slices.push_back(std::move(s));
        }
        std::vector<std::vector<double>> next;
        for (const auto& d : dists) {
            for (const auto& slice : slices) {
                std::vector<double> nd(static_cast<std::size_t>(S), 0.0);
                for (int x = 0; x < S; ++x) {
                    double p = d[static_cast<std::size_t>(x)];
                    if (p == 0.0) continue;
                    int a = slice[static_cast<std::size_t>(x)];
                    for (int y = 0; y < S; ++y)
                        nd[static_cast<std::size_t>(y)] += p * mdp.prob(lvl, x, a, y);
                }
                push_if_new(next, std::move(nd));
                if (next.size() > 4096)
                    throw CapExceeded("too many distinct state distributions");
            }
        }
        dists = std::move(next);
    }
    std::vector<std::vector<int>> slices_h;
    for (int i = 0; i < cls.size(h); ++i) {
        auto s = action_slice(cls, h, i);
        bool seen = false;
        for (const auto& q : slices_h)
            if (q == s) {
                seen = true;
                break;
            }
        if (!seen) slices_h.push_back(std::move(s));
    }
    std::vector<std::vector<double>> measures;
    for (const auto& d : dists) {
        for (const auto& slice : slices_h) {
            std::vector<double> m(static_cast<std::size_t>(S) * A, 0.0);
            for (int x = 0; x < S; ++x)
                m[static_cast<std::size_t>(x * A + slice[static_cast<std::size_t>(x)])] =
                    d[static_cast<std::size_t>(x)];
            push_if_new(measures, std::move(m));
            if (measures.size() > 4096) throw CapExceeded("too many distinct measures");
        }
    }
    return measures;
}

// intervals of eps' for which "nu is addable to this prefix set": union over g
// of [prefix_norm(set, g), |E_nu[g]|); merged and sorted.
struct IntervalSet {
    std::vector<std::pair<double, double>> iv;  // half-open [lo, hi)

    bool contains(double x) const {
        for (const auto& [lo, hi] : iv) {
            if (x < lo) return false;
            if (x < hi) return true;
        }
        return false;
    }
};

IntervalSet merge_intervals(std::vector<std::pair<double, double>> raw) {
    std::erase_if(raw, [](const auto& p) { return !(p.first < p.second); });
    std::sort(raw.begin(), raw.end());
    IntervalSet out;
    for (const auto& p : raw) {
        if (!out.iv.empty() && p.first <= out.iv.back().second)
            out.iv.back().second = std::max(out.iv.back().second, p.second);
        else
            out.iv.push_back(p);
    }
    return out;
}

// Longest sequence of distinct measures, each eps'-independent of its
// predecessors, maximized over the shared eps' > eps. E[m][g] is the matrix of
// expectations of residual function g under measure m.
int longest_independent_sequence_exact(const std::vector<std::vector<double>>& E,
                                       double epsilon) {
    const int M = static_cast<int>(E.size());
    if (M == 0) return 0;
    const int G = static_cast<int>(E[0].size());
    const int masks = 1 << M;

    // squared prefix norms per (mask, g)
    std::vector<double> pn2(static_cast<std::size_t>(masks) * G, 0.0);
    for (int mask = 1; mask < masks; ++mask) {
        int low = mask & (-mask);
        int m = std::countr_zero(static_cast<unsigned>(mask));
        for (int g = 0; g < G; ++g) {
            double e = E[static_cast<std::size_t>(m)][static_cast<std::size_t>(g)];
            pn2[static_cast<std::size_t>(mask) * G + g] =
                pn2[static_cast<std::size_t>(mask ^ low) * G + g] + e * e;
        }
    }

    std::vector<IntervalSet> addable(static_cast<std::size_t>(masks) * M);
    std::vector<double> endpoints;
    endpoints.push_back(epsilon);
    for (int mask = 0; mask < masks; ++mask) {
        for (int m = 0; m < M; ++m) {
            if (mask & (1 << m)) continue;
            std::vector<std::pair<double, double>> raw;
            raw.reserve(static_cast<std::size_t>(G));
            for (int g = 0; g < G; ++g) {
                double lo = std::sqrt(pn2[static_cast<std::size_t>(mask) * G + g]);
                double hi =
                    std::abs(E[static_cast<std::size_t>(m)][static_cast<std::size_t>(g)]);
                if (lo < hi && hi > epsilon) {
                    raw.emplace_back(lo, hi);
                    endpoints.push_back(lo);
                    endpoints.push_back(hi);
                }
            }
            addable[static_cast<std::size_t>(mask) * M + m] = merge_intervals(std::move(raw));
        }
    }
    std::sort(endpoints.begin(), endpoints.end());
    endpoints.erase(std::unique(endpoints.begin(), endpoints.end()), endpoints.end());

    // the answer is piecewise constant between endpoints; probe midpoints
    std::vector<double> probes;
    for (std::size_t i = 0; i + 1 < endpoints.size(); ++i)
        probes.push_back(0.5 * (endpoints[i] + endpoints[i + 1]));
    for (double e : endpoints) probes.push_back(e);
    probes.push_back(endpoints.back() + 1.0);

    int best = 0;
    std::vector<int> memo(static_cast<std::size_t>(masks));
    for (double eps_prime : probes) {
        if (!(eps_prime > epsilon)) continue;
        std::fill(memo.begin(), memo.end(), -1);
        // longest chain starting from a given prefix set, bottom-up over masks
        for (int mask = masks - 1; mask >= 0; --mask) {
            int b = 0;
            for (int m = 0; m < M; ++m) {
                if (mask & (1 << m)) continue;
                if (!addable[static_cast<std::size_t>(mask) * M + m].contains(eps_prime))
                    continue;
                b = std::max(b, 1 + memo[static_cast<std::size_t>(mask | (1 << m))]);
            }
            memo[static_cast<std::size_t>(mask)] = b;
        }
        best = std::max(best, memo[0]);
        if (best == M) break;
    }
    return best;
}

int longest_independent_sequence_greedy(const std::vector<std::vector<double>>& E,
                                        double epsilon) {
    const int M = static_cast<int>(E.size());
    if (M == 0) return 0;
    const int G = static_cast<int>(E[0].size());

    std::vector<double> endpoints;
    endpoints.push_back(epsilon);
    for (const auto& row : E)
        for (double e : row)
            if (std::abs(e) > epsilon) endpoints.push_back(std::abs(e));
    std::sort(endpoints.begin(), endpoints.end());
    endpoints.erase(std::unique(endpoints.begin(), endpoints.end()), endpoints.end());
    std::vector<double> probes;
    for (std::size_t i = 0; i + 1 < endpoints.size(); ++i)
        probes.push_back(0.5 * (endpoints[i] + endpoints[i + 1]));

    int best = 0;
    for (double eps_prime : probes) {
        if (!(eps_prime > epsilon)) continue;
        std::vector<char> used(static_cast<std::size_t>(M), 0);
        std::vector<double> pn2(static_cast<std::size_t>(G), 0.0);
        int len = 0;
        bool extended = true;
        while (extended) {
            extended = false;
            for (int m = 0; m < M && !extended; ++m) {
                if (used[static_cast<std::size_t>(m)]) continue;
                for (int g = 0; g < G; ++g) {
                    if (pn2[static_cast<std::size_t>(g)] <= eps_prime * eps_prime &&
                        std::abs(E[static_cast<std::size_t>(m)][static_cast<std::size_t>(g)]) >
                            eps_prime) {
                        used[static_cast<std::size_t>(m)] = 1;
                        for (int gg = 0; gg < G; ++gg) {
                            double e = E[static_cast<std::size_t>(m)]
                                        [static_cast<std::size_t>(gg)];
                            pn2[static_cast<std::size_t>(gg)] += e * e;
                        }
                        ++len;
                        extended = true;
                        break;
                    }
                }
            }
        }
        best = std::max(best, len);
    }
    return best;
}

}  // namespace

BeDimResult bellman_eluder_dim(const TabularMdp& mdp, const QFunctionClass& cls,
                               double epsilon, BeMode mode) {
    BeDimResult out;
    out.mode = mode;
    out.lower_bound_only = (mode == BeMode::Greedy);
    const int SA = mdp.num_state_actions();
    for (int h = 0; h < cls.horizon; ++h) {
        auto measures = measures_at_step(mdp, cls, h);
        if (mode == BeMode::ExactTiny && measures.size() > 8)
            throw CapExceeded("ExactTiny mode needs at most 8 distinct measures per step");

        // residual functions at step h, deduplicated
        std::vector<std::vector<double>> gs;
        for (int i = 0; i < cls.size(h); ++i)
            for (int j = 0; j < cls.size(h + 1); ++j)
                push_if_new(gs, residual_table(mdp, cls, h, i, j));

        std::vector<std::vector<double>> E(measures.size(),
                                           std::vector<double>(gs.size(), 0.0));
        for (std::size_t m = 0; m < measures.size(); ++m)
            for (std::size_t g = 0; g < gs.size(); ++g) {
                double v = 0.0;
                for (int k = 0; k < SA; ++k)
                    v += measures[m][static_cast<std::size_t>(k)] *
                         gs[g][static_cast<std::size_t>(k)];
                E[m][g] = v;
            }
        int len = (mode == BeMode::ExactTiny)
                      ? longest_independent_sequence_exact(E, epsilon)
                      : longest_independent_sequence_greedy(E, epsilon);
        out.value = std::max(out.value, len);
    }
    return out;
}

double helper_sum_sqrt(const std::vector<double>& xs) {
    if (xs.empty()) throw NonPositiveEntry("sequence must be nonempty");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] <= 0.0) throw NonPositiveEntry("entries must be positive");
        num += xs[i];
        den += static_cast<double>(i + 1) * xs[i] * xs[i];
    }
    return num / std::sqrt(den);
}

}  // namespace cps
