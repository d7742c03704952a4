#include "cps/instances.hpp"

#include <algorithm>
#include <cmath>

#include "cps/rng.hpp"

namespace cps {

namespace {

bool tables_close(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-12) return false;
    return true;
}

void push_dedup(std::vector<std::vector<double>>& pool, std::vector<double> v) {
    for (const auto& q : pool)
        if (tables_close(q, v)) return;
    pool.push_back(std::move(v));
}

std::vector<double> dirichlet_row(Rng& rng, int n) {
    std::vector<double> row(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& v : row) {
        v = -std::log(1.0 - rng.next_unit());
        sum += v;
    }
    for (double& v : row) v /= sum;
    return row;
}

}  // namespace

TabularMdp make_chain_mdp(int num_states, int horizon) {
    if (num_states < 2 || horizon < 1) throw ValidationError("chain needs >=2 states, H>=1");
    TabularMdp m;
    m.num_states = num_states;
    m.num_actions = 2;
    m.horizon = horizon;
    m.initial_state = 0;
    m.reward_noise = RewardNoise::Bernoulli;
    const int S = num_states;
    m.transitions.assign(static_cast<std::size_t>(horizon) * S * 2 * S, 0.0);
    m.mean_rewards.assign(static_cast<std::size_t>(horizon) * S * 2, 0.0);
    auto tr = [&](int h, int x, int a, int y) -> double& {
        return m.transitions[static_cast<std::size_t>(((h * S + x) * 2 + a) * S + y)];
    };
    for (int h = 0; h < horizon; ++h) {
        for (int x = 0; x < S; ++x) {
            tr(h, x, 0, 0) = 1.0;
            int two = std::min(x + 2, S - 1), one = std::min(x + 1, S - 1);
            tr(h, x, 1, two) += 0.60;
            tr(h, x, 1, one) += 0.35;
            tr(h, x, 1, x) += 0.05;
            // only finishing the episode in the last state pays, so member
            // values stay in [0, 1] at every level
            if (x == S - 1 && h == horizon - 1)
                m.mean_rewards[static_cast<std::size_t>((h * S + x) * 2 + 1)] = 1.0;
        }
    }
    m.validate();
    return m;
}

TabularMdp make_random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed,
                           RewardNoise noise) {
    if (num_states < 1 || num_actions < 1 || horizon < 1)
        throw ValidationError("random mdp needs positive sizes");
    Rng rng(mix64(seed));
    TabularMdp m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.horizon = horizon;
    m.initial_state = 0;
    m.reward_noise = noise;
    for (int h = 0; h < horizon; ++h)
        for (int x = 0; x < num_states; ++x)
            for (int a = 0; a < num_actions; ++a) {
                auto row = dirichlet_row(rng, num_states);
                m.transitions.insert(m.transitions.end(), row.begin(), row.end());
                m.mean_rewards.push_back(rng.next_unit());
            }
    m.validate();
    return m;
}

QFunctionClass make_closure_class(const TabularMdp& mdp, int distractors,
                                  std::uint64_t seed) {
    Rng rng(mix64(seed ^ 0x5eedc1a55ULL));
    const int H = mdp.horizon;
    const int SA = mdp.num_state_actions();
    std::vector<std::vector<std::vector<double>>> levels(static_cast<std::size_t>(H));
    // level h built from the images of level h+1; start with the zero function
    // at level H (its image is the step-(H-1) mean-reward table)
    std::vector<std::vector<double>> above;  // tables of F_{h+1}
    for (int h = H - 1; h >= 0; --h) {
        std::vector<std::vector<double>> pool;
        if (h == H - 1) {
            push_dedup(pool, bellman_apply(mdp, h, {}));
        } else {
            for (const auto& f : above) push_dedup(pool, bellman_apply(mdp, h, f));
        }
        // distractor values live on the scale of the true closure members, so
        // the class stays tight: boundedness b tracks the instance, not H
        double cap = 1e-3;
        for (const auto& f : pool)
            for (double v : f) cap = std::max(cap, v);
        for (int k = 0; k < distractors; ++k) {
            std::vector<double> t(static_cast<std::size_t>(SA));
            if (k == 0) {
                // all-zero member: a pessimistic trap that stays TD-consistent
                // on reward-free data
                std::fill(t.begin(), t.end(), 0.0);
            } else if (k % 2 == 1 && !pool.empty()) {
                // perturbed copy of a closure member
                const auto& base = pool[rng.uniform_int(static_cast<int>(pool.size()))];
                for (int i = 0; i < SA; ++i)
                    t[static_cast<std::size_t>(i)] = std::clamp(
                        base[static_cast<std::size_t>(i)] + 0.5 * (rng.next_unit() - 0.5),
                        0.0, cap);
            } else {
                for (int i = 0; i < SA; ++i)
                    t[static_cast<std::size_t>(i)] = cap * rng.next_unit();
            }
            push_dedup(pool, std::move(t));
        }
        levels[static_cast<std::size_t>(h)] = pool;
        above = std::move(pool);
    }
    return make_uniform_prior_class(H, mdp.num_states, mdp.num_actions, std::move(levels));
}

LinearGridInstance make_linear_grid(int dim, int grid, int horizon, int num_states,
                                    int num_actions, std::uint64_t seed) {
    if (dim < 1 || grid < 2 || horizon < 1 || num_states < 2 || num_actions < 1)
        throw ValidationError("linear_grid needs dim>=1, grid>=2, H>=1, states>=2");
    Rng rng(mix64(seed ^ 0x11eaa55ULL));
    LinearGridInstance inst;
    inst.dim = dim;
    TabularMdp& m = inst.mdp;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.horizon = horizon;
    m.initial_state = 0;
    m.reward_noise = RewardNoise::Deterministic;

    LinearBacking lb;
    lb.dim = dim;
    for (int xa = 0; xa < num_states * num_actions; ++xa) {
        auto phi = dirichlet_row(rng, dim);
        lb.features.insert(lb.features.end(), phi.begin(), phi.end());
    }
    // nu[h][k]: probability vector over next states; theta[h][k]: reward weights
    std::vector<std::vector<std::vector<double>>> nu(static_cast<std::size_t>(horizon));
    std::vector<std::vector<double>> theta(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        for (int k = 0; k < dim; ++k)
            nu[static_cast<std::size_t>(h)].push_back(dirichlet_row(rng, num_states));
        for (int k = 0; k < dim; ++k)
            theta[static_cast<std::size_t>(h)].push_back(rng.next_unit());
    }
    for (int h = 0; h < horizon; ++h)
        for (int x = 0; x < num_states; ++x)
            for (int a = 0; a < num_actions; ++a) {
                const double* phi =
                    &lb.features[static_cast<std::size_t>((x * num_actions + a) * dim)];
                double r = 0.0;
                for (int k = 0; k < dim; ++k)
                    r += phi[k] * theta[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)];
                m.mean_rewards.push_back(r);
                for (int y = 0; y < num_states; ++y) {
                    double p = 0.0;
                    for (int k = 0; k < dim; ++k)
                        p += phi[k] *
                             nu[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)]
                               [static_cast<std::size_t>(y)];
                    m.transitions.push_back(p);
                }
            }
    m.validate();

    // weight-space closure: the image of weights w at step h is
    // theta_h + (sum_y nu_k(y) max_a <phi(y,a), w>)_k, exactly linear in phi
    auto value_of = [&](const std::vector<double>& w, int x, int a) {
        double v = 0.0;
        for (int k = 0; k < dim; ++k)
            v += lb.features[static_cast<std::size_t>((x * num_actions + a) * dim + k)] *
                 w[static_cast<std::size_t>(k)];
        return v;
    };
    auto image_weights = [&](int h, const std::vector<double>& w_next) {
        std::vector<double> out = theta[static_cast<std::size_t>(h)];
        for (int k = 0; k < dim; ++k) {
            double acc = 0.0;
            for (int y = 0; y < num_states; ++y) {
                double best = value_of(w_next, y, 0);
                for (int a = 1; a < num_actions; ++a)
                    best = std::max(best, value_of(w_next, y, a));
                acc += nu[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)]
                         [static_cast<std::size_t>(y)] *
                       best;
            }
            out[static_cast<std::size_t>(k)] += acc;
        }
        return out;
    };

    lb.weights.resize(static_cast<std::size_t>(horizon));
    std::vector<std::vector<double>> above = {std::vector<double>(static_cast<std::size_t>(dim),
                                                                  0.0)};
    for (int h = horizon - 1; h >= 0; --h) {
        std::vector<std::vector<double>> pool;
        // per-coordinate grid over [0, H-h]
        const double cap = static_cast<double>(horizon - h);
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        while (true) {
            std::vector<double> w(static_cast<std::size_t>(dim));
            for (int k = 0; k < dim; ++k)
                w[static_cast<std::size_t>(k)] =
                    cap * idx[static_cast<std::size_t>(k)] / (grid - 1);
            push_dedup(pool, std::move(w));
            int k = 0;
            while (k < dim && ++idx[static_cast<std::size_t>(k)] == grid) {
                idx[static_cast<std::size_t>(k)] = 0;
                ++k;
            }
            if (k == dim) break;
        }
        for (const auto& w_next : above) push_dedup(pool, image_weights(h, w_next));
        lb.weights[static_cast<std::size_t>(h)] = pool;
        above = std::move(pool);
    }

    QFunctionClass& cls = inst.cls;
    cls.horizon = horizon;
    cls.num_states = num_states;
    cls.num_actions = num_actions;
    cls.members.resize(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h)
        for (const auto& w : lb.weights[static_cast<std::size_t>(h)]) {
            std::vector<double> table(static_cast<std::size_t>(num_states * num_actions));
            for (int x = 0; x < num_states; ++x)
                for (int a = 0; a < num_actions; ++a)
                    table[static_cast<std::size_t>(x * num_actions + a)] = value_of(w, x, a);
            cls.members[static_cast<std::size_t>(h)].push_back(std::move(table));
        }
    cls.prior.resize(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        std::size_t n = cls.members[static_cast<std::size_t>(h)].size();
        cls.prior[static_cast<std::size_t>(h)].assign(n, 1.0 / static_cast<double>(n));
    }
    cls.linear = std::move(lb);
    cls.validate();
    return inst;
}

}  // namespace cps
