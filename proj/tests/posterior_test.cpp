#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cps/instances.hpp"
#include "cps/logsumexp.hpp"
#include "cps/posterior.hpp"
#include "cps/rng.hpp"
#include "test_util.hpp"

using namespace cps;

namespace {

QFunctionClass random_class(int H, int S, int A, const std::vector<int>& sizes,
                            std::uint64_t seed) {
    Rng rng(mix64(seed));
    std::vector<std::vector<std::vector<double>>> members(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        double cap = static_cast<double>(H - h);
        for (int i = 0; i < sizes[static_cast<std::size_t>(h)]; ++i) {
            std::vector<double> t(static_cast<std::size_t>(S * A));
            for (double& v : t) v = cap * rng.next_unit();
            members[static_cast<std::size_t>(h)].push_back(std::move(t));
        }
    }
    return make_uniform_prior_class(H, S, A, std::move(members));
}

std::vector<Trajectory> play_episodes(const TabularMdp& m, int count, std::uint64_t seed) {
    std::vector<Trajectory> out;
    Rng rng(seed);
    for (int t = 0; t < count; ++t) {
        DeterministicPolicy pi = make_policy(m.horizon, m.num_states);
        for (int& a : pi.actions) a = rng.uniform_int(m.num_actions);
        out.push_back(simulate_episode(m, pi, derive_seed(seed, static_cast<std::uint64_t>(t), 1)));
    }
    return out;
}

// TD loss of (member i at h, member j at h+1) on one trajectory, from scratch
double td_loss(const QFunctionClass& cls, const Trajectory& traj, int h, int i, int j) {
    const auto& step = traj.steps[static_cast<std::size_t>(h)];
    int x_next = (h + 1 < cls.horizon) ? traj.steps[static_cast<std::size_t>(h + 1)].state
                                       : traj.terminal_state;
    double d = cls.value(h, i, step.state, step.action) - step.reward -
               cls.state_value(h + 1, j, x_next);
    return d * d;
}

// unnormalized log posterior straight from the stagewise-conditional product,
// with losses recomputed from the raw trajectories
double reference_log_weight(const QFunctionClass& cls, const std::vector<Trajectory>& data,
                            const MemberIndexTuple& f, double eta, double lambda,
                            int initial_state) {
    double w = lambda * cls.state_value(0, f[0], initial_state);
    for (int h = 0; h < cls.horizon; ++h) {
        int j = (h + 1 < cls.horizon) ? f[static_cast<std::size_t>(h + 1)] : 0;
        double loss = 0.0;
        for (const auto& traj : data) loss += td_loss(cls, traj, h, f[static_cast<std::size_t>(h)], j);
        std::vector<double> denom_terms;
        for (int i = 0; i < cls.size(h); ++i) {
            double li = 0.0;
            for (const auto& traj : data) li += td_loss(cls, traj, h, i, j);
            denom_terms.push_back(cls.log_prior(h, i) - eta * li);
        }
        w += cls.log_prior(h, f[static_cast<std::size_t>(h)]) - eta * loss -
             log_sum_exp(denom_terms);
    }
    return w;
}

std::vector<double> reference_posterior(const QFunctionClass& cls,
                                        const std::vector<Trajectory>& data, double eta,
                                        double lambda, int initial_state) {
    std::vector<double> logw;
    std::vector<int> sizes;
    for (int h = 0; h < cls.horizon; ++h) sizes.push_back(cls.size(h));
    std::size_t total = 1;
    for (int n : sizes) total *= static_cast<std::size_t>(n);
    MemberIndexTuple f(static_cast<std::size_t>(cls.horizon), 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (int h = cls.horizon - 1; h >= 0; --h) {
            f[static_cast<std::size_t>(h)] =
                static_cast<int>(rem % static_cast<std::size_t>(sizes[static_cast<std::size_t>(h)]));
            rem /= static_cast<std::size_t>(sizes[static_cast<std::size_t>(h)]);
        }
        logw.push_back(reference_log_weight(cls, data, f, eta, lambda, initial_state));
    }
    return softmax(logw);
}

}  // namespace

TEST_CASE("zero class and zero rewards leave the loss cache at zero") {
    TabularMdp m = make_random_mdp(2, 2, 2, 3);
    for (double& r : m.mean_rewards) r = 0.0;
    QFunctionClass cls = make_uniform_prior_class(
        2, 2, 2,
        {{std::vector<double>(4, 0.0)}, {std::vector<double>(4, 0.0)}});
    PosteriorState st = make_posterior_state(cls, 0.1, 0.0, 1.0, m.initial_state);
    for (const auto& traj : play_episodes(m, 3, 5)) update_losses(st, cls, traj);
    CHECK(st.episode_count == 3);
    for (const auto& level : st.loss)
        for (double v : level) CHECK(v == 0.0);
}

TEST_CASE("horizon-1 loss increments ignore the trivial next level") {
    TabularMdp m = make_random_mdp(2, 2, 1, 7);
    QFunctionClass cls = random_class(1, 2, 2, {3}, 11);
    PosteriorState st = make_posterior_state(cls, 0.1, 0.0, 1.0, m.initial_state);
    Trajectory traj = play_episodes(m, 1, 9)[0];
    update_losses(st, cls, traj);
    const auto& step = traj.steps[0];
    for (int i = 0; i < 3; ++i) {
        double d = cls.value(0, i, step.state, step.action) - step.reward;
        CHECK(st.loss[0][static_cast<std::size_t>(i)] ==
              doctest::Approx(d * d).epsilon(1e-14));
    }
}

TEST_CASE("incremental cache equals from-scratch recomputation") {
    TabularMdp m = make_random_mdp(3, 2, 3, 13, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(3, 3, 2, {3, 2, 3}, 17);
    PosteriorState st = make_posterior_state(cls, 0.1, 0.0, 1.0, m.initial_state);
    auto data = play_episodes(m, 3, 19);
    for (const auto& traj : data) update_losses(st, cls, traj);
    for (int h = 0; h < 3; ++h) {
        int n_next = cls.size(h + 1);
        for (int i = 0; i < cls.size(h); ++i)
            for (int j = 0; j < n_next; ++j) {
                double expect = 0.0;
                for (const auto& traj : data) expect += td_loss(cls, traj, h, i, j);
                CHECK(st.loss[static_cast<std::size_t>(h)]
                             [static_cast<std::size_t>(i) * n_next + j] ==
                      doctest::Approx(expect).epsilon(1e-9));
            }
    }
}

TEST_CASE("loss cache entries never decrease") {
    TabularMdp m = make_random_mdp(3, 2, 2, 23, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(2, 3, 2, {3, 3}, 29);
    PosteriorState st = make_posterior_state(cls, 0.1, 0.0, 1.0, m.initial_state);
    std::vector<std::vector<double>> prev = st.loss;
    for (const auto& traj : play_episodes(m, 5, 31)) {
        update_losses(st, cls, traj);
        for (std::size_t h = 0; h < prev.size(); ++h)
            for (std::size_t k = 0; k < prev[h].size(); ++k)
                CHECK(st.loss[h][k] >= prev[h][k] - 1e-15);
        prev = st.loss;
    }
}

TEST_CASE("no data and no tilt recovers the prior product") {
    QFunctionClass cls = random_class(2, 2, 2, {3, 2}, 37);
    cls.prior = {{0.5, 0.3, 0.2}, {0.6, 0.4}};
    cls.validate();
    PosteriorState st = make_posterior_state(cls, 0.1, 0.0, 1.0, 0);
    auto p = exact_posterior(build_chain(st, cls));
    // tuple order: i_1 major
    int idx = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(p[static_cast<std::size_t>(idx++)] ==
                  doctest::Approx(cls.prior[0][static_cast<std::size_t>(i)] *
                                  cls.prior[1][static_cast<std::size_t>(j)])
                      .epsilon(1e-13));
}

TEST_CASE("no data with a tilt matches the optimistic prior") {
    QFunctionClass cls = random_class(2, 2, 2, {3, 2}, 41);
    const double lambda = 0.7;
    PosteriorState st = make_posterior_state(cls, 0.1, lambda, 1.0, 0);
    auto p = exact_posterior(build_chain(st, cls));
    std::vector<double> logw;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            logw.push_back(lambda * cls.state_value(0, i, 0) + cls.log_prior(0, i) +
                           cls.log_prior(1, j));
    auto expect = softmax(logw);
    for (std::size_t k = 0; k < p.size(); ++k)
        CHECK(p[k] == doctest::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("chain joint equals the brute-force posterior") {
    TabularMdp m = make_random_mdp(3, 2, 2, 43, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(2, 3, 2, {3, 3}, 47);
    const double eta = 0.2, lambda = 0.5;
    PosteriorState st = make_posterior_state(cls, eta, lambda, 1.0, m.initial_state);
    auto data = play_episodes(m, 2, 49);
    for (const auto& traj : data) update_losses(st, cls, traj);
    auto p = exact_posterior(build_chain(st, cls));
    auto ref = reference_posterior(cls, data, eta, lambda, m.initial_state);
    REQUIRE(p.size() == ref.size());
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(std::abs(p[k] - ref[k]) < 1e-10);
}

TEST_CASE("chain-enumeration agreement in total variation on random instances") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TabularMdp m = make_random_mdp(3, 2, 3, 100 + seed, RewardNoise::Bernoulli);
        QFunctionClass cls = random_class(3, 3, 2, {4, 3, 2}, 200 + seed);
        PosteriorState st = make_posterior_state(cls, 0.15, 0.3, 1.0, m.initial_state);
        for (const auto& traj : play_episodes(m, 3, 300 + seed)) update_losses(st, cls, traj);
        LogWeightChain chain = build_chain(st, cls);
        auto p = exact_posterior(chain);
        auto ref = reference_posterior(cls, play_episodes(m, 3, 300 + seed), 0.15, 0.3,
                                       m.initial_state);
        double tv = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) tv += std::abs(p[k] - ref[k]);
        CHECK(tv / 2.0 < 1e-10);
    }
}

TEST_CASE("chain marginals agree with enumeration") {
    TabularMdp m = make_random_mdp(3, 2, 3, 53, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(3, 3, 2, {3, 2, 4}, 59);
    PosteriorState st = make_posterior_state(cls, 0.2, 0.4, 1.0, m.initial_state);
    for (const auto& traj : play_episodes(m, 4, 61)) update_losses(st, cls, traj);
    LogWeightChain chain = build_chain(st, cls);
    auto p = exact_posterior(chain);
    auto marg = chain_marginals(chain);
    std::vector<int> sizes = {3, 2, 4};
    for (int h = 0; h < 3; ++h) {
        std::vector<double> from_enum(static_cast<std::size_t>(sizes[static_cast<std::size_t>(h)]),
                                      0.0);
        for (std::size_t idx = 0; idx < p.size(); ++idx) {
            std::size_t rem = idx;
            int ih = 0;
            for (int hh = 2; hh >= 0; --hh) {
                int v = static_cast<int>(rem % static_cast<std::size_t>(
                                                   sizes[static_cast<std::size_t>(hh)]));
                rem /= static_cast<std::size_t>(sizes[static_cast<std::size_t>(hh)]);
                if (hh == h) ih = v;
            }
            from_enum[static_cast<std::size_t>(ih)] += p[idx];
        }
        for (std::size_t i = 0; i < from_enum.size(); ++i)
            CHECK(std::abs(marg[static_cast<std::size_t>(h)][i] - from_enum[i]) < 1e-10);
    }
}

TEST_CASE("exact posterior sums to one and respects the cap") {
    QFunctionClass cls = random_class(2, 2, 2, {4, 4}, 67);
    PosteriorState st = make_posterior_state(cls, 0.1, 0.0, 1.0, 0);
    auto p = exact_posterior(build_chain(st, cls));
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK_THROWS_AS(exact_posterior(build_chain(st, cls), 10), CapExceeded);
}

TEST_CASE("uniform shifts of a level's losses do not move the posterior") {
    TabularMdp m = make_random_mdp(3, 2, 2, 71, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(2, 3, 2, {3, 3}, 73);
    PosteriorState st = make_posterior_state(cls, 0.25, 0.6, 1.0, m.initial_state);
    for (const auto& traj : play_episodes(m, 3, 79)) update_losses(st, cls, traj);
    auto p = exact_posterior(build_chain(st, cls));
    PosteriorState shifted = st;
    for (double& v : shifted.loss[0]) v += 3.7;  // same constant for every (i, j)
    auto q = exact_posterior(build_chain(shifted, cls));
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(std::abs(p[k] - q[k]) < 1e-12);
}

TEST_CASE("single-member classes always sample the unique tuple") {
    QFunctionClass cls = random_class(3, 2, 2, {1, 1, 1}, 83);
    PosteriorState st = make_posterior_state(cls, 0.1, 0.2, 1.0, 0);
    LogWeightChain chain = build_chain(st, cls);
    for (std::uint64_t s = 0; s < 5; ++s) {
        MemberIndexTuple f = sample_posterior(chain, s);
        CHECK(f == MemberIndexTuple({0, 0, 0}));
    }
}

TEST_CASE("prior sampling frequencies are uniform within four sigma") {
    QFunctionClass cls = random_class(2, 2, 2, {4, 3}, 89);
    PosteriorState st = make_posterior_state(cls, 0.1, 0.0, 1.0, 0);
    LogWeightChain chain = build_chain(st, cls);
    const int N = 100000;
    std::vector<std::size_t> counts(12, 0);
    for (int s = 0; s < N; ++s) {
        MemberIndexTuple f = sample_posterior(chain, derive_seed(11, static_cast<std::uint64_t>(s), 0));
        counts[static_cast<std::size_t>(f[0] * 3 + f[1])]++;
    }
    double p = 1.0 / 12.0;
    double sigma = std::sqrt(p * (1 - p) * N);
    for (std::size_t k = 0; k < 12; ++k)
        CHECK(std::abs(static_cast<double>(counts[k]) - N * p) <= 4.0 * sigma);
}

TEST_CASE("posterior sampling frequencies pass a chi-square test") {
    TabularMdp m = make_random_mdp(3, 2, 2, 97, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(2, 3, 2, {4, 3}, 101);  // 12 tuples
    PosteriorState st = make_posterior_state(cls, 0.2, 0.5, 1.0, m.initial_state);
    for (const auto& traj : play_episodes(m, 3, 103)) update_losses(st, cls, traj);
    LogWeightChain chain = build_chain(st, cls);
    auto p = exact_posterior(chain);
    const int N = 100000;
    std::vector<std::size_t> counts(p.size(), 0);
    for (int s = 0; s < N; ++s) {
        MemberIndexTuple f = sample_posterior(chain, derive_seed(13, static_cast<std::uint64_t>(s), 0));
        counts[static_cast<std::size_t>(f[0] * 3 + f[1])]++;
    }
    std::vector<double> expected;
    for (double v : p) expected.push_back(v * N);
    CHECK(chi_square_pvalue(counts, expected) > 0.01);
}

TEST_CASE("sampling is deterministic in the seed") {
    QFunctionClass cls = random_class(2, 2, 2, {4, 3}, 107);
    PosteriorState st = make_posterior_state(cls, 0.1, 0.3, 1.0, 0);
    LogWeightChain chain = build_chain(st, cls);
    CHECK(sample_posterior(chain, 555) == sample_posterior(chain, 555));
}

TEST_CASE("posterior mode maximizes the tuple weight") {
    TabularMdp m = make_random_mdp(3, 2, 3, 109, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(3, 3, 2, {3, 3, 3}, 113);
    PosteriorState st = make_posterior_state(cls, 0.3, 0.2, 1.0, m.initial_state);
    for (const auto& traj : play_episodes(m, 3, 127)) update_losses(st, cls, traj);
    LogWeightChain chain = build_chain(st, cls);
    MemberIndexTuple mode = posterior_mode(chain);
    double best = chain.tuple_log_weight(mode);
    MemberIndexTuple f(3, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                f = {i, j, k};
                CHECK(chain.tuple_log_weight(f) <= best + 1e-12);
            }
}

TEST_CASE("alpha below one matches the explicit excess-loss potentials") {
    TabularMdp m = make_random_mdp(3, 2, 2, 131, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(2, 3, 2, {3, 3}, 137);
    const double eta = 0.2, lambda = 0.4, alpha = 0.6;
    PosteriorState st = make_posterior_state(cls, eta, lambda, alpha, m.initial_state, &m);
    for (const auto& traj : play_episodes(m, 3, 139)) update_losses(st, cls, traj);
    REQUIRE(st.ref_loss.has_value());
    auto p = exact_posterior(build_chain(st, cls));

    // brute force with the excess-loss form: Delta L = C[i][j] - D[j] appears
    // in both the loss term and the per-j log-normalizer
    std::vector<double> logw;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            MemberIndexTuple f = {i, j};
            double w = lambda * cls.state_value(0, i, m.initial_state);
            for (int h = 0; h < 2; ++h) {
                int ih = f[static_cast<std::size_t>(h)];
                int jh = (h + 1 < 2) ? f[static_cast<std::size_t>(h + 1)] : 0;
                int n_next = cls.size(h + 1);
                double dl = st.loss[static_cast<std::size_t>(h)]
                                   [static_cast<std::size_t>(ih) * n_next + jh] -
                            (*st.ref_loss)[static_cast<std::size_t>(h)]
                                          [static_cast<std::size_t>(jh)];
                std::vector<double> denom;
                for (int ii = 0; ii < cls.size(h); ++ii)
                    denom.push_back(cls.log_prior(h, ii) -
                                    eta * (st.loss[static_cast<std::size_t>(h)]
                                                  [static_cast<std::size_t>(ii) * n_next + jh] -
                                           (*st.ref_loss)[static_cast<std::size_t>(h)]
                                                         [static_cast<std::size_t>(jh)]));
                w += cls.log_prior(h, ih) - alpha * eta * dl - alpha * log_sum_exp(denom);
            }
            logw.push_back(w);
        }
    auto ref = softmax(logw);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(std::abs(p[k] - ref[k]) < 1e-10);
}

TEST_CASE("excess loss vanishes for the bellman-consistent predictor") {
    TabularMdp m = make_random_mdp(3, 2, 2, 149);
    QFunctionClass cls = random_class(2, 3, 2, {1, 2}, 151);
    // overwrite the step-0 member with the image of next member 1
    cls.members[0][0] = bellman_apply(m, 0, cls.table(1, 1));
    for (int x = 0; x < 3; ++x)
        for (int a = 0; a < 2; ++a)
            for (int y = 0; y < 3; ++y)
                for (double r : {0.0, 1.0})
                    CHECK(std::abs(excess_loss_delta(m, cls, 0, 0, 1, x, a, r, y)) < 1e-12);
}

namespace {

// exact conditional moments of the excess loss over (x', r) given (x, a)
struct DeltaMoments {
    double mean = 0.0;
    double second = 0.0;
    double exp_neg_eta = 0.0;  // E exp(-eta * Delta L)
};

DeltaMoments delta_moments(const TabularMdp& m, const QFunctionClass& cls, int h, int i,
                           int j, int x, int a, double eta) {
    DeltaMoments out;
    double mean_r = m.reward(h, x, a);
    for (int y = 0; y < m.num_states; ++y) {
        double py = m.prob(h, x, a, y);
        if (py == 0.0) continue;
        for (int bit = 0; bit < 2; ++bit) {
            double r = static_cast<double>(bit);
            double pr = (bit == 1) ? mean_r : 1.0 - mean_r;
            if (m.reward_noise == RewardNoise::Deterministic) {
                r = mean_r;
                pr = (bit == 1) ? 0.0 : 1.0;
            }
            if (pr == 0.0) continue;
            double dl = excess_loss_delta(m, cls, h, i, j, x, a, r, y);
            out.mean += py * pr * dl;
            out.second += py * pr * dl * dl;
            out.exp_neg_eta += py * pr * std::exp(-eta * dl);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("excess-loss mean and second moment obey the variance lemma") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TabularMdp m = make_random_mdp(3, 2, 2, 400 + seed, RewardNoise::Bernoulli);
        QFunctionClass cls = random_class(2, 3, 2, {3, 3}, 500 + seed);
        double b = boundedness_b(cls);
        for (int h = 0; h < 2; ++h)
            for (int x = 0; x < 3; ++x)
                for (int a = 0; a < 2; ++a) {
                    int i = static_cast<int>(seed % 3);
                    int j = (h + 1 < 2) ? static_cast<int>((seed + 1) % 3) : 0;
                    MemberIndexTuple f(2, 0);
                    f[static_cast<std::size_t>(h)] = i;
                    if (h + 1 < 2) f[static_cast<std::size_t>(h + 1)] = j;
                    DeltaMoments mm = delta_moments(m, cls, h, i, j, x, a, 0.1);
                    double res = bellman_residual(m, cls, f, h, x, a);
                    CHECK(mm.mean == doctest::Approx(res * res).epsilon(1e-10));
                    CHECK(mm.second <= (4.0 * b * b / 3.0) * res * res + 1e-10);
                }
    }
}

TEST_CASE("exponential moment bound holds at eta = 0.4 over b squared") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TabularMdp m = make_random_mdp(3, 2, 2, 600 + seed, RewardNoise::Bernoulli);
        QFunctionClass cls = random_class(2, 3, 2, {3, 3}, 700 + seed);
        double b = boundedness_b(cls);
        double eta = 0.4 / (b * b);
        for (int h = 0; h < 2; ++h)
            for (int x = 0; x < 3; ++x)
                for (int a = 0; a < 2; ++a) {
                    int i = static_cast<int>(seed % 3);
                    int j = (h + 1 < 2) ? static_cast<int>((seed + 2) % 3) : 0;
                    MemberIndexTuple f(2, 0);
                    f[static_cast<std::size_t>(h)] = i;
                    if (h + 1 < 2) f[static_cast<std::size_t>(h + 1)] = j;
                    DeltaMoments mm = delta_moments(m, cls, h, i, j, x, a, eta);
                    double res = bellman_residual(m, cls, f, h, x, a);
                    CHECK(std::log(mm.exp_neg_eta) <= -0.25 * eta * res * res + 1e-10);
                }
    }
}

TEST_CASE("per-step martingale of the doubled excess loss averages to one") {
    TabularMdp m = make_random_mdp(2, 2, 2, 801, RewardNoise::Bernoulli);
    QFunctionClass cls = random_class(2, 2, 2, {2, 2}, 802);
    double b = boundedness_b(cls);
    double eta = 0.4 / (b * b);
    // fixed policies for episodes 1..3
    std::vector<DeterministicPolicy> pis;
    Rng prng(803);
    for (int t = 0; t < 3; ++t) {
        DeterministicPolicy pi = make_policy(2, 2);
        for (int& a : pi.actions) a = prng.uniform_int(2);
        pis.push_back(pi);
    }
    for (int fi = 0; fi < 2; ++fi)
        for (int fj = 0; fj < 2; ++fj)
            for (int h = 0; h < 2; ++h) {
                int i = fi, j = (h == 0) ? fj : 0;
                // E over all enumerated histories of exp(sum_s xi_s^h)
                auto episode = [&](auto&& self, const DeterministicPolicy& pi, int hh, int x,
                                   double prob, double xi_acc,
                                   auto&& on_done) -> void {
                    if (hh == 2) {
                        on_done(prob, xi_acc);
                        return;
                    }
                    int a = pi.action(hh, x);
                    double mean_r = m.reward(hh, x, a);
                    for (int y = 0; y < 2; ++y) {
                        double py = m.prob(hh, x, a, y);
                        if (py == 0.0) continue;
                        for (int bit = 0; bit < 2; ++bit) {
                            double pr = bit ? mean_r : 1.0 - mean_r;
                            if (pr == 0.0) continue;
                            double xi = 0.0;
                            if (hh == h) {
                                double dl = excess_loss_delta(m, cls, h, i, j, x, a,
                                                              static_cast<double>(bit), y);
                                DeltaMoments mm =
                                    delta_moments(m, cls, h, i, j, x, a, 2.0 * eta);
                                xi = -2.0 * eta * dl - std::log(mm.exp_neg_eta);
                            }
                            self(self, pi, hh + 1, y, prob * py * pr, xi_acc + xi, on_done);
                        }
                    }
                };
                double total = 0.0;
                // iterate over episodes by chaining: enumerate episode 1
                // outcomes, then 2, then 3, accumulating xi sums
                std::vector<std::pair<double, double>> layer = {{1.0, 0.0}};
                for (int t = 0; t < 3; ++t) {
                    std::vector<std::pair<double, double>> next;
                    for (const auto& [prob, acc] : layer)
                        episode(episode, pis[static_cast<std::size_t>(t)], 0, m.initial_state,
                                prob, acc, [&](double p2, double a2) {
                                    next.emplace_back(p2, a2);
                                });
                    layer = std::move(next);
                }
                for (const auto& [prob, acc] : layer) total += prob * std::exp(acc);
                CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
            }
}
