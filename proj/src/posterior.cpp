#include "cps/posterior.hpp"

#include <cmath>

#include "cps/logsumexp.hpp"
#include "cps/rng.hpp"

namespace cps {

PosteriorState make_posterior_state(const QFunctionClass& cls, double eta, double lambda,
                                    double alpha, int initial_state, const TabularMdp* mdp) {
    if (eta <= 0.0) throw ValidationError("eta must be positive");
    if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must be in (0,1]");
    PosteriorState st;
    st.eta = eta;
    st.lambda = lambda;
    st.alpha = alpha;
    st.initial_state = initial_state;
    st.loss.resize(static_cast<std::size_t>(cls.horizon));
    for (int h = 0; h < cls.horizon; ++h)
        st.loss[static_cast<std::size_t>(h)].assign(
            static_cast<std::size_t>(cls.size(h)) * cls.size(h + 1), 0.0);
    if (mdp != nullptr) {
        st.bellman_targets = bellman_images(*mdp, cls);
        st.ref_loss.emplace(static_cast<std::size_t>(cls.horizon));
        for (int h = 0; h < cls.horizon; ++h)
            (*st.ref_loss)[static_cast<std::size_t>(h)].assign(
                static_cast<std::size_t>(cls.size(h + 1)), 0.0);
    }
    return st;
}

void update_losses(PosteriorState& state, const QFunctionClass& cls,
                   const Trajectory& trajectory) {
    const int H = cls.horizon;
    if (static_cast<int>(trajectory.steps.size()) != H)
        throw ValidationError("trajectory length does not match class horizon");
    for (int h = 0; h < H; ++h) {
        const auto& step = trajectory.steps[static_cast<std::size_t>(h)];
        const int x_next = (h + 1 < H) ? trajectory.steps[static_cast<std::size_t>(h + 1)].state
                                       : trajectory.terminal_state;
        const int n = cls.size(h), n_next = cls.size(h + 1);
        std::vector<double> vi(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) vi[static_cast<std::size_t>(i)] =
            cls.value(h, i, step.state, step.action);
        std::vector<double> wj(static_cast<std::size_t>(n_next));
        for (int j = 0; j < n_next; ++j)
            wj[static_cast<std::size_t>(j)] = cls.state_value(h + 1, j, x_next);
        auto& row = state.loss[static_cast<std::size_t>(h)];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n_next; ++j) {
                double d = vi[static_cast<std::size_t>(i)] - step.reward -
                           wj[static_cast<std::size_t>(j)];
                row[static_cast<std::size_t>(i) * n_next + j] += d * d;
            }
        }
        if (state.ref_loss) {
            const auto& targets =
                (*state.bellman_targets)[static_cast<std::size_t>(h)];
            auto& ref = (*state.ref_loss)[static_cast<std::size_t>(h)];
            for (int j = 0; j < n_next; ++j) {
                double t = targets[static_cast<std::size_t>(j)][static_cast<std::size_t>(
                    step.state * cls.num_actions + step.action)];
                double d = t - step.reward - wj[static_cast<std::size_t>(j)];
                ref[static_cast<std::size_t>(j)] += d * d;
            }
        }
    }
    ++state.episode_count;
}

double LogWeightChain::tuple_log_weight(const MemberIndexTuple& f) const {
    double w = 0.0;
    for (int h = 0; h < horizon; ++h) {
        w += unary[static_cast<std::size_t>(h)][static_cast<std::size_t>(
            f[static_cast<std::size_t>(h)])];
        if (h + 1 < horizon) {
            std::size_t n_next = unary[static_cast<std::size_t>(h + 1)].size();
            w += pairwise[static_cast<std::size_t>(h)]
                         [static_cast<std::size_t>(f[static_cast<std::size_t>(h)]) * n_next +
                          static_cast<std::size_t>(f[static_cast<std::size_t>(h + 1)])];
        }
    }
    return w;
}

LogWeightChain build_chain(const PosteriorState& state, const QFunctionClass& cls) {
    const int H = cls.horizon;
    const double eta = state.eta, alpha = state.alpha;
    LogWeightChain chain;
    chain.horizon = H;
    chain.unary.resize(static_cast<std::size_t>(H));
    chain.pairwise.resize(static_cast<std::size_t>(H > 1 ? H - 1 : 0));

    for (int h = 0; h < H; ++h) {
        const int n = cls.size(h);
        auto& u = chain.unary[static_cast<std::size_t>(h)];
        u.assign(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = cls.log_prior(h, i);
        if (h == 0)
            for (int i = 0; i < n; ++i)
                u[static_cast<std::size_t>(i)] +=
                    state.lambda * cls.state_value(0, i, state.initial_state);
    }

    // Step-h potential: -alpha*eta*C[i][j] - alpha*ln sum_i' p0(i') exp(-eta C[i'][j]).
    // The excess-loss reference term (TD loss of the Bellman-consistent
    // predictor) depends only on j and cancels between the loss and its
    // log-normalizer, so the accumulated TD losses alone determine the joint
    // for every alpha in (0,1].
    for (int h = 0; h < H; ++h) {
        const int n = cls.size(h), n_next = cls.size(h + 1);
        const auto& C = state.loss[static_cast<std::size_t>(h)];
        std::vector<double> lognorm(static_cast<std::size_t>(n_next));
        std::vector<double> terms(static_cast<std::size_t>(n));
        for (int j = 0; j < n_next; ++j) {
            for (int i = 0; i < n; ++i)
                terms[static_cast<std::size_t>(i)] =
                    cls.log_prior(h, i) - eta * C[static_cast<std::size_t>(i) * n_next + j];
            lognorm[static_cast<std::size_t>(j)] = log_sum_exp(terms);
        }
        if (h + 1 < H) {
            auto& pw = chain.pairwise[static_cast<std::size_t>(h)];
            pw.assign(static_cast<std::size_t>(n) * n_next, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n_next; ++j)
                    pw[static_cast<std::size_t>(i) * n_next + j] =
                        -alpha * eta * C[static_cast<std::size_t>(i) * n_next + j];
            auto& u_next = chain.unary[static_cast<std::size_t>(h + 1)];
            for (int j = 0; j < n_next; ++j)
                u_next[static_cast<std::size_t>(j)] -=
                    alpha * lognorm[static_cast<std::size_t>(j)];
        } else {
            // single zero function at level H (j = 0): the loss term folds into
            // the level-(H-1) unary and the normalizer is a tuple-independent
            // constant we keep for a faithful log-weight
            auto& u = chain.unary[static_cast<std::size_t>(h)];
            for (int i = 0; i < n; ++i)
                u[static_cast<std::size_t>(i)] +=
                    -alpha * eta * C[static_cast<std::size_t>(i)] - alpha * lognorm[0];
        }
    }
    return chain;
}

namespace {

// m[h][i]: log sum over completions (i_{h+1}, ..., i_H) of the tail weight.
std::vector<std::vector<double>> backward_messages(const LogWeightChain& chain) {
    const int H = chain.horizon;
    std::vector<std::vector<double>> m(static_cast<std::size_t>(H));
    m[static_cast<std::size_t>(H - 1)] = chain.unary[static_cast<std::size_t>(H - 1)];
    for (int h = H - 2; h >= 0; --h) {
        const std::size_t n = chain.unary[static_cast<std::size_t>(h)].size();
        const std::size_t n_next = chain.unary[static_cast<std::size_t>(h + 1)].size();
        const auto& pw = chain.pairwise[static_cast<std::size_t>(h)];
        const auto& m_next = m[static_cast<std::size_t>(h + 1)];
        auto& mh = m[static_cast<std::size_t>(h)];
        mh.assign(n, 0.0);
        std::vector<double> terms(n_next);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n_next; ++j)
                terms[j] = pw[i * n_next + j] + m_next[j];
            mh[i] = chain.unary[static_cast<std::size_t>(h)][i] + log_sum_exp(terms);
        }
    }
    return m;
}

}  // namespace

MemberIndexTuple sample_posterior(const LogWeightChain& chain, std::uint64_t rng_seed) {
    const int H = chain.horizon;
    auto m = backward_messages(chain);
    Rng rng(rng_seed);
    MemberIndexTuple out(static_cast<std::size_t>(H), 0);
    out[0] = rng.categorical(softmax(m[0]));
    for (int h = 1; h < H; ++h) {
        const std::size_t n_next = chain.unary[static_cast<std::size_t>(h)].size();
        const auto& pw = chain.pairwise[static_cast<std::size_t>(h - 1)];
        std::vector<double> logw(n_next);
        for (std::size_t j = 0; j < n_next; ++j)
            logw[j] = pw[static_cast<std::size_t>(out[static_cast<std::size_t>(h - 1)]) *
                             n_next +
                         j] +
                      m[static_cast<std::size_t>(h)][j];
        out[static_cast<std::size_t>(h)] = rng.categorical(softmax(logw));
    }
    return out;
}

MemberIndexTuple posterior_mode(const LogWeightChain& chain) {
    const int H = chain.horizon;
    // max-product backward pass, then a greedy forward trace
    std::vector<std::vector<double>> m(static_cast<std::size_t>(H));
    m[static_cast<std::size_t>(H - 1)] = chain.unary[static_cast<std::size_t>(H - 1)];
    for (int h = H - 2; h >= 0; --h) {
        const std::size_t n = chain.unary[static_cast<std::size_t>(h)].size();
        const std::size_t n_next = chain.unary[static_cast<std::size_t>(h + 1)].size();
        const auto& pw = chain.pairwise[static_cast<std::size_t>(h)];
        auto& mh = m[static_cast<std::size_t>(h)];
        mh.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double best = pw[i * n_next] + m[static_cast<std::size_t>(h + 1)][0];
            for (std::size_t j = 1; j < n_next; ++j)
                best = std::max(best, pw[i * n_next + j] + m[static_cast<std::size_t>(h + 1)][j]);
            mh[i] = chain.unary[static_cast<std::size_t>(h)][i] + best;
        }
    }
    MemberIndexTuple out(static_cast<std::size_t>(H), 0);
    int best_i = 0;
    for (std::size_t i = 1; i < m[0].size(); ++i)
        if (m[0][i] > m[0][static_cast<std::size_t>(best_i)]) best_i = static_cast<int>(i);
    out[0] = best_i;
    for (int h = 1; h < H; ++h) {
        const std::size_t n_next = chain.unary[static_cast<std::size_t>(h)].size();
        const auto& pw = chain.pairwise[static_cast<std::size_t>(h - 1)];
        const std::size_t prev = static_cast<std::size_t>(out[static_cast<std::size_t>(h - 1)]);
        int best_j = 0;
        double best = pw[prev * n_next] + m[static_cast<std::size_t>(h)][0];
        for (std::size_t j = 1; j < n_next; ++j) {
            double v = pw[prev * n_next + j] + m[static_cast<std::size_t>(h)][j];
            if (v > best) {
                best = v;
                best_j = static_cast<int>(j);
            }
        }
        out[static_cast<std::size_t>(h)] = best_j;
    }
    return out;
}

std::vector<double> exact_posterior(const LogWeightChain& chain, std::size_t cap) {
    const int H = chain.horizon;
    std::size_t total = 1;
    for (int h = 0; h < H; ++h) {
        std::size_t n = chain.unary[static_cast<std::size_t>(h)].size();
        if (total > cap / n) throw CapExceeded("tuple count exceeds enumeration cap");
        total *= n;
    }
    std::vector<double> logw(total);
    MemberIndexTuple f(static_cast<std::size_t>(H), 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        // decode idx with i_1 as the major index
        std::size_t rem = idx;
        for (int h = H - 1; h >= 0; --h) {
            std::size_t n = chain.unary[static_cast<std::size_t>(h)].size();
            f[static_cast<std::size_t>(h)] = static_cast<int>(rem % n);
            rem /= n;
        }
        logw[idx] = chain.tuple_log_weight(f);
    }
    return softmax(logw);
}

std::vector<std::vector<double>> chain_marginals(const LogWeightChain& chain) {
    const int H = chain.horizon;
    auto back = backward_messages(chain);
    // fwd[h][i]: log sum over prefixes ending at i_h = i, including unary[h]
    std::vector<std::vector<double>> fwd(static_cast<std::size_t>(H));
    fwd[0] = chain.unary[0];
    for (int h = 1; h < H; ++h) {
        const std::size_t n_prev = chain.unary[static_cast<std::size_t>(h - 1)].size();
        const std::size_t n = chain.unary[static_cast<std::size_t>(h)].size();
        const auto& pw = chain.pairwise[static_cast<std::size_t>(h - 1)];
        auto& fh = fwd[static_cast<std::size_t>(h)];
        fh.assign(n, 0.0);
        std::vector<double> terms(n_prev);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n_prev; ++i)
                terms[i] = fwd[static_cast<std::size_t>(h - 1)][i] + pw[i * n + j];
            fh[j] = chain.unary[static_cast<std::size_t>(h)][j] + log_sum_exp(terms);
        }
    }
    std::vector<std::vector<double>> marg(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        const std::size_t n = chain.unary[static_cast<std::size_t>(h)].size();
        std::vector<double> logw(n);
        // unary[h] is in both fwd and back; subtract one copy
        for (std::size_t i = 0; i < n; ++i)
            logw[i] = fwd[static_cast<std::size_t>(h)][i] + back[static_cast<std::size_t>(h)][i] -
                      chain.unary[static_cast<std::size_t>(h)][i];
        marg[static_cast<std::size_t>(h)] = softmax(logw);
    }
    return marg;
}

double excess_loss_delta(const TabularMdp& mdp, const QFunctionClass& cls, int h, int member,
                         int next_member, int x, int a, double r, int x_next) {
    double fv_next = cls.state_value(h + 1, next_member, x_next);
    double d1 = cls.value(h, member, x, a) - r - fv_next;
    double target = mdp.reward(h, x, a);
    for (int y = 0; y < mdp.num_states; ++y)
        target += mdp.prob(h, x, a, y) * cls.state_value(h + 1, next_member, y);
    double d2 = target - r - fv_next;
    return d1 * d1 - d2 * d2;
}

}  // namespace cps
