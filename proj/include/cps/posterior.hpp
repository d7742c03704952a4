#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cps/mdp.hpp"
#include "cps/value_class.hpp"

namespace cps {

// Accumulated TD losses across episodes. loss[h] is a row-major
// |F_h| x |F_{h+1}| matrix: loss[h][i*n_next + j] = sum over episodes of
//   (f_i^h(x^h, a^h) - r^h - max_a f_j^{h+1}(x^{h+1}, a))^2,
// with the single zero function at level H+1 (n_next = 1 at h = H-1).
//
// ref_loss is an optional simulator-side companion: ref_loss[h][j] accumulates
// the same squared error with T*_h f_j^{h+1} in place of f_i^h. It is not
// needed to form the posterior -- it cancels identically inside each step's
// potential -- but keeping it lets tests evaluate the excess-loss form as
// written and confirm the cancellation.
struct PosteriorState {
    int episode_count = 0;
    double eta = 0.0;
    double lambda = 0.0;
    double alpha = 1.0;
    int initial_state = 0;
    std::vector<std::vector<double>> loss;               // [h][i*|F_{h+1}|+j]
    std::optional<std::vector<std::vector<double>>> ref_loss;  // [h][j]
    std::optional<std::vector<std::vector<std::vector<double>>>> bellman_targets;
};

// When mdp is supplied the state also tracks ref_loss (requires knowing T*).
PosteriorState make_posterior_state(const QFunctionClass& cls, double eta, double lambda,
                                    double alpha, int initial_state,
                                    const TabularMdp* mdp = nullptr);

void update_losses(PosteriorState& state, const QFunctionClass& cls,
                   const Trajectory& trajectory);

// Log-potentials of the posterior over member tuples (i_1, ..., i_H), chain-
// structured because step h couples only (i_h, i_{h+1}):
//   ln p(f) = const + sum_h unary[h][i_h] + sum_{h<H-1} pair[h][i_h*n+i_{h+1}]
struct LogWeightChain {
    int horizon = 0;
    std::vector<std::vector<double>> unary;     // [h][i]
    std::vector<std::vector<double>> pairwise;  // [h][i*|F_{h+1}|+j], h = 0..H-2

    double tuple_log_weight(const MemberIndexTuple& f) const;
};

LogWeightChain build_chain(const PosteriorState& state, const QFunctionClass& cls);

MemberIndexTuple sample_posterior(const LogWeightChain& chain, std::uint64_t rng_seed);

// Highest-probability tuple (max-product), lowest-index tie break.
MemberIndexTuple posterior_mode(const LogWeightChain& chain);

struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full enumeration, tuples ordered with i_1 as the major index. Throws
// CapExceeded when the tuple count exceeds cap.
std::vector<double> exact_posterior(const LogWeightChain& chain,
                                    std::size_t cap = 1000000);

// Per-step marginals p(i_h) from the chain messages, without enumeration.
std::vector<std::vector<double>> chain_marginals(const LogWeightChain& chain);

// (f^h(x,a) - r - f^{h+1}(x'))^2 - (T*_h f^{h+1}(x,a) - r - f^{h+1}(x'))^2
// for one observed transition; simulator-side (needs T*).
double excess_loss_delta(const TabularMdp& mdp, const QFunctionClass& cls, int h, int member,
                         int next_member, int x, int a, double r, int x_next);

}  // namespace cps
