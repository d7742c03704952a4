#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cps/mdp.hpp"

namespace cps {

enum class LinkType { Identity, SigmoidLike };

// Link with derivative bounded in [k, K]; sigmoid-like is
// sigma(z) = ((K+k) z + (K-k) sin z) / 2, so sigma' = ((K+k) + (K-k) cos z)/2.
struct GlmLink {
    LinkType type = LinkType::Identity;
    double k = 1.0;
    double K = 1.0;

    double operator()(double z) const {
        if (type == LinkType::Identity) return z;
        return 0.5 * ((K + k) * z + (K - k) * std::sin(z));
    }
};

struct LinearBacking {
    int dim = 0;
    std::vector<double> features;                    // [x][a][d]
    std::vector<std::vector<std::vector<double>>> weights;  // [h][i][d]
    std::optional<GlmLink> link;                     // absent => plain linear
};

// Per-step finite family of Q-functions with stagewise priors. Member values
// are always materialized as [x][a] tables; a linear or generalized-linear
// backing additionally records features/weights for serialization and the
// Lipschitz checks. F_{H+1} is implicitly the single zero function.
struct QFunctionClass {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::vector<std::vector<std::vector<double>>> members;  // [h][i][x*A+a]
    std::vector<std::vector<double>> prior;                 // [h][i]
    std::optional<LinearBacking> linear;

    int size(int h) const {
        // h in [0, H]; level H is the implicit zero function
        if (h >= horizon) return 1;
        return static_cast<int>(members[static_cast<std::size_t>(h)].size());
    }
    double value(int h, int i, int x, int a) const {
        if (h >= horizon) return 0.0;
        return members[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)]
                      [static_cast<std::size_t>(x * num_actions + a)];
    }
    // max_a f^h(x, a); zero for h >= H
    double state_value(int h, int i, int x) const {
        if (h >= horizon) return 0.0;
        double m = value(h, i, x, 0);
        for (int a = 1; a < num_actions; ++a) m = std::max(m, value(h, i, x, a));
        return m;
    }
    const std::vector<double>& table(int h, int i) const {
        return members[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)];
    }
    double log_prior(int h, int i) const {
        return std::log(prior[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)]);
    }
    std::size_t tuple_count() const {
        std::size_t n = 1;
        for (int h = 0; h < horizon; ++h) n *= static_cast<std::size_t>(size(h));
        return n;
    }

    void validate() const;  // throws ValidationError
};

// One f in F = F_1 x ... x F_H, as per-step member indices.
using MemberIndexTuple = std::vector<int>;

QFunctionClass make_uniform_prior_class(
    int horizon, int num_states, int num_actions,
    std::vector<std::vector<std::vector<double>>> members);

// T*_h images of every member of F_{h+1}: result[h][j] is the [x][a] table of
// T*_h f_j^{h+1}. h covers 0..H-1; at h = H-1 the single next member is the
// implicit zero function.
std::vector<std::vector<std::vector<double>>> bellman_images(const TabularMdp& mdp,
                                                             const QFunctionClass& cls);

DeterministicPolicy greedy_policy(const QFunctionClass& cls, const MemberIndexTuple& f);

double bellman_residual(const TabularMdp& mdp, const QFunctionClass& cls,
                        const MemberIndexTuple& f, int h, int x, int a);

// E_h(f; x, a) for one (f^h, f^{h+1}) pair, whole table at once.
std::vector<double> residual_table(const TabularMdp& mdp, const QFunctionClass& cls, int h,
                                   int member, int next_member);

struct AssumptionReport {
    bool realizable = false;
    bool bounded = false;
    bool complete = false;
    std::vector<int> realizable_witness;   // per h: matching member index, or -1
    std::vector<std::string> violations;   // human-readable
    bool all() const { return realizable && bounded && complete; }
};

AssumptionReport check_assumptions(const TabularMdp& mdp, const QFunctionClass& cls,
                                   double tol);

struct EmptyCoverSet : std::runtime_error {
    int h;
    int next_member;
    EmptyCoverSet(int h_, int j)
        : std::runtime_error("cover set F_" + std::to_string(h_ + 1) +
                             "(eps, f') empty for next-step member " + std::to_string(j)),
          h(h_), next_member(j) {}
};

struct NegativeValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Prior mass of the eps-Bellman-consistent cover set per (h, next member).
// masses[h][j] with j indexing F_{h+1} (a single j = 0 at h = H-1).
std::vector<std::vector<double>> cover_masses(const TabularMdp& mdp,
                                              const QFunctionClass& cls, double epsilon);

double kappa(const QFunctionClass& cls, double epsilon, const TabularMdp& mdp);

// Per-h values for alpha in (0,1).
std::vector<double> kappa_alpha(const QFunctionClass& cls, double alpha, double epsilon,
                                const TabularMdp& mdp);

// The alpha -> 1 limit per h: sup over next members of ln 1/cover-mass.
std::vector<double> kappa_alpha_limit(const QFunctionClass& cls, double epsilon,
                                      const TabularMdp& mdp);

// Smallest b >= 1 with all member values in [0, b-1]. Throws NegativeValue.
double boundedness_b(const QFunctionClass& cls);

}  // namespace cps
