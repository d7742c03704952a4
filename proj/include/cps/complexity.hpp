#pragma once

#include <vector>

#include "cps/mdp.hpp"
#include "cps/posterior.hpp"
#include "cps/value_class.hpp"

namespace cps {

// Exact expected Bellman residuals along a sequence of sampled Q-functions.
// mean_resid[t][h] = E under the greedy policy of f_t of E_h(f_t; x, a);
// cross(h, s, t) for s < t = E under the policy of f_s of E_h(f_t; x, a)^2.
// Everything is computed from occupancy measures, no sampling.
struct ResidualSequenceRecord {
    int T = 0;
    int H = 0;
    std::vector<double> mean_resid;  // [t][h]
    std::vector<double> cross;       // [h][t(t-1)/2 + s], s < t

    double mean_at(int t, int h) const {
        return mean_resid[static_cast<std::size_t>(t) * H + h];
    }
    double cross_at(int h, int s, int t) const {
        std::size_t tri = static_cast<std::size_t>(t) * (t - 1) / 2;
        return cross[static_cast<std::size_t>(h) * (static_cast<std::size_t>(T) * (T - 1) / 2) +
                     tri + s];
    }
};

ResidualSequenceRecord record_residuals(const TabularMdp& mdp, const QFunctionClass& cls,
                                        const std::vector<MemberIndexTuple>& f_sequence);

struct DcCheck {
    double mu = 0.0;
    double K = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
};

// sum_h sum_t E[E_h(f_t)]  <=  mu * sum_h sum_t sum_{s<t} E[E_h(f_t)^2] + K/(4 mu)
DcCheck dc_inequality_check(const ResidualSequenceRecord& record, double mu, double K);

double dc_bound_linear(int d, int H, int T);
double dc_bound_glm(int d, int H, int T, double k, double K_lip);
double dc_bound_from_be(int be_dim, int H, int T, double mu);

enum class BeMode { ExactTiny, Greedy };

struct BeDimResult {
    int value = 0;
    BeMode mode = BeMode::ExactTiny;
    bool lower_bound_only = false;
};

// Longest eps'-independent sequence (for some eps' > eps) of step-h occupancy
// measures of the class members' greedy policies, against the step-h residual
// functions, maximized over h. ExactTiny searches all orderings and needs at
// most 8 distinct measures per step; Greedy extends greedily and is only a
// lower bound.
BeDimResult bellman_eluder_dim(const TabularMdp& mdp, const QFunctionClass& cls,
                               double epsilon, BeMode mode);

struct NonPositiveEntry : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// sum_i x_i / sqrt(sum_i i * x_i^2), i counted from 1; bounded by sqrt(1+ln n).
double helper_sum_sqrt(const std::vector<double>& xs);

}  // namespace cps
