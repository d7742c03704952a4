#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cps/complexity.hpp"
#include "cps/mdp.hpp"
#include "cps/posterior.hpp"
#include "cps/value_class.hpp"

namespace cps {

enum class AgentType { ConditionalPS, NoOptimismAblation, RandomPolicy, GreedyFit };

struct AgentConfig {
    AgentType type = AgentType::ConditionalPS;
    double eta = 0.0;     // <= 0 means "use the default 0.4/b^2"
    double lambda = -1.0; // < 0 means "use the tuned value"; forced to 0 where N/A
    double alpha = 1.0;
    double beta = 2.0;
};

struct RegretLedger {
    std::uint64_t seed = 0;
    std::string config_hash;
    bool assumption_warning = false;
    std::vector<MemberIndexTuple> sampled;  // per episode; -1 entries for RandomPolicy
    std::vector<double> inst_regret;
    std::vector<double> cum_regret;
};

struct RunResult {
    RegretLedger ledger;
    ResidualSequenceRecord residuals;  // empty (T=0) for RandomPolicy
};

// One full run: per episode, draw a Q-function tuple from the posterior, play
// its greedy policy, observe the trajectory, update the losses. Regret is exact
// (policy evaluation by dynamic programming), never rolled out.
RunResult run_agent(const TabularMdp& mdp, const QFunctionClass& cls,
                    const AgentConfig& agent, int T, std::uint64_t seed);

struct EtaTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (lambda/eta) dc + (2T/lambda) kappa + 6 H T^{2-beta}/lambda + b T^{1-beta}.
// kappa_val should be the prior-mass complexity at scale b/T^beta.
double theorem_bound(double kappa_val, double dc_val, double b, int T, double eta,
                     double lambda, int H, double beta);

double tuned_lambda(int T, double kappa_val, double b, double dc_val);

struct ValueDecomposition {
    double reg = 0.0;           // V*(x1) - V^{pi_f}(x1)
    double residual_sum = 0.0;  // E_{pi_f} sum_h E_h(f; x^h, a^h)
    double delta_f1 = 0.0;      // max_a f^1(x1, a) - V*(x1)
    double gap = 0.0;           // |reg - (residual_sum - delta_f1)|
};

ValueDecomposition value_decomposition_check(const TabularMdp& mdp, const QFunctionClass& cls,
                                             const MemberIndexTuple& f);

}  // namespace cps
