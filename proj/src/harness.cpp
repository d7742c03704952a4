#include "cps/harness.hpp"

#include <cmath>

#include "cps/rng.hpp"

namespace cps {

RunResult run_agent(const TabularMdp& mdp, const QFunctionClass& cls,
                    const AgentConfig& agent, int T, std::uint64_t seed) {
    if (T < 1) throw ValidationError("T must be at least 1");
    RunResult out;
    out.ledger.seed = seed;
    out.ledger.assumption_warning = !check_assumptions(mdp, cls, 1e-9).all();

    const ValueTables vt = optimal_values(mdp);
    const double vstar = vt.v_at(0, mdp.initial_state, mdp.num_states);
    const int H = mdp.horizon;

    out.ledger.sampled.reserve(static_cast<std::size_t>(T));
    out.ledger.inst_regret.reserve(static_cast<std::size_t>(T));
    out.ledger.cum_regret.reserve(static_cast<std::size_t>(T));

    if (agent.type == AgentType::RandomPolicy) {
        double cum = 0.0;
        for (int t = 0; t < T; ++t) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t), 2));
            DeterministicPolicy pi = make_policy(H, mdp.num_states);
            for (int h = 0; h < H; ++h)
                for (int x = 0; x < mdp.num_states; ++x)
                    pi.action(h, x) = rng.uniform_int(mdp.num_actions);
            double inst = vstar - policy_value(mdp, pi);
            cum += inst;
            out.ledger.sampled.emplace_back(static_cast<std::size_t>(H), -1);
            out.ledger.inst_regret.push_back(inst);
            out.ledger.cum_regret.push_back(cum);
        }
        out.residuals.T = 0;
        out.residuals.H = H;
        return out;
    }

    const double b = boundedness_b(cls);
    const double eta = (agent.eta > 0.0) ? agent.eta : 0.4 / (b * b);
    double lambda = agent.lambda;
    if (agent.type == AgentType::NoOptimismAblation || agent.type == AgentType::GreedyFit)
        lambda = 0.0;
    else if (lambda < 0.0)
        lambda = 1.0;  // caller is expected to tune; keep a mild default
    PosteriorState st = make_posterior_state(cls, eta, lambda, agent.alpha,
                                             mdp.initial_state);

    double cum = 0.0;
    for (int t = 0; t < T; ++t) {
        LogWeightChain chain = build_chain(st, cls);
        MemberIndexTuple f =
            (agent.type == AgentType::GreedyFit)
                ? posterior_mode(chain)
                : sample_posterior(chain, derive_seed(seed, static_cast<std::uint64_t>(t), 0));
        DeterministicPolicy pi = greedy_policy(cls, f);
        double inst = vstar - policy_value(mdp, pi);
        cum += inst;
        Trajectory traj =
            simulate_episode(mdp, pi, derive_seed(seed, static_cast<std::uint64_t>(t), 1));
        update_losses(st, cls, traj);
        out.ledger.sampled.push_back(std::move(f));
        out.ledger.inst_regret.push_back(inst);
        out.ledger.cum_regret.push_back(cum);
    }
    out.residuals = record_residuals(mdp, cls, out.ledger.sampled);
    return out;
}

double theorem_bound(double kappa_val, double dc_val, double b, int T, double eta,
                     double lambda, int H, double beta) {
    if (eta > 0.4 / (b * b))
        throw EtaTooLarge("eta exceeds 0.4/b^2");
    if (!(eta > 0.0) || !(lambda > 0.0) || !(beta > 0.0) || T < 1)
        throw ValidationError("theorem_bound needs eta, lambda, beta > 0 and T >= 1");
    const double Td = static_cast<double>(T);
    return (lambda / eta) * dc_val + (2.0 * Td / lambda) * kappa_val +
           6.0 * H * std::pow(Td, 2.0 - beta) / lambda + b * std::pow(Td, 1.0 - beta);
}

double tuned_lambda(int T, double kappa_val, double b, double dc_val) {
    return std::sqrt(static_cast<double>(T) * kappa_val / (b * b * dc_val));
}

ValueDecomposition value_decomposition_check(const TabularMdp& mdp, const QFunctionClass& cls,
                                             const MemberIndexTuple& f) {
    ValueDecomposition out;
    const ValueTables vt = optimal_values(mdp);
    const double vstar = vt.v_at(0, mdp.initial_state, mdp.num_states);
    DeterministicPolicy pi = greedy_policy(cls, f);
    out.reg = vstar - policy_value(mdp, pi);
    const int SA = mdp.num_state_actions();
    std::vector<double> occ = occupancy_measures(mdp, pi);
    for (int h = 0; h < cls.horizon; ++h) {
        int j = (h + 1 < cls.horizon) ? f[static_cast<std::size_t>(h + 1)] : 0;
        std::vector<double> res = residual_table(mdp, cls, h, f[static_cast<std::size_t>(h)], j);
        for (int k = 0; k < SA; ++k)
            out.residual_sum +=
                occ[static_cast<std::size_t>(h * SA + k)] * res[static_cast<std::size_t>(k)];
    }
    out.delta_f1 = cls.state_value(0, f[0], mdp.initial_state) - vstar;
    out.gap = std::abs(out.reg - (out.residual_sum - out.delta_f1));
    return out;
}

}  // namespace cps
