#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cps {

// Raised when user-supplied data (MDP, class, config) violates an invariant.
// The message names the offending field so the CLI can report it verbatim.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RewardNoise { Deterministic, Bernoulli };

// Finite episodic MDP with a fixed initial state. Immutable after
// construction; all operations on it are pure.
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    int initial_state = 0;
    RewardNoise reward_noise = RewardNoise::Deterministic;
    std::vector<double> transitions;   // [h][x][a][x'], row-major
    std::vector<double> mean_rewards;  // [h][x][a], row-major

    double prob(int h, int x, int a, int y) const {
        return transitions[static_cast<std::size_t>(
            ((h * num_states + x) * num_actions + a) * num_states + y)];
    }
    double reward(int h, int x, int a) const {
        return mean_rewards[static_cast<std::size_t>((h * num_states + x) * num_actions + a)];
    }
    int num_state_actions() const { return num_states * num_actions; }

    // Throws ValidationError naming the offending entry.
    void validate() const;
};

struct DeterministicPolicy {
    int horizon = 0;
    int num_states = 0;
    std::vector<int> actions;  // [h][x]

    int action(int h, int x) const {
        return actions[static_cast<std::size_t>(h * num_states + x)];
    }
    int& action(int h, int x) {
        return actions[static_cast<std::size_t>(h * num_states + x)];
    }
};

DeterministicPolicy make_policy(int horizon, int num_states, int fill_action = 0);

struct TrajectoryStep {
    int state = 0;
    int action = 0;
    double reward = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;  // length H
    int terminal_state = 0;             // x^{H+1}, placeholder past the last step
};

// Deterministic given (mdp, policy, seed).
Trajectory simulate_episode(const TabularMdp& mdp, const DeterministicPolicy& policy,
                            std::uint64_t seed);

struct ValueTables {
    std::vector<double> q;  // [h][x][a]
    std::vector<double> v;  // [h][x]
    double q_at(int h, int x, int a, int num_states, int num_actions) const {
        return q[static_cast<std::size_t>((h * num_states + x) * num_actions + a)];
    }
    double v_at(int h, int x, int num_states) const {
        return v[static_cast<std::size_t>(h * num_states + x)];
    }
};

// Backward induction with Q_{H+1} = 0. Ties in V break to the lowest action.
ValueTables optimal_values(const TabularMdp& mdp);

// Exact V^pi_1(x^1) by backward induction (no Monte Carlo).
double policy_value(const TabularMdp& mdp, const DeterministicPolicy& policy);

// Greedy policy of the optimal Q tables, lowest-index tie break.
DeterministicPolicy greedy_of_values(const TabularMdp& mdp, const ValueTables& vt);

// [T*_h f](x,a). f_next is a [x][a] table; pass an empty vector for the zero
// function at h = H.
std::vector<double> bellman_apply(const TabularMdp& mdp, int h,
                                  const std::vector<double>& f_next);

// Exact state-action distribution per step, [h][x][a]; each h-slice sums to 1.
std::vector<double> occupancy_measures(const TabularMdp& mdp,
                                       const DeterministicPolicy& policy);

}  // namespace cps
