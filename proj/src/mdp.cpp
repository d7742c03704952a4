#include "cps/mdp.hpp"

#include <cmath>
#include <cstdlib>

#include "cps/rng.hpp"

namespace cps {

namespace {

std::string idx3(const char* name, int h, int x, int a) {
    return std::string(name) + "[h=" + std::to_string(h) + "][x=" + std::to_string(x) +
           "][a=" + std::to_string(a) + "]";
}

}  // namespace

void TabularMdp::validate() const {
    if (num_states <= 0) throw ValidationError("num_states must be positive");
    if (num_actions <= 0) throw ValidationError("num_actions must be positive");
    if (horizon <= 0) throw ValidationError("horizon must be positive");
    if (initial_state < 0 || initial_state >= num_states)
        throw ValidationError("initial_state out of range");
    const std::size_t nt = static_cast<std::size_t>(horizon) * num_states * num_actions *
                           num_states;
    if (transitions.size() != nt)
        throw ValidationError("transitions has wrong size: expected " + std::to_string(nt) +
                              ", got " + std::to_string(transitions.size()));
    const std::size_t nr =
        static_cast<std::size_t>(horizon) * num_states * num_actions;
    if (mean_rewards.size() != nr)
        throw ValidationError("mean_rewards has wrong size: expected " + std::to_string(nr) +
                              ", got " + std::to_string(mean_rewards.size()));
    for (int h = 0; h < horizon; ++h) {
        for (int x = 0; x < num_states; ++x) {
            for (int a = 0; a < num_actions; ++a) {
                double sum = 0.0;
                for (int y = 0; y < num_states; ++y) {
                    double p = prob(h, x, a, y);
                    if (p < 0.0)
                        throw ValidationError(idx3("transitions", h, x, a) +
                                              " has a negative entry");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-12)
                    throw ValidationError(idx3("transitions", h, x, a) + " sums to " +
                                          std::to_string(sum) + ", expected 1");
                double r = reward(h, x, a);
                if (r < 0.0 || r > 1.0)
                    throw ValidationError(idx3("mean_rewards", h, x, a) + " = " +
                                          std::to_string(r) + " outside [0,1]");
            }
        }
    }
}

DeterministicPolicy make_policy(int horizon, int num_states, int fill_action) {
    DeterministicPolicy p;
    p.horizon = horizon;
    p.num_states = num_states;
    p.actions.assign(static_cast<std::size_t>(horizon) * num_states, fill_action);
    return p;
}

Trajectory simulate_episode(const TabularMdp& mdp, const DeterministicPolicy& policy,
                            std::uint64_t seed) {
    Rng rng(seed);
    Trajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(mdp.horizon));
    int x = mdp.initial_state;
    for (int h = 0; h < mdp.horizon; ++h) {
        int a = policy.action(h, x);
        double mean = mdp.reward(h, x, a);
        double r = mean;
        if (mdp.reward_noise == RewardNoise::Bernoulli)
            r = (rng.next_unit() < mean) ? 1.0 : 0.0;
        // next state by inverse CDF over the transition row
        double u = rng.next_unit();
        double acc = 0.0;
        int y = mdp.num_states - 1;
        for (int cand = 0; cand < mdp.num_states; ++cand) {
            acc += mdp.prob(h, x, a, cand);
            if (u < acc) {
                y = cand;
                break;
            }
        }
        traj.steps.push_back({x, a, r});
        x = y;
    }
    traj.terminal_state = x;
    return traj;
}

ValueTables optimal_values(const TabularMdp& mdp) {
    const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
    ValueTables vt;
    vt.q.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    vt.v.assign(static_cast<std::size_t>(H) * S, 0.0);
    std::vector<double> v_next(static_cast<std::size_t>(S), 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int x = 0; x < S; ++x) {
            double best = 0.0;
            for (int a = 0; a < A; ++a) {
                double ev = 0.0;
                for (int y = 0; y < S; ++y) ev += mdp.prob(h, x, a, y) * v_next[y];
                double q = mdp.reward(h, x, a) + ev;
                vt.q[static_cast<std::size_t>((h * S + x) * A + a)] = q;
                if (a == 0 || q > best) best = q;
            }
            vt.v[static_cast<std::size_t>(h * S + x)] = best;
        }
        for (int x = 0; x < S; ++x) v_next[x] = vt.v[static_cast<std::size_t>(h * S + x)];
    }
    return vt;
}

DeterministicPolicy greedy_of_values(const TabularMdp& mdp, const ValueTables& vt) {
    const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
    DeterministicPolicy p = make_policy(H, S);
    for (int h = 0; h < H; ++h) {
        for (int x = 0; x < S; ++x) {
            int best_a = 0;
            double best = vt.q_at(h, x, 0, S, A);
            for (int a = 1; a < A; ++a) {
                double q = vt.q_at(h, x, a, S, A);
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            p.action(h, x) = best_a;
        }
    }
    return p;
}

double policy_value(const TabularMdp& mdp, const DeterministicPolicy& policy) {
    const int S = mdp.num_states, H = mdp.horizon;
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    std::vector<double> v_next(static_cast<std::size_t>(S), 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int x = 0; x < S; ++x) {
            int a = policy.action(h, x);
            double ev = 0.0;
            for (int y = 0; y < S; ++y) ev += mdp.prob(h, x, a, y) * v_next[y];
            v[x] = mdp.reward(h, x, a) + ev;
        }
        v_next = v;
    }
    return v_next[static_cast<std::size_t>(mdp.initial_state)];
}

std::vector<double> bellman_apply(const TabularMdp& mdp, int h,
                                  const std::vector<double>& f_next) {
    const int S = mdp.num_states, A = mdp.num_actions;
    std::vector<double> out(static_cast<std::size_t>(S) * A, 0.0);
    // max_a' f_next(x', a') per next state; zero function when f_next is empty
    std::vector<double> vmax(static_cast<std::size_t>(S), 0.0);
    if (!f_next.empty()) {
        for (int y = 0; y < S; ++y) {
            double m = f_next[static_cast<std::size_t>(y) * A];
            for (int a = 1; a < A; ++a)
                m = std::max(m, f_next[static_cast<std::size_t>(y) * A + a]);
            vmax[y] = m;
        }
    }
    for (int x = 0; x < S; ++x) {
        for (int a = 0; a < A; ++a) {
            double ev = 0.0;
            for (int y = 0; y < S; ++y) ev += mdp.prob(h, x, a, y) * vmax[y];
            out[static_cast<std::size_t>(x) * A + a] = mdp.reward(h, x, a) + ev;
        }
    }
    return out;
}

std::vector<double> occupancy_measures(const TabularMdp& mdp,
                                       const DeterministicPolicy& policy) {
    const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
    std::vector<double> occ(static_cast<std::size_t>(H) * S * A, 0.0);
    std::vector<double> dist(static_cast<std::size_t>(S), 0.0);
    dist[static_cast<std::size_t>(mdp.initial_state)] = 1.0;
    for (int h = 0; h < H; ++h) {
        std::vector<double> next(static_cast<std::size_t>(S), 0.0);
        for (int x = 0; x < S; ++x) {
            double p = dist[x];
            if (p == 0.0) continue;
            int a = policy.action(h, x);
            occ[static_cast<std::size_t>((h * S + x) * A + a)] = p;
            for (int y = 0; y < S; ++y) next[y] += p * mdp.prob(h, x, a, y);
        }
        dist = next;
    }
    return occ;
}

}  // namespace cps
