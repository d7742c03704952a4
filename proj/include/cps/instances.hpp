#pragma once

#include <cstdint>

#include "cps/mdp.hpp"
#include "cps/value_class.hpp"

namespace cps {

// Hard-exploration chain: 2 actions, Bernoulli rewards. Action 0 retreats to
// state 0 for no reward; action 1 drifts right and pays only in the last state.
TabularMdp make_chain_mdp(int num_states, int horizon);

// Random dense kernels (Dirichlet rows) and uniform mean rewards.
TabularMdp make_random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed,
                           RewardNoise noise = RewardNoise::Deterministic);

// Stagewise closure under T*: F_H starts from the image of the zero function,
// each lower level contains the images of every member one level up, plus
// `distractors` extra members per level (an all-zero table and random tables in
// [0, H-h]). Realizability and completeness hold by construction; priors are
// uniform.
QFunctionClass make_closure_class(const TabularMdp& mdp, int distractors,
                                  std::uint64_t seed);

struct LinearGridInstance {
    TabularMdp mdp;
    QFunctionClass cls;
    int dim = 0;
};

// Linear MDP with simplex features: P^h(.|x,a) = sum_k phi_k(x,a) nu_k^h and
// r^h(x,a) = <phi(x,a), theta_h>. The class is a per-coordinate weight grid on
// [0, H-h]^d, closed under T* exactly in weight space.
LinearGridInstance make_linear_grid(int dim, int grid, int horizon, int num_states,
                                    int num_actions, std::uint64_t seed);

}  // namespace cps
