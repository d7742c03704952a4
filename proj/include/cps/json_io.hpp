#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cps/harness.hpp"
#include "cps/mdp.hpp"
#include "cps/value_class.hpp"

namespace cps {

TabularMdp mdp_from_json(const nlohmann::json& j);
nlohmann::json mdp_to_json(const TabularMdp& mdp);

QFunctionClass class_from_json(const nlohmann::json& j);
nlohmann::json class_to_json(const QFunctionClass& cls);

struct ComplexityConfig {
    bool enabled = false;
    double epsilon = 0.0;
    std::vector<double> mu_list;
    BeMode be_mode = BeMode::ExactTiny;
};

struct ExperimentConfig {
    TabularMdp mdp;
    QFunctionClass cls;
    AgentConfig agent;
    int T = 1;
    std::vector<std::uint64_t> seeds;
    ComplexityConfig complexity;
};

// base_dir resolves relative {"path"} references for mdp/class.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& base_dir);

nlohmann::json load_json_file(const std::string& path);  // ValidationError on failure

// FNV-1a over the canonical (sorted-key, minimal) dump.
std::uint64_t content_hash(const nlohmann::json& j);

// header: episode,instantaneous_regret,cumulative_regret,sampled_tuple
// floats printed with %.17g; tuples joined with '-'.
std::string regret_csv(const RegretLedger& ledger);

std::string agent_type_name(AgentType t);

}  // namespace cps
