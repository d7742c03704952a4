#include "cps/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace cps {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end())
        throw ValidationError(std::string("missing required key \"") + key + "\"");
    return *it;
}

int require_int(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_integer())
        throw ValidationError(std::string("\"") + key + "\" must be an integer");
    return v.get<int>();
}

double number_or(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number())
        throw ValidationError(std::string("\"") + key + "\" must be a number");
    return it->get<double>();
}

}  // namespace

TabularMdp mdp_from_json(const json& j) {
    TabularMdp m;
    m.num_states = require_int(j, "num_states");
    m.num_actions = require_int(j, "num_actions");
    m.horizon = require_int(j, "horizon");
    m.initial_state = require_int(j, "initial_state");
    std::string noise = require(j, "reward_noise").get<std::string>();
    if (noise == "deterministic")
        m.reward_noise = RewardNoise::Deterministic;
    else if (noise == "bernoulli")
        m.reward_noise = RewardNoise::Bernoulli;
    else
        throw ValidationError("\"reward_noise\" must be \"deterministic\" or \"bernoulli\"");
    const json& tr = require(j, "transitions");
    const json& rw = require(j, "mean_rewards");
    if (m.num_states <= 0 || m.num_actions <= 0 || m.horizon <= 0)
        throw ValidationError("num_states, num_actions, horizon must be positive");
    try {
        for (int h = 0; h < m.horizon; ++h)
            for (int x = 0; x < m.num_states; ++x)
                for (int a = 0; a < m.num_actions; ++a) {
                    for (int y = 0; y < m.num_states; ++y)
                        m.transitions.push_back(
                            tr.at(h).at(x).at(a).at(y).get<double>());
                    m.mean_rewards.push_back(rw.at(h).at(x).at(a).get<double>());
                }
    } catch (const json::exception&) {
        throw ValidationError(
            "\"transitions\"/\"mean_rewards\" must be dense [h][x][a](['])-nested arrays of "
            "numbers matching the declared sizes");
    }
    m.validate();
    return m;
}

json mdp_to_json(const TabularMdp& m) {
    json tr = json::array(), rw = json::array();
    for (int h = 0; h < m.horizon; ++h) {
        json trh = json::array(), rwh = json::array();
        for (int x = 0; x < m.num_states; ++x) {
            json trx = json::array(), rwx = json::array();
            for (int a = 0; a < m.num_actions; ++a) {
                json tra = json::array();
                for (int y = 0; y < m.num_states; ++y) tra.push_back(m.prob(h, x, a, y));
                trx.push_back(std::move(tra));
                rwx.push_back(m.reward(h, x, a));
            }
            trh.push_back(std::move(trx));
            rwh.push_back(std::move(rwx));
        }
        tr.push_back(std::move(trh));
        rw.push_back(std::move(rwh));
    }
    return json{{"num_states", m.num_states},
                {"num_actions", m.num_actions},
                {"horizon", m.horizon},
                {"initial_state", m.initial_state},
                {"reward_noise",
                 m.reward_noise == RewardNoise::Bernoulli ? "bernoulli" : "deterministic"},
                {"transitions", std::move(tr)},
                {"mean_rewards", std::move(rw)}};
}

QFunctionClass class_from_json(const json& j) {
    QFunctionClass cls;
    cls.horizon = require_int(j, "horizon");
    cls.num_states = require_int(j, "num_states");
    cls.num_actions = require_int(j, "num_actions");
    if (cls.horizon <= 0 || cls.num_states <= 0 || cls.num_actions <= 0)
        throw ValidationError("class horizon/num_states/num_actions must be positive");

    const bool has_members = j.contains("members");
    if (has_members) {
        const json& mem = j.at("members");
        try {
            cls.members.resize(static_cast<std::size_t>(cls.horizon));
            for (int h = 0; h < cls.horizon; ++h) {
                const json& level = mem.at(h);
                for (const json& member : level) {
                    std::vector<double> table;
                    for (int x = 0; x < cls.num_states; ++x)
                        for (int a = 0; a < cls.num_actions; ++a)
                            table.push_back(member.at(x).at(a).get<double>());
                    cls.members[static_cast<std::size_t>(h)].push_back(std::move(table));
                }
            }
        } catch (const json::exception&) {
            throw ValidationError("\"members\" must be a dense [h][i][x][a] array of numbers");
        }
    }
    if (j.contains("features")) {
        LinearBacking lb;
        const json& feats = j.at("features");
        const json& weights = require(j, "weights");
        try {
            lb.dim = static_cast<int>(feats.at(0).at(0).size());
            for (int x = 0; x < cls.num_states; ++x)
                for (int a = 0; a < cls.num_actions; ++a)
                    for (int d = 0; d < lb.dim; ++d)
                        lb.features.push_back(feats.at(x).at(a).at(d).get<double>());
            lb.weights.resize(static_cast<std::size_t>(cls.horizon));
            for (int h = 0; h < cls.horizon; ++h)
                for (const json& w : weights.at(h)) {
                    std::vector<double> wv;
                    for (int d = 0; d < lb.dim; ++d) wv.push_back(w.at(d).get<double>());
                    lb.weights[static_cast<std::size_t>(h)].push_back(std::move(wv));
                }
        } catch (const json::exception&) {
            throw ValidationError(
                "\"features\"/\"weights\" must be dense [x][a][d] and [h][i][d] arrays");
        }
        if (j.contains("link")) {
            const json& lk = j.at("link");
            GlmLink link;
            std::string type = require(lk, "type").get<std::string>();
            if (type == "identity")
                link.type = LinkType::Identity;
            else if (type == "sigmoid-like")
                link.type = LinkType::SigmoidLike;
            else
                throw ValidationError("\"link.type\" must be \"identity\" or \"sigmoid-like\"");
            link.k = number_or(lk, "k", 1.0);
            link.K = number_or(lk, "K", 1.0);
            if (!(link.k > 0.0) || link.K < link.k)
                throw ValidationError("\"link\" needs 0 < k <= K");
            lb.link = link;
        }
        // materialize member tables from the backing unless given explicitly
        cls.members.resize(static_cast<std::size_t>(cls.horizon));
        for (int h = 0; h < cls.horizon && !has_members; ++h) {
            for (const auto& w : lb.weights[static_cast<std::size_t>(h)]) {
                std::vector<double> table;
                for (int x = 0; x < cls.num_states; ++x)
                    for (int a = 0; a < cls.num_actions; ++a) {
                        double z = 0.0;
                        for (int d = 0; d < lb.dim; ++d)
                            z += lb.features[static_cast<std::size_t>(
                                     (x * cls.num_actions + a) * lb.dim + d)] *
                                 w[static_cast<std::size_t>(d)];
                        table.push_back(lb.link ? (*lb.link)(z) : z);
                    }
                cls.members[static_cast<std::size_t>(h)].push_back(std::move(table));
            }
        }
        cls.linear = std::move(lb);
    } else if (!has_members) {
        throw ValidationError("class document needs either \"members\" or \"features\"");
    }

    if (j.contains("prior")) {
        const json& pr = j.at("prior");
        try {
            cls.prior.resize(static_cast<std::size_t>(cls.horizon));
            for (int h = 0; h < cls.horizon; ++h)
                for (const json& p : pr.at(h))
                    cls.prior[static_cast<std::size_t>(h)].push_back(p.get<double>());
        } catch (const json::exception&) {
            throw ValidationError("\"prior\" must be a dense [h][i] array of numbers");
        }
    } else {
        cls.prior.resize(static_cast<std::size_t>(cls.horizon));
        for (int h = 0; h < cls.horizon; ++h) {
            std::size_t n = cls.members[static_cast<std::size_t>(h)].size();
            if (n == 0) throw ValidationError("class has an empty member level");
            cls.prior[static_cast<std::size_t>(h)].assign(n, 1.0 / static_cast<double>(n));
        }
    }
    cls.validate();
    return cls;
}

json class_to_json(const QFunctionClass& cls) {
    json out{{"horizon", cls.horizon},
             {"num_states", cls.num_states},
             {"num_actions", cls.num_actions}};
    json mem = json::array();
    for (int h = 0; h < cls.horizon; ++h) {
        json level = json::array();
        for (int i = 0; i < cls.size(h); ++i) {
            json table = json::array();
            for (int x = 0; x < cls.num_states; ++x) {
                json row = json::array();
                for (int a = 0; a < cls.num_actions; ++a) row.push_back(cls.value(h, i, x, a));
                table.push_back(std::move(row));
            }
            level.push_back(std::move(table));
        }
        mem.push_back(std::move(level));
    }
    out["members"] = std::move(mem);
    json pr = json::array();
    for (int h = 0; h < cls.horizon; ++h) pr.push_back(cls.prior[static_cast<std::size_t>(h)]);
    out["prior"] = std::move(pr);
    if (cls.linear) {
        const auto& lb = *cls.linear;
        json feats = json::array();
        for (int x = 0; x < cls.num_states; ++x) {
            json row = json::array();
            for (int a = 0; a < cls.num_actions; ++a) {
                json phi = json::array();
                for (int d = 0; d < lb.dim; ++d)
                    phi.push_back(lb.features[static_cast<std::size_t>(
                        (x * cls.num_actions + a) * lb.dim + d)]);
                row.push_back(std::move(phi));
            }
            feats.push_back(std::move(row));
        }
        out["features"] = std::move(feats);
        json weights = json::array();
        for (const auto& level : lb.weights) weights.push_back(level);
        out["weights"] = std::move(weights);
        if (lb.link)
            out["link"] = json{
                {"type", lb.link->type == LinkType::Identity ? "identity" : "sigmoid-like"},
                {"k", lb.link->k},
                {"K", lb.link->K}};
    }
    return out;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("invalid JSON in file: " + path);
    return j;
}

ExperimentConfig config_from_json(const json& j, const std::string& base_dir) {
    ExperimentConfig cfg;
    auto resolve = [&](const json& node, const char* key) -> json {
        json doc;
        if (node.is_object() && node.contains("path")) {
            std::string p = node.at("path").get<std::string>();
            if (!p.empty() && p[0] != '/' && !base_dir.empty()) p = base_dir + "/" + p;
            doc = load_json_file(p);
        } else if (node.is_object()) {
            doc = node;
        } else {
            throw ValidationError(std::string("\"") + key +
                                  "\" must be an inline object or {\"path\": ...}");
        }
        // accept combined documents as produced by `gen` ({"mdp":..., "class":...})
        if (doc.is_object() && doc.contains(key) && doc.at(key).is_object())
            return doc.at(key);
        return doc;
    };
    cfg.mdp = mdp_from_json(resolve(require(j, "mdp"), "mdp"));
    cfg.cls = class_from_json(resolve(require(j, "class"), "class"));
    if (cfg.cls.horizon != cfg.mdp.horizon || cfg.cls.num_states != cfg.mdp.num_states ||
        cfg.cls.num_actions != cfg.mdp.num_actions)
        throw ValidationError("\"class\" dimensions do not match \"mdp\"");

    const json& ag = require(j, "agent");
    std::string type = require(ag, "type").get<std::string>();
    if (type == "conditional_ps")
        cfg.agent.type = AgentType::ConditionalPS;
    else if (type == "no_optimism")
        cfg.agent.type = AgentType::NoOptimismAblation;
    else if (type == "random")
        cfg.agent.type = AgentType::RandomPolicy;
    else if (type == "greedy_fit")
        cfg.agent.type = AgentType::GreedyFit;
    else
        throw ValidationError("\"agent.type\" must be one of conditional_ps, no_optimism, "
                              "random, greedy_fit");
    cfg.agent.eta = number_or(ag, "eta", 0.0);
    cfg.agent.lambda = number_or(ag, "lambda", -1.0);
    cfg.agent.alpha = number_or(ag, "alpha", 1.0);
    cfg.agent.beta = number_or(ag, "beta", 2.0);
    if (!(cfg.agent.alpha > 0.0 && cfg.agent.alpha <= 1.0))
        throw ValidationError("\"agent.alpha\" must be in (0,1]");

    cfg.T = require_int(j, "T");
    if (cfg.T < 1) throw ValidationError("\"T\" must be at least 1");
    const json& seeds = require(j, "seeds");
    if (!seeds.is_array() || seeds.empty())
        throw ValidationError("\"seeds\" must be a nonempty array of integers");
    for (const json& s : seeds) {
        if (!s.is_number_integer()) throw ValidationError("\"seeds\" entries must be integers");
        cfg.seeds.push_back(s.get<std::uint64_t>());
    }

    if (j.contains("complexity")) {
        const json& cx = j.at("complexity");
        cfg.complexity.enabled = true;
        cfg.complexity.epsilon = number_or(cx, "epsilon", 0.0);
        if (cfg.complexity.epsilon < 0.0)
            throw ValidationError("\"complexity.epsilon\" must be nonnegative");
        if (cx.contains("mu_list"))
            for (const json& mu : cx.at("mu_list")) {
                double m = mu.get<double>();
                if (m <= 0.0)
                    throw ValidationError("\"complexity.mu_list\" entries must be positive");
                cfg.complexity.mu_list.push_back(m);
            }
        if (cfg.complexity.mu_list.empty()) cfg.complexity.mu_list = {0.1, 0.5, 1.0};
        std::string mode = cx.contains("be_mode") ? cx.at("be_mode").get<std::string>()
                                                  : std::string("exact_tiny");
        if (mode == "exact_tiny")
            cfg.complexity.be_mode = BeMode::ExactTiny;
        else if (mode == "greedy")
            cfg.complexity.be_mode = BeMode::Greedy;
        else
            throw ValidationError("\"complexity.be_mode\" must be exact_tiny or greedy");
    }
    return cfg;
}

std::uint64_t content_hash(const json& j) {
    std::string dump = j.dump();  // nlohmann emits objects with sorted keys
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string regret_csv(const RegretLedger& ledger) {
    std::string out = "episode,instantaneous_regret,cumulative_regret,sampled_tuple\n";
    char buf[64];
    for (std::size_t t = 0; t < ledger.inst_regret.size(); ++t) {
        out += std::to_string(t + 1);
        std::snprintf(buf, sizeof buf, ",%.17g", ledger.inst_regret[t]);
        out += buf;
        std::snprintf(buf, sizeof buf, ",%.17g", ledger.cum_regret[t]);
        out += buf;
        out += ',';
        const auto& tup = ledger.sampled[t];
        for (std::size_t h = 0; h < tup.size(); ++h) {
            if (h) out += '-';
            out += std::to_string(tup[h]);
        }
        out += '\n';
    }
    return out;
}

std::string agent_type_name(AgentType t) {
    switch (t) {
        case AgentType::ConditionalPS: return "conditional_ps";
        case AgentType::NoOptimismAblation: return "no_optimism";
        case AgentType::RandomPolicy: return "random";
        case AgentType::GreedyFit: return "greedy_fit";
    }
    return "unknown";
}

}  // namespace cps
