#ifndef BBLM_CONFIG_HPP
#define BBLM_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bblm/errors.hpp"
#include "bblm/lstm.hpp"

namespace bblm {

// Everything a subcommand needs. Values come from defaults, then an
// optional `key = value` config file with [section] headers, then flags.
struct RunConfig {
    // paths
    std::string corpus;
    std::string valid;
    std::string wordlists_dir = "data/wordlists";
    std::string labour = "data/labour_stats.tsv";
    std::string templates_path;  // empty = built-in set
    std::string out_dir = "out";
    std::string manifest;      // synthetic manifest for planted rates
    std::string checkpoints;   // checkpoint directory override
    std::string eval_corpus;   // perplexity stream for debias

    // model (vocab_size is filled in after vocabulary construction)
    ModelConfig model;
    int vocab_max = 2000;
    double valid_fraction = 0.05;

    // train
    std::vector<std::uint64_t> seeds;
    std::string schedule = "dense";  // "dense" | "epoch-end"

    // synth
    std::size_t synth_tokens = 1'000'000;
    std::string synth_occupations;  // optional occupation<TAB>rho file
    double occupation_weight = 0.45;
    double pair_weight = 0.35;
    int filler_types = 1800;

    // analyze
    double probe_l2 = 1.0;
    std::uint64_t probe_seed = 1234;
    double threshold = 0.5;
    int phase_window = 3;
    int jobs = 1;
    bool plot_data = false;

    // debias
    int k_max = 10;
    std::vector<std::string> debias_checkpoints;  // stems; empty = default pair
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// `key = value` lines under [section] headers; '#' starts a comment line.
// Returned keys are "section.key"; keys before any header get no prefix.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": malformed section header: " + t);
            section = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key = value, got: " + t);
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        kv[(section.empty() ? key : section + "." + key)] = value;
    }
    return kv;
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    auto kv = parse_config_file(path);
    auto geti = [&](const std::string& v) { return std::stoi(v); };
    auto getd = [&](const std::string& v) { return std::stod(v); };
    for (const auto& [key, value] : kv) {
        if (key == "paths.corpus") cfg.corpus = value;
        else if (key == "paths.valid") cfg.valid = value;
        else if (key == "paths.wordlists") cfg.wordlists_dir = value;
        else if (key == "paths.labour") cfg.labour = value;
        else if (key == "paths.templates") cfg.templates_path = value;
        else if (key == "paths.out") cfg.out_dir = value;
        else if (key == "paths.manifest") cfg.manifest = value;
        else if (key == "paths.checkpoints") cfg.checkpoints = value;
        else if (key == "paths.eval") cfg.eval_corpus = value;
        else if (key == "model.embedding_dim") cfg.model.embedding_dim = geti(value);
        else if (key == "model.hidden_dim") cfg.model.hidden_dim = geti(value);
        else if (key == "model.num_layers") cfg.model.num_layers = geti(value);
        else if (key == "model.dropout") cfg.model.dropout_rate = getd(value);
        else if (key == "model.bptt") cfg.model.bptt_window = geti(value);
        else if (key == "model.batch") cfg.model.batch_size = geti(value);
        else if (key == "model.lr") cfg.model.base_lr = getd(value);
        else if (key == "model.lr_decay") cfg.model.lr_decay_factor = getd(value);
        else if (key == "model.clip") cfg.model.grad_clip = getd(value);
        else if (key == "model.epochs") cfg.model.epochs = geti(value);
        else if (key == "model.vocab") cfg.vocab_max = geti(value);
        else if (key == "train.schedule") cfg.schedule = value;
        else if (key == "train.valid_fraction") cfg.valid_fraction = getd(value);
        else if (key == "train.seeds") {
            cfg.seeds.clear();
            std::size_t pos = 0;
            while (pos < value.size()) {
                auto comma = value.find(',', pos);
                if (comma == std::string::npos) comma = value.size();
                cfg.seeds.push_back(std::stoull(value.substr(pos, comma - pos)));
                pos = comma + 1;
            }
        } else if (key == "synth.tokens") cfg.synth_tokens = std::stoull(value);
        else if (key == "synth.occupations") cfg.synth_occupations = value;
        else if (key == "synth.occupation_weight") cfg.occupation_weight = getd(value);
        else if (key == "synth.pair_weight") cfg.pair_weight = getd(value);
        else if (key == "synth.filler_types") cfg.filler_types = geti(value);
        else if (key == "analyze.l2") cfg.probe_l2 = getd(value);
        else if (key == "analyze.probe_seed") cfg.probe_seed = std::stoull(value);
        else if (key == "analyze.threshold") cfg.threshold = getd(value);
        else if (key == "analyze.phase_window") cfg.phase_window = geti(value);
        else if (key == "analyze.jobs") cfg.jobs = geti(value);
        else if (key == "debias.k_max") cfg.k_max = geti(value);
        else throw ConfigError("unknown config key: " + key);
    }
}

}  // namespace bblm

#endif
