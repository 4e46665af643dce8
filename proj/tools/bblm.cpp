// bblm: train a small word-level LSTM language model with dense
// checkpointing and measure how gender information and gender bias develop
// across training, including an embedding-debiasing intervention.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "bblm/config.hpp"
#include "bblm/errors.hpp"
#include "bblm/pipeline.hpp"

namespace {

// The --config file loads before flag parsing so that flags override it.
std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    bblm::RunConfig cfg;
    if (const char* env = std::getenv("BB_OUT")) cfg.out_dir = env;

    try {
        std::string config_path = find_config_arg(argc, argv);
        if (!config_path.empty()) bblm::apply_config_file(cfg, config_path);
    } catch (const bblm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"LSTM language-model lab for tracking the emergence of gender bias"};
    app.fallthrough();
    std::string config_dummy;
    app.add_option("--config", config_dummy, "config file (key = value with [section] headers)");
    app.add_option("--out", cfg.out_dir, "output directory (env BB_OUT is the fallback)");
    app.add_option("--jobs", cfg.jobs, "parallel analysis jobs");
    app.add_option("--seed", cfg.seeds, "random seed (repeatable)");

    auto* synth = app.add_subcommand("synth", "generate a planted-bias synthetic corpus");
    synth->add_option("--tokens", cfg.synth_tokens, "target token count");
    synth->add_option("--occupations", cfg.synth_occupations,
                      "occupation<TAB>rho plan file (default: built-in plan)");
    synth->add_option("--wordlists", cfg.wordlists_dir, "wordlists directory");
    synth->add_option("--occupation-weight", cfg.occupation_weight,
                      "occupation sentence share");
    synth->add_option("--pair-weight", cfg.pair_weight, "gendered-pair sentence share");
    synth->add_option("--filler-types", cfg.filler_types, "filler vocabulary size");

    auto* train = app.add_subcommand("train", "train one LSTM per seed with checkpoints");
    train->add_option("--corpus", cfg.corpus, "training corpus (plain text)");
    train->add_option("--valid", cfg.valid, "validation corpus (default: corpus tail)");
    train->add_option("--valid-fraction", cfg.valid_fraction,
                      "validation share when no --valid is given");
    train->add_option("--schedule", cfg.schedule, "checkpoint schedule: dense | epoch-end");
    train->add_option("--epochs", cfg.model.epochs, "training epochs");
    train->add_option("--dim", cfg.model.embedding_dim, "embedding dimension");
    train->add_option("--hidden", cfg.model.hidden_dim, "hidden width of non-top layers");
    train->add_option("--layers", cfg.model.num_layers, "LSTM layers");
    train->add_option("--dropout", cfg.model.dropout_rate, "dropout rate");
    train->add_option("--bptt", cfg.model.bptt_window, "BPTT window");
    train->add_option("--batch", cfg.model.batch_size, "batch size");
    train->add_option("--lr", cfg.model.base_lr, "SGD learning rate");
    train->add_option("--lr-decay", cfg.model.lr_decay_factor, "plateau decay factor");
    train->add_option("--clip", cfg.model.grad_clip, "gradient norm clip");
    train->add_option("--vocab", cfg.vocab_max, "maximum vocabulary size");

    auto* analyze = app.add_subcommand("analyze", "probe and bias analysis over checkpoints");
    analyze->add_option("--corpus", cfg.corpus, "corpus used for dataset statistics");
    analyze->add_option("--valid", cfg.valid, "validation corpus used at training time");
    analyze->add_option("--valid-fraction", cfg.valid_fraction,
                        "validation share used at training time");
    analyze->add_option("--checkpoints", cfg.checkpoints,
                        "checkpoint directory (default: OUT/checkpoints)");
    analyze->add_option("--wordlists", cfg.wordlists_dir, "wordlists directory");
    analyze->add_option("--labour", cfg.labour, "labour statistics file");
    analyze->add_option("--templates", cfg.templates_path,
                        "template file (default: built-in set)");
    analyze->add_option("--manifest", cfg.manifest, "synthetic manifest for planted rates");
    analyze->add_option("--l2", cfg.probe_l2, "probe L2 strength");
    analyze->add_option("--probe-seed", cfg.probe_seed, "probe split seed");
    analyze->add_option("--threshold", cfg.threshold, "boundary-distance threshold");
    analyze->add_option("--phase-window", cfg.phase_window,
                        "consecutive checkpoints required for consolidation");
    analyze->add_flag("--plot-data", cfg.plot_data, "also emit long-format plot tables");

    auto* debias = app.add_subcommand("debias", "iterative null-space projection sweep");
    debias->add_option("--corpus", cfg.corpus, "corpus for the evaluation stream");
    debias->add_option("--valid", cfg.valid, "validation corpus used at training time");
    debias->add_option("--valid-fraction", cfg.valid_fraction,
                       "validation share used at training time");
    debias->add_option("--eval", cfg.eval_corpus, "explicit perplexity stream");
    debias->add_option("--checkpoints", cfg.checkpoints,
                       "checkpoint directory (default: OUT/checkpoints)");
    debias->add_option("--checkpoint", cfg.debias_checkpoints,
                       "checkpoint stem to sweep (repeatable; default: first-epoch-end "
                       "and final)");
    debias->add_option("--k-max", cfg.k_max, "maximum projection steps");
    debias->add_option("--wordlists", cfg.wordlists_dir, "wordlists directory");
    debias->add_option("--templates", cfg.templates_path,
                       "template file (default: built-in set)");

    auto* report = app.add_subcommand("report", "summarize an output directory");
    (void)report;

    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) bblm::run_synth(cfg);
        else if (train->parsed()) bblm::run_train(cfg);
        else if (analyze->parsed()) bblm::run_analyze(cfg);
        else if (debias->parsed()) bblm::run_debias(cfg);
        else if (report->parsed()) bblm::run_report(cfg);
    } catch (const bblm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bblm::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const bblm::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
