#ifndef BBLM_PIPELINE_HPP
#define BBLM_PIPELINE_HPP

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bblm/bias.hpp"
#include "bblm/checkpoint.hpp"
#include "bblm/config.hpp"
#include "bblm/cooccur.hpp"
#include "bblm/csv.hpp"
#include "bblm/debias.hpp"
#include "bblm/errors.hpp"
#include "bblm/lstm.hpp"
#include "bblm/probe.hpp"
#include "bblm/stats.hpp"
#include "bblm/synth.hpp"
#include "bblm/text.hpp"
#include "bblm/wordlists.hpp"

namespace bblm {

namespace fs = std::filesystem;

// Default planted-rate plan: 20 occupations whose rates follow the labour
// statistics (percent female / 100), clamped into [0.05, 0.95].
inline const std::vector<OccupationPlan> kDefaultSynthPlan = {
    {"pathologist", 0.95},  {"secretary", 0.946},  {"hairdresser", 0.942},
    {"receptionist", 0.906}, {"nurse", 0.8958},    {"librarian", 0.83},
    {"therapist", 0.767},   {"cashier", 0.725},    {"teacher", 0.71},
    {"baker", 0.608},       {"bartender", 0.598},  {"broker", 0.555},
    {"scientist", 0.4194},  {"technician", 0.4034}, {"lawyer", 0.345},
    {"architect", 0.2081},  {"programmer", 0.1835}, {"engineer", 0.1072},
    {"mechanic", 0.05},     {"plumber", 0.05}};

inline std::vector<OccupationPlan> load_occupation_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open occupation plan: " + path);
    std::vector<OccupationPlan> plan;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected occupation<TAB>rho");
        plan.push_back({line.substr(0, tab), std::stod(line.substr(tab + 1))});
    }
    return plan;
}

inline std::string checkpoint_stem(std::uint64_t seed, int epoch, double fraction) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "seed%llu_e%d_f%.4f",
                  static_cast<unsigned long long>(seed), epoch, fraction);
    return buf;
}

struct CheckpointInfo {
    fs::path path;
    std::string stem;
    std::uint64_t seed = 0;
    int epoch = 0;
    double fraction = 0.0;

    // Training progress in epochs, fractional; the pre-training snapshot is 0.
    double progress() const { return epoch == 0 ? 0.0 : epoch - 1 + fraction; }
};

inline std::vector<CheckpointInfo> list_checkpoints(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw ConfigError("checkpoint directory does not exist: " + dir.string());
    std::vector<CheckpointInfo> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".ckpt") continue;
        CheckpointInfo info;
        info.path = entry.path();
        info.stem = entry.path().stem().string();
        unsigned long long seed = 0;
        int epoch = 0;
        double fraction = 0.0;
        if (std::sscanf(info.stem.c_str(), "seed%llu_e%d_f%lf", &seed, &epoch,
                        &fraction) != 3)
            continue;
        info.seed = seed;
        info.epoch = epoch;
        info.fraction = fraction;
        out.push_back(std::move(info));
    }
    std::sort(out.begin(), out.end(), [](const CheckpointInfo& a, const CheckpointInfo& b) {
        if (a.seed != b.seed) return a.seed < b.seed;
        if (a.progress() != b.progress()) return a.progress() < b.progress();
        return a.stem < b.stem;
    });
    return out;
}

inline std::int64_t reproducible_timestamp() {
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        return std::strtoll(env, nullptr, 10);
    }
    return 0;
}

// Train/validation token split; the validation tail is cut at a token
// boundary when no separate validation file is given.
struct CorpusTokens {
    std::vector<std::string> train_tokens;
    std::vector<std::string> valid_tokens;
    std::vector<std::vector<std::string>> train_documents;
};

inline CorpusTokens load_corpus_tokens(const RunConfig& cfg) {
    if (cfg.corpus.empty()) throw ConfigError("no corpus path given");
    std::string text = read_file(cfg.corpus);
    auto documents = split_documents(text);
    std::vector<std::string> tokens;
    for (const auto& doc : documents) tokens.insert(tokens.end(), doc.begin(), doc.end());
    if (tokens.empty()) throw DataError("corpus is empty: " + cfg.corpus);

    CorpusTokens out;
    std::size_t train_len = tokens.size();
    if (!cfg.valid.empty()) {
        out.train_tokens = std::move(tokens);
        out.valid_tokens = tokenize(read_file(cfg.valid));
    } else {
        train_len = static_cast<std::size_t>(
            static_cast<double>(tokens.size()) * (1.0 - cfg.valid_fraction));
        train_len = std::max<std::size_t>(1, train_len);
        out.train_tokens.assign(tokens.begin(), tokens.begin() + train_len);
        out.valid_tokens.assign(tokens.begin() + train_len, tokens.end());
    }

    // Trim the document list to the training portion so dataset statistics
    // cover exactly what the model saw.
    std::size_t remaining = out.train_tokens.size();
    for (const auto& doc : documents) {
        if (remaining == 0) break;
        std::size_t take = std::min(remaining, doc.size());
        out.train_documents.emplace_back(doc.begin(), doc.begin() + take);
        remaining -= take;
    }
    return out;
}

struct PreparedCorpus {
    Vocabulary vocab;
    std::vector<TokenId> train_ids;
    std::vector<TokenId> valid_ids;
};

inline PreparedCorpus prepare_corpus(const RunConfig& cfg) {
    CorpusTokens tokens = load_corpus_tokens(cfg);
    PreparedCorpus out;
    out.vocab = Vocabulary::build(tokens.train_tokens, cfg.vocab_max);
    out.train_ids = out.vocab.encode(tokens.train_tokens);
    out.valid_ids = out.vocab.encode(tokens.valid_tokens);
    return out;
}

inline int batches_per_epoch(const ModelConfig& cfg, std::size_t n_train_tokens) {
    const std::size_t stream_len = n_train_tokens / cfg.batch_size;
    if (stream_len < 2) return 0;
    const int usable = static_cast<int>(stream_len) - 1;
    return (usable + cfg.bptt_window - 1) / cfg.bptt_window;
}

// ---------------------------------------------------------------------------
// synth

inline void run_synth(const RunConfig& cfg) {
    SynthSpec spec;
    spec.occupations = cfg.synth_occupations.empty()
                           ? kDefaultSynthPlan
                           : load_occupation_plan(cfg.synth_occupations);
    WordLists lists = load_wordlists(cfg.wordlists_dir);
    spec.pairs = lists.gendered_pairs;
    spec.target_tokens = cfg.synth_tokens;
    spec.occupation_weight = cfg.occupation_weight;
    spec.pair_weight = cfg.pair_weight;
    spec.filler_types = cfg.filler_types;
    const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();

    SynthCorpus corpus = generate_synthetic_corpus(spec, seed);

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream out(fs::path(cfg.out_dir) / "corpus.txt");
        if (!out) throw DataError("cannot write corpus under " + cfg.out_dir);
        for (const auto& line : corpus.lines) out << line << "\n";
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "manifest.tsv");
        out << "occupation\tplanted_rho\trealized_rate\tcount\n";
        for (const auto& row : corpus.manifest)
            out << row.occupation << '\t' << fmt_double(row.planted_rho) << '\t'
                << fmt_double(row.realized_rate) << '\t' << row.count << "\n";
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "synth_config.txt");
        out << "seed = " << seed << "\n";
        out << "target_tokens = " << spec.target_tokens << "\n";
        out << "occupation_weight = " << fmt_double(spec.occupation_weight) << "\n";
        out << "pair_weight = " << fmt_double(spec.pair_weight) << "\n";
        out << "filler_types = " << spec.filler_types << "\n";
        for (const auto& occ : spec.occupations)
            out << "rho." << occ.word << " = " << fmt_double(occ.rho) << "\n";
    }
    std::cout << "synth: wrote " << corpus.lines.size() << " sentences, "
              << corpus.token_count << " tokens to " << cfg.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// train

inline void run_train(const RunConfig& cfg) {
    PreparedCorpus prepared = prepare_corpus(cfg);
    fs::create_directories(fs::path(cfg.out_dir) / "checkpoints");
    {
        std::ofstream out(fs::path(cfg.out_dir) / "vocab.tsv");
        prepared.vocab.save(out);
    }

    const auto seeds = cfg.seeds.empty() ? std::vector<std::uint64_t>{1} : cfg.seeds;
    for (std::uint64_t seed : seeds) {
        ModelConfig mc = cfg.model;
        mc.vocab_size = static_cast<int>(prepared.vocab.size());
        mc.seed = seed;
        mc.validate();
        const int n_batches = batches_per_epoch(mc, prepared.train_ids.size());
        if (n_batches == 0)
            throw DataError("corpus too small for batch size " +
                            std::to_string(mc.batch_size));

        ModelState model = init_model(mc);
        CsvWriter log(fs::path(cfg.out_dir) /
                          ("train_log_seed" + std::to_string(seed) + ".csv"),
                      "epoch,batch,fraction,lr,train_loss,val_ppl");

        ScheduleKind kind =
            cfg.schedule == "epoch-end" ? ScheduleKind::EpochEnd : ScheduleKind::Dense;
        if (cfg.schedule != "epoch-end" && cfg.schedule != "dense")
            throw ConfigError("unknown checkpoint schedule: " + cfg.schedule);

        TrainHooks hooks;
        hooks.on_checkpoint = [&](const ModelState& m, int epoch, int batch,
                                  double fraction) {
            Checkpoint ckpt;
            ckpt.state = m;
            ckpt.epoch = epoch;
            ckpt.batch_index = batch;
            ckpt.batches_per_epoch = n_batches;
            ckpt.fraction_of_epoch = fraction;
            ckpt.timestamp = reproducible_timestamp();
            std::string stem = checkpoint_stem(seed, epoch, fraction);
            save_checkpoint(ckpt,
                            (fs::path(cfg.out_dir) / "checkpoints" / (stem + ".ckpt"))
                                .string());
        };
        hooks.on_batch = [&](int epoch, int batch, double fraction, double lr,
                             double train_loss, double val_ppl) {
            log.row({std::to_string(epoch), std::to_string(batch),
                     fmt_double(fraction), fmt_double(lr), fmt_double(train_loss),
                     std::isnan(val_ppl) ? "" : fmt_double(val_ppl)});
        };

        std::cout << "train: seed " << seed << ", " << prepared.train_ids.size()
                  << " train tokens, vocab " << prepared.vocab.size() << ", "
                  << n_batches << " batches/epoch\n";
        train(model, prepared.train_ids, prepared.valid_ids, kind, hooks);
    }
}

// ---------------------------------------------------------------------------
// analyze

struct AnalysisSetup {
    Vocabulary vocab;
    ResolvedWordLists words;
    TemplateSet templates;
    bool has_templates = true;
    FeatureFrame features;
    PmiTable pmi;
};

inline Vocabulary load_vocab_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open vocabulary file: " + path.string());
    return Vocabulary::load(in);
}

inline AnalysisSetup analysis_setup(const RunConfig& cfg, bool need_corpus_stats) {
    AnalysisSetup setup;
    setup.vocab = load_vocab_file(fs::path(cfg.out_dir) / "vocab.tsv");
    WordLists lists = load_wordlists(cfg.wordlists_dir);
    setup.words = resolve(lists, setup.vocab);
    if (!setup.words.missing.empty()) {
        std::cout << "analyze: " << setup.words.missing.size()
                  << " wordlist tokens not in vocabulary:";
        for (const auto& t : setup.words.missing) std::cout << ' ' << t;
        std::cout << "\n";
    }

    if (cfg.templates_path.empty()) {
        setup.templates = builtin_templates();
    } else {
        setup.templates = load_templates(cfg.templates_path);
        if (setup.templates.templates.empty()) {
            std::cout << "analyze: warning: template file has no templates; "
                         "STS-B columns will be absent\n";
            setup.has_templates = false;
        }
    }
    if (!setup.vocab.contains("man") || !setup.vocab.contains("woman")) {
        std::cout << "analyze: warning: man/woman missing from vocabulary; "
                     "STS-B columns will be absent\n";
        setup.has_templates = false;
    }

    if (need_corpus_stats) {
        CorpusTokens tokens = load_corpus_tokens(cfg);
        std::vector<std::vector<TokenId>> documents;
        for (const auto& doc : tokens.train_documents)
            documents.push_back(setup.vocab.encode(doc));
        setup.pmi = pmi_table(documents, setup.words, cfg.model.bptt_window);
        LabourStats labour;
        if (!cfg.labour.empty() && fs::exists(cfg.labour))
            labour = load_labour_stats(cfg.labour);
        std::map<std::string, double> planted;
        if (!cfg.manifest.empty()) {
            for (const auto& [lineno, line] :
                 detail::data_lines(cfg.manifest)) {
                if (line.rfind("occupation\t", 0) == 0) continue;  // header
                auto f1 = line.find('\t');
                auto f2 = line.find('\t', f1 + 1);
                if (f1 == std::string::npos || f2 == std::string::npos)
                    throw DataError(cfg.manifest + ":" + std::to_string(lineno) +
                                    ": malformed manifest row");
                planted[line.substr(0, f1)] =
                    std::stod(line.substr(f1 + 1, f2 - f1 - 1));
            }
        }
        for (const auto& rec : setup.pmi) {
            FeatureRow row;
            row.word_count = static_cast<double>(rec.count);
            row.pmi_f = rec.pmi_f;
            row.pmi_m = rec.pmi_m;
            row.pmi_diff = rec.pmi_diff;
            row.pmi_f_defined = rec.defined_f;
            row.pmi_m_defined = rec.defined_m;
            if (auto it = labour.find(rec.word); it != labour.end())
                row.labour_pct_female = it->second;
            if (auto it = planted.find(rec.word); it != planted.end())
                row.planted_rho = it->second;
            setup.features[rec.word] = row;
        }
    }
    return setup;
}

// Everything computed from one checkpoint during analyze.
struct CheckpointAnalysis {
    CheckpointInfo info;
    ProbeSeriesRow probe_row;
    std::vector<std::string> tokens;  // pair words, male then female per pair
    std::vector<double> dist_unit_only, dist_unit_removed;
    bool bias_ok = false;
    std::string bias_skip_reason;
    std::vector<BiasRow> bias_rows;
    double mean_abs_ie = 0.0, mean_abs_stsb = 0.0;
    std::vector<CorrelationCell> correlations;
    std::optional<double> cross_metric;
    std::size_t cross_metric_n = 0;
};

inline CheckpointAnalysis analyze_checkpoint(const RunConfig& cfg,
                                             const AnalysisSetup& setup,
                                             const CheckpointInfo& info) {
    CheckpointAnalysis out;
    out.info = info;
    Checkpoint ckpt = load_checkpoint(info.path.string());
    const ModelState& model = ckpt.state;

    std::vector<VectorPair> pairs;
    for (const auto& [m_id, f_id] : setup.words.pair_ids) {
        VectorPair p;
        p.male = model.embedding.row(m_id);
        p.female = model.embedding.row(f_id);
        pairs.push_back(std::move(p));
    }
    LinearProbe full = fit_probe(pairs, cfg.probe_l2, cfg.probe_seed);
    int unit = dominant_unit(full);
    ProbeVariants variants = probe_variants(pairs, unit, cfg.probe_l2, cfg.probe_seed);

    out.probe_row.checkpoint = info.stem;
    out.probe_row.fraction = info.progress();
    out.probe_row.acc_full = variants.full.test_accuracy;
    out.probe_row.acc_unit_only = variants.unit_only.test_accuracy;
    out.probe_row.acc_unit_removed = variants.unit_removed.test_accuracy;
    out.probe_row.dominant_unit = unit;

    const Eigen::Index d = model.embedding.cols();
    for (std::size_t i = 0; i < setup.words.pair_ids.size(); ++i) {
        for (int side = 0; side < 2; ++side) {
            TokenId id = side == 0 ? setup.words.pair_ids[i].first
                                   : setup.words.pair_ids[i].second;
            out.tokens.push_back(side == 0 ? setup.words.pairs[i].male
                                           : setup.words.pairs[i].female);
            Eigen::VectorXd x = model.embedding.row(id);
            Eigen::VectorXd x_only = Eigen::VectorXd::Constant(1, x(unit));
            Eigen::VectorXd x_rest(d - 1);
            Eigen::Index k = 0;
            for (Eigen::Index j = 0; j < d; ++j) {
                if (j == unit) continue;
                x_rest(k++) = x(j);
            }
            out.dist_unit_only.push_back(boundary_distance(variants.unit_only, x_only));
            out.dist_unit_removed.push_back(
                boundary_distance(variants.unit_removed, x_rest));
        }
    }

    try {
        BiasSnapshot snap = bias_snapshot(
            model, setup.vocab, setup.words,
            setup.has_templates ? &setup.templates : nullptr);
        out.bias_ok = true;
        out.bias_rows = snap.rows;
        out.mean_abs_ie = snap.mean_abs_ie;
        out.mean_abs_stsb = snap.mean_abs_stsb;

        std::map<std::string, double> ie_scores;
        for (const auto& row : snap.rows) ie_scores[row.word] = row.bias_ie;
        out.correlations = correlation_report(ie_scores, setup.features);
        if (setup.has_templates && snap.rows.size() >= 3) {
            std::vector<std::pair<double, double>> both;
            for (const auto& row : snap.rows)
                both.emplace_back(row.bias_ie, row.bias_stsb);
            out.cross_metric = cross_metric_correlation(both);
            out.cross_metric_n = both.size();
        }
    } catch (const DataError& e) {
        out.bias_ok = false;
        out.bias_skip_reason = e.what();
    }
    return out;
}

inline void run_analyze(const RunConfig& cfg) {
    const fs::path ckpt_dir = cfg.checkpoints.empty()
                                  ? fs::path(cfg.out_dir) / "checkpoints"
                                  : fs::path(cfg.checkpoints);
    auto checkpoints = list_checkpoints(ckpt_dir);
    if (checkpoints.empty())
        throw ConfigError("no checkpoints found in " + ckpt_dir.string());

    AnalysisSetup setup = analysis_setup(cfg, true);
    const fs::path adir = fs::path(cfg.out_dir) / "analysis";
    fs::create_directories(adir);

    {
        std::ofstream out(adir / "features.tsv");
        out << "occupation\tword_count\tpmi_f\tpmi_m\tpmi_diff\tlabour_pct_female"
               "\tplanted_rho\n";
        for (const auto& rec : setup.pmi) {
            const FeatureRow& row = setup.features.at(rec.word);
            out << rec.word << '\t' << rec.count << '\t'
                << (rec.defined_f ? fmt_double(rec.pmi_f) : "nan") << '\t'
                << (rec.defined_m ? fmt_double(rec.pmi_m) : "nan") << '\t'
                << (rec.defined_f && rec.defined_m ? fmt_double(rec.pmi_diff) : "nan")
                << '\t'
                << (row.labour_pct_female ? fmt_double(*row.labour_pct_female) : "")
                << '\t' << (row.planted_rho ? fmt_double(*row.planted_rho) : "")
                << "\n";
        }
    }

    // Results are computed (possibly in parallel) then written in order.
    std::vector<CheckpointAnalysis> results(checkpoints.size());
    const int jobs = std::max(1, cfg.jobs);
    for (std::size_t base = 0; base < checkpoints.size();
         base += static_cast<std::size_t>(jobs)) {
        std::vector<std::future<CheckpointAnalysis>> futs;
        const std::size_t end =
            std::min(checkpoints.size(), base + static_cast<std::size_t>(jobs));
        for (std::size_t i = base; i < end; ++i)
            futs.push_back(std::async(std::launch::async, [&, i] {
                return analyze_checkpoint(cfg, setup, checkpoints[i]);
            }));
        for (std::size_t i = base; i < end; ++i) results[i] = futs[i - base].get();
    }

    std::set<std::uint64_t> seeds;
    for (const auto& info : checkpoints) seeds.insert(info.seed);

    for (std::uint64_t seed : seeds) {
        const std::string tag = "_seed" + std::to_string(seed);
        std::vector<const CheckpointAnalysis*> rows;
        for (const auto& r : results)
            if (r.info.seed == seed) rows.push_back(&r);

        ProbeSeries series;
        {
            CsvWriter probe_csv(
                adir / ("probe_series" + tag + ".csv"),
                "checkpoint,fraction,acc_full,acc_unit_only,acc_unit_removed,"
                "dominant_unit");
            for (const auto* r : rows) {
                series.push_back(r->probe_row);
                probe_csv.row({r->probe_row.checkpoint, fmt_double(r->probe_row.fraction),
                               fmt_double(r->probe_row.acc_full),
                               fmt_double(r->probe_row.acc_unit_only),
                               fmt_double(r->probe_row.acc_unit_removed),
                               std::to_string(r->probe_row.dominant_unit)});
            }
        }
        {
            CsvWriter dist_csv(adir / ("boundary_distances" + tag + ".csv"),
                               "checkpoint,token,dist_unit_only,dist_unit_removed");
            for (const auto* r : rows)
                for (std::size_t i = 0; i < r->tokens.size(); ++i)
                    dist_csv.row({r->info.stem, r->tokens[i],
                                  fmt_double(r->dist_unit_only[i]),
                                  fmt_double(r->dist_unit_removed[i])});
        }
        {
            const std::string header =
                setup.has_templates ? "checkpoint,fraction,word,bias_ie,bias_stsb"
                                    : "checkpoint,fraction,word,bias_ie";
            CsvWriter bias_csv(adir / ("bias_table" + tag + ".csv"), header);
            for (const auto* r : rows) {
                if (!r->bias_ok) {
                    std::cout << "analyze: skipped bias rows for " << r->info.stem
                              << ": " << r->bias_skip_reason << "\n";
                    continue;
                }
                for (const auto& row : r->bias_rows) {
                    std::vector<std::string> fields = {r->info.stem,
                                                       fmt_double(r->info.progress()),
                                                       row.word,
                                                       fmt_double(row.bias_ie)};
                    if (setup.has_templates) fields.push_back(fmt_double(row.bias_stsb));
                    bias_csv.row(fields);
                }
            }
        }
        {
            CsvWriter corr_csv(adir / ("correlations" + tag + ".csv"),
                               "checkpoint,fraction,feature,r,n");
            for (const auto* r : rows) {
                if (!r->bias_ok) continue;
                for (const auto& cell : r->correlations)
                    corr_csv.row({r->info.stem, fmt_double(r->info.progress()),
                                  cell.feature, cell.r ? fmt_double(*cell.r) : "nan",
                                  std::to_string(cell.n)});
                if (r->cross_metric)
                    corr_csv.row({r->info.stem, fmt_double(r->info.progress()),
                                  "bias_stsb", fmt_double(*r->cross_metric),
                                  std::to_string(r->cross_metric_n)});
            }
        }
        {
            auto overlap = unit_overlap(series);
            std::ofstream out(adir / ("unit_overlap" + tag + ".csv"));
            out << "checkpoint";
            for (const auto& row : series) out << ',' << row.checkpoint;
            out << "\n";
            for (std::size_t i = 0; i < overlap.size(); ++i) {
                out << series[i].checkpoint;
                for (std::size_t j = 0; j < overlap.size(); ++j)
                    out << ',' << (overlap[i][j] ? 1 : 0);
                out << "\n";
            }
        }
        {
            CsvWriter cross_csv(adir / ("threshold_crossings" + tag + ".csv"),
                                "token,cross_unit_only,cross_unit_removed");
            if (!rows.empty()) {
                const auto& tokens = rows.front()->tokens;
                for (std::size_t t = 0; t < tokens.size(); ++t) {
                    std::vector<double> only, removed;
                    for (const auto* r : rows) {
                        only.push_back(r->dist_unit_only[t]);
                        removed.push_back(r->dist_unit_removed[t]);
                    }
                    auto c1 = threshold_crossing(only, cfg.threshold);
                    auto c2 = threshold_crossing(removed, cfg.threshold);
                    cross_csv.row({tokens[t],
                                   c1 ? rows[*c1]->info.stem : "none",
                                   c2 ? rows[*c2]->info.stem : "none"});
                }
            }
        }
        {
            Phases phases = detect_phases(series, cfg.phase_window);
            std::ofstream out(adir / ("phases" + tag + ".txt"));
            out << "formation_end = "
                << (phases.formation_end ? series[*phases.formation_end].checkpoint
                                         : "none")
                << "\n";
            out << "consolidation_end = "
                << (phases.consolidation_end
                        ? series[*phases.consolidation_end].checkpoint
                        : "none")
                << "\n";
            out << "phase_window = " << cfg.phase_window << "\n";
        }
        if (cfg.plot_data) {
            CsvWriter long_csv(adir / ("plot_long" + tag + ".csv"),
                               "metric,checkpoint,fraction,key,value");
            for (const auto* r : rows) {
                const auto& p = r->probe_row;
                long_csv.row({"probe_acc", p.checkpoint, fmt_double(p.fraction),
                              "full", fmt_double(p.acc_full)});
                long_csv.row({"probe_acc", p.checkpoint, fmt_double(p.fraction),
                              "unit_only", fmt_double(p.acc_unit_only)});
                long_csv.row({"probe_acc", p.checkpoint, fmt_double(p.fraction),
                              "unit_removed", fmt_double(p.acc_unit_removed)});
                if (r->bias_ok) {
                    long_csv.row({"mean_abs_bias", p.checkpoint,
                                  fmt_double(p.fraction), "ie",
                                  fmt_double(r->mean_abs_ie)});
                    if (setup.has_templates)
                        long_csv.row({"mean_abs_bias", p.checkpoint,
                                      fmt_double(p.fraction), "stsb",
                                      fmt_double(r->mean_abs_stsb)});
                    for (const auto& cell : r->correlations)
                        if (cell.r)
                            long_csv.row({"correlation", p.checkpoint,
                                          fmt_double(p.fraction), cell.feature,
                                          fmt_double(*cell.r)});
                }
            }
        }
    }
    std::cout << "analyze: wrote analysis for " << checkpoints.size()
              << " checkpoints to " << adir.string() << "\n";
}

// ---------------------------------------------------------------------------
// debias

inline void run_debias(const RunConfig& cfg) {
    const fs::path ckpt_dir = cfg.checkpoints.empty()
                                  ? fs::path(cfg.out_dir) / "checkpoints"
                                  : fs::path(cfg.checkpoints);
    auto checkpoints = list_checkpoints(ckpt_dir);
    if (checkpoints.empty())
        throw ConfigError("no checkpoints found in " + ckpt_dir.string());

    AnalysisSetup setup = analysis_setup(cfg, false);
    if (!setup.has_templates)
        throw ConfigError("debias needs a template set and man/woman in vocabulary");

    std::vector<TokenId> eval_ids;
    if (!cfg.eval_corpus.empty()) {
        eval_ids = setup.vocab.encode(tokenize(read_file(cfg.eval_corpus)));
    } else {
        CorpusTokens tokens = load_corpus_tokens(cfg);
        eval_ids = setup.vocab.encode(tokens.valid_tokens);
    }
    if (eval_ids.size() < 2) throw DataError("debias evaluation stream is empty");

    std::vector<CheckpointInfo> selected;
    if (cfg.debias_checkpoints.empty()) {
        // Default: first-epoch-end and final checkpoint per seed.
        std::set<std::uint64_t> seeds;
        for (const auto& info : checkpoints) seeds.insert(info.seed);
        for (std::uint64_t seed : seeds) {
            const CheckpointInfo* first_epoch_end = nullptr;
            const CheckpointInfo* final_ckpt = nullptr;
            for (const auto& info : checkpoints) {
                if (info.seed != seed) continue;
                if (info.epoch == 1 && info.fraction == 1.0 && !first_epoch_end)
                    first_epoch_end = &info;
                final_ckpt = &info;
            }
            if (first_epoch_end) selected.push_back(*first_epoch_end);
            if (final_ckpt &&
                (!first_epoch_end || final_ckpt->stem != first_epoch_end->stem))
                selected.push_back(*final_ckpt);
        }
    } else {
        for (const auto& stem : cfg.debias_checkpoints) {
            auto it = std::find_if(checkpoints.begin(), checkpoints.end(),
                                   [&](const CheckpointInfo& i) { return i.stem == stem; });
            if (it == checkpoints.end()) {
                std::string msg = "checkpoint not found: " + stem + "; available:";
                for (const auto& info : checkpoints) msg += " " + info.stem;
                throw ConfigError(msg);
            }
            selected.push_back(*it);
        }
    }

    const fs::path adir = fs::path(cfg.out_dir) / "analysis";
    fs::create_directories(adir);
    for (const auto& info : selected) {
        Checkpoint ckpt = load_checkpoint(info.path.string());
        InlpReport report = debias_sweep(ckpt.state, setup.vocab, setup.words,
                                         setup.templates, eval_ids, cfg.k_max);
        CsvWriter csv(adir / ("inlp_" + info.stem + ".csv"),
                      "k,clf_acc,mean_abs_stsb,stsb_female_list,stsb_male_list,"
                      "mean_abs_ie,ie_female_list,ie_male_list,rsa,ppl_norm");
        for (const auto& row : report.rows)
            csv.row({std::to_string(row.k), fmt_double(row.clf_acc),
                     fmt_double(row.mean_abs_stsb), fmt_double(row.stsb_female_list),
                     fmt_double(row.stsb_male_list), fmt_double(row.mean_abs_ie),
                     fmt_double(row.ie_female_list), fmt_double(row.ie_male_list),
                     row.rsa_to_original ? fmt_double(*row.rsa_to_original) : "nan",
                     fmt_double(row.ppl_norm)});
        std::cout << "debias: " << info.stem << ": " << report.rows.size()
                  << " rows";
        if (report.stopped_early) std::cout << " (" << report.stop_reason << ")";
        std::cout << "\n";
    }
}

// ---------------------------------------------------------------------------
// report

inline void run_report(const RunConfig& cfg) {
    const fs::path adir = fs::path(cfg.out_dir) / "analysis";
    if (!fs::is_directory(adir))
        throw ConfigError("no analysis directory under " + cfg.out_dir +
                          "; run analyze first");
    std::ostringstream report;

    for (const auto& entry : fs::directory_iterator(adir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("probe_series", 0) == 0) {
            std::ifstream in(entry.path());
            std::string line, last;
            std::getline(in, line);  // header
            while (std::getline(in, line))
                if (!line.empty()) last = line;
            report << name << ": final row: " << last << "\n";
        } else if (name.rfind("phases", 0) == 0) {
            std::ifstream in(entry.path());
            std::string line;
            report << name << ":\n";
            while (std::getline(in, line)) report << "  " << line << "\n";
        } else if (name.rfind("inlp_", 0) == 0) {
            std::ifstream in(entry.path());
            std::string line;
            std::getline(in, line);
            double base = -1.0;
            std::string best;
            while (std::getline(in, line)) {
                std::vector<std::string> f;
                std::size_t pos = 0;
                while (pos <= line.size()) {
                    auto comma = line.find(',', pos);
                    if (comma == std::string::npos) comma = line.size();
                    f.push_back(line.substr(pos, comma - pos));
                    pos = comma + 1;
                }
                if (f.size() < 10) continue;
                double mean_abs_stsb = std::strtod(f[2].c_str(), nullptr);
                double rsa_v = std::strtod(f[8].c_str(), nullptr);
                double ppl = std::strtod(f[9].c_str(), nullptr);
                if (f[0] == "0") base = mean_abs_stsb;
                if (base > 0 && mean_abs_stsb <= 0.5 * base && ppl <= 1.25 &&
                    rsa_v >= 0.8 && best.empty())
                    best = f[0];
            }
            report << name << ": first k meeting the half-bias / ppl<=1.25 / "
                   << "rsa>=0.8 criteria: " << (best.empty() ? "none" : best) << "\n";
        }
    }

    std::ofstream out(fs::path(cfg.out_dir) / "report.txt");
    out << report.str();
    std::cout << report.str();
}

}  // namespace bblm

#endif
