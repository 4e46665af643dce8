// Acceptance suite: runs every shipping criterion end to end on CPU and
// prints one PASS/FAIL line per criterion. Returns nonzero if any fail.
//
// The heavy pipeline (P4) trains the default desk-scale model on a ~1M
// token planted-bias corpus; P5-P8 reuse that model.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bblm/pipeline.hpp"

using namespace bblm;
namespace fs = std::filesystem;

namespace {

const std::string kData = BBLM_DATA_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------- P1

Outcome p1_gradient_correctness() {
    ModelConfig cfg;
    cfg.vocab_size = 16;
    cfg.embedding_dim = 8;
    cfg.hidden_dim = 8;
    cfg.num_layers = 2;
    cfg.dropout_rate = 0.0;
    cfg.bptt_window = 4;
    cfg.batch_size = 2;
    cfg.epochs = 1;
    cfg.seed = 9;
    ModelState m = init_model(cfg);

    std::vector<std::vector<TokenId>> inputs = {{0, 5}, {9, 12}, {3, 15}, {7, 2}};
    std::vector<std::vector<TokenId>> targets = {{9, 12}, {3, 15}, {7, 2}, {1, 11}};
    Hidden init = zero_hidden(cfg, 2);

    Gradients grads = Gradients::zero(cfg);
    compute_gradients(m, inputs, targets, init, false, grads, nullptr);

    std::vector<double*> ptrs;
    auto add_ptrs = [&](MatrixXd& mat) {
        for (Eigen::Index r = 0; r < mat.rows(); ++r)
            for (Eigen::Index c = 0; c < mat.cols(); ++c) ptrs.push_back(&mat(r, c));
    };
    add_ptrs(m.embedding);
    for (auto& l : m.layers) {
        add_ptrs(l.w_in);
        add_ptrs(l.w_rec);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) ptrs.push_back(&l.bias(i));
    }
    for (Eigen::Index i = 0; i < m.out_bias.size(); ++i) ptrs.push_back(&m.out_bias(i));

    std::vector<double> analytic;
    auto add_vals = [&](const MatrixXd& mat) {
        for (Eigen::Index r = 0; r < mat.rows(); ++r)
            for (Eigen::Index c = 0; c < mat.cols(); ++c) analytic.push_back(mat(r, c));
    };
    add_vals(grads.embedding);
    for (int l = 0; l < cfg.num_layers; ++l) {
        add_vals(grads.layers[l].w_in);
        add_vals(grads.layers[l].w_rec);
        for (Eigen::Index i = 0; i < grads.layers[l].bias.size(); ++i)
            analytic.push_back(grads.layers[l].bias(i));
    }
    for (Eigen::Index i = 0; i < grads.out_bias.size(); ++i)
        analytic.push_back(grads.out_bias(i));

    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t i = 0; i < ptrs.size(); ++i) {
        const double orig = *ptrs[i];
        Gradients scratch = Gradients::zero(cfg);
        *ptrs[i] = orig + h;
        double up = compute_gradients(m, inputs, targets, init, false, scratch, nullptr);
        scratch = Gradients::zero(cfg);
        *ptrs[i] = orig - h;
        double down =
            compute_gradients(m, inputs, targets, init, false, scratch, nullptr);
        *ptrs[i] = orig;
        double numeric = (up - down) / (2.0 * h);
        // Relative error with a floor: vanishing gradients are held to
        // 1e-8 absolute agreement.
        double err = std::abs(analytic[i] - numeric) /
                     std::max({std::abs(analytic[i]), std::abs(numeric), 1e-4});
        worst = std::max(worst, err);
    }
    return {worst < 1e-4,
            "worst relative gradient error " + fmt(worst) + " over " +
                std::to_string(ptrs.size()) + " parameters (tolerance 1e-4)"};
}

// ---------------------------------------------------------------- P2

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome p2_determinism_persistence() {
    fs::path root = fs::temp_directory_path() / "bblm_accept_p2";
    fs::remove_all(root);

    RunConfig synth;
    synth.out_dir = (root / "corpus").string();
    synth.wordlists_dir = kData + "/wordlists";
    synth.synth_tokens = 60000;
    synth.seeds = {11};
    run_synth(synth);

    auto train_once = [&](const std::string& name) {
        RunConfig cfg;
        cfg.corpus = (root / "corpus" / "corpus.txt").string();
        cfg.out_dir = (root / name).string();
        cfg.seeds = {11};
        cfg.schedule = "dense";
        cfg.vocab_max = 2000;
        cfg.model.embedding_dim = 16;
        cfg.model.hidden_dim = 24;
        cfg.model.num_layers = 2;
        cfg.model.dropout_rate = 0.1;
        cfg.model.batch_size = 16;
        cfg.model.base_lr = 5.0;
        cfg.model.epochs = 2;
        run_train(cfg);
        return cfg.out_dir;
    };
    std::string a = train_once("a");
    std::string b = train_once("b");

    std::string log_a = slurp(fs::path(a) / "train_log_seed11.csv");
    std::string log_b = slurp(fs::path(b) / "train_log_seed11.csv");
    if (log_a != log_b || log_a.empty())
        return {false, "training logs differ between identical runs"};

    auto ckpts_a = list_checkpoints(fs::path(a) / "checkpoints");
    auto ckpts_b = list_checkpoints(fs::path(b) / "checkpoints");
    if (ckpts_a.size() != ckpts_b.size() || ckpts_a.empty())
        return {false, "checkpoint sets differ in size"};
    for (std::size_t i = 0; i < ckpts_a.size(); ++i)
        if (slurp(ckpts_a[i].path) != slurp(ckpts_b[i].path))
            return {false, "checkpoint bytes differ: " + ckpts_a[i].stem};

    // save -> load -> save reproduces the file bit for bit.
    Checkpoint loaded = load_checkpoint(ckpts_a.back().path.string());
    fs::path resaved = root / "resaved.ckpt";
    save_checkpoint(loaded, resaved.string());
    if (slurp(resaved) != slurp(ckpts_a.back().path))
        return {false, "checkpoint save->load->save is not bit-exact"};

    return {true, std::to_string(ckpts_a.size()) +
                      " checkpoints and the loss log are bit-identical across "
                      "runs; save->load round-trips bit-exactly"};
}

// ---------------------------------------------------------------- P3

CooccurrenceTable brute_force_counts(const std::vector<TokenId>& corpus,
                                     const std::set<TokenId>& targets,
                                     const std::set<TokenId>& contexts, int window) {
    CooccurrenceTable table;
    table.window = window;
    for (std::size_t i = 0; i < corpus.size(); ++i) table.totals[corpus[i]]++;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (std::size_t j = i + 1; j < corpus.size() && j <= i + window - 1; ++j) {
            TokenId u = corpus[i], v = corpus[j];
            if (targets.count(u) && contexts.count(v)) table.pair_counts[{u, v}]++;
            if (u != v && targets.count(v) && contexts.count(u))
                table.pair_counts[{v, u}]++;
        }
    }
    return table;
}

Outcome p3_pmi_oracle() {
    Rng rng(314);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t len = 1000 + rng.uniform_int(9000);
        int n_types = 5 + static_cast<int>(rng.uniform_int(60));
        int window = 1 + static_cast<int>(rng.uniform_int(35));
        std::vector<TokenId> corpus(len);
        for (auto& id : corpus) id = static_cast<TokenId>(rng.uniform_int(n_types));
        std::set<TokenId> targets, contexts;
        for (int k = 0; k < n_types; ++k) {
            if (rng.bernoulli(0.3)) targets.insert(k);
            if (rng.bernoulli(0.3)) contexts.insert(k);
        }
        auto fast = cooccurrence_counts(corpus, targets, contexts, window);
        auto slow = brute_force_counts(corpus, targets, contexts, window);
        if (fast.pair_counts != slow.pair_counts)
            return {false, "pair counts diverge from brute force on trial " +
                               std::to_string(trial)};
        for (const auto& [id, c] : slow.totals)
            if (fast.total(id) != c)
                return {false, "totals diverge from brute force on trial " +
                                   std::to_string(trial)};
    }

    // Three fixed micro-corpora with hand-computed PMI values.
    {
        auto tokens = tokenize("she is a nurse\nhe is a plumber");
        auto vocab = Vocabulary::build(tokens, 100);
        auto ids = vocab.encode(tokens);
        auto t = cooccurrence_counts(ids, {vocab.id("nurse")}, {vocab.id("she")}, 35);
        auto v = pmi(t, vocab.id("nurse"), {vocab.id("she")});
        if (!v || std::abs(*v - 0.0) > 1e-12)
            return {false, "micro corpus 1: expected PMI 0"};
    }
    {
        // [a a b], window 2: c(a,b)=1, c(a)=2, c(b)=1 -> log(1/2).
        std::vector<TokenId> ids = {0, 0, 1};
        auto t = cooccurrence_counts(ids, {0}, {1}, 2);
        auto v = pmi(t, 0, {1});
        if (!v || std::abs(*v - std::log(0.5)) > 1e-12)
            return {false, "micro corpus 2: expected log(1/2)"};
    }
    {
        // [a b a c a], window 2, Y={b,c}: c(a,Y)=4, c(a)=3, c(Y)=2 -> log(2/3).
        std::vector<TokenId> ids = {0, 1, 0, 2, 0};
        auto t = cooccurrence_counts(ids, {0}, {1, 2}, 2);
        auto v = pmi(t, 0, {1, 2});
        if (!v || std::abs(*v - std::log(2.0 / 3.0)) > 1e-12)
            return {false, "micro corpus 3: expected log(2/3)"};
    }
    return {true,
            "20 random corpora match brute force exactly; 3 micro-corpus PMI "
            "values match hand computation to 1e-12"};
}

// ------------------------------------------- P4 + shared pipeline state

struct PipelineState {
    bool trained = false;
    std::string error;
    Vocabulary vocab;
    ModelState model;  // final checkpoint
    ResolvedWordLists words;
    TemplateSet templates;
    std::map<std::string, double> planted_rho;
    std::vector<TokenId> eval_ids;
    double train_seconds = 0.0;
};

PipelineState g_pipeline;

void run_p4_pipeline() {
    auto t0 = std::chrono::steady_clock::now();

    SynthSpec spec;
    spec.occupations = kDefaultSynthPlan;
    WordLists lists = load_wordlists(kData + "/wordlists");
    spec.pairs = lists.gendered_pairs;
    spec.target_tokens = 1'000'000;
    SynthCorpus corpus = generate_synthetic_corpus(spec, 7);
    for (const auto& row : corpus.manifest)
        g_pipeline.planted_rho[row.occupation] = row.planted_rho;

    std::vector<std::string> tokens;
    for (const auto& line : corpus.lines) {
        auto t = tokenize(line);
        tokens.insert(tokens.end(), t.begin(), t.end());
    }
    std::size_t n_train = tokens.size() * 95 / 100;
    std::vector<std::string> train_tokens(tokens.begin(), tokens.begin() + n_train);
    std::vector<std::string> valid_tokens(tokens.begin() + n_train, tokens.end());

    g_pipeline.vocab = Vocabulary::build(train_tokens, 2000);
    auto train_ids = g_pipeline.vocab.encode(train_tokens);
    auto valid_ids = g_pipeline.vocab.encode(valid_tokens);

    ModelConfig cfg;  // desk-scale defaults
    cfg.vocab_size = static_cast<int>(g_pipeline.vocab.size());
    cfg.embedding_dim = 64;
    cfg.hidden_dim = 128;
    cfg.num_layers = 2;
    cfg.dropout_rate = 0.1;
    cfg.bptt_window = 35;
    cfg.batch_size = 32;
    cfg.base_lr = 20.0;
    cfg.lr_decay_factor = 0.25;
    cfg.grad_clip = 0.25;
    cfg.epochs = 3;
    cfg.seed = 7;
    g_pipeline.model = init_model(cfg);
    train(g_pipeline.model, train_ids, valid_ids, ScheduleKind::EpochEnd, {});

    g_pipeline.words = resolve(lists, g_pipeline.vocab);
    g_pipeline.templates = builtin_templates();
    g_pipeline.eval_ids.assign(valid_ids.begin(),
                               valid_ids.begin() +
                                   std::min<std::size_t>(valid_ids.size(), 20000));
    g_pipeline.trained = true;
    g_pipeline.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Bias snapshot of the trained model, cached for P4/P6.
std::optional<BiasSnapshot> g_snapshot;

const BiasSnapshot& pipeline_snapshot() {
    if (!g_snapshot)
        g_snapshot = bias_snapshot(g_pipeline.model, g_pipeline.vocab,
                                   g_pipeline.words, &g_pipeline.templates);
    return *g_snapshot;
}

Outcome p4_planted_bias_recovery() {
    if (!g_pipeline.trained) return {false, "pipeline failed: " + g_pipeline.error};
    const BiasSnapshot& snap = pipeline_snapshot();

    std::vector<double> ie, male_rate;
    int sign_ok = 0, sign_total = 0;
    for (const auto& row : snap.rows) {
        double rho = g_pipeline.planted_rho.at(row.word);
        ie.push_back(row.bias_ie);
        male_rate.push_back(1.0 - rho);
        if (std::abs(rho - 0.5) >= 0.3) {
            ++sign_total;
            if ((row.bias_ie > 0.0) == (rho < 0.5)) ++sign_ok;
        }
    }
    auto r = pearson(ie, male_rate);
    if (!r) return {false, "correlation undefined"};
    double agreement = sign_total > 0 ? static_cast<double>(sign_ok) / sign_total : 0.0;
    bool pass = *r >= 0.5 && agreement >= 0.8;
    return {pass, "Pearson(ie_bias, planted male rate) = " + fmt(*r) +
                      " (need >= 0.5); sign agreement " + std::to_string(sign_ok) +
                      "/" + std::to_string(sign_total) + " = " + fmt(agreement) +
                      " (need >= 0.8); training took " +
                      fmt(g_pipeline.train_seconds / 60.0) + " min"};
}

// ---------------------------------------------------------------- P5

Outcome p5_probe_behaviour() {
    if (!g_pipeline.trained) return {false, "pipeline failed: " + g_pipeline.error};

    std::vector<VectorPair> pairs;
    for (const auto& [m_id, f_id] : g_pipeline.words.pair_ids) {
        VectorPair p;
        p.male = g_pipeline.model.embedding.row(m_id);
        p.female = g_pipeline.model.embedding.row(f_id);
        pairs.push_back(std::move(p));
    }
    LinearProbe full = fit_probe(pairs, 1.0, 1234);
    bool model_ok = full.test_accuracy >= 0.90;

    // Planted-signal construction: one axis carries all label signal.
    Rng rng(42);
    std::vector<VectorPair> planted;
    for (int i = 0; i < 200; ++i) {
        VectorPair p;
        p.male.resize(8);
        p.female.resize(8);
        for (int j = 0; j < 8; ++j) {
            p.male(j) = rng.uniform(-0.2, 0.2);
            p.female(j) = rng.uniform(-0.2, 0.2);
        }
        p.male(3) += 1.0;
        p.female(3) -= 1.0;
        planted.push_back(std::move(p));
    }
    ProbeVariants v = probe_variants(planted, 3, 1.0, 99);
    bool planted_ok = v.unit_only.test_accuracy >= 0.95 &&
                      v.unit_removed.test_accuracy >= 0.35 &&
                      v.unit_removed.test_accuracy <= 0.65;

    return {model_ok && planted_ok,
            "trained-model pair probe held-out accuracy " + fmt(full.test_accuracy) +
                " (need >= 0.90); planted-signal unit-only " +
                fmt(v.unit_only.test_accuracy) + " (need >= 0.95), unit-removed " +
                fmt(v.unit_removed.test_accuracy) + " (need in [0.35, 0.65])"};
}

// ---------------------------------------------------------------- P6

Outcome p6_cross_metric_coupling() {
    if (!g_pipeline.trained) return {false, "pipeline failed: " + g_pipeline.error};
    const BiasSnapshot& snap = pipeline_snapshot();
    std::vector<std::pair<double, double>> both;
    for (const auto& row : snap.rows) both.emplace_back(row.bias_ie, row.bias_stsb);
    auto r = cross_metric_correlation(both);
    if (!r) return {false, "cross-metric correlation undefined"};
    return {*r >= 0.5, "Pearson(ie_bias, stsb_bias) across " +
                           std::to_string(both.size()) + " occupations = " + fmt(*r) +
                           " (need >= 0.5)"};
}

// ---------------------------------------------------------------- P7

Outcome p7_inlp_properties() {
    // Projector algebra on random unit directions.
    Rng rng(55);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd g(16);
        for (int i = 0; i < 16; ++i) g(i) = rng.uniform(-1, 1);
        g.normalize();
        Eigen::MatrixXd p = nullspace_projection(g);
        if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10)
            return {false, "projector is not idempotent within 1e-10"};
        if ((p * g).cwiseAbs().maxCoeff() > 1e-10)
            return {false, "projector does not annihilate its direction within 1e-10"};
    }

    // Composed projector rank d-k for independent (orthonormal) steps.
    const int d = 12, k = 5;
    Eigen::MatrixXd basis(d, k);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < k; ++c) basis(r, c) = rng.uniform(-1, 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
    Eigen::MatrixXd composed = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < k; ++i) composed = composed * nullspace_projection(q.col(i));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(composed);
    int ones = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        double ev = es.eigenvalues()(i);
        if (std::abs(ev - 1.0) <= 1e-8) ++ones;
        else if (std::abs(ev) > 1e-8)
            return {false, "composed projector has an eigenvalue away from {0,1}"};
    }
    if (ones != d - k)
        return {false, "composed projector rank " + std::to_string(ones) +
                           ", expected " + std::to_string(d - k)};

    if (!g_pipeline.trained) return {false, "pipeline failed: " + g_pipeline.error};
    std::vector<TokenId> male_ids, female_ids;
    for (const auto& [m_id, f_id] : g_pipeline.words.seed_pair_ids) {
        male_ids.push_back(m_id);
        female_ids.push_back(f_id);
    }
    InlpResult chain = inlp(g_pipeline.model.embedding, male_ids, female_ids, 10);
    if (chain.steps.empty())
        return {false, "INLP produced no steps on the trained model"};
    double final_acc = chain.steps.back().classifier_accuracy;
    return {final_acc <= 0.60,
            "k_max=10 INLP on the trained model: " +
                std::to_string(chain.steps.size()) +
                " steps, final seed-classifier accuracy " + fmt(final_acc) +
                " (need <= 0.60); projector algebra and rank checks passed"};
}

// ---------------------------------------------------------------- P8

Outcome p8_sweet_spot() {
    if (!g_pipeline.trained) return {false, "pipeline failed: " + g_pipeline.error};
    InlpReport report =
        debias_sweep(g_pipeline.model, g_pipeline.vocab, g_pipeline.words,
                     g_pipeline.templates, g_pipeline.eval_ids, 10);
    if (report.rows.empty()) return {false, "empty sweep"};
    double base = report.rows[0].mean_abs_stsb;
    for (const auto& row : report.rows) {
        if (row.k == 0 || row.k > 5) continue;
        bool bias_halved = row.mean_abs_stsb <= 0.5 * base;
        bool ppl_ok = row.ppl_norm <= 1.25;
        bool rsa_ok = row.rsa_to_original && *row.rsa_to_original >= 0.8;
        if (bias_halved && ppl_ok && rsa_ok)
            return {true, "k*=" + std::to_string(row.k) + ": mean |stsb| " +
                              fmt(row.mean_abs_stsb) + " vs " + fmt(base) +
                              " at k=0, ppl_norm " + fmt(row.ppl_norm) + ", rsa " +
                              fmt(*row.rsa_to_original)};
    }
    std::string detail = "no k <= 5 met the criteria; rows:";
    for (const auto& row : report.rows)
        detail += " [k=" + std::to_string(row.k) + " |stsb|=" + fmt(row.mean_abs_stsb) +
                  " ppl=" + fmt(row.ppl_norm) +
                  " rsa=" + (row.rsa_to_original ? fmt(*row.rsa_to_original) : "nan") +
                  "]";
    return {false, detail};
}

// ---------------------------------------------------------------- P9

Outcome p9_metric_identities() {
    // Perplexity of the zeroed-output model equals |V|.
    ModelConfig cfg;
    cfg.vocab_size = 50;
    cfg.embedding_dim = 8;
    cfg.hidden_dim = 8;
    cfg.num_layers = 2;
    cfg.dropout_rate = 0.0;
    cfg.seed = 3;
    ModelState m = init_model(cfg);
    m.embedding.setZero();
    std::vector<TokenId> stream;
    Rng rng(4);
    for (int i = 0; i < 500; ++i)
        stream.push_back(static_cast<TokenId>(rng.uniform_int(50)));
    double ppl = perplexity(m, stream);
    if (std::abs(ppl - 50.0) / 50.0 > 1e-6)
        return {false, "uniform-model perplexity " + fmt(ppl) + " != 50"};

    // RSA identities.
    Eigen::MatrixXd e(10, 6);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 6; ++c) e(r, c) = rng.uniform(-1, 1);
    std::vector<TokenId> words = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto self = rsa(e, e, words);
    if (!self || std::abs(*self - 1.0) > 1e-9)
        return {false, "RSA(E, E) != 1 within 1e-9"};
    Eigen::MatrixXd rnd(6, 6);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) rnd(r, c) = rng.uniform(-1, 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(rnd);
    Eigen::MatrixXd q = qr.householderQ();
    auto rotated = rsa(e, e * q, words);
    if (!rotated || std::abs(*rotated - 1.0) > 1e-9)
        return {false, "RSA(E, EQ) != 1 within 1e-9 for orthogonal Q"};

    // Pearson closed forms.
    if (std::abs(*pearson({1, 2, 3}, {2, 4, 6}) - 1.0) > 1e-12 ||
        std::abs(*pearson({1, 2, 3}, {3, 2, 1}) + 1.0) > 1e-12 ||
        std::abs(*pearson({1, 2, 3, 4}, {1, 3, 2, 4}) - 0.8) > 1e-12)
        return {false, "pearson closed-form values exceed 1e-12"};

    // STS-B is identically zero when the man/woman rows coincide.
    auto tokens = tokenize(
        "A man was holding the box .\nA woman was reading the book .\n"
        "A nurse was playing the guitar .");
    auto vocab = Vocabulary::build(tokens, 100);
    ModelConfig mc;
    mc.vocab_size = static_cast<int>(vocab.size());
    mc.embedding_dim = 8;
    mc.hidden_dim = 8;
    mc.num_layers = 2;
    mc.dropout_rate = 0.0;
    mc.seed = 12;
    ModelState lm = init_model(mc);
    lm.embedding.row(vocab.id("woman")) = lm.embedding.row(vocab.id("man"));
    TemplateSet t;
    t.templates = {"A {slot} was holding the box .", "A {slot} was reading the book ."};
    double s = stsb_bias(lm, vocab, "nurse", t);
    if (std::abs(s) > 1e-9)
        return {false, "stsb_bias with identical man/woman rows is " + fmt(s)};

    return {true,
            "uniform perplexity = |V| within 1e-6; RSA identities within 1e-9; "
            "pearson closed forms within 1e-12; degenerate STS-B = 0 within 1e-9"};
}

// ---------------------------------------------------------------- P10

Outcome p10_data_fidelity() {
    auto stats = load_labour_stats(kData + "/labour_stats.tsv");
    if (stats.at("nurse") != 89.58 || stats.at("plumber") != 0.70 ||
        stats.at("pathologist") != 97.50)
        return {false, "labour statistics spot values do not match"};
    auto lists = load_wordlists(kData + "/wordlists");
    if (lists.occupations.size() != 54)
        return {false, "expected 54 occupations, got " +
                           std::to_string(lists.occupations.size())};
    if (lists.seed_male.size() != 9 || lists.seed_female.size() != 9)
        return {false, "expected 9+9 seed words"};
    if (lists.gendered_pairs.size() != 82)
        return {false, "expected 82 gendered pairs, got " +
                           std::to_string(lists.gendered_pairs.size())};
    return {true,
            "labour stats (54 rows, spot values exact), 54 occupations, 9+9 "
            "seed words, 82 gendered pairs"};
}

}  // namespace

int main(int argc, char** argv) {
    std::string only;
    if (argc > 2 && std::string(argv[1]) == "--only") only = argv[2];

    std::vector<std::pair<std::string, std::function<Outcome()>>> fast = {
        {"P1", p1_gradient_correctness}, {"P2", p2_determinism_persistence},
        {"P3", p3_pmi_oracle},           {"P9", p9_metric_identities},
        {"P10", p10_data_fidelity},
    };
    std::vector<std::pair<std::string, std::function<Outcome()>>> heavy = {
        {"P4", p4_planted_bias_recovery}, {"P5", p5_probe_behaviour},
        {"P6", p6_cross_metric_coupling}, {"P7", p7_inlp_properties},
        {"P8", p8_sweet_spot},
    };

    std::map<std::string, Outcome> results;
    auto want = [&](const std::string& name) { return only.empty() || only == name; };

    for (auto& [name, fn] : fast) {
        if (!want(name)) continue;
        try {
            results[name] = fn();
        } catch (const std::exception& e) {
            results[name] = {false, std::string("exception: ") + e.what()};
        }
    }

    bool need_pipeline = false;
    for (auto& [name, fn] : heavy)
        if (want(name)) need_pipeline = true;
    if (need_pipeline) {
        try {
            std::cout << "running the planted-bias training pipeline (P4-P8)..."
                      << std::endl;
            run_p4_pipeline();
        } catch (const std::exception& e) {
            g_pipeline.error = e.what();
        }
        for (auto& [name, fn] : heavy) {
            if (!want(name)) continue;
            try {
                results[name] = fn();
            } catch (const std::exception& e) {
                results[name] = {false, std::string("exception: ") + e.what()};
            }
        }
    }

    int failures = 0;
    const std::vector<std::string> order = {"P1", "P2", "P3", "P4", "P5",
                                            "P6", "P7", "P8", "P9", "P10"};
    for (const std::string& name : order) {
        auto it = results.find(name);
        if (it == results.end()) continue;
        if (!it->second.pass) ++failures;
        std::cout << name << (it->second.pass ? " PASS" : " FAIL") << " - "
                  << it->second.detail << "\n";
    }
    std::cout << (failures == 0 ? "acceptance: all criteria passed"
                                : "acceptance: " + std::to_string(failures) +
                                      " criterion(s) failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
