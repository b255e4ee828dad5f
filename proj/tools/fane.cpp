#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fane/config.hpp"
#include "fane/corpus.hpp"
#include "fane/fine_grained.hpp"
#include "fane/gradcheck.hpp"
#include "fane/semantic_division.hpp"
#include "fane/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

// Exit codes: 0 success, 1 internal error, 2 usage/config error, 3 verification failure.
namespace {

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kUsage = 2;
constexpr int kVerification = 3;

fane::Config load_cfg(const std::string& path) {
    fane::Config cfg = path.empty() ? fane::Config{} : fane::load_config(path);
    if (const char* env = std::getenv("FANE_SEED")) {
        const uint64_t seed = std::strtoull(env, nullptr, 10);
        cfg.corpus.seed = seed;
        cfg.hp.seed = seed;
    }
    return cfg;
}

void write_csv(const std::string& path, const fane::Mat& m) {
    std::ofstream os(path);
    char buf[64];
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", m(i, j));
            os << buf << (j + 1 < m.cols ? "," : "");
        }
        os << "\n";
    }
}

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
    const fane::Config cfg = load_cfg(config_path);
    const fane::Corpus corpus = fane::generate(cfg.corpus);
    fane::save_corpus(corpus, out_dir);
    std::cout << json{{"samples", cfg.corpus.n_samples}, {"out", out_dir}}.dump() << "\n";
    return kOk;
}

struct TrainOverrides {
    double kappa = -1, lambda3 = -1, lr = -1;
    int epochs = -1, batch = -1, holdout = -1;
    long long seed = -1;
    bool eq6_literal = false;
};

int cmd_train(const std::string& config_path, const std::string& corpus_dir, const std::string& out_dir,
              const TrainOverrides& ov) {
    fane::Config cfg = load_cfg(config_path);
    if (ov.kappa >= 0) cfg.hp.kappa = ov.kappa;
    if (ov.lambda3 >= 0) cfg.hp.lambda3 = ov.lambda3;
    if (ov.lr > 0) cfg.hp.lr_init = ov.lr;
    if (ov.epochs >= 0) cfg.hp.epochs = ov.epochs;
    if (ov.batch >= 0) cfg.hp.batch = ov.batch;
    if (ov.holdout >= 0) cfg.hp.holdout = ov.holdout;
    if (ov.seed >= 0) cfg.hp.seed = static_cast<uint64_t>(ov.seed);
    if (ov.eq6_literal) cfg.hp.eq6_literal = true;

    const fane::Corpus corpus = fane::load_corpus(corpus_dir);
    const fane::TrainResult result = fane::train(corpus, cfg.hp, out_dir);
    const fane::EpochMetrics& last = result.history.back();
    std::cout << json{{"epochs", cfg.hp.epochs},
                      {"final_total", last.mean.total},
                      {"checkpoint", (fs::path(out_dir) / "checkpoint").string()},
                      {"metrics", (fs::path(out_dir) / "metrics.jsonl").string()}}
                     .dump()
              << "\n";
    return kOk;
}

int cmd_gradcheck(const std::string& config_path, int probes, int batch, bool corrupt) {
    const fane::Config cfg = load_cfg(config_path);
    const auto reports = fane::run_gradcheck_suite(cfg.hp, batch, probes, cfg.hp.seed, corrupt);
    constexpr double kTol = 1e-3;
    bool ok = true;
    std::printf("%-8s %12s %12s %8s %s\n", "loss", "max_rel_err", "max_abs_err", "probes", "status");
    for (const fane::GradCheckReport& r : reports) {
        const bool pass = r.max_rel_err < kTol;
        ok = ok && pass;
        std::printf("%-8s %12.3e %12.3e %8d %s\n", r.op_name.c_str(), r.max_rel_err, r.max_abs_err,
                    r.probe_count, pass ? "pass" : "FAIL");
    }
    return ok ? kOk : kVerification;
}

int cmd_eval(const std::string& checkpoint_dir, const std::string& corpus_dir, int holdout, int k) {
    if (!fs::exists(fs::path(checkpoint_dir) / "manifest.json")) {
        std::cerr << "checkpoint not found: " << checkpoint_dir << "\n";
        return kUsage;
    }
    const fane::Checkpoint ck = fane::load_checkpoint(checkpoint_dir);
    const fane::Corpus corpus = fane::load_corpus(corpus_dir);
    const fane::RetrievalReport rep = fane::evaluate(ck.params, corpus, holdout, k);
    std::cout << json{{"pool", rep.pool},
                      {"k", k},
                      {"strict_i2t", rep.strict_i2t},
                      {"strict_t2i", rep.strict_t2i},
                      {"group_i2t", rep.group_i2t},
                      {"group_t2i", rep.group_t2i}}
                     .dump()
              << "\n";
    return kOk;
}

int cmd_attn(const std::string& checkpoint_dir, const std::string& corpus_dir, int sample_id,
             const std::string& out_dir, int upscale, const std::string& source) {
    if (!fs::exists(fs::path(checkpoint_dir) / "manifest.json")) {
        std::cerr << "checkpoint not found: " << checkpoint_dir << "\n";
        return kUsage;
    }
    const fane::Checkpoint ck = fane::load_checkpoint(checkpoint_dir);
    const fane::Corpus corpus = fane::load_corpus(corpus_dir);
    if (sample_id < 0 || sample_id >= static_cast<int>(corpus.samples.size())) {
        std::cerr << "sample id out of range\n";
        return kUsage;
    }
    const fane::Sample& s = corpus.samples[sample_id];
    fs::create_directories(out_dir);

    fane::ad::Tape tape;
    const fane::ParamVars pv = fane::register_params(tape, ck.params);
    const fane::ImageFeatures im = fane::encode_image(tape, s.patch_inputs, pv, ck.params.dims);
    const fane::ReportFeatures rep = fane::encode_report(tape, s.sentence_inputs, pv, ck.params.dims);

    json files = json::array();
    for (size_t u = 0; u < rep.t_l_rows.size(); ++u) {
        const fane::ad::Var m_u = fane::sparse_mask(tape, rep.t_l_rows[u], im.v_l, pv);
        fane::Mat map = tape.value(m_u);
        if (source == "attention") {
            // gated attention weights from the pooling mechanism
            const fane::ad::Var q = tape.matmul(rep.t_l_rows[u], pv.attn_wq);
            const fane::ad::Var kk = tape.matmul(im.v_l, pv.attn_wk);
            const double inv = 1.0 / std::sqrt(static_cast<double>(ck.params.dims.embed_dim));
            const fane::ad::Var logits = tape.scale(tape.matmul_nt(q, kk), inv);
            map = tape.value(tape.sigmoid(tape.mul(logits, m_u)));
        }
        char name[64];
        std::snprintf(name, sizeof(name), "attn_%d_%d.pgm", sample_id, static_cast<int>(u));
        const std::string path = (fs::path(out_dir) / name).string();
        fane::export_attention(map, corpus.spec.grid_side, upscale, path);
        files.push_back(path);
    }
    std::cout << json{{"sample", sample_id}, {"files", files}}.dump() << "\n";
    return kOk;
}

int cmd_dump_h(const std::string& config_path, const std::string& corpus_dir, const std::string& out_dir,
               int batch_size) {
    const fane::Config cfg = load_cfg(config_path);
    const fane::Corpus corpus = fane::load_corpus(corpus_dir);
    const int n = static_cast<int>(corpus.samples.size());
    const int b = batch_size > 0 ? std::min(batch_size, n) : n;
    fane::Mat knowledge(b, corpus.knowledge.cols);
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < corpus.knowledge.cols; ++j) knowledge(i, j) = corpus.knowledge(i, j);
    double ema = 0.0;
    const fane::SimilarityState st = fane::divide(knowledge, cfg.hp.division(), ema, 0);
    fs::create_directories(out_dir);
    write_csv((fs::path(out_dir) / "S.csv").string(), st.S);
    write_csv((fs::path(out_dir) / "S_tilde.csv").string(), st.S_tilde);
    write_csv((fs::path(out_dir) / "H.csv").string(), st.H);
    std::cout << json{{"rows", b}, {"o_star", st.base_sim_ema}, {"out", out_dir}}.dump() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FaNe alignment objective toolkit"};
    app.require_subcommand(1);

    std::string config_path, corpus_dir, out_dir, checkpoint_dir, source = "gates";
    int probes = 200, gc_batch = 6, k = 1, holdout = 60, sample_id = 0, upscale = 16, batch_size = 0;
    bool corrupt = false;
    TrainOverrides ov;

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic corpus");
    gen->add_option("--config", config_path);
    gen->add_option("--out", out_dir)->required();

    CLI::App* train = app.add_subcommand("train", "train the objective stack");
    train->add_option("--config", config_path);
    train->add_option("--corpus", corpus_dir)->required();
    train->add_option("--out", out_dir)->required();
    train->add_option("--kappa", ov.kappa);
    train->add_option("--lambda3", ov.lambda3);
    train->add_option("--lr", ov.lr);
    train->add_option("--epochs", ov.epochs);
    train->add_option("--batch", ov.batch);
    train->add_option("--holdout", ov.holdout);
    train->add_option("--seed", ov.seed);
    train->add_flag("--eq6-literal", ov.eq6_literal);

    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc->add_option("--config", config_path);
    gc->add_option("--probes", probes);
    gc->add_option("--batch", gc_batch);
    gc->add_flag("--corrupt", corrupt, "corrupt the analytic gradient (negative control)");

    CLI::App* ev = app.add_subcommand("eval", "retrieval evaluation on the held-out split");
    ev->add_option("--checkpoint", checkpoint_dir)->required();
    ev->add_option("--corpus", corpus_dir)->required();
    ev->add_option("--holdout", holdout);
    ev->add_option("--k", k);

    CLI::App* attn = app.add_subcommand("attn", "export attention/gate maps as PGM");
    attn->add_option("--checkpoint", checkpoint_dir)->required();
    attn->add_option("--corpus", corpus_dir)->required();
    attn->add_option("--sample", sample_id)->required();
    attn->add_option("--out", out_dir)->required();
    attn->add_option("--upscale", upscale);
    attn->add_option("--source", source)->check(CLI::IsMember({"gates", "attention"}));

    CLI::App* dump = app.add_subcommand("dump-h", "dump S, S~, H as CSV");
    dump->add_option("--config", config_path);
    dump->add_option("--corpus", corpus_dir)->required();
    dump->add_option("--out", out_dir)->required();
    dump->add_option("--batch-size", batch_size);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen(config_path, out_dir);
        if (train->parsed()) return cmd_train(config_path, corpus_dir, out_dir, ov);
        if (gc->parsed()) return cmd_gradcheck(config_path, probes, gc_batch, corrupt);
        if (ev->parsed()) return cmd_eval(checkpoint_dir, corpus_dir, holdout, k);
        if (attn->parsed()) return cmd_attn(checkpoint_dir, corpus_dir, sample_id, out_dir, upscale, source);
        if (dump->parsed()) return cmd_dump_h(config_path, corpus_dir, out_dir, batch_size);
    } catch (const fane::InvalidSpec& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const fane::NotSquareGrid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}
