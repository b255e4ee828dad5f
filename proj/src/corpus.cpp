#include "fane/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fane/rng.hpp"

namespace fane {

namespace {

// Desk-scale planting constants (not part of the corpus spec surface).
constexpr int kGroupSize = 3;        // samples per duplicate group
constexpr int kConceptsPerSample = 3;
constexpr double kSignalAmp = 3.0;    // planted concept amplitude in patches
constexpr double kPatchNoise = 0.1;   // background patch noise scale
constexpr double kInstanceAmp = 2.0;  // per-sentence instance direction amplitude
constexpr double kTokenNoise = 0.2;
constexpr int kTokensMin = 3;
constexpr int kTokensMax = 6;

void validate(const CorpusSpec& s) {
    if (s.n_samples < 1) throw InvalidSpec("n_samples must be >= 1");
    if (s.sentences_min < 4) throw InvalidSpec("sentences_min must be >= 4");
    if (s.sentences_max < s.sentences_min) throw InvalidSpec("sentences_max < sentences_min");
    if (s.grid_side * s.grid_side != s.patches) throw InvalidSpec("patches must equal grid_side^2");
    if (s.token_dim < 2) throw InvalidSpec("token_dim must be >= 2");
    if (s.n_concepts < kConceptsPerSample) throw InvalidSpec("n_concepts too small");
    if (s.noise_sigma < 0.0) throw InvalidSpec("noise_sigma must be >= 0");
    if (s.duplicate_group_count < 0 || s.duplicate_group_count > s.n_samples)
        throw InvalidSpec("duplicate_group_count out of range");
    if (s.duplicate_group_count * kGroupSize > s.n_samples)
        throw InvalidSpec("duplicate groups of size 3 exceed n_samples");
}

// All 3-subsets of [0, n), lexicographic.
std::vector<std::vector<int>> concept_triples(int n) {
    std::vector<std::vector<int>> out;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = b + 1; c < n; ++c) out.push_back({a, b, c});
    return out;
}

}  // namespace

Corpus generate(const CorpusSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);

    Mat concepts = rng.normal_mat(spec.n_concepts, spec.token_dim, 1.0);
    concepts = l2_normalize_rows(concepts);

    const int dup_samples = spec.duplicate_group_count * kGroupSize;
    const int n_groups = spec.duplicate_group_count + (spec.n_samples - dup_samples);
    auto triples = concept_triples(spec.n_concepts);
    if (static_cast<int>(triples.size()) < n_groups)
        throw InvalidSpec("not enough distinct concept triples for requested group count");
    rng.shuffle(triples);

    // Group g owns triples[g]. Duplicate groups occupy the leading sample
    // indices; everything after is a singleton group.
    std::vector<int> group_of(spec.n_samples);
    for (int i = 0; i < spec.n_samples; ++i)
        group_of[i] = i < dup_samples ? i / kGroupSize
                                      : spec.duplicate_group_count + (i - dup_samples);

    Corpus corpus;
    corpus.spec = spec;
    corpus.knowledge = Mat(spec.n_samples, spec.token_dim);
    corpus.samples.reserve(spec.n_samples);

    const double comp_sigma = spec.noise_sigma / std::sqrt(static_cast<double>(spec.token_dim));

    for (int i = 0; i < spec.n_samples; ++i) {
        const std::vector<int>& cset = triples[group_of[i]];

        Sample s;
        s.sample_id = i;
        s.group_id = group_of[i];

        const int n_sent = rng.uniform_int(spec.sentences_min, spec.sentences_max);
        std::vector<int> order = cset;
        rng.shuffle(order);

        s.patch_inputs = rng.normal_mat(spec.patches, spec.token_dim, kPatchNoise);
        std::vector<int> patch_pool = rng.sample_without_replacement(spec.patches, spec.patches);
        size_t pool_pos = 0;

        // Each concept occupies one designated patch region per image;
        // every sentence mentioning that concept points at the same region.
        std::vector<std::vector<int>> region(spec.n_concepts);
        for (int cid : cset) {
            const int n_sig = rng.uniform_int(1, 3);
            for (int k = 0; k < n_sig; ++k) region[cid].push_back(patch_pool[pool_pos++]);
            for (int p : region[cid])
                for (int j = 0; j < spec.token_dim; ++j)
                    s.patch_inputs(p, j) += kSignalAmp * concepts(cid, j);
        }

        for (int u = 0; u < n_sent; ++u) {
            const int cid = order[u % kConceptsPerSample];
            s.concept_ids.push_back(cid);

            // sentence-specific instance direction keeps same-concept
            // sentences distinguishable on the text side
            Mat inst = l2_normalize_rows(rng.normal_mat(1, spec.token_dim, 1.0));

            const int n_tok = rng.uniform_int(kTokensMin, kTokensMax);
            Mat tokens = rng.normal_mat(n_tok, spec.token_dim, kTokenNoise);
            for (int t = 0; t < n_tok; ++t)
                for (int j = 0; j < spec.token_dim; ++j)
                    tokens(t, j) += concepts(cid, j) + kInstanceAmp * inst(0, j);
            s.sentence_inputs.push_back(std::move(tokens));

            // mirror the instance direction into the concept's region so the
            // image carries the same sentence-specific content as the text
            for (int p : region[cid])
                for (int j = 0; j < spec.token_dim; ++j)
                    s.patch_inputs(p, j) += kSignalAmp * kInstanceAmp * inst(0, j);

            s.signal_patches.push_back(region[cid]);
        }

        // Knowledge embedding: normalized mean of the sample's concept
        // vectors plus isotropic noise of expected norm noise_sigma.
        Mat emb(1, spec.token_dim);
        for (int c : cset)
            for (int j = 0; j < spec.token_dim; ++j) emb(0, j) += concepts(c, j);
        emb = l2_normalize_rows(emb);
        if (spec.noise_sigma > 0.0)
            for (int j = 0; j < spec.token_dim; ++j) emb(0, j) += rng.normal() * comp_sigma;
        for (int j = 0; j < spec.token_dim; ++j) corpus.knowledge(i, j) = emb(0, j);

        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// FANE-EMB io

namespace {
constexpr char kMagic[8] = {'F', 'A', 'N', 'E', 'E', 'M', 'B', '1'};

void put_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw TruncatedFile("FANE-EMB header truncated");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
}  // namespace

void save_embeddings(const std::string& path, const Mat& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for write: " + path);
    os.write(kMagic, 8);
    put_u32le(os, static_cast<uint32_t>(m.rows));
    put_u32le(os, static_cast<uint32_t>(m.cols));
    for (double v : m.data) {
        const float f = static_cast<float>(v);
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(&f), 4);  // little-endian host
    }
    if (!os) throw Error("write failed: " + path);
}

Mat load_embeddings(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw BadMagic("bad FANE-EMB magic in " + path);
    const uint32_t rows = get_u32le(is);
    const uint32_t cols = get_u32le(is);
    if (rows > (1u << 24) || cols > (1u << 24) || (rows != 0 && cols > (1ull << 31) / rows))
        throw DimOverflow("FANE-EMB dimensions overflow in " + path);
    Mat m(static_cast<int>(rows), static_cast<int>(cols));
    for (int k = 0; k < m.size(); ++k) {
        float f;
        is.read(reinterpret_cast<char*>(&f), 4);
        if (!is) throw TruncatedFile("FANE-EMB payload truncated in " + path);
        m.data[k] = static_cast<double>(f);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Corpus directory

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
std::string patches_name(int i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "sample_%04d_patches.femb", i);
    return buf;
}
std::string sentence_name(int i, int u) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "sample_%04d_sent_%02d.femb", i, u);
    return buf;
}
}  // namespace

void save_corpus(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    const CorpusSpec& s = corpus.spec;
    json manifest;
    manifest["format"] = "fane-corpus-v1";
    manifest["spec"] = {{"n_samples", s.n_samples},
                        {"n_concepts", s.n_concepts},
                        {"sentences_min", s.sentences_min},
                        {"sentences_max", s.sentences_max},
                        {"patches", s.patches},
                        {"token_dim", s.token_dim},
                        {"grid_side", s.grid_side},
                        {"duplicate_group_count", s.duplicate_group_count},
                        {"noise_sigma", s.noise_sigma},
                        {"seed", s.seed}};
    json recs = json::array();
    for (const Sample& smp : corpus.samples) {
        json r;
        r["group_id"] = smp.group_id;
        r["concept_ids"] = smp.concept_ids;
        r["signal_patches"] = smp.signal_patches;
        json counts = json::array();
        for (const Mat& m : smp.sentence_inputs) counts.push_back(m.rows);
        r["token_counts"] = counts;
        recs.push_back(std::move(r));
    }
    manifest["samples"] = std::move(recs);

    std::ofstream os(fs::path(dir) / "manifest.json");
    os << manifest.dump(2) << "\n";

    save_embeddings((fs::path(dir) / "knowledge.femb").string(), corpus.knowledge);
    for (const Sample& smp : corpus.samples) {
        save_embeddings((fs::path(dir) / patches_name(smp.sample_id)).string(), smp.patch_inputs);
        for (size_t u = 0; u < smp.sentence_inputs.size(); ++u)
            save_embeddings((fs::path(dir) / sentence_name(smp.sample_id, static_cast<int>(u))).string(),
                            smp.sentence_inputs[u]);
    }
}

Corpus load_corpus(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw Error("cannot open corpus manifest in " + dir);
    json manifest = json::parse(is);
    if (manifest.value("format", "") != "fane-corpus-v1")
        throw InvalidSpec("unknown corpus manifest format in " + dir);

    Corpus corpus;
    const json& js = manifest.at("spec");
    CorpusSpec& s = corpus.spec;
    s.n_samples = js.at("n_samples");
    s.n_concepts = js.at("n_concepts");
    s.sentences_min = js.at("sentences_min");
    s.sentences_max = js.at("sentences_max");
    s.patches = js.at("patches");
    s.token_dim = js.at("token_dim");
    s.grid_side = js.at("grid_side");
    s.duplicate_group_count = js.at("duplicate_group_count");
    s.noise_sigma = js.at("noise_sigma");
    s.seed = js.at("seed");

    corpus.knowledge = load_embeddings((fs::path(dir) / "knowledge.femb").string());
    if (corpus.knowledge.rows != s.n_samples)
        throw TruncatedFile("knowledge embedding row count does not match corpus");

    const json& recs = manifest.at("samples");
    for (int i = 0; i < s.n_samples; ++i) {
        const json& r = recs.at(i);
        Sample smp;
        smp.sample_id = i;
        smp.group_id = r.at("group_id");
        smp.concept_ids = r.at("concept_ids").get<std::vector<int>>();
        smp.signal_patches = r.at("signal_patches").get<std::vector<std::vector<int>>>();
        smp.patch_inputs = load_embeddings((fs::path(dir) / patches_name(i)).string());
        const size_t n_sent = smp.concept_ids.size();
        for (size_t u = 0; u < n_sent; ++u)
            smp.sentence_inputs.push_back(
                load_embeddings((fs::path(dir) / sentence_name(i, static_cast<int>(u))).string()));
        corpus.samples.push_back(std::move(smp));
    }
    return corpus;
}

std::vector<std::vector<int>> make_batches(int n_samples, int batch_size, uint64_t seed) {
    if (batch_size < 2) throw BatchTooSmall("batch size must be >= 2");
    std::vector<int> order(n_samples);
    for (int i = 0; i < n_samples; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<int>> batches;
    for (int start = 0; start + batch_size <= n_samples; start += batch_size)
        batches.emplace_back(order.begin() + start, order.begin() + start + batch_size);
    return batches;
}

}  // namespace fane
