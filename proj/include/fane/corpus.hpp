#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fane/mat.hpp"

namespace fane {

struct CorpusSpec {
    int n_samples = 240;
    int n_concepts = 12;
    int sentences_min = 4;  // preprocessing keeps only reports with >= 4 sentences
    int sentences_max = 7;
    int patches = 36;  // I = grid_side^2
    int token_dim = 16;
    int grid_side = 6;
    int duplicate_group_count = 20;
    double noise_sigma = 0.0;
    uint64_t seed = 7;
};

struct Sample {
    int sample_id = 0;
    Mat patch_inputs;                              // I x token_dim
    std::vector<Mat> sentence_inputs;              // per sentence: tokens x token_dim
    std::vector<int> concept_ids;                  // one planted concept per sentence
    int group_id = 0;                              // semantic-duplicate group
    std::vector<std::vector<int>> signal_patches;  // per sentence: planted patch indices
};

struct Corpus {
    CorpusSpec spec;
    std::vector<Sample> samples;
    Mat knowledge;  // n_samples x token_dim, f_tool stand-in (t^g)
};

Corpus generate(const CorpusSpec& spec);

// FANE-EMB: "FANEEMB1" magic, u32le rows, u32le cols, rows*cols f32le row-major.
void save_embeddings(const std::string& path, const Mat& m);
Mat load_embeddings(const std::string& path);

void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

// Epoch partition into batches of size B, short tail dropped, shuffled from seed.
std::vector<std::vector<int>> make_batches(int n_samples, int batch_size, uint64_t seed);

}  // namespace fane
