#pragma once

#include "dml/core.hpp"

#include <string>
#include <vector>

namespace dml {

struct Split {
    IndexList train;
    IndexList test;
};

enum class SplitMode {
    CrossFit,    // K folds, test sets partition the sample
    NoCrossFit,  // one train/test pair, disjoint halves
    NoSplit,     // train = test = everything (diagnostic only)
};

// Train/test partitions for every repetition of the sample splitting.
struct FoldPlan {
    Index n_obs = 0;
    Index n_folds = 0;
    Index n_rep = 0;
    SplitMode mode = SplitMode::CrossFit;
    std::vector<std::vector<Split>> splits;  // [rep][fold]

    bool cross_fitting() const { return mode == SplitMode::CrossFit; }

    // Indices on which the score is evaluated in repetition `rep`, sorted.
    IndexList evaluation_ids(Index rep) const;

    // JSON: {"n_obs":..,"mode":..,"splits":[[{"train":[..],"test":[..]},..],..]}
    void save(const std::string& path) const;
    static FoldPlan load(const std::string& path);

    bool operator==(const FoldPlan&) const = default;
};

bool operator==(const Split& a, const Split& b);

FoldPlan draw_folds(Index n_obs, Index n_folds, Index n_rep, std::uint64_t seed);

// One random split per repetition: train = ceil(n/2) observations.
FoldPlan draw_no_crossfit(Index n_obs, std::uint64_t seed, Index n_rep = 1);

FoldPlan no_split_plan(Index n_obs, Index n_rep = 1);

// Nested [rep] -> (train_ids per fold, test_ids per fold).
struct RawRepetition {
    std::vector<IndexList> train_ids;
    std::vector<IndexList> test_ids;
};

// Accepts overlapping train sets; test sets must partition 0..n-1 when more
// than one fold is given. A single pair per repetition is read as a
// no-cross-fit split and must be disjoint and cover the sample.
FoldPlan validate_external_plan(const std::vector<RawRepetition>& raw, Index n_obs);

}  // namespace dml
