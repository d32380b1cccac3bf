#include "dml/resampling.hpp"

#include "dml/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>

namespace dml {

bool operator==(const Split& a, const Split& b) { return a.train == b.train && a.test == b.test; }

IndexList FoldPlan::evaluation_ids(Index rep) const {
    IndexList ids;
    for (const auto& s : splits.at(static_cast<std::size_t>(rep))) ids.insert(ids.end(), s.test.begin(), s.test.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

namespace {

IndexList complement(const IndexList& sorted_ids, Index n) {
    IndexList out;
    out.reserve(static_cast<std::size_t>(n) - sorted_ids.size());
    std::size_t k = 0;
    for (Index i = 0; i < n; ++i) {
        if (k < sorted_ids.size() && sorted_ids[k] == i) {
            ++k;
            continue;
        }
        out.push_back(i);
    }
    return out;
}

IndexList shuffled_range(Index n, Rng& rng) {
    IndexList perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

const char* mode_name(SplitMode m) {
    switch (m) {
        case SplitMode::CrossFit: return "cross_fit";
        case SplitMode::NoCrossFit: return "no_cross_fit";
        case SplitMode::NoSplit: return "no_split";
    }
    return "cross_fit";
}

SplitMode mode_from_name(const std::string& s) {
    if (s == "cross_fit") return SplitMode::CrossFit;
    if (s == "no_cross_fit") return SplitMode::NoCrossFit;
    if (s == "no_split") return SplitMode::NoSplit;
    throw Error(ErrorCode::ParseError, "unknown split mode '" + s + "'");
}

}  // namespace

FoldPlan draw_folds(Index n_obs, Index n_folds, Index n_rep, std::uint64_t seed) {
    if (n_folds < 2) throw Error(ErrorCode::InvalidFoldCount, "n_folds must be at least 2");
    if (n_obs < n_folds) throw Error(ErrorCode::InvalidFoldCount, "n_obs must be at least n_folds");
    if (n_rep < 1) throw Error(ErrorCode::InvalidFoldCount, "n_rep must be at least 1");

    FoldPlan plan;
    plan.n_obs = n_obs;
    plan.n_folds = n_folds;
    plan.n_rep = n_rep;
    plan.mode = SplitMode::CrossFit;
    const Index base = n_obs / n_folds;
    const Index extra = n_obs % n_folds;
    for (Index r = 0; r < n_rep; ++r) {
        Rng rng = make_rng(seed, {0x5eed, static_cast<std::uint64_t>(r)});
        const IndexList perm = shuffled_range(n_obs, rng);
        std::vector<Split> folds;
        Index offset = 0;
        for (Index k = 0; k < n_folds; ++k) {
            const Index size = base + (k < extra ? 1 : 0);
            Split s;
            s.test.assign(perm.begin() + offset, perm.begin() + offset + size);
            std::sort(s.test.begin(), s.test.end());
            s.train = complement(s.test, n_obs);
            folds.push_back(std::move(s));
            offset += size;
        }
        plan.splits.push_back(std::move(folds));
    }
    return plan;
}

FoldPlan draw_no_crossfit(Index n_obs, std::uint64_t seed, Index n_rep) {
    if (n_obs < 4) throw Error(ErrorCode::InvalidArgument, "no-cross-fit split needs at least 4 observations");
    FoldPlan plan;
    plan.n_obs = n_obs;
    plan.n_folds = 2;
    plan.n_rep = n_rep;
    plan.mode = SplitMode::NoCrossFit;
    const Index n_train = (n_obs + 1) / 2;
    for (Index r = 0; r < n_rep; ++r) {
        Rng rng = make_rng(seed, {0x5eed, static_cast<std::uint64_t>(r)});
        const IndexList perm = shuffled_range(n_obs, rng);
        Split s;
        s.train.assign(perm.begin(), perm.begin() + n_train);
        std::sort(s.train.begin(), s.train.end());
        s.test = complement(s.train, n_obs);
        plan.splits.push_back({std::move(s)});
    }
    return plan;
}

FoldPlan no_split_plan(Index n_obs, Index n_rep) {
    FoldPlan plan;
    plan.n_obs = n_obs;
    plan.n_folds = 1;
    plan.n_rep = n_rep;
    plan.mode = SplitMode::NoSplit;
    IndexList all(static_cast<std::size_t>(n_obs));
    std::iota(all.begin(), all.end(), Index{0});
    for (Index r = 0; r < n_rep; ++r) plan.splits.push_back({Split{all, all}});
    return plan;
}

FoldPlan validate_external_plan(const std::vector<RawRepetition>& raw, Index n_obs) {
    if (raw.empty()) throw Error(ErrorCode::LengthMismatch, "plan has no repetitions");
    FoldPlan plan;
    plan.n_obs = n_obs;
    plan.n_rep = static_cast<Index>(raw.size());
    const std::size_t n_folds = raw.front().test_ids.size();
    plan.mode = n_folds == 1 ? SplitMode::NoCrossFit : SplitMode::CrossFit;
    plan.n_folds = n_folds == 1 ? 2 : static_cast<Index>(n_folds);

    for (std::size_t r = 0; r < raw.size(); ++r) {
        const auto& rep = raw[r];
        if (rep.train_ids.size() != rep.test_ids.size() || rep.test_ids.empty())
            throw Error(ErrorCode::LengthMismatch, "repetition " + std::to_string(r) +
                                                       ": train_ids and test_ids must have equal, nonzero length");
        if (rep.test_ids.size() != n_folds)
            throw Error(ErrorCode::LengthMismatch, "all repetitions must have the same number of folds");

        std::vector<int> hits(static_cast<std::size_t>(n_obs), 0);
        std::vector<Split> folds;
        for (std::size_t k = 0; k < n_folds; ++k) {
            Split s{rep.train_ids[k], rep.test_ids[k]};
            for (const IndexList* ids : {&s.train, &s.test})
                for (Index i : *ids)
                    if (i < 0 || i >= n_obs)
                        throw Error(ErrorCode::IndexOutOfRange,
                                    "index " + std::to_string(i) + " outside 0.." + std::to_string(n_obs - 1));
            if (s.train.empty() || s.test.empty())
                throw Error(ErrorCode::NotAPartition, "empty train or test set");
            std::sort(s.train.begin(), s.train.end());
            std::sort(s.test.begin(), s.test.end());
            for (Index i : s.test) ++hits[static_cast<std::size_t>(i)];
            if (n_folds == 1) {
                for (Index i : s.train) ++hits[static_cast<std::size_t>(i)];
            }
            folds.push_back(std::move(s));
        }
        for (std::size_t i = 0; i < hits.size(); ++i)
            if (hits[i] != 1)
                throw Error(ErrorCode::NotAPartition, "repetition " + std::to_string(r) + ": observation " +
                                                          std::to_string(i) + " appears in " +
                                                          std::to_string(hits[i]) + " test sets");
        plan.splits.push_back(std::move(folds));
    }
    return plan;
}

void FoldPlan::save(const std::string& path) const {
    nlohmann::json j;
    j["n_obs"] = n_obs;
    j["n_folds"] = n_folds;
    j["mode"] = mode_name(mode);
    j["splits"] = nlohmann::json::array();
    for (const auto& rep : splits) {
        nlohmann::json jr = nlohmann::json::array();
        for (const auto& s : rep) jr.push_back({{"train", s.train}, {"test", s.test}});
        j["splits"].push_back(jr);
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
    out << j.dump() << "\n";
}

FoldPlan FoldPlan::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
        const Index n = j.at("n_obs").get<Index>();
        const SplitMode mode = mode_from_name(j.value("mode", std::string("cross_fit")));
        if (mode == SplitMode::NoSplit) {
            return no_split_plan(n, static_cast<Index>(j.at("splits").size()));
        }
        std::vector<RawRepetition> raw;
        for (const auto& jr : j.at("splits")) {
            RawRepetition rep;
            for (const auto& js : jr) {
                rep.train_ids.push_back(js.at("train").get<IndexList>());
                rep.test_ids.push_back(js.at("test").get<IndexList>());
            }
            raw.push_back(std::move(rep));
        }
        return validate_external_plan(raw, n);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
}

}  // namespace dml
