#ifndef DOTSTITCH_DATASETGEN_HPP
#define DOTSTITCH_DATASETGEN_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dotstitch/common.hpp"
#include "dotstitch/dotplot.hpp"
#include "dotstitch/seqcore.hpp"
#include "dotstitch/thermo.hpp"

namespace dotstitch
{
    enum class Split
    {
        train,
        val,
        test
    };

    enum class Label
    {
        same,
        different
    };

    inline constexpr Split all_splits[] = {Split::train, Split::val, Split::test};

    inline const char* to_string(Split s) noexcept
    {
        switch (s)
        {
            case Split::train: return "train";
            case Split::val: return "val";
            case Split::test: return "test";
        }
        return "?";
    }

    inline const char* to_string(Label l) noexcept { return l == Label::same ? "same" : "different"; }

    inline Split parse_split(std::string_view s)
    {
        if (s == "train")
            return Split::train;
        if (s == "val")
            return Split::val;
        if (s == "test")
            return Split::test;
        throw data_error("unknown split '" + std::string(s) + "'");
    }

    inline Label parse_label(std::string_view s)
    {
        if (s == "same")
            return Label::same;
        if (s == "different")
            return Label::different;
        throw data_error("unknown label '" + std::string(s) + "'");
    }

    /// Family accession -> split.
    struct SplitAssignment
    {
        std::map<std::string, Split> families;
        std::uint64_t seed = 0;

        Split of(const std::string& family) const
        {
            auto it = families.find(family);
            if (it == families.end())
                throw data_error("family '" + family + "' has no split");
            return it->second;
        }

        std::size_t count(Split s) const
        {
            return static_cast<std::size_t>(
                std::count_if(families.begin(), families.end(), [s](const auto& kv) { return kv.second == s; }));
        }

        /// Accessions in split `s`, lexicographic.
        std::vector<std::string> members(Split s) const
        {
            std::vector<std::string> out;
            for (const auto& [acc, sp] : families)
                if (sp == s)
                    out.push_back(acc);
            return out;
        }
    };

    /// One manifest row. CNN rows carry `image`; Siamese rows carry `image_a`/`image_b`.
    struct PairRecord
    {
        std::string pair_id;
        std::string seq_a;
        std::string seq_b;
        std::string family_a;
        std::string family_b;
        Label label = Label::different;
        Split split = Split::train;
        std::optional<std::string> image;
        std::optional<std::string> image_a;
        std::optional<std::string> image_b;

        friend bool operator==(const PairRecord&, const PairRecord&) = default;
    };

    /**
     * Seeded 70:10:20 family split.
     *
     * Accessions are shuffled with the seeded generator; the first floor(0.7 F) go to
     * train, the next floor(0.1 F) to val and the remainder to test.
     */
    inline SplitAssignment split_families(const FamilyCollection& c, std::uint64_t seed)
    {
        const auto f = c.family_count();
        if (f < 3)
            throw data_error("need at least 3 families to split, have " + std::to_string(f));
        auto accs = c.accessions();
        rng_type rng(seed);
        std::shuffle(accs.begin(), accs.end(), rng);

        const auto n_train = f * 7 / 10;
        const auto n_val = f / 10;
        SplitAssignment out;
        out.seed = seed;
        for (std::size_t k = 0; k < f; ++k)
            out.families[accs[k]] = k < n_train ? Split::train : (k < n_train + n_val ? Split::val : Split::test);
        return out;
    }

    /// Reduces families larger than `cap` to a seeded uniform subset of exactly `cap` (original order kept).
    inline FamilyCollection truncate_families(const FamilyCollection& c, std::size_t cap, std::uint64_t seed)
    {
        if (cap < 2)
            throw usage_error("truncation cap must be >= 2");
        rng_type rng(seed);
        FamilyCollection out;
        for (const auto& [_, members] : c.families())
        {
            if (members.size() <= cap)
            {
                for (const auto& s : members)
                    out.add(s);
                continue;
            }
            std::vector<RnaSequence> kept;
            kept.reserve(cap);
            std::sample(members.begin(), members.end(), std::back_inserter(kept), cap, rng);
            for (auto& s : kept)
                out.add(std::move(s));
        }
        return out;
    }

    namespace detail
    {
        inline std::string make_pair_id(Split split, Label label, bool ordered, std::size_t index)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%07zu", index);
            std::string id = to_string(split);
            id += label == Label::same ? "-same-" : "-diff-";
            if (!ordered)
                id += "u-";
            return id + buf;
        }

        inline PairRecord make_pair(const RnaSequence& a, const RnaSequence& b, Label label, Split split,
                                    std::string id)
        {
            PairRecord r;
            r.pair_id = std::move(id);
            r.seq_a = a.id();
            r.seq_b = b.id();
            r.family_a = a.family();
            r.family_b = b.family();
            r.label = label;
            r.split = split;
            return r;
        }
    }  // namespace detail

    /**
     * Same-family pairs, excluding self-pairs.
     *
     * ordered: n(n-1) pairs per family of size n; unordered: n(n-1)/2. Records are
     * grouped by split (train, val, test), then family, then member order.
     */
    inline std::vector<PairRecord> enumerate_same_pairs(const FamilyCollection& c, const SplitAssignment& split,
                                                        bool ordered)
    {
        std::vector<PairRecord> out;
        for (Split s : all_splits)
        {
            std::size_t index = 0;
            for (const auto& acc : split.members(s))
            {
                auto it = c.families().find(acc);
                if (it == c.families().end())
                    continue;
                const auto& m = it->second;
                for (std::size_t a = 0; a < m.size(); ++a)
                    for (std::size_t b = ordered ? 0 : a + 1; b < m.size(); ++b)
                        if (a != b)
                            out.push_back(detail::make_pair(m[a], m[b], Label::same, s,
                                                            detail::make_pair_id(s, Label::same, ordered, index++)));
            }
        }
        return out;
    }

    /**
     * Sampled different-family training pairs.
     *
     * Each repeat draws one representative per train family, then for every ordered pair
     * of distinct train families (X, Y) pairs X's representative with a random member of
     * Y: F (F-1) records per repeat. Duplicates are kept.
     */
    inline std::vector<PairRecord> sample_diff_pairs_train(const FamilyCollection& c, const SplitAssignment& split,
                                                           std::size_t repeats, std::uint64_t seed)
    {
        std::vector<const std::vector<RnaSequence>*> fams;
        for (const auto& acc : split.members(Split::train))
            if (auto it = c.families().find(acc); it != c.families().end() && !it->second.empty())
                fams.push_back(&it->second);
        if (fams.size() < 2)
            throw data_error("need at least 2 train families for different-family pairs");

        rng_type rng(seed);
        auto pick = [&rng](const std::vector<RnaSequence>& m) -> const RnaSequence& {
            std::uniform_int_distribution<std::size_t> dist(0, m.size() - 1);
            return m[dist(rng)];
        };

        const auto f = fams.size();
        std::vector<PairRecord> out;
        out.reserve(f * (f - 1) * repeats);
        std::size_t index = 0;
        std::vector<const RnaSequence*> reps(f);
        for (std::size_t r = 0; r < repeats; ++r)
        {
            for (std::size_t x = 0; x < f; ++x)
                reps[x] = &pick(*fams[x]);
            for (std::size_t x = 0; x < f; ++x)
                for (std::size_t y = 0; y < f; ++y)
                    if (x != y)
                        out.push_back(detail::make_pair(*reps[x], pick(*fams[y]), Label::different, Split::train,
                                                        detail::make_pair_id(Split::train, Label::different, true,
                                                                             index++)));
        }
        return out;
    }

    /// All cross-family pairs inside one split, ordered (both directions) or unordered.
    inline std::vector<PairRecord> enumerate_diff_pairs_eval(const FamilyCollection& c, const SplitAssignment& split,
                                                             Split which, bool ordered)
    {
        std::vector<const std::vector<RnaSequence>*> fams;
        for (const auto& acc : split.members(which))
            if (auto it = c.families().find(acc); it != c.families().end())
                fams.push_back(&it->second);

        std::vector<PairRecord> out;
        std::size_t index = 0;
        for (std::size_t x = 0; x < fams.size(); ++x)
            for (std::size_t y = ordered ? 0 : x + 1; y < fams.size(); ++y)
            {
                if (x == y)
                    continue;
                for (const auto& a : *fams[x])
                    for (const auto& b : *fams[y])
                        out.push_back(detail::make_pair(a, b, Label::different, which,
                                                        detail::make_pair_id(which, Label::different, ordered,
                                                                             index++)));
            }
        return out;
    }

    // ---------------------------------------------------------------------------------
    // Manifest JSONL

    inline nlohmann::ordered_json to_json(const PairRecord& r)
    {
        nlohmann::ordered_json j;
        j["pair_id"] = r.pair_id;
        j["seq_a"] = r.seq_a;
        j["seq_b"] = r.seq_b;
        j["family_a"] = r.family_a;
        j["family_b"] = r.family_b;
        j["label"] = to_string(r.label);
        j["split"] = to_string(r.split);
        if (r.image)
            j["image"] = *r.image;
        if (r.image_a)
            j["image_a"] = *r.image_a;
        if (r.image_b)
            j["image_b"] = *r.image_b;
        return j;
    }

    inline PairRecord pair_record_from_json(const nlohmann::json& j)
    {
        try
        {
            PairRecord r;
            r.pair_id = j.at("pair_id").get<std::string>();
            r.seq_a = j.at("seq_a").get<std::string>();
            r.seq_b = j.at("seq_b").get<std::string>();
            r.family_a = j.at("family_a").get<std::string>();
            r.family_b = j.at("family_b").get<std::string>();
            r.label = parse_label(j.at("label").get<std::string>());
            r.split = parse_split(j.at("split").get<std::string>());
            if (j.contains("image"))
                r.image = j["image"].get<std::string>();
            if (j.contains("image_a"))
                r.image_a = j["image_a"].get<std::string>();
            if (j.contains("image_b"))
                r.image_b = j["image_b"].get<std::string>();
            if ((r.label == Label::same) != (r.family_a == r.family_b))
                throw data_error("label inconsistent with families in pair '" + r.pair_id + "'");
            return r;
        }
        catch (const nlohmann::json::exception& e)
        {
            throw data_error(std::string("bad manifest row: ") + e.what());
        }
    }

    inline std::string format_manifest(const std::vector<PairRecord>& records)
    {
        std::string out;
        for (const auto& r : records)
        {
            out += to_json(r).dump();
            out += '\n';
        }
        return out;
    }

    inline std::vector<PairRecord> parse_manifest(std::string_view text)
    {
        std::vector<PairRecord> out;
        std::size_t pos = 0;
        std::size_t lineno = 0;
        while (pos < text.size())
        {
            auto eol = text.find('\n', pos);
            if (eol == std::string_view::npos)
                eol = text.size();
            const auto line = text.substr(pos, eol - pos);
            pos = eol + 1;
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string_view::npos)
                continue;
            nlohmann::json j;
            try
            {
                j = nlohmann::json::parse(line);
            }
            catch (const nlohmann::json::exception& e)
            {
                throw data_error("manifest line " + std::to_string(lineno) + ": " + e.what());
            }
            out.push_back(pair_record_from_json(j));
        }
        return out;
    }

    inline std::vector<PairRecord> read_manifest(const std::filesystem::path& path)
    {
        return parse_manifest(read_text_file(path));
    }

    inline void write_manifest(const std::vector<PairRecord>& records, const std::filesystem::path& path)
    {
        write_file_atomic(path, format_manifest(records));
    }

    // ---------------------------------------------------------------------------------
    // Image emission

    /// Runs fn(k) for k in [0, n) on `jobs` threads; rethrows the first failure.
    inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn)
    {
        jobs = std::max<std::size_t>(1, std::min(jobs, n));
        if (jobs <= 1)
        {
            for (std::size_t k = 0; k < n; ++k)
                fn(k);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr error;
        std::mutex error_mutex;
        {
            std::vector<std::jthread> pool;
            pool.reserve(jobs);
            for (std::size_t t = 0; t < jobs; ++t)
                pool.emplace_back([&] {
                    for (std::size_t k = next++; k < n && !failed; k = next++)
                    {
                        try
                        {
                            fn(k);
                        }
                        catch (...)
                        {
                            std::lock_guard lock(error_mutex);
                            if (!error)
                                error = std::current_exception();
                            failed = true;
                        }
                    }
                });
        }
        if (error)
            std::rethrow_exception(error);
    }

    using BppmSource = std::function<Bppm(const RnaSequence&)>;

    /// BPPMs from the pair-weight model.
    inline BppmSource fold_source(FoldParams params)
    {
        return [params](const RnaSequence& s) { return base_pair_probabilities(s, params); };
    }

    struct ImageOptions
    {
        std::size_t side = default_image_side;
        std::size_t jobs = 1;
    };

    inline std::string dotplot_rel_path(const std::string& seq_id) { return "dotplots/" + file_stem_for(seq_id) + ".png"; }
    inline std::string pair_rel_path(const std::string& pair_id) { return "pairs/" + file_stem_for(pair_id) + ".png"; }

    inline constexpr const char* cnn_manifest_name = "manifest.cnn.jsonl";
    inline constexpr const char* siamese_manifest_name = "manifest.siamese.jsonl";

    /// Resized dot-plots keyed by sequence id.
    using DotplotCache = std::unordered_map<std::string, GrayImage>;

    /**
     * Folds (or imports) and renders every sequence referenced by `pairs` once, resized to
     * `side`, and writes each to out_dir/dotplots/<seq_id>.png.
     */
    inline DotplotCache render_dotplots(const std::vector<PairRecord>& pairs, const FamilyCollection& c,
                                        const BppmSource& source, const std::filesystem::path& out_dir,
                                        const ImageOptions& opts)
    {
        std::vector<std::string> ids;
        {
            std::set<std::string> seen;
            for (const auto& p : pairs)
                for (const auto* id : {&p.seq_a, &p.seq_b})
                    if (seen.insert(*id).second)
                        ids.push_back(*id);
        }
        std::map<std::string, std::string> stems;
        for (const auto& id : ids)
        {
            auto [it, fresh] = stems.emplace(file_stem_for(id), id);
            if (!fresh && it->second != id)
                throw data_error("sequence ids '" + it->second + "' and '" + id + "' map to the same file name");
        }

        std::vector<const RnaSequence*> seqs;
        seqs.reserve(ids.size());
        for (const auto& id : ids)
            seqs.push_back(&c.find(id));

        std::filesystem::create_directories(out_dir / "dotplots");
        std::vector<GrayImage> images(ids.size());
        parallel_for(ids.size(), opts.jobs, [&](std::size_t k) {
            images[k] = resize_bilinear(bppm_to_dotplot(source(*seqs[k])), opts.side);
            write_png(images[k], out_dir / dotplot_rel_path(ids[k]));
        });

        DotplotCache cache;
        for (std::size_t k = 0; k < ids.size(); ++k)
            cache.emplace(ids[k], std::move(images[k]));
        return cache;
    }

    /**
     * Writes one stitched image per pair (seq_a in the lower-left triangle) and the CNN
     * manifest. The manifest is written last and atomically.
     */
    inline std::vector<PairRecord> build_images(std::vector<PairRecord> pairs, const DotplotCache& dotplots,
                                                const std::filesystem::path& out_dir, const ImageOptions& opts)
    {
        std::set<std::string> stems;
        for (const auto& p : pairs)
            if (!stems.insert(file_stem_for(p.pair_id)).second)
                throw data_error("duplicate pair id '" + p.pair_id + "'");

        auto lookup = [&](const std::string& id) -> const GrayImage& {
            auto it = dotplots.find(id);
            if (it == dotplots.end())
                throw data_error("no BPPM/dot-plot for sequence '" + id + "'");
            return it->second;
        };
        for (const auto& p : pairs)
        {
            lookup(p.seq_a);
            lookup(p.seq_b);
        }

        std::filesystem::create_directories(out_dir / "pairs");
        parallel_for(pairs.size(), opts.jobs, [&](std::size_t k) {
            auto& p = pairs[k];
            p.image = pair_rel_path(p.pair_id);
            write_png(stitch(lookup(p.seq_a), lookup(p.seq_b)), out_dir / *p.image);
        });
        write_manifest(pairs, out_dir / cnn_manifest_name);
        return pairs;
    }

    /// Convenience overload: render dot-plots then stitched pair images.
    inline std::vector<PairRecord> build_images(std::vector<PairRecord> pairs, const FamilyCollection& c,
                                                const BppmSource& source, const std::filesystem::path& out_dir,
                                                const ImageOptions& opts = {})
    {
        const auto cache = render_dotplots(pairs, c, source, out_dir, opts);
        return build_images(std::move(pairs), cache, out_dir, opts);
    }

    /**
     * Siamese manifest: each row references the two single-RNA dot-plots under
     * out_dir/dotplots, with the pair normalized so seq_a < seq_b.
     */
    inline std::vector<PairRecord> build_siamese_manifest(std::vector<PairRecord> pairs,
                                                          const std::filesystem::path& out_dir)
    {
        for (auto& p : pairs)
        {
            if (p.seq_b < p.seq_a)
            {
                std::swap(p.seq_a, p.seq_b);
                std::swap(p.family_a, p.family_b);
            }
            p.image.reset();
            p.image_a = dotplot_rel_path(p.seq_a);
            p.image_b = dotplot_rel_path(p.seq_b);
            for (const auto* rel : {&*p.image_a, &*p.image_b})
                if (!std::filesystem::is_regular_file(out_dir / *rel))
                    throw data_error("missing dot-plot image " + (out_dir / *rel).string());
        }
        write_manifest(pairs, out_dir / siamese_manifest_name);
        return pairs;
    }

    // ---------------------------------------------------------------------------------
    // Dataset assembly

    struct DatasetPlan
    {
        std::vector<PairRecord> cnn;
        std::vector<PairRecord> siamese;
    };

    /**
     * CNN rows: ordered same pairs in every split, sampled different pairs for train and
     * ordered different pairs for val/test. Siamese rows: unordered same pairs, the train
     * sampled different pairs, unordered different pairs for val/test.
     */
    inline DatasetPlan plan_dataset(const FamilyCollection& truncated, const SplitAssignment& split,
                                    std::size_t diff_repeats, std::uint64_t diff_seed)
    {
        DatasetPlan plan;
        auto same_o = enumerate_same_pairs(truncated, split, true);
        auto same_u = enumerate_same_pairs(truncated, split, false);
        auto diff_train = sample_diff_pairs_train(truncated, split, diff_repeats, diff_seed);

        auto take = [](std::vector<PairRecord>& dst, const std::vector<PairRecord>& src, Split s) {
            for (const auto& r : src)
                if (r.split == s)
                    dst.push_back(r);
        };
        for (Split s : all_splits)
        {
            take(plan.cnn, same_o, s);
            take(plan.siamese, same_u, s);
            if (s == Split::train)
            {
                plan.cnn.insert(plan.cnn.end(), diff_train.begin(), diff_train.end());
                plan.siamese.insert(plan.siamese.end(), diff_train.begin(), diff_train.end());
            }
            else
            {
                auto o = enumerate_diff_pairs_eval(truncated, split, s, true);
                auto u = enumerate_diff_pairs_eval(truncated, split, s, false);
                plan.cnn.insert(plan.cnn.end(), o.begin(), o.end());
                plan.siamese.insert(plan.siamese.end(), u.begin(), u.end());
            }
        }
        return plan;
    }

    /// (split, label) -> count.
    using CountTable = std::map<std::pair<Split, Label>, std::size_t>;

    inline CountTable count_pairs(const std::vector<PairRecord>& records)
    {
        CountTable t;
        for (Split s : all_splits)
            for (Label l : {Label::different, Label::same})
                t[{s, l}] = 0;
        for (const auto& r : records)
            ++t[{r.split, r.label}];
        return t;
    }

    /// Plain-text count table: one row per split, columns Different / Same.
    inline std::string format_count_table(const CountTable& t, const SplitAssignment& split)
    {
        std::string out;
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-6s %9s %12s %12s\n", "Split", "Families", "Different", "Same");
        out += buf;
        for (Split s : all_splits)
        {
            std::snprintf(buf, sizeof buf, "%-6s %9zu %12zu %12zu\n", to_string(s), split.count(s),
                          t.at({s, Label::different}), t.at({s, Label::same}));
            out += buf;
        }
        return out;
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_DATASETGEN_HPP
