#ifndef DOTSTITCH_EVALKIT_HPP
#define DOTSTITCH_EVALKIT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dotstitch/common.hpp"
#include "dotstitch/datasetgen.hpp"

namespace dotstitch
{
    /// Different:same batch ratio r:1, or no ratio at all.
    struct ClassRatio
    {
        std::optional<std::size_t> different_per_same;

        static ClassRatio none() { return {}; }
        static ClassRatio of(std::size_t r) { return {r}; }

        bool is_none() const noexcept { return !different_per_same.has_value(); }

        std::string str() const { return is_none() ? "none" : std::to_string(*different_per_same) + ":1"; }

        static ClassRatio parse(std::string_view s)
        {
            if (s == "none")
                return none();
            const auto colon = s.find(':');
            if (colon == std::string_view::npos || s.substr(colon + 1) != "1")
                throw usage_error("ratio must look like 'r:1' or 'none', got '" + std::string(s) + "'");
            std::size_t r = 0;
            for (char ch : s.substr(0, colon))
            {
                if (ch < '0' || ch > '9')
                    throw usage_error("bad ratio '" + std::string(s) + "'");
                r = r * 10 + static_cast<std::size_t>(ch - '0');
            }
            if (colon == 0 || r == 0)
                throw usage_error("bad ratio '" + std::string(s) + "'");
            return of(r);
        }

        friend bool operator==(const ClassRatio&, const ClassRatio&) = default;
    };

    struct Batch
    {
        std::size_t different = 0;
        std::size_t same = 0;
        std::vector<std::string> pair_ids;
    };

    struct BatchPlan
    {
        ClassRatio ratio;
        std::size_t batch_size = 0;
        std::uint64_t seed = 0;
        std::vector<Batch> batches;
    };

    namespace detail
    {
        /// k draws from `pool`: without replacement when the pool is large enough, else with.
        inline void draw(const std::vector<std::size_t>& pool, std::size_t k, rng_type& rng,
                         std::vector<std::size_t>& out)
        {
            if (k <= pool.size())
            {
                std::sample(pool.begin(), pool.end(), std::back_inserter(out), k, rng);
                return;
            }
            std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
            for (std::size_t i = 0; i < k; ++i)
                out.push_back(pool[dist(rng)]);
        }
    }  // namespace detail

    /**
     * Per-iteration training batches with exact class composition.
     *
     * Only train-split rows are used. Ratio r:1 with batch B takes B r/(r+1) different-
     * and B/(r+1) same-class ids every iteration; ratio none draws B ids from all rows.
     * Each batch is shuffled.
     */
    inline BatchPlan make_batch_plan(const std::vector<PairRecord>& manifest, ClassRatio ratio,
                                     std::size_t batch_size, std::size_t iterations, std::uint64_t seed)
    {
        if (batch_size == 0)
            throw usage_error("batch size must be positive");
        std::vector<std::size_t> diff, same, all;
        for (std::size_t k = 0; k < manifest.size(); ++k)
        {
            if (manifest[k].split != Split::train)
                continue;
            all.push_back(k);
            (manifest[k].label == Label::same ? same : diff).push_back(k);
        }

        std::size_t n_diff = 0;
        std::size_t n_same = 0;
        if (!ratio.is_none())
        {
            const auto parts = *ratio.different_per_same + 1;
            if (batch_size % parts != 0)
                throw usage_error("batch size " + std::to_string(batch_size) + " not divisible by "
                                  + std::to_string(parts) + " for ratio " + ratio.str());
            n_same = batch_size / parts;
            n_diff = batch_size - n_same;
            if (diff.empty() || same.empty())
                throw data_error("ratio " + ratio.str() + " needs both classes in the training manifest");
        }
        else if (all.empty())
            throw data_error("training manifest is empty");

        BatchPlan plan;
        plan.ratio = ratio;
        plan.batch_size = batch_size;
        plan.seed = seed;
        plan.batches.reserve(iterations);
        rng_type rng(seed);
        std::vector<std::size_t> picked;
        for (std::size_t it = 0; it < iterations; ++it)
        {
            picked.clear();
            if (ratio.is_none())
                detail::draw(all, batch_size, rng, picked);
            else
            {
                detail::draw(diff, n_diff, rng, picked);
                detail::draw(same, n_same, rng, picked);
            }
            std::shuffle(picked.begin(), picked.end(), rng);

            Batch b;
            b.pair_ids.reserve(picked.size());
            for (auto k : picked)
            {
                b.pair_ids.push_back(manifest[k].pair_id);
                ++(manifest[k].label == Label::same ? b.same : b.different);
            }
            plan.batches.push_back(std::move(b));
        }
        return plan;
    }

    inline nlohmann::ordered_json to_json(const BatchPlan& plan)
    {
        nlohmann::ordered_json j;
        j["ratio"] = plan.ratio.str();
        j["batch_size"] = plan.batch_size;
        j["iterations"] = plan.batches.size();
        j["seed"] = plan.seed;
        auto& batches = j["batches"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < plan.batches.size(); ++i)
        {
            const auto& b = plan.batches[i];
            batches.push_back({{"iteration", i}, {"different", b.different}, {"same", b.same}, {"pair_ids", b.pair_ids}});
        }
        return j;
    }

    // ---------------------------------------------------------------------------------
    // Predictions and metrics

    struct PredictionRecord
    {
        std::string pair_id;
        double score = 0.0;  // probability of "same"
        Label label = Label::different;

        friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
    };

    inline std::vector<PredictionRecord> parse_predictions(std::string_view text)
    {
        std::vector<PredictionRecord> out;
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
            try
            {
                const auto j = nlohmann::json::parse(line);
                PredictionRecord p{j.at("pair_id").get<std::string>(), j.at("score").get<double>(),
                                   parse_label(j.at("label").get<std::string>())};
                if (!std::isfinite(p.score) || p.score < 0.0 || p.score > 1.0)
                    throw data_error("score outside [0,1]");
                out.push_back(std::move(p));
            }
            catch (const std::exception& e)
            {
                throw data_error("predictions line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        return out;
    }

    inline std::string format_predictions(const std::vector<PredictionRecord>& preds)
    {
        std::string out;
        for (const auto& p : preds)
        {
            nlohmann::ordered_json j;
            j["pair_id"] = p.pair_id;
            j["score"] = p.score;
            j["label"] = to_string(p.label);
            out += j.dump();
            out += '\n';
        }
        return out;
    }

    /// Positive class = same family.
    struct ConfusionCounts
    {
        std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

        std::size_t total() const noexcept { return tp + fp + tn + fn; }

        ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept
        {
            tp += o.tp;
            fp += o.fp;
            tn += o.tn;
            fn += o.fn;
            return *this;
        }

        friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
    };

    /// score >= threshold predicts "same".
    inline ConfusionCounts confusion(const std::vector<PredictionRecord>& preds, double threshold = 0.5)
    {
        if (!(threshold >= 0.0 && threshold <= 1.0))
            throw usage_error("threshold must lie in [0,1]");
        ConfusionCounts c;
        for (const auto& p : preds)
        {
            if (!(p.score >= 0.0 && p.score <= 1.0))
                throw data_error("score outside [0,1] for '" + p.pair_id + "'");
            const bool predicted_same = p.score >= threshold;
            if (p.label == Label::same)
                ++(predicted_same ? c.tp : c.fn);
            else
                ++(predicted_same ? c.fp : c.tn);
        }
        return c;
    }

    /**
     * Sensitivity is same-class accuracy, specificity different-class accuracy. The
     * F-score is the harmonic mean of sensitivity and specificity (not precision and
     * recall). Class accuracies are absent when the class has no samples, and are then
     * left out of the average.
     */
    struct MetricsReport
    {
        double accuracy = 0.0;
        std::optional<double> sensitivity;
        std::optional<double> specificity;
        std::optional<double> f_score;
        double average_class_accuracy = 0.0;
    };

    inline MetricsReport metrics(const ConfusionCounts& c)
    {
        if (c.total() == 0)
            throw data_error("metrics need at least one prediction");
        MetricsReport m;
        m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
        if (c.tp + c.fn > 0)
            m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        if (c.tn + c.fp > 0)
            m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
        if (m.sensitivity && m.specificity)
        {
            const double s = *m.sensitivity + *m.specificity;
            m.f_score = s > 0.0 ? 2.0 * *m.sensitivity * *m.specificity / s : 0.0;
            m.average_class_accuracy = s / 2.0;
        }
        else
            m.average_class_accuracy = m.sensitivity ? *m.sensitivity : *m.specificity;
        return m;
    }

    struct RocPoint
    {
        double fpr = 0.0;
        double tpr = 0.0;
        friend bool operator==(const RocPoint&, const RocPoint&) = default;
    };

    struct RocCurve
    {
        std::vector<RocPoint> points;
        double auc = 0.0;
    };

    /// ROC over all distinct thresholds (ties share one step) with trapezoid AUC.
    inline RocCurve roc(const std::vector<PredictionRecord>& preds)
    {
        std::size_t pos = 0;
        std::size_t neg = 0;
        for (const auto& p : preds)
            ++(p.label == Label::same ? pos : neg);
        if (pos == 0 || neg == 0)
            throw data_error("ROC needs both classes");

        std::vector<std::size_t> order(preds.size());
        for (std::size_t k = 0; k < order.size(); ++k)
            order[k] = k;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

        RocCurve out;
        out.points.push_back({0.0, 0.0});
        std::size_t tp = 0;
        std::size_t fp = 0;
        for (std::size_t k = 0; k < order.size();)
        {
            const double s = preds[order[k]].score;
            while (k < order.size() && preds[order[k]].score == s)
            {
                ++(preds[order[k]].label == Label::same ? tp : fp);
                ++k;
            }
            out.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                                  static_cast<double>(tp) / static_cast<double>(pos)});
        }
        if (out.points.back() != RocPoint{1.0, 1.0})
            out.points.push_back({1.0, 1.0});

        for (std::size_t k = 1; k < out.points.size(); ++k)
        {
            const auto& a = out.points[k - 1];
            const auto& b = out.points[k];
            out.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
        }
        return out;
    }

    inline std::string format_roc_csv(const RocCurve& curve)
    {
        std::string out = "fpr,tpr\n";
        char buf[64];
        for (const auto& p : curve.points)
        {
            const int len = std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fpr, p.tpr);
            out.append(buf, static_cast<std::size_t>(len));
        }
        return out;
    }

    // ---------------------------------------------------------------------------------
    // Per-split reports

    struct SplitReport
    {
        Split split;
        ConfusionCounts counts;
        MetricsReport metrics;
        std::optional<RocCurve> roc;
    };

    /**
     * Groups predictions by the split of their manifest row and evaluates each group.
     * Labels must agree with the manifest; unknown pair ids are a data_error.
     */
    inline std::vector<SplitReport> evaluate_by_split(const std::vector<PredictionRecord>& preds,
                                                      const std::vector<PairRecord>& manifest, double threshold)
    {
        std::unordered_map<std::string, const PairRecord*> rows;
        for (const auto& r : manifest)
            rows.emplace(r.pair_id, &r);

        std::map<Split, std::vector<PredictionRecord>> grouped;
        for (const auto& p : preds)
        {
            auto it = rows.find(p.pair_id);
            if (it == rows.end())
                throw data_error("prediction for unknown pair '" + p.pair_id + "'");
            if (it->second->label != p.label)
                throw data_error("label mismatch for pair '" + p.pair_id + "'");
            grouped[it->second->split].push_back(p);
        }

        std::vector<SplitReport> out;
        for (auto& [split, group] : grouped)
        {
            SplitReport rep{split, confusion(group, threshold), {}, std::nullopt};
            rep.metrics = metrics(rep.counts);
            if (rep.metrics.sensitivity && rep.metrics.specificity)
                rep.roc = roc(group);
            out.push_back(std::move(rep));
        }
        return out;
    }

    inline nlohmann::ordered_json to_json(const SplitReport& r)
    {
        auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
        nlohmann::ordered_json j;
        j["split"] = to_string(r.split);
        j["tp"] = r.counts.tp;
        j["fp"] = r.counts.fp;
        j["tn"] = r.counts.tn;
        j["fn"] = r.counts.fn;
        j["accuracy"] = r.metrics.accuracy;
        j["sensitivity"] = opt(r.metrics.sensitivity);
        j["specificity"] = opt(r.metrics.specificity);
        j["f_score"] = opt(r.metrics.f_score);
        j["average_class_accuracy"] = r.metrics.average_class_accuracy;
        j["auc"] = r.roc ? nlohmann::ordered_json(r.roc->auc) : nlohmann::ordered_json();
        return j;
    }

    /// Rows per split; columns Diff (specificity), Same (sensitivity), Avg, Total accuracy.
    inline std::string format_report_table(const std::vector<SplitReport>& reports)
    {
        auto pct = [](const std::optional<double>& v) {
            char buf[16];
            if (!v)
                return std::string("-");
            std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *v);
            return std::string(buf);
        };
        std::string out;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-6s %9s %9s %9s %9s %9s\n", "Split", "Diff", "Same", "Avg", "Total", "F");
        out += buf;
        for (const auto& r : reports)
        {
            std::snprintf(buf, sizeof buf, "%-6s %9s %9s %9s %9s %9s\n", to_string(r.split),
                          pct(r.metrics.specificity).c_str(), pct(r.metrics.sensitivity).c_str(),
                          pct(r.metrics.average_class_accuracy).c_str(), pct(r.metrics.accuracy).c_str(),
                          pct(r.metrics.f_score).c_str());
            out += buf;
        }
        return out;
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_EVALKIT_HPP
