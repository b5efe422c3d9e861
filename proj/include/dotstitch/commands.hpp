#ifndef DOTSTITCH_COMMANDS_HPP
#define DOTSTITCH_COMMANDS_HPP

// Subcommand implementations behind the `dotstitch` CLI. Each returns text meant for
// stdout and throws usage_error / data_error / io_error, mapped to exit codes 1 / 2 / 3.

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "dotstitch/config.hpp"
#include "dotstitch/datasetgen.hpp"
#include "dotstitch/dotplot.hpp"
#include "dotstitch/evalkit.hpp"
#include "dotstitch/fetch.hpp"
#include "dotstitch/seqcore.hpp"
#include "dotstitch/thermo.hpp"

namespace dotstitch
{
    enum exit_code : int
    {
        exit_ok = 0,
        exit_usage = 1,
        exit_data = 2,
        exit_io = 3
    };

    inline std::vector<std::filesystem::path> cmd_fetch(const std::vector<std::string>& accessions,
                                                        const std::string& endpoint,
                                                        const std::filesystem::path& dest,
                                                        const FetchOptions& opts = {})
    {
        std::vector<std::filesystem::path> out;
        out.reserve(accessions.size());
        for (const auto& acc : accessions)
            out.push_back(fetch_family(acc, endpoint, dest, opts));
        return out;
    }

    struct BppmSummary
    {
        std::size_t computed = 0;
        std::size_t skipped = 0;
    };

    namespace detail
    {
        inline bool up_to_date(const std::filesystem::path& output, std::filesystem::file_time_type input_time)
        {
            std::error_code ec;
            const auto t = std::filesystem::last_write_time(output, ec);
            return !ec && t >= input_time;
        }
    }  // namespace detail

    /**
     * Folds every sequence under `fasta_dir` into out/bppm/<id>.tsv and a resized
     * out/dotplots/<id>.png. Outputs newer than their FASTA file are left alone.
     */
    inline BppmSummary cmd_bppm(const std::filesystem::path& fasta_dir, const std::filesystem::path& out_dir,
                                const FoldParams& params, std::size_t side, std::size_t jobs)
    {
        namespace fs = std::filesystem;
        params.validate();
        const auto corpus = load_family_dir(fasta_dir);
        fs::create_directories(out_dir / "bppm");
        fs::create_directories(out_dir / "dotplots");

        struct Job
        {
            const RnaSequence* seq;
            fs::path tsv;
            fs::path png;
            fs::file_time_type source_time;
        };
        std::vector<Job> todo;
        BppmSummary summary;
        for (const auto& [family, members] : corpus.families())
        {
            const auto src_time = fs::last_write_time(fasta_dir / (family + ".fasta"));
            for (const auto& s : members)
            {
                Job j{&s, out_dir / "bppm" / (file_stem_for(s.id()) + ".tsv"), out_dir / dotplot_rel_path(s.id()),
                      src_time};
                if (detail::up_to_date(j.tsv, src_time) && detail::up_to_date(j.png, src_time))
                    ++summary.skipped;
                else
                    todo.push_back(std::move(j));
            }
        }

        parallel_for(todo.size(), jobs, [&](std::size_t k) {
            const auto& j = todo[k];
            const auto b = base_pair_probabilities(*j.seq, params);
            write_file_atomic(j.tsv, format_bppm_tsv(b));
            write_png(resize_bilinear(bppm_to_dotplot(b), side), j.png);
        });
        summary.computed = todo.size();
        return summary;
    }

    /// BPPMs from <dir>/<id>.tsv.
    inline BppmSource tsv_source(std::filesystem::path dir)
    {
        return [dir = std::move(dir)](const RnaSequence& s) {
            const auto path = dir / (file_stem_for(s.id()) + ".tsv");
            if (!std::filesystem::is_regular_file(path))
                throw data_error("missing BPPM for '" + s.id() + "' (" + path.string() + ")");
            return import_bppm_tsv(path, s.length());
        };
    }

    struct BuildSummary
    {
        SplitAssignment split;
        CountTable cnn_counts;
        CountTable siamese_counts;
        std::size_t families_retained = 0;
        std::string table;
    };

    /**
     * Whole dataset build: length filter, family split, truncation, pair enumeration and
     * sampling, dot-plots, stitched images and both manifests.
     */
    inline BuildSummary cmd_build(const RunConfig& cfg)
    {
        cfg.validate();
        const auto corpus = filter_by_length(load_family_dir(cfg.input), cfg.min_length, cfg.max_length);
        if (corpus.family_count() < 2)
            throw data_error("need at least two families after the length filter, have "
                             + std::to_string(corpus.family_count()));

        BuildSummary summary;
        summary.families_retained = corpus.family_count();
        summary.split = split_families(corpus, cfg.seed_for("split"));
        const auto truncated = truncate_families(corpus, cfg.cap, cfg.seed_for("truncate"));
        auto plan = plan_dataset(truncated, summary.split, cfg.repeats, cfg.seed_for("diff_train"));

        const auto source = cfg.bppm_dir ? tsv_source(*cfg.bppm_dir) : fold_source(cfg.fold);
        const ImageOptions opts{cfg.side, cfg.jobs};
        std::filesystem::create_directories(cfg.out);

        // Siamese rows reference the same sequences as the CNN rows, so one cache serves both.
        const auto cache = render_dotplots(plan.cnn, truncated, source, cfg.out, opts);
        build_images(plan.cnn, cache, cfg.out, opts);
        build_siamese_manifest(plan.siamese, cfg.out);

        summary.cnn_counts = count_pairs(plan.cnn);
        summary.siamese_counts = count_pairs(plan.siamese);
        summary.table = "families retained: " + std::to_string(summary.families_retained) + "\n\nCNN dataset\n"
                        + format_count_table(summary.cnn_counts, summary.split) + "\nSiamese dataset\n"
                        + format_count_table(summary.siamese_counts, summary.split);
        return summary;
    }

    inline BatchPlan cmd_plan(const std::filesystem::path& manifest, ClassRatio ratio, std::size_t batch_size,
                              std::size_t iterations, std::uint64_t seed, const std::filesystem::path& out)
    {
        auto plan = make_batch_plan(read_manifest(manifest), ratio, batch_size, iterations, seed);
        write_file_atomic(out, to_json(plan).dump() + "\n");
        return plan;
    }

    /// Writes report.json, report.txt and roc_<split>.csv into out_dir; returns the table.
    inline std::string cmd_eval(const std::filesystem::path& predictions, const std::filesystem::path& manifest,
                                double threshold, const std::filesystem::path& out_dir)
    {
        const auto preds = parse_predictions(read_text_file(predictions));
        const auto reports = evaluate_by_split(preds, read_manifest(manifest), threshold);
        std::filesystem::create_directories(out_dir);

        nlohmann::ordered_json j;
        j["threshold"] = threshold;
        auto& arr = j["splits"] = nlohmann::ordered_json::array();
        for (const auto& r : reports)
        {
            arr.push_back(to_json(r));
            if (r.roc)
                write_file_atomic(out_dir / (std::string("roc_") + to_string(r.split) + ".csv"),
                                  format_roc_csv(*r.roc));
        }
        const auto table = format_report_table(reports);
        write_file_atomic(out_dir / "report.json", j.dump(2) + "\n");
        write_file_atomic(out_dir / "report.txt", table);
        return table;
    }

    /// Structure list, Z from both routes, and the max DP-vs-enumeration BPPM difference.
    inline std::string cmd_oracle(const std::string& residues, const FoldParams& params)
    {
        auto parsed = parse_fasta(">query\n" + residues, "query");
        const auto& seq = parsed.front();
        const auto structures = enumerate_structures(seq, params);
        const auto tables = partition_function(seq, params);
        const auto dp = base_pair_probabilities(seq, params);
        const auto oracle = oracle_bppm(seq, params);

        double z_enum = 0.0;
        std::ostringstream os;
        os.precision(17);
        os << seq.residues() << '\n';
        for (const auto& [s, w] : structures)
        {
            os << s.dot_bracket(seq.length()) << "  " << w << '\n';
            z_enum += w;
        }
        os << "structures: " << structures.size() << '\n'
           << "Z (dp): " << tables.z() << '\n'
           << "Z (enumeration): " << z_enum << '\n'
           << "max |dp - oracle|: " << dp.max_abs_diff(oracle) << '\n';
        return os.str();
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_COMMANDS_HPP
