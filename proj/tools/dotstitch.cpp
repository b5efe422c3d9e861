#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dotstitch/dotstitch.hpp"

namespace
{
    using namespace dotstitch;

    struct FoldFlags
    {
        std::optional<int> theta;
        std::optional<double> w_gc, w_au, w_gu;

        void add_to(CLI::App& app)
        {
            app.add_option("--theta", theta, "minimum unpaired residues enclosed by a pair");
            app.add_option("--w-gc", w_gc, "GC pair weight");
            app.add_option("--w-au", w_au, "AU pair weight");
            app.add_option("--w-gu", w_gu, "GU pair weight");
        }

        void apply(FoldParams& p) const
        {
            if (theta)
                p.theta = *theta;
            if (w_gc)
                p.w_gc = *w_gc;
            if (w_au)
                p.w_au = *w_au;
            if (w_gu)
                p.w_gu = *w_gu;
        }
    };

    template <class T>
    void override_with(T& dst, const std::optional<T>& v)
    {
        if (v)
            dst = *v;
    }

    int run(int argc, char** argv)
    {
        CLI::App app{"RNA dot-plot pair dataset builder"};
        app.require_subcommand(1);

        std::optional<std::string> config_path;
        app.add_option("--config", config_path, "key = value config file; flags override it");

        // fetch
        auto* fetch = app.add_subcommand("fetch", "download family FASTA files");
        std::vector<std::string> accessions;
        std::optional<std::string> endpoint;
        std::string dest = "fasta";
        bool force = false;
        int attempts = 3;
        fetch->add_option("accessions", accessions, "family accessions")->required();
        fetch->add_option("--endpoint", endpoint, std::string("base URL; defaults to $") + rfam_url_env);
        fetch->add_option("--dest", dest, "destination directory");
        fetch->add_flag("--force", force, "re-download existing files");
        fetch->add_option("--attempts", attempts, "attempts per file");

        // bppm
        auto* bppm = app.add_subcommand("bppm", "fold sequences into BPPM TSVs and dot-plot PNGs");
        std::optional<std::string> bppm_input, bppm_out;
        std::optional<std::size_t> bppm_side, bppm_jobs;
        FoldFlags bppm_fold;
        bppm->add_option("--input", bppm_input, "directory of <family>.fasta files");
        bppm->add_option("--out", bppm_out, "output directory");
        bppm->add_option("--side", bppm_side, "dot-plot side after resizing");
        bppm->add_option("--jobs", bppm_jobs, "worker threads");
        bppm_fold.add_to(*bppm);

        // build
        auto* build = app.add_subcommand("build", "build the pair-image dataset and manifests");
        std::optional<std::string> b_input, b_out, b_bppm_dir, b_ratio;
        std::optional<std::size_t> b_min, b_max, b_cap, b_repeats, b_side, b_jobs;
        std::optional<std::uint64_t> b_seed, b_split_seed;
        FoldFlags b_fold;
        build->add_option("--input", b_input, "directory of <family>.fasta files");
        build->add_option("--out", b_out, "output directory");
        build->add_option("--bppm-dir", b_bppm_dir, "import <id>.tsv BPPMs instead of folding");
        build->add_option("--min-length", b_min);
        build->add_option("--max-length", b_max);
        build->add_option("--cap", b_cap, "family truncation size");
        build->add_option("--repeats", b_repeats, "different-family training repeats");
        build->add_option("--side", b_side, "image side");
        build->add_option("--jobs", b_jobs, "worker threads");
        build->add_option("--seed", b_seed, "global seed");
        build->add_option("--split-seed", b_split_seed, "override the derived split seed");
        build->add_flag("--print-config", "print the effective config and continue");
        b_fold.add_to(*build);

        // plan
        auto* plan = app.add_subcommand("plan", "write a ratio-controlled batch plan");
        std::string p_manifest;
        std::string p_output = "batch_plan.json";
        std::optional<std::string> p_ratio;
        std::optional<std::size_t> p_batch, p_iters;
        std::optional<std::uint64_t> p_seed;
        plan->add_option("--manifest", p_manifest, "CNN or Siamese manifest")->required();
        plan->add_option("--ratio", p_ratio, "r:1 or none");
        plan->add_option("--batch", p_batch, "batch size");
        plan->add_option("--iterations", p_iters);
        plan->add_option("--seed", p_seed, "global seed");
        plan->add_option("-o,--output", p_output, "plan file");

        // eval
        auto* eval = app.add_subcommand("eval", "score a predictions file");
        std::string e_preds, e_manifest;
        std::string e_out = "eval";
        std::optional<double> e_threshold;
        eval->add_option("--predictions", e_preds, "predictions JSONL")->required();
        eval->add_option("--manifest", e_manifest, "manifest JSONL")->required();
        eval->add_option("--threshold", e_threshold);
        eval->add_option("--out", e_out, "report directory");

        // oracle
        auto* oracle = app.add_subcommand("oracle", "compare the DP against exhaustive enumeration");
        std::string o_seq;
        FoldFlags o_fold;
        oracle->add_option("sequence", o_seq, "residues (length <= 20)")->required();
        o_fold.add_to(*oracle);

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::CallForHelp& e)
        {
            return app.exit(e);
        }
        catch (const CLI::ParseError& e)
        {
            app.exit(e);
            return exit_usage;
        }

        RunConfig cfg;
        if (config_path)
            cfg = load_config(*config_path);

        if (*fetch)
        {
            FetchOptions opts;
            opts.force = force;
            opts.attempts = attempts;
            for (const auto& p : cmd_fetch(accessions, resolve_endpoint(endpoint), dest, opts))
                std::cout << p.string() << '\n';
        }
        else if (*bppm)
        {
            if (bppm_input)
                cfg.input = *bppm_input;
            if (bppm_out)
                cfg.out = *bppm_out;
            override_with(cfg.side, bppm_side);
            override_with(cfg.jobs, bppm_jobs);
            bppm_fold.apply(cfg.fold);
            cfg.validate();
            const auto s = cmd_bppm(cfg.input, cfg.out, cfg.fold, cfg.side, cfg.jobs);
            std::cout << "computed " << s.computed << ", up to date " << s.skipped << '\n';
        }
        else if (*build)
        {
            if (b_input)
                cfg.input = *b_input;
            if (b_out)
                cfg.out = *b_out;
            if (b_bppm_dir)
                cfg.bppm_dir = std::filesystem::path(*b_bppm_dir);
            override_with(cfg.min_length, b_min);
            override_with(cfg.max_length, b_max);
            override_with(cfg.cap, b_cap);
            override_with(cfg.repeats, b_repeats);
            override_with(cfg.side, b_side);
            override_with(cfg.jobs, b_jobs);
            override_with(cfg.seed, b_seed);
            if (b_split_seed)
                cfg.split_seed = *b_split_seed;
            b_fold.apply(cfg.fold);
            if (build->count("--print-config"))
                std::cout << format_config(cfg) << '\n';
            std::cout << cmd_build(cfg).table;
        }
        else if (*plan)
        {
            if (p_ratio)
                cfg.ratio = ClassRatio::parse(*p_ratio);
            override_with(cfg.batch_size, p_batch);
            override_with(cfg.iterations, p_iters);
            override_with(cfg.seed, p_seed);
            cfg.validate();
            const auto bp = cmd_plan(p_manifest, cfg.ratio, cfg.batch_size, cfg.iterations, cfg.seed_for("plan"),
                                     p_output);
            std::cout << "wrote " << bp.batches.size() << " batches to " << p_output << '\n';
        }
        else if (*eval)
        {
            override_with(cfg.threshold, e_threshold);
            cfg.validate();
            std::cout << cmd_eval(e_preds, e_manifest, cfg.threshold, e_out);
        }
        else if (*oracle)
        {
            o_fold.apply(cfg.fold);
            std::cout << cmd_oracle(o_seq, cfg.fold);
        }
        return exit_ok;
    }
}  // namespace

int main(int argc, char** argv)
{
    try
    {
        return run(argc, argv);
    }
    catch (const dotstitch::usage_error& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return dotstitch::exit_usage;
    }
    catch (const dotstitch::data_error& e)
    {
        std::cerr << "data error: " << e.what() << '\n';
        return dotstitch::exit_data;
    }
    catch (const dotstitch::io_error& e)
    {
        std::cerr << "I/O error: " << e.what() << '\n';
        return dotstitch::exit_io;
    }
    catch (const std::filesystem::filesystem_error& e)
    {
        std::cerr << "I/O error: " << e.what() << '\n';
        return dotstitch::exit_io;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return dotstitch::exit_data;
    }
}
