#ifndef DOTSTITCH_CONFIG_HPP
#define DOTSTITCH_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "dotstitch/common.hpp"
#include "dotstitch/dotplot.hpp"
#include "dotstitch/evalkit.hpp"
#include "dotstitch/thermo.hpp"

namespace dotstitch
{
    /**
     * Everything a pipeline run depends on. Defaults are the reference dataset settings:
     * lengths 200-260, families capped at 30 members, 20 different-family repeats, 224 px
     * images, 4:1 batches of 320.
     *
     * File format: one `key = value` per line, `#` starts a comment line. Keys are the
     * field names below; unknown keys are rejected.
     */
    struct RunConfig
    {
        std::filesystem::path input = "fasta";
        std::filesystem::path out = "out";
        std::optional<std::filesystem::path> bppm_dir;  // import <stem>.tsv instead of folding
        std::size_t min_length = 200;
        std::size_t max_length = 260;
        FoldParams fold;
        std::uint64_t seed = 0;
        std::optional<std::uint64_t> split_seed;
        std::size_t cap = 30;
        std::size_t repeats = 20;
        std::size_t side = default_image_side;
        ClassRatio ratio = ClassRatio::of(4);
        std::size_t batch_size = 320;
        std::size_t iterations = 600;
        std::size_t jobs = 1;
        double threshold = 0.5;

        std::uint64_t seed_for(std::string_view stage) const
        {
            if (stage == "split" && split_seed)
                return *split_seed;
            return stage_seed(seed, stage);
        }

        /// Applies one key/value pair.
        void set(std::string_view key, std::string_view value)
        {
            auto num = [&](auto& dst) {
                using T = std::remove_reference_t<decltype(dst)>;
                T v{};
                auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
                if (ec != std::errc{} || p != value.data() + value.size())
                    throw usage_error("bad value for '" + std::string(key) + "': '" + std::string(value) + "'");
                dst = v;
            };
            if (key == "input")
                input = std::string(value);
            else if (key == "out")
                out = std::string(value);
            else if (key == "bppm_dir")
                bppm_dir = value.empty() ? std::nullopt : std::optional<std::filesystem::path>(std::string(value));
            else if (key == "min_length")
                num(min_length);
            else if (key == "max_length")
                num(max_length);
            else if (key == "theta")
                num(fold.theta);
            else if (key == "w_gc")
                num(fold.w_gc);
            else if (key == "w_au")
                num(fold.w_au);
            else if (key == "w_gu")
                num(fold.w_gu);
            else if (key == "seed")
                num(seed);
            else if (key == "split_seed")
            {
                std::uint64_t v = 0;
                num(v);
                split_seed = v;
            }
            else if (key == "cap")
                num(cap);
            else if (key == "repeats")
                num(repeats);
            else if (key == "side")
                num(side);
            else if (key == "ratio")
                ratio = ClassRatio::parse(value);
            else if (key == "batch_size")
                num(batch_size);
            else if (key == "iterations")
                num(iterations);
            else if (key == "jobs")
                num(jobs);
            else if (key == "threshold")
                num(threshold);
            else
                throw usage_error("unknown config key '" + std::string(key) + "'");
        }

        void validate() const
        {
            fold.validate();
            if (min_length > max_length)
                throw usage_error("min_length > max_length");
            if (cap < 2)
                throw usage_error("cap must be >= 2");
            if (side == 0)
                throw usage_error("side must be >= 1");
            if (batch_size == 0)
                throw usage_error("batch_size must be >= 1");
            if (!(threshold >= 0.0 && threshold <= 1.0))
                throw usage_error("threshold must lie in [0,1]");
        }
    };

    inline std::string_view trim(std::string_view s)
    {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos)
            return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    inline void apply_config_text(RunConfig& cfg, std::string_view text)
    {
        std::size_t pos = 0;
        std::size_t lineno = 0;
        while (pos < text.size())
        {
            auto eol = text.find('\n', pos);
            if (eol == std::string_view::npos)
                eol = text.size();
            const auto line = trim(text.substr(pos, eol - pos));
            pos = eol + 1;
            ++lineno;
            if (line.empty() || line.front() == '#')
                continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw usage_error("config line " + std::to_string(lineno) + ": expected key = value");
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    inline RunConfig load_config(const std::filesystem::path& path)
    {
        RunConfig cfg;
        apply_config_text(cfg, read_text_file(path));
        return cfg;
    }

    inline std::string format_config(const RunConfig& c)
    {
        std::ostringstream os;
        os.precision(17);
        os << "input = " << c.input.string() << '\n'
           << "out = " << c.out.string() << '\n';
        if (c.bppm_dir)
            os << "bppm_dir = " << c.bppm_dir->string() << '\n';
        os << "min_length = " << c.min_length << '\n'
           << "max_length = " << c.max_length << '\n'
           << "theta = " << c.fold.theta << '\n'
           << "w_gc = " << c.fold.w_gc << '\n'
           << "w_au = " << c.fold.w_au << '\n'
           << "w_gu = " << c.fold.w_gu << '\n'
           << "seed = " << c.seed << '\n';
        if (c.split_seed)
            os << "split_seed = " << *c.split_seed << '\n';
        os << "cap = " << c.cap << '\n'
           << "repeats = " << c.repeats << '\n'
           << "side = " << c.side << '\n'
           << "ratio = " << c.ratio.str() << '\n'
           << "batch_size = " << c.batch_size << '\n'
           << "iterations = " << c.iterations << '\n'
           << "jobs = " << c.jobs << '\n'
           << "threshold = " << c.threshold << '\n';
        return os.str();
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_CONFIG_HPP
