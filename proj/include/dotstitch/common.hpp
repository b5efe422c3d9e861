#ifndef DOTSTITCH_COMMON_HPP
#define DOTSTITCH_COMMON_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dotstitch
{
    /// Malformed or inconsistent input data (bad FASTA, bad TSV, bad manifest...).
    struct data_error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    /// Filesystem or network failure.
    struct io_error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    /// Invalid arguments or configuration.
    struct usage_error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    using rng_type = std::mt19937_64;

    namespace detail
    {
        constexpr std::uint64_t fnv1a(std::string_view s) noexcept
        {
            std::uint64_t h = 0xcbf29ce484222325ULL;
            for (unsigned char ch : s)
            {
                h ^= ch;
                h *= 0x100000001b3ULL;
            }
            return h;
        }

        constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
        {
            x += 0x9e3779b97f4a7c15ULL;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            return x ^ (x >> 31);
        }
    }  // namespace detail

    /**
     * Per-stage seed derived from the global seed.
     *
     * stage_seed(g, name) = splitmix64(g XOR fnv1a64(name)). Stages can be rerun
     * independently and adding a stage never shifts another stage's stream.
     */
    constexpr std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage) noexcept
    {
        return detail::splitmix64(global_seed ^ detail::fnv1a(stage));
    }

    inline std::string read_text_file(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw io_error("cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        if (in.bad())
            throw io_error("read failed: " + path.string());
        return ss.str();
    }

    /// Writes to a sibling temp file and renames over `path`.
    inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes)
    {
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw io_error("cannot write " + tmp.string());
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!out)
                throw io_error("write failed: " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec)
            throw io_error("rename failed: " + path.string() + ": " + ec.message());
    }

    /// Maps an identifier onto a portable file stem ([A-Za-z0-9._-], everything else '_').
    inline std::string file_stem_for(std::string_view id)
    {
        std::string out(id);
        for (auto& ch : out)
        {
            const bool ok = (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9')
                            || ch == '.' || ch == '_' || ch == '-';
            if (!ok)
                ch = '_';
        }
        if (out.empty() || out == "." || out == "..")
            out.insert(0, "_");
        return out;
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_COMMON_HPP
