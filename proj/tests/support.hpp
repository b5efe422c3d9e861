#ifndef DOTSTITCH_TESTS_SUPPORT_HPP
#define DOTSTITCH_TESTS_SUPPORT_HPP

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "dotstitch/evalkit.hpp"
#include "dotstitch/seqcore.hpp"

namespace dotstitch::testing
{
    /// Fresh directory under the system temp dir, removed on destruction.
    class TempDir
    {
    public:
        TempDir()
        {
            static std::atomic<int> counter{0};
            std::random_device rd;
            path_ = std::filesystem::temp_directory_path()
                    / ("dotstitch-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
            std::filesystem::create_directories(path_);
        }
        ~TempDir()
        {
            std::error_code ec;
            std::filesystem::remove_all(path_, ec);
        }
        TempDir(const TempDir&) = delete;
        TempDir& operator=(const TempDir&) = delete;

        const std::filesystem::path& path() const noexcept { return path_; }
        std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

    private:
        std::filesystem::path path_;
    };

    inline void write_text(const std::filesystem::path& p, const std::string& text)
    {
        std::filesystem::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << text;
    }

    inline std::string random_rna(std::size_t n, std::mt19937_64& rng)
    {
        static constexpr char alphabet[] = {'A', 'C', 'G', 'U'};
        std::uniform_int_distribution<int> d(0, 3);
        std::string s(n, 'A');
        for (auto& ch : s)
            ch = alphabet[d(rng)];
        return s;
    }

    inline char complement(char b)
    {
        switch (b)
        {
            case 'A': return 'U';
            case 'U': return 'A';
            case 'G': return 'C';
            default: return 'G';
        }
    }

    /**
     * Toy corpus: each family has a template with two designed hairpin stems at
     * family-specific offsets; members are point-mutated copies (~8% of loop residues)
     * with lengths in [200, 260]. Writes `<dir>/TOY<k>.fasta`.
     */
    inline void write_toy_corpus(const std::filesystem::path& dir, std::size_t families, std::size_t per_family,
                                 std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::filesystem::create_directories(dir);
        for (std::size_t f = 0; f < families; ++f)
        {
            const std::size_t len = 200 + (f * 37) % 61;
            std::string tmpl = random_rna(len, rng);
            std::vector<bool> locked(len, false);
            for (int stem = 0; stem < 2; ++stem)
            {
                const std::size_t arm = 8 + (f + stem) % 5;
                const std::size_t start = 10 + stem * (len / 2) + (f * 13) % 40;
                const std::size_t loop = 4 + f % 4;
                for (std::size_t k = 0; k < arm; ++k)
                {
                    const auto i = start + k;
                    const auto j = start + 2 * arm + loop - 1 - k;
                    tmpl[j] = complement(tmpl[i]);
                    locked[i] = locked[j] = true;
                }
            }
            std::string fasta;
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (std::size_t m = 0; m < per_family; ++m)
            {
                std::string s = tmpl;
                for (std::size_t k = 0; k < s.size(); ++k)
                    if (!locked[k] && u(rng) < 0.08)
                        s[k] = random_rna(1, rng)[0];
                fasta += ">TOY" + std::to_string(f) + "_" + std::to_string(m) + "\n" + s + "\n";
            }
            write_text(dir / ("TOY" + std::to_string(f) + ".fasta"), fasta);
        }
    }

    /// Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie), by brute force.
    inline double rank_auc(const std::vector<PredictionRecord>& preds)
    {
        double wins = 0.0;
        std::size_t pairs = 0;
        for (const auto& p : preds)
        {
            if (p.label != Label::same)
                continue;
            for (const auto& n : preds)
            {
                if (n.label != Label::different)
                    continue;
                ++pairs;
                if (p.score > n.score)
                    wins += 1.0;
                else if (p.score == n.score)
                    wins += 0.5;
            }
        }
        return wins / static_cast<double>(pairs);
    }

    inline std::string file_bytes(const std::filesystem::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
}  // namespace dotstitch::testing

#endif  // DOTSTITCH_TESTS_SUPPORT_HPP
