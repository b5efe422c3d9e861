#ifndef DOTSTITCH_SEQCORE_HPP
#define DOTSTITCH_SEQCORE_HPP

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dotstitch/common.hpp"

namespace dotstitch
{
    /// One RNA: identifier, family accession and residues over {A,C,G,U}.
    class RnaSequence
    {
    public:
        RnaSequence(std::string id, std::string family, std::string residues)
            : id_(std::move(id)), family_(std::move(family)), residues_(std::move(residues))
        {
            if (residues_.empty())
                throw data_error("sequence '" + id_ + "' has no residues");
            for (char ch : residues_)
            {
                if (ch != 'A' && ch != 'C' && ch != 'G' && ch != 'U')
                    throw data_error("sequence '" + id_ + "' contains invalid residue '" + std::string(1, ch) + "'");
            }
        }

        const std::string& id() const noexcept { return id_; }
        const std::string& family() const noexcept { return family_; }
        const std::string& residues() const noexcept { return residues_; }
        std::size_t length() const noexcept { return residues_.size(); }

        /// 1-based residue access.
        char at(std::size_t i) const { return residues_.at(i - 1); }

        friend bool operator==(const RnaSequence&, const RnaSequence&) = default;

    private:
        std::string id_;
        std::string family_;
        std::string residues_;
    };

    /// Families keyed by accession (lexicographic); members keep insertion order.
    class FamilyCollection
    {
    public:
        using family_map = std::map<std::string, std::vector<RnaSequence>>;

        FamilyCollection() = default;

        /// Appends a sequence under its own family; rejects duplicate ids.
        void add(RnaSequence seq)
        {
            if (!ids_.insert(seq.id()).second)
                throw data_error("duplicate sequence id '" + seq.id() + "'");
            auto key = seq.family();
            families_[key].push_back(std::move(seq));
        }

        const family_map& families() const noexcept { return families_; }
        std::size_t family_count() const noexcept { return families_.size(); }
        bool empty() const noexcept { return families_.empty(); }

        std::size_t sequence_count() const noexcept
        {
            std::size_t n = 0;
            for (const auto& [_, members] : families_)
                n += members.size();
            return n;
        }

        const std::vector<RnaSequence>& members(const std::string& family) const
        {
            auto it = families_.find(family);
            if (it == families_.end())
                throw data_error("unknown family '" + family + "'");
            return it->second;
        }

        bool contains_id(const std::string& id) const { return ids_.count(id) != 0; }

        /// Lookup by id; linear scan.
        const RnaSequence& find(const std::string& id) const
        {
            for (const auto& [_, members] : families_)
                for (const auto& s : members)
                    if (s.id() == id)
                        return s;
            throw data_error("unknown sequence id '" + id + "'");
        }

        std::vector<std::string> accessions() const
        {
            std::vector<std::string> out;
            out.reserve(families_.size());
            for (const auto& [acc, _] : families_)
                out.push_back(acc);
            return out;
        }

        friend bool operator==(const FamilyCollection& a, const FamilyCollection& b)
        {
            return a.families_ == b.families_;
        }

    private:
        family_map families_;
        std::unordered_set<std::string> ids_;
    };

    /**
     * Parses FASTA text into sequences of the given family.
     *
     * The id is the first whitespace-delimited token of the header. Wrapped lines are
     * joined, case is folded to upper and T becomes U. Ambiguity codes are rejected.
     */
    inline std::vector<RnaSequence> parse_fasta(std::string_view text, const std::string& family)
    {
        std::vector<RnaSequence> out;
        std::string id;
        std::string residues;
        bool in_record = false;

        auto flush = [&] {
            if (!in_record)
                return;
            if (residues.empty())
                throw data_error("record '" + id + "' has an empty body");
            out.emplace_back(id, family, std::move(residues));
            residues.clear();
        };

        std::size_t pos = 0;
        while (pos <= text.size())
        {
            auto eol = text.find('\n', pos);
            if (eol == std::string_view::npos)
                eol = text.size();
            auto line = text.substr(pos, eol - pos);
            pos = eol + 1;
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);

            if (!line.empty() && line.front() == '>')
            {
                flush();
                auto header = line.substr(1);
                auto b = header.find_first_not_of(" \t");
                if (b == std::string_view::npos)
                    throw data_error("FASTA header without id");
                auto e = header.find_first_of(" \t", b);
                id = std::string(header.substr(b, e == std::string_view::npos ? e : e - b));
                in_record = true;
                continue;
            }

            for (char ch : line)
            {
                if (ch == ' ' || ch == '\t')
                    continue;
                if (!in_record)
                    throw data_error("FASTA sequence data before first header");
                char up = (ch >= 'a' && ch <= 'z') ? static_cast<char>(ch - 'a' + 'A') : ch;
                if (up == 'T')
                    up = 'U';
                if (up != 'A' && up != 'C' && up != 'G' && up != 'U')
                    throw data_error("record '" + id + "' contains invalid character '" + std::string(1, ch) + "'");
                residues.push_back(up);
            }
        }
        flush();
        return out;
    }

    /// Writes sequences as FASTA with 60-column lines.
    inline std::string to_fasta(const std::vector<RnaSequence>& seqs)
    {
        std::string out;
        for (const auto& s : seqs)
        {
            out += '>';
            out += s.id();
            out += '\n';
            for (std::size_t i = 0; i < s.length(); i += 60)
            {
                out += s.residues().substr(i, 60);
                out += '\n';
            }
        }
        return out;
    }

    /// Loads every `<family>.fasta` in `dir` (lexicographic order).
    inline FamilyCollection load_family_dir(const std::filesystem::path& dir)
    {
        namespace fs = std::filesystem;
        std::error_code ec;
        if (!fs::is_directory(dir, ec))
            throw io_error("not a directory: " + dir.string());

        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
        {
            if (entry.is_regular_file() && entry.path().extension() == ".fasta")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());

        FamilyCollection out;
        for (const auto& file : files)
        {
            const auto family = file.stem().string();
            for (auto& seq : parse_fasta(read_text_file(file), family))
                out.add(std::move(seq));
        }
        return out;
    }

    /// Keeps sequences with min_len <= length <= max_len; drops emptied families.
    inline FamilyCollection filter_by_length(const FamilyCollection& c, std::size_t min_len, std::size_t max_len)
    {
        if (min_len > max_len)
            throw usage_error("length filter: min > max");
        FamilyCollection out;
        for (const auto& [_, members] : c.families())
            for (const auto& s : members)
                if (s.length() >= min_len && s.length() <= max_len)
                    out.add(s);
        return out;
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_SEQCORE_HPP
