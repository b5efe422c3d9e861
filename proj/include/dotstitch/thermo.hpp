#ifndef DOTSTITCH_THERMO_HPP
#define DOTSTITCH_THERMO_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dotstitch/common.hpp"
#include "dotstitch/seqcore.hpp"

namespace dotstitch
{
    /**
     * Pair-weight energy model.
     *
     * Every base pair contributes a multiplicative Boltzmann weight that depends only on
     * its pair type. A pair (i,j) is allowed when it is canonical (GC, AU or GU in either
     * orientation) and encloses at least `theta` unpaired residues, j - i - 1 >= theta.
     */
    struct FoldParams
    {
        int theta = 3;
        double w_gc = 3.0;
        double w_au = 2.0;
        double w_gu = 1.0;

        void validate() const
        {
            if (theta < 0)
                throw usage_error("theta must be >= 0");
            if (!(w_gc > 0) || !(w_au > 0) || !(w_gu > 0) || !std::isfinite(w_gc) || !std::isfinite(w_au)
                || !std::isfinite(w_gu))
                throw usage_error("pair weights must be positive and finite");
        }

        /// Weight of the residue pair (a,b); 0 for non-canonical pairs.
        double pair_weight(char a, char b) const noexcept
        {
            if (a > b)
                std::swap(a, b);
            if (a == 'C' && b == 'G')
                return w_gc;
            if (a == 'A' && b == 'U')
                return w_au;
            if (a == 'G' && b == 'U')
                return w_gu;
            return 0.0;
        }

        /// Weight of pairing 1-based positions i < j of `seq`, 0 when not allowed.
        double pair_weight(const RnaSequence& seq, std::size_t i, std::size_t j) const
        {
            if (i >= j || j - i - 1 < static_cast<std::size_t>(theta))
                return 0.0;
            return pair_weight(seq.at(i), seq.at(j));
        }
    };

    /// Set of 1-based pairs (i,j), i < j, kept sorted.
    struct SecondaryStructure
    {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;

        friend bool operator==(const SecondaryStructure&, const SecondaryStructure&) = default;

        /// Dot-bracket rendering for a sequence of length n.
        std::string dot_bracket(std::size_t n) const
        {
            std::string out(n, '.');
            for (auto [i, j] : pairs)
            {
                out.at(i - 1) = '(';
                out.at(j - 1) = ')';
            }
            return out;
        }
    };

    /// Product of pair weights; throws data_error when the structure is not valid for `seq`.
    inline double structure_weight(const SecondaryStructure& s, const RnaSequence& seq, const FoldParams& params)
    {
        const auto n = seq.length();
        std::vector<int> partner(n + 1, 0);
        double w = 1.0;
        for (auto [i, j] : s.pairs)
        {
            if (i < 1 || j > n || i >= j)
                throw data_error("pair out of range");
            if (partner[i] || partner[j])
                throw data_error("overlapping pairs at (" + std::to_string(i) + "," + std::to_string(j) + ")");
            partner[i] = static_cast<int>(j);
            partner[j] = static_cast<int>(i);
            const double pw = params.pair_weight(seq, i, j);
            if (pw == 0.0)
                throw data_error("disallowed pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
            w *= pw;
        }
        // Pseudoknot check: pairs must nest like brackets.
        std::vector<std::size_t> stack;
        for (std::size_t k = 1; k <= n; ++k)
        {
            if (partner[k] == 0)
                continue;
            if (static_cast<std::size_t>(partner[k]) > k)
                stack.push_back(k);
            else
            {
                if (stack.empty() || stack.back() != static_cast<std::size_t>(partner[k]))
                    throw data_error("pseudoknotted structure");
                stack.pop_back();
            }
        }
        return w;
    }

    /// Symmetric n x n pairing-probability matrix with 1-based accessors.
    class Bppm
    {
    public:
        Bppm() = default;
        explicit Bppm(std::size_t n) : n_(n), p_(n * n, 0.0) {}

        std::size_t size() const noexcept { return n_; }

        double operator()(std::size_t i, std::size_t j) const { return p_[(i - 1) * n_ + (j - 1)]; }

        /// Sets p(i,j) and p(j,i).
        void set(std::size_t i, std::size_t j, double v)
        {
            p_[(i - 1) * n_ + (j - 1)] = v;
            p_[(j - 1) * n_ + (i - 1)] = v;
        }

        double row_sum(std::size_t i) const
        {
            double s = 0.0;
            for (std::size_t j = 1; j <= n_; ++j)
                s += (*this)(i, j);
            return s;
        }

        double max_abs_diff(const Bppm& other) const
        {
            if (other.n_ != n_)
                throw data_error("BPPM size mismatch");
            double d = 0.0;
            for (std::size_t k = 0; k < p_.size(); ++k)
                d = std::max(d, std::abs(p_[k] - other.p_[k]));
            return d;
        }

        const std::vector<double>& values() const noexcept { return p_; }

        friend bool operator==(const Bppm&, const Bppm&) = default;

    private:
        std::size_t n_ = 0;
        std::vector<double> p_;
    };

    /**
     * Inside and outside tables of the partition function.
     *
     * q(i,j) is the partition function of the subsequence i..j (1 for an empty range,
     * j = i - 1) and qb(i,j) that of i..j given that i pairs with j. q_out and qb_out
     * hold dZ/dq and dZ/dqb, so qb(i,j) * qb_out(i,j) is the summed weight of the
     * structures containing pair (i,j).
     */
    class PartitionTables
    {
    public:
        explicit PartitionTables(std::size_t n)
            : n_(n), stride_(n + 2), q_(stride_ * stride_, 0.0), qb_(q_.size(), 0.0), q_out_(q_.size(), 0.0),
              qb_out_(q_.size(), 0.0)
        {
        }

        std::size_t size() const noexcept { return n_; }
        double z() const { return q(1, n_); }

        double& q(std::size_t i, std::size_t j) { return q_[i * stride_ + j]; }
        double q(std::size_t i, std::size_t j) const { return q_[i * stride_ + j]; }
        double& qb(std::size_t i, std::size_t j) { return qb_[i * stride_ + j]; }
        double qb(std::size_t i, std::size_t j) const { return qb_[i * stride_ + j]; }
        double& q_out(std::size_t i, std::size_t j) { return q_out_[i * stride_ + j]; }
        double q_out(std::size_t i, std::size_t j) const { return q_out_[i * stride_ + j]; }
        double& qb_out(std::size_t i, std::size_t j) { return qb_out_[i * stride_ + j]; }
        double qb_out(std::size_t i, std::size_t j) const { return qb_out_[i * stride_ + j]; }

    private:
        std::size_t n_;
        std::size_t stride_;
        std::vector<double> q_, qb_, q_out_, qb_out_;
    };

    namespace detail
    {
        /// Inside pass: q(i,j) = q(i,j-1) + sum_k q(i,k-1) qb(k,j).
        inline void fill_inside(PartitionTables& t, const RnaSequence& seq, const FoldParams& params,
                                std::vector<double>& weight)
        {
            const auto n = seq.length();
            const std::size_t stride = n + 2;
            weight.assign(stride * stride, 0.0);
            for (std::size_t i = 1; i <= n; ++i)
                for (std::size_t j = i + 1; j <= n; ++j)
                    weight[i * stride + j] = params.pair_weight(seq, i, j);

            for (std::size_t i = 1; i <= n + 1; ++i)
                t.q(i, i - 1) = 1.0;

            const auto theta = static_cast<std::size_t>(params.theta);
            for (std::size_t d = 0; d < n; ++d)
            {
                for (std::size_t i = 1; i + d <= n; ++i)
                {
                    const auto j = i + d;
                    if (const double w = weight[i * stride + j]; w > 0.0)
                        t.qb(i, j) = w * t.q(i + 1, j - 1);
                    double sum = t.q(i, j - 1);
                    for (std::size_t k = i; k + theta + 1 <= j; ++k)
                    {
                        const double qb = t.qb(k, j);
                        if (qb != 0.0)
                            sum += t.q(i, k - 1) * qb;
                    }
                    t.q(i, j) = sum;
                }
            }
        }

        /// Reverse-mode sweep of the inside recursion, longest spans first.
        inline void fill_outside(PartitionTables& t, std::size_t theta, const std::vector<double>& weight)
        {
            const auto n = t.size();
            const std::size_t stride = n + 2;
            t.q_out(1, n) = 1.0;
            for (std::size_t d = n; d-- > 0;)
            {
                // Adjoints of q at span d are final: every consumer has a longer span.
                for (std::size_t i = 1; i + d <= n; ++i)
                {
                    const auto j = i + d;
                    const double a = t.q_out(i, j);
                    if (a == 0.0)
                        continue;
                    if (j - 1 >= i)
                        t.q_out(i, j - 1) += a;
                    for (std::size_t k = i; k + theta + 1 <= j; ++k)
                    {
                        const double qb = t.qb(k, j);
                        if (qb == 0.0)
                            continue;
                        t.qb_out(k, j) += a * t.q(i, k - 1);
                        if (k > i)
                            t.q_out(i, k - 1) += a * qb;
                    }
                }
                // qb at span d only feeds q at spans >= d, all handled above.
                for (std::size_t i = 1; i + d <= n; ++i)
                {
                    const auto j = i + d;
                    const double b = t.qb_out(i, j);
                    if (b == 0.0 || t.qb(i, j) == 0.0 || j < i + 2)
                        continue;
                    t.q_out(i + 1, j - 1) += b * weight[i * stride + j];
                }
            }
        }
    }  // namespace detail

    /// Inside tables and Z in O(l^3) time, O(l^2) memory. Throws data_error if Z overflows.
    inline PartitionTables partition_function(const RnaSequence& seq, const FoldParams& params)
    {
        params.validate();
        PartitionTables t(seq.length());
        std::vector<double> weight;
        detail::fill_inside(t, seq, params, weight);
        if (!std::isfinite(t.z()))
            throw data_error("partition function overflow for '" + seq.id() + "'");
        return t;
    }

    /// Pairing probabilities by inside-outside dynamic programming.
    inline Bppm base_pair_probabilities(const RnaSequence& seq, const FoldParams& params)
    {
        params.validate();
        const auto n = seq.length();
        PartitionTables t(n);
        std::vector<double> weight;
        detail::fill_inside(t, seq, params, weight);
        const double z = t.z();
        if (!std::isfinite(z))
            throw data_error("partition function overflow for '" + seq.id() + "'");
        detail::fill_outside(t, static_cast<std::size_t>(params.theta), weight);

        Bppm out(n);
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = i + 1; j <= n; ++j)
                if (const double qb = t.qb(i, j); qb != 0.0)
                    out.set(i, j, std::clamp(qb * t.qb_out(i, j) / z, 0.0, 1.0));
        return out;
    }

    inline constexpr std::size_t max_enumeration_length = 20;

    /**
     * Every valid pseudoknot-free structure (the empty one included) with its weight.
     *
     * Brute force: recurses on the first residue of each interval, which is independent
     * of the last-residue decomposition used by the DP.
     */
    inline std::vector<std::pair<SecondaryStructure, double>> enumerate_structures(const RnaSequence& seq,
                                                                                   const FoldParams& params)
    {
        params.validate();
        if (seq.length() > max_enumeration_length)
            throw usage_error("enumeration limited to length " + std::to_string(max_enumeration_length));

        using pair_list = std::vector<std::pair<std::size_t, std::size_t>>;
        std::function<std::vector<pair_list>(std::size_t, std::size_t)> rec =
            [&](std::size_t i, std::size_t j) -> std::vector<pair_list> {
            if (i > j)
                return {pair_list{}};
            auto out = rec(i + 1, j);
            for (std::size_t k = i + 1; k <= j; ++k)
            {
                if (params.pair_weight(seq, i, k) == 0.0)
                    continue;
                const auto inner = rec(i + 1, k - 1);
                const auto rest = rec(k + 1, j);
                for (const auto& a : inner)
                    for (const auto& b : rest)
                    {
                        pair_list s;
                        s.reserve(a.size() + b.size() + 1);
                        s.emplace_back(i, k);
                        s.insert(s.end(), a.begin(), a.end());
                        s.insert(s.end(), b.begin(), b.end());
                        out.push_back(std::move(s));
                    }
            }
            return out;
        };

        std::vector<std::pair<SecondaryStructure, double>> out;
        for (auto& pairs : rec(1, seq.length()))
        {
            std::sort(pairs.begin(), pairs.end());
            SecondaryStructure s{std::move(pairs)};
            const double w = structure_weight(s, seq, params);
            out.emplace_back(std::move(s), w);
        }
        return out;
    }

    /// Pairing probabilities summed directly over enumerate_structures.
    inline Bppm oracle_bppm(const RnaSequence& seq, const FoldParams& params)
    {
        const auto structures = enumerate_structures(seq, params);
        const auto n = seq.length();
        double z = 0.0;
        std::vector<double> acc(n * n, 0.0);
        for (const auto& [s, w] : structures)
        {
            z += w;
            for (auto [i, j] : s.pairs)
                acc[(i - 1) * n + (j - 1)] += w;
        }
        Bppm out(n);
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = i + 1; j <= n; ++j)
                if (acc[(i - 1) * n + (j - 1)] != 0.0)
                    out.set(i, j, acc[(i - 1) * n + (j - 1)] / z);
        return out;
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_THERMO_HPP
