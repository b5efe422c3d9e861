#ifndef DOTSTITCH_FETCH_HPP
#define DOTSTITCH_FETCH_HPP

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <thread>

#include <httplib.h>

#include "dotstitch/common.hpp"

namespace dotstitch
{
    inline constexpr const char* rfam_url_env = "DOTSTITCH_RFAM_URL";

    struct FetchOptions
    {
        bool force = false;
        int attempts = 3;
        std::chrono::milliseconds initial_backoff{200};
        std::chrono::seconds timeout{30};
    };

    /// Endpoint from an explicit flag, falling back to DOTSTITCH_RFAM_URL.
    inline std::string resolve_endpoint(const std::optional<std::string>& flag)
    {
        if (flag && !flag->empty())
            return *flag;
        if (const char* env = std::getenv(rfam_url_env); env && *env)
            return env;
        throw usage_error(std::string("no endpoint given (use --endpoint or ") + rfam_url_env + ")");
    }

    namespace detail
    {
        struct Endpoint
        {
            std::string origin;  // scheme://host[:port]
            std::string prefix;  // path without trailing slash
        };

        inline Endpoint split_endpoint(const std::string& url)
        {
            static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
            std::smatch m;
            if (!std::regex_match(url, m, re))
                throw usage_error("malformed endpoint URL '" + url + "'");
            Endpoint ep{m[1].str(), m[2].matched ? m[2].str() : std::string{}};
            while (!ep.prefix.empty() && ep.prefix.back() == '/')
                ep.prefix.pop_back();
            return ep;
        }

        inline bool well_formed_accession(const std::string& acc)
        {
            static const std::regex re(R"(^[A-Za-z0-9_.-]+$)");
            return std::regex_match(acc, re);
        }
    }  // namespace detail

    /**
     * Downloads `<endpoint>/<accession>.fasta` into `dest/<accession>.fasta`.
     *
     * An existing nonempty file is reused without any request unless `force` is set.
     * Failed requests are retried with exponential backoff; the file is written
     * atomically so a failed download never leaves a partial file behind.
     */
    inline std::filesystem::path fetch_family(const std::string& accession, const std::string& endpoint,
                                              const std::filesystem::path& dest, const FetchOptions& opts = {})
    {
        namespace fs = std::filesystem;
        if (!detail::well_formed_accession(accession))
            throw usage_error("malformed accession '" + accession + "'");

        const auto target = dest / (accession + ".fasta");
        std::error_code ec;
        if (!opts.force && fs::is_regular_file(target, ec) && fs::file_size(target, ec) > 0)
            return target;

        const auto ep = detail::split_endpoint(endpoint);
        httplib::Client client(ep.origin);
        client.set_connection_timeout(opts.timeout);
        client.set_read_timeout(opts.timeout);
        client.set_follow_location(true);

        const auto path = ep.prefix + "/" + accession + ".fasta";
        std::string last_error;
        auto backoff = opts.initial_backoff;
        for (int attempt = 0; attempt < std::max(1, opts.attempts); ++attempt)
        {
            if (attempt > 0)
            {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            auto res = client.Get(path);
            if (!res)
            {
                last_error = "request failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200)
            {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->body.empty())
                throw io_error("empty payload for " + accession);

            fs::create_directories(dest, ec);
            write_file_atomic(target, res->body);
            return target;
        }
        throw io_error("fetching " + accession + " from " + endpoint + " failed: " + last_error);
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_FETCH_HPP
