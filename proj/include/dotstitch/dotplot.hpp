#ifndef DOTSTITCH_DOTPLOT_HPP
#define DOTSTITCH_DOTPLOT_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <png.h>

#include "dotstitch/common.hpp"
#include "dotstitch/thermo.hpp"

namespace dotstitch
{
    /// 8-bit single-channel raster, row-major, 0-based coordinates.
    class GrayImage
    {
    public:
        GrayImage() = default;
        GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0)
            : width_(width), height_(height), pixels_(width * height, fill)
        {
        }
        GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
            : width_(width), height_(height), pixels_(std::move(pixels))
        {
            if (pixels_.size() != width_ * height_)
                throw data_error("pixel buffer does not match image size");
        }

        std::size_t width() const noexcept { return width_; }
        std::size_t height() const noexcept { return height_; }
        bool square() const noexcept { return width_ == height_; }

        std::uint8_t operator()(std::size_t r, std::size_t c) const { return pixels_[r * width_ + c]; }
        std::uint8_t& operator()(std::size_t r, std::size_t c) { return pixels_[r * width_ + c]; }

        const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

        GrayImage transposed() const
        {
            GrayImage out(height_, width_);
            for (std::size_t r = 0; r < height_; ++r)
                for (std::size_t c = 0; c < width_; ++c)
                    out(c, r) = (*this)(r, c);
            return out;
        }

        friend bool operator==(const GrayImage&, const GrayImage&) = default;

    private:
        std::size_t width_ = 0;
        std::size_t height_ = 0;
        std::vector<std::uint8_t> pixels_;
    };

    inline constexpr std::size_t default_image_side = 224;

    /// round(255 p), half-up.
    inline std::uint8_t intensity(double p) noexcept
    {
        const double v = std::floor(255.0 * std::clamp(p, 0.0, 1.0) + 0.5);
        return static_cast<std::uint8_t>(v);
    }

    /// One pixel per BPPM cell: pixel(r,c) = round(255 p(r+1,c+1)).
    inline GrayImage bppm_to_dotplot(const Bppm& b)
    {
        const auto n = b.size();
        GrayImage img(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                img(r, c) = intensity(b(r + 1, c + 1));
        return img;
    }

    /**
     * Bilinear resize of a square image with align-corners sampling.
     *
     * Target (r,c) samples source (r (h-1)/(side-1), c (w-1)/(side-1)), or (0,0) when
     * side is 1. The blend is rounded half-up. Same-size resizing returns the input.
     */
    inline GrayImage resize_bilinear(const GrayImage& img, std::size_t side)
    {
        if (!img.square())
            throw data_error("resize_bilinear: input is not square");
        if (side == 0)
            throw usage_error("resize_bilinear: side must be >= 1");
        if (img.width() == 0)
            throw data_error("resize_bilinear: empty image");
        if (side == img.width())
            return img;

        const auto src = img.width();

        std::vector<std::size_t> lo(side), hi(side);
        std::vector<double> frac(side);
        for (std::size_t t = 0; t < side; ++t)
        {
            const double x = side == 1 ? 0.0 : static_cast<double>(t * (src - 1)) / static_cast<double>(side - 1);
            const auto x0 = std::min(static_cast<std::size_t>(std::floor(x)), src - 1);
            lo[t] = x0;
            hi[t] = std::min(x0 + 1, src - 1);
            frac[t] = x - static_cast<double>(x0);
        }

        GrayImage out(side, side);
        for (std::size_t r = 0; r < side; ++r)
        {
            const double fy = frac[r];
            for (std::size_t c = 0; c < side; ++c)
            {
                const double fx = frac[c];
                const double top = (1.0 - fx) * img(lo[r], lo[c]) + fx * img(lo[r], hi[c]);
                const double bottom = (1.0 - fx) * img(hi[r], lo[c]) + fx * img(hi[r], hi[c]);
                const double v = (1.0 - fy) * top + fy * bottom;
                out(r, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
            }
        }
        return out;
    }

    /// Strict lower triangle from `lower`, strict upper triangle from `upper`, zero diagonal.
    inline GrayImage stitch(const GrayImage& lower, const GrayImage& upper)
    {
        if (!lower.square() || !upper.square() || lower.width() != upper.width())
            throw data_error("stitch: images must be square with equal sides");
        const auto s = lower.width();
        GrayImage out(s, s);
        for (std::size_t r = 0; r < s; ++r)
            for (std::size_t c = 0; c < s; ++c)
                out(r, c) = r > c ? lower(r, c) : (r < c ? upper(r, c) : 0);
        return out;
    }

    inline constexpr int png_compression_level = 6;

    namespace detail
    {
        struct FileCloser
        {
            void operator()(std::FILE* f) const noexcept { std::fclose(f); }
        };
        using file_ptr = std::unique_ptr<std::FILE, FileCloser>;

        [[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg)
        {
            auto* err = static_cast<std::string*>(png_get_error_ptr(png));
            if (err)
                *err = msg;
            png_longjmp(png, 1);
        }

        inline void png_warning_fn(png_structp, png_const_charp) {}
    }  // namespace detail

    /// 8-bit grayscale, non-interlaced PNG with pinned compression and filter settings.
    inline void write_png(const GrayImage& img, const std::filesystem::path& path)
    {
        if (img.width() == 0 || img.height() == 0)
            throw data_error("write_png: empty image");
        detail::file_ptr fp(std::fopen(path.c_str(), "wb"));
        if (!fp)
            throw io_error("cannot write " + path.string());

        std::string err;
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn,
                                                  detail::png_warning_fn);
        if (!png)
            throw io_error("png_create_write_struct failed");
        png_infop info = png_create_info_struct(png);
        if (!info)
        {
            png_destroy_write_struct(&png, nullptr);
            throw io_error("png_create_info_struct failed");
        }

        std::vector<png_const_bytep> rows(img.height());
        for (std::size_t r = 0; r < img.height(); ++r)
            rows[r] = img.pixels().data() + r * img.width();

        if (setjmp(png_jmpbuf(png)))
        {
            png_destroy_write_struct(&png, &info);
            throw io_error("PNG encode failed for " + path.string() + ": " + err);
        }
        png_init_io(png, fp.get());
        png_set_compression_level(png, png_compression_level);
        png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                     PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, const_cast<png_bytepp>(rows.data()));
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);

        if (std::fflush(fp.get()) != 0)
            throw io_error("write failed: " + path.string());
    }

    /// Reads an 8-bit grayscale PNG; any other color type or depth is a data_error.
    inline GrayImage read_png(const std::filesystem::path& path)
    {
        detail::file_ptr fp(std::fopen(path.c_str(), "rb"));
        if (!fp)
            throw io_error("cannot open " + path.string());
        unsigned char sig[8];
        if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
            throw data_error("not a PNG file: " + path.string());

        std::string err;
        png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn,
                                                 detail::png_warning_fn);
        if (!png)
            throw io_error("png_create_read_struct failed");
        png_infop info = png_create_info_struct(png);
        if (!info)
        {
            png_destroy_read_struct(&png, nullptr, nullptr);
            throw io_error("png_create_info_struct failed");
        }

        // Buffers live outside the setjmp scope so a libpng longjmp skips no destructors.
        std::vector<std::uint8_t> pixels;
        std::vector<png_bytep> rows;
        png_uint_32 width = 0;
        png_uint_32 height = 0;
        volatile bool bad_format = false;
        if (setjmp(png_jmpbuf(png)))
        {
            png_destroy_read_struct(&png, &info, nullptr);
            throw data_error("PNG decode failed for " + path.string() + ": " + err);
        }
        png_init_io(png, fp.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        width = png_get_image_width(png, info);
        height = png_get_image_height(png, info);
        const auto color = png_get_color_type(png, info);
        const auto depth = png_get_bit_depth(png, info);
        if (color != PNG_COLOR_TYPE_GRAY || depth != 8)
            bad_format = true;
        else
        {
            png_set_interlace_handling(png);
            png_read_update_info(png, info);
            pixels.resize(static_cast<std::size_t>(width) * height);
            rows.resize(height);
            for (std::size_t r = 0; r < height; ++r)
                rows[r] = pixels.data() + r * width;
            png_read_image(png, rows.data());
            png_read_end(png, nullptr);
        }
        png_destroy_read_struct(&png, &info, nullptr);
        if (bad_format)
            throw data_error("expected 8-bit grayscale PNG: " + path.string());
        return GrayImage(width, height, std::move(pixels));
    }

    namespace detail
    {
        inline std::string_view next_field(std::string_view& line)
        {
            const auto tab = line.find('\t');
            auto field = line.substr(0, tab);
            line = tab == std::string_view::npos ? std::string_view{} : line.substr(tab + 1);
            return field;
        }

        template <class T>
        T parse_number(std::string_view s, const std::string& what)
        {
            T v{};
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size())
                throw data_error("bad " + what + " '" + std::string(s) + "'");
            return v;
        }
    }  // namespace detail

    /// Parses `i\tj\tp` lines (1 <= i < j <= n, 0 <= p <= 1) into a symmetric BPPM.
    inline Bppm parse_bppm_tsv(std::string_view text, std::size_t n)
    {
        Bppm out(n);
        std::set<std::pair<std::size_t, std::size_t>> seen;
        std::size_t lineno = 0;
        std::size_t pos = 0;
        while (pos < text.size())
        {
            auto eol = text.find('\n', pos);
            if (eol == std::string_view::npos)
                eol = text.size();
            auto line = text.substr(pos, eol - pos);
            pos = eol + 1;
            ++lineno;
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            if (line.empty())
                continue;

            const auto where = "line " + std::to_string(lineno);
            const auto i = detail::parse_number<std::size_t>(detail::next_field(line), "index at " + where);
            const auto j = detail::parse_number<std::size_t>(detail::next_field(line), "index at " + where);
            const auto p = detail::parse_number<double>(detail::next_field(line), "probability at " + where);
            if (!line.empty())
                throw data_error("extra fields at " + where);
            if (i < 1 || i >= j || j > n)
                throw data_error("cell (" + std::to_string(i) + "," + std::to_string(j) + ") out of range at " + where);
            if (!(p >= 0.0 && p <= 1.0))
                throw data_error("probability outside [0,1] at " + where);
            if (!seen.emplace(i, j).second)
                throw data_error("duplicate cell (" + std::to_string(i) + "," + std::to_string(j) + ") at " + where);
            out.set(i, j, p);
        }
        return out;
    }

    inline Bppm import_bppm_tsv(const std::filesystem::path& path, std::size_t n)
    {
        return parse_bppm_tsv(read_text_file(path), n);
    }

    /// Nonzero upper-triangle cells as `i\tj\tp` with 17 significant digits.
    inline std::string format_bppm_tsv(const Bppm& b)
    {
        std::string out;
        char buf[64];
        for (std::size_t i = 1; i <= b.size(); ++i)
            for (std::size_t j = i + 1; j <= b.size(); ++j)
                if (const double p = b(i, j); p != 0.0)
                {
                    const int len = std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.17g\n", i, j, p);
                    out.append(buf, static_cast<std::size_t>(len));
                }
        return out;
    }
}  // namespace dotstitch

#endif  // DOTSTITCH_DOTPLOT_HPP
