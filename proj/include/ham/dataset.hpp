#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ham/rng.hpp"
#include "ham/tensor.hpp"

namespace ham {

// Procedurally generated 32x32 training latents in [-1, 1]. Condition ids:
// 0 null, 1 shapes (content class), 2 stripes, 3 checker, 4 noise palette.
namespace toyset {

inline constexpr std::size_t kNullId = 0;
inline constexpr std::size_t kShapesId = 1;
inline constexpr std::size_t kStripesId = 2;
inline constexpr std::size_t kCheckerId = 3;
inline constexpr std::size_t kPaletteId = 4;
inline constexpr std::size_t kNumClasses = 5;

namespace detail {

inline void fill_rgb(Tensor& img, std::size_t x, std::size_t y, const float rgb[3]) {
    const std::size_t S = img.shape[1];
    for (std::size_t c = 0; c < 3; ++c) img.data[c * S * S + y * S + x] = rgb[c];
}

inline void random_color(Rng& rng, float out[3]) {
    for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(rng.uniform(-0.9, 0.9));
}

} // namespace detail

// Content class: a filled circle or square on a flat background.
inline Tensor make_shape_image(Rng& rng, std::size_t size = 32) {
    Tensor img({3, size, size});
    float bg[3], fg[3];
    detail::random_color(rng, bg);
    detail::random_color(rng, fg);
    const bool circle = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.25, 0.75) * size;
    const double cy = rng.uniform(0.25, 0.75) * size;
    const double r = rng.uniform(0.15, 0.3) * size;
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            bool inside;
            if (circle) {
                const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                inside = dx * dx + dy * dy <= r * r;
            } else {
                inside = std::abs(x + 0.5 - cx) <= r && std::abs(y + 0.5 - cy) <= r;
            }
            detail::fill_rgb(img, x, y, inside ? fg : bg);
        }
    return img;
}

inline Tensor make_stripe_image(Rng& rng, std::size_t size = 32) {
    Tensor img({3, size, size});
    float a[3], b[3];
    detail::random_color(rng, a);
    detail::random_color(rng, b);
    const int period = 2 + static_cast<int>(rng.uniform_int(6));
    const int slope = rng.uniform() < 0.5 ? 0 : 1; // vertical or diagonal
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const int band = static_cast<int>(x + slope * y) / period;
            detail::fill_rgb(img, x, y, (band % 2 == 0) ? a : b);
        }
    return img;
}

inline Tensor make_checker_image(Rng& rng, std::size_t size = 32) {
    Tensor img({3, size, size});
    float a[3], b[3];
    detail::random_color(rng, a);
    detail::random_color(rng, b);
    const int cell = 2 + static_cast<int>(rng.uniform_int(5));
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const bool odd = ((x / cell) + (y / cell)) % 2;
            detail::fill_rgb(img, x, y, odd ? a : b);
        }
    return img;
}

// Smooth random color field from a few low-frequency sinusoids.
inline Tensor make_palette_image(Rng& rng, std::size_t size = 32) {
    Tensor img({3, size, size});
    for (std::size_t c = 0; c < 3; ++c) {
        const double fx = rng.uniform(0.5, 2.0), fy = rng.uniform(0.5, 2.0);
        const double px = rng.uniform(0.0, 6.28), py = rng.uniform(0.0, 6.28);
        const double amp = rng.uniform(0.4, 0.9);
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const double v = amp * std::sin(2 * 3.14159265358979 * fx * x / size + px) *
                                 std::cos(2 * 3.14159265358979 * fy * y / size + py);
                img.data[c * size * size + y * size + x] = static_cast<float>(v);
            }
    }
    return img;
}

struct Sample {
    Tensor latent;
    std::size_t condition_id;
};

// Uniformly mixes the four visible classes; the null id never generates.
inline Sample draw(Rng& rng, std::size_t size = 32) {
    const std::size_t cls = 1 + rng.uniform_int(kNumClasses - 1);
    Sample s;
    s.condition_id = cls;
    switch (cls) {
        case kShapesId: s.latent = make_shape_image(rng, size); break;
        case kStripesId: s.latent = make_stripe_image(rng, size); break;
        case kCheckerId: s.latent = make_checker_image(rng, size); break;
        default: s.latent = make_palette_image(rng, size); break;
    }
    return s;
}

inline Tensor make_by_class(std::size_t condition_id, std::uint64_t seed,
                            std::size_t size = 32) {
    Rng rng(seed);
    switch (condition_id) {
        case kShapesId: return make_shape_image(rng, size);
        case kStripesId: return make_stripe_image(rng, size);
        case kCheckerId: return make_checker_image(rng, size);
        case kPaletteId: return make_palette_image(rng, size);
        default: throw ArgumentError("toyset: unknown class id " + std::to_string(condition_id));
    }
}

} // namespace toyset
} // namespace ham
