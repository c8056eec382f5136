#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ham/tensor.hpp"

namespace ham {

// 8-bit RGB image, row-major, interleaved.
struct Image {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> pixels; // height * width * 3

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
        return pixels[(y * width + x) * 3 + c];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
        return pixels[(y * width + x) * 3 + c];
    }
};

Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img); // atomic (tmp+rename)

Image resize_bilinear(const Image& src, std::size_t width, std::size_t height);

// [0,255] RGB -> [-1,1] latent of shape (3, size, size), resizing on the way.
Tensor image_to_latent(const Image& img, std::size_t size);

// Clamp to [-1,1], quantize to 8-bit RGB at the latent's own resolution.
Image latent_to_image(const Tensor& latent);

} // namespace ham
