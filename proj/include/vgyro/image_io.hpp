#pragma once

#include <string>
#include <vector>

#include "vgyro/image.hpp"

namespace vgyro {

// Decoded 8-bit raster with values scaled to [0,1]; channels is 1 or 3.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;  // H*W*channels interleaved
};

// PNG or JPEG selected by file extension (.png/.jpg/.jpeg).
// Throws "unreadable-image" / "unsupported-format".
Raster load_raster(const std::string& path);
void save_raster(const std::string& path, const Raster& raster);

// Equirectangular wrappers: validate W = 2H on load; color sources also get
// a luma intensity channel.
EquirectImage load_equirect(const std::string& path);
void save_equirect(const std::string& path, const EquirectImage& img);

// Single-channel confidence grid (pixel/255); RGB inputs are reduced to luma.
std::vector<double> load_gray_grid(const std::string& path, int& width, int& height);
void save_gray_grid(const std::string& path, const std::vector<double>& grid,
                    int width, int height);

DualFisheyeImage load_dualfisheye(const std::string& path, const LensPair& lenses);

}  // namespace vgyro
