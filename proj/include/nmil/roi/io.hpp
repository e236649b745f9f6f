/* Copyright 2026 The NMIL Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nmil/roi/mask.hpp"

namespace nmil::roi {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// 8-bit single-channel PNG. Throws DataError naming the file and the reason.
GrayImage read_gray_png(const std::filesystem::path& path);
void write_gray_png(const std::filesystem::path& path, const GrayImage& image);
// Deterministic in-memory encoding (no timestamps or text chunks).
std::vector<std::uint8_t> encode_gray_png(const GrayImage& image);

struct Sidecar {
  double mpp = 0.0;
  double magnification = 10.0;
};

// {"mpp": number or [x, y], "magnification": "2.5x|10x|20x|40x"}. A pair of
// unequal mpp values is rejected as anisotropic.
Sidecar parse_sidecar(const std::string& text, const std::string& source = "sidecar");
Sidecar read_sidecar(const std::filesystem::path& path);

SegMask load_segmask(const std::filesystem::path& png, const std::filesystem::path& sidecar);

// 0 outside, 255 inside.
GrayImage roi_image(const RoiMask& roi);

}  // namespace nmil::roi
