// Copyright 2026 The cogstream Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Writes every variant of one small scene plus reference.raw into a
// directory, for fixtures/libtiff_interop.py to decode with libtiff.

#include <cstdio>
#include <filesystem>
#include <string>

#include "cogstream/cog.hpp"

int main(int argc, char** argv) {
  using namespace cogstream;
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s OUT_DIR\n", argv[0]);
    return 2;
  }
  const std::filesystem::path out = argv[1];
  std::filesystem::create_directories(out);
  const Raster r = generate_synthetic_scene(150, 97, 3, 42, 0.7);

  Bytes ref(12 + r.byte_size());
  const std::uint32_t dims[3] = {r.width, r.height, r.bands};
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 4; ++k) ref[i * 4 + k] = static_cast<std::uint8_t>(dims[i] >> (8 * k));
  }
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    ref[12 + 2 * i] = static_cast<std::uint8_t>(r.samples[i]);
    ref[13 + 2 * i] = static_cast<std::uint8_t>(r.samples[i] >> 8);
  }
  write_file_atomic(out / "reference.raw", ref);

  for (Variant v : kAllVariants) {
    const std::string name(variant_name(v));
    write_file_atomic(out / ("ours_" + name + ".tif"), write_cog(r, scheme_for(v), {.tile_size = 64}));
    write_file_atomic(out / ("ours_be_bigtiff_" + name + ".tif"),
                      write_cog(r, scheme_for(v),
                                {.tile_size = 48,
                                 .byte_order = ByteOrder::BigEndian,
                                 .variant = TiffVariant::BigTiff}));
  }
  return 0;
}
