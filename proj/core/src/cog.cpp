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

#include "cogstream/cog.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "cogstream/error.hpp"

namespace cogstream {

namespace {

enum FieldType : std::uint16_t {
  kByte = 1,
  kAscii = 2,
  kShort = 3,
  kLong = 4,
  kRational = 5,
  kSByte = 6,
  kUndefined = 7,
  kSShort = 8,
  kSLong = 9,
  kSRational = 10,
  kFloat = 11,
  kDouble = 12,
  kIfd = 13,
  kLong8 = 16,
  kSLong8 = 17,
  kIfd8 = 18,
};

std::size_t type_size(std::uint16_t type) {
  switch (type) {
    case kByte: case kAscii: case kSByte: case kUndefined: return 1;
    case kShort: case kSShort: return 2;
    case kLong: case kSLong: case kFloat: case kIfd: return 4;
    case kRational: case kSRational: case kDouble: case kLong8: case kSLong8: case kIfd8: return 8;
    default: return 0;
  }
}

struct Endian {
  ByteOrder order;

  std::uint16_t u16(const std::uint8_t* p) const {
    return order == ByteOrder::LittleEndian ? static_cast<std::uint16_t>(p[0] | p[1] << 8)
                                            : static_cast<std::uint16_t>(p[0] << 8 | p[1]);
  }
  std::uint32_t u32(const std::uint8_t* p) const {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const int idx = order == ByteOrder::LittleEndian ? 3 - i : i;
      v = v << 8 | p[idx];
    }
    return v;
  }
  std::uint64_t u64(const std::uint8_t* p) const {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      const int idx = order == ByteOrder::LittleEndian ? 7 - i : i;
      v = v << 8 | p[idx];
    }
    return v;
  }
  std::uint64_t integer(std::uint16_t type, const std::uint8_t* p) const {
    switch (type) {
      case kByte: case kUndefined: return p[0];
      case kShort: return u16(p);
      case kLong: case kIfd: return u32(p);
      case kLong8: case kIfd8: return u64(p);
      default: throw Error(ErrorCode::InvalidIfd, "non-integer field type " + std::to_string(type));
    }
  }

  void put(Bytes& out, std::size_t at, std::uint64_t v, std::size_t width) const {
    for (std::size_t i = 0; i < width; ++i) {
      const std::size_t shift = order == ByteOrder::LittleEndian ? i : width - 1 - i;
      out[at + i] = static_cast<std::uint8_t>(v >> (8 * shift));
    }
  }
};

struct RawField {
  std::uint16_t type = 0;
  std::uint64_t count = 0;
  std::array<std::uint8_t, 8> inline_bytes{};
  std::uint64_t value_offset = 0;  // valid when not inline
  bool is_inline = true;
  std::vector<std::uint64_t> values;  // decoded integers, filled lazily
};

Bytes read_metadata(ByteSource& source, std::uint64_t offset, std::uint64_t length) {
  try {
    return source.get_range(offset, length);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RangeOutOfBounds) {
      throw Error(ErrorCode::TruncatedHeader, "metadata range beyond end of " + source.describe());
    }
    throw;
  }
}

}  // namespace

std::uint64_t CogDescriptor::payload_bytes() const noexcept {
  std::uint64_t total = 0;
  for (const auto& e : tile_index.entries) total += e.byte_count;
  return total;
}

CogDescriptor parse_cog(ByteSource& source) {
  std::uint64_t header_len = 16;
  if (auto size = source.size(); size && *size < header_len) header_len = *size;
  if (header_len < 8) throw Error(ErrorCode::TruncatedHeader, source.describe() + " too short");
  const Bytes header = read_metadata(source, 0, header_len);

  CogDescriptor desc;
  if (header[0] == 'I' && header[1] == 'I') {
    desc.byte_order = ByteOrder::LittleEndian;
  } else if (header[0] == 'M' && header[1] == 'M') {
    desc.byte_order = ByteOrder::BigEndian;
  } else {
    throw Error(ErrorCode::NotTiff, source.describe() + " has no TIFF byte-order mark");
  }
  const Endian e{desc.byte_order};
  const std::uint16_t magic = e.u16(header.data() + 2);
  std::uint64_t ifd_offset = 0;
  if (magic == 42) {
    desc.format_variant = TiffVariant::Classic;
    ifd_offset = e.u32(header.data() + 4);
  } else if (magic == 43) {
    desc.format_variant = TiffVariant::BigTiff;
    if (header.size() < 16) throw Error(ErrorCode::TruncatedHeader, "short BigTIFF header");
    if (e.u16(header.data() + 4) != 8 || e.u16(header.data() + 6) != 0) {
      throw Error(ErrorCode::NotTiff, "unsupported BigTIFF offset size");
    }
    ifd_offset = e.u64(header.data() + 8);
  } else {
    throw Error(ErrorCode::NotTiff, "bad TIFF magic " + std::to_string(magic));
  }
  if (ifd_offset < 8) throw Error(ErrorCode::InvalidIfd, "IFD offset points into the header");

  const bool big = desc.format_variant == TiffVariant::BigTiff;
  const std::size_t count_size = big ? 8 : 2;
  const std::size_t entry_size = big ? 20 : 12;
  const std::size_t inline_size = big ? 8 : 4;

  const Bytes count_bytes = read_metadata(source, ifd_offset, count_size);
  const std::uint64_t n_entries = big ? e.u64(count_bytes.data()) : e.u16(count_bytes.data());
  if (n_entries == 0 || n_entries > 4096) {
    throw Error(ErrorCode::InvalidIfd, "implausible IFD entry count " + std::to_string(n_entries));
  }
  const Bytes entries = read_metadata(source, ifd_offset + count_size, n_entries * entry_size);

  std::map<std::uint16_t, RawField> fields;
  for (std::uint64_t i = 0; i < n_entries; ++i) {
    const std::uint8_t* p = entries.data() + i * entry_size;
    RawField f;
    const std::uint16_t tag = e.u16(p);
    f.type = e.u16(p + 2);
    f.count = big ? e.u64(p + 4) : e.u32(p + 4);
    const std::uint8_t* value = p + (big ? 12 : 8);
    const std::size_t ts = type_size(f.type);
    f.is_inline = ts != 0 && ts * f.count <= inline_size;
    if (f.is_inline) {
      std::memcpy(f.inline_bytes.data(), value, inline_size);
    } else {
      f.value_offset = big ? e.u64(value) : e.u32(value);
    }
    fields[tag] = f;
  }

  const auto has = [&](std::uint16_t tag) { return fields.count(tag) != 0; };
  for (auto tag : {tiff_tag::kTileWidth, tiff_tag::kTileLength, tiff_tag::kTileOffsets,
                   tiff_tag::kTileByteCounts}) {
    if (!has(tag)) {
      throw Error(ErrorCode::StripedNotTiled,
                  source.describe() + (has(tiff_tag::kStripOffsets) ? " uses strips"
                                                                     : " has no tile tags"));
    }
  }

  // Fetch the out-of-line arrays we need, coalesced into one request when
  // they sit close together (they do in files written by write_cog).
  const std::uint16_t wanted[] = {tiff_tag::kBitsPerSample, tiff_tag::kSampleFormat,
                                  tiff_tag::kTileOffsets, tiff_tag::kTileByteCounts};
  std::uint64_t lo = ~std::uint64_t{0};
  std::uint64_t hi = 0;
  for (auto tag : wanted) {
    auto it = fields.find(tag);
    if (it == fields.end() || it->second.is_inline) continue;
    const std::size_t ts = type_size(it->second.type);
    if (ts == 0) throw Error(ErrorCode::InvalidIfd, "unknown field type");
    lo = std::min(lo, it->second.value_offset);
    hi = std::max(hi, it->second.value_offset + ts * it->second.count);
  }
  constexpr std::uint64_t kCoalesceLimit = 64 * 1024;
  Bytes block;
  if (hi > lo && hi - lo <= kCoalesceLimit) block = read_metadata(source, lo, hi - lo);

  for (auto& [tag, f] : fields) {
    const bool needed = std::find(std::begin(wanted), std::end(wanted), tag) != std::end(wanted) ||
                        f.is_inline;
    if (!needed) continue;
    const std::size_t ts = type_size(f.type);
    if (ts == 0 || ts > 8 || f.type == kAscii || f.type == kRational || f.type == kFloat ||
        f.type == kDouble || f.type == kSRational) {
      continue;  // not an integer field; nothing we read needs it
    }
    const std::uint8_t* base = nullptr;
    Bytes separate;
    if (f.is_inline) {
      base = f.inline_bytes.data();
    } else if (!block.empty()) {
      base = block.data() + (f.value_offset - lo);
    } else {
      separate = read_metadata(source, f.value_offset, ts * f.count);
      base = separate.data();
    }
    f.values.resize(f.count);
    for (std::uint64_t i = 0; i < f.count; ++i) f.values[i] = e.integer(f.type, base + i * ts);
  }

  const auto scalar = [&](std::uint16_t tag, std::uint64_t fallback) -> std::uint64_t {
    auto it = fields.find(tag);
    if (it == fields.end()) return fallback;
    if (it->second.values.empty()) throw Error(ErrorCode::InvalidIfd, "empty field " + std::to_string(tag));
    return it->second.values.front();
  };

  if (!has(tiff_tag::kImageWidth) || !has(tiff_tag::kImageLength)) {
    throw Error(ErrorCode::InvalidIfd, "missing image dimensions");
  }
  desc.width = static_cast<std::uint32_t>(scalar(tiff_tag::kImageWidth, 0));
  desc.height = static_cast<std::uint32_t>(scalar(tiff_tag::kImageLength, 0));
  desc.tile_width = static_cast<std::uint32_t>(scalar(tiff_tag::kTileWidth, 0));
  desc.tile_height = static_cast<std::uint32_t>(scalar(tiff_tag::kTileLength, 0));
  desc.bands = static_cast<std::uint16_t>(scalar(tiff_tag::kSamplesPerPixel, 1));
  if (desc.width == 0 || desc.height == 0 || desc.tile_width == 0 || desc.tile_height == 0 ||
      desc.bands == 0) {
    throw Error(ErrorCode::InvalidIfd, "zero image, tile or band dimension");
  }

  const auto compression = static_cast<std::uint16_t>(scalar(tiff_tag::kCompression, 1));
  const auto codec = codec_from_tiff_tag(compression);
  if (!codec) {
    throw Error(ErrorCode::UnsupportedCodec, "compression tag " + std::to_string(compression));
  }
  desc.compression = *codec;

  const auto all_equal = [&](std::uint16_t tag, std::uint64_t expected, std::uint64_t fallback) {
    auto it = fields.find(tag);
    if (it == fields.end()) return fallback == expected;
    return std::all_of(it->second.values.begin(), it->second.values.end(),
                       [&](std::uint64_t v) { return v == expected; }) &&
           !it->second.values.empty();
  };
  if (!all_equal(tiff_tag::kBitsPerSample, 16, 1)) {
    throw Error(ErrorCode::UnsupportedLayout, "only 16-bit samples are supported");
  }
  if (!all_equal(tiff_tag::kSampleFormat, 1, 1)) {
    throw Error(ErrorCode::UnsupportedLayout, "only unsigned integer samples are supported");
  }
  if (scalar(tiff_tag::kPlanarConfiguration, 1) != 1) {
    throw Error(ErrorCode::UnsupportedLayout, "only chunky (interleaved) layout is supported");
  }
  const auto predictor = scalar(tiff_tag::kPredictor, 1);
  if (predictor == 1) {
    desc.predictor = Predictor::None;
  } else if (predictor == 2 && desc.compression != Codec::None) {
    desc.predictor = Predictor::Horizontal;
  } else {
    throw Error(ErrorCode::UnsupportedLayout, "predictor " + std::to_string(predictor));
  }

  const auto& offsets = fields.at(tiff_tag::kTileOffsets).values;
  const auto& counts = fields.at(tiff_tag::kTileByteCounts).values;
  const auto geom = desc.geometry();
  const std::uint64_t n_tiles = static_cast<std::uint64_t>(geom.tiles_x()) * geom.tiles_y();
  if (offsets.size() != n_tiles || counts.size() != n_tiles) {
    throw Error(ErrorCode::InvalidIfd, "tile index has " + std::to_string(offsets.size()) +
                                           " entries, expected " + std::to_string(n_tiles));
  }
  desc.tile_index.tiles_x = geom.tiles_x();
  desc.tile_index.tiles_y = geom.tiles_y();
  desc.tile_index.entries.resize(n_tiles);
  for (std::uint64_t i = 0; i < n_tiles; ++i) {
    if (counts[i] == 0) throw Error(ErrorCode::InvalidIfd, "empty tile " + std::to_string(i));
    desc.tile_index.entries[i] = {offsets[i], counts[i]};
  }
  std::vector<TileExtent> sorted = desc.tile_index.entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const TileExtent& a, const TileExtent& b) { return a.offset < b.offset; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].offset + sorted[i - 1].byte_count > sorted[i].offset) {
      throw Error(ErrorCode::InvalidIfd, "overlapping tiles");
    }
  }
  return desc;
}

TileExtent tile_byte_extent(const CogDescriptor& desc, std::uint32_t tx, std::uint32_t ty) {
  if (tx >= desc.tile_index.tiles_x || ty >= desc.tile_index.tiles_y) {
    throw Error(ErrorCode::TileOutOfRange, "tile (" + std::to_string(tx) + ", " +
                                               std::to_string(ty) + ") outside " +
                                               std::to_string(desc.tile_index.tiles_x) + "x" +
                                               std::to_string(desc.tile_index.tiles_y) + " grid");
  }
  return desc.tile_index.entries[static_cast<std::size_t>(ty) * desc.tile_index.tiles_x + tx];
}

TilePixels decode_tile(const CogDescriptor& desc, std::span<const std::uint8_t> raw,
                       DecodeStats* stats) {
  const SampleLayout layout{desc.tile_row_bytes(), desc.bands, desc.predictor, desc.byte_order};
  Bytes bytes;
  try {
    bytes = decode(desc.compression, raw, desc.tile_bytes(), layout, stats);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::Corrupt) throw Error(ErrorCode::CorruptTile, err.what());
    if (err.code() == ErrorCode::LengthMismatch) throw Error(ErrorCode::SizeMismatch, err.what());
    throw;
  }
  TilePixels tile(desc.tile_width, desc.tile_height, desc.bands);
  if (desc.byte_order == host_byte_order()) {
    std::memcpy(tile.samples.data(), bytes.data(), bytes.size());
  } else {
    for (std::size_t i = 0; i < tile.samples.size(); ++i) {
      tile.samples[i] = static_cast<std::uint16_t>(bytes[2 * i] << 8 | bytes[2 * i + 1]);
    }
  }
  return tile;
}

// --- Writer ------------------------------------------------------------------

namespace {

struct OutField {
  std::uint16_t tag;
  std::uint16_t type;
  std::vector<std::uint64_t> values;
};

Bytes tile_bytes_for(const Raster& pixels, std::uint32_t tx, std::uint32_t ty, std::uint32_t tile,
                     ByteOrder order) {
  const std::size_t row = static_cast<std::size_t>(tile) * pixels.bands;
  std::vector<std::uint16_t> samples(row * tile, 0);
  const std::uint32_t x0 = tx * tile;
  const std::uint32_t y0 = ty * tile;
  const std::uint32_t w = std::min(tile, pixels.width - x0);
  const std::uint32_t h = std::min(tile, pixels.height - y0);
  for (std::uint32_t y = 0; y < h; ++y) {
    const std::uint16_t* src =
        pixels.samples.data() + (static_cast<std::size_t>(y0 + y) * pixels.width + x0) * pixels.bands;
    std::copy_n(src, static_cast<std::size_t>(w) * pixels.bands, samples.data() + y * row);
  }
  Bytes out(samples.size() * 2);
  const Endian e{order};
  for (std::size_t i = 0; i < samples.size(); ++i) e.put(out, 2 * i, samples[i], 2);
  return out;
}

}  // namespace

Bytes write_cog(const Raster& pixels, const CompressionScheme& scheme, const WriteOptions& options) {
  try {
    scheme.validate();
  } catch (const Error& err) {
    throw Error(ErrorCode::UnsupportedScheme, err.what());
  }
  if (pixels.width == 0 || pixels.height == 0 || pixels.bands == 0 ||
      pixels.samples.size() != static_cast<std::size_t>(pixels.width) * pixels.height * pixels.bands) {
    throw Error(ErrorCode::InvalidArgument, "raster dimensions do not match its samples");
  }
  const std::uint32_t tile = options.tile_size;
  if (tile == 0 || tile % 16 != 0) {
    throw Error(ErrorCode::InvalidArgument, "tile size must be a positive multiple of 16");
  }

  const RasterGeometry geom{pixels.width, pixels.height, tile, tile};
  const std::uint32_t n_tiles = geom.tiles_x() * geom.tiles_y();
  const Predictor predictor = scheme.default_predictor();
  const SampleLayout layout{static_cast<std::size_t>(tile) * pixels.bands * 2, pixels.bands,
                            predictor, options.byte_order};

  std::vector<Bytes> payloads;
  payloads.reserve(n_tiles);
  std::uint64_t payload_total = 0;
  for (std::uint32_t ty = 0; ty < geom.tiles_y(); ++ty) {
    for (std::uint32_t tx = 0; tx < geom.tiles_x(); ++tx) {
      payloads.push_back(encode(scheme, tile_bytes_for(pixels, tx, ty, tile, options.byte_order),
                                layout));
      payload_total += payloads.back().size();
    }
  }

  const std::vector<std::uint64_t> per_band_16(pixels.bands, 16);
  const std::vector<std::uint64_t> per_band_1(pixels.bands, 1);
  std::vector<OutField> fields = {
      {tiff_tag::kImageWidth, kLong, {pixels.width}},
      {tiff_tag::kImageLength, kLong, {pixels.height}},
      {tiff_tag::kBitsPerSample, kShort, per_band_16},
      {tiff_tag::kCompression, kShort, {tiff_compression_tag(scheme.codec)}},
      {tiff_tag::kPhotometric, kShort, {1}},  // BlackIsZero
      {tiff_tag::kSamplesPerPixel, kShort, {pixels.bands}},
      {tiff_tag::kPlanarConfiguration, kShort, {1}},
      {tiff_tag::kTileWidth, kLong, {tile}},
      {tiff_tag::kTileLength, kLong, {tile}},
      {tiff_tag::kTileOffsets, kLong, std::vector<std::uint64_t>(n_tiles, 0)},
      {tiff_tag::kTileByteCounts, kLong, {}},
  };
  if (predictor != Predictor::None) {
    // Omitted when unused: libtiff only registers the tag for codecs that
    // support prediction and warns about it otherwise.
    fields.push_back({tiff_tag::kPredictor, kShort, {static_cast<std::uint64_t>(predictor)}});
  }
  if (pixels.bands > 1) {
    fields.push_back({tiff_tag::kExtraSamples, kShort,
                      std::vector<std::uint64_t>(pixels.bands - 1, 0)});
  }
  fields.push_back({tiff_tag::kSampleFormat, kShort, per_band_1});
  std::sort(fields.begin(), fields.end(),
            [](const OutField& a, const OutField& b) { return a.tag < b.tag; });
  const auto field_index = [&](std::uint16_t tag) {
    return static_cast<std::size_t>(
        std::find_if(fields.begin(), fields.end(), [&](const OutField& f) { return f.tag == tag; }) -
        fields.begin());
  };
  OutField& offsets_field = fields[field_index(tiff_tag::kTileOffsets)];
  OutField& counts_field = fields[field_index(tiff_tag::kTileByteCounts)];
  for (const auto& p : payloads) counts_field.values.push_back(p.size());

  const auto layout_size = [&](bool big) {
    const std::size_t header = big ? 16 : 8;
    const std::size_t ifd = big ? 8 + fields.size() * 20 + 8 : 2 + fields.size() * 12 + 4;
    const std::size_t inline_size = big ? 8 : 4;
    std::uint64_t extra = 0;
    for (const auto& f : fields) {
      const std::size_t ts = (big && (f.tag == tiff_tag::kTileOffsets ||
                                      f.tag == tiff_tag::kTileByteCounts))
                                 ? 8
                                 : type_size(f.type);
      const std::uint64_t bytes = ts * f.values.size();
      if (bytes > inline_size) extra += (bytes + 1) & ~std::uint64_t{1};
    }
    return header + ifd + extra;
  };

  const bool big = options.variant ? *options.variant == TiffVariant::BigTiff
                                   : layout_size(false) + payload_total > 0xFFFFFFFFull;
  if (big) {
    offsets_field.type = kLong8;
    counts_field.type = kLong8;
  }
  const std::uint64_t data_start = layout_size(big);
  if (!big && data_start + payload_total > 0xFFFFFFFFull) {
    throw Error(ErrorCode::InvalidArgument, "classic TIFF cannot hold more than 4 GiB");
  }

  std::uint64_t cursor = data_start;
  for (std::uint32_t i = 0; i < n_tiles; ++i) {
    offsets_field.values[i] = cursor;
    cursor += payloads[i].size();
  }

  const Endian e{options.byte_order};
  Bytes out(cursor, 0);
  out[0] = out[1] = options.byte_order == ByteOrder::LittleEndian ? 'I' : 'M';
  const std::size_t header_size = big ? 16 : 8;
  if (big) {
    e.put(out, 2, 43, 2);
    e.put(out, 4, 8, 2);
    e.put(out, 6, 0, 2);
    e.put(out, 8, header_size, 8);
  } else {
    e.put(out, 2, 42, 2);
    e.put(out, 4, header_size, 4);
  }

  std::size_t pos = header_size;
  const std::size_t entry_size = big ? 20 : 12;
  const std::size_t inline_size = big ? 8 : 4;
  std::uint64_t extra = header_size + (big ? 8 + fields.size() * 20 + 8 : 2 + fields.size() * 12 + 4);
  e.put(out, pos, fields.size(), big ? 8 : 2);
  pos += big ? 8 : 2;
  for (const auto& f : fields) {
    const std::size_t ts = type_size(f.type);
    const std::uint64_t bytes = ts * f.values.size();
    e.put(out, pos, f.tag, 2);
    e.put(out, pos + 2, f.type, 2);
    e.put(out, pos + 4, f.values.size(), big ? 8 : 4);
    const std::size_t value_pos = pos + (big ? 12 : 8);
    std::size_t target = value_pos;
    if (bytes > inline_size) {
      e.put(out, value_pos, extra, inline_size);
      target = extra;
      extra += (bytes + 1) & ~std::uint64_t{1};
    }
    for (std::size_t i = 0; i < f.values.size(); ++i) e.put(out, target + i * ts, f.values[i], ts);
    pos += entry_size;
  }
  // next-IFD offset stays zero
  for (std::uint32_t i = 0; i < n_tiles; ++i) {
    std::memcpy(out.data() + offsets_field.values[i], payloads[i].data(), payloads[i].size());
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  static std::atomic<std::uint64_t> counter{0};
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot create " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
      std::filesystem::remove(tmp);
      throw Error(ErrorCode::Io, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::Io, "rename to " + path.string() + ": " + ec.message());
  }
}

Raster read_raster(ByteSource& source) {
  const CogDescriptor desc = parse_cog(source);
  Raster raster(desc.width, desc.height, desc.bands);
  for (std::uint32_t ty = 0; ty < desc.tile_index.tiles_y; ++ty) {
    for (std::uint32_t tx = 0; tx < desc.tile_index.tiles_x; ++tx) {
      const auto extent = tile_byte_extent(desc, tx, ty);
      const TilePixels tile = decode_tile(desc, source.get_range(extent.offset, extent.byte_count));
      const std::uint32_t x0 = tx * desc.tile_width;
      const std::uint32_t y0 = ty * desc.tile_height;
      const std::uint32_t w = std::min(desc.tile_width, desc.width - x0);
      const std::uint32_t h = std::min(desc.tile_height, desc.height - y0);
      for (std::uint32_t y = 0; y < h; ++y) {
        std::copy_n(tile.samples.data() + static_cast<std::size_t>(y) * tile.width * desc.bands,
                    static_cast<std::size_t>(w) * desc.bands,
                    raster.samples.data() +
                        (static_cast<std::size_t>(y0 + y) * desc.width + x0) * desc.bands);
      }
    }
  }
  return raster;
}

std::vector<std::filesystem::path> transcode(ByteSource& source, std::span<const Variant> variants,
                                             const std::filesystem::path& out_dir,
                                             const std::string& stem, const WriteOptions& options) {
  if (variants.empty()) return {};
  const Raster raster = read_raster(source);
  WriteOptions opts = options;
  {
    // Keep the source tiling unless the caller overrides it.
    const CogDescriptor desc = parse_cog(source);
    if (desc.tile_width == desc.tile_height && options.tile_size == WriteOptions{}.tile_size) {
      opts.tile_size = desc.tile_width;
    }
  }
  std::vector<std::filesystem::path> written;
  try {
    for (Variant v : variants) {
      const auto path = out_dir / (stem + "_" + std::string(variant_name(v)) + ".tif");
      write_file_atomic(path, write_cog(raster, scheme_for(v), opts));
      written.push_back(path);
    }
  } catch (...) {
    for (const auto& p : written) std::filesystem::remove(p);
    throw;
  }
  return written;
}

// --- Synthetic scenes ----------------------------------------------------------

namespace {

std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double unit(std::uint64_t h) noexcept { return static_cast<double>(h >> 11) * 0x1.0p-53; }

std::uint64_t lattice_hash(std::uint64_t seed, std::uint64_t band, std::uint64_t octave,
                           std::uint64_t x, std::uint64_t y) noexcept {
  return mix(mix(mix(mix(seed ^ 0x5ce11a7e) ^ band) ^ (octave << 32 | x)) ^ y);
}

double smoothstep(double t) noexcept { return t * t * (3.0 - 2.0 * t); }

// Value noise in [-1, 1] with lattice spacing `cell`.
double value_noise(std::uint64_t seed, std::uint16_t band, std::uint64_t octave, std::uint32_t x,
                   std::uint32_t y, std::uint32_t cell) noexcept {
  const std::uint32_t gx = x / cell;
  const std::uint32_t gy = y / cell;
  const double fx = smoothstep(static_cast<double>(x % cell) / cell);
  const double fy = smoothstep(static_cast<double>(y % cell) / cell);
  const auto v = [&](std::uint32_t ix, std::uint32_t iy) {
    return 2.0 * unit(lattice_hash(seed, band, octave, ix, iy)) - 1.0;
  };
  const double top = v(gx, gy) + (v(gx + 1, gy) - v(gx, gy)) * fx;
  const double bottom = v(gx, gy + 1) + (v(gx + 1, gy + 1) - v(gx, gy + 1)) * fx;
  return top + (bottom - top) * fy;
}

}  // namespace

Raster generate_synthetic_scene(std::uint32_t width, std::uint32_t height, std::uint16_t bands,
                                std::uint64_t seed, double smoothness) {
  if (width == 0 || height == 0 || bands == 0) {
    throw Error(ErrorCode::InvalidArgument, "scene dimensions must be positive");
  }
  const double s = std::clamp(smoothness, 0.0, 1.0);
  const double noise_amp = 32768.0 * std::pow(1.0 - s, 4.0);
  const double smooth_amp = 32000.0 * s * (1.0 - s);

  Raster r(width, height, bands);
  for (std::uint16_t b = 0; b < bands; ++b) {
    const double center = (1.0 - s) * 32768.0 + s * (1500.0 + 700.0 * b);
    for (std::uint32_t y = 0; y < height; ++y) {
      for (std::uint32_t x = 0; x < width; ++x) {
        double v = center;
        if (smooth_amp > 0) {
          v += smooth_amp * (0.65 * value_noise(seed, b, 0, x, y, 128) +
                             0.35 * value_noise(seed, b, 1, x, y, 32));
        }
        if (noise_amp > 0) {
          const double u = unit(mix(lattice_hash(seed, b, 7, x, y)));
          v += noise_amp * (2.0 * u - 1.0);
        }
        r.at(x, y, b) = static_cast<std::uint16_t>(std::clamp(std::floor(v), 0.0, 65535.0));
      }
    }
  }
  return r;
}

}  // namespace cogstream
