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

#include "cogstream/codecs.hpp"

#include <zlib.h>
#include <zstd.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <memory>

#include "cogstream/error.hpp"

namespace cogstream {

ByteOrder host_byte_order() noexcept {
  return std::endian::native == std::endian::little ? ByteOrder::LittleEndian
                                                    : ByteOrder::BigEndian;
}

std::string_view codec_name(Codec codec) noexcept {
  switch (codec) {
    case Codec::None: return "none";
    case Codec::Lzw: return "lzw";
    case Codec::Deflate: return "deflate";
    case Codec::Zstd: return "zstd";
  }
  return "unknown";
}

std::uint16_t tiff_compression_tag(Codec codec) noexcept {
  switch (codec) {
    case Codec::None: return 1;
    case Codec::Lzw: return 5;
    case Codec::Deflate: return 8;
    case Codec::Zstd: return 50000;
  }
  return 0;
}

std::optional<Codec> codec_from_tiff_tag(std::uint16_t tag) noexcept {
  switch (tag) {
    case 1: return Codec::None;
    case 5: return Codec::Lzw;
    case 8: return Codec::Deflate;
    case 50000: return Codec::Zstd;
    default: return std::nullopt;
  }
}

CompressionScheme CompressionScheme::deflate(int level) {
  CompressionScheme s{Codec::Deflate, level};
  s.validate();
  return s;
}

CompressionScheme CompressionScheme::zstd(int level) {
  CompressionScheme s{Codec::Zstd, level};
  s.validate();
  return s;
}

void CompressionScheme::validate() const {
  switch (codec) {
    case Codec::None:
    case Codec::Lzw:
      if (level) {
        throw Error(ErrorCode::UnsupportedScheme,
                    std::string(codec_name(codec)) + " takes no compression level");
      }
      return;
    case Codec::Deflate:
      if (!level || *level < 1 || *level > 9) {
        throw Error(ErrorCode::UnsupportedScheme, "deflate level must be in [1, 9]");
      }
      return;
    case Codec::Zstd:
      if (!level || *level < 1 || *level > ZSTD_maxCLevel()) {
        throw Error(ErrorCode::UnsupportedScheme, "zstd level out of range");
      }
      return;
  }
  throw Error(ErrorCode::UnsupportedScheme, "unknown codec");
}

std::string_view variant_name(Variant v) noexcept {
  switch (v) {
    case Variant::None: return "none";
    case Variant::Deflate1: return "deflate_1";
    case Variant::Deflate6: return "deflate_6";
    case Variant::Deflate9: return "deflate_9";
    case Variant::Lzw: return "lzw";
    case Variant::Zstd: return "zstd";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) noexcept {
  for (Variant v : kAllVariants) {
    if (variant_name(v) == name) return v;
  }
  // Accept the upper-case spellings used in reports as well.
  if (name == "None" || name == "NONE") return Variant::None;
  if (name == "DEFLATE_1" || name == "deflate1") return Variant::Deflate1;
  if (name == "DEFLATE_6" || name == "deflate6") return Variant::Deflate6;
  if (name == "DEFLATE_9" || name == "deflate9") return Variant::Deflate9;
  if (name == "LZW") return Variant::Lzw;
  if (name == "ZSTD") return Variant::Zstd;
  return std::nullopt;
}

CompressionScheme scheme_for(Variant v) {
  switch (v) {
    case Variant::None: return CompressionScheme::none();
    case Variant::Deflate1: return CompressionScheme::deflate(1);
    case Variant::Deflate6: return CompressionScheme::deflate(6);
    case Variant::Deflate9: return CompressionScheme::deflate(9);
    case Variant::Lzw: return CompressionScheme::lzw();
    case Variant::Zstd: return CompressionScheme::zstd();
  }
  throw Error(ErrorCode::UnsupportedScheme, "unknown variant");
}

namespace {

std::uint16_t load16(const std::uint8_t* p, ByteOrder order) noexcept {
  return order == ByteOrder::LittleEndian
             ? static_cast<std::uint16_t>(p[0] | (p[1] << 8))
             : static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

void store16(std::uint8_t* p, std::uint16_t v, ByteOrder order) noexcept {
  if (order == ByteOrder::LittleEndian) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
  } else {
    p[0] = static_cast<std::uint8_t>(v >> 8);
    p[1] = static_cast<std::uint8_t>(v);
  }
}

void check_predictor_layout(std::size_t size, const SampleLayout& layout) {
  if (layout.row_stride == 0 || layout.row_stride % 2 != 0 || size % layout.row_stride != 0 ||
      layout.samples_per_pixel == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "predictor needs a non-zero even row stride dividing the buffer");
  }
}

// --- LZW -----------------------------------------------------------------

constexpr int kLzwMinBits = 9;
constexpr int kLzwMaxBits = 12;
constexpr std::uint32_t kLzwClear = 256;
constexpr std::uint32_t kLzwEoi = 257;
constexpr std::uint32_t kLzwFirst = 258;
constexpr std::uint32_t kLzwMaxCode = (1u << kLzwMaxBits) - 1;  // 4095

constexpr std::uint32_t max_code(int bits) { return (1u << bits) - 1; }

class BitWriter {
 public:
  explicit BitWriter(Bytes& out) : out_(out) {}

  void put(std::uint32_t code, int bits) {
    acc_ = (acc_ << bits) | code;
    count_ += bits;
    while (count_ >= 8) {
      out_.push_back(static_cast<std::uint8_t>(acc_ >> (count_ - 8)));
      count_ -= 8;
    }
    acc_ &= (std::uint64_t{1} << count_) - 1;
  }

  void flush() {
    if (count_ > 0) {
      out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - count_)));
      count_ = 0;
      acc_ = 0;
    }
  }

 private:
  Bytes& out_;
  std::uint64_t acc_ = 0;
  int count_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

  // Returns false when the input runs out before `bits` are available.
  bool get(int bits, std::uint32_t& code) {
    while (count_ < bits) {
      if (pos_ >= in_.size()) return false;
      acc_ = (acc_ << 8) | in_[pos_++];
      count_ += 8;
    }
    code = static_cast<std::uint32_t>(acc_ >> (count_ - bits)) & max_code(bits);
    count_ -= bits;
    acc_ &= (std::uint64_t{1} << count_) - 1;
    return true;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint64_t acc_ = 0;
  int count_ = 0;
};

// Open-addressed (prefix, byte) -> code dictionary for the encoder.
class LzwDictionary {
 public:
  LzwDictionary() { clear(); }

  void clear() { std::fill(keys_.begin(), keys_.end(), 0u); }

  std::uint32_t find(std::uint32_t prefix, std::uint8_t byte) const {
    const std::uint32_t key = make_key(prefix, byte);
    for (std::uint32_t slot = hash(key);; slot = (slot + 1) & kMask) {
      if (keys_[slot] == 0) return 0;
      if (keys_[slot] == key) return codes_[slot];
    }
  }

  void insert(std::uint32_t prefix, std::uint8_t byte, std::uint32_t code) {
    const std::uint32_t key = make_key(prefix, byte);
    std::uint32_t slot = hash(key);
    while (keys_[slot] != 0) slot = (slot + 1) & kMask;
    keys_[slot] = key;
    codes_[slot] = static_cast<std::uint16_t>(code);
  }

 private:
  static constexpr std::uint32_t kSize = 8192;
  static constexpr std::uint32_t kMask = kSize - 1;

  // +1 so that zero marks an empty slot.
  static std::uint32_t make_key(std::uint32_t prefix, std::uint8_t byte) {
    return ((prefix << 8) | byte) + 1;
  }
  static std::uint32_t hash(std::uint32_t key) { return (key * 2654435761u) >> 19 & kMask; }

  std::array<std::uint32_t, kSize> keys_{};
  std::array<std::uint16_t, kSize> codes_{};
};

}  // namespace

namespace lzw {

Bytes encode(std::span<const std::uint8_t> input) {
  Bytes out;
  out.reserve(input.size() / 2 + 16);
  BitWriter writer(out);
  int nbits = kLzwMinBits;

  if (input.empty()) {
    writer.put(kLzwEoi, nbits);
    writer.flush();
    return out;
  }

  auto dict = std::make_unique<LzwDictionary>();
  std::uint32_t max = max_code(nbits);
  std::uint32_t free_ent = kLzwFirst;

  writer.put(kLzwClear, nbits);
  std::uint32_t ent = input[0];
  for (std::size_t i = 1; i < input.size(); ++i) {
    const std::uint8_t c = input[i];
    if (std::uint32_t code = dict->find(ent, c); code != 0) {
      ent = code;
      continue;
    }
    writer.put(ent, nbits);
    dict->insert(ent, c, free_ent++);
    if (free_ent == kLzwMaxCode - 1) {
      // Table full: emit Clear at the current width and start over.
      writer.put(kLzwClear, nbits);
      dict->clear();
      free_ent = kLzwFirst;
      nbits = kLzwMinBits;
      max = max_code(nbits);
    } else if (free_ent > max) {
      ++nbits;
      max = max_code(nbits);
    }
    ent = c;
  }

  writer.put(ent, nbits);
  // The decoder adds one more entry after reading `ent`, so EOI follows the
  // same width bookkeeping.
  ++free_ent;
  if (free_ent == kLzwMaxCode - 1) {
    writer.put(kLzwClear, nbits);
    nbits = kLzwMinBits;
  } else if (free_ent > max) {
    ++nbits;
  }
  writer.put(kLzwEoi, nbits);
  writer.flush();
  return out;
}

Bytes decode(std::span<const std::uint8_t> input, std::size_t expected_len) {
  struct Entry {
    std::uint16_t prefix;
    std::uint16_t length;
    std::uint8_t suffix;
    std::uint8_t first;
  };
  std::vector<Entry> table(kLzwMaxCode + 1);
  for (std::uint32_t i = 0; i < 256; ++i) {
    table[i] = {0, 1, static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(i)};
  }

  Bytes out;
  out.reserve(expected_len);
  BitReader reader(input);

  int nbits = kLzwMinBits;
  std::uint32_t free_ent = kLzwFirst;
  std::int64_t prev = -1;
  bool saw_eoi = false;

  auto emit = [&](std::uint32_t code) {
    const std::size_t len = table[code].length;
    if (out.size() + len > expected_len) {
      throw Error(ErrorCode::LengthMismatch, "LZW output exceeds expected length");
    }
    const std::size_t start = out.size();
    out.resize(start + len);
    std::uint32_t c = code;
    for (std::size_t i = len; i-- > 0;) {
      out[start + i] = table[c].suffix;
      c = table[c].prefix;
    }
  };

  std::uint32_t code = 0;
  while (reader.get(nbits, code)) {
    if (code == kLzwEoi) {
      saw_eoi = true;
      break;
    }
    if (code == kLzwClear) {
      free_ent = kLzwFirst;
      nbits = kLzwMinBits;
      prev = -1;
      continue;
    }
    if (prev < 0) {
      if (code > 255) throw Error(ErrorCode::Corrupt, "LZW code after Clear is not a literal");
      emit(code);
      prev = code;
      continue;
    }
    if (code > free_ent) throw Error(ErrorCode::Corrupt, "LZW code beyond table");
    if (free_ent > kLzwMaxCode) throw Error(ErrorCode::Corrupt, "LZW table overflow");

    const auto p = static_cast<std::uint32_t>(prev);
    const std::uint8_t first = code < free_ent ? table[code].first : table[p].first;
    table[free_ent] = {static_cast<std::uint16_t>(p),
                       static_cast<std::uint16_t>(table[p].length + 1), first, table[p].first};
    ++free_ent;
    emit(code);
    if (free_ent > max_code(nbits) - 1 && nbits < kLzwMaxBits) ++nbits;
    prev = code;
  }

  if (out.size() != expected_len) {
    if (!saw_eoi) throw Error(ErrorCode::Corrupt, "LZW stream truncated");
    throw Error(ErrorCode::LengthMismatch, "LZW output shorter than expected");
  }
  return out;
}

}  // namespace lzw

void apply_horizontal_predictor(std::span<std::uint8_t> data, const SampleLayout& layout) {
  check_predictor_layout(data.size(), layout);
  const std::size_t samples_per_row = layout.row_stride / 2;
  const std::size_t spp = layout.samples_per_pixel;
  for (std::size_t row = 0; row < data.size(); row += layout.row_stride) {
    std::uint8_t* r = data.data() + row;
    for (std::size_t i = samples_per_row; i-- > spp;) {
      const auto cur = load16(r + 2 * i, layout.byte_order);
      const auto left = load16(r + 2 * (i - spp), layout.byte_order);
      store16(r + 2 * i, static_cast<std::uint16_t>(cur - left), layout.byte_order);
    }
  }
}

void reverse_horizontal_predictor(std::span<std::uint8_t> data, const SampleLayout& layout) {
  check_predictor_layout(data.size(), layout);
  const std::size_t samples_per_row = layout.row_stride / 2;
  const std::size_t spp = layout.samples_per_pixel;
  for (std::size_t row = 0; row < data.size(); row += layout.row_stride) {
    std::uint8_t* r = data.data() + row;
    for (std::size_t i = spp; i < samples_per_row; ++i) {
      const auto cur = load16(r + 2 * i, layout.byte_order);
      const auto left = load16(r + 2 * (i - spp), layout.byte_order);
      store16(r + 2 * i, static_cast<std::uint16_t>(cur + left), layout.byte_order);
    }
  }
}

namespace {

Bytes deflate_encode(std::span<const std::uint8_t> raw, int level) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  Bytes out(bound);
  const int rc = compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), level);
  if (rc != Z_OK) throw Error(ErrorCode::Corrupt, "zlib compress2 failed");
  out.resize(bound);
  return out;
}

Bytes deflate_decode(std::span<const std::uint8_t> payload, std::size_t expected_len) {
  // One spare byte detects streams that inflate to more than expected.
  Bytes out(expected_len + 1);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error(ErrorCode::Corrupt, "inflateInit failed");
  zs.next_in = const_cast<Bytef*>(payload.data());
  zs.avail_in = static_cast<uInt>(payload.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc == Z_STREAM_END) {
    if (produced != expected_len) {
      throw Error(ErrorCode::LengthMismatch, "deflate stream inflated to " +
                                                 std::to_string(produced) + " bytes, expected " +
                                                 std::to_string(expected_len));
    }
    out.resize(expected_len);
    return out;
  }
  if (produced > expected_len) {
    throw Error(ErrorCode::LengthMismatch, "deflate stream longer than expected");
  }
  throw Error(ErrorCode::Corrupt, rc == Z_BUF_ERROR ? "deflate stream truncated"
                                                    : "deflate stream invalid");
}

Bytes zstd_encode(std::span<const std::uint8_t> raw, int level) {
  Bytes out(ZSTD_compressBound(raw.size()));
  const std::size_t n = ZSTD_compress(out.data(), out.size(), raw.data(), raw.size(), level);
  if (ZSTD_isError(n)) throw Error(ErrorCode::Corrupt, ZSTD_getErrorName(n));
  out.resize(n);
  return out;
}

Bytes zstd_decode(std::span<const std::uint8_t> payload, std::size_t expected_len) {
  const unsigned long long content = ZSTD_getFrameContentSize(payload.data(), payload.size());
  if (content == ZSTD_CONTENTSIZE_ERROR) throw Error(ErrorCode::Corrupt, "not a zstd frame");
  if (content != ZSTD_CONTENTSIZE_UNKNOWN && content != expected_len) {
    throw Error(ErrorCode::LengthMismatch, "zstd frame holds " + std::to_string(content) +
                                               " bytes, expected " +
                                               std::to_string(expected_len));
  }
  Bytes out(expected_len);
  const std::size_t n = ZSTD_decompress(out.data(), out.size(), payload.data(), payload.size());
  if (ZSTD_isError(n)) {
    if (ZSTD_getErrorCode(n) == ZSTD_error_dstSize_tooSmall) {
      throw Error(ErrorCode::LengthMismatch, "zstd frame longer than expected");
    }
    throw Error(ErrorCode::Corrupt, ZSTD_getErrorName(n));
  }
  if (n != expected_len) throw Error(ErrorCode::LengthMismatch, "zstd frame shorter than expected");
  return out;
}

}  // namespace

Bytes encode(const CompressionScheme& scheme, std::span<const std::uint8_t> raw,
             const SampleLayout& layout) {
  scheme.validate();
  if (layout.row_stride != 0 && raw.size() % layout.row_stride != 0) {
    throw Error(ErrorCode::InvalidArgument, "raw length is not a multiple of the row stride");
  }
  std::span<const std::uint8_t> input = raw;
  Bytes predicted;
  if (layout.predictor == Predictor::Horizontal) {
    if (scheme.codec == Codec::None) {
      throw Error(ErrorCode::UnsupportedScheme, "predictor requires a compressing codec");
    }
    predicted.assign(raw.begin(), raw.end());
    apply_horizontal_predictor(predicted, layout);
    input = predicted;
  }
  switch (scheme.codec) {
    case Codec::None: return Bytes(input.begin(), input.end());
    case Codec::Lzw: return lzw::encode(input);
    case Codec::Deflate: return deflate_encode(input, *scheme.level);
    case Codec::Zstd: return zstd_encode(input, *scheme.level);
  }
  throw Error(ErrorCode::UnsupportedScheme, "unknown codec");
}

Bytes decode(Codec codec, std::span<const std::uint8_t> payload, std::size_t expected_len,
             const SampleLayout& layout, DecodeStats* stats) {
  const auto start = std::chrono::steady_clock::now();
  Bytes out;
  switch (codec) {
    case Codec::None:
      if (payload.size() != expected_len) {
        throw Error(ErrorCode::LengthMismatch, "uncompressed payload has wrong length");
      }
      out.assign(payload.begin(), payload.end());
      break;
    case Codec::Lzw: out = lzw::decode(payload, expected_len); break;
    case Codec::Deflate: out = deflate_decode(payload, expected_len); break;
    case Codec::Zstd: out = zstd_decode(payload, expected_len); break;
    default: throw Error(ErrorCode::UnsupportedScheme, "unknown codec");
  }
  if (layout.predictor == Predictor::Horizontal) reverse_horizontal_predictor(out, layout);
  if (stats) {
    stats->bytes_in = payload.size();
    stats->bytes_out = out.size();
    stats->elapsed = std::chrono::steady_clock::now() - start;
  }
  return out;
}

}  // namespace cogstream
