//
// Copyright 2026 The SPDL Authors
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
//

#include "spdl/encoding.h"

#include <bit>
#include <cstring>

#include "spdl/error.h"

namespace spdl {

void ByteWriter::U16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::U32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::U64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::Fixed(std::span<const std::uint8_t> raw) {
  out_.insert(out_.end(), raw.begin(), raw.end());
}

void ByteWriter::Blob(std::span<const std::uint8_t> data) {
  U64(data.size());
  Fixed(data);
}

void ByteWriter::Str(std::string_view s) {
  U64(s.size());
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::Reals(std::span<const double> v) {
  U64(v.size());
  for (double x : v) F64(x);
}

void ByteReader::Need(std::size_t n) const {
  if (in_.size() - pos_ < n) {
    throw IngestionError(pos_, "truncated input: need " + std::to_string(n) +
                                   " bytes, have " +
                                   std::to_string(in_.size() - pos_));
  }
}

std::uint8_t ByteReader::U8() {
  Need(1);
  return in_[pos_++];
}

std::uint16_t ByteReader::U16() {
  Need(2);
  std::uint16_t v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::U32() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
  return v;
}

std::uint64_t ByteReader::U64() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
  return v;
}

double ByteReader::F64() { return std::bit_cast<double>(U64()); }

Hash256 ByteReader::Fixed32() {
  Need(32);
  Hash256 h;
  std::memcpy(h.data(), in_.data() + pos_, 32);
  pos_ += 32;
  return h;
}

Bytes ByteReader::Blob() {
  const std::size_t at = pos_;
  const std::uint64_t n = U64();
  if (n > remaining()) {
    throw IngestionError(at, "byte string length " + std::to_string(n) +
                                 " exceeds remaining input");
  }
  Bytes b(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
          in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return b;
}

std::string ByteReader::Str() {
  Bytes b = Blob();
  return std::string(b.begin(), b.end());
}

std::vector<double> ByteReader::Reals() {
  const std::size_t at = pos_;
  const std::uint64_t n = U64();
  if (n > remaining() / 8) {
    throw IngestionError(at, "vector length " + std::to_string(n) +
                                 " exceeds remaining input");
  }
  std::vector<double> v(n);
  for (auto& x : v) x = F64();
  return v;
}

std::string ToHex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xF]);
  }
  return s;
}

Bytes FromHex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw InvalidArgument(std::string("bad hex digit '") + c + "'");
  };
  if (hex.size() % 2 != 0) throw InvalidArgument("odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 |
                                       nibble(hex[2 * i + 1]));
  }
  return out;
}

}  // namespace spdl
