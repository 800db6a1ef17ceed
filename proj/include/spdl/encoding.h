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

#ifndef SPDL_ENCODING_H_
#define SPDL_ENCODING_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spdl {

using Bytes = std::vector<std::uint8_t>;
using Hash256 = std::array<std::uint8_t, 32>;

// Canonical encoding shared by everything that is signed or hashed:
// integers are 8-byte big-endian, reals are their IEEE-754 bit pattern as
// 8-byte big-endian, variable-length byte strings and real vectors carry an
// 8-byte big-endian length prefix, fixed 32-byte values are written raw.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v);
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F64(double v);
  void Fixed(std::span<const std::uint8_t> raw);
  void Blob(std::span<const std::uint8_t> data);
  void Str(std::string_view s);
  void Reals(std::span<const double> v);

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }

 private:
  Bytes out_;
};

// Reader for ByteWriter output. Every method throws IngestionError (with the
// byte offset) on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t U8();
  std::uint16_t U16();
  std::uint32_t U32();
  std::uint64_t U64();
  double F64();
  Hash256 Fixed32();
  Bytes Blob();
  std::string Str();
  std::vector<double> Reals();
  void Skip(std::size_t n) {
    Need(n);
    pos_ += n;
  }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  void Need(std::size_t n) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string ToHex(std::span<const std::uint8_t> bytes);
Bytes FromHex(std::string_view hex);

}  // namespace spdl

#endif  // SPDL_ENCODING_H_
