// Copyright 2026 The nplm Authors
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

#pragma once

#include <istream>
#include <memory>
#include <string>

#include "nplm/flat_index.hpp"
#include "nplm/ivfpq_index.hpp"

namespace nplm {

inline std::unique_ptr<VectorIndex> load_index(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic(VectorIndex::kMagic);
  if (r.u32() != VectorIndex::kFormatVersion) throw FormatError("unsupported index format version");
  const auto type = r.u8();
  const auto dim = r.u64();
  const auto nlist = r.u64();
  const auto m = r.u64();
  const auto bits = r.u64();
  if (dim == 0 || dim > (1u << 20)) throw FormatError("implausible index dimension");
  switch (static_cast<IndexType>(type)) {
    case IndexType::kFlat: return FlatIndex::load_body(r, dim);
    case IndexType::kIvfPq: return IvfPqIndex::load_body(r, dim, nlist, m, bits);
  }
  throw FormatError("unknown index type tag " + std::to_string(type));
}

inline std::unique_ptr<VectorIndex> load_index(const std::string& path) {
  auto in = open_input(path);
  return load_index(in);
}

inline void save_index(const VectorIndex& index, const std::string& path) {
  auto out = open_output(path);
  index.save(out);
}

}  // namespace nplm
