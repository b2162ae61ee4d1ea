// Copyright 2026 The ctcocr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctcocr/alphabet.hpp"

#include <algorithm>

#include "ctcocr/error.hpp"

namespace ctcocr {

namespace {

std::string printable(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u >= 0x20 && u < 0x7f) return std::string("'") + c + "'";
  static constexpr char kHex[] = "0123456789abcdef";
  return std::string("0x") + kHex[u >> 4] + kHex[u & 0xf];
}

}  // namespace

Alphabet::Alphabet(std::string characters) : characters_(std::move(characters)) {
  for (std::size_t i = 0; i < characters_.size(); ++i) {
    int& slot = lookup_[static_cast<unsigned char>(characters_[i])];
    if (slot >= 0) throw DomainError("duplicate alphabet symbol " + printable(characters_[i]));
    slot = static_cast<int>(i);
  }
}

Alphabet Alphabet::captcha_default() { return Alphabet("2345678bcdefgmnpwxy"); }

Alphabet Alphabet::from_texts(const std::vector<std::string>& texts) {
  std::string chars;
  for (const auto& t : texts) chars += t;
  std::sort(chars.begin(), chars.end(),
            [](char a, char b) { return static_cast<unsigned char>(a) < static_cast<unsigned char>(b); });
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());
  return Alphabet(std::move(chars));
}

std::optional<int> Alphabet::index_of(char c) const {
  const int idx = lookup_[static_cast<unsigned char>(c)];
  if (idx < 0) return std::nullopt;
  return idx;
}

char Alphabet::symbol(int index) const {
  if (index < 0 || index >= size()) {
    throw DomainError("label index " + std::to_string(index) + " outside alphabet of size " +
                      std::to_string(size()));
  }
  return characters_[static_cast<std::size_t>(index)];
}

LabelSequence Alphabet::encode(std::string_view text) const {
  LabelSequence out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    const int idx = lookup_[static_cast<unsigned char>(text[pos])];
    if (idx < 0) {
      throw DomainError("character " + printable(text[pos]) + " at position " +
                        std::to_string(pos) + " is not in the alphabet");
    }
    out.push_back(idx);
  }
  return out;
}

std::string Alphabet::decode(const LabelSequence& label) const {
  std::string out;
  out.reserve(label.size());
  for (int idx : label) out.push_back(symbol(idx));
  return out;
}

std::uint64_t Alphabet::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : characters_) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

LabelSequence encode_label(std::string_view text, const Alphabet& alphabet) {
  return alphabet.encode(text);
}

std::string decode_label(const LabelSequence& label, const Alphabet& alphabet) {
  return alphabet.decode(label);
}

}  // namespace ctcocr
