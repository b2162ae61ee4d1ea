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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctcocr {

// Label text as alphabet indices, never containing the blank.
using LabelSequence = std::vector<int>;

// Ordered set of single-byte symbols. Index i in [0, K) maps to
// characters()[i]; the CTC blank is index K.
class Alphabet {
 public:
  Alphabet() = default;
  // Throws DomainError on duplicate symbols.
  explicit Alphabet(std::string characters);

  // The 19 symbols of the reference captcha corpus, sorted by code point.
  static Alphabet captcha_default();
  // Sorted, de-duplicated union of the given texts' characters.
  static Alphabet from_texts(const std::vector<std::string>& texts);

  const std::string& characters() const { return characters_; }
  int size() const { return static_cast<int>(characters_.size()); }
  int blank_index() const { return size(); }
  int num_classes() const { return size() + 1; }

  bool contains(char c) const { return lookup_[static_cast<unsigned char>(c)] >= 0; }
  std::optional<int> index_of(char c) const;
  char symbol(int index) const;

  LabelSequence encode(std::string_view text) const;
  std::string decode(const LabelSequence& label) const;

  // FNV-1a over the ordered characters; stored in checkpoints.
  std::uint64_t hash() const;

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.characters_ == b.characters_;
  }

 private:
  std::string characters_;
  std::vector<int> lookup_ = std::vector<int>(256, -1);
};

LabelSequence encode_label(std::string_view text, const Alphabet& alphabet);
std::string decode_label(const LabelSequence& label, const Alphabet& alphabet);

}  // namespace ctcocr
