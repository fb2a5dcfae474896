// Copyright 2026 The nspm Authors
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

// Rule-based reconstruction of learner output into a decodable sequence.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nspm/error.hpp"
#include "nspm/sparql_codec.hpp"

namespace nspm::interp {

enum class ActionKind {
  kTruncatedAfterEos,  // everything from `position` on removed
  kDroppedUnknown,     // reserved, UNK or out-of-vocabulary token
  kInsertedKeyword,    // where, brack_open or sep_dot (or their 1:1 forms)
  kBalancedBracket,    // bracket inserted or dropped
  kDroppedFragment,    // part of an incomplete triple
  kDroppedMisplaced,   // token that fits nowhere in the grammar
};

std::string_view action_name(ActionKind kind);

// `position` indexes the sequence as it stands when the action is applied,
// so applying the actions in order replays the repair.
struct RepairAction {
  ActionKind kind;
  std::string token;
  std::size_t position = 0;
  bool inserted = false;
  friend bool operator==(const RepairAction&, const RepairAction&) = default;
};

struct RepairReport {
  std::vector<RepairAction> actions;
  codec::TokenSeq repaired;
};

class Unrepairable : public Error {
 public:
  explicit Unrepairable(const std::string& why)
      : Error(ErrorKind::kData, "interp.Unrepairable", why) {}
};

// A sequence that already decodes comes back with no actions.
RepairReport repair_sequence(const codec::TokenSeq& tokens,
                             const codec::CodecPreset& preset);

codec::TokenSeq apply_actions(const codec::TokenSeq& tokens,
                              const std::vector<RepairAction>& actions);

struct Interpretation {
  std::string sparql;
  RepairReport report;
};

Interpretation interpret(const codec::TokenSeq& tokens,
                         const codec::CodecPreset& preset);

// One JSON object per report, on a single line.
std::string report_json(const RepairReport& report);

}  // namespace nspm::interp
