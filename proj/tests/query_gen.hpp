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

// Random queries inside the codec grammar subset, for property tests.

#pragma once

#include <string>
#include <vector>

#include "nspm/sparql_codec.hpp"
#include "nspm/util.hpp"

namespace nspm::testing {

inline std::string pick(Rng& rng, const std::vector<std::string>& xs) {
  return xs[rng.index(xs.size())];
}

inline codec::PrefixedName random_name(Rng& rng) {
  static const std::vector<std::string> prefixes{"dbr", "dbo", "dbp", "rdf", "rdfs", "foaf"};
  static const std::string plain = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-%";
  static const std::string escapable = "_~.-!$&'()*+,;=/?#@%";
  std::string local;
  std::size_t n = 1 + rng.index(10);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < 0.1) {
      local += '\\';
      local += escapable[rng.index(escapable.size())];
    } else {
      local += plain[rng.index(plain.size())];
    }
  }
  return {pick(rng, prefixes), local};
}

inline codec::Literal random_literal(Rng& rng) {
  codec::Literal lit;
  if (rng.uniform() < 0.5) {
    lit.kind = codec::Literal::Kind::kNumber;
    lit.lexical = (rng.uniform() < 0.2 ? "-" : "") + std::to_string(rng.index(100000));
    if (rng.uniform() < 0.3) lit.lexical += "." + std::to_string(rng.index(100));
  } else {
    lit.kind = codec::Literal::Kind::kString;
    lit.lexical = pick(rng, {"Berlin", "x", "a_b", "M\xc3\xbcnchen", "1999-01-01", "", "ok!"});
    if (rng.uniform() < 0.5) lit.language = pick(rng, {"en", "de", "en-GB"});
  }
  return lit;
}

// Every variable used in the head, filters or ORDER BY is bound in a pattern.
inline codec::QueryAst random_query(Rng& rng) {
  using namespace codec;
  static const std::vector<std::string> var_names{"x", "y", "a", "uri", "count_1", "_v"};
  QueryAst q;
  std::vector<Variable> vars;
  auto term = [&](bool literal_ok) -> PatternTerm {
    double u = rng.uniform();
    if (u < 0.35) {
      Variable v{pick(rng, var_names)};
      vars.push_back(v);
      return v;
    }
    if (literal_ok && u < 0.5) return random_literal(rng);
    return random_name(rng);
  };
  std::size_t n = 1 + rng.index(3);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = term(false);
    auto p = term(false);
    auto o = term(true);
    q.patterns.push_back({s, p, o});
  }
  if (vars.empty()) {
    vars.push_back({"x"});
    q.patterns.back().object = vars.back();
  }
  auto any_var = [&] { return vars[rng.index(vars.size())]; };
  if (rng.uniform() < 0.2) {
    q.form = QueryForm::kAsk;
  } else {
    q.distinct = rng.uniform() < 0.3;
    if (rng.uniform() < 0.25) {
      q.count_var = any_var();
    } else {
      std::size_t k = 1 + rng.index(2);
      for (std::size_t i = 0; i < k; ++i) q.projection.push_back(any_var());
    }
    if (rng.uniform() < 0.3) {
      q.order = OrderBy{rng.uniform() < 0.5 ? SortDirection::kAsc : SortDirection::kDesc, any_var()};
    }
    if (rng.uniform() < 0.3) q.limit = 1 + static_cast<std::int64_t>(rng.index(50));
  }
  std::size_t nf = rng.uniform() < 0.3 ? 1 + rng.index(2) : 0;
  for (std::size_t i = 0; i < nf; ++i) {
    auto op = static_cast<Comparator>(rng.index(6));
    q.filters.push_back({any_var(), op, random_literal(rng)});
  }
  return q;
}

inline bool has_prefixed_name(const codec::QueryAst& q) {
  for (const auto& tp : q.patterns) {
    for (const auto* t : {&tp.subject, &tp.predicate, &tp.object}) {
      if (std::holds_alternative<codec::PrefixedName>(*t)) return true;
    }
  }
  return false;
}

}  // namespace nspm::testing
