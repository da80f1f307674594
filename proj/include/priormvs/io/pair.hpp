#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "priormvs/error.hpp"
#include "priormvs/io/text.hpp"
#include "priormvs/scene.hpp"

namespace priormvs::io {

/// Parses a view-selection file: the view count, then per view a line with its
/// id and a line "n id0 score0 id1 score1 ...". Every view has exactly one block.
inline PairList parse_pair(std::string_view text) {
  const auto lines = tokenized_lines(text);
  if (lines.empty()) throw ParseError("empty pair file", 1);
  if (lines[0].tokens.size() != 1) throw ParseError("expected the view count", lines[0].number);
  const std::int64_t count = require_int(lines[0].tokens[0], lines[0].number);
  if (count < 0) throw ParseError("view count must be non-negative", lines[0].number);
  if (static_cast<std::size_t>(count) > lines.size())
    throw ParseError("view count exceeds the file content", lines[0].number);

  PairList pairs(static_cast<std::size_t>(count));
  std::vector<bool> seen(pairs.size(), false);
  std::size_t at = 1;
  for (std::int64_t v = 0; v < count; ++v) {
    if (at >= lines.size())
      throw ParseError("missing block for view " + std::to_string(v),
                       lines.back().number + 1);
    const TextLine& id_line = lines[at++];
    if (id_line.tokens.size() != 1) throw ParseError("expected a single view id", id_line.number);
    const std::int64_t id = require_int(id_line.tokens[0], id_line.number);
    if (id < 0 || id >= count) throw ParseError("view id out of range", id_line.number);
    if (seen[id]) throw ParseError("duplicate block for view " + std::to_string(id), id_line.number);
    seen[id] = true;

    if (at >= lines.size())
      throw ParseError("missing neighbor line for view " + std::to_string(id), id_line.number + 1);
    const TextLine& list = lines[at++];
    const std::int64_t n = require_int(list.tokens[0], list.number);
    if (n < 0) throw ParseError("neighbor count must be non-negative", list.number);
    if (list.tokens.size() % 2 == 0 || (list.tokens.size() - 1) / 2 != static_cast<std::size_t>(n))
      throw ParseError("neighbor line must hold the count followed by id/score pairs", list.number);
    auto& neighbors = pairs[static_cast<std::size_t>(id)];
    for (std::int64_t k = 0; k < n; ++k) {
      const std::int64_t nid = require_int(list.tokens[1 + 2 * k], list.number);
      if (nid < 0 || nid >= count)
        throw ParseError("neighbor id " + std::to_string(nid) + " out of range", list.number);
      neighbors.push_back({static_cast<std::size_t>(nid),
                           require_double(list.tokens[2 + 2 * k], list.number)});
    }
  }
  if (at != lines.size()) throw ParseError("unexpected content after the last view", lines[at].number);
  return pairs;
}

inline std::string write_pair(const PairList& pairs) {
  std::string out = std::to_string(pairs.size()) + '\n';
  for (std::size_t v = 0; v < pairs.size(); ++v) {
    out += std::to_string(v) + '\n' + std::to_string(pairs[v].size());
    for (const auto& n : pairs[v]) out += ' ' + std::to_string(n.id) + ' ' + format_double(n.score);
    out += '\n';
  }
  return out;
}

}  // namespace priormvs::io
