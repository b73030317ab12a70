#pragma once

// Naive reference move generator, deliberately independent of the engine's
// generation path: every (from, to) square pair is tested against
// first-principles movement predicates, then applied and scanned for a
// capturable general or facing generals.

#include <cstdint>
#include <vector>

#include "xq/rules.hpp"

namespace xq::oracle {

std::vector<Move> oracle_legal_moves(const GameState& state);

std::uint64_t oracle_perft(const GameState& state, int depth);

}  // namespace xq::oracle
