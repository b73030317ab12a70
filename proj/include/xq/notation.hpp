#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xq/rules.hpp"

namespace xq {

enum class GameResult : std::uint8_t { RedWin, BlackWin, Draw, Unknown };

std::string result_token(GameResult r);                      // "1-0", "0-1", "1/2-1/2", "*"
std::optional<GameResult> parse_result_token(std::string_view t);

// ICCS coordinate ranks are 0-9 by default; the One mode shifts a 1-10 input
// down by one so records written with 1-based ranks can still be replayed.
enum class IccsRankBase : std::uint8_t { Zero, One };

struct GameRecord {
    std::vector<std::pair<std::string, std::string>> tags;  // ordered
    std::vector<Move> moves;
    GameResult result = GameResult::Unknown;

    std::optional<std::string> tag(std::string_view name) const;
    // State from the FEN tag, or the standard start when absent.
    GameState start_state() const;
};

GameState parse_fen(std::string_view text);
std::string emit_fen(const GameState& state);

Move parse_iccs_move(std::string_view text, IccsRankBase base = IccsRankBase::Zero);
std::string emit_iccs_move(Move move);

GameRecord parse_game_record(std::string_view text, IccsRankBase base = IccsRankBase::Zero);
std::string emit_game_record(const GameRecord& record);

std::string render_board(const GameState& state);

}  // namespace xq
