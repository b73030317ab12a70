#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

namespace xq {

enum class Color : std::uint8_t { Red = 0, Black = 1 };

constexpr Color opponent(Color c) {
    return c == Color::Red ? Color::Black : Color::Red;
}

enum class PieceKind : std::uint8_t {
    General = 0,
    Advisor,
    Elephant,
    Horse,
    Rook,
    Cannon,
    Soldier,
};

inline constexpr int kPieceKinds = 7;
inline constexpr int kNumFiles = 9;
inline constexpr int kNumRanks = 10;
inline constexpr int kNumSquares = 90;

struct Piece {
    Color color;
    PieceKind kind;
    bool operator==(const Piece&) const = default;
};

// Board coordinates. File 0 is the leftmost file from Red's point of view
// (ICCS letter 'a'); rank 0 is Red's back rank.
struct Square {
    int file = 0;  // 0..8
    int rank = 0;  // 0..9
    constexpr int index() const { return rank * kNumFiles + file; }
    static constexpr Square from_index(int idx) { return {idx % kNumFiles, idx / kNumFiles}; }
    auto operator<=>(const Square&) const = default;
};

constexpr bool on_board(int file, int rank) {
    return file >= 0 && file < kNumFiles && rank >= 0 && rank < kNumRanks;
}

constexpr bool in_palace(Color c, int file, int rank) {
    if (file < 3 || file > 5) return false;
    return c == Color::Red ? rank >= 0 && rank <= 2 : rank >= 7 && rank <= 9;
}

// Own side of the river: ranks 0-4 for Red, 5-9 for Black.
constexpr bool on_own_side(Color c, int rank) {
    return c == Color::Red ? rank <= 4 : rank >= 5;
}

constexpr bool across_river(Color c, int rank) {
    return !on_own_side(c, rank);
}

struct Move {
    Square from;
    Square to;
    auto operator<=>(const Move&) const = default;
};

enum class TerminalReason : std::uint8_t {
    Checkmate,
    Stalemate,
    Repetition,
    MoveCap,
    PerpetualCheck,
};

struct GameStatus {
    enum class Kind : std::uint8_t { Ongoing, RedWins, BlackWins, Draw };
    Kind kind = Kind::Ongoing;
    TerminalReason reason = TerminalReason::Checkmate;  // meaningful only when terminal

    bool terminal() const { return kind != Kind::Ongoing; }
    std::optional<Color> winner() const {
        if (kind == Kind::RedWins) return Color::Red;
        if (kind == Kind::BlackWins) return Color::Black;
        return std::nullopt;
    }

    static GameStatus ongoing() { return {}; }
    static GameStatus wins(Color c, TerminalReason r) {
        return {c == Color::Red ? Kind::RedWins : Kind::BlackWins, r};
    }
    static GameStatus draw(TerminalReason r) { return {Kind::Draw, r}; }

    bool operator==(const GameStatus&) const = default;
};

struct HistoryEntry {
    std::uint64_t hash = 0;      // position hash after the move
    bool gave_check = false;     // did the move put the opponent in check
};

inline constexpr int kDefaultMoveCap = 200;

// Immutable game position plus the hash history needed for repetition
// adjudication. All mutating operations return a new state.
class GameState {
  public:
    using Board = std::array<std::int8_t, kNumSquares>;  // 0 = empty, else piece code

    static constexpr std::int8_t encode_piece(Piece p) {
        return static_cast<std::int8_t>(1 + static_cast<int>(p.color) * kPieceKinds +
                                        static_cast<int>(p.kind));
    }
    static constexpr Piece decode_piece(std::int8_t code) {
        int v = code - 1;
        return {static_cast<Color>(v / kPieceKinds), static_cast<PieceKind>(v % kPieceKinds)};
    }

    // Builds a state from raw occupancy, validating every position invariant.
    // Throws InvalidPositionError. Ply starts at 0 and history at one entry.
    static GameState from_board(const Board& board, Color side_to_move);

    std::optional<Piece> piece_at(Square sq) const {
        std::int8_t c = board_[sq.index()];
        if (c == 0) return std::nullopt;
        return decode_piece(c);
    }
    const Board& board() const { return board_; }
    Color side_to_move() const { return side_to_move_; }
    int ply() const { return ply_; }
    const std::vector<HistoryEntry>& history() const { return history_; }
    std::uint64_t hash() const { return hash_; }

    friend GameState apply_move(const GameState&, Move);
    friend GameState initial_position();

  private:
    GameState() = default;

    Board board_{};
    Color side_to_move_ = Color::Red;
    int ply_ = 0;
    std::vector<HistoryEntry> history_;
    std::uint64_t hash_ = 0;
};

GameState initial_position();

// Every legal move for the side to move, in deterministic order
// (ascending source square, fixed per-piece direction order). Terminal
// positions yield an empty vector.
std::vector<Move> legal_moves(const GameState& state);

// True iff `move` is pseudo-legal for the piece on `move.from` and leaves the
// mover's general unattacked with the generals not facing.
bool is_legal_move(const GameState& state, Move move);

// Applies a legal move. Throws IllegalMoveError otherwise.
GameState apply_move(const GameState& state, Move move);

bool is_in_check(const GameState& state, Color color);

// True iff the two generals share a file with nothing between them.
bool generals_facing(const GameState::Board& board);

GameStatus status(const GameState& state, int move_cap = kDefaultMoveCap);

std::uint64_t perft(const GameState& state, int depth);

// Deterministic hash over occupancy and side to move (fixed-seed tabulation).
std::uint64_t position_hash(const GameState& state);

// Same occupancy and side to move; ply and history are ignored.
bool same_position(const GameState& a, const GameState& b);

}  // namespace xq
