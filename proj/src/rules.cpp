#include "xq/rules.hpp"

#include <algorithm>
#include <cstdlib>

#include "xq/errors.hpp"

namespace xq {

namespace {

// Fixed-seed tabulation hashing; the seed is a build constant so hashes are
// stable across runs and platforms.
constexpr std::uint64_t kHashSeed = 0x587a51764ea1a0b3ULL;

constexpr std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct HashTables {
    std::uint64_t piece[kNumSquares][2 * kPieceKinds];
    std::uint64_t black_to_move;
};

const HashTables& hash_tables() {
    static const HashTables tables = [] {
        HashTables t;
        std::uint64_t s = kHashSeed;
        for (auto& row : t.piece)
            for (auto& v : row) v = splitmix64(s);
        t.black_to_move = splitmix64(s);
        return t;
    }();
    return tables;
}

std::uint64_t hash_board(const GameState::Board& board, Color side_to_move) {
    const auto& t = hash_tables();
    std::uint64_t h = 0;
    for (int i = 0; i < kNumSquares; ++i)
        if (board[i] != 0) h ^= t.piece[i][board[i] - 1];
    if (side_to_move == Color::Black) h ^= t.black_to_move;
    return h;
}

constexpr int kOrtho[4][2] = {{0, 1}, {0, -1}, {1, 0}, {-1, 0}};
constexpr int kDiag[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
// {dfile, drank, leg_dfile, leg_drank}; the leg is adjacent to the source.
constexpr int kHorse[8][4] = {
    {1, 2, 0, 1},  {-1, 2, 0, 1},  {1, -2, 0, -1},  {-1, -2, 0, -1},
    {2, 1, 1, 0},  {2, -1, 1, 0},  {-2, 1, -1, 0},  {-2, -1, -1, 0},
};

inline bool is_color(std::int8_t code, Color c) {
    if (code == 0) return false;
    return (code - 1) / kPieceKinds == static_cast<int>(c);
}

inline std::int8_t piece_code(Color c, PieceKind k) {
    return GameState::encode_piece({c, k});
}

Square find_general(const GameState::Board& board, Color c) {
    std::int8_t g = piece_code(c, PieceKind::General);
    for (int i = 0; i < kNumSquares; ++i)
        if (board[i] == g) return Square::from_index(i);
    return {-1, -1};
}

// Can a piece of `by` capture `target`? Generals are deliberately excluded:
// facing generals are handled as a separate legality condition, and advisors
// and elephants can never reach the enemy palace.
bool square_attacked(const GameState::Board& board, Square target, Color by) {
    const std::int8_t rook = piece_code(by, PieceKind::Rook);
    const std::int8_t cannon = piece_code(by, PieceKind::Cannon);
    const std::int8_t horse = piece_code(by, PieceKind::Horse);
    const std::int8_t soldier = piece_code(by, PieceKind::Soldier);

    for (const auto& d : kOrtho) {
        int f = target.file + d[0];
        int r = target.rank + d[1];
        int seen = 0;
        while (on_board(f, r)) {
            std::int8_t code = board[Square{f, r}.index()];
            if (code != 0) {
                ++seen;
                if (seen == 1 && code == rook) return true;
                if (seen == 2 && code == cannon) return true;
                if (seen == 2) break;
            }
            f += d[0];
            r += d[1];
        }
    }

    for (const auto& h : kHorse) {
        int f = target.file + h[0];
        int r = target.rank + h[1];
        if (!on_board(f, r) || board[Square{f, r}.index()] != horse) continue;
        // The blocking leg sits next to the horse, toward the target.
        int lf = f - h[2];
        int lr = r - h[3];
        if (board[Square{lf, lr}.index()] == 0) return true;
    }

    // A soldier attacks straight ahead, plus sideways once across the river.
    int forward = by == Color::Red ? 1 : -1;
    {
        int f = target.file;
        int r = target.rank - forward;
        if (on_board(f, r) && board[Square{f, r}.index()] == soldier) return true;
    }
    for (int df : {-1, 1}) {
        int f = target.file + df;
        int r = target.rank;
        if (on_board(f, r) && board[Square{f, r}.index()] == soldier && across_river(by, r))
            return true;
    }
    return false;
}

bool generals_facing_impl(const GameState::Board& board) {
    Square red = find_general(board, Color::Red);
    Square black = find_general(board, Color::Black);
    if (red.file < 0 || black.file < 0 || red.file != black.file) return false;
    for (int r = red.rank + 1; r < black.rank; ++r)
        if (board[Square{red.file, r}.index()] != 0) return false;
    return true;
}

void make_move_on_board(GameState::Board& board, Move m) {
    board[m.to.index()] = board[m.from.index()];
    board[m.from.index()] = 0;
}

// Does applying `m` leave `mover`'s general safe and the generals apart?
bool move_is_safe(const GameState::Board& board, Move m, Color mover) {
    GameState::Board next = board;
    make_move_on_board(next, m);
    Square general = find_general(next, mover);
    if (general.file < 0) return false;
    if (square_attacked(next, general, opponent(mover))) return false;
    return !generals_facing_impl(next);
}

template <typename Fn>
void for_each_pseudo_move(const GameState::Board& board, Color us, Fn&& emit) {
    for (int idx = 0; idx < kNumSquares; ++idx) {
        std::int8_t code = board[idx];
        if (code == 0 || !is_color(code, us)) continue;
        Square from = Square::from_index(idx);
        PieceKind kind = GameState::decode_piece(code).kind;
        auto try_step = [&](int f, int r) {
            if (!on_board(f, r)) return;
            if (is_color(board[Square{f, r}.index()], us)) return;
            emit(Move{from, {f, r}});
        };
        switch (kind) {
            case PieceKind::General:
                for (const auto& d : kOrtho) {
                    int f = from.file + d[0], r = from.rank + d[1];
                    if (in_palace(us, f, r)) try_step(f, r);
                }
                break;
            case PieceKind::Advisor:
                for (const auto& d : kDiag) {
                    int f = from.file + d[0], r = from.rank + d[1];
                    if (in_palace(us, f, r)) try_step(f, r);
                }
                break;
            case PieceKind::Elephant:
                for (const auto& d : kDiag) {
                    int f = from.file + 2 * d[0], r = from.rank + 2 * d[1];
                    if (!on_board(f, r) || !on_own_side(us, r)) continue;
                    if (board[Square{from.file + d[0], from.rank + d[1]}.index()] != 0)
                        continue;  // elephant eye blocked
                    try_step(f, r);
                }
                break;
            case PieceKind::Horse:
                for (const auto& h : kHorse) {
                    int lf = from.file + h[2], lr = from.rank + h[3];
                    if (!on_board(lf, lr) || board[Square{lf, lr}.index()] != 0)
                        continue;  // horse leg blocked
                    try_step(from.file + h[0], from.rank + h[1]);
                }
                break;
            case PieceKind::Rook:
                for (const auto& d : kOrtho) {
                    int f = from.file + d[0], r = from.rank + d[1];
                    while (on_board(f, r)) {
                        std::int8_t c = board[Square{f, r}.index()];
                        if (c == 0) {
                            emit(Move{from, {f, r}});
                        } else {
                            if (!is_color(c, us)) emit(Move{from, {f, r}});
                            break;
                        }
                        f += d[0];
                        r += d[1];
                    }
                }
                break;
            case PieceKind::Cannon:
                for (const auto& d : kOrtho) {
                    int f = from.file + d[0], r = from.rank + d[1];
                    bool jumped = false;
                    while (on_board(f, r)) {
                        std::int8_t c = board[Square{f, r}.index()];
                        if (!jumped) {
                            if (c == 0)
                                emit(Move{from, {f, r}});
                            else
                                jumped = true;  // found the screen
                        } else if (c != 0) {
                            if (!is_color(c, us)) emit(Move{from, {f, r}});
                            break;
                        }
                        f += d[0];
                        r += d[1];
                    }
                }
                break;
            case PieceKind::Soldier: {
                int forward = us == Color::Red ? 1 : -1;
                try_step(from.file, from.rank + forward);
                if (across_river(us, from.rank)) {
                    try_step(from.file - 1, from.rank);
                    try_step(from.file + 1, from.rank);
                }
                break;
            }
        }
    }
}

// Single-move counterpart of the generator above.
bool pseudo_legal(const GameState::Board& board, Move m, Color us) {
    if (!on_board(m.from.file, m.from.rank) || !on_board(m.to.file, m.to.rank)) return false;
    if (m.from == m.to) return false;
    std::int8_t code = board[m.from.index()];
    if (code == 0 || !is_color(code, us)) return false;
    if (is_color(board[m.to.index()], us)) return false;

    int df = m.to.file - m.from.file;
    int dr = m.to.rank - m.from.rank;
    switch (GameState::decode_piece(code).kind) {
        case PieceKind::General:
            return std::abs(df) + std::abs(dr) == 1 && in_palace(us, m.to.file, m.to.rank);
        case PieceKind::Advisor:
            return std::abs(df) == 1 && std::abs(dr) == 1 && in_palace(us, m.to.file, m.to.rank);
        case PieceKind::Elephant:
            return std::abs(df) == 2 && std::abs(dr) == 2 && on_own_side(us, m.to.rank) &&
                   board[Square{m.from.file + df / 2, m.from.rank + dr / 2}.index()] == 0;
        case PieceKind::Horse:
            for (const auto& h : kHorse)
                if (df == h[0] && dr == h[1])
                    return board[Square{m.from.file + h[2], m.from.rank + h[3]}.index()] == 0;
            return false;
        case PieceKind::Rook:
        case PieceKind::Cannon: {
            if (df != 0 && dr != 0) return false;
            int sf = (df > 0) - (df < 0);
            int sr = (dr > 0) - (dr < 0);
            int between = 0;
            for (int f = m.from.file + sf, r = m.from.rank + sr; f != m.to.file || r != m.to.rank;
                 f += sf, r += sr)
                if (board[Square{f, r}.index()] != 0) ++between;
            bool capture = board[m.to.index()] != 0;
            if (GameState::decode_piece(code).kind == PieceKind::Rook) return between == 0;
            return capture ? between == 1 : between == 0;
        }
        case PieceKind::Soldier: {
            int forward = us == Color::Red ? 1 : -1;
            if (df == 0 && dr == forward) return true;
            return dr == 0 && std::abs(df) == 1 && across_river(us, m.from.rank);
        }
    }
    return false;
}

}  // namespace

GameState GameState::from_board(const Board& board, Color side_to_move) {
    int generals[2] = {0, 0};
    for (int i = 0; i < kNumSquares; ++i) {
        std::int8_t code = board[i];
        if (code == 0) continue;
        if (code < 0 || code > 2 * kPieceKinds)
            throw InvalidPositionError("invalid piece code on board");
        Piece p = decode_piece(code);
        Square sq = Square::from_index(i);
        switch (p.kind) {
            case PieceKind::General:
                ++generals[static_cast<int>(p.color)];
                if (!in_palace(p.color, sq.file, sq.rank))
                    throw InvalidPositionError("general outside its palace");
                break;
            case PieceKind::Advisor: {
                int parity = p.color == Color::Red ? 1 : 0;
                if (!in_palace(p.color, sq.file, sq.rank) || (sq.file + sq.rank) % 2 != parity)
                    throw InvalidPositionError("advisor off the palace diagonals");
                break;
            }
            case PieceKind::Elephant: {
                int residue = p.color == Color::Red ? 2 : 3;
                if (!on_own_side(p.color, sq.rank) || sq.file % 2 != 0 ||
                    (sq.file + sq.rank) % 4 != residue)
                    throw InvalidPositionError("elephant on an invalid point");
                break;
            }
            default:
                break;
        }
    }
    if (generals[0] != 1 || generals[1] != 1)
        throw InvalidPositionError("each side must have exactly one general");
    if (generals_facing_impl(board))
        throw InvalidPositionError("generals face each other on an open file");
    {
        Square g = find_general(board, opponent(side_to_move));
        if (square_attacked(board, g, side_to_move))
            throw InvalidPositionError("side not to move is in check");
    }

    GameState s;
    s.board_ = board;
    s.side_to_move_ = side_to_move;
    s.ply_ = 0;
    s.hash_ = hash_board(board, side_to_move);
    s.history_.push_back({s.hash_, false});
    return s;
}

GameState initial_position() {
    GameState::Board board{};
    auto put = [&](Color c, PieceKind k, int file, int rank) {
        board[Square{file, rank}.index()] = GameState::encode_piece({c, k});
    };
    const PieceKind back[9] = {PieceKind::Rook,    PieceKind::Horse,   PieceKind::Elephant,
                               PieceKind::Advisor, PieceKind::General, PieceKind::Advisor,
                               PieceKind::Elephant, PieceKind::Horse,  PieceKind::Rook};
    for (int f = 0; f < kNumFiles; ++f) {
        put(Color::Red, back[f], f, 0);
        put(Color::Black, back[f], f, 9);
    }
    put(Color::Red, PieceKind::Cannon, 1, 2);
    put(Color::Red, PieceKind::Cannon, 7, 2);
    put(Color::Black, PieceKind::Cannon, 1, 7);
    put(Color::Black, PieceKind::Cannon, 7, 7);
    for (int f = 0; f < kNumFiles; f += 2) {
        put(Color::Red, PieceKind::Soldier, f, 3);
        put(Color::Black, PieceKind::Soldier, f, 6);
    }
    return GameState::from_board(board, Color::Red);
}

std::vector<Move> legal_moves(const GameState& state) {
    std::vector<Move> moves;
    moves.reserve(64);
    for_each_pseudo_move(state.board(), state.side_to_move(), [&](Move m) {
        if (move_is_safe(state.board(), m, state.side_to_move())) moves.push_back(m);
    });
    return moves;
}

bool is_legal_move(const GameState& state, Move move) {
    return pseudo_legal(state.board(), move, state.side_to_move()) &&
           move_is_safe(state.board(), move, state.side_to_move());
}

GameState apply_move(const GameState& state, Move move) {
    if (!is_legal_move(state, move)) throw IllegalMoveError("move is not legal in this position");

    const auto& t = hash_tables();
    GameState next = state;
    std::int8_t moving = next.board_[move.from.index()];
    std::int8_t captured = next.board_[move.to.index()];

    next.hash_ ^= t.piece[move.from.index()][moving - 1];
    if (captured != 0) next.hash_ ^= t.piece[move.to.index()][captured - 1];
    next.hash_ ^= t.piece[move.to.index()][moving - 1];
    next.hash_ ^= t.black_to_move;

    make_move_on_board(next.board_, move);
    next.side_to_move_ = opponent(state.side_to_move_);
    next.ply_ = state.ply_ + 1;
    bool gave_check = is_in_check(next, next.side_to_move_);
    next.history_.push_back({next.hash_, gave_check});
    return next;
}

bool is_in_check(const GameState& state, Color color) {
    Square general = find_general(state.board(), color);
    if (general.file < 0) return false;
    return square_attacked(state.board(), general, opponent(color));
}

bool generals_facing(const GameState::Board& board) {
    return generals_facing_impl(board);
}

GameStatus status(const GameState& state, int move_cap) {
    Color mover = state.side_to_move();
    if (legal_moves(state).empty()) {
        TerminalReason reason =
            is_in_check(state, mover) ? TerminalReason::Checkmate : TerminalReason::Stalemate;
        return GameStatus::wins(opponent(mover), reason);
    }

    const auto& hist = state.history();
    const std::size_t latest = hist.size() - 1;
    const std::uint64_t current = hist[latest].hash;
    std::size_t first = latest;
    int occurrences = 0;
    for (std::size_t j = 0; j < hist.size(); ++j) {
        if (hist[j].hash == current) {
            ++occurrences;
            first = std::min(first, j);
        }
    }
    if (occurrences >= 3) {
        // Entry j (j >= 1) records the move made by the side that is NOT to
        // move at entry j; parity from the latest entry recovers the mover.
        auto mover_of = [&](std::size_t j) {
            return (latest - j) % 2 == 0 ? opponent(state.side_to_move()) : state.side_to_move();
        };
        bool checked_every_move[2] = {false, false};
        for (Color c : {Color::Red, Color::Black}) {
            bool any = false, all = true;
            for (std::size_t j = first + 1; j <= latest; ++j) {
                if (mover_of(j) != c) continue;
                any = true;
                all = all && hist[j].gave_check;
            }
            checked_every_move[static_cast<int>(c)] = any && all;
        }
        bool red_perp = checked_every_move[0];
        bool black_perp = checked_every_move[1];
        if (red_perp != black_perp)
            return GameStatus::wins(red_perp ? Color::Black : Color::Red,
                                    TerminalReason::PerpetualCheck);
        return GameStatus::draw(TerminalReason::Repetition);
    }

    if (state.ply() >= move_cap) return GameStatus::draw(TerminalReason::MoveCap);
    return GameStatus::ongoing();
}

std::uint64_t perft(const GameState& state, int depth) {
    if (depth <= 0) return 1;
    std::vector<Move> moves = legal_moves(state);
    if (depth == 1) return moves.size();
    std::uint64_t total = 0;
    for (Move m : moves) total += perft(apply_move(state, m), depth - 1);
    return total;
}

std::uint64_t position_hash(const GameState& state) {
    return hash_board(state.board(), state.side_to_move());
}

bool same_position(const GameState& a, const GameState& b) {
    return a.board() == b.board() && a.side_to_move() == b.side_to_move();
}

}  // namespace xq
