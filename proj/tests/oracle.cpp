#include "oracle.hpp"

#include <array>
#include <cstdlib>
#include <optional>

namespace xq::oracle {

namespace {

using Grid = std::array<std::optional<Piece>, 90>;

int at(int file, int rank) { return rank * 9 + file; }

bool inside(int file, int rank) { return file >= 0 && file < 9 && rank >= 0 && rank < 10; }

bool palace(Color c, int file, int rank) {
    if (file < 3 || file > 5) return false;
    return c == Color::Red ? rank >= 0 && rank <= 2 : rank >= 7 && rank <= 9;
}

Grid grid_from(const GameState& state) {
    Grid g;
    for (int r = 0; r < 10; ++r)
        for (int f = 0; f < 9; ++f) g[at(f, r)] = state.piece_at({f, r});
    return g;
}

int pieces_between(const Grid& g, int ff, int fr, int tf, int tr) {
    int df = (tf > ff) - (tf < ff);
    int dr = (tr > fr) - (tr < fr);
    int n = 0;
    int f = ff + df, r = fr + dr;
    while (f != tf || r != tr) {
        if (g[at(f, r)]) ++n;
        f += df;
        r += dr;
    }
    return n;
}

// Movement predicate for a single square pair, written straight from the
// piece rules.
bool may_move(const Grid& g, int ff, int fr, int tf, int tr) {
    if (!inside(ff, fr) || !inside(tf, tr)) return false;
    if (ff == tf && fr == tr) return false;
    const auto& piece = g[at(ff, fr)];
    if (!piece) return false;
    const auto& dest = g[at(tf, tr)];
    if (dest && dest->color == piece->color) return false;

    int df = tf - ff;
    int dr = tr - fr;
    switch (piece->kind) {
        case PieceKind::General:
            return palace(piece->color, tf, tr) && std::abs(df) + std::abs(dr) == 1;
        case PieceKind::Advisor:
            return palace(piece->color, tf, tr) && std::abs(df) == 1 && std::abs(dr) == 1;
        case PieceKind::Elephant: {
            if (std::abs(df) != 2 || std::abs(dr) != 2) return false;
            bool own_side = piece->color == Color::Red ? tr <= 4 : tr >= 5;
            return own_side && !g[at(ff + df / 2, fr + dr / 2)];
        }
        case PieceKind::Horse:
            if (std::abs(df) == 1 && std::abs(dr) == 2) return !g[at(ff, fr + dr / 2)];
            if (std::abs(df) == 2 && std::abs(dr) == 1) return !g[at(ff + df / 2, fr)];
            return false;
        case PieceKind::Rook:
            if (df != 0 && dr != 0) return false;
            return pieces_between(g, ff, fr, tf, tr) == 0;
        case PieceKind::Cannon: {
            if (df != 0 && dr != 0) return false;
            int between = pieces_between(g, ff, fr, tf, tr);
            return dest ? between == 1 : between == 0;
        }
        case PieceKind::Soldier: {
            int forward = piece->color == Color::Red ? 1 : -1;
            if (df == 0 && dr == forward) return true;
            bool crossed = piece->color == Color::Red ? fr >= 5 : fr <= 4;
            return crossed && dr == 0 && std::abs(df) == 1;
        }
    }
    return false;
}

std::optional<std::pair<int, int>> find_general(const Grid& g, Color c) {
    for (int r = 0; r < 10; ++r)
        for (int f = 0; f < 9; ++f) {
            const auto& p = g[at(f, r)];
            if (p && p->color == c && p->kind == PieceKind::General) return {{f, r}};
        }
    return std::nullopt;
}

bool generals_face(const Grid& g) {
    auto red = find_general(g, Color::Red);
    auto black = find_general(g, Color::Black);
    if (!red || !black || red->first != black->first) return false;
    return pieces_between(g, red->first, red->second, black->first, black->second) == 0;
}

bool general_capturable(const Grid& g, Color c) {
    auto general = find_general(g, c);
    if (!general) return true;
    for (int r = 0; r < 10; ++r)
        for (int f = 0; f < 9; ++f) {
            const auto& p = g[at(f, r)];
            if (p && p->color != c && may_move(g, f, r, general->first, general->second))
                return true;
        }
    return false;
}

std::vector<Move> legal_from_grid(const Grid& g, Color mover) {
    std::vector<Move> moves;
    for (int fr = 0; fr < 10; ++fr)
        for (int ff = 0; ff < 9; ++ff) {
            const auto& p = g[at(ff, fr)];
            if (!p || p->color != mover) continue;
            for (int tr = 0; tr < 10; ++tr)
                for (int tf = 0; tf < 9; ++tf) {
                    if (!may_move(g, ff, fr, tf, tr)) continue;
                    Grid next = g;
                    next[at(tf, tr)] = next[at(ff, fr)];
                    next[at(ff, fr)].reset();
                    if (general_capturable(next, mover) || generals_face(next)) continue;
                    moves.push_back({{ff, fr}, {tf, tr}});
                }
        }
    return moves;
}

std::uint64_t perft_from_grid(const Grid& g, Color mover, int depth) {
    if (depth <= 0) return 1;
    std::uint64_t total = 0;
    for (Move m : legal_from_grid(g, mover)) {
        Grid next = g;
        next[at(m.to.file, m.to.rank)] = next[at(m.from.file, m.from.rank)];
        next[at(m.from.file, m.from.rank)].reset();
        total += perft_from_grid(next, opponent(mover), depth - 1);
    }
    return total;
}

}  // namespace

std::vector<Move> oracle_legal_moves(const GameState& state) {
    return legal_from_grid(grid_from(state), state.side_to_move());
}

std::uint64_t oracle_perft(const GameState& state, int depth) {
    return perft_from_grid(grid_from(state), state.side_to_move(), depth);
}

}  // namespace xq::oracle
