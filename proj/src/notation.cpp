#include "xq/notation.hpp"

#include <cctype>
#include <sstream>

#include "xq/errors.hpp"

namespace xq {

namespace {

constexpr char kKindLetters[kPieceKinds] = {'k', 'a', 'b', 'n', 'r', 'c', 'p'};

std::optional<PieceKind> kind_from_letter(char lower) {
    switch (lower) {
        case 'k': return PieceKind::General;
        case 'a': return PieceKind::Advisor;
        case 'b':
        case 'e': return PieceKind::Elephant;  // 'e' accepted as an alias
        case 'n':
        case 'h': return PieceKind::Horse;     // 'h' accepted as an alias
        case 'r': return PieceKind::Rook;
        case 'c': return PieceKind::Cannon;
        case 'p': return PieceKind::Soldier;
        default: return std::nullopt;
    }
}

char piece_letter(Piece p) {
    char c = kKindLetters[static_cast<int>(p.kind)];
    return p.color == Color::Red ? static_cast<char>(std::toupper(c)) : c;
}

}  // namespace

std::string result_token(GameResult r) {
    switch (r) {
        case GameResult::RedWin: return "1-0";
        case GameResult::BlackWin: return "0-1";
        case GameResult::Draw: return "1/2-1/2";
        case GameResult::Unknown: return "*";
    }
    return "*";
}

std::optional<GameResult> parse_result_token(std::string_view t) {
    if (t == "1-0") return GameResult::RedWin;
    if (t == "0-1") return GameResult::BlackWin;
    if (t == "1/2-1/2") return GameResult::Draw;
    if (t == "*") return GameResult::Unknown;
    return std::nullopt;
}

std::optional<std::string> GameRecord::tag(std::string_view name) const {
    for (const auto& [k, v] : tags)
        if (k == name) return v;
    return std::nullopt;
}

GameState GameRecord::start_state() const {
    if (auto fen = tag("FEN")) return parse_fen(*fen);
    return initial_position();
}

GameState parse_fen(std::string_view text) {
    // Two whitespace-separated fields: board and side to move. Anything
    // after the side field is tolerated and ignored (corpora vary).
    std::size_t pos = text.find_first_not_of(" \t\r\n");
    if (pos == std::string_view::npos) throw SyntaxError("empty FEN");
    std::size_t end = text.find_first_of(" \t\r\n", pos);
    std::string_view board_field = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    std::string_view rest = end == std::string_view::npos ? std::string_view{} : text.substr(end);
    std::size_t spos = rest.find_first_not_of(" \t\r\n");
    if (spos == std::string_view::npos) throw SyntaxError("FEN is missing the side-to-move field");
    std::size_t send = rest.find_first_of(" \t\r\n", spos);
    std::string_view side_field =
        rest.substr(spos, send == std::string_view::npos ? send : send - spos);

    GameState::Board board{};
    int rank = 9;
    int file = 0;
    int rank_fields = 1;
    for (char ch : board_field) {
        if (ch == '/') {
            if (file != kNumFiles)
                throw SyntaxError("FEN rank has wrong width at rank " + std::to_string(rank));
            ++rank_fields;
            --rank;
            file = 0;
            if (rank < 0) break;
            continue;
        }
        if (rank < 0) throw SyntaxError("FEN has more than 10 rank fields");
        if (ch >= '1' && ch <= '9') {
            file += ch - '0';
            if (file > kNumFiles)
                throw SyntaxError("FEN rank overflows at rank " + std::to_string(rank));
            continue;
        }
        auto kind = kind_from_letter(static_cast<char>(std::tolower(ch)));
        if (!kind) throw SyntaxError(std::string("invalid FEN character '") + ch + "'");
        if (file >= kNumFiles)
            throw SyntaxError("FEN rank overflows at rank " + std::to_string(rank));
        Color color = std::isupper(static_cast<unsigned char>(ch)) ? Color::Red : Color::Black;
        board[Square{file, rank}.index()] = GameState::encode_piece({color, *kind});
        ++file;
    }
    if (rank_fields != kNumRanks) throw SyntaxError("FEN must have exactly 10 rank fields");
    if (file != kNumFiles) throw SyntaxError("FEN rank has wrong width at rank 0");

    Color side;
    if (side_field == "w" || side_field == "W" || side_field == "r" || side_field == "R")
        side = Color::Red;
    else if (side_field == "b" || side_field == "B")
        side = Color::Black;
    else
        throw SyntaxError("invalid side-to-move field '" + std::string(side_field) + "'");

    return GameState::from_board(board, side);
}

std::string emit_fen(const GameState& state) {
    std::string out;
    for (int rank = 9; rank >= 0; --rank) {
        int run = 0;
        for (int file = 0; file < kNumFiles; ++file) {
            auto p = state.piece_at({file, rank});
            if (!p) {
                ++run;
                continue;
            }
            if (run > 0) {
                out += static_cast<char>('0' + run);
                run = 0;
            }
            out += piece_letter(*p);
        }
        if (run > 0) out += static_cast<char>('0' + run);
        if (rank > 0) out += '/';
    }
    out += state.side_to_move() == Color::Red ? " w" : " b";
    return out;
}

namespace {

int parse_iccs_file(char c) {
    char lower = static_cast<char>(std::tolower(c));
    if (lower < 'a' || lower > 'i') return -1;
    return lower - 'a';
}

// Parses one <file><rank> pair starting at `i`; advances `i` past it.
Square parse_iccs_square(std::string_view text, std::size_t& i, IccsRankBase base) {
    if (i >= text.size()) throw SyntaxError("ICCS move is too short: '" + std::string(text) + "'");
    int file = parse_iccs_file(text[i]);
    if (file < 0)
        throw SyntaxError(std::string("invalid ICCS file letter '") + text[i] + "'");
    ++i;
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
        throw SyntaxError("ICCS move lacks a rank digit: '" + std::string(text) + "'");
    int rank = text[i] - '0';
    ++i;
    if (base == IccsRankBase::One) {
        // Ranks run 1-10; "10" is the only two-digit rank.
        if (rank == 1 && i < text.size() && text[i] == '0') {
            rank = 10;
            ++i;
        }
        if (rank < 1) throw SyntaxError("ICCS rank 0 is invalid in 1-10 mode");
        rank -= 1;
    }
    return {file, rank};
}

}  // namespace

Move parse_iccs_move(std::string_view text, IccsRankBase base) {
    std::size_t i = 0;
    Square from = parse_iccs_square(text, i, base);
    if (i < text.size() && text[i] == '-') ++i;
    Square to = parse_iccs_square(text, i, base);
    if (i != text.size())
        throw SyntaxError("trailing characters in ICCS move '" + std::string(text) + "'");
    if (from == to) throw SyntaxError("ICCS move has identical squares: '" + std::string(text) + "'");
    return {from, to};
}

std::string emit_iccs_move(Move move) {
    std::string out;
    out += static_cast<char>('a' + move.from.file);
    out += static_cast<char>('0' + move.from.rank);
    out += '-';
    out += static_cast<char>('a' + move.to.file);
    out += static_cast<char>('0' + move.to.rank);
    return out;
}

namespace {

bool is_move_number(std::string_view token) {
    std::size_t i = 0;
    while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i;
    if (i == 0) return false;
    while (i < token.size() && token[i] == '.') ++i;
    return i == token.size();
}

struct TagLine {
    std::string name;
    std::string value;
};

TagLine parse_tag_line(std::string_view line, std::size_t line_no) {
    std::size_t i = 1;  // past '['
    std::size_t name_start = i;
    while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_'))
        ++i;
    if (i == name_start) throw SyntaxError("tag name expected", line_no, i + 1);
    std::string name(line.substr(name_start, i - name_start));
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] != '"') throw SyntaxError("tag value expected", line_no, i + 1);
    ++i;
    std::string value;
    bool closed = false;
    for (; i < line.size(); ++i) {
        if (line[i] == '\\' && i + 1 < line.size()) {
            value += line[++i];
        } else if (line[i] == '"') {
            closed = true;
            ++i;
            break;
        } else {
            value += line[i];
        }
    }
    if (!closed) throw SyntaxError("unterminated tag value", line_no, i + 1);
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] != ']') throw SyntaxError("']' expected", line_no, i + 1);
    return {std::move(name), std::move(value)};
}

}  // namespace

GameRecord parse_game_record(std::string_view text, IccsRankBase base) {
    GameRecord record;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool in_moves = false;
    bool saw_trailing_result = false;
    std::optional<GameResult> tag_result;
    std::optional<GameResult> trailing_result;

    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos) continue;  // blank

        if (!in_moves && line[first] == '[') {
            TagLine tag = parse_tag_line(line.substr(first), line_no);
            if (tag.name == "Result") {
                tag_result = parse_result_token(tag.value);
                if (!tag_result)
                    throw SyntaxError("invalid Result value '" + tag.value + "'", line_no, 1);
            }
            if (tag.name == "Format" && tag.value != "ICCS")
                throw UnsupportedFormatError("unsupported record format '" + tag.value + "'");
            record.tags.emplace_back(std::move(tag.name), std::move(tag.value));
            continue;
        }

        in_moves = true;
        std::size_t i = first;
        while (i < line.size()) {
            if (line[i] == ' ' || line[i] == '\t') {
                ++i;
                continue;
            }
            if (line[i] == '{') {
                // Brace comments are skipped; they must close on this line or
                // a following one. Multi-line comments consume whole lines.
                std::size_t close = line.find('}', i);
                while (close == std::string_view::npos) {
                    if (pos >= text.size())
                        throw SyntaxError("unterminated comment", line_no, i + 1);
                    std::size_t next_eol = text.find('\n', pos);
                    line = text.substr(
                        pos, next_eol == std::string_view::npos ? std::string_view::npos
                                                                : next_eol - pos);
                    pos = next_eol == std::string_view::npos ? text.size() : next_eol + 1;
                    ++line_no;
                    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                    close = line.find('}');
                }
                i = close + 1;
                continue;
            }
            if (line[i] == '(')
                throw SyntaxError("variations are not supported", line_no, i + 1);
            std::size_t tok_end = line.find_first_of(" \t", i);
            std::string_view token =
                line.substr(i, tok_end == std::string_view::npos ? std::string_view::npos
                                                                 : tok_end - i);
            std::size_t col = i + 1;
            i = tok_end == std::string_view::npos ? line.size() : tok_end;

            if (saw_trailing_result)
                throw SyntaxError("tokens after the result", line_no, col);
            if (is_move_number(token)) continue;
            if (auto res = parse_result_token(token)) {
                trailing_result = res;
                saw_trailing_result = true;
                continue;
            }
            try {
                record.moves.push_back(parse_iccs_move(token, base));
            } catch (const SyntaxError& e) {
                throw SyntaxError(e.what(), line_no, col);
            }
        }
    }

    if (tag_result)
        record.result = *tag_result;
    else if (trailing_result)
        record.result = *trailing_result;
    else
        record.result = GameResult::Unknown;
    return record;
}

std::string emit_game_record(const GameRecord& record) {
    std::ostringstream out;
    for (const auto& [name, value] : record.tags) {
        std::string escaped;
        for (char c : value) {
            if (c == '"' || c == '\\') escaped += '\\';
            escaped += c;
        }
        out << '[' << name << " \"" << escaped << "\"]\n";
    }
    out << '\n';
    std::size_t col = 0;
    for (std::size_t i = 0; i < record.moves.size(); ++i) {
        std::string token;
        if (i % 2 == 0) token = std::to_string(i / 2 + 1) + ". ";
        token += emit_iccs_move(record.moves[i]);
        if (col > 0 && col + token.size() + 1 > 78) {
            out << '\n';
            col = 0;
        } else if (col > 0) {
            out << ' ';
            ++col;
        }
        out << token;
        col += token.size();
    }
    if (col > 0) out << ' ';
    out << result_token(record.result) << '\n';
    return out.str();
}

std::string render_board(const GameState& state) {
    std::ostringstream out;
    for (int rank = 9; rank >= 0; --rank) {
        out << rank << "  ";
        for (int file = 0; file < kNumFiles; ++file) {
            auto p = state.piece_at({file, rank});
            out << (p ? piece_letter(*p) : '.');
            if (file + 1 < kNumFiles) out << ' ';
        }
        out << '\n';
        if (rank == 5) out << "   ~ ~ ~ ~ ~ ~ ~ ~ ~\n";
    }
    out << "   a b c d e f g h i\n";
    return out.str();
}

}  // namespace xq
