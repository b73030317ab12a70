#include "xq/corpus.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xq/errors.hpp"
#include "xq/selfplay.hpp"

namespace xq {

namespace {

using ordered_json = nlohmann::ordered_json;

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

bool is_tag_line(const std::string& line) {
    std::size_t first = line.find_first_not_of(" \t");
    return first != std::string::npos && line[first] == '[';
}

struct Fnv1a64 {
    std::uint64_t state = 0xcbf29ce484222325ULL;
    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state ^= c;
            state *= 0x100000001b3ULL;
        }
    }
    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(16, '0');
        for (int i = 0; i < 16; ++i) out[15 - i] = digits[(state >> (4 * i)) & 0xf];
        return out;
    }
};

}  // namespace

std::optional<RecordReader::RawRecord> RecordReader::next() {
    std::string text;
    std::size_t first_line = 0;
    bool in_movetext = false;

    auto take_line = [&](std::string& line) -> bool {
        if (pending_line_) {
            line = std::move(*pending_line_);
            pending_line_.reset();
            return true;
        }
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        return true;
    };

    std::string line;
    while (take_line(line)) {
        if (text.empty() && is_blank(line)) continue;  // leading blanks
        if (in_movetext && is_tag_line(line)) {
            pending_line_ = std::move(line);
            return RawRecord{std::move(text), first_line};
        }
        if (text.empty()) first_line = line_no_;
        if (!is_tag_line(line) && !is_blank(line)) in_movetext = true;
        text += line;
        text += '\n';
    }
    if (text.empty()) return std::nullopt;
    return RawRecord{std::move(text), first_line};
}

namespace {

template <typename PerRecord>
void stream_records(std::span<const std::string> paths, PerRecord&& fn) {
    for (const std::string& path : paths) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open corpus file: " + path);
        RecordReader reader(in);
        std::size_t index = 0;
        while (auto raw = reader.next()) {
            fn(path, index, *raw);
            ++index;
        }
    }
}

}  // namespace

CorpusStats scan_corpus(std::span<const std::string> paths, IccsRankBase base) {
    CorpusStats stats;
    stream_records(paths, [&](const std::string& path, std::size_t index,
                              const RecordReader::RawRecord& raw) {
        GameRecord record;
        try {
            record = parse_game_record(raw.text, base);
        } catch (const Error& e) {
            ++stats.parse_errors;
            if (stats.first_errors.size() < 10)
                stats.first_errors.push_back({path, index, raw.first_line, e.what()});
            return;
        }
        ++stats.games;
        stats.total_moves += record.moves.size();
        switch (record.result) {
            case GameResult::RedWin: ++stats.red_wins; break;
            case GameResult::BlackWin: ++stats.black_wins; break;
            case GameResult::Draw: ++stats.draws; break;
            case GameResult::Unknown: ++stats.unknown_results; break;
        }
    });
    return stats;
}

ValidationReport validate_corpus(std::span<const std::string> paths, IccsRankBase base) {
    ValidationReport report;
    stream_records(paths, [&](const std::string& path, std::size_t index,
                              const RecordReader::RawRecord& raw) {
        ++report.records;
        GameRecord record;
        try {
            record = parse_game_record(raw.text, base);
        } catch (const Error& e) {
            report.issues.push_back({path, index, -1, true, e.what()});
            return;
        }
        try {
            cloning_examples(record);
        } catch (const IllegalRecordMoveError& e) {
            report.issues.push_back({path, index, e.ply, false, e.what()});
            return;
        } catch (const Error& e) {  // e.g. an invalid FEN tag
            report.issues.push_back({path, index, -1, true, e.what()});
            return;
        }
        ++report.legal_records;
    });
    return report;
}

std::string example_to_json(const TrainingExample& example) {
    ordered_json j;
    j["fen"] = example.fen;
    j["side"] = example.side == Color::Red ? "w" : "b";
    if (example.target_action) {
        j["target"] = emit_iccs_move(decode_action(*example.target_action));
        j["action_index"] = *example.target_action;
    } else {
        ordered_json pi = ordered_json::array();
        for (const auto& [a, p] : example.target_policy) pi.push_back({a, p});
        j["pi"] = std::move(pi);
    }
    j["z"] = example.z;
    return j.dump();
}

TrainingExample example_from_json(const std::string& line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw SyntaxError(std::string("bad example JSON: ") + e.what());
    }
    GameState state = parse_fen(j.at("fen").get<std::string>());
    std::string side = j.at("side").get<std::string>();
    Color side_color = side == "w" || side == "r" ? Color::Red : Color::Black;
    if (side_color != state.side_to_move())
        throw SyntaxError("example side disagrees with its FEN");

    double z = j.at("z").get<double>();
    if (j.contains("pi")) {
        std::vector<std::pair<ActionIndex, double>> pi;
        for (const auto& entry : j.at("pi"))
            pi.emplace_back(entry.at(0).get<ActionIndex>(), entry.at(1).get<double>());
        return make_selfplay_example(state, std::move(pi), z);
    }
    ActionIndex action = j.at("action_index").get<ActionIndex>();
    return make_cloning_example(state, decode_action(action), z);
}

std::uint64_t export_training_set(std::span<const std::string> paths, const std::string& out_path,
                                  std::optional<std::uint64_t> limit, IccsRankBase base) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + out_path);

    Fnv1a64 digest;
    std::uint64_t written = 0;
    std::uint64_t records_exported = 0;
    std::uint64_t records_skipped = 0;
    bool done = false;

    stream_records(paths, [&](const std::string&, std::size_t, const RecordReader::RawRecord& raw) {
        if (done) return;
        std::vector<TrainingExample> examples;
        try {
            examples = cloning_examples(parse_game_record(raw.text, base)).examples;
        } catch (const Error&) {
            ++records_skipped;  // a corrupted game must not inject a wrong target
            return;
        }
        ++records_exported;
        for (const TrainingExample& e : examples) {
            if (limit && written >= *limit) {
                done = true;
                break;
            }
            std::string json = example_to_json(e) + "\n";
            out << json;
            digest.update(json);
            ++written;
        }
    });
    out.flush();
    if (!out) throw IoError("failed writing training set: " + out_path);

    ordered_json manifest;
    manifest["sources"] = std::vector<std::string>(paths.begin(), paths.end());
    manifest["examples"] = written;
    manifest["records_exported"] = records_exported;
    manifest["records_skipped"] = records_skipped;
    manifest["digest"] = "fnv1a64:" + digest.hex();
    std::ofstream mout(out_path + ".manifest.json", std::ios::binary);
    if (!mout) throw IoError("cannot open manifest for writing");
    mout << manifest.dump(2) << "\n";
    return written;
}

void save_training_set(const std::string& path, std::span<const TrainingExample> examples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    for (const TrainingExample& e : examples) out << example_to_json(e) << "\n";
    if (!out) throw IoError("failed writing training set: " + path);
}

std::vector<TrainingExample> load_training_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open training set: " + path);
    std::vector<TrainingExample> examples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        examples.push_back(example_from_json(line));
    }
    return examples;
}

}  // namespace xq
