#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xq/evaluator.hpp"
#include "xq/notation.hpp"

namespace xq {

// Splits a stream of concatenated game records into raw record texts without
// loading the whole file. A record is a tag section followed by movetext; the
// next '[' line after movetext starts a new record.
class RecordReader {
  public:
    explicit RecordReader(std::istream& in) : in_(in) {}

    struct RawRecord {
        std::string text;
        std::size_t first_line = 0;  // 1-based line number in the stream
    };

    std::optional<RawRecord> next();

  private:
    std::istream& in_;
    std::size_t line_no_ = 0;
    std::optional<std::string> pending_line_;
};

struct ParseErrorLocation {
    std::string file;
    std::size_t record_index = 0;  // 0-based within the file
    std::size_t line = 0;          // record's first line in the file
    std::string message;
};

struct CorpusStats {
    std::uint64_t games = 0;
    std::uint64_t total_moves = 0;
    std::uint64_t red_wins = 0;
    std::uint64_t black_wins = 0;
    std::uint64_t draws = 0;
    std::uint64_t unknown_results = 0;
    std::uint64_t parse_errors = 0;
    std::vector<ParseErrorLocation> first_errors;  // at most 10
};

CorpusStats scan_corpus(std::span<const std::string> paths,
                        IccsRankBase base = IccsRankBase::Zero);

struct RecordIssue {
    std::string file;
    std::size_t record_index = 0;
    int ply = -1;  // -1 for syntax problems, else first illegal ply
    bool syntax = false;
    std::string message;
};

struct ValidationReport {
    std::uint64_t records = 0;
    std::uint64_t legal_records = 0;
    std::vector<RecordIssue> issues;

    double legality_rate() const {
        return records == 0 ? 1.0 : static_cast<double>(legal_records) / records;
    }
};

// Replays every record; reports the first illegal ply per bad record.
ValidationReport validate_corpus(std::span<const std::string> paths,
                                 IccsRankBase base = IccsRankBase::Zero);

// Writes behavior-cloning examples for every fully legal record as JSON
// lines, in file order then ply order, plus a sidecar manifest
// `<out_path>.manifest.json`. Records that fail to parse or replay are
// skipped whole. Returns the number of examples written.
std::uint64_t export_training_set(std::span<const std::string> paths, const std::string& out_path,
                                  std::optional<std::uint64_t> limit = std::nullopt,
                                  IccsRankBase base = IccsRankBase::Zero);

void save_training_set(const std::string& path, std::span<const TrainingExample> examples);
std::vector<TrainingExample> load_training_set(const std::string& path);

std::string example_to_json(const TrainingExample& example);
TrainingExample example_from_json(const std::string& line);

}  // namespace xq
