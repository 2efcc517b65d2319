#include "sedbox/selection_table.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "sedbox/errors.hpp"
#include "text_util.hpp"

namespace sedbox {

namespace {

using detail::format_fixed;
using detail::parse_double;
using detail::split;
using detail::trim;

constexpr const char* kBeginColumn = "Begin Time (s)";
constexpr const char* kEndColumn = "End Time (s)";
constexpr const char* kAnnotationColumn = "Annotation";
constexpr const char* kScoreColumn = "Score";

std::size_t find_column(const std::vector<std::string>& header, const char* name,
                        const std::filesystem::path& path) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == name) {
            return i;
        }
    }
    throw ValidationError(path.string() + ": missing required column '" +
                          std::string(name) + "'");
}

struct RawRow {
    double begin;
    double end;
    std::string annotation;
    double score;
};

}  // namespace

EventSet read_selection_table(const std::filesystem::path& path,
                              const std::optional<ClassVocab>& vocab,
                              std::optional<double> clip_duration) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("cannot open selection table " + path.string());
    }

    std::string line;
    if (!std::getline(file, line)) {
        throw ValidationError(path.string() + ": empty file (header expected)");
    }
    const auto header = split(std::string(trim(line)), '\t');
    const std::size_t begin_col = find_column(header, kBeginColumn, path);
    const std::size_t end_col = find_column(header, kEndColumn, path);
    const std::size_t annotation_col = find_column(header, kAnnotationColumn, path);
    std::optional<std::size_t> score_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == kScoreColumn) {
            score_col = i;
        }
    }

    std::vector<RawRow> rows;
    std::size_t line_number = 1;
    while (std::getline(file, line)) {
        ++line_number;
        if (trim(line).empty()) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_number);
        const auto fields = split(std::string(trim(line)), '\t');
        const std::size_t needed = std::max({begin_col, end_col, annotation_col,
                                             score_col.value_or(0)});
        if (fields.size() <= needed) {
            throw ValidationError(where + ": expected at least " +
                                  std::to_string(needed + 1) + " columns, found " +
                                  std::to_string(fields.size()));
        }

        RawRow row;
        row.begin = parse_double(fields[begin_col], where + " (begin time)");
        row.end = parse_double(fields[end_col], where + " (end time)");
        row.annotation = std::string(trim(fields[annotation_col]));
        row.score = score_col ? parse_double(fields[*score_col], where + " (score)") : 1.0;

        if (row.begin < 0.0) {
            throw ValidationError(where + ": negative begin time");
        }
        if (row.end <= row.begin) {
            throw ValidationError(where + ": end time " + std::to_string(row.end) +
                                  " is not after begin time " + std::to_string(row.begin));
        }
        if (row.annotation.empty()) {
            throw ValidationError(where + ": empty annotation");
        }
        if (row.score < 0.0 || row.score > 1.0) {
            throw ValidationError(where + ": score " + std::to_string(row.score) +
                                  " outside [0, 1]");
        }
        rows.push_back(std::move(row));
    }

    EventSet events;
    if (vocab) {
        events.vocab = *vocab;
    } else {
        std::set<std::string> names;
        for (const RawRow& row : rows) {
            names.insert(row.annotation);
        }
        if (names.empty()) {
            names.insert("call");  // empty tables still need a valid vocabulary
        }
        events.vocab = ClassVocab(std::vector<std::string>(names.begin(), names.end()));
    }

    double max_offset = 0.0;
    for (const RawRow& row : rows) {
        const auto class_id = events.vocab.index_of(row.annotation);
        if (!class_id) {
            throw ValidationError(path.string() + ": unknown class '" + row.annotation +
                                  "' not in the supplied vocabulary");
        }
        Box box;
        box.onset = row.begin;
        box.duration = row.end - row.begin;
        box.class_id = *class_id;
        box.score = row.score;
        events.boxes.push_back(box);
        max_offset = std::max(max_offset, row.end);
    }
    events.clip_duration = clip_duration.value_or(max_offset);
    events.normalize();
    events.validate();
    return events;
}

void write_selection_table(const EventSet& events, const std::filesystem::path& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw IoError("cannot create selection table " + path.string());
    }

    file << "Selection\tView\tChannel\t" << kBeginColumn << '\t' << kEndColumn << '\t'
         << kAnnotationColumn << '\t' << kScoreColumn << '\n';
    for (std::size_t i = 0; i < events.boxes.size(); ++i) {
        const Box& box = events.boxes[i];
        file << (i + 1) << "\tSpectrogram 1\t1\t" << format_fixed(box.onset, 6) << '\t'
             << format_fixed(box.offset(), 6) << '\t' << events.vocab.name(box.class_id)
             << '\t' << format_fixed(box.score, 6) << '\n';
    }
    if (!file) {
        throw IoError("failed writing selection table " + path.string());
    }
}

}  // namespace sedbox
