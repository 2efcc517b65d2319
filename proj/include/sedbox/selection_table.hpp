#pragma once

#include <filesystem>
#include <optional>

#include "sedbox/types.hpp"

namespace sedbox {

// Reads a tab-separated selection table. The header must contain
// "Begin Time (s)", "End Time (s)" and "Annotation"; other columns
// (View, Channel, frequency bounds, ...) are tolerated and ignored. An
// optional "Score" column fills box scores, which default to 1.0.
//
// With a vocabulary supplied, unknown annotations are rejected; otherwise
// the vocabulary is the sorted set of annotations in the file. Rows with
// end <= begin, negative times or out-of-range scores raise
// ValidationError naming the file and line. clip_duration defaults to the
// latest offset in the file.
EventSet read_selection_table(const std::filesystem::path& path,
                              const std::optional<ClassVocab>& vocab = std::nullopt,
                              std::optional<double> clip_duration = std::nullopt);

// Writes a Raven-compatible table with the score appended as a trailing
// column. Times and scores use six decimal places, so a written table
// rereads to the same values at that precision.
void write_selection_table(const EventSet& events, const std::filesystem::path& path);

}  // namespace sedbox
