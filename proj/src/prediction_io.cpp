#include "sedbox/prediction_io.hpp"

#include <fstream>
#include <string>

#include "sedbox/errors.hpp"
#include "text_util.hpp"

namespace sedbox {

namespace {

using detail::format_fixed;
using detail::parse_double;
using detail::parse_long;
using detail::split;
using detail::trim;

std::string metadata_value(const std::string& line, const char* key,
                           const std::filesystem::path& path) {
    const auto fields = split(std::string(trim(line)), ',');
    if (fields.size() != 2 || trim(fields[0]) != key) {
        throw ValidationError(path.string() + ": expected '" + std::string(key) +
                              ",<value>' but found '" + line + "'");
    }
    return std::string(trim(fields[1]));
}

}  // namespace

PredictionFile read_predictions(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("cannot open prediction file " + path.string());
    }

    std::string line;
    if (!std::getline(file, line)) {
        throw ValidationError(path.string() + ": empty file");
    }
    const double frame_rate =
        parse_double(metadata_value(line, "frame_rate", path), path.string() + " (frame_rate)");

    if (!std::getline(file, line)) {
        throw ValidationError(path.string() + ": missing direction line");
    }
    const std::string direction = metadata_value(line, "direction", path);
    if (direction != "forward" && direction != "backward") {
        throw ValidationError(path.string() + ": direction must be 'forward' or "
                              "'backward', found '" + direction + "'");
    }

    if (!std::getline(file, line)) {
        throw ValidationError(path.string() + ": missing classes line");
    }
    std::vector<std::string> names;
    for (const auto& name : split(metadata_value(line, "classes", path), ';')) {
        names.emplace_back(trim(name));
    }

    if (!std::getline(file, line)) {
        throw ValidationError(path.string() + ": missing column header");
    }
    const auto columns = split(std::string(trim(line)), ',');
    if (columns.size() != 3 + names.size()) {
        throw ValidationError(path.string() + ": header has " +
                              std::to_string(columns.size()) + " columns, expected " +
                              std::to_string(3 + names.size()));
    }

    std::vector<double> p_det;
    std::vector<double> dur_reg;
    std::vector<std::vector<double>> logits;
    std::size_t line_number = 4;
    while (std::getline(file, line)) {
        ++line_number;
        if (trim(line).empty()) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_number);
        const auto fields = split(std::string(trim(line)), ',');
        if (fields.size() != 3 + names.size()) {
            throw ValidationError(where + ": expected " +
                                  std::to_string(3 + names.size()) + " columns, found " +
                                  std::to_string(fields.size()));
        }
        const long frame = parse_long(fields[0], where + " (frame index)");
        if (frame != static_cast<long>(p_det.size())) {
            throw ValidationError(where + ": frame index " + std::to_string(frame) +
                                  " breaks the contiguous sequence (expected " +
                                  std::to_string(p_det.size()) + ")");
        }
        const double p = parse_double(fields[1], where + " (p_det)");
        if (p < 0.0 || p > 1.0) {
            throw ValidationError(where + ": p_det " + std::to_string(p) +
                                  " outside [0, 1]");
        }
        const double dur = parse_double(fields[2], where + " (dur_reg)");
        if (dur < 0.0) {
            throw ValidationError(where + ": negative dur_reg");
        }
        p_det.push_back(p);
        dur_reg.push_back(dur);
        std::vector<double> row(names.size());
        for (std::size_t c = 0; c < names.size(); ++c) {
            row[c] = parse_double(fields[3 + c], where + " (logit)");
        }
        logits.push_back(std::move(row));
    }

    PredictionFile out;
    out.vocab = ClassVocab(std::move(names));
    out.predictions.frame_rate = frame_rate;
    out.predictions.direction =
        direction == "forward" ? Direction::forward : Direction::backward;
    const Eigen::Index t = static_cast<Eigen::Index>(p_det.size());
    out.predictions.p_det.resize(t);
    out.predictions.dur_reg.resize(t);
    out.predictions.class_logits.resize(t, out.vocab.size());
    for (Eigen::Index i = 0; i < t; ++i) {
        out.predictions.p_det[i] = p_det[static_cast<std::size_t>(i)];
        out.predictions.dur_reg[i] = dur_reg[static_cast<std::size_t>(i)];
        for (int c = 0; c < out.vocab.size(); ++c) {
            out.predictions.class_logits(i, c) =
                logits[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        }
    }
    out.predictions.validate();
    return out;
}

void write_predictions(const FramePredictions& preds, const ClassVocab& vocab,
                       const std::filesystem::path& path) {
    preds.validate();
    if (vocab.size() != preds.classes()) {
        throw ValidationError("vocabulary size " + std::to_string(vocab.size()) +
                              " does not match logit columns " +
                              std::to_string(preds.classes()));
    }
    for (const auto& name : vocab.names()) {
        if (name.find(',') != std::string::npos || name.find(';') != std::string::npos) {
            throw ValidationError("class name '" + name +
                                  "' cannot contain ',' or ';' in a prediction file");
        }
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw IoError("cannot create prediction file " + path.string());
    }

    file << "frame_rate," << format_fixed(preds.frame_rate, 9) << '\n';
    file << "direction,"
         << (preds.direction == Direction::forward ? "forward" : "backward") << '\n';
    file << "classes,";
    for (int c = 0; c < vocab.size(); ++c) {
        if (c > 0) {
            file << ';';
        }
        file << vocab.name(c);
    }
    file << '\n';

    file << "frame,p_det,dur_reg";
    for (int c = 0; c < vocab.size(); ++c) {
        file << ",logit_" << vocab.name(c);
    }
    file << '\n';

    for (Eigen::Index t = 0; t < preds.frames(); ++t) {
        file << t << ',' << format_fixed(preds.p_det[t], 9) << ','
             << format_fixed(preds.dur_reg[t], 9);
        for (Eigen::Index c = 0; c < preds.classes(); ++c) {
            file << ',' << format_fixed(preds.class_logits(t, c), 9);
        }
        file << '\n';
    }
    if (!file) {
        throw IoError("failed writing prediction file " + path.string());
    }
}

}  // namespace sedbox
