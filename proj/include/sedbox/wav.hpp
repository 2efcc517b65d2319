#pragma once

#include <filesystem>

#include "sedbox/synth.hpp"

namespace sedbox {

// Reads a mono 16-bit PCM RIFF/WAVE file; samples map to [-1, 1] by
// division by 32768. Other encodings, bit depths or channel counts raise
// ValidationError; a corrupt container raises IoError.
PcmClip read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM. Writing then reading reproduces 16-bit data
// sample-exactly.
void write_wav(const PcmClip& clip, const std::filesystem::path& path);

}  // namespace sedbox
