#include "sedbox/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sedbox/errors.hpp"

namespace sedbox {

namespace {

constexpr std::uint16_t kFormatPcm = 1;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void write_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

void write_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

void write_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

}  // namespace

PcmClip read_wav(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw IoError("cannot open WAV file " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw IoError(path.string() + ": malformed RIFF/WAVE header");
    }

    bool have_format = false;
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        if (pos + 8 + size > bytes.size()) {
            throw IoError(path.string() + ": truncated chunk");
        }
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) {
                throw IoError(path.string() + ": fmt chunk too small");
            }
            format = read_u16(chunk + 8);
            channels = read_u16(chunk + 10);
            sample_rate = read_u32(chunk + 12);
            bits = read_u16(chunk + 22);
            have_format = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_size = size;
        }
        pos += 8 + size + (size % 2);  // chunks are word-aligned
    }

    if (!have_format || data == nullptr) {
        throw IoError(path.string() + ": missing fmt or data chunk");
    }
    if (format != kFormatPcm) {
        throw ValidationError(path.string() + ": unsupported format code " +
                              std::to_string(format) + " (PCM expected)");
    }
    if (channels != 1) {
        throw ValidationError(path.string() + ": unsupported channel count " +
                              std::to_string(channels) + " (mono expected)");
    }
    if (bits != 16) {
        throw ValidationError(path.string() + ": unsupported bit depth " +
                              std::to_string(bits) + " (16-bit expected)");
    }
    if (sample_rate == 0) {
        throw ValidationError(path.string() + ": zero sample rate");
    }

    PcmClip clip;
    clip.sample_rate = static_cast<double>(sample_rate);
    const std::size_t n = data_size / 2;
    clip.samples.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<std::uint16_t>(data[2 * i] | data[2 * i + 1] << 8);
        clip.samples[static_cast<Eigen::Index>(i)] =
            static_cast<double>(static_cast<std::int16_t>(raw)) / 32768.0;
    }
    return clip;
}

void write_wav(const PcmClip& clip, const std::filesystem::path& path) {
    if (!(clip.sample_rate > 0.0)) {
        throw ValidationError("sample rate must be positive");
    }
    const auto rate = static_cast<std::uint32_t>(std::llround(clip.sample_rate));
    const auto n = static_cast<std::uint32_t>(clip.samples.size());
    const std::uint32_t data_size = n * 2;

    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    write_tag(out, "RIFF");
    write_u32(out, 36 + data_size);
    write_tag(out, "WAVE");
    write_tag(out, "fmt ");
    write_u32(out, 16);
    write_u16(out, kFormatPcm);
    write_u16(out, 1);  // mono
    write_u32(out, rate);
    write_u32(out, rate * 2);  // byte rate
    write_u16(out, 2);         // block align
    write_u16(out, 16);        // bits per sample
    write_tag(out, "data");
    write_u32(out, data_size);

    for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
        const long scaled = std::lround(clip.samples[i] * 32768.0);
        const auto value = static_cast<std::int16_t>(std::clamp(scaled, -32768l, 32767l));
        write_u16(out, static_cast<std::uint16_t>(value));
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw IoError("cannot create WAV file " + path.string());
    }
    file.write(reinterpret_cast<const char*>(out.data()),
               static_cast<std::streamsize>(out.size()));
    if (!file) {
        throw IoError("failed writing WAV file " + path.string());
    }
}

}  // namespace sedbox
