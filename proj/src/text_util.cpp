#include "text_util.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "sedbox/errors.hpp"

namespace sedbox::detail {

std::string format_fixed(double value, int decimals) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
    return buffer;
}

std::vector<std::string> split(std::string_view text, char delimiter) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(delimiter, start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(text.substr(start));
            return fields;
        }
        fields.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view trim(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t' ||
                             text.front() == '\r' || text.front() == '\n')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                             text.back() == '\r' || text.back() == '\n')) {
        text.remove_suffix(1);
    }
    return text;
}

double parse_double(std::string_view text, const std::string& context) {
    const std::string field(trim(text));
    if (field.empty()) {
        throw ValidationError(context + ": empty numeric field");
    }
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || errno == ERANGE) {
        throw ValidationError(context + ": cannot parse '" + field + "' as a number");
    }
    return value;
}

long parse_long(std::string_view text, const std::string& context) {
    const std::string field(trim(text));
    if (field.empty()) {
        throw ValidationError(context + ": empty integer field");
    }
    errno = 0;
    char* end = nullptr;
    const long value = std::strtol(field.c_str(), &end, 10);
    if (end != field.c_str() + field.size() || errno == ERANGE) {
        throw ValidationError(context + ": cannot parse '" + field + "' as an integer");
    }
    return value;
}

}  // namespace sedbox::detail
