#pragma once

#include <stdexcept>
#include <string>

namespace sedbox {

// Invalid data or configuration. The CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failure or a corrupt container. The CLI maps this to exit code 2.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A synthesis request whose contract could not be met within the retry budget.
struct GenerationError : std::runtime_error {
    GenerationError(const std::string& what, double best_achieved_ratio)
        : std::runtime_error(what), best_achieved(best_achieved_ratio) {}
    double best_achieved;
};

}  // namespace sedbox
