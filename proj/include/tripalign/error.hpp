#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tripalign {

/// Error with a stable machine-readable category, e.g. "DuplicateName".
/// The CLI prints the category as a single-line prefix; tests match on it.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(category + ": " + message),
          category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

[[noreturn]] inline void fail(std::string category, const std::string& message) {
    throw Error(std::move(category), message);
}

}  // namespace tripalign
