#include "rffslam/errors.hpp"

namespace rffslam {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message),
      source_(source),
      line_(line) {}

IoError::IoError(const std::string& path, const std::string& message)
    : std::runtime_error(path + ": " + message), path_(path) {}

}  // namespace rffslam
