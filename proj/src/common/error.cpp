// SPDX-License-Identifier: Apache-2.0
#include "langadapt/common/error.hpp"

namespace langadapt {

ConfigError::ConfigError(const std::string& field, const std::string& message)
    : Error(field + ": " + message), field_(field) {}

IoError::IoError(const std::string& path, const std::string& message)
    : Error(path + ": " + message), path_(path) {}

}  // namespace langadapt
