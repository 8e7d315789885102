#pragma once

#include <stdexcept>
#include <string>

namespace wam {

// Single exception type for contract and configuration violations. Messages
// name the offending shapes / keys so CLI errors stay actionable.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wam
