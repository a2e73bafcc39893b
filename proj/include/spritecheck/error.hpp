#pragma once

#include <stdexcept>
#include <string>

namespace spritecheck {

// All library failures surface as this type; the message is the user-facing text.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spritecheck
