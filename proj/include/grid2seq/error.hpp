#pragma once

#include <stdexcept>
#include <string>

namespace g2s {

/// Library-wide exception. The kind maps 1:1 onto the C API status codes.
class Error : public std::runtime_error {
public:
    enum Kind { kInvalid, kIo, kFormat, kState, kFail };

    Error(Kind kind, std::string msg)
        : std::runtime_error(std::move(msg)), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

[[noreturn]] inline void fail_invalid(const std::string& msg) { throw Error(Error::kInvalid, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(Error::kIo, msg); }
[[noreturn]] inline void fail_format(const std::string& msg) { throw Error(Error::kFormat, msg); }

} // namespace g2s
