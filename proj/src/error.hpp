#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace missddim {

// Error categories map 1:1 onto the C API status codes and CLI exit codes.
enum class ErrorCode {
    param = 1,    // invalid argument or configuration
    state = 2,    // operation called out of sequence
    numeric = 3,  // non-finite value or schedule inconsistency
    io = 4,       // file or format failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {
inline void append_all(std::ostringstream&) {}

template <typename T, typename... Rest>
void append_all(std::ostringstream& os, const T& value, const Rest&... rest) {
    os << value;
    append_all(os, rest...);
}
}  // namespace detail

template <typename... Parts>
[[noreturn]] void fail(ErrorCode code, const Parts&... parts) {
    std::ostringstream os;
    detail::append_all(os, parts...);
    throw Error(code, os.str());
}

template <typename... Parts>
void require(bool condition, ErrorCode code, const Parts&... parts) {
    if (!condition) {
        fail(code, parts...);
    }
}

}  // namespace missddim
