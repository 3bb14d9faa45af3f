#ifndef FEDCACHE_ERRORS_HPP
#define FEDCACHE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedcache {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover the remaining failure classes.

/// An id was inserted twice.
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation not allowed in the object's current lifecycle phase.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotFoundError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Malformed input. `position` is a byte offset for binary inputs and a
/// 1-based line number for text inputs.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Well-formed records that are inconsistent with each other.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fedcache

#endif
