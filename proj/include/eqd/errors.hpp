#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eqd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidPoint : public Error { public: using Error::Error; };
class DimMismatch : public Error { public: using Error::Error; };
class InvalidMap : public Error { public: using Error::Error; };
class NoRoots : public Error { public: using Error::Error; };
class DegenerateFiber : public Error { public: using Error::Error; };
class TreeTooLarge : public Error { public: using Error::Error; };
class ExceptionalStart : public Error { public: using Error::Error; };
class PolarValue : public Error { public: using Error::Error; };
class BudgetExceeded : public Error { public: using Error::Error; };
class NormUnavailable : public Error { public: using Error::Error; };
class HypothesisViolated : public Error { public: using Error::Error; };

/// Orbit or fiber computation touched the indeterminacy set.
/// `step` is the iterate index at which it happened (0 for a direct call).
class IndeterminacyPoint : public Error {
public:
    IndeterminacyPoint(const std::string& what, std::size_t step = 0)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Grammar error; `position` is a 0-based byte offset into the parsed text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

}  // namespace eqd
