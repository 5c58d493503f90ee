#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace ddsense {

// Bad user input (ranges, counts, unknown names). CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleTimingError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class CapacityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(int line, int col, const std::string& msg)
        : ValidationError("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg),
          line_(line), col_(col) {}
    int line() const noexcept { return line_; }
    int col() const noexcept { return col_; }

private:
    int line_;
    int col_;
};

// Step underflow, unitarity drift. CLI exit code 3.
class NumericIntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rethrow the exception held in `ep` as the same category with `ctx` prefixed.
[[noreturn]] inline void rethrow_with_context(std::exception_ptr ep, const std::string& ctx) {
    try {
        std::rethrow_exception(ep);
    } catch (const ParseError&) {
        throw;
    } catch (const InfeasibleTimingError& e) {
        throw InfeasibleTimingError(ctx + ": " + e.what());
    } catch (const CapacityError& e) {
        throw CapacityError(ctx + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + ": " + e.what());
    } catch (const NumericIntegrityError& e) {
        throw NumericIntegrityError(ctx + ": " + e.what());
    }
}

} // namespace ddsense
