#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ehd {

/// Failure categories shared by every module. The string form is what the
/// CLI prints and what reports embed.
enum class errc {
    on_boundary,
    unsupported_exponent,
    invalid_exponent,
    out_of_domain,
    not_one_phase,
    degenerate_trace,
    no_limit,
    insufficient_arc,
    diverged,
    numerical_failure,
    inner_solver_failed,
    no_solution,
    invalid_field,
    invalid_argument,
    parse_error,
};

constexpr std::string_view to_string(errc e) {
    switch (e) {
    case errc::on_boundary: return "on-boundary";
    case errc::unsupported_exponent: return "unsupported-exponent";
    case errc::invalid_exponent: return "invalid-exponent";
    case errc::out_of_domain: return "out-of-domain";
    case errc::not_one_phase: return "not-one-phase";
    case errc::degenerate_trace: return "degenerate-trace";
    case errc::no_limit: return "no-limit";
    case errc::insufficient_arc: return "insufficient-arc";
    case errc::diverged: return "diverged";
    case errc::numerical_failure: return "numerical-failure";
    case errc::inner_solver_failed: return "inner-solver-failed";
    case errc::no_solution: return "no-solution";
    case errc::invalid_field: return "invalid-field";
    case errc::invalid_argument: return "invalid-argument";
    case errc::parse_error: return "parse-error";
    }
    return "unknown";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace ehd
