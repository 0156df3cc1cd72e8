#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bellrand {

enum class Errc {
    malformed_record,
    non_monotonic,
    invalid_config,
    empty_counts,
    empty_scan,
    inconsistent_inputs,
    too_short,
    degenerate,
    empty_series,
    bad_block_len,
    bad_template_set,
    bad_m,
    out_of_range,
    degenerate_variance,
    singular_regression,
    no_linear_region,
    no_prediction,
    insufficient_history,
    insufficient_bits,
    length_mismatch,
    empty_input,
    io,
};

inline std::string_view errc_name(Errc e) {
    switch (e) {
    case Errc::malformed_record: return "MalformedRecord";
    case Errc::non_monotonic: return "NonMonotonic";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::empty_counts: return "EmptyCounts";
    case Errc::empty_scan: return "EmptyScan";
    case Errc::inconsistent_inputs: return "InconsistentInputs";
    case Errc::too_short: return "TooShort";
    case Errc::degenerate: return "Degenerate";
    case Errc::empty_series: return "EmptySeries";
    case Errc::bad_block_len: return "BadBlockLen";
    case Errc::bad_template_set: return "BadTemplateSet";
    case Errc::bad_m: return "BadM";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::degenerate_variance: return "DegenerateVariance";
    case Errc::singular_regression: return "SingularRegression";
    case Errc::no_linear_region: return "NoLinearRegion";
    case Errc::no_prediction: return "NoPrediction";
    case Errc::insufficient_history: return "InsufficientHistory";
    case Errc::insufficient_bits: return "InsufficientBits";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_input: return "EmptyInput";
    case Errc::io: return "IoError";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying one of the
/// named conditions above; what() is prefixed with that name.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace bellrand
