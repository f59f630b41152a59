#pragma once

#include <stdexcept>
#include <string>

namespace coneflow {

// Error taxonomy. Each condition that callers may want to catch separately
// gets its own type; all derive from std::runtime_error so the CLI can report
// any of them uniformly.

struct DegenerateSpectrum : std::runtime_error {
    explicit DegenerateSpectrum(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadAspect : std::runtime_error {
    explicit BadAspect(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroState : std::runtime_error {
    explicit ZeroState(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergentSeries : std::runtime_error {
    explicit DivergentSeries(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotTorusSourced : std::runtime_error {
    explicit NotTorusSourced(const std::string& msg) : std::runtime_error(msg) {}
};

struct IndexOutOfRange : std::out_of_range {
    explicit IndexOutOfRange(const std::string& msg) : std::out_of_range(msg) {}
};

struct OutsideCone : std::runtime_error {
    explicit OutsideCone(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegeneratePolytope : std::runtime_error {
    explicit DegeneratePolytope(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionTooHigh : std::runtime_error {
    explicit DimensionTooHigh(const std::string& msg) : std::runtime_error(msg) {}
};

struct NegativeRadial : std::runtime_error {
    explicit NegativeRadial(const std::string& msg) : std::runtime_error(msg) {}
};

struct RatioOutOfRange : std::runtime_error {
    explicit RatioOutOfRange(const std::string& msg) : std::runtime_error(msg) {}
};

struct MidpointDiverged : std::runtime_error {
    explicit MidpointDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonFinite : std::runtime_error {
    explicit NonFinite(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotPSD : std::runtime_error {
    explicit NotPSD(const std::string& msg) : std::runtime_error(msg) {}
};

struct StuckAtBoundary : std::runtime_error {
    explicit StuckAtBoundary(const std::string& msg) : std::runtime_error(msg) {}
};

struct TooShort : std::runtime_error {
    explicit TooShort(const std::string& msg) : std::runtime_error(msg) {}
};

struct TooFewSamples : std::runtime_error {
    explicit TooFewSamples(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotGoodState : std::runtime_error {
    explicit NotGoodState(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    std::string field;
    ValidationError(std::string field_path, const std::string& msg)
        : std::runtime_error(field_path + ": " + msg), field(std::move(field_path)) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace coneflow
