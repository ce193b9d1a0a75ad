#pragma once
// Core identifiers, attribute maps, and the error type shared by every module.

#include <charconv>
#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <system_error>

namespace mlsim {

// A level is a point of view on the simulated system (organization,
// observation, granularity). Identified by a unique non-empty name;
// name order is the canonical tie-break order everywhere.
struct LevelId {
    std::string name;

    LevelId() = default;
    explicit LevelId(std::string n) : name(std::move(n)) {}
    auto operator<=>(const LevelId&) const = default;
};

inline LevelId level(std::string name) { return LevelId{std::move(name)}; }

using AgentId = std::uint64_t;  // conceptual agent (spirit) handle
using BodyId = std::uint64_t;

// Agent state is a flat map of named scalars; vector quantities are stored
// as separate components ("x", "y"). Ordered map: deterministic iteration.
using AttrMap = std::map<std::string, double>;

enum class Errc {
    parse,
    unknown_reference,
    validation,
    cardinality,
    class_mismatch,
    member_state,
    record_mismatch,
    behavior,
    frequency,
    precedence,
    io,
    usage,
    overflow,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

// Shortest round-trip decimal form, locale independent. Used for every
// double written to an output file so repeated runs are byte-identical.
inline std::string format_double(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error(Errc::overflow, "format_double failed");
    return std::string(buf, end);
}

}  // namespace mlsim
