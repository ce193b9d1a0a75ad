#pragma once
// Aggregation function algebra: member slots, subfunctions, disaggregation
// and memorization rules, affinity scoring. A spec has a declarative part
// (parsed from model files, used for label-binding checks) and resolved
// callables (bound from the combiner/affinity registries before execution).

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlsim/core.hpp"
#include "mlsim/rational.hpp"

namespace mlsim {

// How many instances of one conceptual-agent class an aggregation consumes.
// `level` present = the member's body participates (body-aggregating spec);
// absent = spirit-only.
struct MemberSlot {
    std::string class_name;
    int min = 1;
    int max = 1;
    std::optional<LevelId> level;
};

// One member agent as seen by subfunctions and affinity scoring: the values
// below are snapshots, the ids identify the live agent.
struct MemberView {
    AgentId agent = 0;
    std::string class_name;
    AttrMap external;  // body external state (slot level body, if any)
    AttrMap internal;  // spirit internal state
};

// Looks up a variable on a member: body external state first, spirit
// internal second. Deterministic and uniform for both spec kinds.
inline const double* find_member_variable(const MemberView& m, const std::string& var) {
    if (auto it = m.external.find(var); it != m.external.end()) return &it->second;
    if (auto it = m.internal.find(var); it != m.internal.end()) return &it->second;
    return nullptr;
}

// Reduces per-member input vectors to the single aggregate value.
using CombinerFn = std::function<double(const std::vector<std::vector<double>>&)>;

struct SubfunctionInput {
    std::string class_name;  // which member class this entry applies to
    std::string variable;
    std::optional<LevelId> level;
};

enum class StateTarget { internal, external };

struct SubfunctionSpec {
    std::string name;
    std::vector<SubfunctionInput> inputs;
    std::string output_variable;
    StateTarget target = StateTarget::external;
    std::string combiner_name = "mean";
    CombinerFn combiner;  // resolved from the registry; empty until bound
};

// Memorization: which member variables to retain at aggregation time.
// Offsets are stored relative to an aggregate variable (platoon positions),
// absolutes verbatim (stamina). Internal rules read the member spirit.
struct OffsetRule {
    std::string member_variable;
    std::string aggregate_variable;
    bool internal = false;
};

struct MemorizationSpec {
    std::vector<OffsetRule> offsets;
    std::vector<std::string> external_absolutes;
    std::vector<std::string> internal_absolutes;
};

// How one recreated member variable is reconstructed at disaggregation.
struct RestoreRule {
    enum class Kind { copy_aggregate, offset_from_memo, absolute_from_memo, constant };
    std::string member_variable;
    Kind kind = Kind::copy_aggregate;
    std::string aggregate_variable;  // copy_aggregate / offset_from_memo
    double constant = 0.0;
    bool internal = false;  // member-side target state
};

// Fallback layout when the record carries no variable snapshot: members are
// placed in a line behind the aggregate along `axis_variable`.
struct DefaultLayout {
    std::string axis_variable = "x";
    double spacing = 2.0;
};

struct MemberRestoreRules {
    std::string class_name;
    std::vector<RestoreRule> rules;
};

struct DisaggregationSpec {
    std::vector<MemberRestoreRules> per_class;
    DefaultLayout fallback;
};

using AffinityFn = std::function<double(const std::vector<MemberView>&)>;

// Deterministic scoring rule; higher means more aggregable. `variables`
// names the state subset used for distances by the builtin scorers.
struct AffinityFunction {
    std::string name = "inverse_distance";
    std::vector<std::string> variables = {"x", "y"};
    double scale = 1.0;
    AffinityFn score;  // resolved from the registry; empty until bound
};

struct AggregateOutput {
    std::string class_name;  // AAC
    LevelId level;
};

struct AggregationFunctionSpec {
    std::string name;
    std::vector<MemberSlot> members;
    std::optional<AggregateOutput> output;  // absent = spirit-only
    std::string merged_class;               // spirit-only merged spirit class; defaults to the slot class
    std::vector<SubfunctionSpec> subfunctions;
    DisaggregationSpec disaggregation;
    std::optional<MemorizationSpec> memorization;
    AffinityFunction affinity;
    double threshold = 0.0;
    double radius = 0.0;  // group diameter bound for enumeration pruning; <=0 = unbounded

    bool spirit_only() const { return !output.has_value(); }
};

struct AggregateProvenance;

// Captured when an aggregation is applied. The class/count/level bookkeeping
// is always present (disaggregation and the conservation invariant need it);
// variable snapshots are only filled when the spec has a memorization part.
struct MemberMemo {
    std::string class_name;
    std::optional<LevelId> level;    // body spec slot level
    std::vector<BodyId> body_ids;    // spirit-only: the member's bodies, returned on split
    AttrMap external_offsets;
    AttrMap external_absolutes;
    AttrMap internal_offsets;
    AttrMap internal_absolutes;
    std::shared_ptr<const AggregateProvenance> nested;  // member was itself an aggregate
};

struct MemorizationRecord {
    std::string function_name;
    std::vector<MemberMemo> members;
    Rational created_at;
    bool has_variable_snapshot = false;
};

struct AggregateProvenance {
    std::string spec_name;
    MemorizationRecord record;
};

}  // namespace mlsim
