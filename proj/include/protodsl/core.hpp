#pragma once

// Shared domain types for the dual-view protocol DSL, plus the two text
// primitives (canonicalize, parse_quantity) everything else builds on.

#include "protodsl/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace protodsl {

// ---------------------------------------------------------------------------
// canonicalize

// Lowercases, collapses whitespace runs to single underscores, and strips
// punctuation from both ends. Idempotent. Throws EmptyNameError when nothing
// survives.
inline std::string canonicalize(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back('_');
            pending_space = false;
        }
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    std::size_t begin = 0, end = out.size();
    auto is_punct = [](unsigned char c) { return c < 0x80 && std::ispunct(c); };
    while (begin < end && is_punct(static_cast<unsigned char>(out[begin]))) ++begin;
    while (end > begin && is_punct(static_cast<unsigned char>(out[end - 1]))) --end;
    if (begin == end) throw EmptyNameError();
    return out.substr(begin, end - begin);
}

// Non-throwing variant; empty string when the name canonicalizes away.
inline std::string canonicalize_or_empty(std::string_view raw) {
    try {
        return canonicalize(raw);
    } catch (const EmptyNameError&) {
        return {};
    }
}

// ---------------------------------------------------------------------------
// Quantity

// A measured value: a scalar with a unit, a min-max range, or an opaque token
// for non-numeric text ("overnight"). Exactly one of the three forms holds.
struct Quantity {
    enum class Kind { Value, Range, Token };

    Kind kind = Kind::Token;
    double value = 0.0;      // Kind::Value
    double range_min = 0.0;  // Kind::Range
    double range_max = 0.0;
    std::string token;       // Kind::Token
    std::string unit;        // empty for tokens

    bool operator==(const Quantity&) const = default;

    static Quantity scalar(double v, std::string u = {}) {
        Quantity q;
        q.kind = Kind::Value;
        q.value = v;
        q.unit = std::move(u);
        return q;
    }
    static Quantity range(double lo, double hi, std::string u = {}) {
        Quantity q;
        q.kind = Kind::Range;
        q.range_min = std::min(lo, hi);
        q.range_max = std::max(lo, hi);
        q.unit = std::move(u);
        return q;
    }
    static Quantity token_of(std::string t) {
        Quantity q;
        q.kind = Kind::Token;
        q.token = std::move(t);
        return q;
    }

    bool numeric() const { return kind != Kind::Token; }

    // Midpoint for ranges, the value itself for scalars.
    double midpoint() const {
        return kind == Kind::Range ? (range_min + range_max) / 2.0 : value;
    }

    std::string str() const;
};

namespace detail {

// Shortest decimal form that round-trips through parsing.
inline std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

// Parses a number at the front of `s` (sign, digit-group commas, decimals,
// exponent). Returns consumed length, 0 when `s` does not start with one.
inline std::size_t scan_number(std::string_view s, double& out) {
    std::size_t i = 0;
    std::string digits;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        digits.push_back(s[i]);
        ++i;
    }
    bool any = false;
    while (i < s.size()) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            any = true;
            ++i;
        } else if (c == ',' && any && i + 1 < s.size() &&
                   std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
            ++i; // thousands separator
        } else {
            break;
        }
    }
    if (!any) return 0;
    if (i < s.size() && s[i] == '.' && i + 1 < s.size() &&
        std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
        digits.push_back('.');
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            digits.push_back(s[i]);
            ++i;
        }
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        std::string exp;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) exp.push_back(s[j++]);
        bool exp_digits = false;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
            exp.push_back(s[j++]);
            exp_digits = true;
        }
        if (exp_digits) {
            digits.push_back('e');
            digits += exp;
            i = j;
        }
    }
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) return 0;
    return i;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

} // namespace detail

// Total parse: numeric prefix becomes the value, the remainder the unit;
// "a-b UNIT" (hyphen, en dash, or tilde) becomes a range; anything
// non-numeric falls back to a token.
inline Quantity parse_quantity(std::string_view text) {
    std::string_view s = detail::trim(text);
    double first = 0.0;
    std::size_t n = detail::scan_number(s, first);
    if (n == 0) return Quantity::token_of(std::string(s));

    std::string_view rest = s.substr(n);
    std::string_view after = rest;
    while (!after.empty() && std::isspace(static_cast<unsigned char>(after.front())))
        after.remove_prefix(1);

    static constexpr std::string_view kEnDash = "–";
    std::size_t sep = 0;
    if (!after.empty() && (after.front() == '-' || after.front() == '~')) sep = 1;
    else if (after.substr(0, kEnDash.size()) == kEnDash) sep = kEnDash.size();
    if (sep > 0) {
        std::string_view tail = after.substr(sep);
        while (!tail.empty() && std::isspace(static_cast<unsigned char>(tail.front())))
            tail.remove_prefix(1);
        double second = 0.0;
        std::size_t m = detail::scan_number(tail, second);
        if (m > 0) {
            return Quantity::range(first, second, std::string(detail::trim(tail.substr(m))));
        }
    }
    return Quantity::scalar(first, std::string(detail::trim(rest)));
}

inline std::string Quantity::str() const {
    switch (kind) {
        case Kind::Value:
            return unit.empty() ? detail::format_double(value)
                                : detail::format_double(value) + " " + unit;
        case Kind::Range: {
            std::string s = detail::format_double(range_min) + "-" + detail::format_double(range_max);
            return unit.empty() ? s : s + " " + unit;
        }
        case Kind::Token:
            return token;
    }
    return {};
}

// ---------------------------------------------------------------------------
// Domain vocabulary

struct DomainId {
    std::string name; // Genetics | Medical | Bioengineering | Ecology | other

    bool operator==(const DomainId&) const = default;
};

// Closed set of flow-unit classifications; absence is modelled as
// std::optional<ComponentType> == nullopt.
enum class ComponentType {
    Gas,
    Liquid,
    Solid,
    SemiSolid,
    Mixture,
    ChemicalCompound,
    BiologicalMaterial,
    Reagent,
    PhysicalObject,
    FileData,
};

inline std::string_view to_string(ComponentType t) {
    switch (t) {
        case ComponentType::Gas: return "Gas";
        case ComponentType::Liquid: return "Liquid";
        case ComponentType::Solid: return "Solid";
        case ComponentType::SemiSolid: return "Semi-Solid";
        case ComponentType::Mixture: return "Mixture";
        case ComponentType::ChemicalCompound: return "ChemicalCompound";
        case ComponentType::BiologicalMaterial: return "BiologicalMaterial";
        case ComponentType::Reagent: return "Reagent";
        case ComponentType::PhysicalObject: return "PhysicalObject";
        case ComponentType::FileData: return "File/Data";
    }
    return "";
}

inline std::optional<ComponentType> component_type_from_string(std::string_view s) {
    static const std::pair<std::string_view, ComponentType> table[] = {
        {"Gas", ComponentType::Gas},
        {"Liquid", ComponentType::Liquid},
        {"Solid", ComponentType::Solid},
        {"Semi-Solid", ComponentType::SemiSolid},
        {"Mixture", ComponentType::Mixture},
        {"ChemicalCompound", ComponentType::ChemicalCompound},
        {"BiologicalMaterial", ComponentType::BiologicalMaterial},
        {"Reagent", ComponentType::Reagent},
        {"PhysicalObject", ComponentType::PhysicalObject},
        {"File/Data", ComponentType::FileData},
    };
    for (auto& [name, value] : table)
        if (name == s) return value;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Protocol source material

struct ProtocolDoc {
    std::string id;
    std::string title;
    std::string description; // experimental objective
    DomainId domain;
    std::vector<std::string> steps; // raw step text

    bool operator==(const ProtocolDoc&) const = default;
};

struct SourceRef {
    std::string protocol_id;
    int step_index = 0;

    bool operator==(const SourceRef&) const = default;
    std::string str() const { return protocol_id + "#" + std::to_string(step_index); }
};

// A slot or emit argument. `index` is the refName serial (supernatant_0 vs
// supernatant_1); -1 means unindexed.
struct SlotRef {
    std::string component;
    std::optional<ComponentType> component_type;
    int index = -1;

    bool operator==(const SlotRef&) const = default;

    std::string ref_text() const {
        return index < 0 ? component : component + "_" + std::to_string(index);
    }

    // Splits a trailing _<digits> serial back off.
    static SlotRef from_text(std::string_view text) {
        SlotRef ref;
        auto pos = text.rfind('_');
        if (pos != std::string_view::npos && pos + 1 < text.size()) {
            std::string_view digits = text.substr(pos + 1);
            bool all = !digits.empty() &&
                       std::all_of(digits.begin(), digits.end(), [](unsigned char c) {
                           return std::isdigit(c);
                       });
            if (all) {
                ref.component = std::string(text.substr(0, pos));
                ref.index = std::stoi(std::string(digits));
                return ref;
            }
        }
        ref.component = std::string(text);
        return ref;
    }
};

using EmitRef = SlotRef;

// One decomposed protocol step in its local context.
struct InstanceAction {
    std::string opcode;
    std::vector<SlotRef> precond;
    std::vector<EmitRef> postcond;
    std::string device; // empty = none
    std::map<std::string, Quantity> config;
    SourceRef source;

    bool operator==(const InstanceAction&) const = default;
};

// ---------------------------------------------------------------------------
// Fitted value distributions

// Distribution of one config/property key's observed values.
struct ValueModel {
    enum class Kind { Discrete, Continuous, Mixed };

    Kind kind = Kind::Discrete;
    // Canonical "value unit" strings with observation counts; modal lookup
    // needs the counts.
    std::map<std::string, int> discrete;
    bool has_interval = false;
    double interval_min = 0.0;
    double interval_max = 0.0;
    std::string interval_unit;
    bool has_gp = false;
    double gp_mean = 0.0;
    double gp_variance = 0.0;
    double gp_lengthscale = 0.0;

    bool operator==(const ValueModel&) const = default;

    // Most frequent discrete value; ties break lexicographically.
    std::string modal_value() const {
        std::string best;
        int best_count = -1;
        for (auto& [v, c] : discrete) {
            if (c > best_count) {
                best = v;
                best_count = c;
            }
        }
        return best;
    }
};

// One execution paradigm of an operation.
struct Pattern {
    std::vector<std::optional<ComponentType>> slot_args;
    std::vector<std::optional<ComponentType>> emit_args;
    std::string device; // empty = none
    std::map<std::string, ValueModel> config_model;
    std::vector<std::string> examples; // source refs

    bool operator==(const Pattern&) const = default;

    int slot_arg_num() const { return static_cast<int>(slot_args.size()); }
    int emit_arg_num() const { return static_cast<int>(emit_args.size()); }

    std::set<std::string> config_keys() const {
        std::set<std::string> keys;
        for (auto& [k, _] : config_model) keys.insert(k);
        return keys;
    }
};

// A generalized operation: semantic name plus all its execution paradigms.
struct OperationInterface {
    std::string unique_name;
    std::vector<Pattern> patterns;

    bool operator==(const OperationInterface&) const = default;
};

// ---------------------------------------------------------------------------
// Product-flow view

struct FlowUnit {
    std::string component;
    std::optional<ComponentType> component_type;
    int ref_index = 0; // refName = (component, ref_index)
    enum class ArgType { MAT, PROD };
    ArgType unit_arg_type = ArgType::MAT;
    std::optional<Quantity> vol;
    std::string container; // empty = none
    std::map<std::string, Quantity> cond;

    bool operator==(const FlowUnit&) const = default;

    std::string ref_name() const { return component + "_" + std::to_string(ref_index); }
};

inline std::string_view to_string(FlowUnit::ArgType t) {
    return t == FlowUnit::ArgType::MAT ? "MAT" : "PROD";
}

// One component of intermediate product between adjacent steps. Empty pred:
// initial reagent; empty succ: final product.
struct ProductFlowRecord {
    std::string pred;
    FlowUnit unit;
    std::string succ;

    bool operator==(const ProductFlowRecord&) const = default;
};

// Domain-level abstraction of a component across a corpus.
struct ProductModel {
    std::string component;
    std::map<std::string, int> pred_ops; // multiset with counts
    std::map<std::string, int> succ_ops;
    std::set<std::string> property_keys;
    std::map<std::string, ValueModel> property_models;
    std::map<ComponentType, std::set<std::string>> phase_conditioned;

    bool operator==(const ProductModel&) const = default;
};

// ---------------------------------------------------------------------------
// The synthesized DSL and plan programs

struct DslArtifact {
    DomainId domain;
    std::vector<OperationInterface> operations;
    std::vector<ProductModel> product_models;
    std::set<std::string> device_catalog;
    struct Meta {
        int corpus_size = 0;
        int fit_iterations = 0;
        std::uint64_t seed = 0;

        bool operator==(const Meta&) const = default;
    } meta;

    bool operator==(const DslArtifact&) const = default;

    const OperationInterface* find_operation(std::string_view name) const {
        for (auto& op : operations)
            if (op.unique_name == name) return &op;
        return nullptr;
    }
    const ProductModel* find_product_model(std::string_view component) const {
        for (auto& m : product_models)
            if (m.component == component) return &m;
        return nullptr;
    }
};

struct OpStep {
    std::string operation;
    std::vector<SlotRef> precond;
    std::string device; // empty = none
    std::map<std::string, Quantity> config;
    std::vector<EmitRef> postcond;

    bool operator==(const OpStep&) const = default;
};

// A designed protocol in DSL form. `dual` marks the presence of the
// product-flow track.
struct PlanProgram {
    std::vector<OpStep> steps;
    std::vector<ProductFlowRecord> flows;
    bool dual = false;

    bool operator==(const PlanProgram&) const = default;

    std::set<std::string> opcode_set() const {
        std::set<std::string> s;
        for (auto& st : steps) s.insert(st.operation);
        return s;
    }
};

// 0-based index of the step emitting `ref`, or -1.
inline int emitting_step(const PlanProgram& plan, const SlotRef& ref) {
    for (std::size_t i = 0; i < plan.steps.size(); ++i)
        for (auto& emit : plan.steps[i].postcond)
            if (emit.component == ref.component && emit.index == ref.index)
                return static_cast<int>(i);
    return -1;
}

// 0-based index of the step consuming `ref`, or -1.
inline int consuming_step(const PlanProgram& plan, const SlotRef& ref) {
    for (std::size_t i = 0; i < plan.steps.size(); ++i)
        for (auto& slot : plan.steps[i].precond)
            if (slot.component == ref.component && slot.index == ref.index)
                return static_cast<int>(i);
    return -1;
}

// Reorders flows into the canonical interleave: units nobody emits first,
// then each step's emitted units in step order. Relative order of ties is
// kept. serialize_plan emits this order, so normalized plans round-trip.
inline void normalize_flow_order(PlanProgram& plan) {
    if (plan.flows.empty()) return;
    std::vector<std::pair<int, std::size_t>> keyed;
    keyed.reserve(plan.flows.size());
    for (std::size_t i = 0; i < plan.flows.size(); ++i) {
        SlotRef ref{plan.flows[i].unit.component, std::nullopt,
                    plan.flows[i].unit.ref_index};
        keyed.emplace_back(emitting_step(plan, ref), i);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<ProductFlowRecord> ordered;
    ordered.reserve(plan.flows.size());
    for (auto& [_, idx] : keyed) ordered.push_back(std::move(plan.flows[idx]));
    plan.flows = std::move(ordered);
}

// ---------------------------------------------------------------------------
// Design tasks and fitting hyperparameters

enum class TaskKind { Planning, Modification, Adjustment };

inline std::string_view to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Planning: return "Planning";
        case TaskKind::Modification: return "Modification";
        case TaskKind::Adjustment: return "Adjustment";
    }
    return "";
}

inline std::optional<TaskKind> task_kind_from_string(std::string_view s) {
    if (s == "Planning") return TaskKind::Planning;
    if (s == "Modification") return TaskKind::Modification;
    if (s == "Adjustment") return TaskKind::Adjustment;
    return std::nullopt;
}

struct DesignTask {
    TaskKind kind = TaskKind::Planning;
    std::string objective;
    std::set<std::string> reagents; // Ω, canonical names
    DomainId domain;
    std::optional<ProtocolDoc> base_protocol; // required for Modification/Adjustment

    bool operator==(const DesignTask&) const = default;
};

struct HyperParams {
    double alpha = 1.0; // DP concentration
    // Dirichlet pseudo-counts per discrete level; missing keys default to 1.
    std::map<std::string, double> base_measure;
    std::optional<double> gp_mean;        // nullopt: empirical mean per key
    double gp_kernel_variance = 1.0;
    std::optional<double> gp_lengthscale; // nullopt: empirical std per key
    int iterations = 1000;
    std::uint64_t seed = 0;
    int convergence_window = 50; // 0 disables early stop

    bool operator==(const HyperParams&) const = default;

    double level_prior(const std::string& level) const {
        auto it = base_measure.find(level);
        return it == base_measure.end() ? 1.0 : it->second;
    }

    void validate() const {
        if (alpha <= 0.0) throw ConfigError("alpha must be positive");
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
    }
};

} // namespace protodsl
