#pragma once

// Parsing, validation, and canonical serialization of dual-view DSL programs.
// Parsing is total: every input yields a value plus diagnostics, never a
// crash. Serialization is canonical (fixed key order, two-space indent) so
// golden-file comparisons are byte-stable.

#include "protodsl/core.hpp"

#include <nlohmann/json.hpp>

#include <sstream>
#include <string>
#include <vector>

namespace protodsl {

using ordered_json = nlohmann::ordered_json;

struct ParseDiagnostic {
    enum class Kind { MissingField, BadType, UnknownKey, GrammarViolation };

    std::string path; // JSON-pointer-style location
    Kind kind = Kind::GrammarViolation;
    std::string message;

    bool operator==(const ParseDiagnostic&) const = default;
};

inline std::string_view to_string(ParseDiagnostic::Kind k) {
    switch (k) {
        case ParseDiagnostic::Kind::MissingField: return "MissingField";
        case ParseDiagnostic::Kind::BadType: return "BadType";
        case ParseDiagnostic::Kind::UnknownKey: return "UnknownKey";
        case ParseDiagnostic::Kind::GrammarViolation: return "GrammarViolation";
    }
    return "";
}

struct OpProgramParse {
    std::vector<OpStep> steps;
    std::vector<ParseDiagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

struct ProductProgramParse {
    std::vector<ProductFlowRecord> records;
    std::vector<ParseDiagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

struct PlanParse {
    PlanProgram plan;
    std::vector<ParseDiagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

namespace detail {

// LLM responses wrap JSON in fences; keep only fenced content when present.
inline std::string strip_code_fences(std::string_view text) {
    std::string out;
    std::size_t pos = 0;
    bool found = false;
    while (true) {
        std::size_t open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        std::size_t body = text.find('\n', open);
        if (body == std::string_view::npos) break;
        std::size_t close = text.find("```", body);
        if (close == std::string_view::npos) break;
        out.append(text.substr(body + 1, close - body - 1));
        out.push_back('\n');
        found = true;
        pos = close + 3;
    }
    return found ? out : std::string(text);
}

// Accepts a JSON array, a single object, or concatenated top-level values.
inline std::vector<ordered_json> parse_json_values(std::string_view text,
                                                   std::vector<ParseDiagnostic>& diags) {
    std::string cleaned = strip_code_fences(text);
    std::vector<ordered_json> values;
    ordered_json whole = ordered_json::parse(cleaned, nullptr, false);
    if (!whole.is_discarded()) {
        if (whole.is_array())
            for (auto& el : whole) values.push_back(std::move(el));
        else
            values.push_back(std::move(whole));
        return values;
    }
    std::istringstream in(cleaned);
    try {
        while (true) {
            in >> std::ws;
            if (!in.good() || in.peek() == std::char_traits<char>::eof()) break;
            ordered_json j;
            in >> j;
            values.push_back(std::move(j));
        }
    } catch (const nlohmann::json::exception& e) {
        diags.push_back({"/", ParseDiagnostic::Kind::BadType,
                         std::string("malformed JSON: ") + e.what()});
    }
    if (values.empty() && diags.empty())
        diags.push_back({"/", ParseDiagnostic::Kind::BadType, "malformed JSON"});
    return values;
}

inline std::string canon_field(const ordered_json& j) {
    if (j.is_string()) return canonicalize_or_empty(j.get<std::string>());
    if (j.is_number()) return j.dump();
    return {};
}

inline Quantity quantity_field(const ordered_json& j) {
    if (j.is_string()) return parse_quantity(j.get<std::string>());
    if (j.is_number()) return Quantity::scalar(j.get<double>());
    return Quantity::token_of(j.dump());
}

inline void scan_unknown_keys(const ordered_json& obj, const std::string& path,
                              std::initializer_list<std::string_view> known,
                              std::vector<ParseDiagnostic>& diags) {
    for (auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto k : known)
            if (k == key) { ok = true; break; }
        if (!ok)
            diags.push_back({path + "/" + key, ParseDiagnostic::Kind::UnknownKey,
                             "unexpected key \"" + key + "\""});
    }
}

inline std::vector<SlotRef> parse_arg_list(const ordered_json& section,
                                           const std::string& path,
                                           std::string_view num_key,
                                           std::string_view arg_key,
                                           std::vector<ParseDiagnostic>& diags) {
    std::vector<SlotRef> args;
    if (!section.is_object()) {
        if (!section.is_null())
            diags.push_back({path, ParseDiagnostic::Kind::BadType, "expected an object"});
        return args;
    }
    scan_unknown_keys(section, path, {num_key, arg_key}, diags);
    if (auto it = section.find(arg_key); it != section.end()) {
        if (it->is_array()) {
            for (auto& el : *it) {
                std::string name = canon_field(el);
                if (!name.empty()) args.push_back(SlotRef::from_text(name));
            }
        } else {
            std::string name = canon_field(*it);
            if (!name.empty()) args.push_back(SlotRef::from_text(name));
        }
    }
    if (auto it = section.find(num_key); it != section.end() && it->is_number_integer()) {
        int declared = it->get<int>();
        if (declared != static_cast<int>(args.size()))
            diags.push_back({path + "/" + std::string(num_key),
                             ParseDiagnostic::Kind::GrammarViolation,
                             "declared " + std::to_string(declared) + " arguments, got " +
                                 std::to_string(args.size())});
    }
    return args;
}

inline std::map<std::string, Quantity> parse_config(const ordered_json& obj,
                                                    const std::string& path,
                                                    std::vector<ParseDiagnostic>& diags) {
    std::map<std::string, Quantity> config;
    if (!obj.is_object()) {
        if (!obj.is_null())
            diags.push_back({path, ParseDiagnostic::Kind::BadType, "expected an object"});
        return config;
    }
    for (auto& [key, value] : obj.items()) {
        std::string k = canonicalize_or_empty(key);
        if (k.empty()) continue;
        config[k] = quantity_field(value);
    }
    return config;
}

inline OpStep parse_op_step(const ordered_json& j, const std::string& path,
                            std::vector<ParseDiagnostic>& diags) {
    OpStep step;
    scan_unknown_keys(j, path, {"Operation", "Precond", "Execution", "Postcond"}, diags);
    if (auto it = j.find("Operation"); it != j.end()) {
        step.operation = canon_field(*it);
        if (step.operation.empty())
            diags.push_back({path + "/Operation", ParseDiagnostic::Kind::BadType,
                             "operation name must be a non-empty string"});
    } else {
        diags.push_back({path + "/Operation", ParseDiagnostic::Kind::MissingField,
                         "missing \"Operation\""});
    }
    if (auto it = j.find("Precond"); it != j.end())
        step.precond = parse_arg_list(*it, path + "/Precond", "SlotArgNum", "SlotArg", diags);
    if (auto it = j.find("Postcond"); it != j.end())
        step.postcond = parse_arg_list(*it, path + "/Postcond", "EmitArgNum", "EmitArg", diags);
    if (auto it = j.find("Execution"); it != j.end() && it->is_object()) {
        scan_unknown_keys(*it, path + "/Execution", {"DeviceType", "Config"}, diags);
        if (auto dev = it->find("DeviceType"); dev != it->end())
            step.device = canon_field(*dev);
        if (auto cfg = it->find("Config"); cfg != it->end())
            step.config = parse_config(*cfg, path + "/Execution/Config", diags);
    }
    return step;
}

inline ProductFlowRecord parse_flow_record(const ordered_json& j, const std::string& path,
                                           std::vector<ParseDiagnostic>& diags) {
    ProductFlowRecord rec;
    scan_unknown_keys(j, path, {"Pred", "FlowUnit", "Succ"}, diags);
    if (auto it = j.find("Pred"); it != j.end()) rec.pred = canon_field(*it);
    if (auto it = j.find("Succ"); it != j.end()) rec.succ = canon_field(*it);
    auto fu = j.find("FlowUnit");
    if (fu == j.end() || !fu->is_object()) {
        diags.push_back({path + "/FlowUnit", ParseDiagnostic::Kind::MissingField,
                         "missing \"FlowUnit\" object"});
        return rec;
    }
    const std::string fp = path + "/FlowUnit";
    scan_unknown_keys(*fu, fp,
                      {"Component", "ComponentType", "RefName", "UnitArgType", "Vol",
                       "Container", "Cond"},
                      diags);
    if (auto it = fu->find("Component"); it != fu->end())
        rec.unit.component = canon_field(*it);
    if (rec.unit.component.empty())
        diags.push_back({fp + "/Component", ParseDiagnostic::Kind::MissingField,
                         "missing component name"});
    if (auto it = fu->find("ComponentType"); it != fu->end() && it->is_string()) {
        std::string raw = it->get<std::string>();
        if (!raw.empty()) {
            rec.unit.component_type = component_type_from_string(raw);
            if (!rec.unit.component_type)
                diags.push_back({fp + "/ComponentType",
                                 ParseDiagnostic::Kind::GrammarViolation,
                                 "\"" + raw + "\" is not a known component type"});
        }
    }
    if (auto it = fu->find("RefName"); it != fu->end() && it->is_string()) {
        SlotRef ref = SlotRef::from_text(canonicalize_or_empty(it->get<std::string>()));
        rec.unit.ref_index = ref.index < 0 ? 0 : ref.index;
        if (!rec.unit.component.empty() && !ref.component.empty() &&
            ref.component != rec.unit.component)
            diags.push_back({fp + "/RefName", ParseDiagnostic::Kind::GrammarViolation,
                             "refName \"" + ref.component +
                                 "\" does not match component \"" + rec.unit.component + "\""});
    }
    if (auto it = fu->find("UnitArgType"); it != fu->end() && it->is_string()) {
        std::string raw = it->get<std::string>();
        if (raw == "MAT") rec.unit.unit_arg_type = FlowUnit::ArgType::MAT;
        else if (raw == "PROD") rec.unit.unit_arg_type = FlowUnit::ArgType::PROD;
        else
            diags.push_back({fp + "/UnitArgType", ParseDiagnostic::Kind::GrammarViolation,
                             "\"" + raw + "\" is not MAT or PROD"});
    }
    if (auto it = fu->find("Vol"); it != fu->end()) {
        if (it->is_string() && !it->get<std::string>().empty())
            rec.unit.vol = parse_quantity(it->get<std::string>());
        else if (it->is_number())
            rec.unit.vol = Quantity::scalar(it->get<double>());
    }
    if (auto it = fu->find("Container"); it != fu->end())
        rec.unit.container = canon_field(*it);
    if (auto it = fu->find("Cond"); it != fu->end())
        rec.unit.cond = parse_config(*it, fp + "/Cond", diags);
    return rec;
}

inline bool looks_like_step(const ordered_json& j) {
    return j.is_object() && j.contains("Operation");
}

inline bool looks_like_flow(const ordered_json& j) {
    return j.is_object() && (j.contains("FlowUnit") || j.contains("Pred"));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Parsing entry points

inline OpProgramParse parse_op_program(std::string_view text) {
    OpProgramParse out;
    auto values = detail::parse_json_values(text, out.diagnostics);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::string path = "/" + std::to_string(i);
        if (!detail::looks_like_step(values[i])) {
            out.diagnostics.push_back({path, ParseDiagnostic::Kind::GrammarViolation,
                                       "expected an operation-view object"});
            continue;
        }
        out.steps.push_back(detail::parse_op_step(values[i], path, out.diagnostics));
    }
    return out;
}

inline ProductProgramParse parse_product_program(std::string_view text) {
    ProductProgramParse out;
    auto values = detail::parse_json_values(text, out.diagnostics);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::string path = "/" + std::to_string(i);
        if (!detail::looks_like_flow(values[i])) {
            out.diagnostics.push_back({path, ParseDiagnostic::Kind::GrammarViolation,
                                       "expected a product-view object"});
            continue;
        }
        out.records.push_back(detail::parse_flow_record(values[i], path, out.diagnostics));
    }
    return out;
}

// Mixed stream of operation-view and product-view objects, in either a JSON
// array or concatenated form. The plan is dual iff any flow object appears.
inline PlanParse parse_plan(std::string_view text) {
    PlanParse out;
    auto values = detail::parse_json_values(text, out.diagnostics);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::string path = "/" + std::to_string(i);
        if (detail::looks_like_step(values[i]))
            out.plan.steps.push_back(detail::parse_op_step(values[i], path, out.diagnostics));
        else if (detail::looks_like_flow(values[i]))
            out.plan.flows.push_back(
                detail::parse_flow_record(values[i], path, out.diagnostics));
        else
            out.diagnostics.push_back({path, ParseDiagnostic::Kind::GrammarViolation,
                                       "object is neither operation-view nor product-view"});
    }
    out.plan.dual = !out.plan.flows.empty();
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline ordered_json arg_list_json(const std::vector<SlotRef>& args,
                                  std::string_view num_key, std::string_view arg_key) {
    ordered_json section;
    section[std::string(num_key)] = static_cast<int>(args.size());
    if (args.size() == 1) {
        section[std::string(arg_key)] = args[0].ref_text();
    } else {
        ordered_json arr = ordered_json::array();
        for (auto& a : args) arr.push_back(a.ref_text());
        section[std::string(arg_key)] = std::move(arr);
    }
    return section;
}

inline ordered_json step_json(const OpStep& step) {
    ordered_json j;
    j["Operation"] = step.operation;
    j["Precond"] = arg_list_json(step.precond, "SlotArgNum", "SlotArg");
    ordered_json exec;
    exec["DeviceType"] = step.device;
    ordered_json config = ordered_json::object();
    for (auto& [k, v] : step.config) config[k] = v.str();
    exec["Config"] = std::move(config);
    j["Execution"] = std::move(exec);
    j["Postcond"] = arg_list_json(step.postcond, "EmitArgNum", "EmitArg");
    return j;
}

inline ordered_json flow_json(const ProductFlowRecord& rec) {
    ordered_json j;
    j["Pred"] = rec.pred;
    ordered_json fu;
    fu["Component"] = rec.unit.component;
    fu["ComponentType"] =
        rec.unit.component_type ? std::string(to_string(*rec.unit.component_type)) : "";
    fu["RefName"] = rec.unit.ref_name();
    fu["UnitArgType"] = std::string(to_string(rec.unit.unit_arg_type));
    fu["Vol"] = rec.unit.vol ? rec.unit.vol->str() : "";
    fu["Container"] = rec.unit.container;
    ordered_json cond = ordered_json::object();
    for (auto& [k, v] : rec.unit.cond) cond[k] = v.str();
    fu["Cond"] = std::move(cond);
    j["FlowUnit"] = std::move(fu);
    j["Succ"] = rec.succ;
    return j;
}

} // namespace detail

// Canonical form: a JSON array, two-space indent, appendix key order. For
// dual plans, flow records are interleaved after the step that emits them
// (units nobody emits lead the array); plans in canonical flow order —
// see normalize_flow_order — round-trip exactly.
inline std::string serialize_plan(const PlanProgram& plan) {
    ordered_json arr = ordered_json::array();
    std::vector<std::vector<std::size_t>> by_step(plan.steps.size());
    std::vector<std::size_t> initial;
    for (std::size_t i = 0; i < plan.flows.size(); ++i) {
        SlotRef ref{plan.flows[i].unit.component, std::nullopt, plan.flows[i].unit.ref_index};
        int step = emitting_step(plan, ref);
        if (step < 0) initial.push_back(i);
        else by_step[static_cast<std::size_t>(step)].push_back(i);
    }
    for (std::size_t i : initial) arr.push_back(detail::flow_json(plan.flows[i]));
    for (std::size_t s = 0; s < plan.steps.size(); ++s) {
        arr.push_back(detail::step_json(plan.steps[s]));
        for (std::size_t i : by_step[s]) arr.push_back(detail::flow_json(plan.flows[i]));
    }
    return arr.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Artifact admissibility

// Grammar-level checks of a plan against a fitted artifact: unknown
// operations, devices outside the catalog, config keys no pattern of the
// operation defines, and flow-unit types contradicting the product model.
// An empty result means the plan is grammatically admissible.
inline std::vector<ParseDiagnostic> validate_against_artifact(const PlanProgram& plan,
                                                              const DslArtifact& artifact) {
    std::vector<ParseDiagnostic> diags;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& step = plan.steps[i];
        const std::string path = "/steps/" + std::to_string(i);
        const OperationInterface* op = artifact.find_operation(step.operation);
        if (!op) {
            diags.push_back({path + "/Operation", ParseDiagnostic::Kind::UnknownKey,
                             "operation \"" + step.operation +
                                 "\" is not defined by the artifact"});
            continue;
        }
        if (!step.device.empty() && !artifact.device_catalog.contains(step.device))
            diags.push_back({path + "/Execution/DeviceType", ParseDiagnostic::Kind::UnknownKey,
                             "device \"" + step.device + "\" is not in the device catalog"});
        for (auto& [key, _] : step.config) {
            bool known = false;
            for (auto& pattern : op->patterns)
                if (pattern.config_model.contains(key)) { known = true; break; }
            if (!known)
                diags.push_back({path + "/Execution/Config/" + key,
                                 ParseDiagnostic::Kind::UnknownKey,
                                 "config key \"" + key + "\" is not defined for operation \"" +
                                     step.operation + "\""});
        }
    }
    for (std::size_t i = 0; i < plan.flows.size(); ++i) {
        const auto& unit = plan.flows[i].unit;
        if (!unit.component_type) continue;
        const ProductModel* model = artifact.find_product_model(unit.component);
        if (!model || model->phase_conditioned.empty()) continue;
        if (!model->phase_conditioned.contains(*unit.component_type))
            diags.push_back({"/flows/" + std::to_string(i) + "/FlowUnit/ComponentType",
                             ParseDiagnostic::Kind::GrammarViolation,
                             "component \"" + unit.component + "\" was never observed as " +
                                 std::string(to_string(*unit.component_type))});
    }
    return diags;
}

} // namespace protodsl
