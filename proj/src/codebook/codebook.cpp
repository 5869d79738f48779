#include "popsynth/codebook/codebook.h"
#include "popsynth/core/csv.h"
#include "popsynth/core/error.h"

#include "popsynth/default_codebook_data.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace popsynth {

std::string_view to_string(VariableRole role) noexcept {
    switch (role) {
    case VariableRole::demographic:
        return "demographic";
    case VariableRole::health:
        return "health";
    case VariableRole::behavior:
        return "behavior";
    }
    return "demographic";
}

std::optional<VariableRole> parse_role(std::string_view text) noexcept {
    if (text == "demographic") {
        return VariableRole::demographic;
    }
    if (text == "health") {
        return VariableRole::health;
    }
    if (text == "behavior" || text == "behaviour") {
        return VariableRole::behavior;
    }
    return std::nullopt;
}

bool VariableSpec::contains(int code) const noexcept { return index_of(code).has_value(); }

std::optional<std::size_t> VariableSpec::index_of(int code) const noexcept {
    const auto it = std::find(codes.begin(), codes.end(), code);
    if (it == codes.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - codes.begin());
}

std::string VariableSpec::label_for(int code) const {
    if (const auto it = labels.find(code); it != labels.end()) {
        return it->second;
    }
    return std::to_string(code);
}

Codebook::Codebook(std::vector<VariableSpec> variables) : variables_{std::move(variables)} {
    if (variables_.empty()) {
        throw ValidationError("codebook declares no variables");
    }
    std::set<std::string, std::less<>> seen;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        const auto &var = variables_[i];
        if (var.name.empty()) {
            throw ValidationError(fmt::format("variables[{}]: empty variable name", i));
        }
        if (!seen.insert(var.name).second) {
            throw ValidationError(
                fmt::format("variables[{}] '{}': duplicate variable name", i, var.name));
        }
        if (var.codes.empty()) {
            throw ValidationError(fmt::format("variables[{}] '{}': empty code list", i, var.name));
        }
        std::set<int> codes;
        for (const auto code : var.codes) {
            if (!codes.insert(code).second) {
                throw ValidationError(
                    fmt::format("variables[{}] '{}': duplicate code {}", i, var.name, code));
            }
        }
        for (const auto &[code, label] : var.labels) {
            if (!codes.contains(code)) {
                throw ValidationError(fmt::format(
                    "variables[{}] '{}': label for code {} which is not in the code list", i,
                    var.name, code));
            }
        }
    }
}

const VariableSpec *Codebook::find(std::string_view name) const noexcept {
    const auto it = std::find_if(variables_.begin(), variables_.end(),
                                 [name](const VariableSpec &v) { return v.name == name; });
    return it == variables_.end() ? nullptr : &*it;
}

std::optional<std::size_t> Codebook::index_of(std::string_view name) const noexcept {
    const auto it = std::find_if(variables_.begin(), variables_.end(),
                                 [name](const VariableSpec &v) { return v.name == name; });
    if (it == variables_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - variables_.begin());
}

const VariableSpec &Codebook::at(std::string_view name) const {
    return variables_[require_index(name)];
}

std::size_t Codebook::require_index(std::string_view name) const {
    const auto index = index_of(name);
    if (!index) {
        throw ValidationError(fmt::format("unknown variable '{}'", name));
    }
    return *index;
}

std::vector<std::string> Codebook::names() const {
    std::vector<std::string> out;
    out.reserve(variables_.size());
    for (const auto &v : variables_) {
        out.push_back(v.name);
    }
    return out;
}

nlohmann::json Codebook::to_json() const {
    auto vars = nlohmann::json::array();
    for (const auto &v : variables_) {
        nlohmann::json labels = nlohmann::json::object();
        for (const auto &[code, label] : v.labels) {
            labels[std::to_string(code)] = label;
        }
        vars.push_back({{"name", v.name},
                        {"role", std::string{to_string(v.role)}},
                        {"codes", v.codes},
                        {"labels", labels}});
    }
    return nlohmann::json{{"variables", vars}};
}

namespace {

VariableSpec parse_variable(const nlohmann::json &node, std::size_t index, std::string_view source) {
    const auto where = [&](std::string_view name) {
        return name.empty() ? fmt::format("{}: variables[{}]", source, index)
                            : fmt::format("{}: variables[{}] '{}'", source, index, name);
    };
    if (!node.is_object()) {
        throw ValidationError(where("") + ": expected an object");
    }
    VariableSpec spec;
    if (!node.contains("name") || !node["name"].is_string()) {
        throw ValidationError(where("") + ": missing string field 'name'");
    }
    spec.name = node["name"].get<std::string>();

    if (!node.contains("codes") || !node["codes"].is_array()) {
        throw ValidationError(where(spec.name) + ": missing code list 'codes'");
    }
    for (const auto &code : node["codes"]) {
        if (!code.is_number_integer()) {
            throw ValidationError(where(spec.name) + ": codes must be integers");
        }
        spec.codes.push_back(code.get<int>());
    }

    if (node.contains("labels")) {
        const auto &labels = node["labels"];
        if (!labels.is_object()) {
            throw ValidationError(where(spec.name) + ": 'labels' must be an object");
        }
        for (const auto &[key, value] : labels.items()) {
            const auto code = csv::parse_int(key);
            if (!code || !value.is_string()) {
                throw ValidationError(where(spec.name) + ": label keys must be integer codes " +
                                      "with string values (got '" + key + "')");
            }
            spec.labels.emplace(static_cast<int>(*code), value.get<std::string>());
        }
    }

    if (node.contains("role")) {
        if (!node["role"].is_string()) {
            throw ValidationError(where(spec.name) + ": 'role' must be a string");
        }
        const auto role = parse_role(node["role"].get<std::string>());
        if (!role) {
            throw ValidationError(where(spec.name) + ": unknown role '" +
                                  node["role"].get<std::string>() + "'");
        }
        spec.role = *role;
    }
    return spec;
}

} // namespace

Codebook load_codebook(std::string_view document, std::string_view source_name) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error &e) {
        throw ValidationError(fmt::format("{}: parse failure at byte {}: {}", source_name, e.byte,
                                          e.what()));
    }
    if (!root.is_object() || !root.contains("variables") || !root["variables"].is_array()) {
        throw ValidationError(fmt::format("{}: expected an object with a 'variables' array",
                                          source_name));
    }
    std::vector<VariableSpec> variables;
    const auto &nodes = root["variables"];
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        variables.push_back(parse_variable(nodes[i], i, source_name));
    }
    try {
        return Codebook{std::move(variables)};
    } catch (const ValidationError &e) {
        throw ValidationError(fmt::format("{}: {}", source_name, e.what()));
    }
}

Codebook load_codebook_file(const std::filesystem::path &path) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw ValidationError("cannot open codebook file " + path.string());
    }
    std::ostringstream buffer;
    buffer << input.rdbuf();
    return load_codebook(buffer.str(), path.string());
}

std::shared_ptr<const Codebook> default_codebook() {
    static const auto instance =
        std::make_shared<const Codebook>(load_codebook(detail::default_codebook_json, "<default codebook>"));
    return instance;
}

std::string_view default_codebook_document() noexcept { return detail::default_codebook_json; }

std::vector<std::string> default_fitting_variables() {
    return {"age", "race", "sex", "income", "education"};
}

} // namespace popsynth
