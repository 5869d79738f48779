#include "popsynth/genpipe/prompt.h"
#include "popsynth/core/error.h"

#include <map>
#include <string>

#include <fmt/format.h>

namespace popsynth {

namespace {

constexpr std::string_view variable_prefix = "variable:";

struct Placeholder {
    std::string name;
    std::size_t position = 0;
};

/// Splits a template into literal text and placeholders. Calls on_text / on_placeholder in order.
template <typename OnText, typename OnPlaceholder>
void scan_template(std::string_view tmpl, OnText on_text, OnPlaceholder on_placeholder) {
    std::string text;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        const char c = tmpl[i];
        if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            text.push_back('{');
            ++i;
        } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
            text.push_back('}');
            ++i;
        } else if (c == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close == std::string_view::npos) {
                throw ValidationError(fmt::format("prompt template: unterminated placeholder at offset {}", i));
            }
            on_text(text);
            text.clear();
            on_placeholder(Placeholder{std::string{tmpl.substr(i + 1, close - i - 1)}, i});
            i = close;
        } else if (c == '}') {
            throw ValidationError(fmt::format("prompt template: unmatched '}}' at offset {}", i));
        } else {
            text.push_back(c);
        }
    }
    on_text(text);
}

} // namespace

void validate_prompt_template(std::string_view tmpl, const Codebook &codebook) {
    std::map<std::string, int> seen;
    std::map<std::string, int> variable_refs;
    scan_template(
        tmpl, [](const std::string &) {},
        [&](const Placeholder &p) {
            if (p.name == "state" || p.name == "year" || p.name == "n_records") {
                ++seen[p.name];
            } else if (p.name == "variables") {
                for (const auto &v : codebook.variables()) {
                    ++variable_refs[v.name];
                }
            } else if (p.name.starts_with(variable_prefix)) {
                const auto name = p.name.substr(variable_prefix.size());
                if (!codebook.find(name)) {
                    throw ValidationError(
                        fmt::format("prompt template: placeholder {{{}}} names unknown variable '{}'", p.name, name));
                }
                ++variable_refs[name];
            } else {
                throw ValidationError(
                    fmt::format("prompt template: unknown placeholder {{{}}} at offset {}", p.name, p.position));
            }
        });
    for (const auto *required : {"state", "year", "n_records"}) {
        if (!seen.contains(required)) {
            throw ValidationError(fmt::format("prompt template: missing the {{{}}} placeholder", required));
        }
    }
    for (const auto &v : codebook.variables()) {
        const auto count = variable_refs[v.name];
        if (count != 1) {
            throw ValidationError(fmt::format("prompt template: variable '{}' is referenced {} times (expected once)",
                                              v.name, count));
        }
    }
}

std::string describe_variable(const VariableSpec &variable) {
    std::string line = fmt::format("- {}:", variable.name);
    for (std::size_t k = 0; k < variable.codes.size(); ++k) {
        const auto code = variable.codes[k];
        line += k == 0 ? " " : "; ";
        const auto label = variable.labels.find(code);
        if (label != variable.labels.end()) {
            line += fmt::format("{} = {}", code, label->second);
        } else {
            line += std::to_string(code);
        }
    }
    return line;
}

std::string build_prompt(const GenerationSpec &spec, std::size_t n_records) {
    spec.validate();
    std::string out;
    scan_template(
        spec.prompt_template, [&](const std::string &text) { out += text; },
        [&](const Placeholder &p) {
            if (p.name == "state") {
                out += spec.state_name;
            } else if (p.name == "year") {
                out += std::to_string(spec.year);
            } else if (p.name == "n_records") {
                out += std::to_string(n_records);
            } else if (p.name == "variables") {
                const auto &variables = spec.codebook->variables();
                for (std::size_t j = 0; j < variables.size(); ++j) {
                    if (j > 0) {
                        out.push_back('\n');
                    }
                    out += describe_variable(variables[j]);
                }
            } else if (p.name.starts_with(variable_prefix)) {
                out += describe_variable(spec.codebook->at(p.name.substr(variable_prefix.size())));
            } else {
                throw ValidationError(fmt::format("prompt template: unresolved placeholder {{{}}}", p.name));
            }
        });
    return out;
}

std::string build_prompt(const GenerationSpec &spec) { return build_prompt(spec, spec.batch_size); }

} // namespace popsynth
