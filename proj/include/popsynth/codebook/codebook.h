#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace popsynth {

enum class VariableRole { demographic, health, behavior };

std::string_view to_string(VariableRole role) noexcept;
std::optional<VariableRole> parse_role(std::string_view text) noexcept;

/// @brief One categorical survey question and its valid integer response codes.
struct VariableSpec {
    std::string name;
    std::vector<int> codes;
    std::map<int, std::string> labels;
    VariableRole role = VariableRole::demographic;

    [[nodiscard]] bool contains(int code) const noexcept;

    /// Position of @p code in the declared code order.
    [[nodiscard]] std::optional<std::size_t> index_of(int code) const noexcept;

    /// The display label, or the code itself as text when no label is declared.
    [[nodiscard]] std::string label_for(int code) const;

    friend bool operator==(const VariableSpec &, const VariableSpec &) = default;
};

/// @brief The survey schema: an ordered, name-unique list of variables.
///
/// Immutable after construction; the constructor enforces the invariants
/// (unique names, non-empty duplicate-free code lists, labels keyed by valid
/// codes) and throws ValidationError otherwise.
class Codebook {
  public:
    explicit Codebook(std::vector<VariableSpec> variables);

    [[nodiscard]] const std::vector<VariableSpec> &variables() const noexcept { return variables_; }
    [[nodiscard]] std::size_t size() const noexcept { return variables_.size(); }

    [[nodiscard]] const VariableSpec *find(std::string_view name) const noexcept;
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const noexcept;

    /// Throws ValidationError naming the variable when it is not declared.
    [[nodiscard]] const VariableSpec &at(std::string_view name) const;
    [[nodiscard]] std::size_t require_index(std::string_view name) const;

    [[nodiscard]] std::vector<std::string> names() const;

    [[nodiscard]] nlohmann::json to_json() const;

    friend bool operator==(const Codebook &, const Codebook &) = default;

  private:
    std::vector<VariableSpec> variables_;
};

/// @brief Parses a codebook JSON document.
///
/// Expected shape: {"variables":[{"name":..., "codes":[...], "labels":{...}, "role":...}]}.
/// Variable order is preserved. Errors carry @p source_name plus the offending
/// variable's name and array position.
Codebook load_codebook(std::string_view document, std::string_view source_name = "<codebook>");

Codebook load_codebook_file(const std::filesystem::path &path);

/// The shipped 14-variable BRFSS 2023 codebook.
std::shared_ptr<const Codebook> default_codebook();

/// Raw JSON text of the shipped codebook.
std::string_view default_codebook_document() noexcept;

/// Fitting variables used when a configuration does not name its own.
std::vector<std::string> default_fitting_variables();

} // namespace popsynth
