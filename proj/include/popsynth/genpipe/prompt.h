#pragma once

#include "popsynth/codebook/codebook.h"
#include "popsynth/genpipe/generation_spec.h"

#include <cstddef>
#include <string>
#include <string_view>

namespace popsynth {

/// @brief Checks a prompt template against a codebook.
///
/// Recognised placeholders are {state}, {year}, {n_records}, {variables}
/// (the full coded variable list) and {variable:NAME} (one variable). {{ and
/// }} are literal braces. The template must contain {state}, {year} and
/// {n_records}, and must reference every codebook variable exactly once,
/// either through {variables} or through one {variable:NAME} each. Unknown or
/// unterminated placeholders are errors.
void validate_prompt_template(std::string_view tmpl, const Codebook &codebook);

/// One line describing a variable and its full response coding.
std::string describe_variable(const VariableSpec &variable);

/// @brief Instantiates the spec's template for one batch of @p n_records rows.
///
/// Throws ValidationError on any unresolved placeholder.
std::string build_prompt(const GenerationSpec &spec, std::size_t n_records);

/// build_prompt with n_records = spec.batch_size.
std::string build_prompt(const GenerationSpec &spec);

} // namespace popsynth
