#include "popsynth/core/error.h"

namespace popsynth {

namespace {

std::string with_batch(const std::string &what, std::optional<std::size_t> batch_index) {
    if (!batch_index.has_value()) {
        return what;
    }
    return "batch " + std::to_string(*batch_index) + ": " + what;
}

} // namespace

ProviderError::ProviderError(const std::string &what, std::optional<std::size_t> batch_index)
    : std::runtime_error{with_batch(what, batch_index)}, batch_index_{batch_index} {}

ExitCode exit_code_for(const std::exception &error) noexcept {
    if (dynamic_cast<const ValidationError *>(&error) != nullptr) {
        return ExitCode::validation_error;
    }
    if (dynamic_cast<const ProviderError *>(&error) != nullptr) {
        return ExitCode::provider_error;
    }
    return ExitCode::internal_error;
}

} // namespace popsynth
