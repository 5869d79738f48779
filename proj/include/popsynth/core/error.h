#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>

namespace popsynth {

/// @brief Process exit codes shared by every command.
enum class ExitCode : int {
    success = 0,
    validation_error = 1,
    provider_error = 2,
    internal_error = 3,
};

/// Malformed input, schema violations, configuration problems.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint digest mismatch or a corrupt checkpoint on disk.
class CheckpointError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// Failure reported by, or while talking to, a language-model provider.
class ProviderError : public std::runtime_error {
  public:
    ProviderError(const std::string &what, std::optional<std::size_t> batch_index = std::nullopt);

    [[nodiscard]] std::optional<std::size_t> batch_index() const noexcept { return batch_index_; }

  private:
    std::optional<std::size_t> batch_index_;
};

/// Network-level or retryable server-side failure (timeouts, 429, 5xx).
class TransportError : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

class AuthenticationError : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

/// The provider declined to produce content (safety block, explicit refusal).
class RefusalError : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

/// Too many consecutive batches without a parseable record array.
class DeadBatchAbort : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

/// A postcondition that the code itself guarantees was found broken.
class InvariantError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// @brief Maps an exception to the documented process exit code.
ExitCode exit_code_for(const std::exception &error) noexcept;

} // namespace popsynth
