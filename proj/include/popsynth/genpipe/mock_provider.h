#pragma once

#include "popsynth/codebook/codebook.h"
#include "popsynth/genpipe/provider.h"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace popsynth {

struct MockOptions {
    std::uint64_t seed = 0;
    /// Payloads returned verbatim, cycling by batch index. Empty selects the synthetic generator.
    std::vector<std::string> fixtures;
    /// Synthetic generator: every k-th row of a batch gets an out-of-range code. 0 disables.
    std::size_t invalid_every = 0;
    /// Synthetic generator: cut the payload text after this many complete rows.
    std::optional<std::size_t> truncate_after_rows;
    /// Batches at or after this index fail with a non-retryable ProviderError.
    std::optional<std::size_t> fail_from_batch;
};

/// Reads fixture payload files in the given order.
std::vector<std::string> load_fixture_files(const std::vector<std::filesystem::path> &paths);

/// @brief Deterministic offline provider.
///
/// The response depends only on (options, batch index, requested rows), so a
/// run can be replayed or resumed and reproduce the same bytes.
class MockProvider : public ProviderClient {
  public:
    MockProvider(std::shared_ptr<const Codebook> codebook, MockOptions options);

    RawBatch complete(const CompletionRequest &request) override;
    [[nodiscard]] std::string name() const override { return "mock"; }

  private:
    [[nodiscard]] std::string synthesize_payload(std::size_t batch_index, std::size_t rows) const;

    std::shared_ptr<const Codebook> codebook_;
    MockOptions options_;
    /// Per-variable category weights of the synthetic generator.
    std::vector<std::vector<double>> category_weights_;
};

} // namespace popsynth
