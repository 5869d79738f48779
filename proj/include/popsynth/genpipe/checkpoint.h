#pragma once

#include "popsynth/codebook/survey_dataset.h"
#include "popsynth/genpipe/provider.h"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

namespace popsynth {

/// Contents of meta.json; records_bytes and records_sha256 pin the committed records.csv prefix.
struct CheckpointMeta {
    std::string spec_digest;
    std::size_t batches_issued = 0;
    std::size_t accepted_count = 0;
    std::size_t rejected_count = 0;
    std::size_t dead_batches = 0;
    std::size_t dead_streak = 0;
    std::uintmax_t records_bytes = 0;
    std::string records_sha256;

    friend bool operator==(const CheckpointMeta &, const CheckpointMeta &) = default;
};

nlohmann::json to_json(const CheckpointMeta &meta);
CheckpointMeta checkpoint_meta_from_json(const nlohmann::json &document);

/// @brief On-disk run state: `<run-id>/records.csv`, `<run-id>/meta.json`, `<run-id>/raw/`.
///
/// records.csv is append-only in the survey CSV format. meta.json is replaced
/// atomically after each batch, so a crash between the two leaves extra bytes
/// that are discarded on load.
class CheckpointStore {
  public:
    CheckpointStore(std::filesystem::path run_dir, std::shared_ptr<const Codebook> codebook);

    [[nodiscard]] const std::filesystem::path &directory() const noexcept { return dir_; }
    [[nodiscard]] bool exists() const;

    /// Creates a fresh run directory; an existing checkpoint is a CheckpointError.
    void create(const std::string &spec_digest);

    /// @brief Loads and verifies the checkpoint.
    ///
    /// Throws CheckpointError on a digest mismatch, a records file shorter
    /// than committed or whose committed bytes fail the hash.
    SurveyDataset load(const std::string &expected_digest);

    /// Saves the raw payload of a batch for audit.
    void save_raw(std::size_t batch_index, const RawBatch &raw) const;

    /// Appends accepted records and commits the new counters.
    void commit(const std::vector<SurveyRecord> &accepted, CheckpointMeta meta);

    [[nodiscard]] const CheckpointMeta &meta() const noexcept { return meta_; }

  private:
    void write_meta() const;

    std::filesystem::path dir_;
    std::shared_ptr<const Codebook> codebook_;
    CheckpointMeta meta_;
    /// Committed records.csv bytes; hashed on every commit.
    std::string records_text_;
};

} // namespace popsynth
