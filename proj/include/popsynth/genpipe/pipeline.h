#pragma once

#include "popsynth/codebook/survey_dataset.h"
#include "popsynth/genpipe/generation_spec.h"
#include "popsynth/genpipe/provider.h"

#include <cstddef>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace popsynth {

struct PipelineOptions {
    /// Concurrent requests in flight; records are still accepted in batch order.
    std::size_t parallelism = 1;
    /// Abort after this many consecutive batches without a record array.
    std::size_t dead_batch_limit = 10;
    RetryPolicy retry;
    SleepFunction sleep;
};

struct RunSummary {
    std::string run_id;
    std::string spec_digest;
    std::string provider;
    std::size_t target_n = 0;
    /// Records in the returned dataset.
    std::size_t records = 0;
    /// Accepted before truncation to target_n.
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t batches_issued = 0;
    std::size_t dead_batches = 0;
    /// accepted / (accepted + rejected), 0 when nothing was parsed.
    double acceptance_rate = 0.0;
    bool resumed = false;
    std::size_t resumed_from_batch = 0;
};

nlohmann::json to_json(const RunSummary &summary);

struct GenerationResult {
    SurveyDataset dataset;
    RunSummary summary;
};

/// @brief Generates until target_n records are accepted, checkpointing every batch.
///
/// @p run_dir must not already hold a checkpoint. The result is truncated to
/// exactly target_n records in acceptance order (batch index, row index).
/// A dead-batch streak reaching the limit throws DeadBatchAbort after the
/// checkpoint is committed; provider errors propagate the same way.
GenerationResult run_generation(const GenerationSpec &spec, ProviderClient &provider,
                                const std::filesystem::path &run_dir, const PipelineOptions &options = {});

/// @brief Continues a checkpointed run.
///
/// Throws CheckpointError when the spec digest differs or the checkpoint is corrupt.
GenerationResult resume_generation(const std::filesystem::path &run_dir, const GenerationSpec &spec,
                                   ProviderClient &provider, const PipelineOptions &options = {});

} // namespace popsynth
