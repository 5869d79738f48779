#include "popsynth/genpipe/pipeline.h"
#include "popsynth/core/error.h"
#include "popsynth/genpipe/batch.h"
#include "popsynth/genpipe/checkpoint.h"
#include "popsynth/genpipe/prompt.h"

#include <algorithm>
#include <future>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace popsynth {

nlohmann::json to_json(const RunSummary &s) {
    return nlohmann::json{{"run_id", s.run_id},
                          {"spec_digest", s.spec_digest},
                          {"provider", s.provider},
                          {"target_n", s.target_n},
                          {"records", s.records},
                          {"accepted", s.accepted},
                          {"rejected", s.rejected},
                          {"batches_issued", s.batches_issued},
                          {"dead_batches", s.dead_batches},
                          {"acceptance_rate", s.acceptance_rate},
                          {"resumed", s.resumed},
                          {"resumed_from_batch", s.resumed_from_batch}};
}

namespace {

GenerationResult drive(const GenerationSpec &spec, ProviderClient &provider, CheckpointStore &store,
                       SurveyDataset accepted, const PipelineOptions &options, RunSummary summary) {
    const auto prompt = build_prompt(spec);
    const auto schema = record_schema(*spec.codebook);
    auto meta = store.meta();

    while (meta.accepted_count < spec.target_n) {
        const auto remaining = spec.target_n - meta.accepted_count;
        const auto needed = (remaining + spec.batch_size - 1) / spec.batch_size;
        const auto wave = std::clamp<std::size_t>(options.parallelism, 1, needed);

        std::vector<CompletionRequest> requests;
        for (std::size_t w = 0; w < wave; ++w) {
            requests.push_back({prompt, schema, spec.sampling, meta.batches_issued + w, spec.batch_size});
        }
        std::vector<std::future<RawBatch>> pending;
        if (wave > 1) {
            for (const auto &request : requests) {
                pending.push_back(std::async(std::launch::async, [&provider, &options, request] {
                    return request_batch(provider, request, options.retry, options.sleep);
                }));
            }
        }

        for (std::size_t w = 0; w < wave; ++w) {
            const auto batch_index = requests[w].batch_index;
            const auto raw = wave > 1 ? pending[w].get()
                                      : request_batch(provider, requests[w], options.retry, options.sleep);
            store.save_raw(batch_index, raw);
            const auto outcome = parse_and_validate_batch(raw, *spec.codebook);

            ++meta.batches_issued;
            meta.rejected_count += outcome.rejected;
            meta.accepted_count += outcome.accepted.size();
            if (outcome.dead) {
                ++meta.dead_batches;
                ++meta.dead_streak;
            } else {
                meta.dead_streak = 0;
            }
            for (const auto &record : outcome.accepted) {
                accepted.add(record);
            }
            store.commit(outcome.accepted, meta);

            if (outcome.dead) {
                spdlog::warn("batch {}: no record array in the response (dead streak {})", batch_index,
                             meta.dead_streak);
            } else {
                spdlog::info("batch {}: {} accepted, {} rejected{} ({} of {} records)", batch_index,
                             outcome.accepted.size(), outcome.rejected, outcome.salvaged ? ", salvaged" : "",
                             meta.accepted_count, spec.target_n);
            }
            for (const auto &reason : outcome.rejection_samples) {
                spdlog::debug("batch {}: rejected row: {}", batch_index, reason);
            }
            if (meta.dead_streak >= options.dead_batch_limit) {
                throw DeadBatchAbort(fmt::format("{} consecutive dead batches; checkpoint kept in {}",
                                                 meta.dead_streak, store.directory().string()),
                                     batch_index);
            }
            if (meta.accepted_count >= spec.target_n) {
                break;
            }
        }
    }

    summary.accepted = meta.accepted_count;
    summary.rejected = meta.rejected_count;
    summary.batches_issued = meta.batches_issued;
    summary.dead_batches = meta.dead_batches;
    const auto parsed = meta.accepted_count + meta.rejected_count;
    summary.acceptance_rate = parsed == 0 ? 0.0 : static_cast<double>(meta.accepted_count) / static_cast<double>(parsed);
    accepted.truncate(std::min(spec.target_n, accepted.size()));
    summary.records = accepted.size();
    return {std::move(accepted), std::move(summary)};
}

RunSummary start_summary(const GenerationSpec &spec, const ProviderClient &provider,
                         const std::filesystem::path &run_dir, const std::string &digest) {
    RunSummary summary;
    summary.run_id = run_dir.filename().string();
    summary.spec_digest = digest;
    summary.provider = provider.name();
    summary.target_n = spec.target_n;
    return summary;
}

std::string provenance_of(const GenerationSpec &spec, const ProviderClient &provider) {
    return fmt::format("{} {} {}", provider.name(), spec.state_name, spec.year);
}

} // namespace

GenerationResult run_generation(const GenerationSpec &spec, ProviderClient &provider,
                                const std::filesystem::path &run_dir, const PipelineOptions &options) {
    spec.validate();
    const auto digest = spec_digest(spec);
    CheckpointStore store{run_dir, spec.codebook};
    store.create(digest);
    return drive(spec, provider, store, SurveyDataset{spec.codebook, provenance_of(spec, provider)}, options,
                 start_summary(spec, provider, run_dir, digest));
}

GenerationResult resume_generation(const std::filesystem::path &run_dir, const GenerationSpec &spec,
                                   ProviderClient &provider, const PipelineOptions &options) {
    spec.validate();
    const auto digest = spec_digest(spec);
    CheckpointStore store{run_dir, spec.codebook};
    auto accepted = store.load(digest);
    accepted.set_provenance(provenance_of(spec, provider));
    auto summary = start_summary(spec, provider, run_dir, digest);
    summary.resumed = true;
    summary.resumed_from_batch = store.meta().batches_issued;
    spdlog::info("resuming {} at batch {} with {} accepted records", summary.run_id, summary.resumed_from_batch,
                 accepted.size());
    return drive(spec, provider, store, std::move(accepted), options, std::move(summary));
}

} // namespace popsynth
