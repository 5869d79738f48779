#include "popsynth/genpipe/mock_provider.h"
#include "popsynth/core/error.h"
#include "popsynth/core/hash.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace popsynth {

namespace {

double unit_draw(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace

std::vector<std::string> load_fixture_files(const std::vector<std::filesystem::path> &paths) {
    std::vector<std::string> payloads;
    for (const auto &path : paths) {
        std::ifstream input{path, std::ios::binary};
        if (!input) {
            throw ValidationError("cannot open mock fixture " + path.string());
        }
        std::ostringstream text;
        text << input.rdbuf();
        payloads.push_back(text.str());
    }
    return payloads;
}

MockProvider::MockProvider(std::shared_ptr<const Codebook> codebook, MockOptions options)
    : codebook_{std::move(codebook)}, options_{std::move(options)} {
    if (!codebook_) {
        throw ValidationError("mock provider: no codebook");
    }
    for (const auto &variable : codebook_->variables()) {
        std::mt19937_64 rng{derive_seed(options_.seed, "mock-weights|" + variable.name)};
        std::vector<double> weights;
        for (std::size_t k = 0; k < variable.codes.size(); ++k) {
            weights.push_back(0.25 + unit_draw(rng));
        }
        category_weights_.push_back(std::move(weights));
    }
}

std::string MockProvider::synthesize_payload(std::size_t batch_index, std::size_t rows) const {
    std::mt19937_64 rng{derive_seed(options_.seed, fmt::format("mock-batch|{}", batch_index))};
    const auto &variables = codebook_->variables();
    std::string out = "{\"records\": [";
    for (std::size_t r = 0; r < rows; ++r) {
        if (options_.truncate_after_rows && r == *options_.truncate_after_rows) {
            // Cut the next row mid-object, as a length-limited response would.
            out += ",\n  {\"" + variables.front().name + "\": ";
            return out;
        }
        const bool invalid = options_.invalid_every > 0 && (r + 1) % options_.invalid_every == 0;
        const auto broken = r % variables.size();
        out += r == 0 ? "\n  {" : ",\n  {";
        for (std::size_t j = 0; j < variables.size(); ++j) {
            const auto &weights = category_weights_[j];
            double total = 0.0;
            for (const auto w : weights) {
                total += w;
            }
            double u = unit_draw(rng) * total;
            std::size_t k = 0;
            while (k + 1 < weights.size() && u >= weights[k]) {
                u -= weights[k];
                ++k;
            }
            int code = variables[j].codes[k];
            if (invalid && j == broken) {
                code = *std::max_element(variables[j].codes.begin(), variables[j].codes.end()) + 1;
            }
            out += fmt::format("{}\"{}\": {}", j == 0 ? "" : ", ", variables[j].name, code);
        }
        out += "}";
    }
    out += "\n]}\n";
    return out;
}

RawBatch MockProvider::complete(const CompletionRequest &request) {
    if (options_.fail_from_batch && request.batch_index >= *options_.fail_from_batch) {
        throw ProviderError("mock provider: simulated failure");
    }
    RawBatch raw;
    if (!options_.fixtures.empty()) {
        raw.payload = options_.fixtures[request.batch_index % options_.fixtures.size()];
        raw.provider_meta["fixture"] = std::to_string(request.batch_index % options_.fixtures.size());
    } else {
        raw.payload = synthesize_payload(request.batch_index, request.requested_rows);
    }
    raw.provider_meta["model"] = "mock";
    raw.provider_meta["batch_index"] = std::to_string(request.batch_index);
    return raw;
}

} // namespace popsynth
