#include "popsynth/genpipe/provider.h"
#include "popsynth/core/error.h"

#include <algorithm>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

namespace popsynth {

std::chrono::milliseconds backoff_delay(const RetryPolicy &policy, std::size_t retry) {
    const double base = static_cast<double>(policy.initial_backoff.count());
    const double delay = base * std::pow(policy.multiplier, static_cast<double>(retry == 0 ? 0 : retry - 1));
    const double capped = std::min(delay, static_cast<double>(policy.max_backoff.count()));
    return std::chrono::milliseconds{static_cast<long long>(capped)};
}

RawBatch request_batch(ProviderClient &provider, const CompletionRequest &request, const RetryPolicy &policy,
                       const SleepFunction &sleep) {
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            return provider.complete(request);
        } catch (const TransportError &e) {
            if (attempt >= policy.max_retries) {
                throw TransportError(std::string{"giving up after "} + std::to_string(attempt + 1) +
                                         " attempts: " + e.what(),
                                     request.batch_index);
            }
            const auto delay = backoff_delay(policy, attempt + 1);
            spdlog::warn("batch {}: transport error ({}); retry {} of {} in {} ms", request.batch_index, e.what(),
                         attempt + 1, policy.max_retries, delay.count());
            if (sleep) {
                sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
        } catch (const ProviderError &e) {
            if (e.batch_index()) {
                throw;
            }
            // Re-raise the same kind with the batch index attached.
            if (dynamic_cast<const AuthenticationError *>(&e)) {
                throw AuthenticationError(e.what(), request.batch_index);
            }
            if (dynamic_cast<const RefusalError *>(&e)) {
                throw RefusalError(e.what(), request.batch_index);
            }
            throw ProviderError(e.what(), request.batch_index);
        }
    }
}

} // namespace popsynth
