#include "popsynth/metrics/divergence.h"
#include "popsynth/core/error.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace popsynth {

void require_same_support(const CategoricalDistribution &p, const CategoricalDistribution &q) {
    if (p.variable != q.variable || p.codes != q.codes || p.probs.size() != q.probs.size() ||
        p.probs.size() != p.codes.size()) {
        throw ValidationError(fmt::format("support mismatch between distributions of '{}' ({} codes) "
                                          "and '{}' ({} codes)",
                                          p.variable, p.codes.size(), q.variable, q.codes.size()));
    }
}

namespace {

// Sum of p_i * log2(p_i / q_i); 0 log 0 := 0.
double kl_terms(const std::vector<double> &p, const std::vector<double> &q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) {
            continue;
        }
        if (q[i] <= 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        sum += p[i] * std::log2(p[i] / q[i]);
    }
    return sum;
}

} // namespace

double kl_divergence(const CategoricalDistribution &p, const CategoricalDistribution &q) {
    require_same_support(p, q);
    return kl_terms(p.probs, q.probs);
}

double js_divergence(const CategoricalDistribution &p, const CategoricalDistribution &q) {
    require_same_support(p, q);
    std::vector<double> m(p.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = 0.5 * (p.probs[i] + q.probs[i]);
    }
    const double js = 0.5 * kl_terms(p.probs, m) + 0.5 * kl_terms(q.probs, m);
    // Rounding can push the sum a few ulps outside the mathematical range.
    return std::clamp(js, 0.0, 1.0);
}

} // namespace popsynth
