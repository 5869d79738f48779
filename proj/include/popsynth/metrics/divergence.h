#pragma once

#include "popsynth/metrics/distribution.h"

namespace popsynth {

/// @brief Kullback-Leibler divergence KL(P || Q) in bits.
///
/// Terms with P(i) = 0 contribute 0. Returns +infinity when some P(i) > 0
/// has Q(i) = 0. Throws ValidationError when the supports differ.
double kl_divergence(const CategoricalDistribution &p, const CategoricalDistribution &q);

/// @brief Jensen-Shannon divergence in bits, in [0, 1].
///
/// JS(P || Q) = KL(P || M)/2 + KL(Q || M)/2 with M = (P + Q)/2. Symmetric and
/// always finite; exactly 0 when P and Q are identical.
double js_divergence(const CategoricalDistribution &p, const CategoricalDistribution &q);

/// Throws ValidationError unless both distributions are over the same variable and code list.
void require_same_support(const CategoricalDistribution &p, const CategoricalDistribution &q);

} // namespace popsynth
