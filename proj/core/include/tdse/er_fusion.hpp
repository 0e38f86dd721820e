#pragma once

#include <span>
#include <vector>

namespace tdse::er {

/// Up/down probability pair; up + down = 1.
struct ProbabilityPair {
  double up = 0.5;
  double down = 0.5;
};

/// Belief over {Up, Down}; 1 - up - down is left unassigned.
struct Evidence {
  double up = 0.0;
  double down = 0.0;
  double weight = 1.0;
  double reliability = 1.0;
};

void validate(const Evidence& e);

/// Recursive evidential-reasoning combination with weight and reliability.
/// Evidence i enters as masses w*p (singletons), w*(1 - up - down) (frame)
/// and discount 1 - r; the combined singleton masses are finally renormalized.
/// Zero-weight evidence is skipped; with no informative evidence the result
/// is (0.5, 0.5).
ProbabilityPair er_combine(std::span<const Evidence> evidence);

/// Validation accuracy clipped to [0.05, 0.95].
double estimate_reliability(std::span<const int> predicted, std::span<const int> actual);
double clip_reliability(double accuracy);

/// Combines one sample's provider outputs. Evidence weights are
/// weight_i * reliability_i renormalized to sum to 1.
ProbabilityPair fuse_providers(std::span<const ProbabilityPair> outputs, std::span<const double> weights,
                               std::span<const double> reliabilities);

}  // namespace tdse::er
