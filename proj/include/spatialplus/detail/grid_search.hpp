#pragma once

#include "spatialplus/errors.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace spatialplus {

// score(lambda) returns std::nullopt for a degenerate grid point.
template <class Score>
double argmin_on_grid(const std::vector<double>& grid, Score&& score, double* best_score) {
    if (grid.empty()) throw InvalidInput("empty lambda grid");
    double best = std::numeric_limits<double>::infinity();
    double best_lambda = 0.0;
    bool found = false;
    for (double lambda : grid) {
        std::optional<double> s = score(lambda);
        if (!s) continue;
        // Relative slack so that round-off does not decide ties; larger lambda wins.
        if (!found || *s < best - 1e-12 * std::abs(best) ||
            (*s <= best + 1e-12 * std::abs(best) && lambda > best_lambda)) {
            if (!found || *s < best) best = *s;
            best_lambda = lambda;
            found = true;
        }
    }
    if (!found) throw DegenerateDenominator("n - edf vanishes at every grid point");
    if (best_score) *best_score = best;
    return best_lambda;
}

}  // namespace spatialplus
