#pragma once

#include <string>
#include <vector>

namespace spatialplus {

// A named pass/fail verdict with a human-readable account of the numbers.
struct AcceptanceCheck {
    std::string id;
    std::string description;
    bool passed = false;
    std::string detail;
};

inline bool all_passed(const std::vector<AcceptanceCheck>& checks) {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

}  // namespace spatialplus
