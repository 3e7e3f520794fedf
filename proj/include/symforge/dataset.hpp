#pragma once

#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "group.hpp"

namespace symforge {

/// Affine map from raw targets to the normalized targets stored in a dataset:
/// normalized = (raw - offset) / scale.
struct target_scaling {
    double offset = 0.0;
    double scale = 1.0;

    double normalize(double y) const { return (y - offset) / scale; }
    double denormalize(double y) const { return y * scale + offset; }

    friend bool operator==(const target_scaling&, const target_scaling&) = default;
};

struct dataset {
    std::size_t n = 0;
    std::vector<vec> inputs;
    vec targets;
    target_scaling scaling;

    std::size_t size() const noexcept { return targets.size(); }
    bool empty() const noexcept { return targets.empty(); }

    void push_back(vec x, double y) {
        if (x.size() != n) throw dimension_error("dataset: row length differs from n");
        inputs.push_back(std::move(x));
        targets.push_back(y);
    }

    friend bool operator==(const dataset&, const dataset&) = default;
};

}  // namespace symforge
