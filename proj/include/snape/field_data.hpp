#pragma once

#include <string>
#include <vector>

#include "snape/tensor_basis.hpp"

namespace snape {

/// Named real fields sampled on a grid, each flattened first-axis-slowest.
struct FieldData {
    Grid grid;
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;  ///< one vector of grid.point_count() per name

    /// Throws MismatchError if no field has this name.
    const std::vector<double>& field(const std::string& name) const;
    std::vector<double>& field(const std::string& name);
    bool has_field(const std::string& name) const;

    /// Single-field convenience constructor.
    static FieldData single(Grid grid, std::string name, std::vector<double> values);

    /// Throws MismatchError when sizes disagree with the grid.
    void validate() const;

    bool operator==(const FieldData&) const = default;
};

}  // namespace snape
