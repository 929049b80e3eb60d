#include "snape/field_data.hpp"

#include <algorithm>

#include "snape/errors.hpp"

namespace snape {

const std::vector<double>& FieldData::field(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            return values.at(i);
        }
    }
    throw MismatchError("no field named '" + name + "'");
}

std::vector<double>& FieldData::field(const std::string& name) {
    return const_cast<std::vector<double>&>(std::as_const(*this).field(name));
}

bool FieldData::has_field(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

FieldData FieldData::single(Grid grid, std::string name, std::vector<double> values) {
    FieldData fd{std::move(grid), {std::move(name)}, {std::move(values)}};
    fd.validate();
    return fd;
}

void FieldData::validate() const {
    if (names.size() != values.size()) {
        throw MismatchError("field name count does not match field value count");
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (values[i].size() != grid.point_count()) {
            throw MismatchError("field '" + names[i] + "' has " + std::to_string(values[i].size()) +
                                " values, grid has " + std::to_string(grid.point_count()) + " points");
        }
    }
}

}  // namespace snape
