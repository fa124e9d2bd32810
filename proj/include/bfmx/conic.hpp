#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace bfmx {

// Problems are stated as  min c'x  s.t.  Ax + s = b,  s in K,
// with K a product of zero, nonnegative and second-order cones laid out
// in row order. Rows of A are grouped by cone block.

enum class ConeKind { Zero, Nonnegative, SecondOrder };

struct ConeSpec {
    ConeKind kind = ConeKind::Zero;
    int dim = 0;
};

// Coordinate-format sparse matrix; duplicate entries sum.
struct SparseTriplets {
    int rows = 0, cols = 0;
    std::vector<int> row, col;
    std::vector<double> val;

    void add(int r, int c, double v) {
        row.push_back(r);
        col.push_back(c);
        val.push_back(v);
    }
};

struct ConicProblem {
    std::vector<double> c;
    SparseTriplets A;
    std::vector<double> b;
    std::vector<ConeSpec> cones;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_rows() const { return static_cast<int>(b.size()); }

    // Throws std::invalid_argument on inconsistent shapes, cone dims that
    // do not tile the rows, indices out of range or non-finite data.
    void validate() const;
};

std::string cone_kind_name(ConeKind kind);
ConeKind cone_kind_from_name(const std::string& name);

nlohmann::json to_json(const ConicProblem& p);
ConicProblem conic_problem_from_json(const nlohmann::json& j);

}  // namespace bfmx
