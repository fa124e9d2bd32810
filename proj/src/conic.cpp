#include "bfmx/conic.hpp"

#include <cmath>
#include <stdexcept>

namespace bfmx {

void ConicProblem::validate() const {
    const int n = num_vars();
    const int m = num_rows();
    if (A.rows != m || A.cols != n)
        throw std::invalid_argument("conic problem: A shape does not match b / c sizes");
    if (A.row.size() != A.col.size() || A.row.size() != A.val.size())
        throw std::invalid_argument("conic problem: triplet arrays differ in length");
    for (std::size_t k = 0; k < A.row.size(); ++k) {
        if (A.row[k] < 0 || A.row[k] >= m || A.col[k] < 0 || A.col[k] >= n)
            throw std::invalid_argument("conic problem: triplet index out of range");
        if (!std::isfinite(A.val[k]))
            throw std::invalid_argument("conic problem: non-finite matrix entry");
    }
    for (double v : c)
        if (!std::isfinite(v)) throw std::invalid_argument("conic problem: non-finite objective");
    for (double v : b)
        if (!std::isfinite(v)) throw std::invalid_argument("conic problem: non-finite rhs");
    int total = 0;
    for (const ConeSpec& cs : cones) {
        if (cs.dim <= 0) throw std::invalid_argument("conic problem: cone with nonpositive dim");
        if (cs.kind == ConeKind::SecondOrder && cs.dim < 2)
            throw std::invalid_argument("conic problem: second-order cone needs dim >= 2");
        total += cs.dim;
    }
    if (total != m)
        throw std::invalid_argument("conic problem: cone dims sum to " + std::to_string(total) +
                                    ", expected " + std::to_string(m) + " rows");
}

std::string cone_kind_name(ConeKind kind) {
    switch (kind) {
        case ConeKind::Zero: return "zero";
        case ConeKind::Nonnegative: return "nonnegative";
        case ConeKind::SecondOrder: return "second-order";
    }
    return "unknown";
}

ConeKind cone_kind_from_name(const std::string& name) {
    if (name == "zero") return ConeKind::Zero;
    if (name == "nonnegative") return ConeKind::Nonnegative;
    if (name == "second-order") return ConeKind::SecondOrder;
    throw std::invalid_argument("unknown cone kind: " + name);
}

nlohmann::json to_json(const ConicProblem& p) {
    nlohmann::json j;
    j["c"] = p.c;
    j["A"] = {{"rows", p.A.row}, {"cols", p.A.col}, {"vals", p.A.val},
              {"shape", {p.A.rows, p.A.cols}}};
    j["b"] = p.b;
    j["cones"] = nlohmann::json::array();
    for (const ConeSpec& cs : p.cones)
        j["cones"].push_back({{"kind", cone_kind_name(cs.kind)}, {"dim", cs.dim}});
    return j;
}

ConicProblem conic_problem_from_json(const nlohmann::json& j) {
    ConicProblem p;
    p.c = j.at("c").get<std::vector<double>>();
    p.b = j.at("b").get<std::vector<double>>();
    const auto& ja = j.at("A");
    p.A.row = ja.at("rows").get<std::vector<int>>();
    p.A.col = ja.at("cols").get<std::vector<int>>();
    p.A.val = ja.at("vals").get<std::vector<double>>();
    p.A.rows = ja.at("shape").at(0).get<int>();
    p.A.cols = ja.at("shape").at(1).get<int>();
    for (const auto& jc : j.at("cones"))
        p.cones.push_back({cone_kind_from_name(jc.at("kind").get<std::string>()),
                           jc.at("dim").get<int>()});
    p.validate();
    return p;
}

}  // namespace bfmx
