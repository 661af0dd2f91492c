#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "coneglm/program.hpp"

namespace coneglm {

namespace detail {

inline nlohmann::json bound_to_json(double b) {
  if (std::isinf(b)) return nullptr;  // JSON has no infinities
  return b;
}

inline double bound_from_json(const nlohmann::json& j, double inf_value) {
  return j.is_null() ? inf_value : j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const ConicProgram& p) {
  nlohmann::json j;
  j["num_vars"] = p.num_vars;
  nlohmann::json obj;
  obj["indices"] = nlohmann::json::array();
  obj["values"] = nlohmann::json::array();
  for (Index i = 0; i < p.objective.size(); ++i) {
    if (p.objective[i] != 0.0) {
      obj["indices"].push_back(i);
      obj["values"].push_back(p.objective[i]);
    }
  }
  j["objective"] = std::move(obj);
  j["blocks"] = nlohmann::json::array();
  for (const auto& blk : p.blocks) {
    nlohmann::json b;
    b["rows"] = blk.cone.dim;
    b["cols"] = p.num_vars;
    b["entries"] = nlohmann::json::array();
    for (int k = 0; k < blk.A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(blk.A, k); it; ++it)
        b["entries"].push_back({it.row(), it.col(), it.value()});
    b["offset"] = std::vector<double>(blk.b.data(), blk.b.data() + blk.b.size());
    b["cone"] = {{"type", cone_kind_name(blk.cone.kind)}, {"dim", blk.cone.dim}};
    j["blocks"].push_back(std::move(b));
  }
  j["bounds"] = nlohmann::json::array();
  for (Index i = 0; i < p.num_vars; ++i)
    j["bounds"].push_back({detail::bound_to_json(p.lower[i]),
                           detail::bound_to_json(p.upper[i])});
  j["binaries"] = p.binaries;
  j["names"] = p.var_names;
  return j;
}

inline ConicProgram program_from_json(const nlohmann::json& j) {
  ConicProgram p;
  p.num_vars = j.at("num_vars").get<Index>();
  p.objective = Vector::Zero(p.num_vars);
  const auto& obj = j.at("objective");
  const auto& idx = obj.at("indices");
  const auto& val = obj.at("values");
  if (idx.size() != val.size())
    throw InputError("program JSON: objective indices/values size mismatch");
  for (size_t k = 0; k < idx.size(); ++k)
    p.objective[idx[k].get<Index>()] = val[k].get<double>();
  for (const auto& b : j.at("blocks")) {
    const auto& cj = b.at("cone");
    const std::string type = cj.at("type").get<std::string>();
    const Index dim = cj.at("dim").get<Index>();
    Cone cone = [&] {
      if (type == "zero") return Cone::Zero(dim);
      if (type == "nonnegative") return Cone::Nonnegative(dim);
      if (type == "second_order") return Cone::SecondOrder(dim);
      if (type == "exponential_primal") return Cone::ExponentialPrimal();
      throw InputError("program JSON: unknown cone type '" + type + "'");
    }();
    std::vector<Triplet> tr;
    for (const auto& e : b.at("entries"))
      tr.emplace_back(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>());
    SparseMatrix A(dim, p.num_vars);
    A.setFromTriplets(tr.begin(), tr.end());
    const auto off = b.at("offset").get<std::vector<double>>();
    if (static_cast<Index>(off.size()) != dim)
      throw InputError("program JSON: offset length != cone dim");
    Vector bv = Eigen::Map<const Vector>(off.data(), dim);
    p.blocks.push_back(ConeBlock{std::move(A), std::move(bv), cone});
  }
  p.lower = Vector::Constant(p.num_vars, -kInf);
  p.upper = Vector::Constant(p.num_vars, kInf);
  const auto& bounds = j.at("bounds");
  if (static_cast<Index>(bounds.size()) != p.num_vars)
    throw InputError("program JSON: bounds length != num_vars");
  for (Index i = 0; i < p.num_vars; ++i) {
    p.lower[i] = detail::bound_from_json(bounds[i][0], -kInf);
    p.upper[i] = detail::bound_from_json(bounds[i][1], kInf);
  }
  p.binaries = j.at("binaries").get<std::vector<Index>>();
  p.var_names = j.at("names").get<std::vector<std::string>>();
  return p;
}

inline void save_program(const ConicProgram& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << to_json(p).dump(1) << "\n";
}

inline ConicProgram load_program(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return program_from_json(j);
}

}  // namespace coneglm
