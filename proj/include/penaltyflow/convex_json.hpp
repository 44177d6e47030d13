#ifndef PENALTYFLOW_CONVEX_JSON_HPP
#define PENALTYFLOW_CONVEX_JSON_HPP

// Declarative construction of sets, functions and penalties. Schema:
//
//   sets       {"kind":"affine","A":[[..],..],"b":[..]}
//              {"kind":"halfspace","normal":[..],"offset":b}
//              {"kind":"ball","center":[..],"radius":r}
//              {"kind":"box","lower":[..],"upper":[..]}
//              {"kind":"whole","dimension":n}
//   functions  {"kind":"quadratic","A":[[..],..],"b":[..],"c":c?}
//              {"kind":"shifted_norm","center":[..]}
//              {"kind":"dist2","set":<set>}
//              {"kind":"logsumexp","dimension":n}
//              {"kind":"huber_hinge","normal":[..],"offset":b,"delta":d}
//              {"kind":"zero","dimension":n}
//   penalties  dist2, huber_hinge or zero (the zero set is implied).
//
// Unknown keys are rejected.

#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>

#include "penaltyflow/convex.hpp"

namespace penaltyflow {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_keys(const Json& j, const std::string& where, std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    if (!j.contains(k)) throw ConfigError(where + ": missing field '" + std::string(k) + "'");
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ConfigError(where + ": unknown field '" + item.key() + "'");
  }
}

inline double json_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

inline Vector json_vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = json_number(j[i], where);
  return v;
}

inline Matrix json_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array of rows");
  const Vector first = json_vector(j[0], where);
  Matrix m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = json_vector(j[i], where);
    if (row.size() != first.size()) throw ConfigError(where + ": ragged matrix");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

inline Eigen::Index json_dimension(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) throw ConfigError(where + ": expected a positive integer");
  return static_cast<Eigen::Index>(j.get<long long>());
}

inline std::string json_kind(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError(where + ": missing string field 'kind'");
  }
  return j["kind"].get<std::string>();
}

// Re-throws construction errors (rank, PSD, ...) as ConfigError.
template <class F>
auto build(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace detail

inline ClosedConvexSet set_from_json(const Json& j, const std::string& where = "set") {
  using namespace detail;
  const std::string kind = json_kind(j, where);
  return build(where, [&]() -> ClosedConvexSet {
    if (kind == "affine") {
      require_keys(j, where, {"kind", "A", "b"});
      return affine_subspace(json_matrix(j["A"], where + ".A"), json_vector(j["b"], where + ".b"));
    }
    if (kind == "halfspace") {
      require_keys(j, where, {"kind", "normal", "offset"});
      return halfspace(json_vector(j["normal"], where + ".normal"), json_number(j["offset"], where + ".offset"));
    }
    if (kind == "ball") {
      require_keys(j, where, {"kind", "center", "radius"});
      return ball(json_vector(j["center"], where + ".center"), json_number(j["radius"], where + ".radius"));
    }
    if (kind == "box") {
      require_keys(j, where, {"kind", "lower", "upper"});
      return box(json_vector(j["lower"], where + ".lower"), json_vector(j["upper"], where + ".upper"));
    }
    if (kind == "whole") {
      require_keys(j, where, {"kind", "dimension"});
      return whole_space(json_dimension(j["dimension"], where + ".dimension"));
    }
    throw ConfigError(where + ": unknown set kind '" + kind + "'");
  });
}

inline SmoothConvexFunction function_from_json(const Json& j, const std::string& where = "function") {
  using namespace detail;
  const std::string kind = json_kind(j, where);
  return build(where, [&]() -> SmoothConvexFunction {
    if (kind == "quadratic") {
      require_keys(j, where, {"kind", "A", "b"}, {"c"});
      const double c0 = j.contains("c") ? json_number(j["c"], where + ".c") : 0.0;
      return quadratic(json_matrix(j["A"], where + ".A"), json_vector(j["b"], where + ".b"), c0);
    }
    if (kind == "shifted_norm") {
      require_keys(j, where, {"kind", "center"});
      return shifted_norm(json_vector(j["center"], where + ".center"));
    }
    if (kind == "dist2") {
      require_keys(j, where, {"kind", "set"});
      return dist2(set_from_json(j["set"], where + ".set"));
    }
    if (kind == "logsumexp") {
      require_keys(j, where, {"kind", "dimension"});
      return log_sum_exp(json_dimension(j["dimension"], where + ".dimension"));
    }
    if (kind == "huber_hinge") {
      require_keys(j, where, {"kind", "normal", "offset", "delta"});
      return huber_hinge(json_vector(j["normal"], where + ".normal"), json_number(j["offset"], where + ".offset"),
                         json_number(j["delta"], where + ".delta"));
    }
    if (kind == "zero") {
      require_keys(j, where, {"kind", "dimension"});
      return zero_function(json_dimension(j["dimension"], where + ".dimension"));
    }
    throw ConfigError(where + ": unknown function kind '" + kind + "'");
  });
}

inline PenaltyFunction penalty_from_json(const Json& j, const std::string& where = "penalty") {
  using namespace detail;
  const std::string kind = json_kind(j, where);
  return build(where, [&]() -> PenaltyFunction {
    if (kind == "dist2") {
      require_keys(j, where, {"kind", "set"});
      return dist2_penalty(set_from_json(j["set"], where + ".set"));
    }
    if (kind == "huber_hinge") {
      require_keys(j, where, {"kind", "normal", "offset", "delta"});
      return huber_hinge_penalty(json_vector(j["normal"], where + ".normal"),
                                 json_number(j["offset"], where + ".offset"), json_number(j["delta"], where + ".delta"));
    }
    if (kind == "zero") {
      require_keys(j, where, {"kind", "dimension"});
      return zero_penalty(json_dimension(j["dimension"], where + ".dimension"));
    }
    throw ConfigError(where + ": '" + kind + "' is not a supported penalty (use dist2, huber_hinge or zero)");
  });
}

}  // namespace penaltyflow

#endif  // PENALTYFLOW_CONVEX_JSON_HPP
