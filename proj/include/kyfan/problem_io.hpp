#pragma once

#include "kyfan/tilt.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kyfan::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Malformed input; `pointer` is the JSON pointer of the offending field.
struct SchemaError : Error {
  SchemaError(std::string pointer_, const std::string& what)
      : Error(pointer_ + ": " + what), pointer(std::move(pointer_)) {}
  std::string pointer;
};

struct Problem {
  ProblemSpec<double> spec;
  Tolerances tols;
  int rotation_samples = 0;
  std::uint64_t seed = 0;
};

struct ToleranceField {
  const char* name;
  double Tolerances::*member;
  const char* meaning;
};

const std::vector<ToleranceField>& tolerance_fields();
void set_tolerance(Tolerances& tols, const std::string& name, double value);
ordered_json tolerances_to_json(const Tolerances& tols);

// Matrices are {"rows", "cols", "data"} with row-major data, or an array of rows.
MatrixXd parse_matrix(const json& j, const std::string& pointer);
ordered_json matrix_to_json(const MatrixXd& a);

Problem parse_problem(const json& j);
json read_json_file(const std::string& path);
Problem load_problem(const std::string& path);

}  // namespace kyfan::io
