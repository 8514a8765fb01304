#pragma once

#include "flowlab/estimators.hpp"
#include "flowlab/experiments.hpp"
#include "flowlab/interpolation.hpp"
#include "flowlab/paths.hpp"
#include "flowlab/regularity.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace flowlab {

using Json = nlohmann::ordered_json;

Json to_json(const ConditionReport& r);
Json to_json(const DecompositionReport<double>& r);
Json to_json(const VarianceReport& r);
Json to_json(const MomentEstimate& e);
Json to_json(const GradientEstimate& e);
Json to_json(const HessianEstimate& e);
Json to_json(const SemigroupResult& r);
Json to_json(const InvariantResult& r);
Json to_json(const ExperimentResult& r);

// label,parameter,measured,target,stderr
void write_csv(std::ostream& os, const ExperimentResult& r);

// t,x_1..x_d then J_11,J_12,..,J_dd (row-major) when tangents are present.
void write_path_csv(std::ostream& os, const BrownianGrid& grid, const VariationalPaths<double>& p);

void write_text(const std::string& path, const std::string& text);

}  // namespace flowlab
