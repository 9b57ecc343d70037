#pragma once

#include <string>

#include "json.hpp"

#include "hsmm/diagnostics.hpp"
#include "hsmm/ingest.hpp"
#include "hsmm/sampler.hpp"
#include "hsmm/simulate.hpp"

namespace hsmm {

using nlohmann::json;

// Draw traces round-trip through CSV bit-exactly (%.17g columns).
void write_draws_csv(const std::string& path, const PosteriorDraws& draws);
PosteriorDraws read_draws_csv(const std::string& path);

void write_states_csv(const std::string& path, const Segmentation& seg);
std::vector<int> read_states_csv(const std::string& path);
void write_segments_csv(const std::string& path, const Segmentation& seg);

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
json summary_to_json(const std::vector<SummaryRow>& rows);

void write_coverage_csv(const std::string& path, const std::vector<CoverageRow>& rows);
json coverage_to_json(const std::vector<CoverageRow>& rows);

json params_to_json(const ModelParams& params);
ModelParams params_from_json(const json& obj, const std::string& path);
json design_to_json(const DesignSpec& spec);
json segmentation_to_json(const Segmentation& seg);

void write_json_file(const std::string& path, const json& obj);
json read_json_file(const std::string& path);

// Posterior-mean parameters pooled over one or more draw files; simplex rows
// are renormalized and the diagonal pinned to zero.
ModelParams posterior_mean_params(const std::vector<PosteriorDraws>& chains);

}  // namespace hsmm
