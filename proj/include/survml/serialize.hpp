#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "survml/data.hpp"
#include "survml/hpo.hpp"
#include "survml/models.hpp"
#include "survml/preprocess.hpp"

namespace survml {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kStudyFormatVersion = 1;

/// Two-space indented JSON with a trailing newline.
std::string dump_json(const Json& j);
Json read_json(const std::filesystem::path& path);

/// Writes through a sibling temporary file and a rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

Json params_to_json(const ParamMap& params);
ParamMap params_from_json(const Json& j);

Json step_function_to_json(const StepFunction& f);
StepFunction step_function_from_json(const Json& j);

/// Trees are nested objects; survival leaves carry their cumulative hazard.
Json tree_to_json(const Tree& tree, const std::vector<StepFunction>* leaf_chf = nullptr);
Tree tree_from_json(const Json& j, std::vector<StepFunction>* leaf_chf = nullptr);

Json ensemble_to_json(const BoostedEnsemble& e);
BoostedEnsemble ensemble_from_json(const Json& j);

Json model_to_json(const FittedModel& model);
FittedModel model_from_json(const Json& j);
void save_model(const std::filesystem::path& path, const FittedModel& model);
FittedModel load_model(const std::filesystem::path& path);

Json study_to_json(const Study& study);
Study study_from_json(const Json& j);

Json encoder_to_json(const EncoderState& state);
EncoderState encoder_from_json(const Json& j);

Json filter_report_to_json(const FilterReport& report);

}  // namespace survml
