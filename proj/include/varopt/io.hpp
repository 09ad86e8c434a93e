#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "varopt/ais.hpp"
#include "varopt/rbm.hpp"
#include "varopt/schedule.hpp"
#include "varopt/trainer.hpp"

namespace varopt::io {

nlohmann::json model_to_json(const RbmParams& params);
RbmParams model_from_json(const nlohmann::json& j);
void write_model(const std::filesystem::path& file, const RbmParams& params);
RbmParams read_model(const std::filesystem::path& file);

/// CSV with header "beta", one value per line at 17 significant digits.
void write_schedule(const std::filesystem::path& file, const Schedule& schedule);
Schedule read_schedule(const std::filesystem::path& file);

/// CSV with header "beta,g_raw,g_smoothed,dlog_g".
void write_gtable(const std::filesystem::path& file, const GTable& table);
GTable read_gtable(const std::filesystem::path& file);

nlohmann::json result_to_json(const AisResult& result);
void write_result(const std::filesystem::path& file, const AisResult& result);
/// Single column "log_w".
void write_log_weights(const std::filesystem::path& file, const AisResult& result);

/// Rows of 0/1 separated by commas or whitespace; blank lines skipped.
BinaryDataset read_dataset(const std::filesystem::path& file);

/// "%.17g"; every writer goes through this so files round-trip exactly.
std::string format_double(double x);

}  // namespace varopt::io
