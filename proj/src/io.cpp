#include "varopt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "varopt/error.hpp"

namespace varopt::io {

namespace {

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& file, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ContractViolation(file.string() + ":" + std::to_string(line) + ": not a number: '" + s +
                            "'");
  }
}

Eigen::VectorXd to_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json model_to_json(const RbmParams& params) {
  nlohmann::json j;
  j["n_visible"] = params.n_visible();
  j["n_hidden"] = params.n_hidden();
  auto rows = nlohmann::json::array();
  for (int i = 0; i < params.n_hidden(); ++i) {
    std::vector<double> row(params.n_visible());
    for (int c = 0; c < params.n_visible(); ++c) row[c] = params.weights()(i, c);
    rows.push_back(row);
  }
  j["weights"] = rows;
  j["hidden_bias"] = std::vector<double>(params.hidden_bias().begin(), params.hidden_bias().end());
  j["visible_bias"] =
      std::vector<double>(params.visible_bias().begin(), params.visible_bias().end());
  return j;
}

RbmParams model_from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("n_visible").get<int>();
    const int m = j.at("n_hidden").get<int>();
    require(d > 0 && m > 0, "model dimensions must be positive");
    const auto& rows = j.at("weights");
    require(rows.is_array() && static_cast<int>(rows.size()) == m,
            "weights must have n_hidden rows");
    Eigen::MatrixXd w(m, d);
    for (int i = 0; i < m; ++i) {
      const auto row = rows[i].get<std::vector<double>>();
      require(static_cast<int>(row.size()) == d, "weight row " + std::to_string(i) +
                                                     " must have n_visible entries");
      for (int c = 0; c < d; ++c) w(i, c) = row[c];
    }
    Eigen::VectorXd a = to_vector(j.at("hidden_bias"));
    Eigen::VectorXd b = to_vector(j.at("visible_bias"));
    require(a.size() == m, "hidden_bias must have n_hidden entries");
    require(b.size() == d, "visible_bias must have n_visible entries");
    return RbmParams(std::move(w), std::move(a), std::move(b));
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("malformed model JSON: ") + e.what());
  }
}

void write_model(const std::filesystem::path& file, const RbmParams& params) {
  auto out = open_out(file);
  out << model_to_json(params).dump(2) << '\n';
}

RbmParams read_model(const std::filesystem::path& file) {
  auto in = open_in(file);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(file.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void write_schedule(const std::filesystem::path& file, const Schedule& schedule) {
  auto out = open_out(file);
  out << "beta\n";
  for (double b : schedule.betas()) out << format_double(b) << '\n';
}

Schedule read_schedule(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || trim(line) != "beta") {
    throw ContractViolation(file.string() + ": expected header 'beta'");
  }
  std::vector<double> betas;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string cell = trim(line);
    if (cell.empty()) continue;
    betas.push_back(parse_double(cell, file, line_no));
  }
  return Schedule(std::move(betas));
}

void write_gtable(const std::filesystem::path& file, const GTable& table) {
  auto out = open_out(file);
  out << "beta,g_raw,g_smoothed,dlog_g\n";
  for (std::size_t k = 0; k < table.grid.size(); ++k) {
    out << format_double(table.grid[k]) << ',' << format_double(table.g_raw[k]) << ','
        << format_double(table.g_smoothed[k]) << ',' << format_double(table.dlog_g[k]) << '\n';
  }
}

GTable read_gtable(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || trim(line) != "beta,g_raw,g_smoothed,dlog_g") {
    throw ContractViolation(file.string() + ": expected header 'beta,g_raw,g_smoothed,dlog_g'");
  }
  GTable t;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 4) {
      throw ContractViolation(file.string() + ":" + std::to_string(line_no) +
                              ": expected 4 columns");
    }
    t.grid.push_back(parse_double(cells[0], file, line_no));
    t.g_raw.push_back(parse_double(cells[1], file, line_no));
    t.g_smoothed.push_back(parse_double(cells[2], file, line_no));
    t.dlog_g.push_back(parse_double(cells[3], file, line_no));
  }
  t.validate();
  return t;
}

nlohmann::json result_to_json(const AisResult& result) {
  nlohmann::json j;
  j["log_z_hat"] = result.log_z_hat;
  j["ess"] = result.ess;
  j["n_runs"] = result.n_runs();
  j["k"] = result.k;
  j["log_weight_std"] = result.log_weight_std;
  auto trace = nlohmann::json::array();
  if (result.on_the_fly) {
    for (const auto& s : *result.on_the_fly) trace.push_back({{"beta", s.beta}, {"ess", s.ess}});
  }
  j["on_the_fly"] = trace;
  return j;
}

void write_result(const std::filesystem::path& file, const AisResult& result) {
  auto out = open_out(file);
  out << result_to_json(result).dump(2) << '\n';
}

void write_log_weights(const std::filesystem::path& file, const AisResult& result) {
  auto out = open_out(file);
  out << "log_w\n";
  for (double lw : result.log_weights) out << format_double(lw) << '\n';
}

BinaryDataset read_dataset(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  int line_no = 0;
  std::vector<VisibleState> rows;
  while (std::getline(in, line)) {
    ++line_no;
    for (char& c : line) {
      if (c == ',' || c == '\t' || c == ';') c = ' ';
    }
    std::istringstream ss(line);
    std::vector<int> bits;
    std::string tok;
    while (ss >> tok) {
      if (tok != "0" && tok != "1") {
        throw ContractViolation(file.string() + ":" + std::to_string(line_no) +
                                ": dataset entries must be 0 or 1, got '" + tok + "'");
      }
      bits.push_back(tok == "1" ? 1 : 0);
    }
    if (!bits.empty()) rows.emplace_back(bits);
  }
  return BinaryDataset(std::move(rows));
}

}  // namespace varopt::io
