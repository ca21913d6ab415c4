// SPDX-License-Identifier: Apache-2.0

#include "moelever/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moelever/errors.hpp"

namespace moelever {

using nlohmann::json;

LawBundle default_law_bundle() {
  LawBundle b;
  b.el_coefficients = default_el_coefficients();
  b.lr_law = default_lr_law();
  b.batch_law = default_batch_law();
  b.alloc_dense_M = default_alloc_M(ModelFamily::dense);
  b.alloc_dense_D = default_alloc_D(ModelFamily::dense);
  b.alloc_moe_M = default_alloc_M(ModelFamily::moe);
  b.alloc_moe_D = default_alloc_D(ModelFamily::moe);
  b.provenance = "built-in defaults";
  return b;
}

namespace {

json power_law_to_json(const PowerLaw& law) { return json{{"k", law.k}, {"p", law.p}}; }

PowerLaw power_law_from_json(const json& j) {
  return {j.at("k").get<double>(), j.at("p").get<double>()};
}

json coeffs_to_json(const ELCoefficients& c) {
  return json{{"a", c.a},
              {"d", c.d},
              {"gamma", c.gamma},
              {"beta", c.beta},
              {"A_start", c.A_start},
              {"A_max", c.A_max},
              {"log_base_C", c.log_base_C},
              {"log_base_G", c.log_base_G}};
}

ELCoefficients coeffs_from_json(const json& j) {
  ELCoefficients c;
  c.a = j.at("a").get<double>();
  c.d = j.at("d").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.beta = j.at("beta").get<double>();
  c.A_start = j.at("A_start").get<double>();
  c.A_max = j.at("A_max").get<double>();
  c.log_base_C = j.value("log_base_C", 10.0);
  c.log_base_G = j.value("log_base_G", 2.0);
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string el_coefficients_to_json_text(const ELCoefficients& c, bool pretty) {
  return pretty ? coeffs_to_json(c).dump(2) : coeffs_to_json(c).dump();
}

ELCoefficients el_coefficients_from_json_text(const std::string& text) {
  try {
    return coeffs_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("coefficient JSON error: ") + e.what());
  }
}

std::string law_bundle_to_json_text(const LawBundle& b, bool pretty) {
  json j{{"el_coefficients", coeffs_to_json(b.el_coefficients)},
         {"hyper_laws", json{{"lr", power_law_to_json(b.lr_law)},
                             {"batch", power_law_to_json(b.batch_law)}}},
         {"allocation_laws", json{{"dense_M", power_law_to_json(b.alloc_dense_M)},
                                  {"dense_D", power_law_to_json(b.alloc_dense_D)},
                                  {"moe_M", power_law_to_json(b.alloc_moe_M)},
                                  {"moe_D", power_law_to_json(b.alloc_moe_D)}}},
         {"provenance", b.provenance}};
  return pretty ? j.dump(2) : j.dump();
}

LawBundle law_bundle_from_json_text(const std::string& text) {
  try {
    const json j = json::parse(text);
    LawBundle b;
    b.el_coefficients = coeffs_from_json(j.at("el_coefficients"));
    b.lr_law = power_law_from_json(j.at("hyper_laws").at("lr"));
    b.batch_law = power_law_from_json(j.at("hyper_laws").at("batch"));
    b.alloc_dense_M = power_law_from_json(j.at("allocation_laws").at("dense_M"));
    b.alloc_dense_D = power_law_from_json(j.at("allocation_laws").at("dense_D"));
    b.alloc_moe_M = power_law_from_json(j.at("allocation_laws").at("moe_M"));
    b.alloc_moe_D = power_law_from_json(j.at("allocation_laws").at("moe_D"));
    b.provenance = j.value("provenance", "");
    return b;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("law bundle JSON error: ") + e.what());
  }
}

void write_law_bundle(const LawBundle& bundle, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << law_bundle_to_json_text(bundle, true) << '\n';
}

LawBundle load_law_bundle(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("law bundle JSON error: ") + e.what());
  }
  if (j.is_object() && j.contains("el_coefficients")) return law_bundle_from_json_text(text);
  // bare coefficient object: defaults for everything else
  LawBundle b = default_law_bundle();
  b.el_coefficients = el_coefficients_from_json_text(text);
  b.provenance = "coefficients from " + path;
  return b;
}

namespace {

constexpr const char* kRunHeader = "arch_id,M,D,C,loss,lr,batch_tokens,A,G,S";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// nullopt on failure; message describes which column
bool parse_run_row(const std::vector<std::string>& cells, RunRecord& r, std::string& message) {
  static const char* names[] = {"arch_id", "M", "D", "C", "loss", "lr", "batch_tokens",
                                "A", "G", "S"};
  if (cells.size() != 10) {
    message = "expected 10 columns, got " + std::to_string(cells.size());
    return false;
  }
  r.arch_id = cells[0];
  double* required[] = {&r.M, &r.D, &r.C, &r.loss, nullptr, nullptr, &r.A, &r.G, &r.S};
  for (int i = 1; i < 10; ++i) {
    double v = 0;
    if (i == 5 || i == 6) {  // optional lr, batch_tokens
      if (cells[i].empty()) continue;
      if (!parse_double(cells[i], v)) {
        message = std::string("malformed number in column '") + names[i] + "'";
        return false;
      }
      if (i == 5) r.lr = v;
      else r.batch_tokens = v;
      continue;
    }
    if (!parse_double(cells[i], v)) {
      message = std::string("malformed number in column '") + names[i] + "'";
      return false;
    }
    *required[i - 1] = v;
  }
  if (!(r.loss > 0)) {
    message = "loss must be positive";
    return false;
  }
  if (std::abs(r.C - r.M * r.D) > 1e-6 * std::abs(r.C)) {
    message = "inconsistent record: C != M*D (1e-6 relative)";
    return false;
  }
  return true;
}

}  // namespace

LoadResult parse_runs_csv(const std::string& text) {
  LoadResult result;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("run CSV: empty input, expected header " + std::string(kRunHeader));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRunHeader)
    throw ValidationError("run CSV: header must be exactly '" + std::string(kRunHeader) + "'");

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    RunRecord r;
    std::string message;
    if (parse_run_row(split_csv_line(line), r, message)) {
      result.records.push_back(std::move(r));
    } else {
      result.errors.push_back({line_no, message});
    }
  }
  return result;
}

LoadResult parse_runs_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run JSON parse error: ") + e.what());
  }
  if (!j.is_array()) throw ValidationError("run JSON must be an array of records");

  LoadResult result;
  int index = 0;
  for (const auto& item : j) {
    ++index;
    try {
      RunRecord r;
      r.arch_id = item.value("arch_id", "");
      r.M = item.at("M").get<double>();
      r.D = item.at("D").get<double>();
      r.C = item.at("C").get<double>();
      r.loss = item.at("loss").get<double>();
      if (item.contains("lr") && !item.at("lr").is_null()) r.lr = item.at("lr").get<double>();
      if (item.contains("batch_tokens") && !item.at("batch_tokens").is_null())
        r.batch_tokens = item.at("batch_tokens").get<double>();
      r.A = item.at("A").get<double>();
      r.G = item.at("G").get<double>();
      r.S = item.at("S").get<double>();
      if (!(r.loss > 0)) {
        result.errors.push_back({index, "loss must be positive"});
        continue;
      }
      if (std::abs(r.C - r.M * r.D) > 1e-6 * std::abs(r.C)) {
        result.errors.push_back({index, "inconsistent record: C != M*D (1e-6 relative)"});
        continue;
      }
      result.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      result.errors.push_back({index, e.what()});
    }
  }
  return result;
}

LoadResult load_runs(const std::string& path, RunFormat format) {
  const std::string text = read_file(path);
  return format == RunFormat::csv ? parse_runs_csv(text) : parse_runs_json(text);
}

std::string runs_to_csv(const std::vector<RunRecord>& runs) {
  std::ostringstream out;
  out << kRunHeader << '\n';
  for (const auto& r : runs) {
    out << r.arch_id << ',' << format_double(r.M) << ',' << format_double(r.D) << ','
        << format_double(r.C) << ',' << format_double(r.loss) << ','
        << (r.lr ? format_double(*r.lr) : "") << ','
        << (r.batch_tokens ? format_double(*r.batch_tokens) : "") << ','
        << format_double(r.A) << ',' << format_double(r.G) << ',' << format_double(r.S) << '\n';
  }
  return out.str();
}

std::vector<ELObservation> parse_el_observations_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("EL CSV: empty input, expected header A,G,C,EL");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "A,G,C,EL")
    throw ValidationError("EL CSV: header must be exactly 'A,G,C,EL'");

  std::vector<ELObservation> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    ELObservation obs;
    double* fields[] = {&obs.A, &obs.G, &obs.C_moe, &obs.EL};
    if (cells.size() != 4)
      throw ValidationError("EL CSV line " + std::to_string(line_no) + ": expected 4 columns");
    for (int i = 0; i < 4; ++i) {
      if (!parse_double(cells[i], *fields[i]))
        throw ValidationError("EL CSV line " + std::to_string(line_no) + ": malformed number");
    }
    out.push_back(obs);
  }
  return out;
}

std::vector<ELObservation> load_el_observations(const std::string& path) {
  return parse_el_observations_csv(read_file(path));
}

std::string el_observations_to_csv(const std::vector<ELObservation>& observations) {
  std::ostringstream out;
  out << "A,G,C,EL\n";
  for (const auto& o : observations)
    out << format_double(o.A) << ',' << format_double(o.G) << ',' << format_double(o.C_moe)
        << ',' << format_double(o.EL) << '\n';
  return out.str();
}

}  // namespace moelever
