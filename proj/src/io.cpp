#include "sgfl/io.hpp"

#include "sgfl/objective.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace sgfl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_blob(const fs::path& file, const std::vector<double>& values) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_blob(const fs::path& file, size_t expected) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  std::vector<double> values(expected);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(expected * sizeof(double)));
  if (static_cast<size_t>(in.gcount()) != expected * sizeof(double))
    throw std::runtime_error("short read: " + file.string());
  return values;
}

json load_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  json j;
  in >> j;
  return j;
}

void dump_json(const json& j, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  out << j.dump(2) << "\n";
}

}  // namespace

void write_dataset(const Dataset& data, const fs::path& dir) {
  data.validate();
  fs::create_directories(dir);

  json manifest = {{"T", data.T},
                   {"d", data.d},
                   {"p", data.p},
                   {"layout", "txy"},
                   {"mode", data.lifted ? "response" : "design"}};
  if (data.lifted) manifest["m"] = data.m;
  dump_json(manifest, dir / "manifest.json");

  std::vector<double> xs;
  xs.reserve(static_cast<size_t>(data.T) * data.d * data.p);
  for (int t = 0; t < data.T; ++t) {
    const Mat Xt = data.design(t);
    for (int i = 0; i < data.d; ++i)
      for (int j = 0; j < data.p; ++j) xs.push_back(Xt(i, j));
  }
  write_blob(dir / "X.bin", xs);

  std::vector<double> ys;
  ys.reserve(static_cast<size_t>(data.T) * data.d);
  for (int t = 0; t < data.T; ++t)
    for (int i = 0; i < data.d; ++i) ys.push_back(data.y[static_cast<size_t>(t)][i]);
  write_blob(dir / "y.bin", ys);
}

Dataset read_dataset(const fs::path& dir) {
  const json manifest = load_json(dir / "manifest.json");
  Dataset data;
  data.T = manifest.at("T").get<int>();
  data.d = manifest.at("d").get<int>();
  data.p = manifest.at("p").get<int>();
  if (manifest.at("layout").get<std::string>() != "txy")
    throw std::runtime_error("unsupported dataset layout");
  const bool response = manifest.at("mode").get<std::string>() == "response";

  const auto xs = read_blob(dir / "X.bin", static_cast<size_t>(data.T) * data.d * data.p);
  const auto ys = read_blob(dir / "y.bin", static_cast<size_t>(data.T) * data.d);

  data.y.resize(static_cast<size_t>(data.T));
  for (int t = 0; t < data.T; ++t) {
    Vec yt(data.d);
    for (int i = 0; i < data.d; ++i) yt[i] = ys[static_cast<size_t>(t) * data.d + i];
    data.y[static_cast<size_t>(t)] = std::move(yt);
  }

  auto x_entry = [&](int t, int i, int j) {
    return xs[(static_cast<size_t>(t) * data.d + static_cast<size_t>(i)) * data.p +
              static_cast<size_t>(j)];
  };

  if (response) {
    // recover the factor vectors from the lift: X_t(r, j*d+r) = x_t(j)
    data.lifted = true;
    data.m = manifest.at("m").get<int>();
    if (data.p != data.d * data.m) throw std::runtime_error("response manifest dims inconsistent");
    data.x_raw.resize(static_cast<size_t>(data.T));
    for (int t = 0; t < data.T; ++t) {
      Vec xt(data.m);
      for (int j = 0; j < data.m; ++j) xt[j] = x_entry(t, 0, j * data.d);
      data.x_raw[static_cast<size_t>(t)] = std::move(xt);
    }
  } else {
    data.X.resize(static_cast<size_t>(data.T));
    for (int t = 0; t < data.T; ++t) {
      Mat Xt(data.d, data.p);
      for (int i = 0; i < data.d; ++i)
        for (int j = 0; j < data.p; ++j) Xt(i, j) = x_entry(t, i, j);
      data.X[static_cast<size_t>(t)] = std::move(Xt);
    }
  }
  data.validate();
  return data;
}

Dataset read_response_csv(const fs::path& file, int d) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  std::string line;
  std::vector<Vec> xs, ys;
  int m = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (first && !numeric) {
      first = false;  // header row
      continue;
    }
    first = false;
    if (!numeric) throw std::runtime_error("non-numeric row in " + file.string());
    const int cols = static_cast<int>(row.size());
    if (cols < 1 + d + 1) throw std::runtime_error("too few columns in " + file.string());
    if (m < 0) m = cols - 1 - d;
    if (cols != 1 + d + m) throw std::runtime_error("ragged rows in " + file.string());
    Vec yt(d), xt(m);
    for (int i = 0; i < d; ++i) yt[i] = row[static_cast<size_t>(1 + i)];
    for (int j = 0; j < m; ++j) xt[j] = row[static_cast<size_t>(1 + d + j)];
    ys.push_back(std::move(yt));
    xs.push_back(std::move(xt));
  }
  if (xs.empty()) throw std::runtime_error("no data rows in " + file.string());
  return kronecker_lift(xs, ys, d);
}

void write_solution_csv(const Solution& sol, const fs::path& file, bool dense) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  out.precision(17);
  const int p = static_cast<int>(sol.beta.front().size());
  if (dense) {
    out << "t";
    for (int j = 0; j < p; ++j) out << ",beta_" << (j + 1);
    out << "\n";
    for (int t = 0; t < sol.seg.T; ++t) {
      out << (t + 1);
      const Vec& b = sol.block(t);
      for (int j = 0; j < p; ++j) out << "," << b[j];
      out << "\n";
    }
  } else {
    out << "chain_start,chain_end";
    for (int j = 0; j < p; ++j) out << ",beta_" << (j + 1);
    out << "\n";
    for (int k = 0; k < sol.seg.num_chains(); ++k) {
      out << (sol.seg.begin(k) + 1) << "," << sol.seg.end(k);
      const Vec& b = sol.beta[static_cast<size_t>(k)];
      for (int j = 0; j < p; ++j) out << "," << b[j];
      out << "\n";
    }
  }
}

Solution read_solution_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty file: " + file.string());
  if (header.rfind("chain_start", 0) != 0)
    throw std::runtime_error("expected chain-wise coefficient CSV: " + file.string());

  Solution sol;
  std::string line;
  int last_end = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 3) throw std::runtime_error("malformed row in " + file.string());
    const int start = static_cast<int>(row[0]);
    const int end = static_cast<int>(row[1]);
    if (start != last_end + 1) throw std::runtime_error("non-contiguous chains in " + file.string());
    sol.seg.starts.push_back(start - 1);
    Vec b(static_cast<Eigen::Index>(row.size()) - 2);
    for (size_t j = 2; j < row.size(); ++j) b[static_cast<Eigen::Index>(j - 2)] = row[j];
    sol.beta.push_back(std::move(b));
    last_end = end;
  }
  sol.seg.T = last_end;
  sol.seg.validate();
  return sol;
}

void write_segmentation_json(const Segmentation& seg, const fs::path& file) {
  json j;
  j["T"] = seg.T;
  std::vector<int> starts, cps;
  for (int s : seg.starts) starts.push_back(s + 1);
  for (int c : seg.change_points()) cps.push_back(c + 1);
  j["starts"] = starts;
  j["change_points"] = cps;
  dump_json(j, file);
}

Segmentation read_segmentation_json(const fs::path& file) {
  const json j = load_json(file);
  Segmentation seg;
  seg.T = j.at("T").get<int>();
  for (int s : j.at("starts").get<std::vector<int>>()) seg.starts.push_back(s - 1);
  seg.validate();
  return seg;
}

void write_report_json(const SolverReport& report, double objective, const fs::path& file) {
  json j;
  j["objective"] = objective;
  j["certificate_norm"] = report.certificate_norm;
  j["certified"] = report.certified;
  j["wall_time_s"] = report.wall_time_s;
  j["stage_counts"] = report.stage_counts;
  j["flags"] = report.flags;
  json trace = json::array();
  for (const TraceEntry& e : report.trace)
    trace.push_back({{"iteration", e.iteration}, {"stage", e.stage}, {"objective", e.objective}});
  j["trace"] = trace;
  dump_json(j, file);
}

void write_metrics_json(const Metrics& metrics, const fs::path& file) {
  dump_json(json{{"ncp", metrics.ncp},
                 {"hausdorff", metrics.hausdorff},
                 {"tpr", metrics.tpr},
                 {"ppv", metrics.ppv},
                 {"sparsity", metrics.sparsity},
                 {"r2", metrics.r2}},
            file);
}

Vec read_weights_file(const fs::path& file, int T) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  std::vector<double> w;
  double v;
  while (in >> v) w.push_back(v);
  if (static_cast<int>(w.size()) != T - 1)
    throw std::runtime_error("weights file must hold T-1 values");
  return Eigen::Map<Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
}

}  // namespace sgfl
