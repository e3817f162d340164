#include "cfseq/artifacts.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cfseq/error.hpp"

namespace cfseq {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("csv column '" + std::string(name) + "' not found");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(std::string_view text, const fs::path& path, std::size_t line) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw IoError(path.string() + ":" + std::to_string(line) + ": cannot parse number '" +
                  std::string(text) + "'");
  }
  return value;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string> numbered(std::string_view prefix, std::size_t count) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= count; ++i) names.push_back(std::string(prefix) + "_" + std::to_string(i));
  return names;
}

StateVector row_state(const std::vector<double>& row, std::size_t first, std::size_t dim) {
  return StateVector(std::span<const double>(row.data() + first, dim));
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header");
  table.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != table.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(table.header.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  std::string buffer;
  for (const auto& row : table.rows) {
    buffer.clear();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) buffer += ',';
      buffer += format_double(row[i]);
    }
    buffer += '\n';
    out << buffer;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_states_csv(const fs::path& path, const std::vector<StateVector>& states,
                      std::string_view prefix) {
  CsvTable table;
  const std::size_t d = states.empty() ? 0 : states.front().size();
  table.header = {"t"};
  for (auto& n : numbered(prefix, d)) table.header.push_back(std::move(n));
  for (std::size_t t = 0; t < states.size(); ++t) {
    std::vector<double> row{static_cast<double>(t)};
    for (double v : states[t].span()) row.push_back(v);
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

std::vector<StateVector> read_states_csv(const fs::path& path, std::string_view prefix) {
  const auto table = read_csv(path);
  const std::size_t first = table.column(std::string(prefix) + "_1");
  const std::size_t d = table.header.size() - first;
  std::vector<StateVector> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(row_state(row, first, d));
  return out;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
  write_states_csv(path, trajectory.states, "x");
}

Trajectory read_trajectory_csv(const fs::path& path, StepSize delta) {
  return Trajectory{read_states_csv(path, "x"), delta};
}

void write_observations_csv(const fs::path& path, const ObservationSequence& obs) {
  write_states_csv(path, obs.observations, "y");
}

ObservationSequence read_observations_csv(const fs::path& path) {
  return ObservationSequence{read_states_csv(path, "y")};
}

void write_noise_posterior_csv(const fs::path& path, const NoisePosterior& noise) {
  noise.validate();
  const std::size_t d = noise.dimension();
  CsvTable table;
  table.header = {"t"};
  for (auto& n : numbered("mu", d)) table.header.push_back(std::move(n));
  for (auto& n : numbered("sigma", d)) table.header.push_back(std::move(n));
  for (std::size_t t = 0; t < noise.horizon(); ++t) {
    std::vector<double> row{static_cast<double>(t + 1)};
    for (double v : noise.mu[t].span()) row.push_back(v);
    for (double v : noise.sigma[t].span()) row.push_back(v);
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

NoisePosterior read_noise_posterior_csv(const fs::path& path) {
  const auto table = read_csv(path);
  const std::size_t mu0 = table.column("mu_1");
  const std::size_t sigma0 = table.column("sigma_1");
  const std::size_t d = sigma0 - mu0;
  NoisePosterior noise;
  for (const auto& row : table.rows) {
    noise.mu.push_back(row_state(row, mu0, d));
    noise.sigma.push_back(row_state(row, sigma0, d));
  }
  noise.validate();
  return noise;
}

void write_ensemble_csv(const fs::path& path, const CfTrajectorySet& ensemble) {
  CsvTable table;
  const std::size_t d = ensemble.trajectories.empty() ? 0 : ensemble.trajectories.front().dimension();
  table.header = {"t", "traj_id"};
  for (auto& n : numbered("x", d)) table.header.push_back(std::move(n));
  // Rows ordered by t, then trajectory, so a plotting tool can stream by time.
  std::size_t longest = 0;
  for (const auto& traj : ensemble.trajectories) longest = std::max(longest, traj.states.size());
  for (std::size_t t = 0; t < longest; ++t) {
    for (std::size_t i = 0; i < ensemble.trajectories.size(); ++i) {
      const auto& states = ensemble.trajectories[i].states;
      if (t >= states.size()) continue;
      std::vector<double> row{static_cast<double>(t), static_cast<double>(i)};
      for (double v : states[t].span()) row.push_back(v);
      table.rows.push_back(std::move(row));
    }
  }
  write_csv(path, table);
}

std::vector<Trajectory> read_ensemble_csv(const fs::path& path, StepSize delta) {
  const auto table = read_csv(path);
  const std::size_t t_col = table.column("t");
  const std::size_t id_col = table.column("traj_id");
  const std::size_t first = table.column("x_1");
  const std::size_t d = table.header.size() - first;
  std::vector<Trajectory> out;
  for (const auto& row : table.rows) {
    const auto id = static_cast<std::size_t>(row[id_col]);
    const auto t = static_cast<std::size_t>(row[t_col]);
    if (id >= out.size()) out.resize(id + 1, Trajectory{{}, delta});
    auto& states = out[id].states;
    if (t != states.size()) throw IoError(path.string() + ": ensemble rows out of order");
    states.push_back(row_state(row, first, d));
  }
  return out;
}

void write_theta_table_csv(const fs::path& path, const std::vector<ParameterVector>& thetas,
                           const std::vector<std::string>& names) {
  CsvTable table;
  table.header = {"traj_id"};
  table.header.insert(table.header.end(), names.begin(), names.end());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    std::vector<double> row{static_cast<double>(i)};
    for (double v : thetas[i].span()) row.push_back(v);
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

void write_rmse_csv(const fs::path& path, const RmseSeries& raw, const RmseSeries* smoothed) {
  if (smoothed && smoothed->values.size() != raw.values.size()) {
    throw DimensionError("smoothed rmse length differs from raw");
  }
  CsvTable table;
  table.header = {"t", "rmse"};
  if (smoothed) table.header.emplace_back("rmse_smoothed");
  for (std::size_t t = 0; t < raw.values.size(); ++t) {
    std::vector<double> row{static_cast<double>(t), raw.values[t]};
    if (smoothed) row.push_back(smoothed->values[t]);
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

RmseSeries read_rmse_csv(const fs::path& path, std::string_view column) {
  const auto table = read_csv(path);
  const std::size_t c = table.column(column);
  RmseSeries out;
  for (const auto& row : table.rows) out.values.push_back(row[c]);
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "history files are written in native little-endian order");

constexpr char kMagic[8] = {'C', 'F', 'S', 'Q', 'H', 'I', 'S', '1'};

class BinaryWriter {
 public:
  explicit BinaryWriter(const fs::path& path) : path_(path), out_(open_out(path, std::ios::binary)) {}
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  template <class T>
  void array(const std::vector<T>& values) {
    raw(values.data(), values.size() * sizeof(T));
  }
  void raw(const void* data, std::size_t bytes) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    raw(&v, sizeof v);
    return v;
  }
  template <class T>
  void array(std::vector<T>& values, std::size_t count) {
    values.resize(count);
    raw(values.data(), count * sizeof(T));
  }
  void raw(void* data, std::size_t bytes) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
    if (!in_) throw IoError(path_.string() + ": truncated history file");
  }

 private:
  fs::path path_;
  std::ifstream in_;
};

}  // namespace

void write_history(const fs::path& path, const FilterHistory& h, const SmoothedWeights* smoothed) {
  h.validate();
  BinaryWriter w(path);
  w.raw(kMagic, sizeof kMagic);
  for (std::uint64_t v : {h.steps, h.outer, h.inner, h.dim, h.params}) w.u64(v);
  w.array(h.theta);
  w.array(h.states);
  w.array(h.inner_weights);
  w.array(h.outer_weights);
  w.array(h.parent_outer);
  w.array(h.parent_inner);
  const auto& d = h.diagnostics;
  for (std::uint64_t v : {d.nonfinite_particles, d.inner_degeneracies, d.outer_degeneracies,
                          d.smoother_fallbacks}) {
    w.u64(v);
  }
  w.u64(smoothed ? 1 : 0);
  if (smoothed) {
    if (smoothed->steps != h.steps || smoothed->outer != h.outer || smoothed->inner != h.inner) {
      throw DimensionError("smoothed weights do not match the filter history");
    }
    w.array(smoothed->w_tilde);
    w.array(smoothed->v_tilde);
    w.array(smoothed->lineage);
    w.u64(smoothed->fallbacks);
  }
}

StoredHistory read_history(const fs::path& path) {
  BinaryReader r(path);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError(path.string() + ": not a cfseq history file");
  }
  const std::size_t steps = r.u64(), outer = r.u64(), inner = r.u64(), dim = r.u64(),
                    params = r.u64();
  if (steps == 0 || outer == 0 || inner == 0 || dim == 0 || dim > kMaxStateDim ||
      steps * outer * inner > (std::size_t{1} << 36)) {
    throw IoError(path.string() + ": implausible history shape");
  }
  StoredHistory stored;
  FilterHistory& h = stored.history;
  h.steps = steps;
  h.outer = outer;
  h.inner = inner;
  h.dim = dim;
  h.params = params;
  r.array(h.theta, steps * outer * params);
  r.array(h.states, steps * outer * inner * dim);
  r.array(h.inner_weights, steps * outer * inner);
  r.array(h.outer_weights, steps * outer);
  r.array(h.parent_outer, steps * outer);
  r.array(h.parent_inner, steps * outer * inner);
  h.diagnostics.nonfinite_particles = r.u64();
  h.diagnostics.inner_degeneracies = r.u64();
  h.diagnostics.outer_degeneracies = r.u64();
  h.diagnostics.smoother_fallbacks = r.u64();
  try {
    h.validate();
  } catch (const DimensionError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (r.u64() != 0) {
    SmoothedWeights s;
    s.steps = steps;
    s.outer = outer;
    s.inner = inner;
    r.array(s.w_tilde, steps * outer * inner);
    r.array(s.v_tilde, steps * outer);
    r.array(s.lineage, steps * outer);
    s.fallbacks = r.u64();
    stored.smoothed = std::move(s);
  }
  return stored;
}

}  // namespace cfseq
