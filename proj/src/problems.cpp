#include "nco/problems.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nco {

int instance_size(const Instance& inst) {
  return std::visit([](const auto& p) { return p.size(); }, inst);
}

std::vector<std::array<double, 2>> instance_rows(const Instance& inst) {
  if (const auto* tsp = std::get_if<TspInstance>(&inst)) return tsp->points;
  const auto& ks = std::get<KnapsackInstance>(inst);
  std::vector<std::array<double, 2>> rows(ks.weights.size());
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = {ks.weights[i], ks.values[i]};
  return rows;
}

namespace {
double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}
}  // namespace

double tour_length(const TspInstance& inst, const std::vector<int>& tour) {
  int n = inst.size();
  if (static_cast<int>(tour.size()) != n) throw DataError("tour_length: tour size != instance size");
  std::vector<std::uint8_t> seen(static_cast<size_t>(n), 0);
  for (int c : tour) {
    if (c < 0 || c >= n || seen[static_cast<size_t>(c)]) throw DataError("tour_length: not a permutation");
    seen[static_cast<size_t>(c)] = 1;
  }
  double len = 0.0;
  for (int i = 0; i < n; ++i)
    len += dist(inst.points[static_cast<size_t>(tour[static_cast<size_t>(i)])],
                inst.points[static_cast<size_t>(tour[static_cast<size_t>((i + 1) % n)])]);
  return len;
}

double knapsack_value(const KnapsackInstance& inst, const std::vector<int>& item_set) {
  int n = inst.size();
  std::vector<std::uint8_t> seen(static_cast<size_t>(n), 0);
  double w = 0.0, v = 0.0;
  for (int i : item_set) {
    if (i < 0 || i >= n || seen[static_cast<size_t>(i)]) throw DataError("knapsack_value: bad item set");
    seen[static_cast<size_t>(i)] = 1;
    w += inst.weights[static_cast<size_t>(i)];
    v += inst.values[static_cast<size_t>(i)];
  }
  if (w > inst.capacity) throw DataError("knapsack_value: total weight exceeds capacity");
  return v;
}

std::vector<TspInstance> generate_tsp(int n, int count, std::uint64_t seed) {
  if (n < 2) throw DataError("generate_tsp: n must be >= 2");
  Rng rng(seed);
  std::vector<TspInstance> out(static_cast<size_t>(count));
  for (auto& inst : out) {
    inst.points.resize(static_cast<size_t>(n));
    for (auto& p : inst.points) {
      p[0] = rng.uniform();
      p[1] = rng.uniform();
    }
  }
  return out;
}

double default_knapsack_capacity(int n) {
  if (n == 50) return 12.5;
  if (n == 100 || n == 200) return 25.0;
  return static_cast<double>(n) / 4.0;
}

std::vector<KnapsackInstance> generate_knapsack(int n, int count, std::uint64_t seed, double capacity) {
  if (n < 1) throw DataError("generate_knapsack: n must be >= 1");
  double cap = capacity > 0.0 ? capacity : default_knapsack_capacity(n);
  Rng rng(seed);
  std::vector<KnapsackInstance> out(static_cast<size_t>(count));
  for (auto& inst : out) {
    inst.capacity = cap;
    inst.weights.resize(static_cast<size_t>(n));
    inst.values.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      inst.weights[static_cast<size_t>(i)] = rng.uniform();
      inst.values[static_cast<size_t>(i)] = rng.uniform();
    }
  }
  return out;
}

DecodeMask knapsack_decode_mask(const KnapsackInstance& inst, const std::vector<int>& selected) {
  int n = inst.size();
  DecodeMask dm;
  dm.mask.assign(static_cast<size_t>(n), 0);
  double used = 0.0;
  for (int i : selected) {
    dm.mask[static_cast<size_t>(i)] = 1;
    used += inst.weights[static_cast<size_t>(i)];
  }
  double remaining = inst.capacity - used;
  dm.done = true;
  for (int i = 0; i < n; ++i) {
    if (dm.mask[static_cast<size_t>(i)]) continue;
    if (inst.weights[static_cast<size_t>(i)] > remaining) {
      dm.mask[static_cast<size_t>(i)] = 1;
    } else {
      dm.done = false;
    }
  }
  return dm;
}

namespace {
std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
  std::ostringstream os;
  os << ds.problem << " n=" << ds.n << " count=" << ds.instances.size() << " seed=" << ds.seed;
  if (ds.problem == "knapsack") os << " capacity=" << fmt17(ds.capacity);
  os << "\n";
  for (const auto& inst : ds.instances) {
    if (const auto* tsp = std::get_if<TspInstance>(&inst)) {
      for (size_t i = 0; i < tsp->points.size(); ++i) {
        if (i) os << ' ';
        os << fmt17(tsp->points[i][0]) << ' ' << fmt17(tsp->points[i][1]);
      }
    } else {
      const auto& ks = std::get<KnapsackInstance>(inst);
      for (size_t i = 0; i < ks.weights.size(); ++i) {
        if (i) os << ' ';
        os << fmt17(ks.weights[i]) << ' ' << fmt17(ks.values[i]);
      }
    }
    os << "\n";
  }
  std::filesystem::path tmp = std::filesystem::path(path);
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw DataError("write_dataset: cannot open " + tmp.string());
    f << os.str();
  }
  std::filesystem::rename(tmp, path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("read_dataset: cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw DataError("read_dataset: empty file " + path);
  std::istringstream hs(header);
  Dataset ds;
  hs >> ds.problem;
  int count = 0;
  std::string kv;
  while (hs >> kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw DataError("read_dataset: bad header token " + kv);
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "n")
      ds.n = std::stoi(val);
    else if (key == "count")
      count = std::stoi(val);
    else if (key == "seed")
      ds.seed = std::stoull(val);
    else if (key == "capacity")
      ds.capacity = std::stod(val);
    else
      throw DataError("read_dataset: unknown header key " + key);
  }
  if (ds.problem != "tsp" && ds.problem != "knapsack")
    throw DataError("read_dataset: unknown problem " + ds.problem);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (ds.problem == "tsp") {
      TspInstance inst;
      double x, y;
      while (ls >> x >> y) inst.points.push_back({x, y});
      if (inst.size() != ds.n) throw DataError("read_dataset: instance size mismatch");
      ds.instances.emplace_back(std::move(inst));
    } else {
      KnapsackInstance inst;
      inst.capacity = ds.capacity;
      double w, v;
      while (ls >> w >> v) {
        inst.weights.push_back(w);
        inst.values.push_back(v);
      }
      if (inst.size() != ds.n) throw DataError("read_dataset: instance size mismatch");
      ds.instances.emplace_back(std::move(inst));
    }
  }
  if (static_cast<int>(ds.instances.size()) != count)
    throw DataError("read_dataset: instance count mismatch vs header");
  return ds;
}

Dataset make_dataset(const std::string& problem, int n, int count, std::uint64_t seed, double capacity) {
  Dataset ds;
  ds.problem = problem;
  ds.n = n;
  ds.seed = seed;
  if (problem == "tsp") {
    for (auto& inst : generate_tsp(n, count, seed)) ds.instances.emplace_back(std::move(inst));
  } else if (problem == "knapsack") {
    ds.capacity = capacity > 0.0 ? capacity : default_knapsack_capacity(n);
    for (auto& inst : generate_knapsack(n, count, seed, ds.capacity))
      ds.instances.emplace_back(std::move(inst));
  } else {
    throw DataError("make_dataset: unknown problem " + problem);
  }
  return ds;
}

std::uint64_t bytes_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("file_hash: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return bytes_hash(ss.str());
}

}  // namespace nco
