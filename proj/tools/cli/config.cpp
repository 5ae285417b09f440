#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "luenid/error.hpp"

namespace luenid::cli {

using nlohmann::json;

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string indexed(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json& require(const json& node, const std::string& key, const std::string& path) {
  if (!node.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  auto it = node.find(key);
  if (it == node.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

const json* optional_field(const json& node, const std::string& key) {
  if (!node.is_object()) return nullptr;
  auto it = node.find(key);
  return (it == node.end() || it->is_null()) ? nullptr : &*it;
}

double as_number(const json& node, const std::string& path) {
  if (!node.is_number()) throw ConfigError(path, "expected a number");
  const double value = node.get<double>();
  if (!std::isfinite(value)) throw ConfigError(path, "must be finite");
  return value;
}

double as_positive(const json& node, const std::string& path) {
  const double value = as_number(node, path);
  if (!(value > 0.0)) throw ConfigError(path, "must be positive");
  return value;
}

int as_int(const json& node, const std::string& path, int min_value) {
  if (!node.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto value = node.get<long long>();
  if (value < min_value || value > 1'000'000'000) {
    throw ConfigError(path, "must be an integer >= " + std::to_string(min_value));
  }
  return static_cast<int>(value);
}

Vector as_vector(const json& node, const std::string& path) {
  if (!node.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = as_number(node[i], indexed(path, i));
  }
  return v;
}

Vector as_vector_of_size(const json& node, const std::string& path, Eigen::Index size) {
  Vector v = as_vector(node, path);
  if (v.size() != size) {
    throw ConfigError(path, "expected " + std::to_string(size) + " entries, got " +
                                std::to_string(v.size()));
  }
  return v;
}

Matrix as_matrix(const json& node, const std::string& path) {
  if (!node.is_array() || node.empty()) throw ConfigError(path, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(node.size());
  Matrix m;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const Vector row = as_vector(node[i], indexed(path, i));
    if (i == 0) m.resize(rows, row.size());
    if (row.size() != m.cols()) throw ConfigError(indexed(path, i), "ragged matrix row");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

std::filesystem::path output_dir_of(const json& root) {
  if (const json* node = optional_field(root, "output_dir")) {
    if (!node->is_string()) throw ConfigError("output_dir", "expected a string");
    return node->get<std::string>();
  }
  return "luenid_out";
}

SystemConfig parse_system(const json& node, const std::string& path) {
  SystemConfig out;
  if (!node.is_object()) throw ConfigError(path, "expected an object");
  const bool canonical = node.contains("theta_a") || node.contains("theta_b");
  const bool general = node.contains("A") || node.contains("B") || node.contains("C");
  if (canonical == general) {
    throw ConfigError(path, "give either {theta_a, theta_b} or {A, B, C}");
  }
  if (canonical) {
    const Vector a = as_vector(require(node, "theta_a", path), join(path, "theta_a"));
    if (a.size() < 1) throw ConfigError(join(path, "theta_a"), "must be non-empty");
    const Vector b = as_vector_of_size(require(node, "theta_b", path), join(path, "theta_b"), a.size());
    out.canonical.theta = CanonicalTheta(a, b);
    out.canonical.Q = Matrix::Identity(a.size(), a.size());
    out.reference = canonical_matrices(out.canonical.theta);
    return out;
  }
  StateSpace sys;
  sys.A = as_matrix(require(node, "A", path), join(path, "A"));
  if (sys.A.rows() != sys.A.cols()) throw ConfigError(join(path, "A"), "must be square");
  sys.B = as_vector_of_size(require(node, "B", path), join(path, "B"), sys.A.rows());
  sys.C = as_vector_of_size(require(node, "C", path), join(path, "C"), sys.A.rows()).transpose();
  try {
    out.canonical = to_canonical(sys);
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  out.reference = sys;
  return out;
}

ObserverConfig parse_observer(const json& node, const std::string& path, Eigen::Index n) {
  ObserverConfig out;
  if (const json* lt = optional_field(node, "lambda_tilde")) {
    out.lambda_tilde = as_vector(*lt, join(path, "lambda_tilde"));
  } else {
    const int r = as_int(require(node, "r", path), join(path, "r"), 1);
    double step = 0.1;
    if (const json* s = optional_field(node, "lambda_tilde_step")) {
      step = as_positive(*s, join(path, "lambda_tilde_step"));
    }
    out.lambda_tilde = uniform_lambda_tilde(r, step);
  }
  if (out.lambda_tilde.size() < 3 * n) {
    throw ConfigError(join(path, "lambda_tilde"),
                      "needs at least 3n = " + std::to_string(3 * n) + " entries");
  }
  ObserverSpec probe;
  probe.lambda_tilde = out.lambda_tilde;
  probe.n = n;
  try {
    probe.validate();
  } catch (const Error& e) {
    throw ConfigError(join(path, "lambda_tilde"), e.what());
  }

  if (const json* p = optional_field(node, "p_min")) {
    if (!(p->is_string() && p->get<std::string>() == "auto")) {
      const double value = as_number(*p, join(path, "p_min"));
      if (value < 0.0) throw ConfigError(join(path, "p_min"), "must be >= 0");
      out.p_min = value;
    }
  }
  if (const json* f = optional_field(node, "fallback")) {
    const std::string mode = f->is_string() ? f->get<std::string>() : "";
    if (mode == "zero") {
      out.fallback = InverseFallback::kZero;
    } else if (mode == "hold") {
      out.fallback = InverseFallback::kHoldPrevious;
    } else {
      throw ConfigError(join(path, "fallback"), "expected \"zero\" or \"hold\"");
    }
  }
  if (const json* box = optional_field(node, "theta_box")) {
    const std::string box_path = join(path, "theta_box");
    Box b{as_vector_of_size(require(*box, "lower", box_path), join(box_path, "lower"), 2 * n),
          as_vector_of_size(require(*box, "upper", box_path), join(box_path, "upper"), 2 * n)};
    if ((b.upper.array() < b.lower.array()).any()) {
      throw ConfigError(box_path, "lower must not exceed upper");
    }
    out.theta_box = b;
  }
  if (const json* m = optional_field(node, "overlap_margin")) {
    out.overlap_margin = as_number(*m, join(path, "overlap_margin"));
  }
  if (const json* g = optional_field(node, "overlap_grid_points")) {
    out.overlap_grid_points = as_int(*g, join(path, "overlap_grid_points"), 2);
  }
  return out;
}

SimulationSettings parse_simulation(const json& node, const std::string& path, Eigen::Index n,
                                    Eigen::Index r) {
  SimulationSettings out;
  if (const json* s = optional_field(node, "step_s")) out.step_s = as_positive(*s, join(path, "step_s"));
  out.horizon_s = as_positive(require(node, "horizon_s", path), join(path, "horizon_s"));
  if (out.horizon_s < out.step_s) throw ConfigError(join(path, "horizon_s"), "must be >= step_s");
  if (const json* v = optional_field(node, "x0")) out.x0 = as_vector_of_size(*v, join(path, "x0"), n);
  if (const json* v = optional_field(node, "z0")) out.z0 = as_vector_of_size(*v, join(path, "z0"), r);
  if (const json* v = optional_field(node, "w0")) out.w0 = as_vector_of_size(*v, join(path, "w0"), r);
  if (const json* v = optional_field(node, "record_every")) {
    out.record_every = as_int(*v, join(path, "record_every"), 1);
  }
  if (const json* v = optional_field(node, "discard_before_s")) {
    out.discard_before_s = as_number(*v, join(path, "discard_before_s"));
  }
  if (const json* v = optional_field(node, "steady_from_s")) {
    out.steady_from_s = as_number(*v, join(path, "steady_from_s"));
  }
  return out;
}

SweepSettings parse_sweep(const json& node, const std::string& path) {
  SweepSettings out;
  const json& ks = require(node, "k", path);
  if (!ks.is_array() || ks.empty()) throw ConfigError(join(path, "k"), "expected a non-empty array");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    out.k.push_back(as_positive(ks[i], indexed(join(path, "k"), i)));
  }
  if (const json* snr = optional_field(node, "snr_db")) {
    if (!snr->is_array() || snr->empty()) {
      throw ConfigError(join(path, "snr_db"), "expected a non-empty array (null entries = no noise)");
    }
    for (std::size_t i = 0; i < snr->size(); ++i) {
      if ((*snr)[i].is_null()) {
        out.snr_db.emplace_back(std::nullopt);
      } else {
        out.snr_db.emplace_back(as_number((*snr)[i], indexed(join(path, "snr_db"), i)));
      }
    }
  } else {
    out.snr_db.emplace_back(std::nullopt);
  }
  if (const json* seeds = optional_field(node, "seeds")) {
    if (!seeds->is_array() || seeds->empty()) {
      throw ConfigError(join(path, "seeds"), "expected a non-empty array");
    }
    for (std::size_t i = 0; i < seeds->size(); ++i) {
      out.seeds.push_back(static_cast<std::uint64_t>(as_int((*seeds)[i], indexed(join(path, "seeds"), i), 0)));
    }
  } else {
    out.seeds.push_back(0);
  }
  return out;
}

}  // namespace

double TimeGrid::at(int i) const {
  if (points == 1) return start_s;
  return start_s + (end_s - start_s) * static_cast<double>(i) / static_cast<double>(points - 1);
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
}

Multisine parse_input(const json& node, const std::string& path) {
  if (!node.is_object()) throw ConfigError(path, "expected an object");
  std::vector<SineTerm> terms;
  if (const json* list = optional_field(node, "terms")) {
    if (!list->is_array()) throw ConfigError(join(path, "terms"), "expected an array");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string tp = indexed(join(path, "terms"), i);
      const json& t = (*list)[i];
      SineTerm term;
      term.amplitude = as_number(require(t, "amplitude", tp), join(tp, "amplitude"));
      term.freq_rad_s = as_positive(require(t, "freq_rad_s", tp), join(tp, "freq_rad_s"));
      if (const json* ph = optional_field(t, "phase_rad")) term.phase_rad = as_number(*ph, join(tp, "phase_rad"));
      if (term.amplitude == 0.0) throw ConfigError(join(tp, "amplitude"), "must be nonzero");
      terms.push_back(term);
    }
  } else {
    const int count = as_int(require(node, "count", path), join(path, "count"), 0);
    FrequencyRule freq;
    AmplitudeRule amp;
    if (const json* v = optional_field(node, "freq_spacing_rad_s")) freq.spacing_rad_s = as_positive(*v, join(path, "freq_spacing_rad_s"));
    if (const json* v = optional_field(node, "freq_offset_rad_s")) freq.offset_rad_s = as_number(*v, join(path, "freq_offset_rad_s"));
    if (const json* v = optional_field(node, "amplitude")) amp.amplitude = as_number(*v, join(path, "amplitude"));
    if (const json* v = optional_field(node, "phase_rad")) amp.phase_rad = as_number(*v, join(path, "phase_rad"));
    if (freq.offset_rad_s < 0.0) throw ConfigError(join(path, "freq_offset_rad_s"), "must be >= 0");
    if (amp.amplitude == 0.0 && count > 0) throw ConfigError(join(path, "amplitude"), "must be nonzero");
    return make_multisine(static_cast<std::size_t>(count), freq, amp);
  }
  try {
    return Multisine(std::move(terms));
  } catch (const Error& e) {
    throw ConfigError(join(path, "terms"), e.what());
  }
}

IdentifyConfig parse_identify(const json& root) {
  IdentifyConfig out;
  out.source = root;
  out.system = parse_system(require(root, "system", ""), "system");
  const Eigen::Index n = out.system.canonical.theta.order();
  out.observer = parse_observer(require(root, "observer", ""), "observer", n);
  out.input = parse_input(require(root, "input", ""), "input");
  out.simulation = parse_simulation(require(root, "simulation", ""), "simulation", n,
                                    out.observer.lambda_tilde.size());
  out.sweep = parse_sweep(require(root, "sweep", ""), "sweep");
  out.output_dir = output_dir_of(root);
  return out;
}

ExcitationConfig parse_excitation(const json& root) {
  ExcitationConfig out;
  out.input = parse_input(require(root, "input", ""), "input");
  out.order = as_int(require(root, "order", ""), "order", 0);
  if (const json* grid = optional_field(root, "time_grid")) {
    if (const json* v = optional_field(*grid, "start_s")) out.grid.start_s = as_number(*v, "time_grid.start_s");
    if (const json* v = optional_field(*grid, "end_s")) out.grid.end_s = as_number(*v, "time_grid.end_s");
    if (const json* v = optional_field(*grid, "points")) out.grid.points = as_int(*v, "time_grid.points", 1);
    if (out.grid.end_s < out.grid.start_s) throw ConfigError("time_grid.end_s", "must be >= start_s");
  }
  if (const json* v = optional_field(root, "epsilon_s")) out.epsilon_s = as_positive(*v, "epsilon_s");
  if (const json* v = optional_field(root, "quad_step_s")) {
    out.quad_step_s = as_positive(*v, "quad_step_s");
    if (out.quad_step_s >= out.epsilon_s) throw ConfigError("quad_step_s", "must be smaller than epsilon_s");
  }
  if (const json* v = optional_field(root, "rel_tol")) out.rel_tol = as_positive(*v, "rel_tol");
  out.output_dir = output_dir_of(root);
  return out;
}

McShaneConfig parse_mcshane(const json& root) {
  McShaneConfig out;
  const json& obs = require(root, "observer", "");
  out.spec.n = 1;
  out.spec.lambda_tilde = as_vector(require(obs, "lambda_tilde", "observer"), "observer.lambda_tilde");
  if (const json* k = optional_field(obs, "k")) out.spec.k = as_positive(*k, "observer.k");
  if (const json* p = optional_field(obs, "p_min")) out.spec.p_min = as_number(*p, "observer.p_min");
  try {
    out.spec.validate();
  } catch (const Error& e) {
    throw ConfigError("observer", e.what());
  }
  if (out.spec.r() < 3) throw ConfigError("observer.lambda_tilde", "needs at least 3 entries (r >= 3n)");

  const json& box = require(root, "box", "");
  out.box.lower = as_vector(require(box, "lower", "box"), "box.lower");
  out.box.upper = as_vector(require(box, "upper", "box"), "box.upper");
  if (out.box.lower.size() != 3) {
    throw ConfigError("box.lower", "McShane comparison supports n = 1 only (3 search dimensions)");
  }
  if (out.box.upper.size() != 3 || (out.box.upper.array() < out.box.lower.array()).any()) {
    throw ConfigError("box.upper", "must have 3 entries, each >= lower");
  }
  if (const json* g = optional_field(root, "grid_points_per_dim")) {
    out.grid_points_per_dim = as_int(*g, "grid_points_per_dim", 2);
  }
  if (const json* l = optional_field(root, "lipschitz_t")) {
    if (!(l->is_string() && l->get<std::string>() == "estimate")) {
      out.lipschitz_t = as_positive(*l, "lipschitz_t");
    }
  }
  if (const json* s = optional_field(root, "lipschitz_scale")) out.lipschitz_scale = as_positive(*s, "lipschitz_scale");
  if (const json* m = optional_field(root, "max_grid_points")) {
    out.max_grid_points = static_cast<std::size_t>(as_int(*m, "max_grid_points", 1));
  }

  const Eigen::Index r = out.spec.r();
  if (const json* list = optional_field(root, "samples")) {
    if (!list->is_array()) throw ConfigError("samples", "expected an array");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string sp = indexed("samples", i);
      const json& s = (*list)[i];
      McShaneSample sample;
      sample.x = as_vector_of_size(require(s, "x", sp), join(sp, "x"), 1);
      sample.theta = CanonicalTheta(as_vector_of_size(require(s, "theta_a", sp), join(sp, "theta_a"), 1),
                                    as_vector_of_size(require(s, "theta_b", sp), join(sp, "theta_b"), 1));
      sample.w = as_vector_of_size(require(s, "w", sp), join(sp, "w"), r);
      out.samples.push_back(std::move(sample));
    }
  }
  if (const json* rnd = optional_field(root, "random_samples")) {
    const int count = as_int(require(*rnd, "count", "random_samples"), "random_samples.count", 0);
    std::uint64_t seed = 1;
    if (const json* s = optional_field(*rnd, "seed")) seed = static_cast<std::uint64_t>(as_int(*s, "random_samples.seed", 0));
    double w_lower = -1.0;
    double w_upper = 1.0;
    if (const json* v = optional_field(*rnd, "w_lower")) w_lower = as_number(*v, "random_samples.w_lower");
    if (const json* v = optional_field(*rnd, "w_upper")) w_upper = as_number(*v, "random_samples.w_upper");
    // Truths are drawn from grid nodes, where the grid inverse is exact.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> node(0, out.grid_points_per_dim - 1);
    std::uniform_real_distribution<double> wdist(w_lower, w_upper);
    auto coordinate = [&](Eigen::Index d) {
      return out.box.lower(d) + (out.box.upper(d) - out.box.lower(d)) * node(rng) /
                                    static_cast<double>(out.grid_points_per_dim - 1);
    };
    for (int i = 0; i < count; ++i) {
      McShaneSample sample;
      sample.x = Vector::Constant(1, coordinate(0));
      const double a = coordinate(1);
      const double b = coordinate(2);
      sample.theta = CanonicalTheta(Vector::Constant(1, a), Vector::Constant(1, b));
      sample.w.resize(r);
      for (Eigen::Index j = 0; j < r; ++j) sample.w(j) = wdist(rng);
      out.samples.push_back(std::move(sample));
    }
  }
  if (out.samples.empty()) throw ConfigError("samples", "no samples to compare");
  out.output_dir = output_dir_of(root);
  return out;
}

}  // namespace luenid::cli
