#include "levy/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "levy/error.hpp"

namespace levy {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveBarrier: return "NonPositiveBarrier";
    case ErrorCode::NegativeIntensity: return "NegativeIntensity";
    case ErrorCode::MalformedJumpLaw: return "MalformedJumpLaw";
    case ErrorCode::MalformedObservationFn: return "MalformedObservationFn";
    case ErrorCode::InfiniteJumpMean: return "InfiniteJumpMean";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::ObservationExhausted: return "ObservationExhausted";
    case ErrorCode::EnsembleExtinct: return "EnsembleExtinct";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

double normal_cdf_local(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void require_jump(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::MalformedJumpLaw, what);
}

}  // namespace

JumpLaw JumpLaw::point_mass(double a) {
  require_jump(std::isfinite(a), "point-mass location must be finite");
  return JumpLaw(JumpKind::PointMass, a, 0.0, 0.0);
}

JumpLaw JumpLaw::exponential(double rate) {
  require_jump(rate > 0.0 && std::isfinite(rate), "exponential rate must be positive");
  return JumpLaw(JumpKind::Exponential, rate, 0.0, 0.0);
}

JumpLaw JumpLaw::negated_exponential(double rate) {
  require_jump(rate > 0.0 && std::isfinite(rate), "negated-exponential rate must be positive");
  return JumpLaw(JumpKind::NegatedExponential, rate, 0.0, 0.0);
}

JumpLaw JumpLaw::gaussian(double mu, double sigma) {
  require_jump(std::isfinite(mu) && sigma > 0.0 && std::isfinite(sigma),
               "gaussian needs finite mu and sigma > 0");
  return JumpLaw(JumpKind::Gaussian, mu, sigma, 0.0);
}

JumpLaw JumpLaw::two_point(double a, double p, double b) {
  require_jump(std::isfinite(a) && std::isfinite(b) && p >= 0.0 && p <= 1.0,
               "two-point needs finite atoms and p in [0, 1]");
  return JumpLaw(JumpKind::TwoPoint, a, p, b);
}

JumpLaw JumpLaw::empirical(std::vector<double> sample) {
  require_jump(!sample.empty(), "empirical law needs a nonempty sample");
  require_jump(std::all_of(sample.begin(), sample.end(), [](double v) { return std::isfinite(v); }),
               "empirical sample must be finite");
  std::sort(sample.begin(), sample.end());
  JumpLaw law(JumpKind::Empirical, static_cast<double>(sample.size()), 0.0, 0.0);
  law.sorted_ = std::make_shared<const std::vector<double>>(std::move(sample));
  return law;
}

double JumpLaw::cdf(double y) const {
  switch (kind_) {
    case JumpKind::PointMass: return y >= p1_ ? 1.0 : 0.0;
    case JumpKind::Exponential: return y <= 0.0 ? 0.0 : -std::expm1(-p1_ * y);
    case JumpKind::NegatedExponential: return y >= 0.0 ? 1.0 : std::exp(p1_ * y);
    case JumpKind::Gaussian: return normal_cdf_local((y - p1_) / p2_);
    case JumpKind::TwoPoint: return (y >= p1_ ? p2_ : 0.0) + (y >= p3_ ? 1.0 - p2_ : 0.0);
    case JumpKind::Empirical: {
      const auto& s = *sorted_;
      return static_cast<double>(std::upper_bound(s.begin(), s.end(), y) - s.begin()) /
             static_cast<double>(s.size());
    }
  }
  return 0.0;
}

double JumpLaw::cdf_left(double y) const {
  switch (kind_) {
    case JumpKind::PointMass: return y > p1_ ? 1.0 : 0.0;
    case JumpKind::TwoPoint: return (y > p1_ ? p2_ : 0.0) + (y > p3_ ? 1.0 - p2_ : 0.0);
    case JumpKind::Empirical: {
      const auto& s = *sorted_;
      return static_cast<double>(std::lower_bound(s.begin(), s.end(), y) - s.begin()) /
             static_cast<double>(s.size());
    }
    default: return cdf(y);
  }
}

double JumpLaw::sample(Stream& rng) const {
  switch (kind_) {
    case JumpKind::PointMass: return p1_;
    case JumpKind::Exponential: return rng.exponential(p1_);
    case JumpKind::NegatedExponential: return -rng.exponential(p1_);
    case JumpKind::Gaussian: return rng.normal(p1_, p2_);
    case JumpKind::TwoPoint: return rng.uniform() < p2_ ? p1_ : p3_;
    case JumpKind::Empirical: {
      const auto& s = *sorted_;
      auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.size()));
      return s[std::min(i, s.size() - 1)];
    }
  }
  return 0.0;
}

double JumpLaw::mean() const {
  switch (kind_) {
    case JumpKind::PointMass: return p1_;
    case JumpKind::Exponential: return 1.0 / p1_;
    case JumpKind::NegatedExponential: return -1.0 / p1_;
    case JumpKind::Gaussian: return p1_;
    case JumpKind::TwoPoint: return p2_ * p1_ + (1.0 - p2_) * p3_;
    case JumpKind::Empirical: {
      const auto& s = *sorted_;
      return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    }
  }
  return 0.0;
}

const std::vector<double>& JumpLaw::support() const {
  static const std::vector<double> empty;
  return sorted_ ? *sorted_ : empty;
}

std::string JumpLaw::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case JumpKind::PointMass: os << "point-mass(" << p1_ << ")"; break;
    case JumpKind::Exponential: os << "exponential(" << p1_ << ")"; break;
    case JumpKind::NegatedExponential: os << "negated-exponential(" << p1_ << ")"; break;
    case JumpKind::Gaussian: os << "gaussian(" << p1_ << ", " << p2_ << ")"; break;
    case JumpKind::TwoPoint: os << "two-point(" << p1_ << ", " << p2_ << ", " << p3_ << ")"; break;
    case JumpKind::Empirical: os << "empirical(n=" << sorted_->size() << ")"; break;
  }
  return os.str();
}

namespace {

void require_h(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::MalformedObservationFn, what);
}

}  // namespace

ObservationFn ObservationFn::constant(double c) {
  require_h(std::isfinite(c), "constant must be finite");
  return ObservationFn(ObservationKind::Constant, c, std::abs(c));
}

ObservationFn ObservationFn::clipped_linear(double slope, double clip_at) {
  require_h(std::isfinite(slope) && clip_at >= 0.0 && std::isfinite(clip_at),
            "clipped-linear needs finite slope and clip_at >= 0");
  return ObservationFn(ObservationKind::ClippedLinear, slope, clip_at);
}

ObservationFn ObservationFn::indicator_above(double threshold, double level) {
  require_h(std::isfinite(threshold) && std::isfinite(level), "indicator-above needs finite parameters");
  ObservationFn h(ObservationKind::IndicatorAbove, threshold, std::abs(level));
  h.sup_ = std::abs(level);
  h.level_ = level;
  return h;
}

ObservationFn ObservationFn::bounded_logistic(double scale, double bound) {
  require_h(scale > 0.0 && std::isfinite(scale) && bound >= 0.0 && std::isfinite(bound),
            "bounded-logistic needs scale > 0 and bound >= 0");
  return ObservationFn(ObservationKind::BoundedLogistic, scale, bound);
}

double ObservationFn::eval(double y) const {
  switch (kind_) {
    case ObservationKind::Constant: return p1_;
    case ObservationKind::ClippedLinear: return std::clamp(p1_ * y, -sup_, sup_);
    case ObservationKind::IndicatorAbove: return y > p1_ ? level_ : 0.0;
    case ObservationKind::BoundedLogistic: return sup_ / (1.0 + std::exp(-y / p1_));
  }
  return 0.0;
}

std::string ObservationFn::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case ObservationKind::Constant: os << "constant(" << p1_ << ")"; break;
    case ObservationKind::ClippedLinear: os << "clipped-linear(" << p1_ << ", " << sup_ << ")"; break;
    case ObservationKind::IndicatorAbove: os << "indicator-above(" << p1_ << ", " << level_ << ")"; break;
    case ObservationKind::BoundedLogistic: os << "bounded-logistic(" << p1_ << ", " << sup_ << ")"; break;
  }
  return os.str();
}

ValidatedParams ValidatedParams::with_barrier(double z) const {
  ModelParams q = p_;
  q.x = z;
  return validate_params(q);
}

ValidatedParams validate_params(const ModelParams& p) {
  if (!(p.x > 0.0) || !std::isfinite(p.x)) {
    throw Error(ErrorCode::NonPositiveBarrier, "barrier x must be a positive finite number");
  }
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) {
    throw Error(ErrorCode::NegativeIntensity, "jump intensity must be >= 0");
  }
  if (!std::isfinite(p.m)) throw Error(ErrorCode::InvalidConfig, "drift m must be finite");

  // Probe the CDF: monotone, within [0, 1], left limit below the value.
  double prev = 0.0;
  for (int i = -4000; i <= 4000; ++i) {
    const double y = 0.025 * i;
    const double f = p.jump.cdf(y);
    const double fl = p.jump.cdf_left(y);
    if (!(f >= 0.0 && f <= 1.0) || !(fl >= 0.0 && fl <= f) || f < prev || fl < prev) {
      throw Error(ErrorCode::MalformedJumpLaw, "jump CDF is not a distribution function on the probe grid");
    }
    prev = f;
  }
  return ValidatedParams(p);
}

bool is_default_certain(const ModelParams& p) {
  if (p.lambda == 0.0) return p.m >= 0.0;
  const double mean = p.jump.mean();
  if (!std::isfinite(mean)) throw Error(ErrorCode::InfiniteJumpMean, "E[Y_1] is not finite");
  return p.m + mean >= 0.0;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double number(const std::map<std::string, std::string>& kv, const std::string& key, double fallback,
              bool required = false) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (required) throw Error(ErrorCode::InvalidConfig, "missing key '" + key + "'");
    return fallback;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "key '" + key + "' is not a number: " + it->second);
  }
}

std::vector<double> number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "bad number in list: " + item);
    }
  }
  return out;
}

}  // namespace

ModelConfig parse_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  static const char* known[] = {"m",           "lambda",       "jump.kind", "jump.param1", "jump.param2",
                                "jump.param3", "jump.samples", "barrier",   "h.kind",      "h.param1",
                                "h.bound"};
  for (const auto& [k, v] : kv) {
    if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + k + "'");
    }
  }

  ModelConfig cfg;
  cfg.params.m = number(kv, "m", 0.0);
  cfg.params.lambda = number(kv, "lambda", 0.0);
  cfg.params.x = number(kv, "barrier", 0.0, true);

  const std::string jump_kind = kv.count("jump.kind") ? kv["jump.kind"] : "point-mass";
  const double j1 = number(kv, "jump.param1", 0.0);
  const double j2 = number(kv, "jump.param2", 0.0);
  const double j3 = number(kv, "jump.param3", 0.0);
  if (jump_kind == "point-mass") {
    cfg.params.jump = JumpLaw::point_mass(j1);
  } else if (jump_kind == "exponential") {
    cfg.params.jump = JumpLaw::exponential(j1);
  } else if (jump_kind == "negated-exponential") {
    cfg.params.jump = JumpLaw::negated_exponential(j1);
  } else if (jump_kind == "gaussian") {
    cfg.params.jump = JumpLaw::gaussian(j1, j2);
  } else if (jump_kind == "two-point") {
    cfg.params.jump = JumpLaw::two_point(j1, j2, j3);
  } else if (jump_kind == "empirical") {
    cfg.params.jump = JumpLaw::empirical(number_list(kv.count("jump.samples") ? kv["jump.samples"] : ""));
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown jump.kind '" + jump_kind + "'");
  }

  const std::string h_kind = kv.count("h.kind") ? kv["h.kind"] : "constant";
  const double h1 = number(kv, "h.param1", 0.0);
  if (h_kind == "constant") {
    cfg.h = ObservationFn::constant(h1);
    if (kv.count("h.bound") && number(kv, "h.bound", 0.0) < std::abs(h1)) {
      throw Error(ErrorCode::MalformedObservationFn, "h.bound is below |h.param1|");
    }
  } else if (h_kind == "clipped-linear") {
    cfg.h = ObservationFn::clipped_linear(h1, number(kv, "h.bound", 0.0, true));
  } else if (h_kind == "indicator-above") {
    cfg.h = ObservationFn::indicator_above(h1, number(kv, "h.bound", 0.0, true));
  } else if (h_kind == "bounded-logistic") {
    cfg.h = ObservationFn::bounded_logistic(h1, number(kv, "h.bound", 0.0, true));
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown h.kind '" + h_kind + "'");
  }
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  return parse_config(in);
}

std::string to_config_text(const ModelConfig& config) {
  std::ostringstream os;
  os.precision(17);
  const auto& p = config.params;
  os << "m = " << p.m << "\nlambda = " << p.lambda << "\nbarrier = " << p.x << "\n";
  const auto& j = p.jump;
  switch (j.kind()) {
    case JumpKind::PointMass: os << "jump.kind = point-mass\njump.param1 = " << j.param1() << "\n"; break;
    case JumpKind::Exponential: os << "jump.kind = exponential\njump.param1 = " << j.param1() << "\n"; break;
    case JumpKind::NegatedExponential:
      os << "jump.kind = negated-exponential\njump.param1 = " << j.param1() << "\n";
      break;
    case JumpKind::Gaussian:
      os << "jump.kind = gaussian\njump.param1 = " << j.param1() << "\njump.param2 = " << j.param2() << "\n";
      break;
    case JumpKind::TwoPoint:
      os << "jump.kind = two-point\njump.param1 = " << j.param1() << "\njump.param2 = " << j.param2()
         << "\njump.param3 = " << j.param3() << "\n";
      break;
    case JumpKind::Empirical: {
      os << "jump.kind = empirical\njump.samples = ";
      const auto& s = j.support();
      for (std::size_t i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i];
      os << "\n";
      break;
    }
  }
  const auto& h = config.h;
  switch (h.kind()) {
    case ObservationKind::Constant: os << "h.kind = constant\nh.param1 = " << h.param1() << "\n"; break;
    case ObservationKind::ClippedLinear:
      os << "h.kind = clipped-linear\nh.param1 = " << h.param1() << "\nh.bound = " << h.sup_norm() << "\n";
      break;
    case ObservationKind::IndicatorAbove:
      os << "h.kind = indicator-above\nh.param1 = " << h.param1() << "\nh.bound = " << h.eval(h.param1() + 1.0)
         << "\n";
      break;
    case ObservationKind::BoundedLogistic:
      os << "h.kind = bounded-logistic\nh.param1 = " << h.param1() << "\nh.bound = " << h.sup_norm() << "\n";
      break;
  }
  return os.str();
}

}  // namespace levy
