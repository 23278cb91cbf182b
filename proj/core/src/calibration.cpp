#include "thermocal/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace thermocal {

using nlohmann::json;

void CalibrationSamples::validate() const {
  if (points.size() < 2) throw CalibrationError("calibration needs at least two samples");
  for (const auto& p : points) {
    if (!(p.temp >= 0.0 && p.temp <= 1.0 && p.gray >= 0.0 && p.gray <= 1.0)) {
      throw CalibrationError("normalized samples must lie in [0,1]");
    }
  }
}

void NormBounds::validate() const {
  if (!(temp_max > temp_min)) throw CalibrationError("bounds: temp_max must exceed temp_min");
  if (!(gray_max > gray_min)) throw CalibrationError("bounds: gray_max must exceed gray_min");
}

std::string_view to_string(ModelForm form) {
  switch (form) {
    case ModelForm::kLinear: return "linear";
    case ModelForm::kQuadratic: return "quadratic";
    case ModelForm::kCubic: return "cubic";
    case ModelForm::kLogistic: return "logistic";
  }
  return "linear";
}

ModelForm model_form_from_string(std::string_view name) {
  if (name == "linear") return ModelForm::kLinear;
  if (name == "quadratic") return ModelForm::kQuadratic;
  if (name == "cubic") return ModelForm::kCubic;
  if (name == "logistic") return ModelForm::kLogistic;
  throw ConfigError("unknown calibration form: " + std::string(name));
}

std::size_t coefficient_count(ModelForm form) {
  switch (form) {
    case ModelForm::kLinear: return 2;
    case ModelForm::kQuadratic: return 3;
    case ModelForm::kCubic: return 4;
    case ModelForm::kLogistic: return 2;
  }
  return 0;
}

void CalibrationModel::validate() const {
  if (coefficients.size() != coefficient_count(form)) {
    throw CalibrationError("model " + std::string(to_string(form)) + " expects " +
                           std::to_string(coefficient_count(form)) + " coefficients");
  }
  if (!(mse >= 0.0)) throw CalibrationError("model mse must be nonnegative");
  bounds.validate();
}

namespace {

double horner(std::span<const double> c, double t) {
  double acc = 0.0;
  for (double v : c) acc = acc * t + v;
  return acc;
}

double logistic(double a, double b, double t) { return 1.0 / (1.0 + std::exp(a * t + b)); }

}  // namespace

double CalibrationModel::evaluate(double t) const {
  if (form == ModelForm::kLogistic) return logistic(coefficients[0], coefficients[1], t);
  return horner(coefficients, t);
}

double CalibrationModel::derivative(double t) const {
  if (form == ModelForm::kLogistic) {
    const double y = evaluate(t);
    return -coefficients[0] * y * (1.0 - y);
  }
  const std::size_t deg = coefficients.size() - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < deg; ++i) {
    acc = acc * t + coefficients[i] * static_cast<double>(deg - i);
  }
  return acc;
}

bool CalibrationModel::monotone_on_unit_interval() const {
  switch (form) {
    case ModelForm::kLinear:
      return coefficients[0] != 0.0;
    case ModelForm::kLogistic:
      return coefficients[0] != 0.0;
    case ModelForm::kQuadratic: {
      const double a = coefficients[0], b = coefficients[1];
      if (a == 0.0) return b != 0.0;
      const double vertex = -b / (2.0 * a);
      return !(vertex > 0.0 && vertex < 1.0);
    }
    case ModelForm::kCubic: {
      // Derivative 3a t^2 + 2b t + c must not change sign inside (0,1).
      const double a = 3.0 * coefficients[0], b = 2.0 * coefficients[1], c = coefficients[2];
      std::vector<double> roots;
      if (a == 0.0) {
        if (b != 0.0) roots.push_back(-c / b);
      } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc > 0.0) {
          const double s = std::sqrt(disc);
          roots.push_back((-b - s) / (2.0 * a));
          roots.push_back((-b + s) / (2.0 * a));
        }
      }
      for (double r : roots) {
        if (r > 0.0 && r < 1.0) return false;
      }
      return !(a == 0.0 && b == 0.0 && c == 0.0);
    }
  }
  return false;
}

std::string CalibrationModel::to_json() const {
  json j;
  j["form"] = std::string(to_string(form));
  j["coefficients"] = coefficients;
  j["bounds"] = {{"temp_min", bounds.temp_min},
                 {"temp_max", bounds.temp_max},
                 {"gray_min", bounds.gray_min},
                 {"gray_max", bounds.gray_max}};
  j["mse"] = mse;
  return j.dump(2);
}

CalibrationModel CalibrationModel::from_json(std::string_view text) {
  CalibrationModel m;
  try {
    const json j = json::parse(text);
    m.form = model_form_from_string(j.at("form").get<std::string>());
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    const auto& b = j.at("bounds");
    m.bounds = {b.at("temp_min").get<double>(), b.at("temp_max").get<double>(),
                b.at("gray_min").get<double>(), b.at("gray_max").get<double>()};
    m.mse = j.at("mse").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("calibration model: ") + e.what());
  }
  try {
    m.validate();
  } catch (const CalibrationError& e) {
    throw ConfigError(e.what());
  }
  return m;
}

CalibrationModel CalibrationModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open calibration file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void CalibrationModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write calibration file: " + path);
  out << to_json() << '\n';
}

std::vector<SamplePair> window_smooth(const ThermalFrame& frame, std::size_t window,
                                      std::size_t step) {
  require_same_shape(frame.gray, frame.temp, "window_smooth");
  if (window == 0 || window % 2 == 0) throw ArgumentError("window must be a positive odd integer");
  if (step == 0) throw ArgumentError("step must be positive");
  const std::size_t w = frame.gray.width();
  const std::size_t h = frame.gray.height();
  if (window > w || window > h) {
    throw ArgumentError("window " + std::to_string(window) + " exceeds frame " +
                        std::to_string(w) + "x" + std::to_string(h));
  }
  std::vector<SamplePair> out;
  out.reserve(((h - window) / step + 1) * ((w - window) / step + 1));
  const double inv = 1.0 / static_cast<double>(window * window);
  for (std::size_t y0 = 0; y0 + window <= h; y0 += step) {
    for (std::size_t x0 = 0; x0 + window <= w; x0 += step) {
      double st = 0.0, sg = 0.0;
      for (std::size_t y = y0; y < y0 + window; ++y) {
        for (std::size_t x = x0; x < x0 + window; ++x) {
          st += frame.temp(x, y);
          sg += frame.gray(x, y);
        }
      }
      out.push_back({st * inv, sg * inv});
    }
  }
  return out;
}

std::pair<CalibrationSamples, NormBounds> normalize_samples(std::span<const SamplePair> raw) {
  if (raw.size() < 2) throw CalibrationError("normalization needs at least two samples");
  NormBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : raw) {
    b.temp_min = std::min(b.temp_min, p.temp);
    b.temp_max = std::max(b.temp_max, p.temp);
    b.gray_min = std::min(b.gray_min, p.gray);
    b.gray_max = std::max(b.gray_max, p.gray);
  }
  if (!(b.temp_max > b.temp_min)) throw CalibrationError("degenerate temperature axis (max == min)");
  if (!(b.gray_max > b.gray_min)) throw CalibrationError("degenerate gray axis (max == min)");
  CalibrationSamples s;
  s.points.reserve(raw.size());
  for (const auto& p : raw) {
    s.points.push_back({std::clamp(b.normalize_temp(p.temp), 0.0, 1.0),
                        std::clamp(b.normalize_gray(p.gray), 0.0, 1.0)});
  }
  return {std::move(s), b};
}

namespace {

/// Solves A x = rhs (n x n, row-major) by Gaussian elimination with partial pivoting.
std::vector<double> solve_pivoted(std::vector<double> a, std::vector<double> rhs, std::size_t n) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  const double tiny = std::max(scale, 1.0) * 1e-13;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    if (!(std::abs(a[piv * n + col]) > tiny)) {
      throw FitError("rank-deficient least-squares system");
    }
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[piv * n + k]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= a[i * n + k] * x[k];
    x[i] = acc / a[i * n + i];
  }
  return x;
}

/// Least squares for y ~ sum_k c_k t^(deg-k); returns coefficients highest power first.
std::vector<double> fit_polynomial(std::span<const SamplePair> pts, std::size_t deg,
                                   bool transform_logit) {
  const std::size_t n = deg + 1;
  std::vector<double> ata(n * n, 0.0), aty(n, 0.0);
  std::vector<double> row(n);
  for (const auto& p : pts) {
    double y = p.gray;
    if (transform_logit) {
      const double g = std::clamp(p.gray, 1e-6, 1.0 - 1e-6);
      y = std::log(1.0 / g - 1.0);
    }
    double pw = 1.0;
    for (std::size_t k = n; k-- > 0;) {
      row[k] = pw;
      pw *= p.temp;
    }
    for (std::size_t i = 0; i < n; ++i) {
      aty[i] += row[i] * y;
      for (std::size_t j = 0; j < n; ++j) ata[i * n + j] += row[i] * row[j];
    }
  }
  return solve_pivoted(std::move(ata), std::move(aty), n);
}

void check_logistic_range(std::span<const SamplePair> pts) {
  for (const auto& p : pts) {
    if (p.gray < -1e-6 || p.gray > 1.0 + 1e-6) {
      throw FitError("logistic fit needs gray values inside (0,1), got " + std::to_string(p.gray));
    }
  }
}

std::array<double, 2> fit_logistic(std::span<const SamplePair> pts) {
  const auto init = fit_polynomial(pts, 1, true);
  std::array<double, 2> theta{init[0], init[1]};

  auto sse = [&](const std::array<double, 2>& th) {
    double s = 0.0;
    for (const auto& p : pts) {
      const double r = p.gray - logistic(th[0], th[1], p.temp);
      s += r * r;
    }
    return s;
  };

  double current = sse(theta);
  double lambda = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    double jtj[3] = {0.0, 0.0, 0.0};  // [aa, ab, bb]
    double jtr[2] = {0.0, 0.0};
    for (const auto& p : pts) {
      const double f = logistic(theta[0], theta[1], p.temp);
      const double df = -f * (1.0 - f);
      const double ja = df * p.temp, jb = df;
      const double r = p.gray - f;
      jtj[0] += ja * ja;
      jtj[1] += ja * jb;
      jtj[2] += jb * jb;
      jtr[0] += ja * r;
      jtr[1] += jb * r;
    }
    bool accepted = false;
    std::array<double, 2> step{0.0, 0.0};
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      const double a00 = jtj[0] * (1.0 + lambda), a11 = jtj[2] * (1.0 + lambda), a01 = jtj[1];
      const double det = a00 * a11 - a01 * a01;
      if (!(std::abs(det) > 0.0)) throw FitError("logistic Gauss-Newton system is singular");
      step = {(a11 * jtr[0] - a01 * jtr[1]) / det, (a00 * jtr[1] - a01 * jtr[0]) / det};
      const std::array<double, 2> trial{theta[0] + step[0], theta[1] + step[1]};
      const double s = sse(trial);
      if (std::isfinite(s) && s <= current) {
        theta = trial;
        current = s;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    const double size = std::abs(step[0]) + std::abs(step[1]);
    if (!accepted || size < 1e-10 * (1.0 + std::abs(theta[0]) + std::abs(theta[1]))) break;
  }
  if (!std::isfinite(theta[0]) || !std::isfinite(theta[1])) {
    throw FitError("logistic fit diverged");
  }
  return theta;
}

}  // namespace

CalibrationModel fit_model(const CalibrationSamples& samples, ModelForm form) {
  if (form == ModelForm::kLogistic) check_logistic_range(samples.points);
  samples.validate();
  if (samples.size() < coefficient_count(form)) {
    throw FitError("form " + std::string(to_string(form)) + " needs at least " +
                   std::to_string(coefficient_count(form)) + " samples");
  }
  CalibrationModel m;
  m.form = form;
  switch (form) {
    case ModelForm::kLinear: m.coefficients = fit_polynomial(samples.points, 1, false); break;
    case ModelForm::kQuadratic: m.coefficients = fit_polynomial(samples.points, 2, false); break;
    case ModelForm::kCubic: m.coefficients = fit_polynomial(samples.points, 3, false); break;
    case ModelForm::kLogistic: {
      const auto th = fit_logistic(samples.points);
      m.coefficients = {th[0], th[1]};
      break;
    }
  }
  m.mse = model_mse(m, samples);
  return m;
}

double model_mse(const CalibrationModel& model, const CalibrationSamples& samples) {
  if (samples.points.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : samples.points) {
    const double r = p.gray - model.evaluate(p.temp);
    s += r * r;
  }
  return s / static_cast<double>(samples.points.size());
}

Conversion temp_to_gray(const CalibrationModel& model, double temp_c) {
  double t = model.bounds.normalize_temp(temp_c);
  const bool clamped = t < 0.0 || t > 1.0;
  t = std::clamp(t, 0.0, 1.0);
  return {model.evaluate(t), clamped};
}

Conversion gray_to_temp(const CalibrationModel& model, double gray_norm) {
  if (!model.monotone_on_unit_interval()) {
    throw InversionError("calibration model is not monotone on [0,1]; cannot invert");
  }
  const double g0 = model.evaluate(0.0);
  const double g1 = model.evaluate(1.0);
  const double lo = std::min(g0, g1), hi = std::max(g0, g1);
  const bool clamped = gray_norm < lo || gray_norm > hi;
  const double g = std::clamp(gray_norm, lo, hi);

  double t = 0.0;
  switch (model.form) {
    case ModelForm::kLinear:
      t = (g - model.coefficients[1]) / model.coefficients[0];
      break;
    case ModelForm::kLogistic: {
      const double y = std::clamp(g, 1e-300, 1.0 - 1e-16);
      t = (std::log(1.0 / y - 1.0) - model.coefficients[1]) / model.coefficients[0];
      break;
    }
    case ModelForm::kQuadratic:
    case ModelForm::kCubic: {
      const bool increasing = g1 > g0;
      double a = 0.0, b = 1.0;
      for (int i = 0; i < 200 && b - a > 1e-13; ++i) {
        const double mid = 0.5 * (a + b);
        const double v = model.evaluate(mid);
        if ((v < g) == increasing) a = mid; else b = mid;
      }
      t = 0.5 * (a + b);
      break;
    }
  }
  t = std::clamp(t, 0.0, 1.0);
  return {model.bounds.denormalize_temp(t), clamped};
}

}  // namespace thermocal
