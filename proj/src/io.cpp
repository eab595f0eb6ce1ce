#include "msgd_lab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace msgd_lab {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

[[noreturn]] void parse_error(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::ConfigParse, "field '" + field + "': " + msg);
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) parse_error(where, "expected an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      parse_error(where.empty() ? item.key() : where + "." + item.key(), "unknown field");
    }
  }
}

const json& require(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) parse_error(where.empty() ? key : where + "." + key, "missing");
  return j.at(key);
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) parse_error(field, "expected a number");
  return j.get<double>();
}

std::uint64_t get_unsigned(const json& j, const std::string& field) {
  if (!j.is_number_unsigned()) parse_error(field, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::vector<double> get_numbers(const json& j, const std::string& field) {
  if (!j.is_array()) parse_error(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) parse_error(field, "expected a string");
  return j.get<std::string>();
}

json schedule_to_json(const Schedule& s) {
  if (const auto* a = std::get_if<AnnealAt>(&s)) {
    return {{"type", "anneal_at"}, {"iteration", a->iteration}, {"factor", a->factor}};
  }
  return {{"type", "constant"}};
}

Schedule schedule_from_json(const json& j) {
  const std::string type = get_string(require(j, "schedule", "type"), "schedule.type");
  if (type == "constant") {
    reject_unknown(j, "schedule", {"type"});
    return ConstantSchedule{};
  }
  if (type == "anneal_at") {
    reject_unknown(j, "schedule", {"type", "iteration", "factor"});
    AnnealAt a;
    a.iteration = get_unsigned(require(j, "schedule", "iteration"), "schedule.iteration");
    a.factor = get_number(require(j, "schedule", "factor"), "schedule.factor");
    return a;
  }
  parse_error("schedule.type", "expected 'constant' or 'anneal_at'");
}

json sampler_to_json(const SamplerKind& s) {
  if (const auto* g = std::get_if<TruncatedGaussian>(&s)) {
    return {{"type", "gaussian"}, {"radius_multiplier", g->radius_multiplier}};
  }
  if (const auto* r = std::get_if<RotatedScaledRademacher>(&s)) {
    return {{"type", "rotated"}, {"rotation_seed", r->rotation_seed}};
  }
  return {{"type", "rademacher"}};
}

SamplerKind sampler_from_json(const json& j) {
  const std::string type = get_string(require(j, "sampler", "type"), "sampler.type");
  if (type == "rademacher") {
    reject_unknown(j, "sampler", {"type"});
    return ScaledRademacher{};
  }
  if (type == "gaussian") {
    reject_unknown(j, "sampler", {"type", "radius_multiplier"});
    TruncatedGaussian g;
    if (j.contains("radius_multiplier")) {
      g.radius_multiplier = get_number(j.at("radius_multiplier"), "sampler.radius_multiplier");
    }
    return g;
  }
  if (type == "rotated") {
    reject_unknown(j, "sampler", {"type", "rotation_seed"});
    RotatedScaledRademacher r;
    r.rotation_seed = get_unsigned(require(j, "sampler", "rotation_seed"), "sampler.rotation_seed");
    return r;
  }
  parse_error("sampler.type", "expected 'rademacher', 'gaussian' or 'rotated'");
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }
json optional_json(const std::optional<std::uint64_t>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

json to_json(const RunConfig& c) {
  return {{"spectrum", c.spectrum.values()},
          {"mu", c.mu},
          {"eta", c.eta},
          {"schedule", schedule_to_json(c.schedule)},
          {"init", c.init},
          {"horizon", c.horizon},
          {"seed", c.seed},
          {"sampler", sampler_to_json(c.sampler)}};
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, "", {"spectrum", "mu", "eta", "schedule", "init", "horizon", "seed", "sampler"});
  RunConfig c{Spectrum(get_numbers(require(j, "", "spectrum"), "spectrum"))};
  c.mu = get_number(require(j, "", "mu"), "mu");
  c.eta = get_number(require(j, "", "eta"), "eta");
  c.init = get_numbers(require(j, "", "init"), "init");
  c.horizon = get_unsigned(require(j, "", "horizon"), "horizon");
  c.seed = get_unsigned(require(j, "", "seed"), "seed");
  c.schedule = j.contains("schedule") ? schedule_from_json(j.at("schedule")) : Schedule{};
  c.sampler = j.contains("sampler") ? sampler_from_json(j.at("sampler")) : SamplerKind{};
  return c;
}

json to_json(const Thresholds& th) {
  return {{"delta_sq", th.delta_sq},
          {"epsilon", th.epsilon},
          {"saddle_index", th.saddle_index},
          {"nu", th.nu}};
}

Thresholds thresholds_from_json(const json& j, const Thresholds& defaults) {
  reject_unknown(j, "thresholds", {"delta_sq", "epsilon", "saddle_index", "nu"});
  Thresholds th = defaults;
  if (j.contains("delta_sq")) th.delta_sq = get_number(j.at("delta_sq"), "thresholds.delta_sq");
  if (j.contains("epsilon")) th.epsilon = get_number(j.at("epsilon"), "thresholds.epsilon");
  if (j.contains("saddle_index")) {
    th.saddle_index = get_unsigned(j.at("saddle_index"), "thresholds.saddle_index");
  }
  if (j.contains("nu")) th.nu = get_number(j.at("nu"), "thresholds.nu");
  return th;
}

json to_json(const MomentTable& t) {
  json source;
  if (const auto* e = std::get_if<EstimatedMoments>(&t.source)) {
    source = {{"type", "estimated"}, {"n_samples", e->n_samples}};
  } else {
    source = {{"type", "analytic"}};
  }
  return {{"dim", t.dim}, {"alpha", t.alpha}, {"phi", t.phi}, {"source", source}};
}

MomentTable moment_table_from_json(const json& j) {
  reject_unknown(j, "", {"dim", "alpha", "phi", "source"});
  MomentTable t;
  t.dim = get_unsigned(require(j, "", "dim"), "dim");
  t.alpha = get_numbers(require(j, "", "alpha"), "alpha");
  if (t.alpha.size() != t.dim * t.dim) parse_error("alpha", "expected dim*dim entries");
  t.phi = get_number(require(j, "", "phi"), "phi");
  const json& src = require(j, "", "source");
  const std::string type = get_string(require(src, "source", "type"), "source.type");
  if (type == "estimated") {
    reject_unknown(src, "source", {"type", "n_samples"});
    t.source = EstimatedMoments{get_unsigned(require(src, "source", "n_samples"), "source.n_samples")};
  } else if (type == "analytic") {
    reject_unknown(src, "source", {"type"});
    t.source = AnalyticMoments{};
  } else {
    parse_error("source.type", "expected 'analytic' or 'estimated'");
  }
  return t;
}

json to_json(const PhaseReport& r) {
  return {{"t1", optional_json(r.t1)},
          {"t2", optional_json(r.t2)},
          {"t3", optional_json(r.t3)},
          {"n1", optional_json(r.n1)},
          {"n2", optional_json(r.n2)},
          {"n3", optional_json(r.n3)},
          {"delta", r.delta},
          {"epsilon", r.epsilon},
          {"source", r.source == PhaseSource::Detected ? "detected" : "predicted"}};
}

json to_json(const StepDiagnosticsSummary& d) {
  return {{"max_step_norm", d.max_step_norm},
          {"max_norm_sq", d.max_norm_sq},
          {"max_m_error", optional_json(d.max_m_error)},
          {"max_sample_norm", d.max_sample_norm}};
}

Experiment experiment_from_json(const json& j) {
  Experiment e{run_config_from_json(j.contains("run") ? j.at("run") : j)};
  if (!j.contains("run")) {
    e.thresholds = default_thresholds(e.run);
    return e;
  }
  reject_unknown(j, "", {"run", "thresholds", "n_runs", "record_stride", "moments", "moment_samples"});
  e.thresholds = default_thresholds(e.run);
  if (j.contains("thresholds")) e.thresholds = thresholds_from_json(j.at("thresholds"), e.thresholds);
  if (j.contains("n_runs")) e.n_runs = get_unsigned(j.at("n_runs"), "n_runs");
  if (j.contains("record_stride")) e.record_stride = get_unsigned(j.at("record_stride"), "record_stride");
  if (j.contains("moments")) {
    const std::string m = get_string(j.at("moments"), "moments");
    if (m == "analytic") {
      e.moments = MomentSource::Analytic;
    } else if (m == "estimated") {
      e.moments = MomentSource::Estimated;
    } else {
      parse_error("moments", "expected 'analytic' or 'estimated'");
    }
  }
  if (j.contains("moment_samples")) {
    e.moment_samples = get_unsigned(j.at("moment_samples"), "moment_samples");
  }
  return e;
}

json to_json(const Experiment& e) {
  return {{"run", to_json(e.run)},
          {"thresholds", to_json(e.thresholds)},
          {"n_runs", e.n_runs},
          {"record_stride", e.record_stride},
          {"moments", e.moments == MomentSource::Analytic ? "analytic" : "estimated"},
          {"moment_samples", e.moment_samples}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigParse, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::ConfigParse, path.string() + ":" + std::to_string(line) + ":" +
                                            std::to_string(col) + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  out << text;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  const auto& cfg = trajectory.config;
  const std::size_t d = cfg.spectrum.dim();
  std::ostringstream os;
  os << "k,eta";
  for (std::size_t i = 1; i <= d; ++i) os << ",h_" << i;
  os << ",|h1|_err,tail_mass\n";
  for (const auto& p : trajectory.iterates) {
    os << p.k << ',' << format_number(effective_eta(cfg.schedule, cfg.eta, p.k));
    for (double x : p.h) os << ',' << format_number(x);
    os << ',' << format_number(top_coordinate_error(p.h)) << ',' << format_number(tail_mass(p.h))
       << '\n';
  }
  return os.str();
}

std::string curves_csv(const Curves& c) {
  std::ostringstream os;
  os << "t,mean,q25,q50,q75\n";
  for (std::size_t i = 0; i < c.k.size(); ++i) {
    os << format_number(c.t[i]) << ',' << format_number(c.mean[i]) << ','
       << format_number(c.q25[i]) << ',' << format_number(c.q50[i]) << ','
       << format_number(c.q75[i]) << '\n';
  }
  return os.str();
}

std::string runs_csv(const std::vector<RunSummary>& runs) {
  auto opt = [](const std::optional<std::uint64_t>& n) {
    return n ? std::to_string(*n) : std::string();
  };
  std::ostringstream os;
  os << "run_index,n1,n2,n3,final_tail_mass,failed\n";
  for (const auto& r : runs) {
    os << r.index << ',' << opt(r.phases.n1) << ',' << opt(r.phases.n2) << ','
       << opt(r.phases.n3) << ',' << format_number(r.final_tail_mass) << ','
       << (r.failed ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string ode_csv(const OdePath& path) {
  std::ostringstream os;
  os << 't';
  const std::size_t d = path.h.empty() ? 0 : path.h.front().size();
  for (std::size_t i = 1; i <= d; ++i) os << ",H_" << i;
  os << '\n';
  for (std::size_t s = 0; s < path.t.size(); ++s) {
    os << format_number(path.t[s]);
    for (double x : path.h[s]) os << ',' << format_number(x);
    os << '\n';
  }
  return os.str();
}

std::string ou_csv(const OUPath& path) {
  std::ostringstream os;
  os << "t,value\n";
  for (std::size_t s = 0; s < path.t.size(); ++s) {
    os << format_number(path.t[s]) << ',' << format_number(path.value[s]) << '\n';
  }
  return os.str();
}

json ensemble_summary_json(const EnsembleResult& result) {
  const PhaseMedians m = phase_medians(result);
  const double eps = result.spec.thresholds.epsilon;
  return {{"base", to_json(result.spec.base)},
          {"thresholds", to_json(result.spec.thresholds)},
          {"n_runs", result.spec.n_runs},
          {"record_stride", result.spec.record_stride},
          {"failure_rate", result.failure_rate},
          {"success_rate", result.success_rate(eps)},
          {"mean_final_tail_mass", result.mean_final_tail_mass()},
          {"median_n1", optional_json(m.n1)},
          {"median_n2", optional_json(m.n2)},
          {"median_n3", optional_json(m.n3)}};
}

std::string svg_line_chart(const std::vector<ChartSeries>& series, const ChartOptions& options) {
  const double left = 80, right = 20, top = 40, bottom = 60;
  const double w = options.width, h = options.height;
  const double plot_w = w - left - right, plot_h = h - top - bottom;

  auto ty = [&](double y) { return options.log_y ? std::log10(y) : y; };
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (options.log_y && s.y[i] <= 0.0)) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, ty(s.y[i]));
      y_max = std::max(y_max, ty(s.y[i]));
    }
  }
  if (!std::isfinite(x_min)) x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  if (x_max == x_min) x_max = x_min + 1;
  if (options.log_y) {
    y_min = std::floor(y_min);
    y_max = std::ceil(y_max);
  }
  if (y_max == y_min) y_max = y_min + 1;

  auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return top + (1.0 - (ty(y) - y_min) / (y_max - y_min)) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << options.title << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
     << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int x_ticks = 5;
  for (int i = 0; i <= x_ticks; ++i) {
    const double x = x_min + (x_max - x_min) * i / x_ticks;
    os << "<text x=\"" << px(x) << "\" y=\"" << top + plot_h + 18
       << "\" text-anchor=\"middle\">" << format_number(std::round(x * 1e6) / 1e6) << "</text>\n";
  }
  if (options.log_y) {
    for (int e = static_cast<int>(y_min); e <= static_cast<int>(y_max); ++e) {
      const double y = top + (1.0 - (e - y_min) / (y_max - y_min)) * plot_h;
      os << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << y << "\" y2=\""
         << y << "\" stroke=\"#dddddd\"/>\n";
      os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e
         << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 5; ++i) {
      const double v = y_min + (y_max - y_min) * i / 5;
      const double y = top + (1.0 - (v - y_min) / (y_max - y_min)) * plot_h;
      os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
         << format_number(std::round(v * 1e6) / 1e6) << "</text>\n";
    }
  }
  os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">"
     << options.x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << top + plot_h / 2 << ")\">" << options.y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    std::ostringstream pts;
    auto flush = [&] {
      if (!pts.str().empty()) {
        os << "<polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"1.2\" points=\""
           << pts.str() << "\"/>\n";
        pts.str("");
      }
    };
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      if (!std::isfinite(ser.y[i]) || (options.log_y && ser.y[i] <= 0.0)) {
        flush();
        continue;
      }
      pts << format_number(std::round(px(ser.x[i]) * 100) / 100) << ','
          << format_number(std::round(py(ser.y[i]) * 100) / 100) << ' ';
    }
    flush();
    const double ly = top + 16 + 16 * static_cast<double>(s);
    os << "<line x1=\"" << left + plot_w - 150 << "\" x2=\"" << left + plot_w - 130 << "\" y1=\""
       << ly << "\" y2=\"" << ly << "\" stroke=\"" << ser.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + plot_w - 125 << "\" y=\"" << ly + 4 << "\">" << ser.name
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace msgd_lab
