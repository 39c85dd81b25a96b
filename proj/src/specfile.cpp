#include "isomarket/specfile.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace isomarket::specfile {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw InvalidInput("spec error at " + path + ": " + what);
}

void require_keys(const json& node, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!node.is_object()) bad(path, "expected an object");
  for (const auto& item : node.items())
    if (!allowed.contains(item.key()))
      bad(path + "/" + item.key(), "unknown field");
}

double number_at(const json& node, const std::string& path) {
  if (!node.is_number()) bad(path, "expected a number");
  return node.get<double>();
}

std::vector<double> vector_at(const json& node, const std::string& path) {
  if (!node.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(node.size());
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(number_at(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

linalg::Matrix matrix_at(const json& node, const std::string& path) {
  if (!node.is_array() || node.empty()) bad(path, "expected a matrix");
  if (node[0].is_number()) {
    // A flat array is a diagonal matrix.
    const auto diag = vector_at(node, path);
    linalg::Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
  }
  const std::size_t rows = node.size();
  std::vector<std::vector<double>> data;
  for (std::size_t r = 0; r < rows; ++r)
    data.push_back(vector_at(node[r], path + "[" + std::to_string(r) + "]"));
  const std::size_t cols = data.front().size();
  linalg::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (data[r].size() != cols) bad(path, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = data[r][c];
  }
  return m;
}

void parse_finite(const json& node, MarketSpecFile& spec) {
  require_keys(node, "finite_market",
               {"atoms", "p0", "measures", "scale_c", "payoff"});
  if (!node.contains("p0")) bad("finite_market", "missing p0");
  spec.finite_space.base.weights = vector_at(node["p0"], "finite_market/p0");

  if (node.contains("atoms")) {
    if (!node["atoms"].is_array()) bad("finite_market/atoms", "expected array");
    for (const auto& a : node["atoms"]) {
      if (!a.is_string()) bad("finite_market/atoms", "labels must be strings");
      spec.finite_space.base.atom_labels.push_back(a.get<std::string>());
    }
  } else {
    for (std::size_t i = 0; i < spec.finite_space.base.weights.size(); ++i)
      spec.finite_space.base.atom_labels.push_back("a" + std::to_string(i));
  }

  if (node.contains("measures")) {
    if (!node["measures"].is_array())
      bad("finite_market/measures", "expected array of arrays");
    for (std::size_t m = 0; m < node["measures"].size(); ++m)
      spec.finite_space.extra_measures.push_back(vector_at(
          node["measures"][m], "finite_market/measures[" + std::to_string(m) + "]"));
  }

  if (node.contains("scale_c"))
    spec.scale_c = number_at(node["scale_c"], "finite_market/scale_c");
  if (node.contains("payoff")) {
    finprob::Payoff p;
    p.values = vector_at(node["payoff"], "finite_market/payoff");
    spec.payoff = std::move(p);
  }

  const auto report = finprob::validate_space(spec.finite_space);
  if (!report.pass) bad("finite_market", report.violations.front());
  if (spec.payoff && spec.payoff->size() != spec.finite_space.atom_count())
    bad("finite_market/payoff", "length does not match atom count");
}

void parse_gaussian(const json& node, MarketSpecFile& spec) {
  require_keys(node, "gaussian", {"mean", "covariance", "cost"});
  for (const char* field : {"mean", "covariance", "cost"})
    if (!node.contains(field)) bad("gaussian", std::string("missing ") + field);
  spec.gaussian.mean = vector_at(node["mean"], "gaussian/mean");
  spec.gaussian.cost = vector_at(node["cost"], "gaussian/cost");
  spec.gaussian.covariance = matrix_at(node["covariance"], "gaussian/covariance");
  gauss::require_valid(spec.gaussian);
}

ctsmkt::Schedule parse_schedule(const json& node, const std::string& path) {
  require_keys(node, path, {"times", "values"});
  ctsmkt::Schedule s;
  if (!node.contains("times") || !node.contains("values"))
    bad(path, "schedule needs times and values");
  s.times = vector_at(node["times"], path + "/times");
  s.values = vector_at(node["values"], path + "/values");
  if (s.times.size() != s.values.size() || s.times.empty())
    bad(path, "times and values must align");
  if (s.times.front() != 0.0) bad(path, "schedule must start at time 0");
  for (std::size_t i = 1; i < s.times.size(); ++i)
    if (!(s.times[i] > s.times[i - 1])) bad(path, "times must increase");
  return s;
}

void parse_sde(const json& node, MarketSpecFile& spec) {
  require_keys(node, "sde",
               {"family", "rate", "horizon", "x0", "drift", "vol", "ampr",
                "a_schedule", "vol_family"});
  if (!node.contains("family")) bad("sde", "missing family");
  const std::string family = node["family"].get<std::string>();
  const double rate =
      node.contains("rate") ? number_at(node["rate"], "sde/rate") : 0.0;
  if (!node.contains("horizon")) bad("sde", "missing horizon");
  const double horizon = number_at(node["horizon"], "sde/horizon");

  auto need = [&node](const char* field) {
    if (!node.contains(field)) bad("sde", std::string("missing ") + field);
    return true;
  };

  if (family == "gbm") {
    need("drift"), need("vol"), need("x0");
    spec.sde = ctsmkt::make_gbm(vector_at(node["drift"], "sde/drift"),
                                matrix_at(node["vol"], "sde/vol"), rate, horizon,
                                vector_at(node["x0"], "sde/x0"));
  } else if (family == "bachelier-constant") {
    need("drift"), need("vol"), need("x0");
    spec.sde = ctsmkt::make_bachelier(vector_at(node["drift"], "sde/drift"),
                                      matrix_at(node["vol"], "sde/vol"), rate,
                                      horizon, vector_at(node["x0"], "sde/x0"));
  } else if (family == "canonical-bachelier") {
    ctsmkt::Schedule schedule;
    if (node.contains("a_schedule"))
      schedule = parse_schedule(node["a_schedule"], "sde/a_schedule");
    else if (node.contains("ampr"))
      schedule = ctsmkt::Schedule::constant(number_at(node["ampr"], "sde/ampr"));
    else
      bad("sde", "canonical-bachelier needs ampr or a_schedule");
    std::size_t dim = 1;
    if (node.contains("x0")) dim = vector_at(node["x0"], "sde/x0").size();
    spec.sde = ctsmkt::make_canonical_bachelier(dim, schedule, rate, horizon);
  } else if (family == "drift-adjusted") {
    need("vol"), need("x0"), need("ampr");
    const std::string vol_family =
        node.contains("vol_family") ? node["vol_family"].get<std::string>()
                                    : "gbm";
    ctsmkt::SDEModel base;
    const auto x0 = vector_at(node["x0"], "sde/x0");
    const auto vol = matrix_at(node["vol"], "sde/vol");
    const linalg::Vector zero_drift(x0.size(), 0.0);
    if (vol_family == "gbm")
      base = ctsmkt::make_gbm(zero_drift, vol, rate, horizon, x0);
    else if (vol_family == "bachelier-constant")
      base = ctsmkt::make_bachelier(zero_drift, vol, rate, horizon, x0);
    else
      bad("sde/vol_family", "unknown family");
    spec.sde = ctsmkt::drift_adjust(base, number_at(node["ampr"], "sde/ampr"));
  } else {
    bad("sde/family", "unknown family: " + family);
  }
}

ctsmkt::ClaimSpec parse_claim(const json& node, const std::string& path) {
  require_keys(node, path,
               {"kind", "value", "intercept", "weights", "asset", "strike",
                "lower", "upper", "coefficients"});
  if (!node.contains("kind")) bad(path, "missing kind");
  const std::string kind = node["kind"].get<std::string>();
  ctsmkt::ClaimSpec claim;
  using Kind = ctsmkt::ClaimSpec::Kind;
  if (kind == "constant") {
    claim.kind = Kind::constant;
    if (node.contains("value")) claim.value = number_at(node["value"], path);
  } else if (kind == "linear") {
    claim.kind = Kind::linear;
    if (node.contains("intercept"))
      claim.intercept = number_at(node["intercept"], path);
    if (!node.contains("weights")) bad(path, "linear claim needs weights");
    claim.weights = vector_at(node["weights"], path + "/weights");
  } else if (kind == "call" || kind == "put") {
    claim.kind = kind == "call" ? Kind::call : Kind::put;
    if (node.contains("asset"))
      claim.asset = static_cast<std::size_t>(number_at(node["asset"], path));
    if (!node.contains("strike")) bad(path, "needs strike");
    claim.strike = number_at(node["strike"], path + "/strike");
  } else if (kind == "indicator") {
    claim.kind = Kind::indicator;
    if (node.contains("asset"))
      claim.asset = static_cast<std::size_t>(number_at(node["asset"], path));
    if (!node.contains("lower") || !node.contains("upper"))
      bad(path, "indicator needs lower and upper");
    claim.lower = number_at(node["lower"], path + "/lower");
    claim.upper = number_at(node["upper"], path + "/upper");
  } else if (kind == "log-q-polynomial") {
    claim.kind = Kind::log_q_polynomial;
    if (!node.contains("coefficients")) bad(path, "needs coefficients");
    claim.coefficients = vector_at(node["coefficients"], path + "/coefficients");
  } else if (kind == "call-on-q") {
    claim.kind = Kind::call_on_q;
    if (!node.contains("strike")) bad(path, "needs strike");
    claim.strike = number_at(node["strike"], path + "/strike");
  } else {
    bad(path + "/kind", "unknown claim kind: " + kind);
  }
  return claim;
}

void parse_run(const json& node, RunConfig& run) {
  require_keys(node, "run",
               {"dt", "steps", "paths", "seed", "casino_grid", "antithetic"});
  if (node.contains("dt")) run.dt = number_at(node["dt"], "run/dt");
  if (node.contains("steps"))
    run.steps = static_cast<std::size_t>(number_at(node["steps"], "run/steps"));
  if (node.contains("paths"))
    run.paths = static_cast<std::size_t>(number_at(node["paths"], "run/paths"));
  if (node.contains("seed"))
    run.seed = static_cast<std::uint64_t>(number_at(node["seed"], "run/seed"));
  if (node.contains("casino_grid"))
    run.casino_grid =
        static_cast<std::size_t>(number_at(node["casino_grid"], "run/casino_grid"));
  if (node.contains("antithetic")) {
    if (!node["antithetic"].is_boolean())
      bad("run/antithetic", "expected a boolean");
    run.antithetic = node["antithetic"].get<bool>();
  }
}

}  // namespace

onep::CompleteMarket1P MarketSpecFile::finite_market() const {
  if (kind != MarketKind::finite)
    throw InvalidInput("spec has no finite market block");
  if (finite_space.measure_count() != 1)
    throw InvalidInput("pricing needs exactly one extra measure Q");
  onep::CompleteMarket1P market;
  market.space = finite_space;
  market.scale_c = scale_c.value_or(1.0);
  return market;
}

MarketSpecFile parse_spec_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("spec is not valid JSON: ") + e.what());
  }
  require_keys(root, "",
               {"version", "finite_market", "gaussian", "sde", "claims", "run"});
  if (!root.contains("version") || !root["version"].is_string() ||
      root["version"].get<std::string>() != "1")
    bad("version", "spec files must declare \"version\": \"1\"");

  const int blocks = int(root.contains("finite_market")) +
                     int(root.contains("gaussian")) + int(root.contains("sde"));
  if (blocks != 1) bad("", "exactly one market block is required");

  MarketSpecFile spec;
  if (root.contains("finite_market")) {
    spec.kind = MarketKind::finite;
    parse_finite(root["finite_market"], spec);
  } else if (root.contains("gaussian")) {
    spec.kind = MarketKind::gaussian;
    parse_gaussian(root["gaussian"], spec);
  } else {
    spec.kind = MarketKind::sde;
    parse_sde(root["sde"], spec);
  }

  if (root.contains("claims")) {
    if (!root["claims"].is_array()) bad("claims", "expected an array");
    for (std::size_t i = 0; i < root["claims"].size(); ++i)
      spec.claims.push_back(
          parse_claim(root["claims"][i], "claims[" + std::to_string(i) + "]"));
  }
  if (root.contains("run")) parse_run(root["run"], spec.run);

  if (spec.kind == MarketKind::sde)
    for (const auto& claim : spec.claims) claim.validate(spec.sde.dim);
  return spec;
}

MarketSpecFile load_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open spec file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_spec_json(buffer.str());
}

}  // namespace isomarket::specfile
