// Copyright 2026 the hmskm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hmskm/model_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hmskm {

using nlohmann::json;

ModelBundle bundle_from_sis(const SISParams& p) {
  SISModel m = build_sis(p);
  ModelBundle b;
  b.system = std::move(m.system);
  b.regimes = std::move(m.regimes);
  b.init = std::move(m.init);
  b.prior = std::move(m.prior);
  b.status = ParamStatus::all_estimated(2);
  b.horizon = m.horizon;
  return b;
}

namespace {

SISParams sis_with_overrides(const json& overrides) {
  SISParams p;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    const std::string& k = it.key();
    if (k == "N") p.N = it.value().get<double>();
    else if (k == "eta") p.eta = it.value().get<double>();
    else if (k == "theta1") p.theta1 = it.value().get<double>();
    else if (k == "SF") p.SF = it.value().get<double>();
    else if (k == "theta2") p.theta2 = it.value().get<double>();
    else if (k == "mu12") p.mu12 = it.value().get<double>();
    else if (k == "mu21") p.mu21 = it.value().get<double>();
    else if (k == "I0") p.I0 = it.value().get<double>();
    else if (k == "M0") p.M0 = it.value().get<int>() - 1;  // 1-based outside
    else if (k == "T") p.T = it.value().get<double>();
    else if (k == "prior_a1") p.prior_a1 = it.value().get<double>();
    else if (k == "prior_b1") p.prior_b1 = it.value().get<double>();
    else if (k == "prior_a2") p.prior_a2 = it.value().get<double>();
    else if (k == "prior_b2") p.prior_b2 = it.value().get<double>();
    else
      throw std::invalid_argument("unknown SIS override '" + k + "'");
  }
  return p;
}

ModelBundle load_explicit(const json& j) {
  ModelBundle b;
  ReactionSystem& sys = b.system;

  const auto& species = j.at("species");
  sys.species = static_cast<int>(species.size());

  const auto& gen = j.at("generator");
  const int R = static_cast<int>(gen.size());
  sys.regimes = R;
  b.regimes.regimes = R;
  b.regimes.G = Eigen::MatrixXd(R, R);
  for (int i = 0; i < R; ++i) {
    if (static_cast<int>(gen[i].size()) != R)
      throw std::invalid_argument("generator must be square");
    for (int c = 0; c < R; ++c) b.regimes.G(i, c) = gen[i][c].get<double>();
  }

  std::vector<double> prior_a, prior_b;
  for (const auto& pj : j.at("params")) {
    sys.param_name.push_back(pj.at("name").get<std::string>());
    sys.params.base.push_back(pj.at("value").get<double>());
    const auto& prior = pj.at("prior");
    prior_a.push_back(prior.at(0).get<double>());
    prior_b.push_back(prior.at(1).get<double>());
  }
  const int P = sys.param_count();
  b.status = ParamStatus::all_estimated(P);
  {
    int p = 0;
    for (const auto& pj : j.at("params")) {
      if (pj.value("known", false)) b.status.known[p] = sys.params.base[p];
      ++p;
    }
  }
  b.prior = make_stats(std::move(prior_a), std::move(prior_b));

  auto param_index = [&](const std::string& name) {
    for (int p = 0; p < P; ++p)
      if (sys.param_name[p] == name) return p;
    throw std::invalid_argument("reaction rate refers to unknown parameter '" +
                                name + "'");
  };

  for (const auto& rj : j.at("reactions")) {
    sys.reaction_name.push_back(rj.value("name", ""));
    StateVec delta;
    for (const auto& d : rj.at("delta"))
      delta.push_back(d.get<std::int64_t>());
    sys.delta.push_back(std::move(delta));

    const auto& law = rj.at("law");
    std::map<std::string, double> law_params;
    for (auto it = law.begin(); it != law.end(); ++it)
      if (it.key() != "name") law_params[it.key()] = it.value().get<double>();
    sys.hazard.push_back(
        make_hazard(law.at("name").get<std::string>(), law_params));

    const auto& rate = rj.at("rate");
    const int p = param_index(rate.at("param").get<std::string>());
    std::vector<double> coef(R, 1.0);
    if (rate.contains("coef")) {
      const auto& cj = rate.at("coef");
      if (cj.is_number()) {
        std::fill(coef.begin(), coef.end(), cj.get<double>());
      } else {
        if (static_cast<int>(cj.size()) != R)
          throw std::invalid_argument(
              "rate coef must be a scalar or one value per regime");
        for (int i = 0; i < R; ++i) coef[i] = cj[i].get<double>();
      }
    }
    for (int i = 0; i < R; ++i) sys.tie.push_back({p, coef[i]});
  }

  const auto& init = j.at("initial");
  b.init.t = init.value("t", 0.0);
  b.init.m = init.at("regime").get<int>() - 1;
  for (const auto& v : init.at("x")) b.init.x.push_back(v.get<std::int64_t>());
  if (static_cast<int>(b.init.x.size()) != sys.species)
    throw std::invalid_argument("initial state size mismatch");

  b.horizon = j.at("horizon").get<double>();

  sys.validate();
  b.regimes.validate();
  if (b.init.m < 0 || b.init.m >= R)
    throw std::invalid_argument("initial regime out of range");
  return b;
}

}  // namespace

ModelBundle load_model(const std::string& json_text) {
  const json j = json::parse(json_text);
  if (j.contains("preset")) {
    const std::string preset = j.at("preset").get<std::string>();
    if (preset != "sis")
      throw std::invalid_argument("unknown preset '" + preset + "'");
    ModelBundle b =
        bundle_from_sis(sis_with_overrides(j.value("overrides", json::object())));
    if (j.contains("known")) {
      for (const auto& name : j.at("known")) {
        const std::string n = name.get<std::string>();
        bool found = false;
        for (int p = 0; p < b.system.param_count(); ++p)
          if (b.system.param_name[p] == n) {
            b.status.known[p] = b.system.params.base[p];
            found = true;
          }
        if (!found)
          throw std::invalid_argument("unknown parameter in 'known': " + n);
      }
    }
    return b;
  }
  return load_explicit(j);
}

ModelBundle load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

std::string save_model(const ModelBundle& b) {
  const ReactionSystem& sys = b.system;
  if (b.regimes.fn)
    throw std::invalid_argument(
        "state-dependent generators are not serializable");

  json j;
  for (int s = 0; s < sys.species; ++s)
    j["species"].push_back("x" + std::to_string(s + 1));

  j["initial"]["t"] = b.init.t;
  j["initial"]["regime"] = b.init.m + 1;
  for (auto v : b.init.x) j["initial"]["x"].push_back(v);
  j["horizon"] = b.horizon;

  for (int i = 0; i < sys.regimes; ++i) {
    json row = json::array();
    for (int c = 0; c < sys.regimes; ++c) row.push_back(b.regimes.G(i, c));
    j["generator"].push_back(std::move(row));
  }

  for (int p = 0; p < sys.param_count(); ++p) {
    json pj;
    pj["name"] = sys.param_name[p];
    pj["value"] = sys.params.base[p];
    pj["prior"] = {b.prior.a[p], b.prior.b_value(p)};
    if (b.status.is_known(p)) pj["known"] = true;
    j["params"].push_back(std::move(pj));
  }

  for (int q = 0; q < sys.reactions(); ++q) {
    json rj;
    rj["name"] = sys.reaction_name[q];
    for (auto d : sys.delta[q]) rj["delta"].push_back(d);
    rj["law"]["name"] = sys.hazard[q].name;
    for (const auto& [k, v] : sys.hazard[q].params) rj["law"][k] = v;
    rj["rate"]["param"] = sys.param_name[sys.tie_at(q, 0).param];
    json coef = json::array();
    for (int i = 0; i < sys.regimes; ++i) {
      if (sys.tie_at(q, i).param != sys.tie_at(q, 0).param)
        throw std::invalid_argument(
            "per-regime parameter switching is not serializable; use "
            "coefficients on one shared parameter");
      coef.push_back(sys.tie_at(q, i).coef);
    }
    rj["rate"]["coef"] = std::move(coef);
    j["reactions"].push_back(std::move(rj));
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Event-path CSV.
// ---------------------------------------------------------------------------

namespace {

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_event_path(std::ostream& out, const EventPath& path) {
  char buf[64];
  auto put = [&](double t, const char* kind, int value1) {
    std::snprintf(buf, sizeof buf, "%.17g,%s,%d\n", t, kind, value1);
    out << buf;
  };
  out << "time,kind,value\n";
  put(path.t0, "regime", path.m0 + 1);
  std::size_t ie = 0;
  std::size_t is = 0;
  const std::size_t ne = path.events.size();
  const std::size_t ns = path.regime_path ? path.regime_path->size() : 0;
  while (ie < ne || is < ns) {
    // A switch at the same instant as an event precedes it, matching the
    // replay order.
    if (is < ns &&
        (ie == ne || (*path.regime_path)[is].time <= path.events[ie].time)) {
      put((*path.regime_path)[is].time, "regime",
          (*path.regime_path)[is].regime + 1);
      ++is;
    } else {
      put(path.events[ie].time, "event", path.events[ie].reaction + 1);
      ++ie;
    }
  }
}

EventPath read_event_path(std::istream& in, std::optional<double> horizon) {
  EventPath path;
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("empty event-path input");
  if (trimmed(line) != "time,kind,value")
    throw std::invalid_argument(
        "event-path input must start with the header 'time,kind,value'");

  bool first_row = true;
  bool saw_regime = false;
  double last_time = 0.0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trimmed(line);
    if (row.empty()) continue;
    const auto c1 = row.find(',');
    const auto c2 = row.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::invalid_argument("malformed event-path row at line " +
                                  std::to_string(lineno));
    const std::string ts = trimmed(row.substr(0, c1));
    const std::string kind = trimmed(row.substr(c1 + 1, c2 - c1 - 1));
    const std::string vs = trimmed(row.substr(c2 + 1));
    std::size_t used = 0;
    const double t = std::stod(ts, &used);
    if (used != ts.size())
      throw std::invalid_argument("bad time at line " + std::to_string(lineno));
    const int value1 = std::stoi(vs);
    if (value1 < 1)
      throw std::invalid_argument("indices are 1-based; got " + vs +
                                  " at line " + std::to_string(lineno));
    if (!first_row && t < last_time)
      throw std::invalid_argument("times must be nondecreasing at line " +
                                  std::to_string(lineno));

    if (kind == "regime") {
      if (first_row) {
        path.t0 = t;
        path.m0 = value1 - 1;
      } else {
        if (!saw_regime) path.regime_path.emplace();
        path.regime_path->push_back({t, value1 - 1});
        saw_regime = true;
      }
    } else if (kind == "event") {
      path.events.push_back({t, value1 - 1});
    } else {
      throw std::invalid_argument("unknown kind '" + kind + "' at line " +
                                  std::to_string(lineno));
    }
    last_time = t;
    first_row = false;
  }
  path.t_end = horizon ? *horizon : last_time;
  return path;
}

EventPath read_event_path_file(const std::string& path,
                               std::optional<double> horizon) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event-path file: " + path);
  return read_event_path(in, horizon);
}

void write_event_path_file(const std::string& path, const EventPath& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_event_path(out, p);
  if (!out) throw std::runtime_error("failed writing event path: " + path);
}

}  // namespace hmskm
