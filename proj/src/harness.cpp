#include "tsq/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "tsq/analytics.hpp"
#include "tsq/common.hpp"

namespace tsq::harness {

using nlohmann::json;

namespace {

const std::set<std::string> kModes = {"srq", "stq", "ssq", "ssq_baseline"};
const std::set<std::string> kCostModes = {"analytic", "measured"};
const std::set<std::string> kDataKinds = {"uniform", "distinct_bucket", "group_antichain",
                                          "lattice"};

template <typename T>
void read_field(const json& j, const char* key, T* out) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& known, const char* where) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!known.count(k))
      throw ConfigError(std::string("unknown key '") + k + "' in " + where);
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  require_config(n >= 2, "a cell needs the storage node and at least one sensor");
  require_config(d >= 1 && d <= 16, "dimensions must lie in [1, 16]");
  require_config(w >= 2, "at least two intervals per dimension");
  require_config(hi > lo, "empty attribute domain");
  require_config(epochs >= 1, "at least one epoch");
  crypto::check_width(lh);
  crypto::check_width(lk);
  require_config(kModes.count(mode), "mode must be srq | stq | ssq | ssq_baseline");
  require_config(kCostModes.count(cost_mode), "cost_mode must be analytic | measured");
  require_config(kDataKinds.count(data.kind),
                 "data.kind must be uniform | distinct_bucket | group_antichain | lattice");
  if (uniform_groups) {
    require_config(mu >= 1 && (n - 1) % mu == 0, "uniform groups need mu dividing n-1");
  }
  require_config(xi1 >= 1, "at least one reporter per group");
  require_config(xi3 >= 1 && xi3 <= xi1, "seed quorum must lie in [1, xi1]");
  if (data.kind == "group_antichain") {
    require_config(d == 2, "antichain data generation is two-dimensional");
    require_config(uniform_groups, "antichain data generation needs uniform groups");
    require_config(y % n == 0 && y / n >= 1, "antichain data generation needs n | y");
    uint32_t q = y / n;
    uint32_t gs = (n - 1) / mu;
    require_config(w >= q * gs, "antichain needs w >= (y/n) * group size");
  }
  require_config(query.lo.size() == query.hi.size(), "query lo/hi length mismatch");
  require_config(query.lo.empty() || query.lo.size() == d, "query rectangle dimension mismatch");
  require_config(query.coeffs.empty() || query.coeffs.size() == d,
                 "ranking coefficient dimension mismatch");
  require_config(query.k >= 1, "top-k needs k >= 1");
  require_config(baseline_threshold >= 0 && baseline_threshold <= 1,
                 "baseline threshold is a fraction of the key space");
  require_config(bogus_fraction >= 0 && bogus_fraction < 1, "bogus fraction must lie in [0, 1)");
  require_config(field_sigma > 0, "field noise must be positive");
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario config is not valid JSON: ") + e.what());
  }
  require_config(j.is_object(), "scenario config must be a JSON object");
  check_keys(j,
             {"seed", "n", "d", "w", "lo", "hi", "y", "epochs", "lh", "lk", "lP", "ld", "lid",
              "radius", "mu", "uniform_groups", "xi1", "xi2", "xi3", "m", "ssq_modified",
              "baseline_threshold", "mode", "cost_mode", "data", "query", "field_sigma",
              "redundancy_eps", "bogus_fraction"},
             "scenario config");

  ScenarioConfig c;
  read_field(j, "seed", &c.seed);
  read_field(j, "n", &c.n);
  read_field(j, "d", &c.d);
  read_field(j, "w", &c.w);
  read_field(j, "lo", &c.lo);
  read_field(j, "hi", &c.hi);
  read_field(j, "y", &c.y);
  read_field(j, "epochs", &c.epochs);
  read_field(j, "lh", &c.lh);
  read_field(j, "lk", &c.lk);
  read_field(j, "lP", &c.lP);
  read_field(j, "ld", &c.ld);
  read_field(j, "lid", &c.lid);
  read_field(j, "radius", &c.radius);
  read_field(j, "mu", &c.mu);
  read_field(j, "uniform_groups", &c.uniform_groups);
  read_field(j, "xi1", &c.xi1);
  read_field(j, "xi2", &c.xi2);
  read_field(j, "xi3", &c.xi3);
  read_field(j, "m", &c.m);
  read_field(j, "ssq_modified", &c.ssq_modified);
  read_field(j, "baseline_threshold", &c.baseline_threshold);
  read_field(j, "mode", &c.mode);
  read_field(j, "cost_mode", &c.cost_mode);
  read_field(j, "field_sigma", &c.field_sigma);
  read_field(j, "redundancy_eps", &c.redundancy_eps);
  read_field(j, "bogus_fraction", &c.bogus_fraction);
  if (j.contains("data")) {
    const json& dj = j.at("data");
    require_config(dj.is_object(), "data must be an object");
    check_keys(dj, {"kind"}, "data");
    read_field(dj, "kind", &c.data.kind);
  }
  if (j.contains("query")) {
    const json& qj = j.at("query");
    require_config(qj.is_object(), "query must be an object");
    check_keys(qj, {"kind", "lo", "hi", "k", "coeffs"}, "query");
    read_field(qj, "kind", &c.query.kind);
    read_field(qj, "lo", &c.query.lo);
    read_field(qj, "hi", &c.query.hi);
    read_field(qj, "k", &c.query.k);
    read_field(qj, "coeffs", &c.query.coeffs);
  }
  c.validate();
  return c;
}

namespace {

buckets::BucketingScheme make_scheme(const ScenarioConfig& cfg) {
  return buckets::BucketingScheme::uniform(
      buckets::AttributeDomain::continuous(cfg.lo, cfg.hi, cfg.w), cfg.d);
}

topo::GroupPartition make_groups(const ScenarioConfig& cfg, const topo::Cell& cell) {
  if (cfg.uniform_groups) return topo::build_groups_uniform(cfg.n, cfg.mu);
  return topo::build_groups(cell);
}

}  // namespace

World::World(const ScenarioConfig& cfg)
    : prf(Rng(cfg.seed).derive("prf").seed()),
      scheme(make_scheme(cfg)),
      cell(topo::make_cell(cfg.n, Rng(cfg.seed).derive("topo"), cfg.radius)),
      tree(topo::build_tree(cell)),
      groups(make_groups(cfg, cell)),
      registry(proofs::PrimeRegistry::build(scheme, cfg.n)),
      schedule(prf, scheme, cfg.n, cfg.lk, Rng(cfg.seed).derive("keys")) {
  states.reserve(cfg.n);
  for (NodeId i = 0; i < cfg.n; ++i)
    states.push_back(proofs::NodeKeyState::initial(scheme, i, cfg.lk, Rng(cfg.seed).derive("keys")));
}

std::vector<buckets::Datum> generate_data(const ScenarioConfig& cfg, const World& w, Epoch t,
                                          Rng& rng) {
  std::vector<buckets::Datum> out;
  uint32_t sensors = cfg.n - 1;
  auto midpoint_attrs = [&](const buckets::BucketId& b) {
    std::vector<double> attrs(cfg.d);
    for (uint16_t g = 0; g < cfg.d; ++g) attrs[g] = w.scheme.domains[g].midpoint(b.v[g]);
    return attrs;
  };

  if (cfg.data.kind == "uniform") {
    out.reserve(cfg.y);
    for (uint32_t k = 0; k < cfg.y; ++k) {
      buckets::Datum x;
      x.origin = 1 + static_cast<NodeId>(rng.below(sensors));
      x.epoch = t;
      x.attrs.resize(cfg.d);
      for (uint16_t g = 0; g < cfg.d; ++g) x.attrs[g] = cfg.lo + rng.real01() * (cfg.hi - cfg.lo);
      out.push_back(std::move(x));
    }
  } else if (cfg.data.kind == "distinct_bucket") {
    uint64_t nb = w.scheme.bucket_count();
    out.reserve(cfg.y);
    for (uint32_t k = 0; k < cfg.y; ++k) {
      buckets::Datum x;
      x.origin = 1 + (k % sensors);
      x.epoch = t;
      auto b = buckets::BucketId::from_dense_rank(w.scheme, (x.origin - 1) % nb);
      x.attrs = midpoint_attrs(b);
      out.push_back(std::move(x));
    }
  } else if (cfg.data.kind == "group_antichain") {
    uint32_t q = cfg.y / cfg.n;
    for (uint32_t g = 0; g < w.groups.mu; ++g) {
      const auto& members = w.groups.members[g];
      uint32_t gs = static_cast<uint32_t>(members.size());
      for (uint32_t jm = 0; jm < gs; ++jm) {
        for (uint32_t r = 0; r < q; ++r) {
          uint32_t xpos = jm * q + r;
          buckets::BucketId b;
          b.v = {static_cast<uint16_t>(xpos + 1), static_cast<uint16_t>(q * gs - xpos)};
          buckets::Datum x;
          x.origin = members[jm];
          x.epoch = t;
          x.attrs = midpoint_attrs(b);
          out.push_back(std::move(x));
        }
      }
    }
  } else if (cfg.data.kind == "lattice") {
    out.reserve(cfg.y);
    for (uint32_t k = 0; k < cfg.y; ++k) {
      buckets::Datum x;
      x.origin = 1 + static_cast<NodeId>(rng.below(sensors));
      x.epoch = t;
      x.attrs.resize(cfg.d);
      for (uint16_t g = 0; g < cfg.d; ++g) {
        uint16_t nu = 1 + static_cast<uint16_t>(rng.below(cfg.w));
        x.attrs[g] = w.scheme.domains[g].midpoint(nu);
      }
      out.push_back(std::move(x));
    }
  } else {
    throw ConfigError("unknown data model: " + cfg.data.kind);
  }
  return out;
}

proofs::ContributionTable truth_table(const std::vector<buckets::Datum>& data,
                                      const buckets::BucketingScheme& scheme, uint32_t n) {
  proofs::ContributionTable table;
  std::set<NodeId> seen;
  for (const auto& x : data) {
    table.add(x.origin, buckets::bucketize(x.attrs, scheme));
    seen.insert(x.origin);
  }
  for (NodeId i = 0; i < n; ++i)
    if (!seen.count(i)) table.add(i, proofs::empty_label());
  return table;
}

Wide threshold_from_fraction(double fraction, uint16_t bits) {
  require_config(fraction >= 0 && fraction <= 1, "threshold fraction must lie in [0, 1]");
  Wide space = Wide(1) << bits;
  auto num = static_cast<uint64_t>(std::llround(fraction * 9007199254740992.0));  // 2^53
  return (space * num) >> 53;
}

bool RunMetrics::all_accepted() const {
  for (const auto& e : epochs)
    if (e.verdict != srq::Verdict::Accept) return false;
  return true;
}

std::string RunMetrics::to_json() const {
  json j;
  j["total_bits"] = total_bits;
  j["channels"] = channel_bits;
  j["extra"] = extra;
  json eps = json::array();
  for (const auto& e : epochs) {
    json ej;
    ej["epoch"] = e.epoch;
    ej["verdict"] = srq::to_string(e.verdict);
    ej["returned_items"] = e.returned_items;
    ej["matched_items"] = e.matched_items;
    ej["table_matches"] = e.table_matches;
    ej["result_matches"] = e.result_matches;
    eps.push_back(std::move(ej));
  }
  j["epochs"] = std::move(eps);
  return j.dump(2);
}

void RunMetrics::write_csv(std::ostream& os) const {
  os << "epoch,verdict,returned_items,matched_items,table_matches,result_matches\n";
  for (const auto& e : epochs) {
    os << e.epoch << ',' << srq::to_string(e.verdict) << ',' << e.returned_items << ','
       << e.matched_items << ',' << (e.table_matches ? 1 : 0) << ','
       << (e.result_matches ? 1 : 0) << '\n';
  }
}

namespace {

CostParams cost_params(const ScenarioConfig& cfg) {
  CostParams p;
  p.mode = cfg.cost_mode == "analytic" ? CostMode::Analytic : CostMode::Measured;
  p.lh = cfg.lh;
  p.lP = cfg.lP;
  p.ld = cfg.ld;
  p.lid = cfg.lid;
  p.n = cfg.n;
  return p;
}

buckets::RangeQuery make_range_query(const ScenarioConfig& cfg, Epoch t) {
  buckets::RangeQuery q;
  q.epoch = t;
  q.lo = cfg.query.lo.empty() ? std::vector<double>(cfg.d, cfg.lo) : cfg.query.lo;
  q.hi = cfg.query.hi.empty() ? std::vector<double>(cfg.d, cfg.hi) : cfg.query.hi;
  return q;
}

std::vector<double> rank_coeffs(const ScenarioConfig& cfg) {
  return cfg.query.coeffs.empty() ? std::vector<double>(cfg.d, 1.0) : cfg.query.coeffs;
}

// Attribute multiset equality, ignoring origins and ordering.
bool same_points(std::vector<buckets::Datum> a, std::vector<buckets::Datum> b) {
  auto key = [](const buckets::Datum& x) { return x.attrs; };
  std::vector<std::vector<double>> ka, kb;
  for (const auto& x : a) ka.push_back(key(x));
  for (const auto& x : b) kb.push_back(key(x));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  return ka == kb;
}

void advance_all(std::vector<proofs::NodeKeyState>& states, const crypto::Prf& prf) {
  for (auto& st : states) st.advance(prf);
}

}  // namespace

RunMetrics run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  World w(cfg);
  Accountant acct(cost_params(cfg));
  Rng data_rng = Rng(cfg.seed).derive("data");
  std::vector<proofs::NodeKeyState> states = w.states;

  RunMetrics metrics;
  double items_total = 0;
  double witness_total = 0;
  double zeta_match = 0;

  srq::PipelineOptions popts;
  popts.lh = cfg.lh;
  popts.xi2 = cfg.xi2;
  popts.m = cfg.m;
  popts.accountant = &acct;
  srq::EpochPipeline pipe(w.prf, w.scheme, w.tree, w.registry, popts);
  srq::AuthorityVerifier auth(w.prf, w.scheme, w.tree, w.registry, &w.schedule, cfg.lh);
  srq::StorageArchive archive;
  std::vector<double> coeffs = rank_coeffs(cfg);

  for (Epoch t = 0; t < cfg.epochs; ++t) {
    std::vector<buckets::Datum> data = generate_data(cfg, w, t, data_rng);
    items_total += static_cast<double>(data.size());
    proofs::ContributionTable truth = truth_table(data, w.scheme, cfg.n);

    EpochOutcome oc;
    oc.epoch = t;

    if (cfg.mode == "srq" || cfg.mode == "stq") {
      srq::EpochRecord rec = pipe.run_epoch(t, data, states, &archive);
      witness_total += static_cast<double>(rec.witness_proofs.size());

      srq::VerifyResult res;
      std::vector<buckets::BucketId> truth_scope;
      if (cfg.mode == "srq") {
        buckets::RangeQuery q = make_range_query(cfg, t);
        srq::RangeAnswer ans = srq::answer_range(archive, q, w.scheme, &acct);
        res = auth.verify_range(ans, q);
        truth_scope = buckets::query_bucket_set(q, w.scheme);
      } else {
        stq::TopKAnswer ans = stq::answer_top_k(archive, t, cfg.query.k, w.scheme, coeffs, &acct);
        res = stq::verify_top_k(auth, ans, cfg.query.k, coeffs);
        truth_scope = stq::select_zeta(truth.nonempty_buckets(), w.scheme, coeffs, cfg.query.k);
        if (ans.zeta == truth_scope) zeta_match += 1;
      }
      oc.verdict = res.verdict;
      oc.returned_items = res.data.size();
      std::vector<buckets::BucketId> scope_sorted = truth_scope;
      std::sort(scope_sorted.begin(), scope_sorted.end());
      for (const auto& x : data)
        if (std::binary_search(scope_sorted.begin(), scope_sorted.end(),
                               buckets::bucketize(x.attrs, w.scheme)))
          oc.matched_items++;
      oc.table_matches = res.table == truth;
      oc.result_matches =
          oc.verdict == srq::Verdict::Accept && oc.returned_items == oc.matched_items;
    } else if (cfg.mode == "ssq") {
      ssq::SsqOptions so;
      so.lh = cfg.lh;
      so.xi1 = cfg.xi1;
      so.modified = cfg.ssq_modified;
      so.accountant = &acct;
      ssq::SkylineAnswer ans = ssq::run_skyline_epoch(w.prf, w.scheme, w.tree, w.groups, t, data,
                                                      states, so);
      ssq::SkylineVerify res = ssq::verify_skyline(w.prf, w.scheme, w.groups, w.schedule, ans,
                                                   cfg.xi1, cfg.xi3, cfg.lh);
      std::vector<buckets::Datum> truth_sky = ssq::skyline_data(data);
      oc.verdict = res.verdict;
      oc.returned_items = res.skyline_points.size();
      oc.matched_items = truth_sky.size();
      oc.table_matches = true;  // no prime product in this mode
      oc.result_matches = oc.verdict == srq::Verdict::Accept &&
                          same_points(res.skyline_points, truth_sky);
    } else {  // ssq_baseline
      Wide thr = threshold_from_fraction(cfg.baseline_threshold, cfg.lk);
      ssq::BaselineAnswer ans = ssq::run_baseline_epoch(w.prf, w.scheme, w.tree, t, data, states,
                                                        thr, cfg.lh, &acct);
      ssq::SkylineVerify res = ssq::verify_baseline(w.prf, w.scheme, w.schedule, cfg.n, ans, thr,
                                                    cfg.lh);
      std::vector<buckets::Datum> truth_sky = ssq::skyline_data(data);
      oc.verdict = res.verdict;
      oc.returned_items = res.skyline_points.size();
      oc.matched_items = truth_sky.size();
      oc.table_matches = true;
      oc.result_matches = oc.verdict == srq::Verdict::Accept &&
                          same_points(res.skyline_points, truth_sky);
    }

    metrics.epochs.push_back(oc);
    advance_all(states, w.prf);
  }

  metrics.total_bits = acct.total();
  for (size_t c = 0; c < kChannelCount; ++c)
    metrics.channel_bits[to_string(static_cast<Channel>(c))] =
        acct.channel_total(static_cast<Channel>(c));
  metrics.extra["items_total"] = items_total;
  metrics.extra["tree_depth"] = w.tree.max_depth;
  metrics.extra["groups"] = w.groups.mu;
  metrics.extra["witness_proofs"] = witness_total;
  metrics.extra["expected_witnesses"] =
      analytics::expected_witnesses(cfg.n, cfg.xi2, cfg.lh) * cfg.epochs;
  if (cfg.mode == "stq") metrics.extra["zeta_matches"] = zeta_match;
  return metrics;
}

void run_sweep(const std::string& grid_text, const std::string& out_dir) {
  json g;
  try {
    g = json::parse(grid_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sweep grid is not valid JSON: ") + e.what());
  }
  require_config(g.is_object() && g.contains("base") && g["base"].is_object(),
                 "sweep grid needs a 'base' scenario object");
  json axes = g.value("axes", json::object());
  require_config(axes.is_object(), "'axes' must map field names to value arrays");

  std::vector<std::string> names;
  std::vector<json> values;
  for (const auto& [k, v] : axes.items()) {
    require_config(v.is_array() && !v.empty(), "axis '" + k + "' must be a nonempty array");
    names.push_back(k);
    values.push_back(v);
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream summary(std::filesystem::path(out_dir) / "summary.csv");
  require_config(summary.good(), "cannot write into " + out_dir);
  summary << "point";
  for (const auto& nme : names) summary << ',' << nme;
  summary << ",epochs,accepts,total_bits\n";

  std::vector<size_t> idx(names.size(), 0);
  size_t point = 0;
  while (true) {
    json cfgj = g["base"];
    for (size_t a = 0; a < names.size(); ++a) cfgj[names[a]] = values[a][idx[a]];
    ScenarioConfig cfg = ScenarioConfig::from_json(cfgj.dump());
    RunMetrics m = run_scenario(cfg);

    uint64_t accepts = 0;
    for (const auto& e : m.epochs)
      if (e.verdict == srq::Verdict::Accept) accepts++;

    char name[32];
    std::snprintf(name, sizeof(name), "point_%03zu.json", point);
    std::ofstream pf(std::filesystem::path(out_dir) / name);
    json pj;
    pj["config"] = cfgj;
    pj["metrics"] = json::parse(m.to_json());
    pf << pj.dump(2) << '\n';

    summary << point;
    for (size_t a = 0; a < names.size(); ++a) summary << ',' << values[a][idx[a]].dump();
    summary << ',' << m.epochs.size() << ',' << accepts << ',' << m.total_bits << '\n';

    ++point;
    size_t a = 0;
    for (; a < idx.size(); ++a) {
      if (++idx[a] < values[a].size()) break;
      idx[a] = 0;
    }
    if (idx.empty() || a == idx.size()) break;
  }
}

std::string TrialStats::to_json() const {
  json j;
  j["trials"] = trials;
  j["detected"] = detected;
  j["rate"] = rate;
  j["expected"] = expected;
  j["extra"] = extra;
  return j.dump(2);
}

namespace {

double catch_bits(double bits) { return -std::expm1(-bits * std::log(2.0)); }

// Distinct random sensor subset of size k.
std::vector<NodeId> pick_sensors(Rng& rng, uint32_t n, uint32_t k) {
  std::vector<NodeId> ids;
  for (NodeId i = 1; i < n; ++i) ids.push_back(i);
  for (uint32_t i = 0; i < k && i < ids.size(); ++i) {
    size_t j = i + static_cast<size_t>(rng.below(ids.size() - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(std::min<size_t>(k, ids.size()));
  std::sort(ids.begin(), ids.end());
  return ids;
}

TrialStats storage_forgery_trials(const ScenarioConfig& cfg, const adv::AttackScript& script,
                                  uint64_t trials) {
  World w(cfg);
  Accountant acct(cost_params(cfg));
  Rng data_rng = Rng(cfg.seed).derive("data");
  Rng atk_rng = Rng(cfg.seed).derive("attack");
  std::vector<proofs::NodeKeyState> states = w.states;

  srq::PipelineOptions popts;
  popts.lh = cfg.lh;
  srq::EpochPipeline pipe(w.prf, w.scheme, w.tree, w.registry, popts);
  srq::AuthorityVerifier auth(w.prf, w.scheme, w.tree, w.registry, &w.schedule, cfg.lh);
  srq::StorageArchive archive;

  Epoch prepared = static_cast<Epoch>(std::min<uint64_t>(trials, cfg.epochs));
  std::vector<srq::RangeAnswer> answers;
  std::vector<buckets::RangeQuery> queries;
  std::vector<proofs::NodeKeyState> storage_states;
  for (Epoch t = 0; t < prepared; ++t) {
    std::vector<buckets::Datum> data = generate_data(cfg, w, t, data_rng);
    pipe.run_epoch(t, data, states, &archive);
    storage_states.push_back(states[0]);
    queries.push_back(make_range_query(cfg, t));
    answers.push_back(srq::answer_range(archive, queries.back(), w.scheme, &acct));
    require_config(!answers.back().entries.empty(), "attack needs at least one returned entry");
    advance_all(states, w.prf);
  }

  uint16_t lkg = script.guess_bits ? script.guess_bits : cfg.lk;
  std::vector<double> coeffs = rank_coeffs(cfg);

  TrialStats st;
  st.trials = trials;
  uint64_t reject_incomplete = 0;
  uint32_t guessed_keys = 0;
  for (uint64_t trial = 0; trial < trials; ++trial) {
    Epoch t = static_cast<Epoch>(trial % prepared);
    const srq::RangeAnswer& honest = answers[t];
    buckets::BucketId victim;
    if (!script.bucket.empty()) {
      victim.v = script.bucket;
    } else {
      victim = honest.entries[trial % honest.entries.size()].bucket;
    }

    srq::RangeAnswer forged;
    if (script.kind == adv::AttackKind::DropBucketKeepProof) {
      forged = adv::drop_bucket(honest, victim, w.registry, false, false, atk_rng, cfg.lh);
    } else if (script.kind == adv::AttackKind::DropBucket) {
      forged = adv::drop_bucket(honest, victim, w.registry, true, true, atk_rng, cfg.lh);
    } else {
      uint32_t guesses = 0;
      forged = adv::rebuild_with_guessed_keys(w.prf, w.scheme, w.tree, w.registry, honest, victim,
                                              storage_states[t], lkg, cfg.lh, atk_rng, &guesses);
      guessed_keys = guesses;
    }

    srq::VerifyResult res;
    if (cfg.mode == "stq") {
      // Recast the doctored record as a top-k answer the storage node could
      // have produced: the claimed ranking follows the doctored table.
      proofs::FactorizeResult fac = proofs::factorize(forged.root_product, w.registry);
      stq::TopKAnswer ta;
      ta.epoch = t;
      ta.k = cfg.query.k;
      ta.zeta = stq::select_zeta(fac.table.nonempty_buckets(), w.scheme, coeffs, cfg.query.k);
      std::vector<buckets::BucketId> lex = ta.zeta;
      std::sort(lex.begin(), lex.end());
      for (const auto& e : archive.at(t).entries)
        if (std::binary_search(lex.begin(), lex.end(), e.bucket) && !(e.bucket == victim))
          ta.entries.push_back(e);
      ta.root_digest = forged.root_digest;
      ta.root_product = forged.root_product;
      res = stq::verify_top_k(auth, ta, cfg.query.k, coeffs);
    } else {
      res = auth.verify_range(forged, queries[t]);
    }

    if (res.verdict != srq::Verdict::Accept) st.detected++;
    if (res.verdict == srq::Verdict::RejectIncomplete) reject_incomplete++;
  }

  st.rate = static_cast<double>(st.detected) / static_cast<double>(trials);
  if (script.kind == adv::AttackKind::DropBucketKeepProof) {
    st.expected = 1.0;
  } else if (script.kind == adv::AttackKind::DropBucket) {
    st.expected = catch_bits(cfg.lh);
  } else {
    st.expected = catch_bits(static_cast<double>(lkg) * guessed_keys);
    st.extra["guessed_keys"] = guessed_keys;
  }
  st.extra["reject_incomplete"] = static_cast<double>(reject_incomplete);
  return st;
}

TrialStats skyline_attack_trials(const ScenarioConfig& cfg, const adv::AttackScript& script,
                                 uint64_t trials) {
  World w(cfg);
  Rng data_rng = Rng(cfg.seed).derive("data");
  Rng atk_rng = Rng(cfg.seed).derive("attack");
  std::vector<proofs::NodeKeyState> states = w.states;

  TrialStats st;
  st.trials = trials;
  uint64_t accepted_groups = 0;
  uint64_t group_checks = 0;
  for (uint64_t trial = 0; trial < trials; ++trial) {
    Epoch t = static_cast<Epoch>(trial);
    std::vector<buckets::Datum> data = generate_data(cfg, w, t, data_rng);

    ssq::SsqOptions so;
    so.lh = cfg.lh;
    so.xi1 = cfg.xi1;
    so.modified = script.kind == adv::AttackKind::FalseSeed ? true : cfg.ssq_modified;

    NodeId seed_victim = 0;
    if (script.kind == adv::AttackKind::FalseSeed) {
      seed_victim = script.node;
      if (seed_victim == 0) {
        // Garble the first reporter of the first populated group.
        for (const auto& members : w.groups.members) {
          if (members.empty()) continue;
          auto reps = ssq::select_reporters(
              w.prf, [&](NodeId i) { return states[i].master; }, members, cfg.xi1, cfg.lh);
          seed_victim = reps.front();
          break;
        }
      }
      so.false_seed_nodes = {seed_victim};
    }

    ssq::SkylineAnswer ans =
        ssq::run_skyline_epoch(w.prf, w.scheme, w.tree, w.groups, t, data, states, so);

    ssq::SkylineAnswer forged;
    if (script.kind == adv::AttackKind::DropGroup) {
      uint32_t group = script.group;
      if (group == 0) {
        size_t pick = trial % ans.groups.size();
        for (size_t off = 0; off < ans.groups.size(); ++off) {
          const auto& rep = ans.groups[(pick + off) % ans.groups.size()];
          if (rep.skyline.size() >= 2) {
            group = rep.group;
            break;
          }
        }
        require_config(group != 0, "no group holds two skyline buckets to shrink");
      }
      forged = adv::drop_group(ans, group, w.scheme, atk_rng, cfg.lh);
    } else {
      forged = ans;  // the false seed already rode in with the honest run
    }

    ssq::SkylineVerify res = ssq::verify_skyline(w.prf, w.scheme, w.groups, w.schedule, forged,
                                                 cfg.xi1, cfg.xi3, cfg.lh);
    if (res.verdict != srq::Verdict::Accept) st.detected++;
    for (const auto& gc : res.groups) {
      group_checks++;
      if (gc.accepted) accepted_groups++;
    }
    advance_all(states, w.prf);
  }

  st.rate = static_cast<double>(st.detected) / static_cast<double>(trials);
  if (script.kind == adv::AttackKind::DropGroup) {
    st.expected = catch_bits(cfg.lh);
  } else {
    st.expected = (cfg.xi1 - 1 < cfg.xi3) ? 1.0 : 0.0;
  }
  if (group_checks)
    st.extra["group_accept_rate"] =
        static_cast<double>(accepted_groups) / static_cast<double>(group_checks);
  return st;
}

TrialStats subproof_trials(const ScenarioConfig& cfg, const adv::AttackScript& script,
                           uint64_t trials) {
  require_config(cfg.xi2 > 0 && cfg.m > 0, "subtree sampling needs xi2 and m");
  World w(cfg);
  Rng data_rng = Rng(cfg.seed).derive("data");
  Rng atk_rng = Rng(cfg.seed).derive("attack");
  std::vector<proofs::NodeKeyState> states = w.states;
  srq::AuthorityVerifier auth(w.prf, w.scheme, w.tree, w.registry, &w.schedule, cfg.lh);

  TrialStats st;
  uint64_t skipped = 0, revoked_exact = 0, storage_blamed = 0;
  double target_sizes = 0, witness_counts = 0;
  Epoch t = 0;
  uint64_t safety = trials * 64 + 64;
  while (st.trials < trials && safety--) {
    NodeId culprit = script.node ? script.node
                                 : 1 + static_cast<NodeId>(atk_rng.below(cfg.n - 1));
    srq::PipelineOptions popts;
    popts.lh = cfg.lh;
    popts.xi2 = cfg.xi2;
    popts.m = cfg.m;
    popts.behavior.false_digest_nodes = {culprit};
    srq::EpochPipeline pipe(w.prf, w.scheme, w.tree, w.registry, popts);

    std::vector<buckets::Datum> data = generate_data(cfg, w, t, data_rng);
    srq::StorageArchive archive;
    srq::EpochRecord rec = pipe.run_epoch(t, data, states, &archive);

    bool is_witness = false;
    for (const auto& wp : rec.witness_proofs) is_witness |= wp.witness == culprit;
    if (is_witness) {  // outcomes are conditioned on the culprit staying out of W_t
      skipped++;
      advance_all(states, w.prf);
      ++t;
      continue;
    }

    std::vector<std::pair<NodeId, proofs::SubtreeVerdict>> verdicts;
    for (const auto& wp : rec.witness_proofs)
      verdicts.emplace_back(wp.witness, auth.check_witness(t, wp));
    adv::SuspectReport rep = adv::compute_suspects(w.tree, cfg.m, verdicts);
    adv::AttestResult at = adv::attest(rep.target, {culprit});

    bool hit = std::find(rep.target.begin(), rep.target.end(), culprit) != rep.target.end();
    if (hit) st.detected++;
    if (at.revoked == std::vector<NodeId>{culprit}) revoked_exact++;
    if (at.storage_blamed) storage_blamed++;
    target_sizes += static_cast<double>(rep.target.size());
    witness_counts += static_cast<double>(rec.witness_proofs.size());
    st.trials++;
    advance_all(states, w.prf);
    ++t;
  }
  require_config(st.trials == trials, "witness draw kept selecting the culprit; raise xi2 or n");

  st.rate = static_cast<double>(st.detected) / static_cast<double>(trials);
  st.expected = 1.0;
  st.extra["skipped"] = static_cast<double>(skipped);
  st.extra["revoked_exact"] = static_cast<double>(revoked_exact);
  st.extra["storage_blamed"] = static_cast<double>(storage_blamed);
  st.extra["mean_target_size"] = target_sizes / static_cast<double>(trials);
  st.extra["mean_witnesses"] = witness_counts / static_cast<double>(trials);
  return st;
}

TrialStats traceback_trials(const ScenarioConfig& cfg, const adv::AttackScript& script,
                            uint64_t trials) {
  World w(cfg);
  Rng atk_rng = Rng(cfg.seed).derive("attack");

  TrialStats st;
  st.trials = trials;
  st.expected = 1.0;
  double positions = 0;
  for (uint64_t trial = 0; trial < trials; ++trial) {
    NodeId origin = script.node ? script.node
                                : 1 + static_cast<NodeId>(atk_rng.below(cfg.n - 1));
    std::vector<NodeId> path = w.tree.path_to_root(origin);
    uint32_t psi = static_cast<uint32_t>(path.size() - 1);  // hop appenders exclude the root
    uint32_t a = script.hop ? script.hop : 2 + static_cast<uint32_t>(atk_rng.below(psi));
    require_config(a >= 2 && a <= psi + 1, "alteration position outside the path");

    std::vector<crypto::SymKey> keys;
    for (uint32_t j = 0; j < psi; ++j) keys.push_back(w.schedule.master_at(path[j], 0));

    Bytes payload(8);
    for (int b = 0; b < 8; ++b) payload[b] = static_cast<std::byte>(trial >> (8 * b));
    Bytes altered = payload;
    altered[0] ^= std::byte{0xff};

    proofs::TracebackChain chain =
        adv::build_traceback(w.prf, payload, keys, cfg.lh, a, altered);
    proofs::TracebackCheck chk = proofs::traceback_verify(w.prf, chain, keys, cfg.lh);
    if (!chk.intact && chk.altered_at == a) st.detected++;
    positions += a;
  }
  st.rate = static_cast<double>(st.detected) / static_cast<double>(trials);
  st.extra["mean_position"] = positions / static_cast<double>(trials);
  return st;
}

TrialStats redundancy_trials(const ScenarioConfig& cfg, uint64_t trials) {
  World w(cfg);
  topo::NeighborGraph graph = topo::build_graph(w.cell);
  Rng field_rng = Rng(cfg.seed).derive("field");
  double eps = cfg.redundancy_eps > 0 ? cfg.redundancy_eps : 3 * cfg.field_sigma;
  uint32_t sensors = cfg.n - 1;
  auto bogus_count =
      std::max<uint32_t>(1, static_cast<uint32_t>(std::llround(cfg.bogus_fraction * sensors)));

  TrialStats st;
  st.trials = trials;
  st.expected = 1.0;
  uint64_t tp = 0, fp = 0;
  for (uint64_t trial = 0; trial < trials; ++trial) {
    double field = cfg.lo + field_rng.real01() * (cfg.hi - cfg.lo);
    std::vector<double> readings(cfg.n);
    for (NodeId i = 0; i < cfg.n; ++i)
      readings[i] = field + field_rng.normal(0, cfg.field_sigma);
    std::vector<NodeId> bogus = pick_sensors(field_rng, cfg.n, bogus_count);
    for (NodeId b : bogus) readings[b] = cfg.hi;

    std::vector<NodeId> flags = adv::redundancy_flags(graph, readings, eps);
    uint64_t caught = 0, false_flags = 0;
    for (NodeId f : flags) {
      if (f == 0) continue;  // the storage node is outside the sensing population
      if (std::binary_search(bogus.begin(), bogus.end(), f))
        caught++;
      else
        false_flags++;
    }
    tp += caught;
    fp += false_flags;
    if (caught == bogus.size()) st.detected++;
  }
  st.rate = static_cast<double>(st.detected) / static_cast<double>(trials);
  st.extra["bogus_flag_rate"] =
      static_cast<double>(tp) / (static_cast<double>(bogus_count) * trials);
  st.extra["honest_flag_rate"] =
      static_cast<double>(fp) / (static_cast<double>(sensors - bogus_count) * trials);
  return st;
}

}  // namespace

TrialStats attack_trials(const ScenarioConfig& cfg, const adv::AttackScript& script,
                         uint64_t trials) {
  cfg.validate();
  require_config(trials >= 1, "at least one trial");

  switch (script.kind) {
    case adv::AttackKind::None: {
      ScenarioConfig honest = cfg;
      honest.epochs = static_cast<uint32_t>(trials);
      RunMetrics m = run_scenario(honest);
      TrialStats st;
      st.trials = m.epochs.size();
      for (const auto& e : m.epochs)
        if (e.verdict != srq::Verdict::Accept) st.detected++;
      st.rate = static_cast<double>(st.detected) / static_cast<double>(st.trials);
      st.expected = 0.0;
      return st;
    }
    case adv::AttackKind::DropBucket:
    case adv::AttackKind::DropBucketKeepProof:
    case adv::AttackKind::RebuildGuessedKeys:
      return storage_forgery_trials(cfg, script, trials);
    case adv::AttackKind::DropGroup:
    case adv::AttackKind::FalseSeed:
      return skyline_attack_trials(cfg, script, trials);
    case adv::AttackKind::FalseSubproof:
      return subproof_trials(cfg, script, trials);
    case adv::AttackKind::AlterTraceback:
      return traceback_trials(cfg, script, trials);
    case adv::AttackKind::BogusReading:
      return redundancy_trials(cfg, trials);
  }
  throw ConfigError("unhandled attack kind");
}

}  // namespace tsq::harness
