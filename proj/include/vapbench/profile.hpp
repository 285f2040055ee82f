#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/benchmark.hpp"
#include "vapbench/corpus.hpp"
#include "vapbench/errors.hpp"
#include "vapbench/stats.hpp"
#include "vapbench/strategies.hpp"
#include "vapbench/vap.hpp"

namespace vapbench {

struct ProfileEntry {
  StrategyConfig knob;
  double accuracy = 1.0;
  double network = 1.0;
  double compute = 1.0;
  std::size_t samples = 0;

  PerfPoint perf() const { return {accuracy, network, compute}; }
  friend bool operator==(const ProfileEntry&, const ProfileEntry&) = default;
};

/// Performance of one strategy (other primitives at oracle) per bucket key.
struct PrimitiveProfile {
  Primitive primitive = Primitive::temporal;
  StrategyKind kind = StrategyKind::oracle;
  BucketSpec buckets;  // feature ids live here
  std::vector<StrategyConfig> knobs;
  std::map<std::string, std::vector<ProfileEntry>> table;

  const std::vector<std::size_t>& feature_ids() const { return buckets.feature_ids; }
  friend bool operator==(const PrimitiveProfile&, const PrimitiveProfile&) = default;
};

/// Profile of an oracle stage: no features, one unit entry.
inline PrimitiveProfile oracle_profile(Primitive p) {
  PrimitiveProfile prof;
  prof.primitive = p;
  prof.kind = StrategyKind::oracle;
  prof.knobs = {oracle(p)};
  prof.table[""] = {ProfileEntry{oracle(p), 1.0, 1.0, 1.0, 0}};
  return prof;
}

/// Runs every knob on every benchmark segment with the other two stages at
/// oracle and averages per bucket key (unweighted over segments).
inline PrimitiveProfile profile_primitive(const StrategyConfig& tmpl, const std::vector<StrategyConfig>& knobs,
                                          const BenchmarkSet& bench, const Corpus& corpus,
                                          const DegradationParams& params = {}, const MatchSpec& match = {},
                                          std::size_t jobs = 1) {
  if (bench.segment_count() == 0) throw InputError("benchmark set is empty");
  if (knobs.empty()) throw ConfigError("knob list is empty");
  const Primitive prim = primitive_of(tmpl.kind, tmpl.primitive);
  for (const auto& k : knobs)
    if (k.kind != tmpl.kind) throw ConfigError("knob list mixes strategy kinds");
  PrimitiveProfile prof;
  prof.primitive = prim;
  prof.kind = tmpl.kind;
  prof.buckets = bench.buckets;
  prof.knobs = knobs;

  struct Job {
    std::string key;
    const CorpusSegment* seg;
  };
  std::vector<Job> work;
  for (const auto& [key, refs] : bench.entries)
    for (const auto& r : refs) work.push_back({key, &corpus.at(r)});
  std::vector<std::vector<PerfPoint>> results(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    results[i].reserve(knobs.size());
    for (const auto& k : knobs) {
      VapConfig v = all_oracle();
      v.stage(prim) = k;
      v.stage(prim).primitive = prim;
      results[i].push_back(run_vap(v, work[i].seg->gt, work[i].seg->cheap_ptr(), params, match).perf);
    }
  });
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto& entries = prof.table[work[i].key];
    if (entries.empty())
      for (const auto& k : knobs) entries.push_back({k, 0.0, 0.0, 0.0, 0});
    for (std::size_t j = 0; j < knobs.size(); ++j) {
      entries[j].accuracy += results[i][j].accuracy;
      entries[j].network += results[i][j].network;
      entries[j].compute += results[i][j].compute;
      entries[j].samples += 1;
    }
  }
  for (auto& [key, entries] : prof.table)
    for (auto& e : entries) {
      const auto n = static_cast<double>(e.samples);
      e.accuracy /= n;
      e.network /= n;
      e.compute /= n;
    }
  return prof;
}

// ---------------------------------------------------------------------------
// Combined feature schema

/// Union of the three primitives' features; a feature shared by several
/// primitives appears once and each primitive projects out its own sub-key.
struct CombinedSchema {
  BucketSpec buckets;
  std::array<std::vector<std::size_t>, 3> positions;  // per primitive: index into buckets

  BucketKey sub_key(const BucketKey& key, Primitive p) const {
    if (key.size() != buckets.arity()) throw InputError("bucket key arity does not match the schema");
    BucketKey out;
    for (auto pos : positions[static_cast<std::size_t>(p)]) out.push_back(key[pos]);
    return out;
  }

  friend bool operator==(const CombinedSchema&, const CombinedSchema&) = default;
};

namespace detail {

inline std::array<const PrimitiveProfile*, 3> by_primitive(const PrimitiveProfile& a, const PrimitiveProfile& b,
                                                           const PrimitiveProfile& c) {
  std::array<const PrimitiveProfile*, 3> out{};
  for (const auto* p : {&a, &b, &c}) {
    auto& slot = out[static_cast<std::size_t>(p->primitive)];
    if (slot) throw ConfigError("two profiles for primitive " + std::string(to_string(p->primitive)));
    slot = p;
  }
  return out;
}

}  // namespace detail

inline CombinedSchema combine_schema(const std::array<const PrimitiveProfile*, 3>& parts) {
  CombinedSchema s;
  for (std::size_t p = 0; p < 3; ++p) {
    const auto& b = parts[p]->buckets;
    for (std::size_t i = 0; i < b.feature_ids.size(); ++i) {
      const auto it = std::find(s.buckets.feature_ids.begin(), s.buckets.feature_ids.end(), b.feature_ids[i]);
      if (it == s.buckets.feature_ids.end()) {
        s.positions[p].push_back(s.buckets.feature_ids.size());
        s.buckets.feature_ids.push_back(b.feature_ids[i]);
        s.buckets.edges.push_back(b.edges[i]);
      } else {
        const auto pos = static_cast<std::size_t>(it - s.buckets.feature_ids.begin());
        if (s.buckets.edges[pos] != b.edges[i])
          throw InputError("feature " + feature_names()[b.feature_ids[i]] + " is bucketed differently across primitives");
        s.positions[p].push_back(pos);
      }
    }
  }
  return s;
}

struct TableLookup {
  const std::vector<ProfileEntry>* entries = nullptr;
  std::string key;
  bool fallback = false;
};

/// Exact key, else the populated key nearest in L1 over bucket indices
/// (ties: lexicographically smallest key).
inline TableLookup lookup(const PrimitiveProfile& prof, const BucketKey& sub) {
  const auto exact = prof.table.find(encode_key(sub));
  if (exact != prof.table.end()) return {&exact->second, exact->first, false};
  std::optional<std::pair<int, BucketKey>> best;
  const std::vector<ProfileEntry>* hit = nullptr;
  std::string hit_key;
  for (const auto& [k, entries] : prof.table) {
    const auto key = decode_key(k);
    const int d = l1_distance(key, sub);
    if (!best || std::make_pair(d, key) < *best) {
      best = std::make_pair(d, key);
      hit = &entries;
      hit_key = k;
    }
  }
  if (!hit) throw InputError("profile table is empty");
  return {hit, hit_key, true};
}

// ---------------------------------------------------------------------------
// Composition

struct FrontierPoint {
  PerfPoint perf;
  std::array<StrategyConfig, 3> knobs;  // temporal, spatial, model

  friend bool operator==(const FrontierPoint&, const FrontierPoint&) = default;
};

inline bool dominates(const PerfPoint& a, const PerfPoint& b) {
  const bool no_worse = a.accuracy >= b.accuracy && a.network <= b.network && a.compute <= b.compute;
  const bool better = a.accuracy > b.accuracy || a.network < b.network || a.compute < b.compute;
  return no_worse && better;
}

/// Non-dominated subset (accuracy up, both costs down). Exact duplicates keep
/// their first occurrence. Output is sorted by accuracy descending, then
/// network, compute and input order.
inline std::vector<FrontierPoint> pareto_frontier(const std::vector<FrontierPoint>& pts) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool drop = false;
    for (std::size_t j = 0; j < pts.size() && !drop; ++j) {
      if (i == j) continue;
      if (dominates(pts[j].perf, pts[i].perf)) drop = true;
      if (j < i && pts[j].perf == pts[i].perf) drop = true;
    }
    if (!drop) keep.push_back(i);
  }
  std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = pts[a].perf;
    const auto& y = pts[b].perf;
    if (x.accuracy != y.accuracy) return x.accuracy > y.accuracy;
    if (x.network != y.network) return x.network < y.network;
    return x.compute < y.compute;
  });
  std::vector<FrontierPoint> out;
  for (auto i : keep) out.push_back(pts[i]);
  return out;
}

struct ComposeResult {
  std::vector<FrontierPoint> points;
  bool fallback = false;
  std::array<std::string, 3> keys_used;
};

/// Elementwise product of the three primitives' entries over the knob cross
/// product (temporal-major), without frontier reduction.
inline ComposeResult compose_products(const PrimitiveProfile& a, const PrimitiveProfile& b, const PrimitiveProfile& c,
                                      const BucketKey& key) {
  const auto parts = detail::by_primitive(a, b, c);
  const auto schema = combine_schema(parts);
  ComposeResult res;
  std::array<const std::vector<ProfileEntry>*, 3> rows{};
  for (auto p : kPrimitives) {
    const auto i = static_cast<std::size_t>(p);
    const auto hit = lookup(*parts[i], schema.sub_key(key, p));
    rows[i] = hit.entries;
    res.keys_used[i] = hit.key;
    res.fallback = res.fallback || hit.fallback;
  }
  for (const auto& t : *rows[0])
    for (const auto& s : *rows[1])
      for (const auto& m : *rows[2])
        res.points.push_back({{t.accuracy * s.accuracy * m.accuracy, t.network * s.network * m.network,
                               t.compute * s.compute * m.compute},
                              {t.knob, s.knob, m.knob}});
  return res;
}

/// Composed performance at a key, reduced to its Pareto frontier. The
/// argument order of the three profiles does not matter.
inline ComposeResult compose(const PrimitiveProfile& a, const PrimitiveProfile& b, const PrimitiveProfile& c,
                             const BucketKey& key) {
  auto res = compose_products(a, b, c, key);
  res.points = pareto_frontier(res.points);
  return res;
}

// ---------------------------------------------------------------------------
// Full pipeline profile

struct PCProfile {
  VapConfig vap;  // strategy kinds; knobs are template values
  CombinedSchema schema;
  std::array<PrimitiveProfile, 3> parts;
  std::map<std::string, std::vector<FrontierPoint>> table;

  const std::vector<std::size_t>& feature_ids() const { return schema.buckets.feature_ids; }
  BucketKey key_of(const FeatureVector& fv) const { return schema.buckets.key_of(fv); }
};

/// Composes the profile at every key of the combined schema whose three
/// sub-keys are all populated.
inline PCProfile build_pc_profile(const PrimitiveProfile& a, const PrimitiveProfile& b, const PrimitiveProfile& c,
                                  CostDimension dim = CostDimension::both, std::size_t max_keys = 1'000'000) {
  const auto parts = detail::by_primitive(a, b, c);
  PCProfile pc;
  pc.schema = combine_schema(parts);
  pc.vap.cost_dimension = dim;
  for (auto p : kPrimitives) {
    const auto i = static_cast<std::size_t>(p);
    pc.parts[i] = *parts[i];
    pc.vap.stage(p) = StrategyConfig{p, parts[i]->kind};
  }
  const auto& spec = pc.schema.buckets;
  std::size_t total = 1;
  for (std::size_t i = 0; i < spec.arity(); ++i) {
    total *= static_cast<std::size_t>(spec.buckets_for(i));
    if (total > max_keys) throw ConfigError("combined bucket grid is too large");
  }
  BucketKey key(spec.arity(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t rest = n;
    for (std::size_t i = spec.arity(); i-- > 0;) {
      const auto nb = static_cast<std::size_t>(spec.buckets_for(i));
      key[i] = static_cast<int>(rest % nb);
      rest /= nb;
    }
    bool populated = true;
    for (auto p : kPrimitives)
      populated = populated &&
                  pc.parts[static_cast<std::size_t>(p)].table.count(encode_key(pc.schema.sub_key(key, p))) > 0;
    if (populated) pc.table[encode_key(key)] = compose(a, b, c, key).points;
  }
  return pc;
}

/// Performance of one fixed knob triple at a key (sub-key fallback applies).
inline std::optional<PerfPoint> point_at(const PCProfile& pc, const BucketKey& key,
                                         const std::array<StrategyConfig, 3>& knobs, bool* fallback = nullptr) {
  PerfPoint out{1.0, 1.0, 1.0};
  for (auto p : kPrimitives) {
    const auto i = static_cast<std::size_t>(p);
    const auto hit = lookup(pc.parts[i], pc.schema.sub_key(key, p));
    if (fallback && hit.fallback) *fallback = true;
    const auto it = std::find_if(hit.entries->begin(), hit.entries->end(), [&](const ProfileEntry& e) {
      return e.knob.kind == knobs[i].kind && e.knob.knob == knobs[i].knob && e.knob.tier == knobs[i].tier &&
             e.knob.band_low == knobs[i].band_low && e.knob.band_high == knobs[i].band_high;
    });
    if (it == hit.entries->end()) return std::nullopt;
    out.accuracy *= it->accuracy;
    out.network *= it->network;
    out.compute *= it->compute;
  }
  return out;
}

enum class MissingKeyPolicy { nearest, error };

struct QueryResult {
  bool feasible = false;
  bool fallback = false;
  std::string key;  // key actually answered
  FrontierPoint point;
};

/// Cheapest frontier point with accuracy >= target in the given dimension
/// (ties: higher accuracy). If no point qualifies the result is infeasible
/// and carries the most accurate point.
inline QueryResult query_min_cost(const PCProfile& pc, const BucketKey& key, double target, CostDimension dim,
                                  MissingKeyPolicy policy = MissingKeyPolicy::nearest) {
  if (pc.table.empty()) throw InputError("profile has no entries");
  QueryResult res;
  auto it = pc.table.find(encode_key(key));
  if (it == pc.table.end()) {
    if (policy == MissingKeyPolicy::error) throw InputError("bucket key '" + encode_key(key) + "' is not in the profile");
    std::optional<std::pair<int, BucketKey>> best;
    for (auto jt = pc.table.begin(); jt != pc.table.end(); ++jt) {
      const auto k = decode_key(jt->first);
      const auto cand = std::make_pair(l1_distance(k, key), k);
      if (!best || cand < *best) {
        best = cand;
        it = jt;
      }
    }
    res.fallback = true;
  }
  res.key = it->first;
  const auto& pts = it->second;
  if (pts.empty()) throw InputError("profile key '" + it->first + "' has no points");
  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].perf.accuracy < target) continue;
    if (!pick || pts[i].perf.cost(dim) < pts[*pick].perf.cost(dim) ||
        (pts[i].perf.cost(dim) == pts[*pick].perf.cost(dim) && pts[i].perf.accuracy > pts[*pick].perf.accuracy))
      pick = i;
  }
  if (pick) {
    res.feasible = true;
    res.point = pts[*pick];
    return res;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].perf.accuracy > pts[best].perf.accuracy ||
        (pts[i].perf.accuracy == pts[best].perf.accuracy && pts[i].perf.cost(dim) < pts[best].perf.cost(dim)))
      best = i;
  res.point = pts[best];
  return res;
}

// ---------------------------------------------------------------------------
// Independence check

struct PairCorrelation {
  std::string first;
  std::string second;
  std::optional<double> accuracy_r;
  std::optional<double> network_r;
  std::optional<double> compute_r;
  std::vector<std::string> notes;
};

struct IndependenceReport {
  std::size_t segments = 0;
  std::vector<PairCorrelation> pairs;
};

/// For every pair of strategies from different primitives: Pearson r across
/// segments between the jointly applied performance and the product of the
/// separately applied performances. Constant vectors are reported missing.
inline IndependenceReport validate_independence(const std::vector<StrategyConfig>& strategies, const Corpus& corpus,
                                                const DegradationParams& params = {}, const MatchSpec& match = {},
                                                std::size_t jobs = 1) {
  for (const auto& s : strategies) validate(s, params);
  const std::size_t n = corpus.size();
  // alone[s][seg]
  std::vector<std::vector<PerfPoint>> alone(strategies.size(), std::vector<PerfPoint>(n));
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto& seg = corpus.segments()[i];
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      VapConfig v = all_oracle();
      v.stage(strategies[s].primitive) = strategies[s];
      alone[s][i] = run_vap(v, seg.gt, seg.cheap_ptr(), params, match).perf;
    }
  });
  IndependenceReport rep;
  rep.segments = n;
  for (std::size_t a = 0; a < strategies.size(); ++a)
    for (std::size_t b = a + 1; b < strategies.size(); ++b) {
      if (strategies[a].primitive == strategies[b].primitive) continue;
      std::vector<PerfPoint> joint(n);
      parallel_for(n, jobs, [&](std::size_t i) {
        const auto& seg = corpus.segments()[i];
        VapConfig v = all_oracle();
        v.stage(strategies[a].primitive) = strategies[a];
        v.stage(strategies[b].primitive) = strategies[b];
        joint[i] = run_vap(v, seg.gt, seg.cheap_ptr(), params, match).perf;
      });
      PairCorrelation pc{knob_label(strategies[a]), knob_label(strategies[b]), {}, {}, {}, {}};
      auto column = [&](auto get, const char* what) {
        std::vector<double> j, prod;
        for (std::size_t i = 0; i < n; ++i) {
          j.push_back(get(joint[i]));
          prod.push_back(get(alone[a][i]) * get(alone[b][i]));
        }
        auto r = stats::pearson(j, prod);
        if (!r) {
          if (j == prod && n >= 3)
            pc.notes.push_back(std::string(what) + ": constant but identical vectors, excluded");
          else
            pc.notes.push_back(std::string(what) + ": degenerate vector, excluded");
        }
        return r;
      };
      pc.accuracy_r = column([](const PerfPoint& p) { return p.accuracy; }, "accuracy");
      pc.network_r = column([](const PerfPoint& p) { return p.network; }, "network");
      pc.compute_r = column([](const PerfPoint& p) { return p.compute; }, "compute");
      rep.pairs.push_back(std::move(pc));
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kProfileSchemaVersion = 1;

inline void to_json(nlohmann::json& j, const ProfileEntry& e) {
  j = nlohmann::json{{"knob", e.knob},
                     {"accuracy", e.accuracy},
                     {"network", e.network},
                     {"compute", e.compute},
                     {"samples", e.samples}};
}
inline void from_json(const nlohmann::json& j, ProfileEntry& e) {
  e.knob = j.at("knob").get<StrategyConfig>();
  e.accuracy = j.at("accuracy").get<double>();
  e.network = j.at("network").get<double>();
  e.compute = j.at("compute").get<double>();
  e.samples = j.at("samples").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const PrimitiveProfile& p) {
  j = nlohmann::json{{"schema",
                      {{"version", kProfileSchemaVersion},
                       {"primitive", std::string(to_string(p.primitive))},
                       {"strategy", std::string(to_string(p.kind))},
                       {"features", p.buckets.feature_ids.empty() ? nlohmann::json::array()
                                                                   : nlohmann::json(FeatureSet{p.primitive, p.buckets.feature_ids}.names())}}},
                     {"buckets", p.buckets},
                     {"knobs", p.knobs},
                     {"entries", p.table}};
}
inline void from_json(const nlohmann::json& j, PrimitiveProfile& p) {
  const auto& s = j.at("schema");
  if (s.at("version").get<int>() != kProfileSchemaVersion) throw InputError("unsupported profile schema version");
  p.primitive = primitive_from_string(s.at("primitive").get<std::string>());
  p.kind = strategy_kind_from_string(s.at("strategy").get<std::string>());
  p.buckets = j.at("buckets").get<BucketSpec>();
  p.knobs = j.at("knobs").get<std::vector<StrategyConfig>>();
  p.table = j.at("entries").get<std::map<std::string, std::vector<ProfileEntry>>>();
}

inline void to_json(nlohmann::json& j, const FrontierPoint& f) {
  j = nlohmann::json{{"perf", f.perf}, {"knobs", f.knobs}};
}
inline void from_json(const nlohmann::json& j, FrontierPoint& f) {
  f.perf = j.at("perf").get<PerfPoint>();
  f.knobs = j.at("knobs").get<std::array<StrategyConfig, 3>>();
}

inline void to_json(nlohmann::json& j, const PCProfile& pc) {
  j = nlohmann::json{{"vap", pc.vap}, {"buckets", pc.schema.buckets}, {"parts", pc.parts}, {"entries", pc.table}};
}
inline void from_json(const nlohmann::json& j, PCProfile& pc) {
  pc.vap = j.at("vap").get<VapConfig>();
  pc.parts = j.at("parts").get<std::array<PrimitiveProfile, 3>>();
  const auto parts = detail::by_primitive(pc.parts[0], pc.parts[1], pc.parts[2]);
  pc.schema = combine_schema(parts);
  pc.table = j.at("entries").get<std::map<std::string, std::vector<FrontierPoint>>>();
}

}  // namespace vapbench
