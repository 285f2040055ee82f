// vapbench: command-line front end over the vapbench library.
//
// Every command reads the layered config (built-in defaults, then --config,
// then flags), writes its outputs plus manifest.json into --out-dir, and on
// failure prints {"error": {...}} to stderr with exit code 2 (config),
// 3 (input) or 4 (infeasible query).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "report.hpp"
#include "vapbench/config.hpp"
#include "vapbench/vapbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vapbench;
using report::OutputDir;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kInput = 3, kInfeasible = 4 };

/// Raised after outputs were written when some query had no feasible answer.
class InfeasibleQuery : public Error {
 public:
  using Error::Error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::size_t> jobs;
  std::vector<std::string> formats;
};

struct Context {
  json config;
  Settings settings;
  std::set<std::string> formats;
  std::unique_ptr<OutputDir> out;

  bool wants(const std::string& f) const { return formats.count(f) > 0; }
};

Context make_context(const Globals& g, const std::string& command, const std::set<std::string>& supported,
                     const std::set<std::string>& defaults) {
  Context ctx;
  ctx.config = default_config();
  if (!g.config_path.empty()) ctx.config = layer_config(std::move(ctx.config), read_config_file(g.config_path));
  if (g.seed) ctx.config["seed"] = *g.seed;
  if (g.jobs) ctx.config["jobs"] = *g.jobs;
  ctx.settings = settings_from(ctx.config);
  if (g.formats.empty()) {
    ctx.formats = defaults;
  } else {
    for (const auto& f : g.formats)
      if (supported.count(f)) ctx.formats.insert(f);
    if (ctx.formats.empty()) throw ConfigError("command " + command + " cannot write the requested format");
  }
  ctx.out = std::make_unique<OutputDir>(g.out_dir);
  if (!g.config_path.empty()) ctx.out->add_input(g.config_path);
  return ctx;
}

fs::path existing(const std::string& p) {
  if (!fs::exists(p)) throw InputError("input not found: " + p);
  return p;
}

json read_json(Context& ctx, const std::string& path) {
  ctx.out->add_input(existing(path));
  try {
    return json::parse(report::read_file(path));
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

template <class T>
T read_as(Context& ctx, const std::string& path) {
  const auto j = read_json(ctx, path);
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

DetectionTrace read_trace(Context& ctx, const fs::path& path) {
  ctx.out->add_input(existing(path.string()));
  return load_trace(path.string());
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    const bool quote = cells[i].find_first_of(",\"") != std::string::npos;
    if (!quote) {
      s += cells[i];
      continue;
    }
    s += '"';
    for (char c : cells[i]) s += c == '"' ? std::string("\"\"") : std::string(1, c);
    s += '"';
  }
  return s + "\n";
}

std::string fnum(double v) { return format_double(v); }

std::string opt_num(const std::optional<double>& v) { return v ? fnum(*v) : ""; }

// ---------------------------------------------------------------------------
// Corpus files
//
// corpus.json: {"videos": [{"video_id", "ground_truth", "cheap"?}]} with
// trace paths relative to the file.

struct VideoFiles {
  std::string video_id;
  DetectionTrace gt;
  std::optional<DetectionTrace> cheap;
};

std::vector<VideoFiles> load_videos(Context& ctx, const std::string& corpus_path) {
  const auto j = read_json(ctx, corpus_path);
  const fs::path base = fs::path(corpus_path).parent_path();
  std::vector<VideoFiles> out;
  try {
    for (const auto& v : j.at("videos")) {
      VideoFiles f;
      f.video_id = v.at("video_id").get<std::string>();
      f.gt = read_trace(ctx, base / v.at("ground_truth").get<std::string>());
      if (v.contains("cheap")) f.cheap = read_trace(ctx, base / v.at("cheap").get<std::string>());
      if (f.gt.video_id != f.video_id) throw InputError("trace video id does not match corpus entry " + f.video_id);
      out.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw InputError(corpus_path + ": " + e.what());
  }
  if (out.empty()) throw InputError(corpus_path + " lists no videos");
  return out;
}

Corpus corpus_of(const std::vector<VideoFiles>& videos, double segment_seconds) {
  Corpus c;
  for (const auto& v : videos) c.add_video(v.gt, v.cheap ? &*v.cheap : nullptr, segment_seconds);
  return c;
}

/// Corpus segments reordered to match the rows of a feature matrix.
Corpus aligned_to(const Corpus& c, const FeatureMatrix& m) {
  Corpus out;
  for (const auto& r : m.rows) out.add(c.at({r.video_id, r.segment_index}));
  return out;
}

FeatureMatrix read_features(Context& ctx, const std::string& path) {
  ctx.out->add_input(existing(path));
  std::ifstream in(path);
  return read_feature_csv(in);
}

std::map<Primitive, BenchmarkSet> read_benchmark(Context& ctx, const std::string& path) {
  const auto j = read_json(ctx, path);
  std::map<Primitive, BenchmarkSet> out;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) out[primitive_from_string(it.key())] = it.value().get<BenchmarkSet>();
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return out;
}

VapConfig read_vap(Context& ctx, const std::string& preset_name, const std::string& vap_path) {
  if (!preset_name.empty() && !vap_path.empty()) throw ConfigError("give either --preset or --vap, not both");
  if (!preset_name.empty()) return preset(preset_name);
  if (!vap_path.empty()) {
    const auto v = read_as<VapConfig>(ctx, vap_path);
    return v;
  }
  throw ConfigError("a pipeline is required (--preset or --vap)");
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const Globals& g, std::optional<double> duration) {
  auto ctx = make_context(g, "synth", {"json"}, {"json"});
  json videos = json::array();
  json specs = json::array();
  for (auto spec : ctx.settings.scenarios()) {
    if (duration) spec.duration = *duration;
    validate(spec);
    const auto v = generate(spec);
    const std::string gt = "traces/" + spec.video_id + ".gt.jsonl";
    const std::string cheap = "traces/" + spec.video_id + ".cheap.jsonl";
    ctx.out->write(gt, trace_to_string(v.ground_truth));
    ctx.out->write(cheap, trace_to_string(v.cheap));
    videos.push_back({{"video_id", spec.video_id}, {"ground_truth", gt}, {"cheap", cheap}});
    json s = spec;
    s["tracks"] = v.track_count;
    specs.push_back(std::move(s));
  }
  ctx.out->write_json("corpus.json", {{"videos", videos}});
  ctx.out->write_json("scenarios.json", specs);
  ctx.out->write_manifest("synth", ctx.config);
  return kOk;
}

// ---------------------------------------------------------------------------
// featurize

int cmd_featurize(const Globals& g, const std::string& corpus_path, const std::string& source_flag) {
  auto ctx = make_context(g, "featurize", {"csv", "json"}, {"csv"});
  const auto& s = ctx.settings;
  FeatureSource source = s.selection_source;
  if (!source_flag.empty()) source = source_flag == "cheap" ? FeatureSource::cheap : FeatureSource::ground_truth;
  const auto c = corpus_of(load_videos(ctx, corpus_path), s.segment_seconds);
  const auto m = featurize_corpus(c, source, s.features, s.jobs);
  if (ctx.wants("csv")) {
    std::ostringstream out;
    write_feature_csv(out, m);
    ctx.out->write("features.csv", out.str());
  }
  if (ctx.wants("json")) {
    json rows = json::array();
    for (const auto& r : m.rows) {
      json f = json::object();
      for (std::size_t i = 0; i < kFeatureCount; ++i) f[feature_names()[i]] = r.features.values[i];
      rows.push_back({{"video_id", r.video_id}, {"segment_index", r.segment_index}, {"features", f}});
    }
    ctx.out->write_json("features.json", rows);
  }
  ctx.out->write_manifest("featurize", ctx.config);
  return kOk;
}

// ---------------------------------------------------------------------------
// select-features

int cmd_select_features(const Globals& g, const std::string& corpus_path, const std::string& features_path,
                        const std::vector<std::string>& holdout) {
  auto ctx = make_context(g, "select-features", {"json"}, {"json"});
  const auto& s = ctx.settings;
  const auto m = read_features(ctx, features_path);
  const auto c = aligned_to(corpus_of(load_videos(ctx, corpus_path), s.segment_seconds), m);
  std::vector<CostColumn> columns;
  for (auto kind : s.selection_strategies) {
    const StrategyConfig tmpl{primitive_of(kind, Primitive::temporal), kind};
    columns.push_back(strategy_cost_column(tmpl, default_knobs(tmpl, s.degradation), c, s.dimension, s.band,
                                           s.allow_above_band, s.degradation, s.match, s.jobs));
  }
  const auto sel = select_features(m, columns, HoldoutSet(holdout), s.selection);
  json out = json::object();
  for (const auto& [prim, fs_] : sel) {
    json cands = json::array();
    for (const auto& cand : fs_.candidates)
      cands.push_back({{"feature", feature_names()[cand.feature]}, {"abs_r", cand.max_abs_r}, {"strategy", cand.strategy}});
    out[std::string(to_string(prim))] = {{"features", fs_.set.names()}, {"candidates", cands}, {"warnings", fs_.warnings}};
  }
  ctx.out->write_json("selection.json", {{"holdout", holdout}, {"primitives", out}});
  ctx.out->write_manifest("select-features", ctx.config);
  return kOk;
}

// ---------------------------------------------------------------------------
// build-benchmark

int cmd_build_benchmark(const Globals& g, const std::string& features_path, const std::string& selection_path) {
  auto ctx = make_context(g, "build-benchmark", {"json"}, {"json"});
  const auto& s = ctx.settings;
  const auto m = read_features(ctx, features_path);
  const auto sel = read_json(ctx, selection_path);
  json out = json::object();
  json warnings = json::array();
  try {
    for (auto prim : kPrimitives) {
      const std::string name(to_string(prim));
      std::vector<std::size_t> ids;
      for (const auto& f : sel.at("primitives").at(name).at("features")) ids.push_back(feature_index(f.get<std::string>()));
      std::vector<std::string> w;
      const auto spec = build_buckets(m, ids, s.buckets, &w);
      for (const auto& x : w) warnings.push_back(name + ": " + x);
      out[name] = select_segments(m, spec, s.segments_per_bucket, prim);
    }
  } catch (const json::exception& e) {
    throw InputError(selection_path + ": " + e.what());
  }
  ctx.out->write_json("benchmark.json", out);
  if (!warnings.empty()) ctx.out->write_json("benchmark_warnings.json", warnings);
  ctx.out->write_manifest("build-benchmark", ctx.config);
  return kOk;
}

// ---------------------------------------------------------------------------
// profile

std::string bucket_label(const BucketSpec& b, const std::string& key) {
  if (key.empty()) return "(all)";
  const auto k = decode_key(key);
  std::string s;
  for (std::size_t i = 0; i < k.size() && i < b.arity(); ++i) {
    if (i) s += "; ";
    const auto& e = b.edges[i];
    const auto lo = std::min<std::size_t>(static_cast<std::size_t>(k[i]), e.size() - 1);
    const auto hi = std::min<std::size_t>(lo + 1, e.size() - 1);
    s += feature_names()[b.feature_ids[i]] + " " + report::num(e[lo]) + "-" + report::num(e[hi]);
  }
  return s;
}

std::string profile_svg(const PrimitiveProfile& p, CostDimension dim) {
  std::size_t longest = 0;
  for (const auto& [key, entries] : p.table) longest = std::max(longest, bucket_label(p.buckets, key).size());
  // ~5.5px per 9pt glyph
  const double cw = 96, rh = 22, left = 20 + 5.5 * static_cast<double>(longest), top = 60;
  const double w = left + cw * static_cast<double>(p.knobs.size()) + 20;
  const double h = top + rh * static_cast<double>(p.table.size()) + 40;
  report::Svg svg(w, h);
  svg.text(10, 20, std::string(to_string(p.primitive)) + " / " + std::string(to_string(p.kind)) +
                       ": accuracy (cell colour) and " + std::string(to_string(dim)) + " cost per bucket",
           "start", 13);
  for (std::size_t c = 0; c < p.knobs.size(); ++c)
    svg.text(left + cw * (static_cast<double>(c) + 0.5), top - 8, knob_label(p.knobs[c]), "middle", 9);
  double y = top;
  for (const auto& [key, entries] : p.table) {
    svg.text(10, y + 15, bucket_label(p.buckets, key), "start", 9);
    for (std::size_t c = 0; c < entries.size(); ++c) {
      const auto& e = entries[c];
      const double x = left + cw * static_cast<double>(c);
      svg.rect(x, y, cw, rh, report::ramp(e.accuracy), "#fff");
      svg.text(x + cw / 2, y + 15, report::num(e.accuracy) + " / " + report::num(e.perf().cost(dim)), "middle", 9);
    }
    y += rh;
  }
  return svg.str();
}

int cmd_profile(const Globals& g, const std::string& corpus_path, const std::string& benchmark_path,
                const std::string& primitive_name, const std::string& strategy_name) {
  auto ctx = make_context(g, "profile", {"json", "csv", "svg"}, {"json", "csv", "svg"});
  const auto& s = ctx.settings;
  const auto prim = primitive_from_string(primitive_name);
  const auto kind = strategy_kind_from_string(strategy_name);
  if (primitive_of(kind, prim) != prim)
    throw ConfigError("strategy " + strategy_name + " does not belong to primitive " + primitive_name);
  const auto bench = read_benchmark(ctx, benchmark_path);
  const auto it = bench.find(prim);
  if (it == bench.end()) throw InputError("benchmark has no " + primitive_name + " set");
  const auto c = corpus_of(load_videos(ctx, corpus_path), s.segment_seconds);
  const StrategyConfig tmpl{prim, kind};
  const auto prof = profile_primitive(tmpl, default_knobs(tmpl, s.degradation), it->second, c, s.degradation, s.match,
                                      s.jobs);
  const std::string stem = "profile_" + primitive_name + "_" + std::string(to_string(kind));
  if (ctx.wants("json")) ctx.out->write_json(stem + ".json", prof);
  if (ctx.wants("csv")) {
    std::string csv = csv_line({"key", "buckets", "knob", "accuracy", "network", "compute", "samples"});
    for (const auto& [key, entries] : prof.table)
      for (const auto& e : entries)
        csv += csv_line({key, bucket_label(prof.buckets, key), knob_label(e.knob), fnum(e.accuracy), fnum(e.network),
                         fnum(e.compute), std::to_string(e.samples)});
    ctx.out->write(stem + ".csv", csv);
  }
  if (ctx.wants("svg")) ctx.out->write(stem + ".svg", profile_svg(prof, s.dimension));
  ctx.out->write_manifest("profile", ctx.config);
  return kOk;
}

// ---------------------------------------------------------------------------
// compose

int cmd_compose(const Globals& g, const std::array<std::string, 3>& paths, const std::string& dimension) {
  auto ctx = make_context(g, "compose", {"json", "csv"}, {"json", "csv"});
  std::array<PrimitiveProfile, 3> parts;
  for (auto p : kPrimitives) {
    const auto i = static_cast<std::size_t>(p);
    parts[i] = paths[i].empty() || paths[i] == "oracle" ? oracle_profile(p) : read_as<PrimitiveProfile>(ctx, paths[i]);
    if (parts[i].primitive != p) throw InputError("profile given for --" + std::string(to_string(p)) + " is a " +
                                                  std::string(to_string(parts[i].primitive)) + " profile");
  }
  const auto dim = dimension.empty() ? ctx.settings.dimension : cost_dimension_from_string(dimension);
  const auto pc = build_pc_profile(parts[0], parts[1], parts[2], dim);
  if (ctx.wants("json")) ctx.out->write_json("pc_profile.json", pc);
  if (ctx.wants("csv")) {
    std::string csv = csv_line({"key", "accuracy", "network", "compute", "temporal", "spatial", "model"});
    for (const auto& [key, pts] : pc.table)
      for (const auto& pt : pts)
        csv += csv_line({key, fnum(pt.perf.accuracy), fnum(pt.perf.network), fnum(pt.perf.compute),
                         knob_label(pt.knobs[0]), knob_label(pt.knobs[1]), knob_label(pt.knobs[2])});
    ctx.out->write("pc_profile.csv", csv);
  }
  ctx.out->write_manifest("compose", ctx.config);
  return kOk;
}

// ---------------------------------------------------------------------------
// emulate

int cmd_emulate(const Globals& g, const std::string& preset_name, const std::string& vap_path,
                const std::string& trace_path, const std::string& cheap_path, bool tune) {
  auto ctx = make_context(g, "emulate", {"json", "csv"}, {"json"});
  const auto& s = ctx.settings;
  VapConfig tmpl = read_vap(ctx, preset_name, vap_path);
  const auto grid = default_grid(tmpl, s.degradation);
  // presets carry strategy kinds only; without tuning each stage runs its
  // mildest knob
  if (!preset_name.empty() && !tune)
    for (auto p : kPrimitives)
      if (!grid[p].empty()) tmpl.stage(p) = grid[p].front();
  const auto gt = read_trace(ctx, existing(trace_path));
  std::optional<DetectionTrace> cheap;
  if (!cheap_path.empty()) cheap = read_trace(ctx, existing(cheap_path));
  Corpus c;
  c.add_video(gt, cheap ? &*cheap : nullptr, s.segment_seconds);
  struct Row {
    VapConfig config;
    PerfPoint perf;
    bool met_target = true;
  };
  std::vector<Row> rows(c.size());
  parallel_for(c.size(), s.jobs, [&](std::size_t i) {
    const auto& seg = c.segments()[i];
    if (tune) {
      const auto t = tune_on_prefix(tmpl, grid, seg.gt, seg.cheap_ptr(), s.accuracy_target, s.degradation, s.match);
      rows[i] = {t.config, evaluate_held_out(t.config, seg.gt, seg.cheap_ptr(), s.degradation, s.match), t.met_target};
    } else {
      rows[i] = {tmpl, run_vap(tmpl, seg.gt, seg.cheap_ptr(), s.degradation, s.match).perf, true};
    }
  });
  if (ctx.wants("json")) {
    json segs = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      json e{{"segment_index", c.segments()[i].ref.segment_index}, {"perf", rows[i].perf}, {"config", rows[i].config}};
      if (tune) e["met_target"] = rows[i].met_target;
      segs.push_back(std::move(e));
    }
    ctx.out->write_json("emulate.json",
                        {{"video_id", gt.video_id}, {"tuned", tune}, {"accuracy_target", s.accuracy_target}, {"segments", segs}});
  }
  if (ctx.wants("csv")) {
    std::string csv = csv_line({"segment_index", "accuracy", "network", "compute", "temporal", "spatial", "model"});
    for (std::size_t i = 0; i < rows.size(); ++i)
      csv += csv_line({std::to_string(c.segments()[i].ref.segment_index), fnum(rows[i].perf.accuracy),
                       fnum(rows[i].perf.network), fnum(rows[i].perf.compute), knob_label(rows[i].config.temporal),
                       knob_label(rows[i].config.spatial), knob_label(rows[i].config.model)});
    ctx.out->write("emulate.csv", csv);
  }
  ctx.out->write_manifest("emulate", ctx.config);
  return kOk;
}

// ---------------------------------------------------------------------------
// estimate

EstimateOptions estimate_options(const Settings& s, const PCProfile& pc) {
  EstimateOptions opt;
  opt.accuracy_target = s.accuracy_target;
  opt.dimension = pc.vap.cost_dimension;
  opt.thresholds = s.thresholds;
  opt.missing = s.missing;
  return opt;
}

int cmd_estimate(const Globals& g, const std::string& pc_path, const std::string& trace_path,
                 const std::string& fixed_path) {
  auto ctx = make_context(g, "estimate", {"json", "csv"}, {"json", "csv"});
  const auto& s = ctx.settings;
  const auto pc = read_as<PCProfile>(ctx, pc_path);
  auto opt = estimate_options(s, pc);
  if (!fixed_path.empty()) {
    const auto v = read_as<VapConfig>(ctx, fixed_path);
    opt.fixed_knobs = std::array{v.temporal, v.spatial, v.model};
  }
  const auto trace = read_trace(ctx, existing(trace_path));
  const auto rep = estimate_performance(pc, scan_features(trace, pc.schema.buckets, s.scan), opt);
  if (ctx.wants("json")) ctx.out->write_json("estimate.json", rep);
  if (ctx.wants("csv")) {
    std::string csv = csv_line({"segment_index", "key", "feasible", "fallback", "accuracy", "network", "compute"});
    for (const auto& e : rep.segments)
      csv += csv_line({std::to_string(e.segment_index), e.key, e.query.feasible ? "1" : "0", e.query.fallback ? "1" : "0",
                       fnum(e.query.point.perf.accuracy), fnum(e.query.point.perf.network),
                       fnum(e.query.point.perf.compute)});
    ctx.out->write("estimate.csv", csv);
  }
  ctx.out->write_manifest("estimate", ctx.config);
  if (rep.infeasible > 0)
    throw InfeasibleQuery(std::to_string(rep.infeasible) + " of " + std::to_string(rep.segments.size()) +
                          " segments cannot reach accuracy " + fnum(opt.accuracy_target));
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const Globals& g, const std::string& corpus_path, const std::string& pc_path,
                 const std::string& benchmark_path) {
  auto ctx = make_context(g, "evaluate", {"json", "csv", "svg"}, {"json", "csv", "svg"});
  const auto& s = ctx.settings;
  const auto pc = read_as<PCProfile>(ctx, pc_path);
  std::set<SegmentRef> excluded;
  if (!benchmark_path.empty())
    for (const auto& [prim, b] : read_benchmark(ctx, benchmark_path))
      for (const auto& [key, refs] : b.entries) excluded.insert(refs.begin(), refs.end());
  const auto videos = load_videos(ctx, corpus_path);
  const auto c = corpus_of(videos, s.segment_seconds);
  const auto opt = estimate_options(s, pc);
  // measured: cheapest profiled knob triple reaching the target per segment
  KnobGrid grid;
  for (auto p : kPrimitives) grid[p] = pc.parts[static_cast<std::size_t>(p)].knobs;
  std::vector<std::optional<double>> measured(c.size());
  parallel_for(c.size(), s.jobs, [&](std::size_t i) {
    const auto best = min_cost_at(measure_grid(pc.vap, grid, c.segments()[i], s.degradation, s.match),
                                  opt.accuracy_target, opt.dimension);
    if (best) measured[i] = best->perf.cost(opt.dimension);
  });
  std::vector<double> reference;
  std::map<std::string, std::vector<double>> per_video;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (measured[i]) {
      reference.push_back(*measured[i]);
      per_video[c.segments()[i].ref.video_id].push_back(*measured[i]);
    }
  if (reference.empty()) throw InfeasibleQuery("no segment reaches accuracy " + fnum(opt.accuracy_target));
  std::vector<double> estimated;
  std::size_t candidates = 0;
  for (const auto& v : videos) {
    const auto& trace = v.cheap ? *v.cheap : v.gt;
    const auto rep = estimate_performance(pc, scan_features(trace, pc.schema.buckets, s.scan), opt);
    for (const auto& e : rep.segments) {
      if (excluded.count({v.video_id, e.segment_index})) continue;
      ++candidates;
      if (e.query.feasible) estimated.push_back(e.query.point.perf.cost(opt.dimension));
    }
  }
  if (candidates == 0) throw InputError("every segment of the corpus is a benchmark segment");
  if (estimated.empty()) throw InfeasibleQuery("no estimated segment reaches the accuracy target");
  const auto est = clarity_score(estimated, reference, s.band.lo, s.band.hi);
  std::vector<std::pair<std::string, ClarityScore>> singles;
  for (const auto& [id, costs] : per_video) singles.emplace_back(id, clarity_score(costs, reference, s.band.lo, s.band.hi));
  const auto [rlo, rhi] = stats::min_max(reference);
  if (ctx.wants("json")) {
    json single = json::array();
    for (const auto& [id, sc] : singles) {
      json e = sc;
      e["video_id"] = id;
      single.push_back(std::move(e));
    }
    ctx.out->write_json("evaluate.json", {{"accuracy_target", opt.accuracy_target},
                                          {"cost_dimension", std::string(to_string(opt.dimension))},
                                          {"reference_range", {rlo, rhi}},
                                          {"estimated", est},
                                          {"single_video", single}});
  }
  if (ctx.wants("csv")) {
    std::string csv = csv_line({"method", "video_id", "coverage", "variance", "segments"});
    csv += csv_line({"estimated", "", opt_num(est.coverage), fnum(est.variance), std::to_string(est.evaluated)});
    for (const auto& [id, sc] : singles)
      csv += csv_line({"single_video", id, opt_num(sc.coverage), fnum(sc.variance), std::to_string(sc.evaluated)});
    ctx.out->write("evaluate.csv", csv);
  }
  if (ctx.wants("svg")) {
    std::vector<report::ScatterPoint> pts;
    double ymax = est.variance;
    pts.push_back({est.coverage.value_or(0.0), est.variance, "", "estimated"});
    for (const auto& [id, sc] : singles) {
      pts.push_back({sc.coverage.value_or(0.0), sc.variance, id, "single video"});
      ymax = std::max(ymax, sc.variance);
    }
    ctx.out->write("evaluate.svg", report::scatter(pts, "coverage", "variance", ymax > 0 ? ymax * 1.1 : 1.0));
  }
  ctx.out->write_manifest("evaluate", ctx.config);
  return kOk;
}

// ---------------------------------------------------------------------------
// regime-map

std::string regime_svg(const RegimeMap& m, const PrimitiveProfile& a) {
  const double cell = 48, left = 90, top = 40;
  const double w = left + cell * m.nx + 160, h = top + cell * m.ny + 60;
  report::Svg svg(w, h);
  svg.text(10, 20, "cheaper at accuracy target: " + m.first + " vs " + m.second, "start", 13);
  const std::map<RegimeCell, std::string> colors{{RegimeCell::first, "#1f77b4"},
                                                 {RegimeCell::second, "#d62728"},
                                                 {RegimeCell::tie, "#bbbbbb"},
                                                 {RegimeCell::no_data, "#ffffff"}};
  for (int y = 0; y < m.ny; ++y)
    for (int x = 0; x < m.nx; ++x) {
      const auto c = m.cells[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
      // row 0 at the bottom
      svg.rect(left + cell * x, top + cell * (m.ny - 1 - y), cell, cell, colors.at(c), "#666");
    }
  const auto edges_of = [&](std::size_t f) {
    for (std::size_t i = 0; i < a.buckets.arity(); ++i)
      if (a.buckets.feature_ids[i] == f) return a.buckets.edges[i];
    return std::vector<double>{};
  };
  const auto ex = edges_of(m.feature_x), ey = edges_of(m.feature_y);
  for (std::size_t i = 0; i < ex.size(); ++i)
    svg.text(left + cell * static_cast<double>(i), top + cell * m.ny + 14, report::num(ex[i]), "middle", 9);
  for (std::size_t i = 0; i < ey.size(); ++i)
    svg.text(left - 4, top + cell * (m.ny - static_cast<double>(i)) + 3, report::num(ey[i]), "end", 9);
  svg.text(left + cell * m.nx / 2, top + cell * m.ny + 34, feature_names()[m.feature_x], "middle", 11);
  svg.text(14, top + cell * m.ny / 2, feature_names()[m.feature_y], "middle", 11, -90.0);
  double ly = top + 10;
  for (const auto& [c, color] : colors) {
    const std::string label = c == RegimeCell::first    ? m.first
                              : c == RegimeCell::second ? m.second
                                                        : std::string(to_string(c));
    svg.rect(left + cell * m.nx + 16, ly - 9, 10, 10, color, "#666");
    svg.text(left + cell * m.nx + 32, ly, label, "start", 10);
    ly += 16;
  }
  return svg.str();
}

int cmd_regime_map(const Globals& g, const std::string& first_path, const std::string& second_path,
                   const std::string& x_name, const std::string& y_name) {
  auto ctx = make_context(g, "regime-map", {"json", "csv", "svg"}, {"json", "csv", "svg"});
  const auto a = read_as<PrimitiveProfile>(ctx, first_path);
  const auto b = read_as<PrimitiveProfile>(ctx, second_path);
  const auto m = regime_map(a, b, feature_index(x_name), feature_index(y_name), ctx.settings.regime);
  if (ctx.wants("json")) {
    json j = m;
    auto grid = [](const std::vector<std::vector<std::optional<double>>>& v) {
      json out = json::array();
      for (const auto& row : v) {
        json r = json::array();
        for (const auto& c : row) r.push_back(c ? json(*c) : json(nullptr));
        out.push_back(r);
      }
      return out;
    };
    j["cost_first"] = grid(m.cost_first);
    j["cost_second"] = grid(m.cost_second);
    ctx.out->write_json("regime_map.json", j);
  }
  if (ctx.wants("csv")) {
    std::string csv = csv_line({"x_bucket", "y_bucket", "winner", "cost_first", "cost_second"});
    for (int y = 0; y < m.ny; ++y)
      for (int x = 0; x < m.nx; ++x) {
        const auto yi = static_cast<std::size_t>(y), xi = static_cast<std::size_t>(x);
        csv += csv_line({std::to_string(x), std::to_string(y), std::string(to_string(m.cells[yi][xi])),
                         opt_num(m.cost_first[yi][xi]), opt_num(m.cost_second[yi][xi])});
      }
    ctx.out->write("regime_map.csv", csv);
  }
  if (ctx.wants("svg")) ctx.out->write("regime_map.svg", regime_svg(m, a));
  ctx.out->write_manifest("regime-map", ctx.config);
  return kOk;
}

int fail(int code, const std::string& kind, const std::string& message, std::optional<std::size_t> line = {}) {
  json e{{"code", code}, {"kind", kind}, {"message", message}};
  if (line) e["line"] = *line;
  std::cerr << json{{"error", e}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Profile and estimate video analytics pipelines on detection traces"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON config layered over the built-in defaults")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Base seed for generated data");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and manifest.json");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", g.formats, "Output formats to write")->check(CLI::IsMember({"json", "csv", "svg"}));

  std::function<int()> run;
  std::string corpus, features, selection, benchmark, primitive, strategy, pc, trace, cheap, fixed, vap_path, preset_name,
      source, dimension, first, second, fx, fy;
  std::array<std::string, 3> parts;
  std::vector<std::string> holdout;
  std::optional<double> duration;
  bool tune = false;

  auto* synth = app.add_subcommand("synth", "Generate the configured synthetic videos");
  synth->add_option("--duration", duration, "Override every video's duration in seconds");
  synth->callback([&] { run = [&] { return cmd_synth(g, duration); }; });

  auto* feat = app.add_subcommand("featurize", "Per-segment feature matrix of a corpus");
  feat->add_option("--corpus", corpus)->required();
  feat->add_option("--source", source)->check(CLI::IsMember({"cheap", "ground_truth"}));
  feat->callback([&] { run = [&] { return cmd_featurize(g, corpus, source); }; });

  auto* sel = app.add_subcommand("select-features", "Pick bucketing features per primitive");
  sel->add_option("--corpus", corpus)->required();
  sel->add_option("--features", features)->required();
  sel->add_option("--holdout", holdout, "Strategies kept out of selection");
  sel->callback([&] { run = [&] { return cmd_select_features(g, corpus, features, holdout); }; });

  auto* bb = app.add_subcommand("build-benchmark", "Bucket the feature space and pick benchmark segments");
  bb->add_option("--features", features)->required();
  bb->add_option("--selection", selection)->required();
  bb->callback([&] { run = [&] { return cmd_build_benchmark(g, features, selection); }; });

  auto* prof = app.add_subcommand("profile", "Profile one strategy on the benchmark segments");
  prof->add_option("--corpus", corpus)->required();
  prof->add_option("--benchmark", benchmark)->required();
  prof->add_option("--primitive", primitive)->required()->check(CLI::IsMember({"temporal", "spatial", "model"}));
  prof->add_option("--strategy", strategy)->required();
  prof->callback([&] { run = [&] { return cmd_profile(g, corpus, benchmark, primitive, strategy); }; });

  auto* comp = app.add_subcommand("compose", "Combine three strategy profiles into a pipeline profile");
  comp->add_option("--temporal", parts[0], "Profile file or 'oracle'");
  comp->add_option("--spatial", parts[1], "Profile file or 'oracle'");
  comp->add_option("--model", parts[2], "Profile file or 'oracle'");
  comp->add_option("--dimension", dimension)->check(CLI::IsMember({"network", "compute", "both"}));
  comp->callback([&] { run = [&] { return cmd_compose(g, parts, dimension); }; });

  auto* emu = app.add_subcommand("emulate", "Run a pipeline on a trace, per segment");
  emu->add_option("--preset", preset_name);
  emu->add_option("--vap", vap_path, "Pipeline config JSON");
  emu->add_option("--trace", trace)->required();
  emu->add_option("--cheap", cheap, "Cheap-model trace of the same video");
  emu->add_flag("--tune", tune, "Tune knobs on each segment's first third, report the rest");
  emu->callback([&] { run = [&] { return cmd_emulate(g, preset_name, vap_path, trace, cheap, tune); }; });

  auto* est = app.add_subcommand("estimate", "Estimate a pipeline's per-segment performance from a profile");
  est->add_option("--pc", pc)->required();
  est->add_option("--trace", trace, "Trace to scan, usually the cheap-model trace")->required();
  est->add_option("--fixed", fixed, "Pipeline config whose accuracy drives alpha/beta");
  est->callback([&] { run = [&] { return cmd_estimate(g, pc, trace, fixed); }; });

  auto* ev = app.add_subcommand("evaluate", "Coverage and variance of estimate-based vs single-video evaluation");
  ev->add_option("--corpus", corpus)->required();
  ev->add_option("--pc", pc)->required();
  ev->add_option("--benchmark", benchmark, "Exclude these benchmark segments from the estimate side");
  ev->callback([&] { run = [&] { return cmd_evaluate(g, corpus, pc, benchmark); }; });

  auto* rm = app.add_subcommand("regime-map", "Which of two strategies is cheaper across a feature plane");
  rm->add_option("--first", first)->required();
  rm->add_option("--second", second)->required();
  rm->add_option("--x", fx)->required();
  rm->add_option("--y", fy)->required();
  rm->callback([&] { run = [&] { return cmd_regime_map(g, first, second, fx, fy); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kConfig, "usage", e.what());
  }
  try {
    return run();
  } catch (const InfeasibleQuery& e) {
    return fail(kInfeasible, "infeasible", e.what());
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const TraceFormatError& e) {
    return fail(kInput, "trace_format", e.detail(), e.line());
  } catch (const InputError& e) {
    return fail(kInput, "input", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(kInput, "input", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "internal", e.what());
  }
}
