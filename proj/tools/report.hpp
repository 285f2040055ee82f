#pragma once

// Output plumbing for the command-line tool: hashing, the per-directory run
// manifest, and small hand-rolled SVG charts.

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/errors.hpp"

namespace vapbench::report {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string file_sha256(const fs::path& p) { return sha256_hex(read_file(p)); }

/// UTC timestamp; SOURCE_DATE_EPOCH pins it for reproducible builds.
inline std::string timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects the files one command writes into its output directory and
/// records them in that directory's manifest.json.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& path() const { return dir_; }

  void write(const std::string& name, const std::string& bytes) {
    const fs::path p = dir_ / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p.string());
    out << bytes;
    if (!out) throw InputError("write failed for " + p.string());
    outputs_[name] = sha256_hex(bytes);
  }

  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

  void add_input(const fs::path& p) { inputs_[p.string()] = file_sha256(p); }

  /// Replaces this command's previous entry, keeping other commands' runs.
  void write_manifest(const std::string& command, const nlohmann::json& config) {
    const fs::path p = dir_ / "manifest.json";
    nlohmann::json m{{"tool", "vapbench"}, {"tool_version", kToolVersion}, {"runs", nlohmann::json::object()}};
    if (fs::exists(p)) {
      try {
        const auto old = nlohmann::json::parse(read_file(p));
        if (old.contains("runs") && old["runs"].is_object()) m["runs"] = old["runs"];
      } catch (const nlohmann::json::exception&) {
        // unreadable manifests are rebuilt from scratch
      }
    }
    m["runs"][command] = {{"command", command},
                          {"config_sha256", sha256_hex(config.dump())},
                          {"inputs", inputs_},
                          {"outputs", outputs_},
                          {"timestamp", timestamp()}};
    std::ofstream out(p, std::ios::binary);
    out << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

// ---------------------------------------------------------------------------
// SVG

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none") {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
          << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#000") {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
          << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill
          << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "start", int size = 11,
            double rotate = 0.0) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\"";
    if (rotate != 0.0) body_ << " transform=\"rotate(" << num(rotate) << " " << num(x) << " " << num(y) << ")\"";
    body_ << ">" << escape(s) << "</text>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_) << "\" height=\"" << num(h_)
        << "\" viewBox=\"0 0 " << num(w_) << " " << num(h_) << "\">\n"
        << "<metadata>generated " << timestamp() << "</metadata>\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

/// Linear ramp from pale yellow (0) to dark blue (1).
inline std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto mix = [t](int a, int b) { return static_cast<int>(a + (b - a) * t + 0.5); };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(255, 33), mix(247, 102), mix(188, 172));
  return buf;
}

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;
  std::string series;
};

inline std::string scatter(const std::vector<ScatterPoint>& pts, const std::string& xlabel, const std::string& ylabel,
                           double ymax) {
  const double W = 520, H = 400, L = 60, R = 140, T = 20, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  Svg svg(W, H);
  svg.rect(L, T, pw, ph, "none", "#444");
  for (int i = 0; i <= 4; ++i) {
    const double fx = L + pw * i / 4.0, fy = T + ph - ph * i / 4.0;
    svg.line(fx, T + ph, fx, T + ph + 4);
    svg.text(fx, T + ph + 16, num(i / 4.0), "middle");
    svg.line(L - 4, fy, L, fy);
    svg.text(L - 6, fy + 4, num(ymax * i / 4.0), "end");
  }
  svg.text(L + pw / 2, H - 10, xlabel, "middle", 12);
  svg.text(16, T + ph / 2, ylabel, "middle", 12, -90.0);
  std::map<std::string, std::string> colors;
  const std::vector<std::string> palette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (const auto& p : pts)
    if (!colors.count(p.series)) colors[p.series] = palette[colors.size() % palette.size()];
  for (const auto& p : pts) {
    const double x = L + pw * std::clamp(p.x, 0.0, 1.0);
    const double y = T + ph - ph * std::clamp(ymax > 0 ? p.y / ymax : 0.0, 0.0, 1.0);
    svg.circle(x, y, 4, colors[p.series]);
    if (!p.label.empty()) svg.text(x + 6, y - 4, p.label, "start", 9);
  }
  double ly = T + 10;
  for (const auto& [name, color] : colors) {
    svg.circle(W - R + 16, ly - 4, 4, color);
    svg.text(W - R + 26, ly, name);
    ly += 16;
  }
  return svg.str();
}

}  // namespace vapbench::report
