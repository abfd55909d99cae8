#include "keynet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "keynet/error.hpp"

namespace keynet {

namespace {

int mod12(int v) { return ((v % 12) + 12) % 12; }

}  // namespace

Category categorize(KeyLabel pred, KeyLabel target) {
  const int up = mod12(pred.tonic() - target.tonic());
  if (pred.mode() == target.mode()) {
    if (up == 0) return Category::kCorrect;
    if (up == 7 || up == 5) return Category::kFifth;
    return Category::kOther;
  }
  if (pred.is_minor() && mod12(target.tonic() - pred.tonic()) == 3) return Category::kRelative;
  if (!pred.is_minor() && up == 3) return Category::kRelative;
  if (up == 0) return Category::kParallel;
  return Category::kOther;
}

double category_weight(Category c) {
  switch (c) {
    case Category::kCorrect: return 1.0;
    case Category::kFifth: return 0.5;
    case Category::kRelative: return 0.3;
    case Category::kParallel: return 0.2;
    case Category::kOther: return 0.0;
  }
  return 0.0;
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kCorrect: return "Correct";
    case Category::kFifth: return "Fifth";
    case Category::kRelative: return "Relative";
    case Category::kParallel: return "Parallel";
    case Category::kOther: return "Other";
  }
  return "?";
}

EvalReport evaluate(std::span<const KeyPair> pairs) {
  if (pairs.empty()) throw InvalidArgument("evaluate: no prediction/target pairs");
  EvalReport r;
  r.n = pairs.size();
  for (const auto& [pred, target] : pairs) {
    ++r.counts[static_cast<std::size_t>(categorize(pred, target))];
  }
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    r.ratios[i] = static_cast<double>(r.counts[i]) / static_cast<double>(r.n);
  }
  r.weighted = r.ratio(Category::kCorrect) + 0.5 * r.ratio(Category::kFifth) +
               0.3 * r.ratio(Category::kRelative) + 0.2 * r.ratio(Category::kParallel);
  return r;
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream os;
  char line[64];
  std::snprintf(line, sizeof line, "%-10s %8zu\n", "Pieces", report.n);
  os << line;
  std::snprintf(line, sizeof line, "%-10s %8.1f\n", "Weighted", 100.0 * report.weighted);
  os << line;
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    auto name = category_name(static_cast<Category>(i));
    std::snprintf(line, sizeof line, "%-10.*s %8.1f\n", static_cast<int>(name.size()),
                  name.data(), 100.0 * report.ratios[i]);
    os << line;
  }
  return os.str();
}

std::string format_report_summary(const EvalReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", report.n,
                report.ratios[0], report.ratios[1], report.ratios[2], report.ratios[3],
                report.ratios[4], report.weighted);
  return buf;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> scores_a,
                                    std::span<const double> scores_b) {
  if (scores_a.size() != scores_b.size()) {
    throw InvalidArgument("wilcoxon_signed_rank: samples differ in length");
  }
  if (scores_a.size() < 5) {
    throw InvalidArgument("wilcoxon_signed_rank: need at least 5 paired values");
  }
  // Differences of category weights are sums of decimals; a small tolerance
  // keeps e.g. 0.5 - 0.3 and 0.2 - 0.0 tied.
  constexpr double kEps = 1e-9;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < scores_a.size(); ++i) {
    const double d = scores_a[i] - scores_b[i];
    if (std::abs(d) > kEps) diffs.push_back(d);
  }
  WilcoxonResult res;
  res.nonzero = diffs.size();
  if (diffs.empty()) return res;

  const std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(diffs[a]) < std::abs(diffs[b]);
  });
  // Ranks doubled so that average ranks of ties stay integral.
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && std::abs(diffs[order[j]]) - std::abs(diffs[order[i]]) <= kEps) ++j;
    const long avg2 = static_cast<long>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = avg2;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  long plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (diffs[i] > 0) plus2 += rank2[i];
  }
  const long w2 = std::min(plus2, total2 - plus2);
  res.statistic = static_cast<double>(w2) / 2.0;

  if (n <= kWilcoxonExactLimit) {
    // counts[s] = number of sign patterns whose doubled W+ equals s.
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long r : rank2) {
      for (long s = reach; s >= 0; --s) {
        counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
      }
      reach += r;
    }
    double tail = 0.0;
    for (long s = 0; s <= w2; ++s) tail += counts[static_cast<std::size_t>(s)];
    res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
    res.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (res.statistic - mean) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    res.exact = false;
  }
  return res;
}

std::vector<std::pair<std::string, KeyLabel>> read_key_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::string, KeyLabel>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'piece_id<TAB>key'");
    }
    try {
      out.emplace_back(line.substr(0, tab), parse_key_annotation(line.substr(tab + 1)));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_key_file(const std::filesystem::path& path,
                    std::span<const std::pair<std::string, KeyLabel>> entries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  for (const auto& [id, key] : entries) out << id << '\t' << to_string(key) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace keynet
