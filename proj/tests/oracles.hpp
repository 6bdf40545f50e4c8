#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance runner. Deliberately naive.

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace memagent::oracle {

inline std::string normalize(const std::string& s) {
  std::string kept;
  for (unsigned char c : s) {
    if (c < 0x80 && std::ispunct(c)) continue;
    kept += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
  }
  std::vector<std::string> words;
  std::string cur;
  for (char c : kept + " ") {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty() && cur != "a" && cur != "an" && cur != "the") words.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

// Double loop over every ground truth and every start offset.
inline double all_of(const std::string& pred, const std::vector<std::string>& ys) {
  const auto p = normalize(pred);
  std::size_t hits = 0;
  for (const auto& y : ys) {
    const auto t = normalize(y);
    const bool numeric = !t.empty() && std::all_of(t.begin(), t.end(), ::isdigit);
    bool found = false;
    for (std::size_t i = 0; !t.empty() && i + t.size() <= p.size() && !found; ++i) {
      bool same = true;
      for (std::size_t k = 0; k < t.size() && same; ++k) same = p[i + k] == t[k];
      if (!same) continue;
      if (numeric) {
        const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(p[i - 1]));
        const bool right =
            i + t.size() == p.size() || !std::isalnum(static_cast<unsigned char>(p[i + t.size()]));
        if (!left || !right) continue;
      }
      found = true;
    }
    if (found) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ys.size());
}

inline std::size_t count_needles(const std::string& ctx) {
  static const std::regex re(R"(One of the special magic numbers for [a-z]+-[a-z]+ is: \d{7}\.)");
  return static_cast<std::size_t>(
      std::distance(std::sregex_iterator(ctx.begin(), ctx.end(), re), std::sregex_iterator()));
}

// Every variable whose value resolves to `root` through the VAR statements.
inline std::set<std::string> reachable_vars(const std::string& ctx, const std::string& root) {
  static const std::regex re(R"(VAR ([A-Z]+) = ([A-Z0-9]+)\.)");
  std::multimap<std::string, std::string> users;
  for (auto it = std::sregex_iterator(ctx.begin(), ctx.end(), re); it != std::sregex_iterator(); ++it)
    users.emplace((*it)[2].str(), (*it)[1].str());
  std::set<std::string> out;
  std::vector<std::string> frontier{root};
  while (!frontier.empty()) {
    const auto cur = frontier.back();
    frontier.pop_back();
    auto [lo, hi] = users.equal_range(cur);
    for (auto i = lo; i != hi; ++i)
      if (out.insert(i->second).second) frontier.push_back(i->second);
  }
  return out;
}

inline std::string vt_root(const std::string& question) {
  static const std::regex root_re(R"(assigned the value (\d+) )");
  std::smatch m;
  return std::regex_search(question, m, root_re) ? m[1].str() : std::string{};
}

// Top-k words by count; empty when the k-th and (k+1)-th counts tie.
inline std::set<std::string> top_words(const std::string& ctx, std::size_t k) {
  std::map<std::string, std::size_t> counts;
  std::istringstream in(ctx);
  for (std::string w; in >> w;) ++counts[w];
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& [w, n] : counts) ranked.emplace_back(n, w);
  std::sort(ranked.rbegin(), ranked.rend());
  if (ranked.size() <= k || ranked[k - 1].first == ranked[k].first) return {};
  std::set<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.insert(ranked[i].second);
  return out;
}

}  // namespace memagent::oracle
