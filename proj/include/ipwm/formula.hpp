#pragma once

// A small model-formula language:
//   Y ~ A + Z + B + L1 + L2      main effects
//   Y ~ A*Z*B*L                  all interactions of the listed factors
//   Z ~ B:L                      a single product term
//   A ~ Z + B + .                '.' = every covariate of the dataset
//   A ~ L - 1   or   A ~ 0 + L   no intercept

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ipwm/core.hpp"

namespace ipwm {

using Term = std::vector<std::string>;

struct DesignSpec {
  std::string response;
  std::vector<Term> terms;
  bool intercept = true;

  std::string to_string() const {
    std::string s = response + " ~ ";
    bool first = true;
    if (!intercept) {
      s += "0";
      first = false;
    }
    for (const auto& t : terms) {
      if (!first) s += " + ";
      first = false;
      for (std::size_t k = 0; k < t.size(); ++k) s += (k ? ":" : "") + t[k];
    }
    if (first) s += "1";
    return s;
  }

  bool operator==(const DesignSpec&) const = default;
};

inline std::string term_name(const Term& t) {
  std::string s;
  for (std::size_t k = 0; k < t.size(); ++k) s += (k ? ":" : "") + t[k];
  return s;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.'))
    return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

inline std::string canonical(Term t) {
  std::sort(t.begin(), t.end());
  return term_name(t);
}

}  // namespace detail

/// Parses a formula. `covariates` is only needed to expand '.'.
inline DesignSpec parse_formula(std::string_view text,
                                const std::vector<std::string>& covariates = {}) {
  const auto tilde = text.find('~');
  if (tilde == std::string_view::npos || text.find('~', tilde + 1) != std::string_view::npos)
    throw FormulaError("formula needs exactly one '~': " + std::string(text));
  DesignSpec spec;
  spec.response = detail::trim(text.substr(0, tilde));
  if (!detail::valid_name(spec.response))
    throw FormulaError("invalid response name in: " + std::string(text));

  // Signed tokens separated by '+' or '-'; whitespace inside a token is
  // ignored. Only the leading token may be empty (a formula starting "-1").
  std::vector<std::pair<bool, std::string>> tokens;  // (subtracted, token)
  {
    bool neg = false;
    std::string cur;
    const std::string_view rhs_text = text.substr(tilde + 1);
    for (std::size_t i = 0; i <= rhs_text.size(); ++i) {
      const char c = i < rhs_text.size() ? rhs_text[i] : '+';
      if (c == '+' || c == '-') {
        const bool leading = tokens.empty() && cur.empty() && c == '-' && i < rhs_text.size();
        if (!leading) {
          if (cur.empty()) throw FormulaError("empty term in: " + std::string(text));
          tokens.emplace_back(neg, cur);
        }
        cur.clear();
        neg = c == '-';
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        cur += c;
      }
    }
  }

  std::set<std::string> seen;
  auto add = [&](Term t) {
    std::set<std::string> uniq(t.begin(), t.end());
    if (uniq.size() != t.size())
      throw FormulaError("variable repeated inside term '" + term_name(t) + "'");
    if (!seen.insert(detail::canonical(t)).second)
      throw FormulaError("duplicate term '" + term_name(t) + "'");
    spec.terms.push_back(std::move(t));
  };

  for (const auto& [neg, raw] : tokens) {
    if (neg) {
      if (raw != "1") throw FormulaError("only '-1' may be subtracted: " + std::string(text));
      spec.intercept = false;
      continue;
    }
    if (raw == "1") { spec.intercept = true; continue; }
    if (raw == "0") { spec.intercept = false; continue; }

    if (raw == ".") {
      if (covariates.empty()) throw FormulaError("'.' used without a covariate list");
      for (const auto& c : covariates) add(Term{c});
      continue;
    }
    if (raw.find('*') != std::string::npos) {
      const auto factors = detail::split(raw, '*');
      for (const auto& f : factors)
        if (!detail::valid_name(f)) throw FormulaError("invalid factor '" + f + "'");
      const std::size_t k = factors.size();
      if (k > 16) throw FormulaError("too many factors in '" + raw + "'");
      // Order: by degree, then in the order the factors were written.
      for (std::size_t deg = 1; deg <= k; ++deg) {
        std::vector<bool> pick(k, false);
        std::fill(pick.begin(), pick.begin() + static_cast<long>(deg), true);
        std::vector<Term> level;
        do {
          Term t;
          for (std::size_t i = 0; i < k; ++i)
            if (pick[i]) t.push_back(factors[i]);
          level.push_back(std::move(t));
        } while (std::prev_permutation(pick.begin(), pick.end()));
        for (auto& t : level) add(std::move(t));
      }
      continue;
    }
    Term t = detail::split(raw, ':');
    for (const auto& v : t)
      if (!detail::valid_name(v)) throw FormulaError("invalid variable name '" + v + "'");
    add(std::move(t));
  }
  return spec;
}

/// Convenience: response ~ v1 + v2 + ... (main effects, with intercept).
inline DesignSpec main_effects(std::string response, const std::vector<std::string>& vars) {
  DesignSpec s;
  s.response = std::move(response);
  for (const auto& v : vars) s.terms.push_back(Term{v});
  return s;
}

}  // namespace ipwm
