#pragma once

// Minimal model-description parser. Grammar:
//   formula  := response "~" ["0" "+"] term ("+" term)*
//   response := name | "cbind" "(" name "," name ")"
//   term     := "." | name | ("log"|"sqrt"|"square") "(" name ")"
//             | "poly" "(" name "," integer ")" | name ":" name
// Anything else is rejected with a position-annotated error.

#include <string>
#include <variant>
#include <vector>

#include "coneglm/types.hpp"

namespace coneglm {

enum class TransformKind { log, sqrt, square };

inline const char* transform_name(TransformKind k) {
  switch (k) {
    case TransformKind::log: return "log";
    case TransformKind::sqrt: return "sqrt";
    case TransformKind::square: return "square";
  }
  return "?";
}

struct RawTerm {
  std::string column;
};
struct TransformTerm {
  TransformKind kind;
  std::string column;
};
struct PolyTerm {
  std::string column;
  Index degree;
};
struct InteractionTerm {
  std::string a, b;
};
struct DotTerm {};  // "." expands to every non-response column

using Term = std::variant<RawTerm, TransformTerm, PolyTerm, InteractionTerm, DotTerm>;

struct Formula {
  std::string response;            // single response column
  std::string response_failures;   // nonempty for cbind(successes, failures)
  std::vector<Term> terms;
  bool intercept = true;

  bool is_count_response() const { return !response_failures.empty(); }
};

namespace formula_detail {

struct Lexer {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  bool accept(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!accept(c))
      throw InputError("formula: expected '" + std::string(1, c) + "' (" +
                       what + ") at position " + std::to_string(pos + 1));
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw InputError("formula: " + msg + " at position " +
                     std::to_string(pos + 1));
  }
  std::string name() {
    skip_ws();
    const size_t start = pos;
    if (pos < s.size() && s[pos] == '`') {  // backtick-quoted name
      ++pos;
      while (pos < s.size() && s[pos] != '`') ++pos;
      if (pos >= s.size()) fail("unterminated quoted name");
      std::string out = s.substr(start + 1, pos - start - 1);
      ++pos;
      return out;
    }
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' ||
            s[pos] == '.'))
      ++pos;
    if (pos == start) fail("expected a name");
    return s.substr(start, pos - start);
  }
  Index integer() {
    skip_ws();
    const size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos == start) fail("expected an integer");
    return static_cast<Index>(std::stol(s.substr(start, pos - start)));
  }
};

inline std::string term_key(const Term& t);

}  // namespace formula_detail

inline Formula parse_formula(const std::string& text) {
  if (text.empty()) throw InputError("formula: empty input");
  formula_detail::Lexer lex{text};
  Formula f;

  std::string first = lex.name();
  if (first == "cbind") {
    lex.expect('(', "cbind successes");
    f.response = lex.name();
    lex.expect(',', "cbind failures");
    f.response_failures = lex.name();
    lex.expect(')', "cbind close");
  } else {
    f.response = first;
  }
  lex.expect('~', "response separator");

  bool first_term = true;
  while (true) {
    if (lex.eof()) {
      if (first_term) lex.fail("formula has no terms");
      break;
    }
    if (!first_term) lex.expect('+', "term separator");
    lex.skip_ws();
    if (first_term && lex.peek() == '0') {
      lex.accept('0');
      f.intercept = false;
      first_term = false;
      continue;
    }
    if (lex.peek() == '.') {
      lex.accept('.');
      f.terms.push_back(DotTerm{});
      first_term = false;
      continue;
    }
    std::string nm = lex.name();
    if (lex.peek() == '(') {
      lex.accept('(');
      if (nm == "log" || nm == "sqrt" || nm == "square") {
        TransformKind k = nm == "log" ? TransformKind::log
                          : nm == "sqrt" ? TransformKind::sqrt
                                         : TransformKind::square;
        std::string col = lex.name();
        lex.expect(')', "transform close");
        f.terms.push_back(TransformTerm{k, col});
      } else if (nm == "poly") {
        std::string col = lex.name();
        lex.expect(',', "poly degree");
        Index deg = lex.integer();
        lex.expect(')', "poly close");
        if (deg < 1) lex.fail("poly degree must be >= 1");
        f.terms.push_back(PolyTerm{col, deg});
      } else {
        lex.fail("unknown function '" + nm + "'");
      }
    } else if (lex.peek() == ':') {
      lex.accept(':');
      std::string other = lex.name();
      f.terms.push_back(InteractionTerm{nm, other});
    } else {
      f.terms.push_back(RawTerm{nm});
    }
    first_term = false;
  }

  // duplicate terms are rejected
  for (size_t i = 0; i < f.terms.size(); ++i)
    for (size_t j = i + 1; j < f.terms.size(); ++j)
      if (formula_detail::term_key(f.terms[i]) ==
          formula_detail::term_key(f.terms[j]))
        throw InputError("formula: duplicate term '" +
                         formula_detail::term_key(f.terms[i]) + "'");
  return f;
}

namespace formula_detail {

inline std::string term_key(const Term& t) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, RawTerm>) return x.column;
        else if constexpr (std::is_same_v<T, TransformTerm>)
          return std::string(transform_name(x.kind)) + "(" + x.column + ")";
        else if constexpr (std::is_same_v<T, PolyTerm>)
          return "poly(" + x.column + ", " + std::to_string(x.degree) + ")";
        else if constexpr (std::is_same_v<T, InteractionTerm>)
          return x.a + ":" + x.b;
        else
          return ".";
      },
      t);
}

}  // namespace formula_detail

// Canonical text; parse_formula(format_formula(f)) round-trips.
inline std::string format_formula(const Formula& f) {
  std::string out;
  if (f.is_count_response())
    out = "cbind(" + f.response + ", " + f.response_failures + ")";
  else
    out = f.response;
  out += " ~ ";
  bool first = true;
  if (!f.intercept) {
    out += "0";
    first = false;
  }
  for (const auto& t : f.terms) {
    if (!first) out += " + ";
    out += formula_detail::term_key(t);
    first = false;
  }
  return out;
}

}  // namespace coneglm
