#include "kgx/rules.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>

#include "kgx/error.hpp"

namespace kgx {

std::optional<EntityId> Substitution::lookup(std::uint32_t var) const {
  if (auto it = map_.find(var); it != map_.end()) return it->second;
  return std::nullopt;
}

Term Substitution::apply(const Term& t) const {
  if (t.is_variable())
    if (auto e = lookup(t.value())) return Term::constant(*e);
  return t;
}

Atom Substitution::apply(const Atom& a) const {
  return {a.predicate, apply(a.subject), apply(a.object)};
}

HornRule Substitution::apply(const HornRule& r) const {
  HornRule out{{}, apply(r.head), r.stats};
  out.body.reserve(r.body.size());
  for (const auto& a : r.body) out.body.push_back(apply(a));
  return out;
}

std::map<std::uint32_t, int> variable_occurrences(const HornRule& rule) {
  std::map<std::uint32_t, int> occ;
  auto count = [&](const Atom& a) {
    if (a.subject.is_variable()) ++occ[a.subject.value()];
    if (a.object.is_variable()) ++occ[a.object.value()];
  };
  count(rule.head);
  for (const auto& a : rule.body) count(a);
  return occ;
}

bool is_safe(const HornRule& rule) {
  auto in_body = [&](const Term& t) {
    return std::any_of(rule.body.begin(), rule.body.end(),
                       [&](const Atom& a) { return a.subject == t || a.object == t; });
  };
  for (const auto& t : {rule.head.subject, rule.head.object})
    if (t.is_variable() && !in_body(t)) return false;
  return true;
}

bool is_closed(const HornRule& rule) {
  for (const auto& [var, n] : variable_occurrences(rule))
    if (n < 2) return false;
  return true;
}

bool is_connected(const HornRule& rule) {
  std::vector<const Atom*> atoms{&rule.head};
  for (const auto& a : rule.body) atoms.push_back(&a);
  auto shares = [](const Atom& a, const Atom& b) {
    for (const auto& t : {a.subject, a.object})
      if (t.is_variable() && (t == b.subject || t == b.object)) return true;
    return false;
  };
  std::vector<bool> seen(atoms.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < atoms.size(); ++j)
      if (!seen[j] && shares(*atoms[i], *atoms[j])) {
        seen[j] = true;
        stack.push_back(j);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

HornRule canonicalize(const HornRule& rule) {
  // Head variables get fixed ids by position; the rest are tried in every
  // order and the smallest sorted body wins.
  std::map<std::uint32_t, std::uint32_t> fixed;
  if (rule.head.subject.is_variable()) fixed[rule.head.subject.value()] = kVarX;
  if (rule.head.object.is_variable() && !fixed.count(rule.head.object.value()))
    fixed[rule.head.object.value()] = kVarY;
  std::vector<std::uint32_t> others;
  for (const auto& [var, n] : variable_occurrences(rule))
    if (!fixed.count(var)) others.push_back(var);

  auto rename = [&](const std::vector<std::uint32_t>& order) {
    std::map<std::uint32_t, std::uint32_t> m = fixed;
    for (std::size_t i = 0; i < order.size(); ++i) m[order[i]] = kVarZ + static_cast<std::uint32_t>(i);
    auto term = [&](const Term& t) { return t.is_variable() ? Term::variable(m.at(t.value())) : t; };
    HornRule out{{}, {rule.head.predicate, term(rule.head.subject), term(rule.head.object)},
                 rule.stats};
    for (const auto& a : rule.body) out.body.push_back({a.predicate, term(a.subject), term(a.object)});
    std::sort(out.body.begin(), out.body.end());
    return out;
  };

  std::sort(others.begin(), others.end());
  HornRule best = rename(others);
  while (std::next_permutation(others.begin(), others.end())) {
    auto candidate = rename(others);
    if (candidate.body < best.body) best = std::move(candidate);
  }
  return best;
}

std::vector<std::uint32_t> canonical_key(const HornRule& rule) {
  const auto c = canonicalize(rule);
  std::vector<std::uint32_t> key;
  auto push = [&](const Atom& a) {
    key.push_back(a.predicate);
    for (const auto& t : {a.subject, a.object}) {
      key.push_back(t.is_constant() ? 1u : 0u);
      key.push_back(t.value());
    }
  };
  push(c.head);
  for (const auto& a : c.body) push(a);
  return key;
}

namespace {

bool needs_quotes(std::string_view s) {
  if (s.empty() || s.front() == '?') return true;
  return s.find_first_of("(),&\" \t\n\\") != std::string_view::npos;
}

std::string quote(std::string_view s) {
  if (!needs_quotes(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string variable_name(std::uint32_t v) {
  static constexpr const char* kNames[] = {"x", "y", "z", "w"};
  return v < 4 ? std::string("?") + kNames[v] : "?v" + std::to_string(v);
}

std::string format_term(const Term& t, const RuleSymbols& symbols) {
  if (t.is_variable()) return variable_name(t.value());
  if (!symbols.entities) return "#" + std::to_string(t.value());
  return quote(symbols.entities->label(t.value()));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class RuleParser {
 public:
  RuleParser(std::string_view text, const RuleSymbols& symbols) : text_(text), symbols_(symbols) {}

  HornRule parse() {
    HornRule rule;
    std::vector<Atom> atoms{parse_atom()};
    while (true) {
      skip_ws();
      if (consume("&")) {
        atoms.push_back(parse_atom());
      } else if (consume("=>")) {
        break;
      } else {
        fail("expected '&' or '=>'");
      }
    }
    rule.body = std::move(atoms);
    rule.head = parse_atom();
    skip_ws();
    if (consume("precision=")) {
      rule.stats.precision = parse_number();
      rule.stats.evaluable = true;
      skip_ws();
      if (!consume("correct=")) fail("expected correct=");
      rule.stats.correct = static_cast<std::size_t>(parse_number());
      rule.stats.labeled =
          rule.stats.precision > 0
              ? static_cast<std::size_t>(
                    std::llround(static_cast<double>(rule.stats.correct) / rule.stats.precision))
              : 0;
      skip_ws();
    }
    if (pos_ != text_.size()) fail("trailing characters");
    return rule;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("rule '" + std::string(text_) + "' at offset " + std::to_string(pos_) + ": " + msg);
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool consume(std::string_view tok) {
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  std::string symbol() {
    skip_ws();
    std::string out;
    if (consume("\"")) {
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        out += text_[pos_++];
      }
      if (!consume("\"")) fail("unterminated quote");
      return out;
    }
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::string_view("(),&\"").find(c) != std::string_view::npos ||
          std::isspace(static_cast<unsigned char>(c)))
        break;
      out += c;
      ++pos_;
    }
    if (out.empty()) fail("expected a symbol");
    return out;
  }
  Term term() {
    skip_ws();
    const bool quoted = pos_ < text_.size() && text_[pos_] == '"';
    auto s = symbol();
    if (!quoted && s.front() == '?') {
      const auto name = s.substr(1);
      if (name == "x") return Term::variable(kVarX);
      if (name == "y") return Term::variable(kVarY);
      if (name == "z") return Term::variable(kVarZ);
      if (name == "w") return Term::variable(3);
      if (name.size() > 1 && name[0] == 'v') return Term::variable(std::stoul(name.substr(1)));
      fail("unknown variable " + s);
    }
    if (!symbols_.entities) fail("no entity dictionary to resolve constant " + s);
    const auto id = symbols_.entities->find(s);
    if (!id) fail("unknown entity '" + s + "'");
    return Term::constant(*id);
  }
  Atom parse_atom() {
    Atom a;
    const auto name = symbol();
    const auto id = symbols_.predicate_id(name);
    if (!id) fail("unknown predicate '" + name + "'");
    a.predicate = *id;
    skip_ws();
    if (!consume("(")) fail("expected '('");
    a.subject = term();
    skip_ws();
    if (!consume(",")) fail("expected ','");
    a.object = term();
    skip_ws();
    if (!consume(")")) fail("expected ')'");
    return a;
  }
  double parse_number() {
    const auto start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    double v = 0;
    const auto tok = text_.substr(start, pos_ - start);
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("bad number");
    return v;
  }

  std::string_view text_;
  const RuleSymbols& symbols_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_atom(const Atom& atom, const RuleSymbols& symbols) {
  return quote(symbols.predicate_label(atom.predicate)) + "(" + format_term(atom.subject, symbols) +
         "," + format_term(atom.object, symbols) + ")";
}

std::string format_rule(const HornRule& rule, const RuleSymbols& symbols) {
  std::string out;
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i) out += " & ";
    out += format_atom(rule.body[i], symbols);
  }
  out += " => ";
  out += format_atom(rule.head, symbols);
  return out;
}

std::string format_rule_with_stats(const HornRule& rule, const RuleSymbols& symbols) {
  return format_rule(rule, symbols) + "  precision=" + format_double(rule.stats.precision) +
         " correct=" + std::to_string(rule.stats.correct);
}

HornRule parse_rule(std::string_view text, const RuleSymbols& symbols) {
  return RuleParser(text, symbols).parse();
}

}  // namespace kgx
