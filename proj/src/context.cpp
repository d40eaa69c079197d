#include "kgx/context.hpp"

#include <algorithm>
#include <stdexcept>

namespace kgx {

std::string to_string(ScopeKind kind) {
  switch (kind) {
    case ScopeKind::kGlobal: return "global";
    case ScopeKind::kLocal: return "local";
    case ScopeKind::kInstance: return "instance";
  }
  return "global";
}

ScopeKind parse_scope_kind(std::string_view name) {
  if (name == "global") return ScopeKind::kGlobal;
  if (name == "local") return ScopeKind::kLocal;
  if (name == "instance" || name == "per-instance") return ScopeKind::kInstance;
  throw std::invalid_argument("unknown scope '" + std::string(name) + "'");
}

std::string ScopeDescriptor::tag(const Vocabulary& vocab) const {
  switch (kind) {
    case ScopeKind::kGlobal: return "global";
    case ScopeKind::kLocal: return "local:" + std::to_string(cluster) + "/" + std::to_string(k);
    case ScopeKind::kInstance:
      if (!target) return "instance";
      return "instance:" + vocab.entities.label(target->s) + "|" + vocab.predicates.label(target->p) +
             "|" + vocab.entities.label(target->o);
  }
  return "global";
}

std::vector<Triple> Context::true_facts() const {
  std::vector<Triple> out;
  for (const auto& f : facts)
    if (f.truth) out.push_back(f.fact);
  return out;
}

std::vector<Triple> Context::sorted_facts() const {
  std::vector<Triple> out;
  out.reserve(facts.size());
  for (const auto& f : facts) out.push_back(f.fact);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t Context::positives() const {
  return static_cast<std::size_t>(
      std::count_if(facts.begin(), facts.end(), [](const ContextFact& f) { return f.truth; }));
}

}  // namespace kgx
