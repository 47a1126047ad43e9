#include "detmask/kb.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "detmask/error.hpp"
#include "detmask/text.hpp"

namespace detmask {

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return is_space_byte(static_cast<unsigned char>(c));
  });
}

// Calls fn(line_number, line) for every non-comment, non-blank line.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    fn(number, line);
  }
}

std::vector<std::string> parse_aliases(const std::string& field,
                                       const char* source, std::size_t line) {
  std::vector<std::string> aliases;
  for (const auto& piece : split(field, '|')) {
    const auto alias = trim(piece);
    if (alias.empty()) continue;
    if (std::find(aliases.begin(), aliases.end(), alias) == aliases.end())
      aliases.emplace_back(alias);
  }
  if (aliases.empty()) throw MalformedLine(source, line, "empty alias list");
  return aliases;
}

}  // namespace

KnowledgeBase KnowledgeBase::from_parts(std::vector<Triplet> triplets,
                                        AliasTable entity_aliases,
                                        AliasTable predicate_aliases) {
  KnowledgeBase kb;
  std::sort(triplets.begin(), triplets.end());
  triplets.erase(std::unique(triplets.begin(), triplets.end()), triplets.end());
  for (const auto& t : triplets) {
    if (!entity_aliases.contains(t.subject)) throw DanglingReference(t.subject);
    if (!predicate_aliases.contains(t.predicate))
      throw DanglingReference(t.predicate);
    if (!entity_aliases.contains(t.object)) throw DanglingReference(t.object);
  }
  kb.triplets_ = std::move(triplets);
  kb.entity_aliases_ = std::move(entity_aliases);
  kb.predicate_aliases_ = std::move(predicate_aliases);
  kb.build_indexes();
  return kb;
}

void KnowledgeBase::build_indexes() {
  // Alias tables are std::map, so dense indexes follow id order.
  for (const auto& [id, _] : entity_aliases_) {
    entity_lookup_.emplace(id, static_cast<EntityIndex>(entity_names_.size()));
    entity_names_.push_back(id);
  }
  for (const auto& [id, _] : predicate_aliases_) {
    predicate_lookup_.emplace(id,
                              static_cast<PredicateIndex>(predicate_names_.size()));
    predicate_names_.push_back(id);
  }
  for (const auto& t : triplets_) {
    const auto s = entity_lookup_.at(t.subject);
    const auto p = predicate_lookup_.at(t.predicate);
    const auto o = entity_lookup_.at(t.object);
    sp_index_[key(s, p)].push_back(o);
    so_index_[key(s, o)].push_back(p);
  }
  // Triplets are sorted by (s, p, o) id, so object lists are already sorted;
  // predicate lists need sorting.
  for (auto& [_, preds] : so_index_) std::sort(preds.begin(), preds.end());
}

KnowledgeBase KnowledgeBase::load(std::istream& triplets,
                                  std::istream& entities,
                                  std::istream& predicates) {
  AliasTable entity_aliases;
  for_each_record(entities, [&](std::size_t line, const std::string& text) {
    const auto fields = split(text, '\t');
    if (fields.size() < 2 || fields.size() > 3)
      throw MalformedLine("entities", line, "expected 2 or 3 tab-separated fields");
    if (!valid_id(fields[0]))
      throw MalformedLine("entities", line, "invalid id");
    const auto canonical = trim(fields[1]);
    if (canonical.empty())
      throw MalformedLine("entities", line, "empty canonical name");
    std::vector<std::string> aliases{std::string(canonical)};
    if (fields.size() == 3 && !trim(fields[2]).empty()) {
      for (auto& a : parse_aliases(fields[2], "entities", line)) {
        if (std::find(aliases.begin(), aliases.end(), a) == aliases.end())
          aliases.push_back(std::move(a));
      }
    }
    if (!entity_aliases.emplace(fields[0], std::move(aliases)).second)
      throw MalformedLine("entities", line, "duplicate id " + fields[0]);
  });

  AliasTable predicate_aliases;
  for_each_record(predicates, [&](std::size_t line, const std::string& text) {
    const auto fields = split(text, '\t');
    if (fields.size() != 2)
      throw MalformedLine("predicates", line, "expected 2 tab-separated fields");
    if (!valid_id(fields[0]))
      throw MalformedLine("predicates", line, "invalid id");
    auto aliases = parse_aliases(fields[1], "predicates", line);
    if (!predicate_aliases.emplace(fields[0], std::move(aliases)).second)
      throw MalformedLine("predicates", line, "duplicate id " + fields[0]);
  });

  std::vector<Triplet> rows;
  for_each_record(triplets, [&](std::size_t line, const std::string& text) {
    auto fields = split(text, '\t');
    if (fields.size() != 3)
      throw MalformedLine("triplets", line, "expected 3 tab-separated ids");
    for (const auto& f : fields) {
      if (!valid_id(f)) throw MalformedLine("triplets", line, "invalid id");
    }
    rows.push_back({std::move(fields[0]), std::move(fields[1]),
                    std::move(fields[2])});
  });

  return from_parts(std::move(rows), std::move(entity_aliases),
                    std::move(predicate_aliases));
}

KnowledgeBase KnowledgeBase::load_dir(const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) throw Error("cannot open " + (dir / name).string());
    return in;
  };
  auto t = open("triplets.tsv");
  auto e = open("entities.tsv");
  auto p = open("predicates.tsv");
  return load(t, e, p);
}

void KnowledgeBase::write_dir(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream t(dir / "triplets.tsv");
  for (const auto& tr : triplets_)
    t << tr.subject << '\t' << tr.predicate << '\t' << tr.object << '\n';
  std::ofstream e(dir / "entities.tsv");
  for (const auto& [id, aliases] : entity_aliases_) {
    e << id << '\t' << aliases.front() << '\t';
    for (std::size_t i = 0; i < aliases.size(); ++i)
      e << (i ? "|" : "") << aliases[i];
    e << '\n';
  }
  std::ofstream p(dir / "predicates.tsv");
  for (const auto& [id, aliases] : predicate_aliases_) {
    p << id << '\t';
    for (std::size_t i = 0; i < aliases.size(); ++i)
      p << (i ? "|" : "") << aliases[i];
    p << '\n';
  }
  if (!t || !e || !p) throw Error("failed writing knowledge base to " + dir.string());
}

std::optional<EntityIndex> KnowledgeBase::entity_index(const EntityId& id) const {
  const auto it = entity_lookup_.find(id);
  if (it == entity_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<PredicateIndex> KnowledgeBase::predicate_index(
    const PredicateId& id) const {
  const auto it = predicate_lookup_.find(id);
  if (it == predicate_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t KnowledgeBase::object_count(EntityIndex s, PredicateIndex p) const {
  const auto it = sp_index_.find(key(s, p));
  return it == sp_index_.end() ? 0 : it->second.size();
}

std::span<const PredicateIndex> KnowledgeBase::predicates_between(
    EntityIndex s, EntityIndex o) const {
  const auto it = so_index_.find(key(s, o));
  if (it == so_index_.end()) return {};
  return it->second;
}

std::vector<EntityId> KnowledgeBase::objects_for(const EntityId& s,
                                                 const PredicateId& p) const {
  const auto si = entity_index(s);
  const auto pi = predicate_index(p);
  if (!si || !pi) return {};
  const auto it = sp_index_.find(key(*si, *pi));
  if (it == sp_index_.end()) return {};
  std::vector<EntityId> out;
  out.reserve(it->second.size());
  for (auto o : it->second) out.push_back(entity_names_[o]);
  return out;
}

bool KnowledgeBase::is_deterministic(const EntityId& s,
                                     const PredicateId& p) const {
  const auto si = entity_index(s);
  const auto pi = predicate_index(p);
  return si && pi && object_count(*si, *pi) == 1;
}

bool KnowledgeBase::contains(const Triplet& t) const {
  return std::binary_search(triplets_.begin(), triplets_.end(), t);
}

}  // namespace detmask
